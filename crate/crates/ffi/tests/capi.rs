use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use updtype_ffi::*;

const HOSPITAL: &str = include_str!("../../core/fixtures/hospital.upd");
const ANBN: &str = include_str!("../../core/fixtures/anbn.upd");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(upd_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn workspace(text: &str) -> *mut UpdWorkspace {
    let mut ws = ptr::null_mut();
    assert_eq!(upd_workspace_parse(c(text).as_ptr(), &mut ws), UpdStatus::Ok);
    ws
}

unsafe fn automaton(ws: *const UpdWorkspace, name: &str) -> *mut UpdAutomaton {
    let mut a = ptr::null_mut();
    assert_eq!(upd_workspace_automaton(ws, c(name).as_ptr(), &mut a), UpdStatus::Ok, "{}", last_error());
    a
}

unsafe fn accepts(a: *const UpdAutomaton, term: &str) -> bool {
    let mut yes = false;
    assert_eq!(upd_automaton_accepts(a, c(term).as_ptr(), &mut yes), UpdStatus::Ok);
    yes
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let owned = CStr::from_ptr(s).to_string_lossy().into_owned();
    upd_string_free(s);
    owned
}

#[test]
fn forward_closure_through_handles() {
    unsafe {
        let ws = workspace(ANBN);
        let start = automaton(ws, "just_c");
        let mut post = ptr::null_mut();
        assert_eq!(upd_post_star(ws, c("grow").as_ptr(), start, &mut post), UpdStatus::Ok);
        let mut regular = true;
        assert_eq!(upd_automaton_is_regular(post, &mut regular), UpdStatus::Ok);
        assert!(!regular);
        assert!(accepts(post, "c(a a b b)"));
        assert!(!accepts(post, "c(a b b)"));

        let mut text = ptr::null_mut();
        assert_eq!(upd_automaton_write(post, c("grown").as_ptr(), &mut text), UpdStatus::Ok);
        let reloaded = workspace(&take(text));
        let again = automaton(reloaded, "grown");
        assert!(accepts(again, "c(a a a b b b)"));

        for a in [start, post, again] {
            upd_automaton_free(a);
        }
        upd_workspace_free(reloaded);
        upd_workspace_free(ws);
    }
}

#[test]
fn backward_closure_and_members() {
    unsafe {
        let ws = workspace(ANBN);
        let flat = automaton(ws, "flat_c");
        let mut pre = ptr::null_mut();
        assert_eq!(upd_pre_star(ws, c("unwrap").as_ptr(), flat, &mut pre), UpdStatus::Ok, "{}", last_error());
        assert!(accepts(pre, "c(a c(b) a)"));
        let mut member = ptr::null_mut();
        assert_eq!(upd_automaton_member(pre, &mut member), UpdStatus::Ok);
        let member = take(member);
        assert!(accepts(pre, &member), "{member}");
        upd_automaton_free(pre);
        upd_automaton_free(flat);
        upd_workspace_free(ws);
    }
}

#[test]
fn typecheck_reports_a_witness() {
    unsafe {
        let ws = workspace(HOSPITAL);
        let dtd = automaton(ws, "hospital_dtd");
        let (mut holds, mut witness) = (true, ptr::null_mut());
        assert_eq!(upd_typecheck(ws, c("admin_bad").as_ptr(), dtd, dtd, &mut holds, &mut witness), UpdStatus::Ok);
        assert!(!holds);
        let w = take(witness);
        assert!(!accepts(dtd, &w), "{w}");

        let many = automaton(ws, "hospital_dtd_many");
        assert_eq!(upd_typecheck(ws, c("admin_many").as_ptr(), many, many, &mut holds, &mut witness), UpdStatus::Ok);
        assert!(holds);
        assert!(witness.is_null());
        upd_automaton_free(many);
        upd_automaton_free(dtd);
        upd_workspace_free(ws);
    }
}

#[test]
fn errors_have_codes_and_messages() {
    unsafe {
        let mut ws = ptr::null_mut();
        assert_eq!(upd_workspace_parse(c("automaton {").as_ptr(), &mut ws), UpdStatus::Parse);
        assert!(!last_error().is_empty());
        assert_eq!(upd_workspace_parse(ptr::null(), &mut ws), UpdStatus::NullArgument);

        let ws = workspace(ANBN);
        let mut a = ptr::null_mut();
        assert_eq!(upd_workspace_automaton(ws, c("nope").as_ptr(), &mut a), UpdStatus::NotFound);
        let flat = automaton(ws, "flat_c");
        let mut yes = false;
        assert_eq!(upd_automaton_accepts(flat, c("c(").as_ptr(), &mut yes), UpdStatus::Parse);
        assert_eq!(upd_automaton_accepts(flat, c("c").as_ptr(), ptr::null_mut()), UpdStatus::NullArgument);
        assert_eq!(upd_post_star(ws, c("missing").as_ptr(), flat, &mut a), UpdStatus::NotFound);
        assert!(accepts(flat, "c(a)"));
        assert!(last_error().is_empty());
        upd_automaton_free(flat);
        upd_workspace_free(ws);
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("updtype.h");
    let src = std::env::temp_dir().join(format!("updtype_header_{}.c", std::process::id()));
    std::fs::write(&src, format!("#include \"{}\"\nint main(void) {{ UpdWorkspace *ws = 0; return upd_workspace_parse(\"\", &ws) == UPD_STATUS_OK ? 0 : 1; }}\n", header.display())).unwrap();
    let status = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status().expect("running cc");
    let _ = std::fs::remove_file(&src);
    assert!(status.success());
}
