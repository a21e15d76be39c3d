//! C interface. Workspaces and automata are opaque handles owned by the
//! caller and released with their `_free` function. Every entry point
//! returns an [`UpdStatus`]; on failure the message is available from
//! [`upd_last_error`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use updtype::closure::{post_star_xacu, post_star_xacu_plus, pre_star};
use updtype::policy::{typecheck, Outcome};
use updtype::rules::RuleClass;
use updtype::term::parse_term;
use updtype::workspace::{write_cfha, write_ha, Automaton, Workspace};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    NotFound = 4,
    Unsupported = 5,
    Closure = 6,
    Panic = 7,
}

/// A parsed set of workspace files.
pub struct UpdWorkspace(Workspace);

/// A regular or context-free hedge automaton.
pub struct UpdAutomaton(Automaton);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(UpdStatus, String);

fn fail(status: UpdStatus, message: impl ToString) -> Failure {
    Failure(status, message.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> UpdStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| Err(fail(UpdStatus::Panic, "internal panic")));
    let (status, message) = match outcome {
        Ok(()) => (UpdStatus::Ok, String::new()),
        Err(Failure(status, message)) => (status, message),
    };
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
    status
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(UpdStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(UpdStatus::InvalidUtf8, e))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(UpdStatus::NullArgument, "null handle"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(UpdStatus::NullArgument, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn upd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses workspace text into a new handle.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upd_workspace_parse(source: *const c_char, out: *mut *mut UpdWorkspace) -> UpdStatus {
    guard(|| {
        let ws = Workspace::parse_str(text(source)?).map_err(|e| fail(UpdStatus::Parse, e))?;
        put(out, Box::into_raw(Box::new(UpdWorkspace(ws))))
    })
}

/// # Safety
/// `ws` must come from [`upd_workspace_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn upd_workspace_free(ws: *mut UpdWorkspace) {
    if !ws.is_null() {
        drop(Box::from_raw(ws));
    }
}

/// Copies a named automaton out of a workspace.
///
/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn upd_workspace_automaton(ws: *const UpdWorkspace, name: *const c_char, out: *mut *mut UpdAutomaton) -> UpdStatus {
    guard(|| {
        let a = handle(ws)?.0.automaton(text(name)?).map_err(|e| fail(UpdStatus::NotFound, e))?;
        put(out, Box::into_raw(Box::new(UpdAutomaton(a.clone()))))
    })
}

/// # Safety
/// `a` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn upd_automaton_free(a: *mut UpdAutomaton) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Whether the automaton has no collapsing or grammar rules.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upd_automaton_is_regular(a: *const UpdAutomaton, out: *mut bool) -> UpdStatus {
    guard(|| put(out, matches!(handle(a)?.0, Automaton::Regular(_))))
}

/// Runs the automaton on a term such as `"g(a b)"`.
///
/// # Safety
/// Pointers must be valid; `term` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn upd_automaton_accepts(a: *const UpdAutomaton, term: *const c_char, out: *mut bool) -> UpdStatus {
    guard(|| {
        let t = parse_term(text(term)?).map_err(|e| fail(UpdStatus::Parse, e))?;
        let accepted = match &handle(a)?.0 {
            Automaton::Regular(ha) => ha.accepts(&t),
            Automaton::ContextFree(cf) => cf.accepts(&t),
        };
        put(out, accepted)
    })
}

/// Stores a member term in `*out`, or null when the language is empty.
/// A non-null result is released with [`upd_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn upd_automaton_member(a: *const UpdAutomaton, out: *mut *mut c_char) -> UpdStatus {
    guard(|| {
        let member = match &handle(a)?.0 {
            Automaton::Regular(ha) => ha.nonempty(),
            Automaton::ContextFree(cf) => cf.nonempty(),
        };
        put(out, member.map_or(ptr::null_mut(), |t| owned_string(t.to_string())))
    })
}

/// Serializes the automaton in workspace syntax under `name`.
///
/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn upd_automaton_write(a: *const UpdAutomaton, name: *const c_char, out: *mut *mut c_char) -> UpdStatus {
    guard(|| {
        let name = text(name)?;
        let written = match &handle(a)?.0 {
            Automaton::Regular(ha) => write_ha(name, ha),
            Automaton::ContextFree(cf) => write_cfha(name, cf),
        };
        put(out, owned_string(written))
    })
}

/// Forward closure of `input` under the named rule set. Regular input with
/// XACU rules gives a regular automaton, anything else a context-free one.
///
/// # Safety
/// Pointers must be valid; `rules` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn upd_post_star(ws: *const UpdWorkspace, rules: *const c_char, input: *const UpdAutomaton, out: *mut *mut UpdAutomaton) -> UpdStatus {
    guard(|| {
        let r = handle(ws)?.0.rule_set(text(rules)?).map_err(|e| fail(UpdStatus::NotFound, e))?;
        let closed = match &handle(input)?.0 {
            Automaton::Regular(ha) if r.class() == RuleClass::Xacu => Automaton::Regular(post_star_xacu(r, ha).map_err(|e| fail(UpdStatus::Closure, e))?.automaton),
            a => Automaton::ContextFree(post_star_xacu_plus(r, &a.as_cf()).map_err(|e| fail(UpdStatus::Closure, e))?.automaton),
        };
        put(out, Box::into_raw(Box::new(UpdAutomaton(closed))))
    })
}

/// Backward closure of a regular `output` under the named rule set.
///
/// # Safety
/// Pointers must be valid; `rules` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn upd_pre_star(ws: *const UpdWorkspace, rules: *const c_char, output: *const UpdAutomaton, out: *mut *mut UpdAutomaton) -> UpdStatus {
    guard(|| {
        let r = handle(ws)?.0.rule_set(text(rules)?).map_err(|e| fail(UpdStatus::NotFound, e))?;
        let Automaton::Regular(ha) = &handle(output)?.0 else {
            return Err(fail(UpdStatus::Unsupported, "pre* needs a regular automaton"));
        };
        let closed = pre_star(r, ha).map_err(|e| fail(UpdStatus::Closure, e))?.automaton;
        put(out, Box::into_raw(Box::new(UpdAutomaton(Automaton::Regular(closed)))))
    })
}

/// Checks that every update of a `tau_in` document stays in `tau_out`.
/// On failure `*witness` receives a counterexample (release it with
/// [`upd_string_free`]); otherwise it is set to null.
///
/// # Safety
/// Pointers must be valid; `rules` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn upd_typecheck(
    ws: *const UpdWorkspace,
    rules: *const c_char,
    tau_in: *const UpdAutomaton,
    tau_out: *const UpdAutomaton,
    holds: *mut bool,
    witness: *mut *mut c_char,
) -> UpdStatus {
    guard(|| {
        let r = handle(ws)?.0.rule_set(text(rules)?).map_err(|e| fail(UpdStatus::NotFound, e))?;
        let (Automaton::Regular(tin), Automaton::Regular(tout)) = (&handle(tau_in)?.0, &handle(tau_out)?.0) else {
            return Err(fail(UpdStatus::Unsupported, "typechecking needs regular types"));
        };
        let v = typecheck(r, tin, tout).map_err(|e| fail(UpdStatus::Closure, e))?;
        put(holds, v.outcome == Outcome::Holds)?;
        put(witness, v.witness.map_or(ptr::null_mut(), |t| owned_string(t.to_string())))
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn upd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
