use std::collections::BTreeMap;
use std::path::PathBuf;

use updtype::cli::run;
use updtype::term::parse_term;
use updtype::workspace::{Automaton, Workspace};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn updtype(file: &str, args: &[&str]) -> (String, i32) {
    let mut argv = vec!["updtype".to_string(), "-f".into(), fixture(file)];
    argv.extend(args.iter().map(|a| a.to_string()));
    run(argv)
}

/// The `key=value` lines after the `---` separator.
fn keys(out: &str) -> BTreeMap<String, String> {
    let (_, tail) = out.split_once("\n---\n").unwrap_or_else(|| panic!("no summary in\n{out}"));
    tail.lines().filter_map(|l| l.split_once('=')).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn membership_exit_codes() {
    assert_eq!(updtype("example1.upd", &["member", "example1", "g(a a b b)"]).1, 0);
    assert_eq!(updtype("example1.upd", &["member", "example1", "g(a b b)"]).1, 1);
    assert_eq!(updtype("example1.upd", &["member", "example1", "()"]).1, 2);
    assert_eq!(updtype("example1.upd", &["member", "missing", "g"]).1, 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(["updtype", "member", "a", "b"]).1, 2);
    assert_eq!(run(["updtype", "no-such-command"]).1, 2);
    let (out, code) = updtype("example1.upd", &["complement", "example1"]);
    assert_eq!(code, 2);
    assert_eq!(keys(&out)["status"], "error");
}

#[test]
fn emptiness_prints_a_member() {
    let (out, code) = updtype("example1.upd", &["empty", "example1"]);
    assert_eq!(code, 1);
    assert_eq!(keys(&out)["witness"], "g(a b)");
}

#[test]
fn hospital_verdicts() {
    let (out, code) = updtype("hospital.upd", &["typecheck", "admin_bad", "hospital_dtd", "hospital_dtd"]);
    assert_eq!(code, 1, "{out}");
    assert!(keys(&out).contains_key("witness"));
    assert_eq!(updtype("hospital.upd", &["typecheck", "admin_many", "hospital_dtd_many", "hospital_dtd_many"]).1, 0);
    assert_eq!(updtype("hospital.upd", &["inconsistent", "allowed", "forbidden", "one_patient"]).1, 1);
    assert_eq!(updtype("hospital.upd", &["inconsistent", "allowed_delete_only", "forbidden", "one_patient"]).1, 0);
    let (out, code) = updtype("hospital.upd", &["reach", "admin", "one_patient", "empty_hospital"]);
    assert_eq!(code, 0);
    assert_eq!(keys(&out)["replay"], "true");
}

#[test]
fn reports_are_deterministic() {
    for args in [&["post", "grow", "just_c"][..], &["pre", "unwrap", "flat_c"], &["rewrite", "unwrap", "c(a c(b) b)"]] {
        assert_eq!(updtype("anbn.upd", args), updtype("anbn.upd", args));
    }
}

#[test]
fn written_closures_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("post.upd");
    let (_, code) = updtype("anbn.upd", &["post", "grow", "just_c", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let ws = Workspace::parse_str(&text).unwrap();
    let Some((_, Automaton::ContextFree(a))) = ws.automata.iter().next() else { panic!("expected a context-free automaton") };
    for (doc, member) in [("c", true), ("c(a b)", true), ("c(a a b b)", true), ("c(a b b)", false), ("c'(a)", true)] {
        assert_eq!(a.accepts(&parse_term(doc).unwrap()), member, "{doc}");
    }

    let out = dir.path().join("complement.upd");
    let (_, code) = updtype("anbn.upd", &["complement", "flat_c", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let ws = Workspace::parse_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let Some((_, Automaton::Regular(not_flat))) = ws.automata.iter().next() else { panic!("expected a regular automaton") };
    for (doc, member) in [("c(a b)", false), ("c", false), ("c(c)", true), ("a", true)] {
        assert_eq!(not_flat.accepts(&parse_term(doc).unwrap()), member, "{doc}");
    }
}

#[test]
fn intersection_of_regular_types() {
    let (out, code) = updtype("anbn.upd", &["intersect", "flat_c", "nested"]);
    assert_eq!(code, 0, "{out}");
    assert!(keys(&out).contains_key("states"));
}
