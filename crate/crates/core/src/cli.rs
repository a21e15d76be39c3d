//! Command-line frontend. Every command prints a report, then a `---` line
//! and `key=value` lines for scripts. Exit status: 0 when the property
//! holds, 1 when it fails (with a witness when there is one), 2 on errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::cfha::CfHa;
use crate::closure::{post_star_xacu, post_star_xacu_plus, pre_star};
use crate::ha::Ha;
use crate::policy::{self, Outcome, Policy, Verdict, WitnessCheck};
use crate::rules::{Oracle, RuleClass};
use crate::term::{Hedge, Symbol, Term};
use crate::workspace::{write_cfha, write_ha, Automaton, Workspace};

#[derive(Parser, Debug)]
#[command(name = "updtype", version, about = "Closures and typechecking for XML update rules over hedge automata")]
pub struct Cli {
    /// Workspace files declaring automata, grammars, rules and documents.
    #[arg(short = 'f', long = "file", global = true)]
    pub files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an automaton on a document.
    Member { automaton: String, document: String },
    /// Decide emptiness, printing a member otherwise.
    Empty { automaton: String },
    /// Forward closure of a type under a rule set.
    Post {
        rules: String,
        input: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Backward closure of a type under a rule set.
    Pre {
        rules: String,
        output: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Does every update of an input-type document stay in the output type?
    Typecheck { rules: String, tau_in: String, tau_out: String },
    /// Can document t be rewritten into document u?
    Reach { rules: String, from: String, to: String },
    /// Can allowed updates simulate one forbidden update on a document?
    Inconsistent { allowed: String, forbidden: String, document: String },
    /// List the bounded rewriting closure of a document.
    Rewrite {
        rules: String,
        document: String,
        #[arg(long, default_value_t = 3)]
        steps: usize,
        #[arg(long, default_value_t = 20)]
        max_nodes: usize,
        #[arg(long, default_value_t = 2)]
        witnesses: usize,
    },
    /// Complement of a regular automaton over the workspace labels.
    Complement {
        automaton: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Intersection of two automata (at most one context-free).
    Intersect {
        left: String,
        right: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Report text, trailer pairs and exit status of one command.
pub struct Report {
    pub text: String,
    pub trailer: Vec<(String, String)>,
    pub status: i32,
}

impl Report {
    fn new() -> Report {
        Report { text: String::new(), trailer: Vec::new(), status: 0 }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn kv(&mut self, k: &str, v: impl ToString) {
        self.trailer.push((k.to_string(), v.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = self.text.clone();
        out.push_str("---\n");
        for (k, v) in &self.trailer {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

type Failure = String;

/// Parses arguments and runs one command; returns stdout text and status.
pub fn run<I, T>(args: I) -> (String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (e.to_string(), code);
        }
    };
    match execute(&cli) {
        Ok(r) => (r.render(), r.status),
        Err(msg) => (format!("error: {msg}\n---\nstatus=error\n"), 2),
    }
}

fn load(files: &[PathBuf]) -> Result<Workspace, Failure> {
    if files.is_empty() {
        return Err("no workspace file given (use -f FILE)".into());
    }
    let mut texts = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(f).map_err(|e| format!("{}: {e}", f.display()))?;
        texts.push((f.display().to_string(), text));
    }
    Workspace::parse(&texts).map_err(|e| e.to_string())
}

fn regular<'a>(ws: &'a Workspace, name: &str) -> Result<&'a Ha, Failure> {
    match ws.automaton(name).map_err(|e| e.to_string())? {
        Automaton::Regular(h) => Ok(h),
        Automaton::ContextFree(_) => Err(format!("automaton \"{name}\" is context-free; this command needs a regular one")),
    }
}

fn document(ws: &Workspace, name: &str) -> Result<Term, Failure> {
    ws.document(name).map_err(|e| format!("{e} (documents are single terms)"))
}

fn write_out(out: &Option<PathBuf>, text: &str, r: &mut Report) -> Result<(), Failure> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?;
            r.line(format!("wrote {}", p.display()));
        }
        None => r.text.push_str(text),
    }
    Ok(())
}

fn names(states: &[Symbol], set: &BTreeSet<u32>) -> String {
    let v: Vec<&str> = set.iter().map(|&q| states[q as usize].as_str()).collect();
    format!("{{{}}}", v.join(", "))
}

fn ha_sizes(h: &Ha, r: &mut Report) {
    let mut seen = BTreeSet::new();
    let horizontal: usize = h.rules.iter().filter(|x| seen.insert(std::sync::Arc::as_ptr(&x.horizontal.graph))).map(|x| x.horizontal.graph.edges.len()).sum();
    r.kv("states", h.num_states());
    r.kv("transitions", h.rules.len());
    r.kv("horizontal_edges", horizontal);
}

fn cf_sizes(c: &CfHa, r: &mut Report) {
    r.kv("states", c.num_states());
    r.kv("transitions", c.rules.len());
    r.kv("productions", c.pool.prods.len());
    r.kv("collapsing", c.collapsing.len());
}

fn verdict(v: &Verdict, holds: &str, fails: &str, r: &mut Report) {
    let ok = v.outcome == Outcome::Holds;
    r.line(if ok { holds } else { fails });
    if let Some(w) = &v.witness {
        r.line(format!("witness: {w}"));
        r.kv("witness", w);
    }
    for e in &v.explanation {
        r.line(format!("  {e}"));
    }
    for n in &v.hedge_notes {
        r.line(format!("  note: {n}"));
    }
    r.kv("verdict", if ok { holds } else { fails });
    if let Some(c) = &v.check {
        r.kv("replay", matches!(c, WitnessCheck::Replayed(_)));
    }
    r.status = if ok { 0 } else { 1 };
}

fn execute(cli: &Cli) -> Result<Report, Failure> {
    let ws = load(&cli.files)?;
    let mut r = Report::new();
    match &cli.command {
        Command::Member { automaton, document: d } => {
            let t = document(&ws, d)?;
            let (states, accept) = match ws.automaton(automaton).map_err(|e| e.to_string())? {
                Automaton::Regular(h) => {
                    let s = h.member(&t);
                    let ok = !s.is_disjoint(&h.finals);
                    (names(&h.states, &s), ok)
                }
                Automaton::ContextFree(c) => {
                    let s = c.member(&t);
                    let ok = !s.is_disjoint(&c.finals);
                    (names(&c.states, &s), ok)
                }
            };
            r.line(format!("states: {states}"));
            r.line(if accept { "ACCEPT" } else { "REJECT" });
            r.kv("states", states);
            r.kv("verdict", if accept { "accept" } else { "reject" });
            r.status = if accept { 0 } else { 1 };
        }
        Command::Empty { automaton } => {
            let w = match ws.automaton(automaton).map_err(|e| e.to_string())? {
                Automaton::Regular(h) => h.nonempty(),
                Automaton::ContextFree(c) => c.nonempty(),
            };
            match w {
                None => {
                    r.line("EMPTY");
                    r.kv("verdict", "empty");
                }
                Some(t) => {
                    r.line("NONEMPTY");
                    r.line(format!("witness: {t}"));
                    r.kv("verdict", "nonempty");
                    r.kv("witness", t);
                    r.status = 1;
                }
            }
        }
        Command::Post { rules, input, out } => {
            let p = ws.rule_set(rules).map_err(|e| e.to_string())?;
            let a = ws.automaton(input).map_err(|e| e.to_string())?;
            let name = format!("{input}_post");
            match (p.class(), a) {
                (RuleClass::Xacu, Automaton::Regular(h)) => {
                    let res = post_star_xacu(p, h).map_err(|e| e.to_string())?;
                    r.line(format!("post* (XACU): {} edges added in {} rounds", res.added_edges(), res.rounds));
                    write_out(out, &write_ha(&name, &res.automaton), &mut r)?;
                    ha_sizes(&res.automaton, &mut r);
                    r.kv("added_edges", res.added_edges());
                    r.kv("rounds", res.rounds);
                }
                _ => {
                    let res = post_star_xacu_plus(p, &a.as_cf()).map_err(|e| e.to_string())?;
                    r.line(format!("post* (XACU+): {} grammar productions", res.automaton.pool.prods.len()));
                    write_out(out, &write_cfha(&name, &res.automaton), &mut r)?;
                    cf_sizes(&res.automaton, &mut r);
                }
            }
        }
        Command::Pre { rules, output, out } => {
            let p = ws.rule_set(rules).map_err(|e| e.to_string())?;
            let h = regular(&ws, output)?;
            let res = pre_star(p, h).map_err(|e| e.to_string())?;
            r.line(format!("pre*: {} rounds, {} segment families", res.rounds, res.families));
            write_out(out, &write_ha(&format!("{output}_pre"), &res.automaton), &mut r)?;
            ha_sizes(&res.automaton, &mut r);
            r.kv("rounds", res.rounds);
        }
        Command::Typecheck { rules, tau_in, tau_out } => {
            let p = ws.rule_set(rules).map_err(|e| e.to_string())?;
            let v = policy::typecheck(p, regular(&ws, tau_in)?, regular(&ws, tau_out)?).map_err(|e| e.to_string())?;
            verdict(&v, "TYPECHECKS", "FAILS", &mut r);
        }
        Command::Reach { rules, from, to } => {
            let p = ws.rule_set(rules).map_err(|e| e.to_string())?;
            let v = policy::reachable(p, &document(&ws, from)?, &document(&ws, to)?).map_err(|e| e.to_string())?;
            verdict(&v, "REACHABLE", "UNREACHABLE", &mut r);
        }
        Command::Inconsistent { allowed, forbidden, document: d } => {
            let policy = Policy { allowed: ws.rule_set(allowed).map_err(|e| e.to_string())?.clone(), forbidden: ws.rule_set(forbidden).map_err(|e| e.to_string())?.clone() };
            let v = policy::local_inconsistency(&policy, &document(&ws, d)?).map_err(|e| e.to_string())?;
            verdict(&v, "CONSISTENT", "INCONSISTENT", &mut r);
        }
        Command::Rewrite { rules, document: d, steps, max_nodes, witnesses } => {
            if *steps == 0 || *max_nodes == 0 || *witnesses == 0 {
                return Err("bounds must be positive".into());
            }
            let p = ws.rule_set(rules).map_err(|e| e.to_string())?;
            let t = document(&ws, d)?;
            let seeds: BTreeSet<Hedge> = [t.into_hedge()].into();
            let all = Oracle::new(p, *witnesses).bounded_closure(&seeds, *steps, *max_nodes);
            for h in &all {
                r.line(h.to_string());
            }
            r.kv("hedges", all.len());
        }
        Command::Complement { automaton, out } => {
            let h = match ws.automaton(automaton).map_err(|e| e.to_string())? {
                Automaton::Regular(h) => h,
                Automaton::ContextFree(c) => return Err(c.complement().unwrap_err().to_string()),
            };
            let mut sigma = ws.alphabet.clone();
            sigma.extend(h.alphabet.iter().cloned());
            let c = h.complement(&sigma);
            write_out(out, &write_ha(&format!("{automaton}_complement"), &c), &mut r)?;
            ha_sizes(&c, &mut r);
        }
        Command::Intersect { left, right, out } => {
            let name = format!("{left}_{right}");
            match (ws.automaton(left).map_err(|e| e.to_string())?, ws.automaton(right).map_err(|e| e.to_string())?) {
                (Automaton::Regular(a), Automaton::Regular(b)) => {
                    let i = a.intersect(b);
                    write_out(out, &write_ha(&name, &i), &mut r)?;
                    ha_sizes(&i, &mut r);
                }
                (Automaton::ContextFree(c), Automaton::Regular(h)) | (Automaton::Regular(h), Automaton::ContextFree(c)) => {
                    let i = c.intersect_ha(h);
                    write_out(out, &write_cfha(&name, &i), &mut r)?;
                    cf_sizes(&i, &mut r);
                }
                (Automaton::ContextFree(a), Automaton::ContextFree(b)) => return Err(a.intersect(b).unwrap_err().to_string()),
            }
        }
    }
    Ok(r)
}
