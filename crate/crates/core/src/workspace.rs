//! Workspace files: automata, shared word automata, grammars, rule sets and
//! documents declared in one or more text files.
//!
//! ```text
//! # comment
//! alphabet g a b ;
//! automaton A {
//!   states q qa qb qf ;
//!   final qf ;
//!   rule a ( eps ) -> qa ;
//!   rule g ( grammar G ) -> qf ;
//!   rule c ( nfa N from 0 to 2 ) -> q ;
//!   collapse ( grammar H at X ) -> q ;
//! }
//! grammar G { S -> qa S qb | qa qb ; }
//! nfa N { nodes 3 ; edge 0 qa 1 ; edge 1 eps 2 ; }
//! rules R over P {
//!   DEL patient
//! }
//! document d = g(a b) ;
//! ```
//!
//! Grammar and nfa letters are resolved against the states of the automaton
//! that uses them. An automaton with a grammar rule or a collapse is
//! context-free; otherwise it is regular.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::cfha::CfHa;
use crate::ha::Ha;
use crate::rules::{parse_rules, Ptrs, RuleError};
use crate::term::{parse_term, Symbol, Term, TermError};
use crate::word::{compile_regex, Cfg, Graph, Letter, Nfa, Sym, WordError};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{file}: {msg}")]
    Syntax { file: String, msg: String },
    #[error("{kind} \"{name}\" is declared twice")]
    Duplicate { kind: &'static str, name: String },
    #[error("no {kind} named \"{name}\"")]
    Unresolved { kind: &'static str, name: String },
    #[error("automaton \"{automaton}\": {source}")]
    Word { automaton: String, source: WordError },
    #[error("rules \"{name}\": {source}")]
    Rules { name: String, source: RuleError },
    #[error("document \"{name}\": {source}")]
    Document { name: String, source: TermError },
    #[error("rules \"{0}\": the parameter automaton must be regular")]
    ContextFreeParameters(String),
}

#[derive(Clone, Debug)]
pub enum Automaton {
    Regular(Ha),
    ContextFree(CfHa),
}

impl Automaton {
    pub fn as_cf(&self) -> CfHa {
        match self {
            Automaton::Regular(h) => CfHa::from_ha(h),
            Automaton::ContextFree(c) => c.clone(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Workspace {
    pub alphabet: BTreeSet<Symbol>,
    pub automata: BTreeMap<String, Automaton>,
    pub rules: BTreeMap<String, Ptrs>,
    pub documents: BTreeMap<String, Term>,
}

/// Raw blocks before cross-references are resolved.
#[derive(Default)]
struct Raw {
    alphabet: BTreeSet<Symbol>,
    automata: Vec<(String, String, String)>,
    nfas: HashMap<String, String>,
    grammars: HashMap<String, String>,
    rules: Vec<(String, String, String)>,
    documents: Vec<(String, String)>,
}

fn strip_comments(text: &str) -> String {
    text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join("\n")
}

fn syntax(file: &str, msg: impl Into<String>) -> WorkspaceError {
    WorkspaceError::Syntax { file: file.to_string(), msg: msg.into() }
}

fn is_name(s: &str) -> bool {
    Symbol::is_valid_name(s)
}

impl Workspace {
    /// Parses `(file name, contents)` pairs into one workspace.
    pub fn parse(files: &[(String, String)]) -> Result<Workspace, WorkspaceError> {
        let mut raw = Raw::default();
        for (file, text) in files {
            scan(file, &strip_comments(text), &mut raw)?;
        }
        let mut ws = Workspace { alphabet: raw.alphabet.clone(), ..Workspace::default() };
        for (file, name, body) in &raw.automata {
            let a = build_automaton(file, name, body, &raw)?;
            if ws.automata.insert(name.clone(), a).is_some() {
                return Err(WorkspaceError::Duplicate { kind: "automaton", name: name.clone() });
            }
        }
        for (name, over, body) in &raw.rules {
            let params = match ws.automata.get(over) {
                Some(Automaton::Regular(h)) => h.clone(),
                Some(Automaton::ContextFree(_)) => return Err(WorkspaceError::ContextFreeParameters(name.clone())),
                None => return Err(WorkspaceError::Unresolved { kind: "automaton", name: over.clone() }),
            };
            let r = parse_rules(body, &params).map_err(|source| WorkspaceError::Rules { name: name.clone(), source })?;
            if ws.rules.insert(name.clone(), r).is_some() {
                return Err(WorkspaceError::Duplicate { kind: "rules", name: name.clone() });
            }
        }
        for (name, text) in &raw.documents {
            let t = parse_term(text).map_err(|source| WorkspaceError::Document { name: name.clone(), source })?;
            if ws.documents.insert(name.clone(), t).is_some() {
                return Err(WorkspaceError::Duplicate { kind: "document", name: name.clone() });
            }
        }
        Ok(ws)
    }

    pub fn parse_str(text: &str) -> Result<Workspace, WorkspaceError> {
        Workspace::parse(&[("<input>".to_string(), text.to_string())])
    }

    pub fn automaton(&self, name: &str) -> Result<&Automaton, WorkspaceError> {
        self.automata.get(name).ok_or_else(|| WorkspaceError::Unresolved { kind: "automaton", name: name.to_string() })
    }

    pub fn rule_set(&self, name: &str) -> Result<&Ptrs, WorkspaceError> {
        self.rules.get(name).ok_or_else(|| WorkspaceError::Unresolved { kind: "rules", name: name.to_string() })
    }

    /// A named document, or else `name` read as a term.
    pub fn document(&self, name: &str) -> Result<Term, WorkspaceError> {
        if let Some(t) = self.documents.get(name) {
            return Ok(t.clone());
        }
        parse_term(name).map_err(|source| WorkspaceError::Document { name: name.to_string(), source })
    }
}

fn scan(file: &str, text: &str, raw: &mut Raw) -> Result<(), WorkspaceError> {
    let mut rest = text.trim_start();
    while !rest.is_empty() {
        let (kw, after) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
        let after = after.trim_start();
        match kw {
            "alphabet" => {
                let (body, tail) = after.split_once(';').ok_or_else(|| syntax(file, "alphabet without \";\""))?;
                raw.alphabet.extend(body.split_whitespace().map(Symbol::new));
                rest = tail;
            }
            "document" => {
                let (head, tail) = after.split_once(';').ok_or_else(|| syntax(file, "document without \";\""))?;
                let (name, term) = head.split_once('=').ok_or_else(|| syntax(file, "document without \"=\""))?;
                raw.documents.push((name.trim().to_string(), term.trim().to_string()));
                rest = tail;
            }
            "automaton" | "nfa" | "grammar" | "rules" => {
                let (head, tail) = after.split_once('{').ok_or_else(|| syntax(file, format!("{kw} without \"{{\"")))?;
                let (body, tail) = tail.split_once('}').ok_or_else(|| syntax(file, format!("{kw} without \"}}\"")))?;
                let head: Vec<&str> = head.split_whitespace().collect();
                let name = head.first().copied().filter(|n| is_name(n)).ok_or_else(|| syntax(file, format!("{kw} needs a name")))?;
                let dup = |kind| WorkspaceError::Duplicate { kind, name: name.to_string() };
                match (kw, head.as_slice()) {
                    ("automaton", [_]) => raw.automata.push((file.to_string(), name.to_string(), body.to_string())),
                    ("nfa", [_]) => {
                        if raw.nfas.insert(name.to_string(), body.to_string()).is_some() {
                            return Err(dup("nfa"));
                        }
                    }
                    ("grammar", [_]) => {
                        if raw.grammars.insert(name.to_string(), body.to_string()).is_some() {
                            return Err(dup("grammar"));
                        }
                    }
                    ("rules", [_, "over", params]) => raw.rules.push((name.to_string(), params.to_string(), body.to_string())),
                    ("rules", _) => return Err(syntax(file, format!("rules {name}: expected \"rules NAME over AUTOMATON {{\""))),
                    _ => return Err(syntax(file, format!("{kw} {name}: unexpected tokens before \"{{\""))),
                }
                rest = tail;
            }
            other => return Err(syntax(file, format!("unknown section \"{other}\""))),
        }
        rest = rest.trim_start();
    }
    Ok(())
}

enum Horizontal {
    Regular(Nfa),
    Grammar(Cfg),
}

fn build_automaton(file: &str, name: &str, body: &str, raw: &Raw) -> Result<Automaton, WorkspaceError> {
    let err = |msg: String| syntax(file, format!("automaton {name}: {msg}"));
    let word = |source| WorkspaceError::Word { automaton: name.to_string(), source };
    let mut alphabet = raw.alphabet.clone();
    let mut states: Vec<Symbol> = Vec::new();
    let mut finals = Vec::new();
    let mut clauses = Vec::new();
    for clause in body.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let (kw, rest) = clause.split_once(char::is_whitespace).unwrap_or((clause, ""));
        match kw {
            "alphabet" => alphabet.extend(rest.split_whitespace().map(Symbol::new)),
            "states" => states.extend(rest.split_whitespace().map(Symbol::new)),
            "final" => finals.extend(rest.split_whitespace().map(str::to_string)),
            "rule" | "collapse" => clauses.push((kw, rest.trim())),
            other => return Err(err(format!("unknown clause \"{other}\""))),
        }
    }
    let index: HashMap<&str, Letter> = states.iter().enumerate().map(|(i, s)| (s.as_str(), i as Letter)).collect();
    if index.len() != states.len() {
        return Err(err("a state is declared twice".into()));
    }
    let state = |n: &str| index.get(n).copied().ok_or_else(|| WorkspaceError::Unresolved { kind: "state", name: n.to_string() });
    let mut parsed = Vec::new();
    for (kw, rest) in clauses {
        let (lhs, target) = rest.rsplit_once("->").ok_or_else(|| err(format!("\"{kw} {rest}\" lacks \"-> STATE\"")))?;
        let target = state(target.trim())?;
        let lhs = lhs.trim();
        let (label, inner) = if kw == "rule" {
            let (label, inner) = lhs.split_once('(').ok_or_else(|| err(format!("rule \"{rest}\" lacks \"(\"")))?;
            (Some(label.trim()), inner)
        } else {
            (None, lhs.strip_prefix('(').ok_or_else(|| err(format!("collapse \"{rest}\" lacks \"(\"")))?)
        };
        let inner = inner.trim_end().strip_suffix(')').ok_or_else(|| err(format!("\"{rest}\" lacks \")\"")))?.trim();
        let words: Vec<&str> = inner.split_whitespace().collect();
        let h = match words.as_slice() {
            ["grammar", g, tail @ ..] => {
                let text = raw.grammars.get(*g).ok_or_else(|| WorkspaceError::Unresolved { kind: "grammar", name: g.to_string() })?;
                let start = match tail {
                    [] => None,
                    ["at", x] => Some(*x),
                    _ => return Err(err(format!("expected \"grammar NAME [at NONTERMINAL]\" in \"{inner}\""))),
                };
                Horizontal::Grammar(parse_grammar(text, start, &state).map_err(word)?)
            }
            ["nfa", n, "from", i, "to", fs @ ..] => {
                let text = raw.nfas.get(*n).ok_or_else(|| WorkspaceError::Unresolved { kind: "nfa", name: n.to_string() })?;
                let graph = parse_nfa(text, &state).map_err(word)?;
                let node = |s: &str| s.parse::<u32>().ok().filter(|&x| (x as usize) < graph.num_states).ok_or_else(|| err(format!("bad node \"{s}\"")));
                let finals = fs.iter().map(|f| node(f)).collect::<Result<Vec<_>, _>>()?;
                Horizontal::Regular(Nfa::on_graph(graph.clone(), node(i)?, finals))
            }
            _ => Horizontal::Regular(compile_regex(inner, |n| index.get(n).copied()).map_err(word)?),
        };
        parsed.push((label.map(Symbol::new), h, target));
    }
    let finals = finals.iter().map(|f| state(f)).collect::<Result<BTreeSet<_>, _>>()?;
    let context_free = parsed.iter().any(|(l, h, _)| l.is_none() || matches!(h, Horizontal::Grammar(_)));
    if !context_free {
        let mut ha = Ha { alphabet, states, finals, rules: Vec::new() };
        // Rules reading one shared nfa block share one graph.
        let mut graphs: Vec<Arc<Graph>> = Vec::new();
        for (label, h, target) in parsed {
            let Horizontal::Regular(mut m) = h else { unreachable!() };
            match graphs.iter().find(|g| **g == m.graph) {
                Some(g) => m.graph = g.clone(),
                None => graphs.push(m.graph.clone()),
            }
            ha.add_rule(label.unwrap(), m, target);
        }
        return Ok(Automaton::Regular(ha));
    }
    let mut cf = CfHa { alphabet, states, finals, ..CfHa::default() };
    for (label, h, target) in parsed {
        let g = match h {
            Horizontal::Regular(m) => Cfg::from_nfa(&m),
            Horizontal::Grammar(g) => g,
        };
        match label {
            Some(l) => cf.add_rule(l, &g, target),
            None => cf.add_collapse(&g, target),
        }
    }
    Ok(Automaton::ContextFree(cf))
}

/// `S -> x S y | eps ; T -> ...` with heads as nonterminals.
fn parse_grammar(text: &str, start: Option<&str>, state: &impl Fn(&str) -> Result<Letter, WorkspaceError>) -> Result<Cfg, WordError> {
    let mut g = Cfg::new();
    let mut heads: HashMap<String, u32> = HashMap::new();
    let mut prods = Vec::new();
    for p in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (head, body) = p.split_once("->").ok_or_else(|| WordError::Grammar(format!("\"{p}\" lacks \"->\"")))?;
        let head = head.trim();
        if !is_name(head) {
            return Err(WordError::Grammar(format!("bad nonterminal \"{head}\"")));
        }
        if !heads.contains_key(head) {
            heads.insert(head.to_string(), g.add_nt(head));
        }
        prods.push((heads[head], body.to_string()));
    }
    if prods.is_empty() {
        return Err(WordError::Grammar("no productions".into()));
    }
    for (h, body) in prods {
        for alt in body.split('|') {
            let mut syms = Vec::new();
            for tok in alt.split_whitespace().filter(|t| *t != "eps") {
                syms.push(match heads.get(tok) {
                    Some(&n) => Sym::N(n),
                    None => Sym::T(state(tok).map_err(|_| WordError::UnknownLetter(tok.to_string()))?),
                });
            }
            g.add_prod(h, syms);
        }
    }
    g.start = match start {
        None => 0,
        Some(x) => *heads.get(x).ok_or_else(|| WordError::Grammar(format!("no nonterminal \"{x}\"")))?,
    };
    Ok(g)
}

/// `nodes N ; edge S LETTER T ; ...` with `eps` for the empty letter.
fn parse_nfa(text: &str, state: &impl Fn(&str) -> Result<Letter, WorkspaceError>) -> Result<Arc<Graph>, WordError> {
    let bad = |c: &str| WordError::Regex(format!("bad nfa clause \"{c}\""));
    let mut nodes = None;
    let mut edges = Vec::new();
    for c in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        match c.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["nodes", n] => nodes = Some(n.parse::<usize>().map_err(|_| bad(c))?),
            ["edge", s, l, t] => {
                let letter = if *l == "eps" { None } else { Some(state(l).map_err(|_| WordError::UnknownLetter(l.to_string()))?) };
                edges.push((s.parse::<u32>().map_err(|_| bad(c))?, letter, t.parse::<u32>().map_err(|_| bad(c))?));
            }
            _ => return Err(bad(c)),
        }
    }
    let n = nodes.ok_or_else(|| WordError::Regex("nfa without \"nodes\"".into()))?;
    if edges.iter().any(|&(s, _, t)| s as usize >= n || t as usize >= n) {
        return Err(WordError::Regex("nfa edge outside its nodes".into()));
    }
    Ok(Arc::new(Graph::new(n, edges)))
}

/// Writes a regular automaton in workspace syntax. Word automata are
/// emitted as nfa blocks named `{name}_h0`, `{name}_h1`, ...
pub fn write_ha(name: &str, ha: &Ha) -> String {
    let mut out = String::new();
    let mut graphs: Vec<Arc<Graph>> = Vec::new();
    let mut rules = String::new();
    for r in &ha.rules {
        let k = match graphs.iter().position(|g| Arc::ptr_eq(g, &r.horizontal.graph)) {
            Some(k) => k,
            None => {
                graphs.push(r.horizontal.graph.clone());
                graphs.len() - 1
            }
        };
        let finals: Vec<String> = r.horizontal.finals.iter().map(u32::to_string).collect();
        let _ = writeln!(rules, "  rule {} ( nfa {name}_h{k} from {} to {} ) -> {} ;", r.label, r.horizontal.initial, finals.join(" "), ha.state_name(r.target));
    }
    for (k, g) in graphs.iter().enumerate() {
        let _ = write!(out, "nfa {name}_h{k} {{\n  nodes {} ;\n", g.num_states);
        for &(s, l, t) in &g.edges {
            let l = l.map_or("eps", |l| ha.state_name(l));
            let _ = writeln!(out, "  edge {s} {l} {t} ;");
        }
        out.push_str("}\n");
    }
    header(&mut out, name, &ha.alphabet, &ha.states, &ha.finals);
    out.push_str(&rules);
    out.push_str("}\n");
    out
}

fn header(out: &mut String, name: &str, alphabet: &BTreeSet<Symbol>, states: &[Symbol], finals: &BTreeSet<u32>) {
    let join = |v: Vec<&str>| v.join(" ");
    let _ = writeln!(out, "automaton {name} {{");
    if !alphabet.is_empty() {
        let _ = writeln!(out, "  alphabet {} ;", join(alphabet.iter().map(Symbol::as_str).collect()));
    }
    if !states.is_empty() {
        let _ = writeln!(out, "  states {} ;", join(states.iter().map(Symbol::as_str).collect()));
    }
    if !finals.is_empty() {
        let _ = writeln!(out, "  final {} ;", join(finals.iter().map(|&f| states[f as usize].as_str()).collect()));
    }
}

/// Writes a context-free automaton; its grammar pool becomes one grammar
/// block `{name}_g` whose nonterminals are named apart from the states.
pub fn write_cfha(name: &str, a: &CfHa) -> String {
    let mut prefix = String::from("N");
    while a.states.iter().any(|s| s.as_str().starts_with(&prefix)) {
        prefix.push('_');
    }
    let nt = |n: u32| format!("{prefix}{n}");
    let mut by_head: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for (h, body) in &a.pool.prods {
        let alt: Vec<String> = body
            .iter()
            .map(|s| match *s {
                Sym::T(l) => a.state_name(l).to_string(),
                Sym::N(n) => nt(n),
            })
            .collect();
        by_head.entry(*h).or_default().push(if alt.is_empty() { "eps".into() } else { alt.join(" ") });
    }
    let mut out = format!("grammar {name}_g {{\n");
    for n in 0..a.pool.num_nts() as u32 {
        // A nonterminal without productions still needs a declaration.
        let alts = by_head.remove(&n).unwrap_or_else(|| vec![nt(n)]);
        let _ = writeln!(out, "  {} -> {} ;", nt(n), alts.join(" | "));
    }
    out.push_str("}\n");
    header(&mut out, name, &a.alphabet, &a.states, &a.finals);
    for r in &a.rules {
        let _ = writeln!(out, "  rule {} ( grammar {name}_g at {} ) -> {} ;", r.label, nt(r.start), a.state_name(r.target));
    }
    for c in &a.collapsing {
        let _ = writeln!(out, "  collapse ( grammar {name}_g at {} ) -> {} ;", nt(c.start), a.state_name(c.target));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "
        # collapsing example
        automaton ex {
          states q qa qb qf ;
          final qf ;
          rule a ( eps ) -> qa ;
          rule b ( eps ) -> qb ;
          rule g ( q ) -> qf ;
          collapse ( grammar G ) -> q ;
        }
        grammar G { S -> qa qb ; }
        automaton reg {
          states x y ;
          final y ;
          rule a ( eps ) -> x ;
          rule f ( nfa N from 0 to 1 ) -> y ;
        }
        nfa N { nodes 2 ; edge 0 x 0 ; edge 0 eps 1 ; }
        rules R over reg {
          INSL f f x
        }
        document d = g(a b) ;
    ";

    #[test]
    fn parse_and_roundtrip() {
        let ws = Workspace::parse_str(EXAMPLE).unwrap();
        let Automaton::ContextFree(ex) = ws.automaton("ex").unwrap() else { panic!() };
        assert!(ex.accepts(&ws.document("d").unwrap()));
        assert!(!ex.accepts(&parse_term("g(a b b)").unwrap()));
        let Automaton::Regular(reg) = ws.automaton("reg").unwrap() else { panic!() };
        assert!(reg.accepts(&parse_term("f(a a)").unwrap()));
        assert_eq!(ws.rule_set("R").unwrap().rules.len(), 1);

        let again = Workspace::parse_str(&(write_cfha("ex", ex) + &write_ha("reg", reg))).unwrap();
        let Automaton::ContextFree(ex2) = again.automaton("ex").unwrap() else { panic!() };
        let Automaton::Regular(reg2) = again.automaton("reg").unwrap() else { panic!() };
        for t in ["g(a b)", "g(a)", "f", "f(a a a)", "f(b)", "a"] {
            let t = parse_term(t).unwrap();
            assert_eq!(ex.accepts(&t), ex2.accepts(&t));
            assert_eq!(reg.accepts(&t), reg2.accepts(&t));
        }
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(Workspace::parse_str("automaton a { states q ; rule a ( r ) -> q ; }"), Err(WorkspaceError::Word { .. })));
        assert!(matches!(Workspace::parse_str("rules R over nope { DEL a }"), Err(WorkspaceError::Unresolved { .. })));
        assert!(matches!(Workspace::parse_str("banana"), Err(WorkspaceError::Syntax { .. })));
    }
}
