//! Parametrized update rules, their classes, and the ground rewriting
//! engine used as a brute-force reference.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ha::Ha;
use crate::term::{replace_at, Hedge, Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Ren,
    InsFirst,
    InsLast,
    InsInto,
    InsLeft,
    InsRight,
    Rpl,
    Dels,
    InsLeft2,
    InsRight2,
    Rpl2,
    Dels2,
}

impl RuleKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RuleKind::Ren => "REN",
            RuleKind::InsFirst => "INSF",
            RuleKind::InsLast => "INSL",
            RuleKind::InsInto => "INSI",
            RuleKind::InsLeft => "INSLEFT",
            RuleKind::InsRight => "INSRIGHT",
            RuleKind::Rpl => "RPL",
            RuleKind::Dels => "DELS",
            RuleKind::InsLeft2 => "INSLEFT2",
            RuleKind::InsRight2 => "INSRIGHT2",
            RuleKind::Rpl2 => "RPL2",
            RuleKind::Dels2 => "DELS2",
        }
    }

    pub fn has_context(self) -> bool {
        matches!(self, RuleKind::InsLeft2 | RuleKind::InsRight2 | RuleKind::Rpl2 | RuleKind::Dels2)
    }
}

/// One rule. `relabel` is the label after rewriting (equal to `subject`
/// unless the rule renames); `context` is the required parent label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpdateRule {
    pub kind: RuleKind,
    pub subject: Symbol,
    pub relabel: Symbol,
    pub context: Option<Symbol>,
    pub params: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleClass {
    Xacu,
    XacuPlus,
    Xacu2Plus,
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleClass::Xacu => "XACU",
            RuleClass::XacuPlus => "XACU+",
            RuleClass::Xacu2Plus => "XACU2+",
        })
    }
}

impl UpdateRule {
    pub fn class(&self) -> RuleClass {
        match self.kind {
            RuleKind::Ren | RuleKind::InsInto | RuleKind::InsLeft | RuleKind::InsRight => RuleClass::Xacu,
            RuleKind::InsFirst | RuleKind::InsLast if self.relabel == self.subject => RuleClass::Xacu,
            RuleKind::InsFirst | RuleKind::InsLast => RuleClass::XacuPlus,
            RuleKind::Rpl if self.params.len() <= 1 => RuleClass::Xacu,
            RuleKind::Rpl | RuleKind::Dels => RuleClass::XacuPlus,
            _ => RuleClass::Xacu2Plus,
        }
    }

    /// Rule text in file syntax, naming parameter states through `names`.
    pub fn render(&self, names: &[Symbol]) -> String {
        let mut parts = vec![self.kind.keyword().to_string()];
        if let Some(c) = &self.context {
            parts.push(c.to_string());
        }
        parts.push(self.subject.to_string());
        if matches!(self.kind, RuleKind::Ren | RuleKind::InsFirst | RuleKind::InsLast) {
            parts.push(self.relabel.to_string());
        }
        parts.extend(self.params.iter().map(|&p| names[p as usize].to_string()));
        parts.join(" ")
    }
}

/// Rules bound to the automaton their parameter states belong to.
#[derive(Clone, Debug)]
pub struct Ptrs {
    pub rules: Vec<UpdateRule>,
    pub parameters: Ha,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: unknown parameter state \"{state}\"")]
    UnknownState { line: usize, state: String },
    #[error("line {line}: globally constrained rules \"L :: l -> r\" are rejected: reachability and typechecking are undecidable for them")]
    GlobalConstraint { line: usize },
}

impl Ptrs {
    pub fn new(rules: Vec<UpdateRule>, parameters: Ha) -> Ptrs {
        Ptrs { rules, parameters }
    }

    pub fn class(&self) -> RuleClass {
        classify(&self.rules)
    }

    pub fn render(&self) -> String {
        self.rules.iter().map(|r| r.render(&self.parameters.states) + "\n").collect()
    }

    pub fn labels(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            out.insert(r.subject.clone());
            out.insert(r.relabel.clone());
            if let Some(c) = &r.context {
                out.insert(c.clone());
            }
        }
        out
    }
}

/// Smallest class containing every rule.
pub fn classify(rules: &[UpdateRule]) -> RuleClass {
    rules.iter().map(UpdateRule::class).max().unwrap_or(RuleClass::Xacu)
}

/// One rule per line; `#` starts a comment; identical rules collapse.
pub fn parse_rules(text: &str, params: &Ha) -> Result<Ptrs, RuleError> {
    let mut rules: Vec<UpdateRule> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let rule = parse_rule_line(body, line, params)?;
        if !rules.contains(&rule) {
            rules.push(rule);
        }
    }
    Ok(Ptrs { rules, parameters: params.clone() })
}

pub fn parse_rule_line(body: &str, line: usize, params: &Ha) -> Result<UpdateRule, RuleError> {
    if body.contains("::") {
        return Err(RuleError::GlobalConstraint { line });
    }
    let words: Vec<&str> = body.split_whitespace().collect();
    let bad = |msg: &str| RuleError::Malformed { line, msg: msg.to_string() };
    let sym = |w: &str| -> Result<Symbol, RuleError> {
        if Symbol::is_valid_name(w) {
            Ok(Symbol::new(w))
        } else {
            Err(bad(&format!("invalid symbol \"{w}\"")))
        }
    };
    let state = |w: &str| -> Result<u32, RuleError> { params.state_id(w).ok_or_else(|| RuleError::UnknownState { line, state: w.to_string() }) };
    let (kw, args) = words.split_first().ok_or_else(|| bad("empty rule"))?;
    let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(bad(&format!("{kw} takes {n} arguments"))) };
    let rule = |kind, subject: Symbol, relabel: Option<Symbol>, context: Option<Symbol>, params: Vec<u32>| UpdateRule {
        kind,
        relabel: relabel.unwrap_or_else(|| subject.clone()),
        subject,
        context,
        params,
    };
    Ok(match *kw {
        "REN" => {
            arity(2)?;
            rule(RuleKind::Ren, sym(args[0])?, Some(sym(args[1])?), None, vec![])
        }
        "INSF" | "INSL" => {
            arity(3)?;
            let kind = if *kw == "INSF" { RuleKind::InsFirst } else { RuleKind::InsLast };
            rule(kind, sym(args[0])?, Some(sym(args[1])?), None, vec![state(args[2])?])
        }
        "INSI" | "INSLEFT" | "INSRIGHT" => {
            arity(2)?;
            let kind = match *kw {
                "INSI" => RuleKind::InsInto,
                "INSLEFT" => RuleKind::InsLeft,
                _ => RuleKind::InsRight,
            };
            rule(kind, sym(args[0])?, None, None, vec![state(args[1])?])
        }
        "RPL" | "DEL" => {
            if args.is_empty() || (*kw == "DEL" && args.len() != 1) {
                return Err(bad(&format!("{kw} needs a symbol")));
            }
            let ps = args[1..].iter().map(|w| state(w)).collect::<Result<_, _>>()?;
            rule(RuleKind::Rpl, sym(args[0])?, None, None, ps)
        }
        "DELS" => {
            arity(1)?;
            rule(RuleKind::Dels, sym(args[0])?, None, None, vec![])
        }
        "INSLEFT2" | "INSRIGHT2" => {
            arity(3)?;
            let kind = if *kw == "INSLEFT2" { RuleKind::InsLeft2 } else { RuleKind::InsRight2 };
            rule(kind, sym(args[1])?, None, Some(sym(args[0])?), vec![state(args[2])?])
        }
        "RPL2" | "DEL2" => {
            if args.len() < 2 || (*kw == "DEL2" && args.len() != 2) {
                return Err(bad(&format!("{kw} needs a context and a symbol")));
            }
            let ps = args[2..].iter().map(|w| state(w)).collect::<Result<_, _>>()?;
            rule(RuleKind::Rpl2, sym(args[1])?, None, Some(sym(args[0])?), ps)
        }
        "DELS2" => {
            arity(2)?;
            rule(RuleKind::Dels2, sym(args[1])?, None, Some(sym(args[0])?), vec![])
        }
        other => return Err(bad(&format!("unknown rule kind \"{other}\""))),
    })
}

/// Up to `k` least-size terms at state `p`, deterministic order.
pub fn witnesses(a: &Ha, p: u32, k: usize) -> Vec<Term> {
    a.witnesses(p, k, WITNESS_SIZE_CAP)
}

const WITNESS_SIZE_CAP: usize = 12;

/// Ground rewriting with finitely many witnesses per parameter state.
pub struct Oracle<'a> {
    rules: &'a [UpdateRule],
    samples: BTreeMap<u32, Vec<Term>>,
}

impl<'a> Oracle<'a> {
    pub fn new(r: &'a Ptrs, witness_budget: usize) -> Oracle<'a> {
        let mut samples = BTreeMap::new();
        for rule in &r.rules {
            for &p in &rule.params {
                samples.entry(p).or_insert_with(|| witnesses(&r.parameters, p, witness_budget));
            }
        }
        Oracle { rules: &r.rules, samples }
    }

    /// Like [`Oracle::new`], with every subterm of `extra` that the
    /// parameter automaton accepts at a state added to that state's samples.
    pub fn with_samples(r: &'a Ptrs, witness_budget: usize, extra: &[Term]) -> Oracle<'a> {
        let mut o = Oracle::new(r, witness_budget);
        let mut pending: Vec<&Term> = extra.iter().collect();
        while let Some(t) = pending.pop() {
            pending.extend(t.children.0.iter());
            for p in r.parameters.member(t) {
                if let Some(v) = o.samples.get_mut(&p) {
                    if !v.contains(t) {
                        v.push(t.clone());
                    }
                }
            }
        }
        o
    }

    fn sample(&self, p: u32) -> &[Term] {
        &self.samples[&p]
    }

    /// Every hedge one rule application away from `h`.
    pub fn one_step(&self, h: &Hedge) -> BTreeSet<Hedge> {
        let mut out = BTreeSet::new();
        for pos in h.positions() {
            let t = h.subterm_at(&pos).unwrap();
            let parent = if pos.len() >= 2 { h.subterm_at(&pos[..pos.len() - 1]).map(|p| &p.label) } else { None };
            for rule in self.rules {
                if rule.subject != t.label {
                    continue;
                }
                if let Some(c) = &rule.context {
                    if parent != Some(c) {
                        continue;
                    }
                }
                for r in self.rewrite(rule, t) {
                    out.insert(replace_at(h, &pos, &r).expect("position comes from the hedge"));
                }
            }
        }
        out
    }

    /// Replacement hedges for the redex `t`.
    fn rewrite(&self, rule: &UpdateRule, t: &Term) -> Vec<Hedge> {
        let kids = &t.children.0;
        let node = |label: &Symbol, children: Vec<Term>| Term::new(label.clone(), children);
        let param = || self.sample(rule.params[0]).iter();
        match rule.kind {
            RuleKind::Ren => vec![node(&rule.relabel, kids.clone()).into_hedge()],
            RuleKind::InsFirst => param()
                .map(|w| {
                    let mut c = vec![w.clone()];
                    c.extend(kids.iter().cloned());
                    node(&rule.relabel, c).into_hedge()
                })
                .collect(),
            RuleKind::InsLast => param()
                .map(|w| {
                    let mut c = kids.clone();
                    c.push(w.clone());
                    node(&rule.relabel, c).into_hedge()
                })
                .collect(),
            RuleKind::InsInto => {
                let mut out = Vec::new();
                for w in param() {
                    for i in 0..=kids.len() {
                        let mut c = kids[..i].to_vec();
                        c.push(w.clone());
                        c.extend(kids[i..].iter().cloned());
                        out.push(node(&t.label, c).into_hedge());
                    }
                }
                out
            }
            RuleKind::InsLeft | RuleKind::InsLeft2 => param().map(|w| Hedge(vec![w.clone(), t.clone()])).collect(),
            RuleKind::InsRight | RuleKind::InsRight2 => param().map(|w| Hedge(vec![t.clone(), w.clone()])).collect(),
            RuleKind::Rpl | RuleKind::Rpl2 => {
                let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
                for &p in &rule.params {
                    let mut next = Vec::new();
                    for prefix in &acc {
                        for w in self.sample(p) {
                            let mut x = prefix.clone();
                            x.push(w.clone());
                            next.push(x);
                        }
                    }
                    acc = next;
                }
                acc.into_iter().map(Hedge).collect()
            }
            RuleKind::Dels | RuleKind::Dels2 => vec![t.children.clone()],
        }
    }

    /// Breadth-first closure from `seeds`, dropping hedges above `max_nodes`.
    pub fn bounded_closure(&self, seeds: &BTreeSet<Hedge>, max_steps: usize, max_nodes: usize) -> BTreeSet<Hedge> {
        let mut all: BTreeSet<Hedge> = seeds.clone();
        let mut frontier: Vec<Hedge> = seeds.iter().cloned().collect();
        for _ in 0..max_steps {
            let mut next = Vec::new();
            for h in &frontier {
                for r in self.one_step(h) {
                    if r.size() <= max_nodes && all.insert(r.clone()) {
                        next.push(r);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        all
    }
}

pub fn one_step(r: &Ptrs, h: &Hedge, witness_budget: usize) -> BTreeSet<Hedge> {
    Oracle::new(r, witness_budget).one_step(h)
}

pub fn bounded_closure(r: &Ptrs, seeds: &BTreeSet<Hedge>, max_steps: usize, max_nodes: usize, witness_budget: usize) -> BTreeSet<Hedge> {
    Oracle::new(r, witness_budget).bounded_closure(seeds, max_steps, max_nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_hedge;
    use crate::word::Nfa;

    fn params() -> Ha {
        let mut a = Ha::new();
        let p = a.add_state("p");
        a.add_rule(Symbol::new("a"), Nfa::epsilon(), p);
        a
    }

    #[test]
    fn parse_and_classify() {
        let a = params();
        let r = parse_rules("REN a b\nINSF a a p\n", &a).unwrap();
        assert_eq!(r.class(), RuleClass::Xacu);
        assert_eq!(parse_rules("INSF a b p", &a).unwrap().class(), RuleClass::XacuPlus);
        assert_eq!(parse_rules("DELS2 hospital patient", &a).unwrap().class(), RuleClass::Xacu2Plus);
        let del = parse_rules("DEL patient", &a).unwrap();
        assert_eq!(del.rules[0].kind, RuleKind::Rpl);
        assert!(del.rules[0].params.is_empty());
        assert!(matches!(parse_rules("L :: a -> b", &a), Err(RuleError::GlobalConstraint { .. })));
        assert!(matches!(parse_rules("INSI a q", &a), Err(RuleError::UnknownState { .. })));
    }

    #[test]
    fn dels_both_positions() {
        let a = params();
        let r = parse_rules("DELS c", &a).unwrap();
        let got: Vec<String> = one_step(&r, &parse_hedge("c(a c(b) b)").unwrap(), 1).iter().map(|h| h.to_string()).collect();
        assert_eq!(got, ["a c(b) b", "c(a b b)"]);
    }

    #[test]
    fn insert_first_relabels() {
        let a = params();
        let r = parse_rules("INSF c c' p", &a).unwrap();
        let got: Vec<String> = one_step(&r, &parse_hedge("c").unwrap(), 1).iter().map(|h| h.to_string()).collect();
        assert_eq!(got, ["c'(a)"]);
    }
}
