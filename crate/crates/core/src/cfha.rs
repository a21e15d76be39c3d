//! Hedge automata with context-free horizontal languages and collapsing
//! rules `L -> q`, which rewrite a whole hedge in L into the state q.
//!
//! All horizontal grammars live in one shared pool; a rule points at the
//! nonterminal that generates its language.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ha::{fresh_name, Ha, Witness};
use crate::term::{Hedge, Symbol, Term};
use crate::word::{bar_hillel_into, Cfg, Cnf, Letter, Sym};

#[derive(Clone, Debug)]
pub struct CfRule {
    pub label: Symbol,
    pub start: u32,
    pub target: u32,
}

#[derive(Clone, Debug)]
pub struct Collapse {
    pub start: u32,
    pub target: u32,
}

#[derive(Clone, Debug, Default)]
pub struct CfHa {
    pub alphabet: BTreeSet<Symbol>,
    pub states: Vec<Symbol>,
    pub finals: BTreeSet<u32>,
    pub pool: Cfg,
    pub rules: Vec<CfRule>,
    pub collapsing: Vec<Collapse>,
}

impl CfHa {
    pub fn new() -> CfHa {
        CfHa::default()
    }

    pub fn add_state(&mut self, name: &str) -> u32 {
        self.states.push(Symbol::new(name));
        (self.states.len() - 1) as u32
    }

    pub fn add_fresh_state(&mut self, hint: &str) -> u32 {
        let name = fresh_name(hint, |n| self.state_id(n).is_some());
        self.add_state(&name)
    }

    pub fn state_id(&self, name: &str) -> Option<u32> {
        self.states.iter().position(|s| s.as_str() == name).map(|i| i as u32)
    }

    pub fn state_name(&self, q: u32) -> &str {
        self.states[q as usize].as_str()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Copies `g` into the pool; returns the pool id of its start.
    pub fn add_grammar(&mut self, g: &Cfg) -> u32 {
        let base = self.pool.absorb(g);
        g.start + base
    }

    pub fn add_rule(&mut self, label: Symbol, g: &Cfg, target: u32) {
        let start = self.add_grammar(g);
        self.alphabet.insert(label.clone());
        self.rules.push(CfRule { label, start, target });
    }

    pub fn add_collapse(&mut self, g: &Cfg, target: u32) {
        let start = self.add_grammar(g);
        self.collapsing.push(Collapse { start, target });
    }

    /// The regular automaton viewed as a context-free one.
    pub fn from_ha(ha: &Ha) -> CfHa {
        let mut out = CfHa { alphabet: ha.alphabet.clone(), states: ha.states.clone(), finals: ha.finals.clone(), ..CfHa::default() };
        for r in &ha.rules {
            let g = Cfg::from_nfa(&r.horizontal);
            out.add_rule(r.label.clone(), &g, r.target);
        }
        out
    }

    /// Grammar of one rule, extracted from the pool.
    pub fn grammar_of(&self, start: u32) -> Cfg {
        Cfg { start, ..self.pool.clone() }.prune()
    }

    /// Removes collapsing rules while keeping the term language.
    ///
    /// Every collapsed state q gets a nonterminal `X_q -> q | L1 | ... | Lk`
    /// over all collapsing languages into q, and every terminal occurrence of
    /// q in the pool (the collapsing grammars included) becomes `X_q`. A term
    /// whose single-letter word already collapses into q also reaches q, so
    /// rules into such letters are copied onto q.
    pub fn eliminate_collapsing(&self) -> CfHa {
        if self.collapsing.is_empty() {
            return self.clone();
        }
        let mut pool = self.pool.clone();
        let mut x_of: BTreeMap<u32, u32> = BTreeMap::new();
        for c in &self.collapsing {
            x_of.entry(c.target).or_insert_with(|| pool.add_nt(format!("X_{}", self.state_name(c.target))));
        }
        for (_, body) in pool.prods.iter_mut() {
            for s in body.iter_mut() {
                if let Sym::T(q) = *s {
                    if let Some(&x) = x_of.get(&q) {
                        *s = Sym::N(x);
                    }
                }
            }
        }
        for (&q, &x) in &x_of {
            pool.add_prod(x, vec![Sym::T(q)]);
        }
        for c in &self.collapsing {
            pool.add_prod(x_of[&c.target], vec![Sym::N(c.start)]);
        }
        // Single letters p derivable from X_q: a term at p also sits at q.
        let cnf = pool.to_cnf();
        let mut rules = self.rules.clone();
        for (&q, &x) in &x_of {
            for p in 0..self.num_states() as u32 {
                if p == q || !cnf.accepts_setword(x, &[BTreeSet::from([p])]) {
                    continue;
                }
                for r in &self.rules {
                    if r.target == p {
                        rules.push(CfRule { label: r.label.clone(), start: r.start, target: q });
                    }
                }
            }
        }
        let out = CfHa { alphabet: self.alphabet.clone(), states: self.states.clone(), finals: self.finals.clone(), pool, rules, collapsing: Vec::new() };
        out.prune()
    }

    /// Keeps only pool material reachable from rules.
    pub fn prune(&self) -> CfHa {
        let productive = self.pool.productive(&|_| true);
        let mut reach = vec![false; self.pool.num_nts()];
        let mut stack: Vec<u32> = self.rules.iter().map(|r| r.start).chain(self.collapsing.iter().map(|c| c.start)).collect();
        for &s in &stack {
            reach[s as usize] = true;
        }
        let mut by_head: Vec<Vec<usize>> = vec![Vec::new(); self.pool.num_nts()];
        for (i, (h, _)) in self.pool.prods.iter().enumerate() {
            by_head[*h as usize].push(i);
        }
        while let Some(n) = stack.pop() {
            for &i in &by_head[n as usize] {
                for s in &self.pool.prods[i].1 {
                    if let Sym::N(m) = s {
                        if !reach[*m as usize] {
                            reach[*m as usize] = true;
                            stack.push(*m);
                        }
                    }
                }
            }
        }
        let keep = |n: u32| reach[n as usize] && productive[n as usize];
        let mut map = vec![u32::MAX; self.pool.num_nts()];
        let mut pool = Cfg::new();
        for n in 0..self.pool.num_nts() as u32 {
            if keep(n) {
                map[n as usize] = pool.add_nt(self.pool.names[n as usize].clone());
            }
        }
        for (h, b) in &self.pool.prods {
            if !keep(*h) || b.iter().any(|s| matches!(s, Sym::N(n) if !keep(*n))) {
                continue;
            }
            let body = b.iter().map(|s| if let Sym::N(n) = s { Sym::N(map[*n as usize]) } else { *s }).collect();
            pool.add_prod(map[*h as usize], body);
        }
        let rules = self.rules.iter().filter(|r| keep(r.start)).map(|r| CfRule { start: map[r.start as usize], ..r.clone() }).collect();
        let collapsing = self.collapsing.iter().filter(|c| keep(c.start)).map(|c| Collapse { start: map[c.start as usize], target: c.target }).collect();
        CfHa { alphabet: self.alphabet.clone(), states: self.states.clone(), finals: self.finals.clone(), pool, rules, collapsing }
    }

    /// Collapse-free form with its normal-form pool, ready for many queries.
    pub fn prepare(&self) -> Prepared {
        let a = self.eliminate_collapsing();
        let cnf = a.pool.to_cnf();
        Prepared { automaton: a, cnf }
    }

    pub fn member(&self, t: &Term) -> BTreeSet<u32> {
        self.prepare().member(t)
    }

    pub fn accepts(&self, t: &Term) -> bool {
        self.prepare().accepts(t)
    }

    pub fn nonempty(&self) -> Option<Term> {
        self.prepare().nonempty()
    }

    /// Product with a regular automaton on inhabited state pairs.
    pub fn intersect_ha(&self, ha: &Ha) -> CfHa {
        let c = self.eliminate_collapsing();
        let h = ha.normalize();
        let cnf = c.pool.to_cnf();
        let nh = h.num_states() as u32;
        let pair = |q: u32, p: u32| q * nh + p;
        let mut out = CfHa { alphabet: c.alphabet.intersection(&h.alphabet).cloned().collect(), ..CfHa::default() };
        for q in 0..c.num_states() as u32 {
            for p in 0..nh {
                out.add_state(&format!("{}_{}", c.state_name(q), h.state_name(p)));
                if c.finals.contains(&q) && h.finals.contains(&p) {
                    out.finals.insert(pair(q, p));
                }
            }
        }
        for hr in &h.rules {
            let crules: Vec<&CfRule> = c.rules.iter().filter(|r| r.label == hr.label).collect();
            if crules.is_empty() {
                continue;
            }
            let m = hr.horizontal.remove_epsilon().trim();
            if m.finals.is_empty() {
                continue;
            }
            let triples = bar_hillel_into(&cnf, &m, |q, p| Some(pair(q, p)), &mut out.pool);
            for cr in crules {
                let s = out.pool.add_nt("S");
                for &f in &m.finals {
                    if let Some(&x) = triples.get(&(m.initial, cr.start, f)) {
                        out.pool.add_prod(s, vec![Sym::N(x)]);
                    }
                }
                if cnf.nullable[cr.start as usize] && m.finals.contains(&m.initial) {
                    out.pool.add_prod(s, vec![]);
                }
                out.rules.push(CfRule { label: hr.label.clone(), start: s, target: pair(cr.target, hr.target) });
            }
        }
        out.restrict_to_inhabited()
    }

    /// Drops uninhabited states and rules that need them, then renumbers.
    pub fn restrict_to_inhabited(&self) -> CfHa {
        let prepared = Prepared { automaton: self.clone(), cnf: self.pool.to_cnf() };
        let best = prepared.inhabitants();
        let live: Vec<u32> = (0..self.num_states() as u32).filter(|&q| best[q as usize].is_some()).collect();
        let mut map = vec![u32::MAX; self.num_states()];
        let mut out = CfHa { alphabet: self.alphabet.clone(), ..CfHa::default() };
        for &q in &live {
            map[q as usize] = out.add_state(self.state_name(q));
            if self.finals.contains(&q) {
                out.finals.insert(map[q as usize]);
            }
        }
        let alive = |t: Letter| map[t as usize] != u32::MAX;
        let mut pool = self.pool.clone();
        pool.prods.retain(|(_, b)| b.iter().all(|s| !matches!(s, Sym::T(t) if !alive(*t))));
        out.pool = pool.map_terminals(|t| Sym::T(map[t as usize]));
        out.rules = self.rules.iter().filter(|r| alive(r.target)).map(|r| CfRule { target: map[r.target as usize], ..r.clone() }).collect();
        out.prune()
    }

    /// Rejected: the class is not closed under complement.
    pub fn complement(&self) -> Result<CfHa, Unsupported> {
        Err(Unsupported::Complement)
    }

    /// Rejected: the class is not closed under intersection.
    pub fn intersect(&self, _other: &CfHa) -> Result<CfHa, Unsupported> {
        Err(Unsupported::Intersection)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum Unsupported {
    #[error("context-free hedge automata are not closed under complementation")]
    Complement,
    #[error("context-free hedge automata are not closed under intersection")]
    Intersection,
}

/// Collapse-free automaton with its pool in weak normal form.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub automaton: CfHa,
    pub cnf: Cnf,
}

impl Prepared {
    pub fn member(&self, t: &Term) -> BTreeSet<u32> {
        let kids: Vec<BTreeSet<Letter>> = t.children.0.iter().map(|c| self.member(c)).collect();
        if kids.iter().any(BTreeSet::is_empty) {
            return BTreeSet::new();
        }
        let rules: Vec<&CfRule> = self.automaton.rules.iter().filter(|r| r.label == t.label).collect();
        if rules.is_empty() {
            return BTreeSet::new();
        }
        let derivers = self.cnf.derivers(&kids);
        rules.iter().filter(|r| derivers[r.start as usize]).map(|r| r.target).collect()
    }

    pub fn accepts(&self, t: &Term) -> bool {
        self.member(t).iter().any(|q| self.automaton.finals.contains(q))
    }

    /// Least-size witness per state.
    pub fn inhabitants(&self) -> Vec<Option<Witness>> {
        let a = &self.automaton;
        let mut best: Vec<Option<Witness>> = vec![None; a.num_states()];
        loop {
            let words = a.pool.least_words(|t| best[t as usize].as_ref().map(|w| (w.size, vec![t])));
            let mut changed = false;
            for r in &a.rules {
                let Some((_, word)) = &words[r.start as usize] else { continue };
                let kids: Vec<Term> = word.iter().map(|&q| best[q as usize].as_ref().unwrap().term.clone()).collect();
                let w = Witness::of(Term { label: r.label.clone(), children: Hedge(kids) });
                if best[r.target as usize].as_ref().is_none_or(|old| w.key() < old.key()) {
                    best[r.target as usize] = Some(w);
                    changed = true;
                }
            }
            if !changed {
                return best;
            }
        }
    }

    pub fn nonempty(&self) -> Option<Term> {
        let best = self.inhabitants();
        self.automaton
            .finals
            .iter()
            .filter_map(|&q| best[q as usize].clone())
            .min_by(|a, b| a.key().cmp(&b.key()))
            .map(|w| w.term)
    }
}

/// Maps names of one automaton's states to ids.
pub fn index_of(states: &[Symbol]) -> HashMap<Symbol, u32> {
    states.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    /// a -> qa, b -> qb, g(q) -> qf, collapse qa q? qb -> q.
    pub(crate) fn example_one() -> CfHa {
        let mut c = CfHa::new();
        let qa = c.add_state("qa");
        let qb = c.add_state("qb");
        let q = c.add_state("q");
        let qf = c.add_state("qf");
        let mut eps = Cfg::new();
        eps.start = eps.add_nt("E");
        eps.add_prod(eps.start, vec![]);
        c.add_rule(Symbol::new("a"), &eps, qa);
        c.add_rule(Symbol::new("b"), &eps, qb);
        let mut one = Cfg::new();
        one.start = one.add_nt("G");
        one.add_prod(one.start, vec![Sym::T(q)]);
        c.add_rule(Symbol::new("g"), &one, qf);
        let mut col = Cfg::new();
        col.start = col.add_nt("C");
        col.add_prod(col.start, vec![Sym::T(qa), Sym::T(qb)]);
        col.add_prod(col.start, vec![Sym::T(qa), Sym::T(q), Sym::T(qb)]);
        c.add_collapse(&col, q);
        c.finals.insert(qf);
        c
    }

    #[test]
    fn anbn_under_g() {
        let p = example_one().prepare();
        for (t, want) in [("g(a b)", true), ("g(a a b b)", true), ("g(a b a b)", false), ("g(a)", false), ("g(a b b)", false)] {
            assert_eq!(p.accepts(&parse_term(t).unwrap()), want, "{t}");
        }
        assert_eq!(p.nonempty().unwrap().to_string(), "g(a b)");
    }

    #[test]
    fn empty_collapse() {
        let mut c = CfHa::new();
        let q = c.add_state("q");
        let f = c.add_state("f");
        let mut one = Cfg::new();
        one.start = one.add_nt("G");
        one.add_prod(one.start, vec![Sym::T(q)]);
        c.add_rule(Symbol::new("g"), &one, f);
        let mut eps = Cfg::new();
        eps.start = eps.add_nt("E");
        eps.add_prod(eps.start, vec![]);
        c.add_collapse(&eps, q);
        c.finals.insert(f);
        assert!(c.accepts(&parse_term("g").unwrap()));
    }
}
