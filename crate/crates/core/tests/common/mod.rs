//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use updtype::ha::Ha;
use updtype::rules::{Ptrs, RuleKind, UpdateRule};
use updtype::term::{Hedge, Symbol, Term};
use updtype::word::Nfa;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn symbols(names: &[&str]) -> Vec<Symbol> {
    names.iter().map(|n| Symbol::new(n)).collect()
}

/// A small random word automaton over `letters` state ids.
pub fn random_nfa(rng: &mut ChaCha8Rng, letters: u32) -> Nfa {
    let n = rng.gen_range(1..=3usize);
    let mut edges = Vec::new();
    for _ in 0..rng.gen_range(0..=4) {
        let s = rng.gen_range(0..n as u32);
        let t = rng.gen_range(0..n as u32);
        let l = if rng.gen_bool(0.15) { None } else { Some(rng.gen_range(0..letters)) };
        edges.push((s, l, t));
    }
    let finals: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(0.5)).collect();
    let finals = if finals.is_empty() { vec![n as u32 - 1] } else { finals };
    Nfa::new(n, 0, finals, edges)
}

/// Random automaton with states `{prefix}0..` over `labels`.
pub fn random_ha(rng: &mut ChaCha8Rng, prefix: &str, max_states: usize, labels: &[Symbol]) -> Ha {
    let mut ha = Ha::new();
    let n = rng.gen_range(1..=max_states);
    for i in 0..n {
        ha.add_state(&format!("{prefix}{i}"));
    }
    ha.alphabet.extend(labels.iter().cloned());
    for _ in 0..rng.gen_range(n..=2 * n + 1) {
        let label = labels.choose(rng).unwrap().clone();
        let target = rng.gen_range(0..n as u32);
        let h = if rng.gen_bool(0.3) { Nfa::epsilon() } else { random_nfa(rng, n as u32) };
        ha.add_rule(label, h, target);
    }
    ha.finals.insert(rng.gen_range(0..n as u32));
    if rng.gen_bool(0.4) {
        ha.finals.insert(rng.gen_range(0..n as u32));
    }
    ha
}

pub const XACU_PLUS_KINDS: [RuleKind; 8] =
    [RuleKind::Ren, RuleKind::InsFirst, RuleKind::InsLast, RuleKind::InsInto, RuleKind::InsLeft, RuleKind::InsRight, RuleKind::Rpl, RuleKind::Dels];

pub const XACU_KINDS: [RuleKind; 6] = [RuleKind::Ren, RuleKind::InsFirst, RuleKind::InsLast, RuleKind::InsInto, RuleKind::InsLeft, RuleKind::InsRight];

/// Random rules of the given kinds; `plus` allows relabelling insertions
/// and replacements by more than one tree.
pub fn random_rules(rng: &mut ChaCha8Rng, labels: &[Symbol], params: &Ha, kinds: &[RuleKind], max_rules: usize, plus: bool) -> Ptrs {
    let np = params.num_states() as u32;
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(1..=max_rules) {
        let kind = *kinds.choose(rng).unwrap();
        let subject = labels.choose(rng).unwrap().clone();
        let other = labels.choose(rng).unwrap().clone();
        let relabel = match kind {
            RuleKind::Ren => other,
            RuleKind::InsFirst | RuleKind::InsLast if plus => other,
            _ => subject.clone(),
        };
        let nparams = match kind {
            RuleKind::Ren | RuleKind::Dels => 0,
            RuleKind::Rpl if plus => rng.gen_range(0..=2),
            RuleKind::Rpl => rng.gen_range(0..=1),
            _ => 1,
        };
        let params = (0..nparams).map(|_| rng.gen_range(0..np)).collect();
        rules.push(UpdateRule { kind, subject, relabel, context: None, params });
    }
    Ptrs::new(rules, params.clone())
}

pub fn random_term(rng: &mut ChaCha8Rng, labels: &[Symbol], max_nodes: usize) -> Term {
    fn grow(rng: &mut ChaCha8Rng, labels: &[Symbol], budget: &mut usize) -> Term {
        *budget -= 1;
        let mut kids = Vec::new();
        while *budget > 0 && rng.gen_bool(0.45) {
            kids.push(grow(rng, labels, budget));
        }
        Term::new(labels.choose(rng).unwrap().clone(), kids)
    }
    let mut budget = rng.gen_range(1..=max_nodes);
    grow(rng, labels, &mut budget)
}

pub fn seeds_of(terms: impl IntoIterator<Item = Term>) -> BTreeSet<Hedge> {
    terms.into_iter().map(Term::into_hedge).collect()
}
