mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use updtype::closure::{post_star_xacu, post_star_xacu_plus_ha, pre_star};
use updtype::ha::Ha;
use updtype::policy::{forbidden_one_step_ha, local_inconsistency, Outcome, Policy};
use updtype::rules::{Oracle, Ptrs};
use updtype::term::{enumerate_terms, parse_hedge, render_hedge, Symbol, Term};
use updtype::workspace::{write_ha, Automaton, Workspace};

fn sigma(labels: &[Symbol]) -> BTreeSet<Symbol> {
    labels.iter().cloned().collect()
}

fn same_language(a: &Ha, b: &Ha, terms: &[Term]) -> Result<(), TestCaseError> {
    for t in terms {
        prop_assert_eq!(a.accepts(t), b.accepts(t), "{}", t);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn terms_render_and_parse_back(seed in any::<u64>()) {
        let labels = symbols(&["a", "b", "c'"]);
        let mut rng = rng(seed);
        let h: Vec<Term> = (0..3).map(|_| random_term(&mut rng, &labels, 8)).collect();
        let h = updtype::term::Hedge(h);
        prop_assert_eq!(parse_hedge(&render_hedge(&h)).unwrap(), h);
    }

    #[test]
    fn normal_forms_keep_the_language(seed in any::<u64>()) {
        let labels = symbols(&["a", "b"]);
        let a = random_ha(&mut rng(seed), "q", 3, &labels);
        let terms = enumerate_terms(&sigma(&labels), 4);
        same_language(&a, &a.normalize(), &terms)?;
        same_language(&a, &a.complete().0, &terms)?;
        same_language(&a, &a.top_symbol_refine(), &terms)?;
        prop_assert!(a.normalize().is_normalized());
    }

    #[test]
    fn complement_is_an_involution(seed in any::<u64>()) {
        let labels = symbols(&["a", "b"]);
        let s = sigma(&labels);
        let a = random_ha(&mut rng(seed), "q", 3, &labels);
        let terms = enumerate_terms(&s, 4);
        same_language(&a, &a.complement(&s).complement(&s), &terms)?;
        prop_assert!(a.intersect(&a.complement(&s)).is_empty());
    }

    #[test]
    fn emptiness_witness_is_a_member(seed in any::<u64>()) {
        let labels = symbols(&["a", "b", "c"]);
        let a = random_ha(&mut rng(seed), "q", 4, &labels);
        match a.nonempty() {
            Some(t) => prop_assert!(a.accepts(&t)),
            None => prop_assert!(enumerate_terms(&sigma(&labels), 4).iter().all(|t| !a.accepts(t))),
        }
    }

    #[test]
    fn written_automata_load_back(seed in any::<u64>()) {
        let labels = symbols(&["a", "b"]);
        let a = random_ha(&mut rng(seed), "q", 3, &labels);
        let ws = Workspace::parse_str(&write_ha("typed", &a)).unwrap();
        let Automaton::Regular(b) = ws.automaton("typed").unwrap() else { panic!("expected a regular automaton") };
        same_language(&a, b, &enumerate_terms(&sigma(&labels), 4))?;
    }

    #[test]
    fn inclusion_matches_enumeration(seed in any::<u64>()) {
        let labels = symbols(&["a", "b"]);
        let mut rng = rng(seed);
        let a = random_ha(&mut rng, "q", 3, &labels);
        let b = random_ha(&mut rng, "r", 3, &labels);
        match a.inclusion_counterexample(&b) {
            Some(t) => prop_assert!(a.accepts(&t) && !b.accepts(&t)),
            None => prop_assert!(enumerate_terms(&sigma(&labels), 4).iter().all(|t| !a.accepts(t) || b.accepts(t))),
        }
    }
}

fn system(seed: u64, kinds: &[updtype::rules::RuleKind], plus: bool) -> (Vec<Symbol>, Ha, Ptrs) {
    let labels = symbols(&["a", "b", "c"]);
    let mut rng = rng(seed);
    let k = 1 + (seed % 3) as usize;
    let labels = labels[..k].to_vec();
    let l = random_ha(&mut rng, "q", 3, &labels);
    let params = random_ha(&mut rng, "p", 2, &labels);
    let r = random_rules(&mut rng, &labels, &params, kinds, 3, plus);
    (labels, l, r)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn closures_contain_their_input(seed in any::<u64>()) {
        let (labels, l, r) = system(seed, &XACU_PLUS_KINDS, true);
        let post = post_star_xacu_plus_ha(&r, &l).unwrap().automaton.prepare();
        let pre = pre_star(&r, &l).unwrap().automaton;
        for t in enumerate_terms(&sigma(&labels), 4).iter().filter(|t| l.accepts(t)) {
            prop_assert!(post.accepts(t), "post* lost {}", t);
            prop_assert!(pre.accepts(t), "pre* lost {}", t);
        }
    }

    #[test]
    fn xacu_closure_is_monotone(seed in any::<u64>()) {
        let (labels, l, r) = system(seed, &XACU_KINDS, false);
        let wider = l.union(&random_ha(&mut rng(seed ^ 0x5eed), "s", 2, &labels));
        let small = post_star_xacu(&r, &l).unwrap().automaton;
        let large = post_star_xacu(&r, &wider).unwrap().automaton;
        for t in enumerate_terms(&sigma(&labels), 4).iter().filter(|t| small.accepts(t)) {
            prop_assert!(large.accepts(t), "{}", t);
        }
    }

    #[test]
    fn one_step_automaton_agrees_with_rewriting(seed in any::<u64>()) {
        let (labels, _, r) = system(seed, &XACU_PLUS_KINDS, true);
        let t = random_term(&mut rng(seed.wrapping_add(1)), &labels, 4);
        let m = forbidden_one_step_ha(&r, &t).unwrap().automaton;
        let sampled = Oracle::new(&r, 2).one_step(&t.clone().into_hedge());
        for u in sampled.iter().filter_map(|h| h.as_term()) {
            prop_assert!(m.accepts(u), "{} missing", u);
        }
        for u in enumerate_terms(&sigma(&labels), t.size() + 2).iter().filter(|u| m.accepts(u)) {
            let around_u = Oracle::with_samples(&r, 2, std::slice::from_ref(u)).one_step(&t.clone().into_hedge());
            prop_assert!(around_u.contains(&u.clone().into_hedge()), "{} is not one step from {}", u, t);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn more_allowed_rules_keep_an_inconsistency(seed in any::<u64>()) {
        let (labels, _, allowed) = system(seed, &XACU_PLUS_KINDS, true);
        let extra = random_rules(&mut rng(seed ^ 0xa11), &labels, &allowed.parameters, &XACU_PLUS_KINDS, 2, true);
        let forbidden = random_rules(&mut rng(seed ^ 0xf0b), &labels, &allowed.parameters, &XACU_PLUS_KINDS, 2, true);
        let t = random_term(&mut rng(seed ^ 0xd0c), &labels, 4);
        let mut more = allowed.clone();
        more.rules.extend(extra.rules);
        let narrow = local_inconsistency(&Policy { allowed, forbidden: forbidden.clone() }, &t).unwrap();
        let wide = local_inconsistency(&Policy { allowed: more, forbidden }, &t).unwrap();
        prop_assert!(narrow.outcome == Outcome::Holds || wide.outcome == Outcome::Fails);
    }
}
