mod common;

use common::*;
use updtype::closure::{post_star_xacu, post_star_xacu_plus_ha, pre_star};
use updtype::ha::Ha;
use updtype::rules::Oracle;
use updtype::term::render_hedge;

#[test]
fn pre_star_agrees_with_forward_closure() {
    let labels = symbols(&["a", "b", "c"]);
    for seed in 0..150 {
        let mut rng = rng(seed);
        let k = 1 + seed as usize % 3;
        let l = random_ha(&mut rng, "q", 4, &labels[..k]);
        let params = random_ha(&mut rng, "p", 2, &labels[..k]);
        let r = random_rules(&mut rng, &labels[..k], &params, &XACU_PLUS_KINDS, 4, true);
        let pre = pre_star(&r, &l).unwrap().automaton;
        for _ in 0..6 {
            let t = random_term(&mut rng, &labels[..k], 6);
            let post = post_star_xacu_plus_ha(&r, &Ha::singleton(&t)).unwrap().automaton;
            let forward = post.intersect_ha(&l).nonempty().is_some();
            assert_eq!(pre.accepts(&t), forward, "seed {seed} term {} rules\n{}", render_hedge(&t.clone().into_hedge()), r.render());
        }
    }
}

#[test]
fn forward_closures_cover_bounded_rewriting() {
    let labels = symbols(&["a", "b", "c"]);
    for seed in 0..150 {
        let mut rng = rng(seed);
        let k = 1 + seed as usize % 3;
        let l = random_ha(&mut rng, "q", 4, &labels[..k]);
        let params = random_ha(&mut rng, "p", 2, &labels[..k]);
        let r = random_rules(&mut rng, &labels[..k], &params, &XACU_PLUS_KINDS, 4, true);
        let seeds = seeds_of(l.finals.iter().flat_map(|&f| l.witnesses(f, 3, 6)));
        let reach = Oracle::new(&r, 2).bounded_closure(&seeds, 4, 14);
        let post = post_star_xacu_plus_ha(&r, &l).unwrap().automaton;
        for h in &reach {
            if let Some(t) = h.as_term() {
                assert!(post.accepts(t), "seed {seed}: {} missing", render_hedge(h));
            }
        }
        if r.class() == updtype::rules::RuleClass::Xacu {
            let post = post_star_xacu(&r, &l).unwrap();
            for h in &reach {
                if let Some(t) = h.as_term() {
                    assert!(post.automaton.accepts(t), "seed {seed}: {} missing (XACU)", render_hedge(h));
                }
            }
            let again = post_star_xacu(&r, &post.automaton).unwrap();
            assert_eq!(again.added_edges(), 0, "seed {seed}");
        }
    }
}
