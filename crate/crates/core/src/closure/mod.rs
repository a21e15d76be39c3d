//! Saturation constructions for the reachable sets of update systems.

mod post_plus;
mod post_xacu;
mod pre;

use thiserror::Error;

use crate::cfha::CfHa;
use crate::ha::Ha;
use crate::rules::{classify, Ptrs, RuleClass};
use crate::word::Cfg;

pub use post_plus::{post_star_xacu_plus, post_star_xacu_plus_ha, PostStarCfHa};
pub use post_xacu::{post_star_xacu, PostStarHa};
pub use pre::{pre_star, PreStar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosureError {
    #[error("rule \"{rule}\" is outside {allowed}: this construction does not cover it")]
    RuleClass { rule: String, allowed: RuleClass },
    #[error("no post* construction for XACU2 context rules (rule \"{rule}\")")]
    ContextRule { rule: String },
}

/// Fails on the first rule above `allowed`.
pub fn check_class(r: &Ptrs, allowed: RuleClass) -> Result<(), ClosureError> {
    if classify(&r.rules) <= allowed {
        return Ok(());
    }
    let bad = r.rules.iter().find(|x| x.class() > allowed).unwrap();
    let rule = bad.render(&r.parameters.states);
    if bad.class() == RuleClass::Xacu2Plus {
        Err(ClosureError::ContextRule { rule })
    } else {
        Err(ClosureError::RuleClass { rule, allowed })
    }
}

/// Joins `l` and the parameter automaton, identifying states that share a
/// name. A parameter rule whose language is already covered by the rule of
/// `l` for the same label and state is dropped, so an automaton produced by
/// a saturation run meets its parameters unchanged. Returns the joined
/// automaton (normalized, finals of `l`) and the parameter state map.
pub fn join_parameters(l: &Ha, params: &Ha) -> (Ha, Vec<u32>) {
    let mut out = l.normalize();
    let map: Vec<u32> = params
        .states
        .iter()
        .map(|s| out.state_id(s.as_str()).unwrap_or_else(|| out.add_state(s.as_str())))
        .collect();
    out.alphabet.extend(params.alphabet.iter().cloned());
    let letters = out.all_letters();
    let mut extra = Vec::new();
    for r in &params.normalize().rules {
        let target = map[r.target as usize];
        let h = r.horizontal.map_letters(|x| map[x as usize]);
        let covered = out.rules.iter().any(|o| o.label == r.label && o.target == target && h.included(&o.horizontal, &letters));
        if !covered {
            extra.push((r.label.clone(), h, target));
        }
    }
    if extra.is_empty() {
        return (out, map);
    }
    for (label, h, target) in extra {
        out.add_rule(label, h, target);
    }
    (out.normalize(), map)
}

/// The context-free counterpart of [`join_parameters`].
pub fn join_parameters_cf(l: &CfHa, params: &Ha) -> (CfHa, Vec<u32>) {
    let mut out = l.eliminate_collapsing();
    let map: Vec<u32> = params
        .states
        .iter()
        .map(|s| out.state_id(s.as_str()).unwrap_or_else(|| out.add_state(s.as_str())))
        .collect();
    out.alphabet.extend(params.alphabet.iter().cloned());
    for r in &params.rules {
        let g = Cfg::from_nfa(&r.horizontal.map_letters(|x| map[x as usize]));
        out.add_rule(r.label.clone(), &g, map[r.target as usize]);
    }
    (out, map)
}
