//! Decision procedures on top of the closures: typechecking, ground
//! reachability, one-step forbidden successors and local inconsistency of
//! access-control policies.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::closure::{check_class, post_star_xacu, post_star_xacu_plus_ha, ClosureError};
use crate::ha::Ha;
use crate::rules::{Oracle, Ptrs, RuleClass, RuleKind, UpdateRule};
use crate::term::{render_hedge, Hedge, Symbol, Term};
use crate::word::{Letter, Nfa};

/// Replay bounds for witness re-validation.
pub const REPLAY_STEPS: usize = 6;
pub const REPLAY_NODES: usize = 40;
const REPLAY_VISITS: usize = 200_000;
const REPLAY_BUDGET: usize = 2;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error("the input and output types share no label")]
    AlphabetMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Fails,
}

/// How a witness was re-checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessCheck {
    /// Membership and a concrete rewrite sequence both confirm it.
    Replayed(Vec<Hedge>),
    /// Membership confirms it; no rewrite sequence within the replay bounds.
    Unverified,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub outcome: Outcome,
    pub witness: Option<Term>,
    pub check: Option<WitnessCheck>,
    pub explanation: Vec<String>,
    /// Results that are hedges rather than terms, kept out of the verdict.
    pub hedge_notes: Vec<String>,
}

impl Verdict {
    fn holds(explanation: Vec<String>) -> Verdict {
        Verdict { outcome: Outcome::Holds, witness: None, check: None, explanation, hedge_notes: Vec::new() }
    }

    pub fn holds_or_consistent(&self) -> bool {
        self.outcome == Outcome::Holds
    }
}

/// Allowed and forbidden rules over one parameter automaton.
#[derive(Clone, Debug)]
pub struct Policy {
    pub allowed: Ptrs,
    pub forbidden: Ptrs,
}

/// Breadth-first search for a rewrite sequence from `from` to `goal`.
pub fn replay(oracle: &Oracle, from: &Hedge, goal: &Hedge, steps: usize, max_nodes: usize) -> Option<Vec<Hedge>> {
    let mut parent: HashMap<Hedge, Option<Hedge>> = HashMap::from([(from.clone(), None)]);
    let mut frontier = vec![from.clone()];
    let mut depth = 0;
    while !parent.contains_key(goal) && depth < steps && !frontier.is_empty() && parent.len() < REPLAY_VISITS {
        let mut next = Vec::new();
        for h in &frontier {
            for s in oracle.one_step(h) {
                if s.size() <= max_nodes && !parent.contains_key(&s) {
                    parent.insert(s.clone(), Some(h.clone()));
                    next.push(s);
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    parent.get(goal)?;
    let mut path = vec![goal.clone()];
    while let Some(Some(p)) = parent.get(path.last().unwrap()) {
        path.push(p.clone());
    }
    path.reverse();
    Some(path)
}

fn replay_check(r: &Ptrs, seeds: &[Term], goal: &Term) -> WitnessCheck {
    let oracle = Oracle::with_samples(r, REPLAY_BUDGET, std::slice::from_ref(goal));
    let target = goal.clone().into_hedge();
    for s in seeds {
        if let Some(path) = replay(&oracle, &s.clone().into_hedge(), &target, REPLAY_STEPS, REPLAY_NODES) {
            return WitnessCheck::Replayed(path);
        }
    }
    WitnessCheck::Unverified
}

fn describe(check: &WitnessCheck) -> String {
    match check {
        WitnessCheck::Replayed(path) => format!("replayed: {}", path.iter().map(render_hedge).collect::<Vec<_>>().join(" => ")),
        WitnessCheck::Unverified => format!("unverified (bounds {REPLAY_STEPS} steps / {REPLAY_NODES} nodes)"),
    }
}

/// Decides post*(tau_in) ⊆ tau_out.
pub fn typecheck(r: &Ptrs, tau_in: &Ha, tau_out: &Ha) -> Result<Verdict, PolicyError> {
    check_class(r, RuleClass::XacuPlus)?;
    if !tau_in.alphabet.is_empty() && !tau_out.alphabet.is_empty() && tau_in.alphabet.is_disjoint(&tau_out.alphabet) {
        return Err(PolicyError::AlphabetMismatch);
    }
    let mut sigma: BTreeSet<Symbol> = tau_in.alphabet.union(&tau_out.alphabet).cloned().collect();
    sigma.extend(r.labels());
    sigma.extend(r.parameters.alphabet.iter().cloned());

    let mut explanation = Vec::new();
    let mut witness = None;
    if r.class() == RuleClass::Xacu {
        let post = post_star_xacu(r, tau_in)?;
        explanation.push(format!("post* (XACU): {} edges added", post.added_edges()));
        match post.automaton.inclusion_counterexample(tau_out) {
            None => return Ok(Verdict::holds(explanation)),
            Some(t) => witness = Some(t),
        }
    }
    let post = post_star_xacu_plus_ha(r, tau_in)?.automaton;
    let exact = match witness {
        // The regular construction may over-approximate; keep its witness
        // only if the exact closure agrees.
        Some(t) if post.accepts(&t) => Some(t),
        _ => {
            let outside = tau_out.complement(&sigma);
            explanation.push("post* (XACU+) intersected with the complement of the output type".into());
            post.intersect_ha(&outside).nonempty()
        }
    };
    let Some(w) = exact else {
        return Ok(Verdict::holds(explanation));
    };
    assert!(!tau_out.accepts(&w), "witness must lie outside the output type");
    let seeds: Vec<Term> = tau_in.finals.iter().flat_map(|&f| tau_in.witnesses(f, 3, w.size() + 4)).collect();
    let check = replay_check(r, &seeds, &w);
    explanation.push(describe(&check));
    Ok(Verdict { outcome: Outcome::Fails, witness: Some(w), check: Some(check), explanation, hedge_notes: Vec::new() })
}

/// Decides t →* u.
pub fn reachable(r: &Ptrs, t: &Term, u: &Term) -> Result<Verdict, PolicyError> {
    check_class(r, RuleClass::XacuPlus)?;
    let (doc, _) = document_ha(t, &r.parameters);
    let post = post_star_xacu_plus_ha(r, &doc)?.automaton;
    let mut explanation = vec![format!("post* of the singleton: {} states", post.num_states())];
    if !post.accepts(u) {
        return Ok(Verdict { outcome: Outcome::Fails, witness: None, check: None, explanation, hedge_notes: Vec::new() });
    }
    let check = replay_check(r, std::slice::from_ref(t), u);
    explanation.push(describe(&check));
    Ok(Verdict { outcome: Outcome::Holds, witness: Some(u.clone()), check: Some(check), explanation, hedge_notes: Vec::new() })
}

/// Exact singleton automaton for `t`, with state names clear of `avoid`'s.
/// Returns the states of the nodes in preorder.
pub fn document_ha(t: &Term, avoid: &Ha) -> (Ha, Vec<u32>) {
    let mut ha = Ha::new();
    let mut order = Vec::new();
    fn build(t: &Term, ha: &mut Ha, avoid: &Ha, order: &mut Vec<u32>) -> u32 {
        let slot = order.len();
        order.push(0);
        let kids: Vec<u32> = t.children.0.iter().map(|c| build(c, ha, avoid, order)).collect();
        let name = crate::ha::fresh_name(&format!("n{slot}"), |n| ha.state_id(n).is_some() || avoid.state_id(n).is_some());
        let q = ha.add_state(&name);
        ha.add_rule(t.label.clone(), word(&kids), q);
        order[slot] = q;
        q
    }
    let root = build(t, &mut ha, avoid, &mut order);
    ha.finals.insert(root);
    (ha, order)
}

/// The automaton reading exactly the letter sequence `w`.
fn word(w: &[Letter]) -> Nfa {
    let edges = w.iter().enumerate().map(|(i, &l)| (i as u32, Some(l), i as u32 + 1)).collect();
    Nfa::new(w.len() + 1, 0, [w.len() as u32], edges)
}

/// One-step successors of a fixed document.
#[derive(Clone, Debug)]
pub struct OneStep {
    pub automaton: Ha,
    /// Root rewrites whose result is not a single term.
    pub hedge_notes: Vec<String>,
}

struct Node<'t> {
    term: &'t Term,
    state: u32,
    kids: Vec<usize>,
    parent: Option<usize>,
}

/// Automaton for {u | t → u by one forbidden rule}, restricted to terms.
pub fn forbidden_one_step_ha(rf: &Ptrs, t: &Term) -> Result<OneStep, ClosureError> {
    check_class(rf, RuleClass::Xacu2Plus)?;
    let (doc, order) = document_ha(t, &rf.parameters);
    let mut nodes: Vec<Node> = Vec::new();
    fn flatten<'t>(t: &'t Term, parent: Option<usize>, nodes: &mut Vec<Node<'t>>, order: &[u32]) -> usize {
        let id = nodes.len();
        nodes.push(Node { term: t, state: order[id], kids: Vec::new(), parent });
        for c in &t.children.0 {
            let k = flatten(c, Some(id), nodes, order);
            nodes[id].kids.push(k);
        }
        id
    }
    flatten(t, None, &mut nodes, &order);

    let (mut out, pmap) = doc.disjoint_union(&rf.parameters);
    out.finals.clear();
    let names: Vec<Symbol> = rf.parameters.states.clone();
    let mut notes = Vec::new();
    for (v, node) in nodes.iter().enumerate() {
        let parent_label = node.parent.map(|p| &nodes[p].term.label);
        for rule in &rf.rules {
            if rule.subject != node.term.label || rule.context.as_ref().is_some_and(|c| Some(c) != parent_label) {
                continue;
            }
            let kids: Vec<u32> = node.kids.iter().map(|&k| nodes[k].state).collect();
            let p = |i: usize| pmap[rule.params[i] as usize];
            // The items replacing node v in its parent's child sequence.
            let items: Vec<u32> = match rule.kind {
                RuleKind::Ren | RuleKind::InsFirst | RuleKind::InsLast => {
                    let mut w = kids.clone();
                    match rule.kind {
                        RuleKind::InsFirst => w.insert(0, p(0)),
                        RuleKind::InsLast => w.push(p(0)),
                        _ => {}
                    }
                    let r = out.add_fresh_state("r");
                    out.add_rule(rule.relabel.clone(), word(&w), r);
                    vec![r]
                }
                RuleKind::InsInto => {
                    let r = out.add_fresh_state("r");
                    out.add_rule(rule.subject.clone(), insert_anywhere(&kids, p(0)), r);
                    vec![r]
                }
                RuleKind::InsLeft | RuleKind::InsLeft2 => vec![p(0), node.state],
                RuleKind::InsRight | RuleKind::InsRight2 => vec![node.state, p(0)],
                RuleKind::Rpl | RuleKind::Rpl2 => rule.params.iter().map(|&q| pmap[q as usize]).collect(),
                RuleKind::Dels | RuleKind::Dels2 => kids.clone(),
            };
            match node.parent {
                None if items.len() == 1 => {
                    out.finals.insert(items[0]);
                }
                None => notes.push(root_note(rule, &names, node, &nodes)),
                Some(parent) => {
                    let top = rebuild_path(&mut out, &nodes, parent, v, &items);
                    out.finals.insert(top);
                }
            }
        }
    }
    Ok(OneStep { automaton: out, hedge_notes: notes })
}

/// Words `kids` with one `p` inserted at any position.
fn insert_anywhere(kids: &[u32], p: u32) -> Nfa {
    let n = kids.len() as u32;
    let mut edges = Vec::new();
    for (i, &k) in kids.iter().enumerate() {
        let i = i as u32;
        edges.push((i, Some(k), i + 1));
        edges.push((n + 1 + i, Some(k), n + 2 + i));
    }
    for i in 0..=n {
        edges.push((i, Some(p), n + 1 + i));
    }
    Nfa::new(2 * n as usize + 2, 0, [2 * n + 1], edges)
}

/// Fresh copies of the ancestors of `child`, with `child` replaced by
/// `items` in `parent`. Returns the state of the copied root.
fn rebuild_path(out: &mut Ha, nodes: &[Node], parent: usize, child: usize, items: &[u32]) -> u32 {
    let (mut at, mut from, mut replacement) = (parent, child, items.to_vec());
    loop {
        let mut w = Vec::new();
        for &k in &nodes[at].kids {
            if k == from {
                w.extend(&replacement);
            } else {
                w.push(nodes[k].state);
            }
        }
        let q = out.add_fresh_state("c");
        out.add_rule(nodes[at].term.label.clone(), word(&w), q);
        match nodes[at].parent {
            None => return q,
            Some(up) => {
                replacement = vec![q];
                from = at;
                at = up;
            }
        }
    }
}

fn root_note(rule: &UpdateRule, names: &[Symbol], node: &Node, nodes: &[Node]) -> String {
    let items: Vec<String> = match rule.kind {
        RuleKind::Dels | RuleKind::Dels2 => node.kids.iter().map(|&k| nodes[k].term.to_string()).collect(),
        RuleKind::Rpl | RuleKind::Rpl2 => rule.params.iter().map(|&p| format!("<{}>", names[p as usize])).collect(),
        RuleKind::InsLeft | RuleKind::InsLeft2 => vec![format!("<{}>", names[rule.params[0] as usize]), node.term.to_string()],
        _ => vec![node.term.to_string(), format!("<{}>", names[rule.params[0] as usize])],
    };
    format!("{} at the root gives the hedge ({})", rule.render(names), items.join(" "))
}

/// Is some one-step forbidden result also reachable by allowed rules?
pub fn local_inconsistency(policy: &Policy, t: &Term) -> Result<Verdict, PolicyError> {
    check_class(&policy.allowed, RuleClass::XacuPlus)?;
    let (doc, _) = document_ha(t, &policy.allowed.parameters);
    let post = post_star_xacu_plus_ha(&policy.allowed, &doc)?.automaton;
    let forbidden = forbidden_one_step_ha(&policy.forbidden, t)?;
    let mut explanation = vec![format!(
        "allowed post*: {} states; forbidden successors: {} states",
        post.num_states(),
        forbidden.automaton.num_states()
    )];
    // A forbidden update that leaves the document unchanged is no effect
    // to simulate, so t itself is excluded.
    let mut sigma = forbidden.automaton.alphabet.clone();
    sigma.extend(post.alphabet.iter().cloned());
    t.labels(&mut sigma);
    let changed = forbidden.automaton.intersect(&Ha::singleton(t).complement(&sigma));
    let Some(u) = post.intersect_ha(&changed).nonempty() else {
        let mut v = Verdict::holds(explanation);
        v.hedge_notes = forbidden.hedge_notes;
        return Ok(v);
    };
    assert!(forbidden.automaton.accepts(&u) && post.accepts(&u), "witness must lie in both languages");
    let one = Oracle::with_samples(&policy.forbidden, REPLAY_BUDGET, std::slice::from_ref(&u)).one_step(&t.clone().into_hedge());
    explanation.push(if one.contains(&u.clone().into_hedge()) {
        "one forbidden step confirmed".into()
    } else {
        "forbidden step not reproduced with sampled parameters".into()
    });
    let check = replay_check(&policy.allowed, std::slice::from_ref(t), &u);
    explanation.push(describe(&check));
    Ok(Verdict { outcome: Outcome::Fails, witness: Some(u), check: Some(check), explanation, hedge_notes: forbidden.hedge_notes })
}
