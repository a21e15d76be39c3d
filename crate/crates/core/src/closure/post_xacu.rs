//! Forward saturation for XACU systems. All horizontal automata are laid
//! out side by side in one edge set, and rules only ever add edges to it:
//! the node count is fixed once the layout is built.
//!
//! Each case fires only for (label, state) pairs whose automaton already
//! accepts a word of inhabited letters. The result may accept more than the
//! reachable set when one horizontal node is shared by edges of different
//! top symbols; callers that need an exact answer re-check witnesses.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{check_class, join_parameters, ClosureError};
use crate::ha::Ha;
use crate::rules::{Ptrs, RuleClass, RuleKind};
use crate::term::Symbol;
use crate::word::{Graph, Letter, Nfa};

type Edge = (u32, Option<Letter>, u32);

#[derive(Clone, Debug)]
pub struct PostStarHa {
    pub automaton: Ha,
    /// Added edge of the shared layout, with the index of the rule behind it.
    pub provenance: BTreeMap<Edge, usize>,
    /// Edges present before saturation.
    pub initial_edges: usize,
    /// Node count of the shared layout, identical before and after.
    pub horizontal_states: usize,
    pub rounds: usize,
}

impl PostStarHa {
    pub fn added_edges(&self) -> usize {
        self.provenance.len()
    }
}

struct Layout {
    num_nodes: usize,
    edges: BTreeSet<Edge>,
    out: Vec<Vec<(Option<Letter>, u32)>>,
    by_letter: BTreeMap<Letter, Vec<(u32, u32)>>,
}

impl Layout {
    fn insert(&mut self, e: Edge) -> bool {
        if !self.edges.insert(e) {
            return false;
        }
        self.out[e.0 as usize].push((e.1, e.2));
        if let Some(l) = e.1 {
            self.by_letter.entry(l).or_default().push((e.0, e.2));
        }
        true
    }

    fn reach(&self, from: u32, allowed: impl Fn(Letter) -> bool) -> BTreeSet<u32> {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            for &(l, t) in &self.out[s as usize] {
                if l.is_none_or(&allowed) && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    }
}

pub fn post_star_xacu(r: &Ptrs, l: &Ha) -> Result<PostStarHa, ClosureError> {
    check_class(r, RuleClass::Xacu)?;
    let (joined, pmap) = join_parameters(l, &r.parameters);
    let mut labels: BTreeSet<Symbol> = joined.alphabet.clone();
    labels.extend(r.labels());
    let nq = joined.num_states() as u32;

    // Lay out every distinct graph once; rules on one graph share nodes.
    let mut graphs: Vec<(Arc<Graph>, u32)> = Vec::new();
    let mut num_nodes = 0u32;
    let mut ends: BTreeMap<(Symbol, u32), (u32, u32)> = BTreeMap::new();
    let present: BTreeSet<(Symbol, u32)> = joined.rules.iter().map(|r| (r.label.clone(), r.target)).collect();
    for rule in &joined.rules {
        let h = rule.horizontal.single_final();
        let base = match graphs.iter().find(|(g, _)| Arc::ptr_eq(g, &h.graph)) {
            Some(&(_, base)) => base,
            None => {
                graphs.push((h.graph.clone(), num_nodes));
                num_nodes += h.graph.num_states as u32;
                num_nodes - h.graph.num_states as u32
            }
        };
        let fin = *h.finals.iter().next().unwrap();
        ends.insert((rule.label.clone(), rule.target), (base + h.initial, base + fin));
    }
    for a in &labels {
        for q in 0..nq {
            ends.entry((a.clone(), q)).or_insert_with(|| {
                num_nodes += 2;
                (num_nodes - 2, num_nodes - 1)
            });
        }
    }
    let mut lay = Layout { num_nodes: num_nodes as usize, edges: BTreeSet::new(), out: vec![Vec::new(); num_nodes as usize], by_letter: BTreeMap::new() };
    for (g, base) in &graphs {
        for &(s, l, t) in &g.edges {
            lay.insert((s + base, l, t + base));
        }
    }
    let initial_edges = lay.edges.len();

    let mut provenance = BTreeMap::new();
    let mut nonempty: BTreeSet<(Symbol, u32)> = BTreeSet::new();
    let mut inhabited = vec![false; nq as usize];
    let mut finals = l.finals.clone();
    let mut rounds = 0;
    loop {
        rounds += 1;
        // Inhabitation over the current edge set, to a fixpoint.
        loop {
            let mut changed = false;
            for (key, &(i, f)) in &ends {
                if nonempty.contains(key) {
                    continue;
                }
                if lay.reach(i, |x| inhabited[x as usize]).contains(&f) {
                    nonempty.insert(key.clone());
                    inhabited[key.1 as usize] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut fresh: Vec<(Edge, usize)> = Vec::new();
        for (ri, rule) in r.rules.iter().enumerate() {
            let a = &rule.subject;
            let p = rule.params.first().map(|&p| pmap[p as usize]);
            for q in 0..nq {
                if !nonempty.contains(&(a.clone(), q)) {
                    continue;
                }
                let (i, f) = ends[&(a.clone(), q)];
                let via_q = || lay.by_letter.get(&q).cloned().unwrap_or_default();
                match rule.kind {
                    RuleKind::Ren => {
                        let (ib, fb) = ends[&(rule.relabel.clone(), q)];
                        fresh.push(((ib, None, i), ri));
                        fresh.push(((f, None, fb), ri));
                    }
                    RuleKind::InsFirst => fresh.push(((i, p, i), ri)),
                    RuleKind::InsLast => fresh.push(((f, p, f), ri)),
                    RuleKind::InsInto => {
                        for s in lay.reach(i, |_| true) {
                            fresh.push(((s, p, s), ri));
                        }
                    }
                    RuleKind::InsLeft => fresh.extend(via_q().into_iter().map(|(s, _)| ((s, p, s), ri))),
                    RuleKind::InsRight => fresh.extend(via_q().into_iter().map(|(_, t)| ((t, p, t), ri))),
                    RuleKind::Rpl => fresh.extend(via_q().into_iter().map(|(s, t)| ((s, p, t), ri))),
                    _ => unreachable!("class checked"),
                }
            }
        }
        let mut grew = false;
        for p in root_survivors(r, &pmap, &nonempty, &finals) {
            grew |= finals.insert(p);
        }
        for (e, ri) in fresh {
            if lay.insert(e) {
                provenance.insert(e, ri);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let graph = Arc::new(Graph::new(lay.num_nodes, lay.edges.iter().copied().collect()));
    let mut automaton = Ha { alphabet: labels, states: joined.states.clone(), finals, rules: Vec::new() };
    for ((a, q), &(i, f)) in &ends {
        // Uninhabited input rules are kept so a rerun finds its parameters
        // already covered.
        if nonempty.contains(&(a.clone(), *q)) || present.contains(&(a.clone(), *q)) {
            automaton.add_rule(a.clone(), Nfa::on_graph(graph.clone(), i, [f]), *q);
        }
    }
    log::debug!("post* (XACU): {} edges added over {} layout nodes", provenance.len(), lay.num_nodes);
    Ok(PostStarHa { automaton, provenance, initial_edges, horizontal_states: lay.num_nodes, rounds })
}

/// States whose trees can end up alone at the root. The root hedge only
/// changes by replacing a root, or by inserting a sibling next to it and
/// later deleting that anchor.
fn root_survivors(r: &Ptrs, pmap: &[u32], nonempty: &BTreeSet<(Symbol, u32)>, finals: &BTreeSet<u32>) -> BTreeSet<u32> {
    let has = |a: &Symbol, q: u32| nonempty.contains(&(a.clone(), q));
    // Labels reachable from each label by renaming, reflexively.
    let renames = |a: &Symbol| {
        let mut seen = BTreeSet::from([a.clone()]);
        let mut stack = vec![a.clone()];
        while let Some(x) = stack.pop() {
            for u in r.rules.iter().filter(|u| u.kind == RuleKind::Ren && u.subject == x) {
                if seen.insert(u.relabel.clone()) {
                    stack.push(u.relabel.clone());
                }
            }
        }
        seen
    };
    let labels: BTreeSet<Symbol> = nonempty.iter().map(|(a, _)| a.clone()).collect();
    let closure: BTreeMap<Symbol, BTreeSet<Symbol>> = labels.iter().map(|a| (a.clone(), renames(a))).collect();

    // A tree labelled `a` can be removed from the root hedge.
    let mut vanishing_labels: BTreeSet<Symbol> = BTreeSet::new();
    let mut vanishing_states: BTreeSet<u32> = BTreeSet::new();
    loop {
        let mut changed = false;
        for a in &labels {
            if vanishing_labels.contains(a) {
                continue;
            }
            let gone = closure[a].iter().any(|b| {
                r.rules.iter().filter(|u| u.kind == RuleKind::Rpl && &u.subject == b).any(|u| u.params.first().is_none_or(|&p| vanishing_states.contains(&pmap[p as usize])))
            });
            if gone {
                vanishing_labels.insert(a.clone());
                changed = true;
            }
        }
        for (a, q) in nonempty {
            if vanishing_labels.contains(a) {
                changed |= vanishing_states.insert(*q);
            }
        }
        if !changed {
            break;
        }
    }

    let mut alone = finals.clone();
    let mut stack: Vec<u32> = alone.iter().copied().collect();
    while let Some(q) = stack.pop() {
        for u in &r.rules {
            if !has(&u.subject, q) {
                continue;
            }
            let next = match (u.kind, u.params.first()) {
                (RuleKind::Rpl, Some(&p)) => Some(p),
                (RuleKind::InsLeft | RuleKind::InsRight, Some(&p)) if vanishing_labels.contains(&u.subject) => Some(p),
                _ => None,
            };
            if let Some(p) = next.map(|p| pmap[p as usize]) {
                if alone.insert(p) {
                    stack.push(p);
                }
            }
        }
    }
    alone
}
