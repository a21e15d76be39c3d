//! Backward saturation: an automaton for every hedge that rewrites into the
//! input language.
//!
//! The input is completed and refined so each state has one top symbol. A
//! result state is a pair (family, label): the terms with that root label
//! which can evolve into the family's target. Families are either an input
//! state, or a segment family `D(O, x, y)`: single items that can evolve
//! into a hedge reading from node x to node y of horizontal object O.
//!
//! A horizontal object is an input horizontal automaton together with the
//! set of labels its parent node carries over its history; the object only
//! ever gains edges (ε-edges for INSI, segment edges for D families), which
//! are inherited by objects with larger label sets.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use super::{check_class, ClosureError};
use crate::ha::{fresh_name, Ha};
use crate::rules::{Ptrs, RuleClass, RuleKind, UpdateRule};
use crate::term::Symbol;
use crate::word::{Graph, Letter, Nfa};

#[derive(Clone, Debug)]
pub struct PreStar {
    pub automaton: Ha,
    /// Edges added to the horizontal automaton of each input rule, keyed by
    /// (label, target state) of the refined input.
    pub augmentations: BTreeMap<(Symbol, Symbol), BTreeSet<String>>,
    /// Number of segment families created.
    pub families: usize,
    pub rounds: usize,
}

type Fam = u32;
type Lab = u8;
type Obj = u32;
/// (family, root label, object, from node, to node).
type Trans = (Fam, Lab, Obj, u32, u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Family {
    Base(u32),
    Segment(Obj, u32, u32),
}

struct Object {
    base: usize,
    labels: u64,
    edges: BTreeSet<(u32, Option<Fam>, u32)>,
    out: Vec<Vec<(Option<Fam>, u32)>>,
}

impl Object {
    fn closure(&self, from: u32) -> BTreeSet<u32> {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            for &(l, t) in &self.out[s as usize] {
                if l.is_none() && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    }

    fn reachable(&self, from: u32) -> BTreeSet<u32> {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            for &(_, t) in &self.out[s as usize] {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// Pairs (x, y) read by one lettered edge, with ε-moves on both sides.
    fn single_steps(&self) -> Vec<(u32, Fam, u32)> {
        let n = self.out.len() as u32;
        let mut out = Vec::new();
        for x in 0..n {
            for w in self.closure(x) {
                for &(l, z) in &self.out[w as usize] {
                    if let Some(f) = l {
                        for y in self.closure(z) {
                            out.push((x, f, y));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

struct Saturation<'a> {
    labels: Vec<Symbol>,
    label_of: BTreeMap<Symbol, Lab>,
    rules: &'a [UpdateRule],
    params: Ha,
    /// Input horizontal automata: (label, graph, initial, finals, target).
    bases: Vec<(Lab, Arc<Graph>, u32, BTreeSet<u32>, u32)>,
    top: Vec<Option<Lab>>,
    families: Vec<Family>,
    family_id: HashMap<Family, Fam>,
    objects: Vec<Object>,
    object_id: HashMap<(usize, u64), Obj>,
    trans: Vec<Trans>,
    trans_set: HashSet<Trans>,
    by_target: HashMap<(Fam, Lab), Vec<usize>>,
    incl_all: HashMap<Fam, BTreeSet<Fam>>,
    incl_lab: HashMap<(Fam, Lab), BTreeSet<Fam>>,
    /// Joint inhabitation of (family, label) with parameter states.
    po: HashSet<(Fam, Lab, u32)>,
    po_fam: HashSet<(Fam, u32)>,
    /// The sequence of roots, one edge per final state; never has a parent
    /// label, so only sibling rules apply in it.
    top_object: Obj,
    changed: bool,
}

impl Saturation<'_> {
    fn lab(&self, s: &Symbol) -> Lab {
        self.label_of[s]
    }

    fn object(&mut self, base: usize, labels: u64) -> Obj {
        if let Some(&o) = self.object_id.get(&(base, labels)) {
            return o;
        }
        let g = self.bases[base].1.clone();
        let mut obj = Object { base, labels, edges: BTreeSet::new(), out: vec![Vec::new(); g.num_states] };
        for &(s, l, t) in &g.edges {
            if obj.edges.insert((s, l, t)) {
                obj.out[s as usize].push((l, t));
            }
        }
        // Inherit from objects with fewer labels on the same base.
        for other in &self.objects {
            if other.base == base && other.labels & !labels == 0 {
                for &e in &other.edges {
                    if obj.edges.insert(e) {
                        obj.out[e.0 as usize].push((e.1, e.2));
                    }
                }
            }
        }
        let id = self.objects.len() as Obj;
        self.objects.push(obj);
        self.object_id.insert((base, labels), id);
        self.changed = true;
        id
    }

    fn add_edge(&mut self, o: Obj, e: (u32, Option<Fam>, u32)) {
        let (base, labels) = (self.objects[o as usize].base, self.objects[o as usize].labels);
        for obj in self.objects.iter_mut() {
            if obj.base == base && labels & !obj.labels == 0 && obj.edges.insert(e) {
                obj.out[e.0 as usize].push((e.1, e.2));
                self.changed = true;
            }
        }
    }

    fn segment(&mut self, o: Obj, x: u32, y: u32) -> Fam {
        let key = Family::Segment(o, x, y);
        if let Some(&f) = self.family_id.get(&key) {
            return f;
        }
        let f = self.families.len() as Fam;
        self.families.push(key);
        self.family_id.insert(key, f);
        self.add_edge(o, (x, Some(f), y));
        self.changed = true;
        f
    }

    fn add_trans(&mut self, t: Trans) {
        let mut queue = VecDeque::from([t]);
        while let Some(t) = queue.pop_front() {
            if !self.trans_set.insert(t) {
                continue;
            }
            self.changed = true;
            self.by_target.entry((t.0, t.1)).or_default().push(self.trans.len());
            self.trans.push(t);
            let mut up: BTreeSet<Fam> = self.incl_all.get(&t.0).cloned().unwrap_or_default();
            up.extend(self.incl_lab.get(&(t.0, t.1)).cloned().unwrap_or_default());
            for x in up {
                queue.push_back((x, t.1, t.2, t.3, t.4));
            }
        }
    }

    /// `big` accepts every term of `small` (for label `lab`, or all labels).
    fn include(&mut self, big: Fam, small: Fam, lab: Option<Lab>) {
        if big == small {
            return;
        }
        let fresh = match lab {
            None => self.incl_all.entry(small).or_default().insert(big),
            Some(d) => self.incl_lab.entry((small, d)).or_default().insert(big),
        };
        if !fresh {
            return;
        }
        self.changed = true;
        let labs: Vec<Lab> = match lab {
            None => (0..self.labels.len() as Lab).collect(),
            Some(d) => vec![d],
        };
        for d in labs {
            let existing: Vec<Trans> = self.by_target.get(&(small, d)).map(|v| v.iter().map(|&i| self.trans[i]).collect()).unwrap_or_default();
            for t in existing {
                self.add_trans((big, t.1, t.2, t.3, t.4));
            }
        }
    }

    /// Nodes y such that some term of parameter state p evolves into a
    /// segment from x to y of object o.
    fn step(&self, o: Obj, x: u32, p: u32) -> BTreeSet<u32> {
        let obj = &self.objects[o as usize];
        let mut out = BTreeSet::new();
        for w in obj.closure(x) {
            for &(l, z) in &obj.out[w as usize] {
                if let Some(f) = l {
                    if self.po_fam.contains(&(f, p)) {
                        out.extend(obj.closure(z));
                    }
                }
            }
        }
        out
    }

    fn step_seq(&self, o: Obj, x: u32, ps: &[u32]) -> BTreeSet<u32> {
        let mut cur = self.objects[o as usize].closure(x);
        for &p in ps {
            cur = cur.iter().flat_map(|&s| self.step(o, s, p)).collect();
        }
        cur
    }

    /// Joint inhabitation with the parameter automaton, to a fixpoint.
    fn compute_po(&mut self) {
        let prules: Vec<(Lab, Nfa, u32)> = self
            .params
            .rules
            .iter()
            .filter_map(|r| self.label_of.get(&r.label).map(|&l| (l, r.horizontal.clone(), r.target)))
            .collect();
        loop {
            let mut grew = false;
            for i in 0..self.trans.len() {
                let (fam, lab, o, s, f) = self.trans[i];
                for (pl, m, pi) in &prules {
                    if *pl != lab || self.po.contains(&(fam, lab, *pi)) {
                        continue;
                    }
                    if self.joint_path(o, s, f, m) {
                        self.po.insert((fam, lab, *pi));
                        self.po_fam.insert((fam, *pi));
                        grew = true;
                    }
                }
            }
            if !grew {
                return;
            }
        }
    }

    fn joint_path(&self, o: Obj, s: u32, f: u32, m: &Nfa) -> bool {
        let obj = &self.objects[o as usize];
        let mut seen = HashSet::from([(s, m.initial)]);
        let mut stack = vec![(s, m.initial)];
        while let Some((x, y)) = stack.pop() {
            if x == f && m.finals.contains(&y) {
                return true;
            }
            let mut push = |p: (u32, u32)| {
                if seen.insert(p) {
                    stack.push(p);
                }
            };
            for &(l, x2) in &obj.out[x as usize] {
                match l {
                    None => push((x2, y)),
                    Some(fam) => {
                        for &(ml, y2) in m.graph.out(y as usize) {
                            if let Some(pi) = ml {
                                if self.po_fam.contains(&(fam, pi)) {
                                    push((x2, y2));
                                }
                            }
                        }
                    }
                }
            }
            for &(ml, y2) in m.graph.out(y as usize) {
                if ml.is_none() {
                    push((x, y2));
                }
            }
        }
        false
    }

    fn round(&mut self) {
        let has_sibling = self.rules.iter().any(|r| {
            matches!(
                r.kind,
                RuleKind::InsLeft | RuleKind::InsRight | RuleKind::Rpl | RuleKind::Dels | RuleKind::InsLeft2 | RuleKind::InsRight2 | RuleKind::Rpl2 | RuleKind::Dels2
            )
        });
        let rules = self.rules;
        let param = |r: &UpdateRule, i: usize| r.params[i];

        // Root rewrites, read backwards on every transition.
        let snapshot: Vec<Trans> = self.trans.clone();
        for &(fam, b, o, s, f) in &snapshot {
            let (base, set) = (self.objects[o as usize].base, self.objects[o as usize].labels);
            for r in rules {
                if self.lab(&r.relabel) != b {
                    continue;
                }
                let a = self.lab(&r.subject);
                let o2 = self.object(base, set | (1 << a));
                match r.kind {
                    RuleKind::Ren => self.add_trans((fam, a, o2, s, f)),
                    RuleKind::InsFirst => {
                        for s1 in self.step(o, s, param(r, 0)) {
                            self.add_trans((fam, a, o2, s1, f));
                        }
                    }
                    RuleKind::InsLast => {
                        let n = self.objects[o as usize].out.len() as u32;
                        for f1 in 0..n {
                            if self.step(o, f1, param(r, 0)).contains(&f) {
                                self.add_trans((fam, a, o2, s, f1));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }

        // Per object: insertions into children, then segment families.
        let mut o = 0;
        while o < self.objects.len() as Obj {
            let n = self.objects[o as usize].out.len() as u32;
            let set = self.objects[o as usize].labels;
            let into: Vec<&UpdateRule> = rules.iter().filter(|r| r.kind == RuleKind::InsInto && set & (1 << self.lab(&r.subject)) != 0).collect();
            let active: Vec<&UpdateRule> = rules.iter().filter(|r| r.context.as_ref().is_none_or(|c| set & (1 << self.lab(c)) != 0)).collect();
            for r in into {
                for x in 0..n {
                    for y in self.step(o, x, param(r, 0)) {
                        self.add_edge(o, (x, None, y));
                    }
                }
            }
            if has_sibling || o == self.top_object {
                for x in 0..n {
                    for y in self.objects[o as usize].reachable(x) {
                        self.segment(o, x, y);
                    }
                }
                for (x, g, y) in self.objects[o as usize].single_steps() {
                    let d = self.segment(o, x, y);
                    self.include(d, g, None);
                }
                for x in 0..n {
                    for y in self.objects[o as usize].reachable(x) {
                        let d = self.segment(o, x, y);
                        for &r in &active {
                            let lab = self.lab(&r.subject);
                            match r.kind {
                                RuleKind::Dels | RuleKind::Dels2 => {
                                    let base = self.objects[o as usize].base;
                                    let o2 = self.object(base, set | (1 << lab));
                                    self.add_trans((d, lab, o2, x, y));
                                }
                                RuleKind::InsLeft | RuleKind::InsLeft2 => {
                                    for x1 in self.step(o, x, param(r, 0)) {
                                        if self.objects[o as usize].reachable(x1).contains(&y) {
                                            let inner = self.segment(o, x1, y);
                                            self.include(d, inner, Some(lab));
                                        }
                                    }
                                }
                                RuleKind::InsRight | RuleKind::InsRight2 => {
                                    for y1 in self.objects[o as usize].reachable(x) {
                                        if self.step(o, y1, param(r, 0)).contains(&y) {
                                            let inner = self.segment(o, x, y1);
                                            self.include(d, inner, Some(lab));
                                        }
                                    }
                                }
                                RuleKind::Rpl | RuleKind::Rpl2 => {
                                    if self.step_seq(o, x, &r.params).contains(&y) {
                                        for q in 0..self.top.len() as u32 {
                                            if self.top[q as usize] == Some(lab) {
                                                self.include(d, q, Some(lab));
                                            }
                                        }
                                    }
                                }
                                _ => {}
                            }
                        }
                    }
                }
            }
            o += 1;
        }
    }
}

pub fn pre_star(r: &Ptrs, l: &Ha) -> Result<PreStar, ClosureError> {
    check_class(r, RuleClass::Xacu2Plus)?;
    let mut sigma: BTreeSet<Symbol> = l.alphabet.clone();
    sigma.extend(r.labels());
    sigma.extend(r.parameters.alphabet.iter().cloned());
    assert!(sigma.len() <= 64, "pre* supports at most 64 labels");
    let mut input = l.clone();
    input.alphabet = sigma.clone();
    let refined = input.complete().0.top_symbol_refine().normalize();
    let labels: Vec<Symbol> = sigma.iter().cloned().collect();
    let label_of: BTreeMap<Symbol, Lab> = labels.iter().enumerate().map(|(i, s)| (s.clone(), i as Lab)).collect();
    let nq = refined.num_states();
    let mut top = vec![None; nq];
    let mut bases = Vec::new();
    for rule in &refined.rules {
        let lab = label_of[&rule.label];
        top[rule.target as usize] = Some(lab);
        let h = &rule.horizontal;
        bases.push((lab, h.graph.clone(), h.initial, h.finals.clone(), rule.target));
    }
    let mut sat = Saturation {
        labels: labels.clone(),
        label_of,
        rules: &r.rules,
        params: r.parameters.normalize(),
        bases,
        top,
        families: (0..nq as u32).map(Family::Base).collect(),
        family_id: (0..nq as u32).map(|q| (Family::Base(q), q)).collect(),
        objects: Vec::new(),
        object_id: HashMap::new(),
        trans: Vec::new(),
        trans_set: HashSet::new(),
        by_target: HashMap::new(),
        incl_all: HashMap::new(),
        incl_lab: HashMap::new(),
        po: HashSet::new(),
        po_fam: HashSet::new(),
        top_object: 0,
        changed: false,
    };
    let roots = Graph::new(2, refined.finals.iter().map(|&f| (0, Some(f), 1)).collect());
    sat.bases.push((0, Arc::new(roots), 0, BTreeSet::from([1]), u32::MAX));
    sat.top_object = sat.object(sat.bases.len() - 1, 0);
    for i in 0..sat.bases.len() - 1 {
        let (lab, _, init, finals, target) = sat.bases[i].clone();
        let o = sat.object(i, 1 << lab);
        for f in finals {
            sat.add_trans((target, lab, o, init, f));
        }
    }
    let mut rounds = 0;
    loop {
        sat.changed = false;
        sat.compute_po();
        sat.round();
        rounds += 1;
        if !sat.changed {
            break;
        }
    }
    log::debug!("pre*: {rounds} rounds, {} transitions, {} families, {} objects", sat.trans.len(), sat.families.len(), sat.objects.len());
    Ok(PreStar { rounds, ..materialize(&sat, &refined) })
}

/// Builds the result automaton on the inhabited (family, label) pairs.
fn materialize(sat: &Saturation, refined: &Ha) -> PreStar {
    // Inhabitation, as a fixpoint over transitions.
    let mut inh: HashSet<(Fam, Lab)> = HashSet::new();
    let mut inh_fam: HashSet<Fam> = HashSet::new();
    loop {
        let mut grew = false;
        for &(fam, lab, o, s, f) in &sat.trans {
            if inh.contains(&(fam, lab)) {
                continue;
            }
            let obj = &sat.objects[o as usize];
            let mut seen = BTreeSet::from([s]);
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(l, y) in &obj.out[x as usize] {
                    if l.is_none_or(|g| inh_fam.contains(&g)) && seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
            if seen.contains(&f) {
                inh.insert((fam, lab));
                inh_fam.insert(fam);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let mut out = Ha { alphabet: sat.labels.iter().cloned().collect(), ..Ha::default() };
    let mut ids: BTreeMap<(Fam, Lab), u32> = BTreeMap::new();
    let mut variants: BTreeMap<Fam, Vec<u32>> = BTreeMap::new();
    let mut keys: Vec<(Fam, Lab)> = inh.iter().copied().collect();
    keys.sort_unstable();
    for (fam, lab) in keys {
        let hint = match sat.families[fam as usize] {
            Family::Base(q) if sat.top[q as usize] == Some(lab) => refined.state_name(q).to_string(),
            Family::Base(q) => format!("{}_{}", refined.state_name(q), sat.labels[lab as usize]),
            Family::Segment(..) => format!("seg{fam}_{}", sat.labels[lab as usize]),
        };
        let name = fresh_name(&hint, |n| out.state_id(n).is_some());
        let id = out.add_state(&name);
        ids.insert((fam, lab), id);
        variants.entry(fam).or_default().push(id);
        if sat.families[fam as usize] == Family::Segment(sat.top_object, 0, 1) {
            out.finals.insert(id);
        }
    }
    let mut graphs: HashMap<Obj, Arc<Graph>> = HashMap::new();
    for &(fam, lab, o, s, f) in &sat.trans {
        let Some(&target) = ids.get(&(fam, lab)) else { continue };
        let graph = graphs
            .entry(o)
            .or_insert_with(|| {
                let obj = &sat.objects[o as usize];
                let mut edges: Vec<(u32, Option<Letter>, u32)> = Vec::new();
                for &(x, l, y) in &obj.edges {
                    match l {
                        None => edges.push((x, None, y)),
                        Some(g) => edges.extend(variants.get(&g).into_iter().flatten().map(|&v| (x, Some(v), y))),
                    }
                }
                Arc::new(Graph::new(obj.out.len(), edges))
            })
            .clone();
        out.add_rule(sat.labels[lab as usize].clone(), Nfa::on_graph(graph, s, [f]), target);
    }
    let mut augmentations: BTreeMap<(Symbol, Symbol), BTreeSet<String>> = BTreeMap::new();
    for obj in &sat.objects {
        let (lab, g, _, _, target) = &sat.bases[obj.base];
        if *target == u32::MAX {
            continue;
        }
        let key = (sat.labels[*lab as usize].clone(), refined.states[*target as usize].clone());
        let entry = augmentations.entry(key).or_default();
        for &(x, l, y) in obj.edges.iter().filter(|e| !g.edges.contains(&(e.0, e.1, e.2))) {
            let letter = match l {
                None => "eps".to_string(),
                Some(f) => format!("seg{f}"),
            };
            entry.insert(format!("{x} {letter} {y}"));
        }
    }
    let families = sat.families.iter().filter(|f| matches!(f, Family::Segment(..))).count();
    PreStar { automaton: out, augmentations, families, rounds: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules;
    use crate::term::parse_term;

    #[test]
    fn deleting_patients_reaches_empty_hospital() {
        let mut l = Ha::new();
        let h = l.add_state("h");
        l.add_rule(Symbol::new("hospital"), Nfa::epsilon(), h);
        l.finals.insert(h);
        let mut params = Ha::new();
        params.alphabet.insert(Symbol::new("patient"));
        let r = parse_rules("DEL patient", &params).unwrap();
        let pre = pre_star(&r, &l).unwrap().automaton;
        for (t, want) in [("hospital", true), ("hospital(patient)", true), ("hospital(patient patient(patient) patient)", true), ("hospital(name)", false), ("patient", false)] {
            assert_eq!(pre.accepts(&parse_term(t).unwrap()), want, "{t}");
        }
    }
}
