//! Nondeterministic word automata with ε-moves over numeric letters.
//!
//! Letters are automaton state ids of the enclosing hedge automaton. The edge
//! graph sits behind an `Arc` so several horizontal languages can share one
//! graph and differ only in their initial and final nodes.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

pub type Letter = u32;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    pub num_states: usize,
    pub edges: Vec<(u32, Option<Letter>, u32)>,
    out: Vec<Vec<(Option<Letter>, u32)>>,
}

impl Graph {
    pub fn new(num_states: usize, mut edges: Vec<(u32, Option<Letter>, u32)>) -> Graph {
        edges.sort_unstable();
        edges.dedup();
        let mut out = vec![Vec::new(); num_states];
        for &(s, l, t) in &edges {
            out[s as usize].push((l, t));
        }
        Graph { num_states, edges, out }
    }

    pub fn out(&self, s: usize) -> &[(Option<Letter>, u32)] {
        &self.out[s]
    }

    /// ε-closure of a set of nodes, in place.
    pub fn close(&self, set: &mut BTreeSet<u32>) {
        let mut stack: Vec<u32> = set.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &(l, t) in &self.out[s as usize] {
                if l.is_none() && set.insert(t) {
                    stack.push(t);
                }
            }
        }
    }

    pub fn closure_of(&self, s: u32) -> BTreeSet<u32> {
        let mut set = BTreeSet::from([s]);
        self.close(&mut set);
        set
    }
}

#[derive(Clone, Debug)]
pub struct Nfa {
    pub graph: Arc<Graph>,
    pub initial: u32,
    pub finals: BTreeSet<u32>,
}

impl Nfa {
    pub fn new(num_states: usize, initial: u32, finals: impl IntoIterator<Item = u32>, edges: Vec<(u32, Option<Letter>, u32)>) -> Nfa {
        Nfa { graph: Arc::new(Graph::new(num_states, edges)), initial, finals: finals.into_iter().collect() }
    }

    pub fn on_graph(graph: Arc<Graph>, initial: u32, finals: impl IntoIterator<Item = u32>) -> Nfa {
        Nfa { graph, initial, finals: finals.into_iter().collect() }
    }

    /// The empty language.
    pub fn nothing() -> Nfa {
        Nfa::new(1, 0, [], vec![])
    }

    /// The language {ε}.
    pub fn epsilon() -> Nfa {
        Nfa::new(1, 0, [0], vec![])
    }

    pub fn letter(l: Letter) -> Nfa {
        Nfa::new(2, 0, [1], vec![(0, Some(l), 1)])
    }

    /// `letters*`.
    pub fn universal(letters: &BTreeSet<Letter>) -> Nfa {
        Nfa::new(1, 0, [0], letters.iter().map(|&l| (0, Some(l), 0)).collect())
    }

    pub fn num_states(&self) -> usize {
        self.graph.num_states
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        self.graph.edges.iter().filter_map(|e| e.1).collect()
    }

    fn start_set(&self) -> BTreeSet<u32> {
        self.graph.closure_of(self.initial)
    }

    /// Core run: `fires(i, l)` says whether letter `l` may be read at index `i`.
    pub fn accepts_by(&self, len: usize, fires: impl Fn(usize, Letter) -> bool) -> bool {
        let mut cur = self.start_set();
        for i in 0..len {
            let mut next = BTreeSet::new();
            for &s in &cur {
                for &(l, t) in self.graph.out(s as usize) {
                    if let Some(l) = l {
                        if fires(i, l) {
                            next.insert(t);
                        }
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            self.graph.close(&mut next);
            cur = next;
        }
        cur.iter().any(|s| self.finals.contains(s))
    }

    pub fn accepts(&self, w: &[Letter]) -> bool {
        self.accepts_by(w.len(), |i, l| w[i] == l)
    }

    /// Some choice of one letter per position is accepted. Single pass.
    pub fn accepts_setword(&self, w: &[BTreeSet<Letter>]) -> bool {
        self.accepts_by(w.len(), |i, l| w[i].contains(&l))
    }

    pub fn map_letters(&self, f: impl Fn(Letter) -> Letter) -> Nfa {
        let edges = self.graph.edges.iter().map(|&(s, l, t)| (s, l.map(&f), t)).collect();
        Nfa::new(self.num_states(), self.initial, self.finals.iter().copied(), edges)
    }

    /// Drops edges whose letter fails `keep`.
    pub fn filter_letters(&self, keep: impl Fn(Letter) -> bool) -> Nfa {
        let edges = self.graph.edges.iter().copied().filter(|e| e.1.is_none_or(&keep)).collect();
        Nfa::new(self.num_states(), self.initial, self.finals.iter().copied(), edges)
    }

    /// Copies this automaton's edges into `edges`, offset by `base`.
    fn embed(&self, base: u32, edges: &mut Vec<(u32, Option<Letter>, u32)>) {
        edges.extend(self.graph.edges.iter().map(|&(s, l, t)| (s + base, l, t + base)));
    }

    pub fn union(&self, other: &Nfa) -> Nfa {
        let n1 = self.num_states() as u32;
        let n2 = other.num_states() as u32;
        let init = n1 + n2;
        let fin = init + 1;
        let mut edges = Vec::new();
        self.embed(0, &mut edges);
        other.embed(n1, &mut edges);
        edges.push((init, None, self.initial));
        edges.push((init, None, other.initial + n1));
        edges.extend(self.finals.iter().map(|&f| (f, None, fin)));
        edges.extend(other.finals.iter().map(|&f| (f + n1, None, fin)));
        Nfa::new(fin as usize + 1, init, [fin], edges)
    }

    pub fn concat(&self, other: &Nfa) -> Nfa {
        let n1 = self.num_states() as u32;
        let mut edges = Vec::new();
        self.embed(0, &mut edges);
        other.embed(n1, &mut edges);
        edges.extend(self.finals.iter().map(|&f| (f, None, other.initial + n1)));
        Nfa::new((n1 as usize) + other.num_states(), self.initial, other.finals.iter().map(|f| f + n1), edges)
    }

    pub fn star(&self) -> Nfa {
        let n = self.num_states() as u32;
        let hub = n;
        let mut edges = Vec::new();
        self.embed(0, &mut edges);
        edges.push((hub, None, self.initial));
        edges.extend(self.finals.iter().map(|&f| (f, None, hub)));
        Nfa::new(n as usize + 1, hub, [hub], edges)
    }

    pub fn plus(&self) -> Nfa {
        self.concat(&self.star())
    }

    pub fn optional(&self) -> Nfa {
        self.union(&Nfa::epsilon())
    }

    /// Same language with exactly one final node.
    pub fn single_final(&self) -> Nfa {
        if self.finals.len() == 1 {
            return self.clone();
        }
        let n = self.num_states() as u32;
        let mut edges = self.graph.edges.clone();
        edges.extend(self.finals.iter().map(|&f| (f, None, n)));
        Nfa::new(n as usize + 1, self.initial, [n], edges)
    }

    /// Product automaton: L = L(self) ∩ L(other).
    pub fn product(&self, other: &Nfa) -> Nfa {
        self.product_by(other, |a, b| if a == b { Some(a) } else { None })
    }

    /// Synchronized product where `pair` decides the letter read when both
    /// sides read `a` and `b` respectively.
    pub fn product_by(&self, other: &Nfa, pair: impl Fn(Letter, Letter) -> Option<Letter>) -> Nfa {
        let mut index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut edges = Vec::new();
        let mut finals = Vec::new();
        let start = (self.initial, other.initial);
        index.insert(start, 0);
        queue.push_back(start);
        let intern = |p: (u32, u32), index: &mut HashMap<(u32, u32), u32>, queue: &mut VecDeque<(u32, u32)>| -> u32 {
            let next = index.len() as u32;
            *index.entry(p).or_insert_with(|| {
                queue.push_back(p);
                next
            })
        };
        while let Some((a, b)) = queue.pop_front() {
            let id = index[&(a, b)];
            if self.finals.contains(&a) && other.finals.contains(&b) {
                finals.push(id);
            }
            for &(l1, t1) in self.graph.out(a as usize) {
                match l1 {
                    None => {
                        let t = intern((t1, b), &mut index, &mut queue);
                        edges.push((id, None, t));
                    }
                    Some(l1) => {
                        for &(l2, t2) in other.graph.out(b as usize) {
                            if let Some(l2) = l2 {
                                if let Some(l) = pair(l1, l2) {
                                    let t = intern((t1, t2), &mut index, &mut queue);
                                    edges.push((id, Some(l), t));
                                }
                            }
                        }
                    }
                }
            }
            for &(l2, t2) in other.graph.out(b as usize) {
                if l2.is_none() {
                    let t = intern((a, t2), &mut index, &mut queue);
                    edges.push((id, None, t));
                }
            }
        }
        Nfa::new(index.len(), 0, finals, edges)
    }

    /// Subset construction restricted to `letters`, complete with a sink.
    pub fn determinize(&self, letters: &BTreeSet<Letter>) -> Dfa {
        let mut index: BTreeMap<BTreeSet<u32>, usize> = BTreeMap::new();
        let mut sets: Vec<BTreeSet<u32>> = Vec::new();
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let start = self.start_set();
        index.insert(start.clone(), 0);
        sets.push(start);
        let letters: Vec<Letter> = letters.iter().copied().collect();
        let mut i = 0;
        while i < sets.len() {
            let cur = sets[i].clone();
            let mut row = Vec::with_capacity(letters.len());
            for &l in &letters {
                let mut next = BTreeSet::new();
                for &s in &cur {
                    for &(el, t) in self.graph.out(s as usize) {
                        if el == Some(l) {
                            next.insert(t);
                        }
                    }
                }
                self.graph.close(&mut next);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = sets.len();
                        index.insert(next.clone(), id);
                        sets.push(next);
                        id
                    }
                };
                row.push(id);
            }
            delta.push(row);
            i += 1;
        }
        let accepting = sets.iter().map(|s| s.iter().any(|x| self.finals.contains(x))).collect();
        Dfa { letters, delta, accepting }
    }

    /// `letters* \ L(self)`.
    pub fn complement(&self, letters: &BTreeSet<Letter>) -> Nfa {
        let mut d = self.determinize(letters);
        for a in d.accepting.iter_mut() {
            *a = !*a;
        }
        d.to_nfa()
    }

    /// Shortest accepted word, lexicographically least among the shortest.
    pub fn nonempty(&self) -> Option<Vec<Letter>> {
        self.shortest_by(|_| true)
    }

    /// As `nonempty`, reading only letters that pass `allowed`.
    pub fn shortest_by(&self, allowed: impl Fn(Letter) -> bool) -> Option<Vec<Letter>> {
        let dist = self.distance_to_final(&allowed);
        let mut cur: BTreeSet<u32> = self.start_set();
        let mut d = cur.iter().filter_map(|&s| dist[s as usize]).min()?;
        let mut word = Vec::new();
        while d > 0 {
            let mut best: Option<Letter> = None;
            for &s in &cur {
                for &(l, t) in self.graph.out(s as usize) {
                    if let Some(l) = l {
                        if allowed(l) && dist[t as usize] == Some(d - 1) && best.is_none_or(|b| l < b) {
                            best = Some(l);
                        }
                    }
                }
            }
            let l = best.expect("distance labelling is consistent");
            let mut next = BTreeSet::new();
            for &s in &cur {
                for &(el, t) in self.graph.out(s as usize) {
                    if el == Some(l) {
                        next.insert(t);
                    }
                }
            }
            self.graph.close(&mut next);
            next.retain(|&t| dist[t as usize] == Some(d - 1));
            word.push(l);
            cur = next;
            d -= 1;
        }
        Some(word)
    }

    /// Least number of letters from each node to a final node.
    fn distance_to_final(&self, allowed: &impl Fn(Letter) -> bool) -> Vec<Option<usize>> {
        let n = self.num_states();
        let mut rev: Vec<Vec<(bool, u32)>> = vec![Vec::new(); n];
        for &(s, l, t) in &self.graph.edges {
            match l {
                None => rev[t as usize].push((false, s)),
                Some(l) if allowed(l) => rev[t as usize].push((true, s)),
                _ => {}
            }
        }
        let mut dist = vec![None; n];
        let mut dq = VecDeque::new();
        for &f in &self.finals {
            dist[f as usize] = Some(0);
            dq.push_back(f);
        }
        // 0-1 BFS: ε costs 0, letters cost 1.
        while let Some(t) = dq.pop_front() {
            let dt = dist[t as usize].unwrap();
            for &(costs, s) in &rev[t as usize] {
                let nd = dt + usize::from(costs);
                if dist[s as usize].is_none_or(|old| nd < old) {
                    dist[s as usize] = Some(nd);
                    if costs {
                        dq.push_back(s);
                    } else {
                        dq.push_front(s);
                    }
                }
            }
        }
        dist
    }

    pub fn is_empty(&self) -> bool {
        let mut seen = self.start_set();
        let mut stack: Vec<u32> = seen.iter().copied().collect();
        while let Some(s) = stack.pop() {
            if self.finals.contains(&s) {
                return false;
            }
            for &(_, t) in self.graph.out(s as usize) {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        true
    }

    /// Nodes reachable from the initial node and co-reachable to a final one.
    pub fn useful_nodes(&self) -> BTreeSet<u32> {
        let n = self.num_states();
        let mut fwd = vec![false; n];
        let mut stack = vec![self.initial];
        fwd[self.initial as usize] = true;
        while let Some(s) = stack.pop() {
            for &(_, t) in self.graph.out(s as usize) {
                if !fwd[t as usize] {
                    fwd[t as usize] = true;
                    stack.push(t);
                }
            }
        }
        let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(s, _, t) in &self.graph.edges {
            rev[t as usize].push(s);
        }
        let mut bwd = vec![false; n];
        let mut stack: Vec<u32> = self.finals.iter().copied().collect();
        for &f in &stack {
            bwd[f as usize] = true;
        }
        while let Some(t) = stack.pop() {
            for &s in &rev[t as usize] {
                if !bwd[s as usize] {
                    bwd[s as usize] = true;
                    stack.push(s);
                }
            }
        }
        (0..n as u32).filter(|&s| fwd[s as usize] && bwd[s as usize]).collect()
    }

    /// Equivalent automaton keeping only useful nodes, renumbered.
    pub fn trim(&self) -> Nfa {
        let keep = self.useful_nodes();
        if !keep.contains(&self.initial) {
            return Nfa::nothing();
        }
        let map: HashMap<u32, u32> = keep.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
        let edges = self
            .graph
            .edges
            .iter()
            .filter_map(|&(s, l, t)| Some((*map.get(&s)?, l, *map.get(&t)?)))
            .collect();
        Nfa::new(keep.len(), map[&self.initial], self.finals.iter().filter_map(|f| map.get(f).copied()), edges)
    }

    /// ε-free equivalent; finals are the nodes whose closure meets a final.
    pub fn remove_epsilon(&self) -> Nfa {
        let n = self.num_states();
        let mut edges = Vec::new();
        let mut finals = Vec::new();
        for s in 0..n as u32 {
            let cl = self.graph.closure_of(s);
            if cl.iter().any(|x| self.finals.contains(x)) {
                finals.push(s);
            }
            for &x in &cl {
                for &(l, t) in self.graph.out(x as usize) {
                    if l.is_some() {
                        edges.push((s, l, t));
                    }
                }
            }
        }
        Nfa::new(n, self.initial, finals, edges)
    }

    /// Counterexample word in L(self) \ L(other), if any (shortest first).
    pub fn inclusion_counterexample(&self, other: &Nfa, letters: &BTreeSet<Letter>) -> Option<Vec<Letter>> {
        let mut all = letters.clone();
        all.extend(self.letters());
        let comp = other.complement(&all);
        self.product(&comp).nonempty()
    }

    pub fn included(&self, other: &Nfa, letters: &BTreeSet<Letter>) -> bool {
        self.inclusion_counterexample(other, letters).is_none()
    }
}

/// Complete deterministic automaton produced by the subset construction.
#[derive(Clone, Debug)]
pub struct Dfa {
    pub letters: Vec<Letter>,
    pub delta: Vec<Vec<usize>>,
    pub accepting: Vec<bool>,
}

impl Dfa {
    pub fn to_nfa(&self) -> Nfa {
        let mut edges = Vec::new();
        for (s, row) in self.delta.iter().enumerate() {
            for (i, &t) in row.iter().enumerate() {
                edges.push((s as u32, Some(self.letters[i]), t as u32));
            }
        }
        let finals = (0..self.delta.len() as u32).filter(|&s| self.accepting[s as usize]);
        Nfa::new(self.delta.len(), 0, finals, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let p = Nfa::letter(0);
        let ps = p.star();
        assert!(ps.accepts(&[]));
        assert!(ps.accepts(&[0, 0]));
        assert!(!ps.accepts(&[1]));
        let letters = BTreeSet::from([0]);
        assert!(ps.complement(&letters).is_empty());
        assert!(Nfa::nothing().complement(&letters).accepts(&[0, 0, 0]));
        assert!(p.included(&ps, &letters));
        assert!(!ps.included(&p, &letters));
        assert_eq!(Nfa::letter(3).concat(&Nfa::letter(1)).nonempty(), Some(vec![3, 1]));
    }

    #[test]
    fn lexicographic_witness() {
        let m = Nfa::letter(2).union(&Nfa::letter(1)).union(&Nfa::letter(0).concat(&Nfa::letter(0)));
        assert_eq!(m.nonempty(), Some(vec![1]));
    }
}
