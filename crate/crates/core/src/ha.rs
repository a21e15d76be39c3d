//! Hedge automata with regular horizontal languages.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::sync::Arc;

use crate::term::{Hedge, Symbol, Term};
use crate::word::{Graph, Letter, Nfa};

#[derive(Clone, Debug)]
pub struct HaRule {
    pub label: Symbol,
    pub horizontal: Nfa,
    pub target: u32,
}

/// `a(L) -> q` rules over states numbered by position in `states`.
#[derive(Clone, Debug, Default)]
pub struct Ha {
    pub alphabet: BTreeSet<Symbol>,
    pub states: Vec<Symbol>,
    pub finals: BTreeSet<u32>,
    pub rules: Vec<HaRule>,
}

impl Ha {
    pub fn new() -> Ha {
        Ha::default()
    }

    pub fn add_state(&mut self, name: &str) -> u32 {
        self.states.push(Symbol::new(name));
        (self.states.len() - 1) as u32
    }

    /// Adds a state whose name does not clash with existing ones.
    pub fn add_fresh_state(&mut self, hint: &str) -> u32 {
        let name = fresh_name(hint, |n| self.state_id(n).is_some());
        self.add_state(&name)
    }

    pub fn state_id(&self, name: &str) -> Option<u32> {
        self.states.iter().position(|s| s.as_str() == name).map(|i| i as u32)
    }

    pub fn state_index(&self) -> HashMap<Symbol, u32> {
        self.states.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect()
    }

    pub fn state_name(&self, q: u32) -> &str {
        self.states[q as usize].as_str()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn all_letters(&self) -> BTreeSet<Letter> {
        (0..self.states.len() as u32).collect()
    }

    pub fn add_rule(&mut self, label: Symbol, horizontal: Nfa, target: u32) {
        self.alphabet.insert(label.clone());
        self.rules.push(HaRule { label, horizontal, target });
    }

    /// Total number of horizontal edges, a size measure.
    pub fn size(&self) -> usize {
        self.rules.iter().map(|r| r.horizontal.graph.edges.len()).sum::<usize>() + self.states.len()
    }

    /// One rule per (label, target), merging horizontal languages by union.
    pub fn normalize(&self) -> Ha {
        let mut groups: BTreeMap<(Symbol, u32), Vec<&HaRule>> = BTreeMap::new();
        for r in &self.rules {
            groups.entry((r.label.clone(), r.target)).or_default().push(r);
        }
        let mut out = Ha { alphabet: self.alphabet.clone(), states: self.states.clone(), finals: self.finals.clone(), rules: Vec::new() };
        for ((label, target), rs) in groups {
            let mut it = rs.into_iter();
            let first = it.next().unwrap().horizontal.clone();
            let horizontal = it.fold(first, |acc, r| acc.union(&r.horizontal));
            out.rules.push(HaRule { label, horizontal, target });
        }
        out
    }

    pub fn is_normalized(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.rules.iter().all(|r| seen.insert((r.label.clone(), r.target)))
    }

    /// Adds a sink state so every term over the alphabet reaches some state.
    /// Returns the automaton and the sink id.
    pub fn complete(&self) -> (Ha, u32) {
        let mut out = self.normalize();
        let sink = out.add_fresh_state("sink");
        let letters = out.all_letters();
        for a in self.alphabet.clone() {
            let union = out
                .rules
                .iter()
                .filter(|r| r.label == a)
                .fold(Nfa::nothing(), |acc, r| acc.union(&r.horizontal));
            let rest = union.complement(&letters).trim();
            if !rest.is_empty() {
                out.rules.push(HaRule { label: a, horizontal: rest, target: sink });
            }
        }
        (out.normalize(), sink)
    }

    /// Splits each state into one copy per label of the rules targeting it.
    pub fn top_symbol_refine(&self) -> Ha {
        let a = self.normalize();
        let mut copies: Vec<Vec<(Symbol, u32)>> = vec![Vec::new(); a.num_states()];
        let mut out = Ha { alphabet: a.alphabet.clone(), ..Ha::default() };
        let mut labels_of: Vec<BTreeSet<Symbol>> = vec![BTreeSet::new(); a.num_states()];
        for r in &a.rules {
            labels_of[r.target as usize].insert(r.label.clone());
        }
        for (q, labels) in labels_of.iter().enumerate() {
            for l in labels {
                let name = if labels.len() == 1 { a.states[q].to_string() } else { format!("{}_{}", a.states[q], l) };
                let id = out.add_fresh_state(&name);
                copies[q].push((l.clone(), id));
                if a.finals.contains(&(q as u32)) {
                    out.finals.insert(id);
                }
            }
        }
        for r in &a.rules {
            let mut edges = Vec::new();
            for &(s, l, t) in &r.horizontal.graph.edges {
                match l {
                    None => edges.push((s, None, t)),
                    Some(l) => edges.extend(copies[l as usize].iter().map(|&(_, c)| (s, Some(c), t))),
                }
            }
            let horizontal = Nfa::new(r.horizontal.num_states(), r.horizontal.initial, r.horizontal.finals.iter().copied(), edges);
            let target = copies[r.target as usize].iter().find(|(l, _)| *l == r.label).unwrap().1;
            out.rules.push(HaRule { label: r.label.clone(), horizontal, target });
        }
        out
    }

    /// States reached by `t`.
    pub fn member(&self, t: &Term) -> BTreeSet<u32> {
        let kids: Vec<BTreeSet<Letter>> = t.children.0.iter().map(|c| self.member(c)).collect();
        if kids.iter().any(BTreeSet::is_empty) {
            return BTreeSet::new();
        }
        self.rules
            .iter()
            .filter(|r| r.label == t.label && r.horizontal.accepts_setword(&kids))
            .map(|r| r.target)
            .collect()
    }

    pub fn accepts(&self, t: &Term) -> bool {
        self.member(t).iter().any(|q| self.finals.contains(q))
    }

    /// Least-size witness term per state.
    pub fn inhabitants(&self) -> Vec<Option<Witness>> {
        let mut best: Vec<Option<Witness>> = vec![None; self.num_states()];
        let mut changed = true;
        while changed {
            changed = false;
            for r in &self.rules {
                if let Some(kids) = cheapest_word(&r.horizontal, &best) {
                    let term = Term { label: r.label.clone(), children: Hedge(kids.iter().map(|&q| best[q as usize].as_ref().unwrap().term.clone()).collect()) };
                    let w = Witness::of(term);
                    let slot = &mut best[r.target as usize];
                    if slot.as_ref().is_none_or(|old| w.key() < old.key()) {
                        *slot = Some(w);
                        changed = true;
                    }
                }
            }
        }
        best
    }

    /// Least-size accepted term, ties broken by rendering.
    pub fn nonempty(&self) -> Option<Term> {
        let best = self.inhabitants();
        self.finals
            .iter()
            .filter_map(|&q| best[q as usize].clone())
            .min_by(|a, b| a.key().cmp(&b.key()))
            .map(|w| w.term)
    }

    pub fn is_empty(&self) -> bool {
        self.nonempty().is_none()
    }

    /// Up to `k` terms reaching state `q`, by increasing size, exploring
    /// sizes up to `max_size`.
    pub fn witnesses(&self, q: u32, k: usize, max_size: usize) -> Vec<Term> {
        let n = self.num_states();
        // by_size[s][state] = up to k terms of size s.
        let mut by_size: Vec<Vec<Vec<Term>>> = vec![vec![Vec::new(); n]];
        let mut out = Vec::new();
        for s in 1..=max_size {
            let mut layer: Vec<Vec<Term>> = vec![Vec::new(); n];
            for r in &self.rules {
                if layer[r.target as usize].len() >= k {
                    continue;
                }
                for h in hedges_of_size(&r.horizontal, &by_size, s - 1, k) {
                    let t = Term { label: r.label.clone(), children: h };
                    let slot = &mut layer[r.target as usize];
                    if slot.len() < k && !slot.contains(&t) {
                        slot.push(t);
                    }
                }
            }
            for t in &layer[q as usize] {
                if out.len() < k {
                    out.push(t.clone());
                }
            }
            by_size.push(layer);
            if out.len() >= k {
                break;
            }
        }
        out
    }

    /// Disjoint juxtaposition; states of `other` are renamed on clashes.
    /// Returns the union and the id map for `other`'s states.
    pub fn disjoint_union(&self, other: &Ha) -> (Ha, Vec<u32>) {
        let mut out = self.clone();
        out.alphabet.extend(other.alphabet.iter().cloned());
        let map: Vec<u32> = other.states.iter().map(|s| out.add_fresh_state(s.as_str())).collect();
        for r in &other.rules {
            out.rules.push(HaRule { label: r.label.clone(), horizontal: r.horizontal.map_letters(|l| map[l as usize]), target: map[r.target as usize] });
        }
        out.finals.extend(other.finals.iter().map(|&f| map[f as usize]));
        (out, map)
    }

    pub fn union(&self, other: &Ha) -> Ha {
        self.disjoint_union(other).0
    }

    /// Product automaton over inhabited state pairs.
    pub fn intersect(&self, other: &Ha) -> Ha {
        let a = self.normalize();
        let b = other.normalize();
        let mut pairs: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut changed = true;
        while changed {
            changed = false;
            for r1 in &a.rules {
                for r2 in b.rules.iter().filter(|r2| r2.label == r1.label) {
                    let key = (r1.target, r2.target);
                    if pairs.contains_key(&key) {
                        continue;
                    }
                    let m = r1.horizontal.product_by(&r2.horizontal, |x, y| pairs.get(&(x, y)).copied());
                    if !m.is_empty() {
                        let id = pairs.len() as u32;
                        pairs.insert(key, id);
                        changed = true;
                    }
                }
            }
        }
        let mut out = Ha { alphabet: a.alphabet.intersection(&b.alphabet).cloned().collect(), ..Ha::default() };
        let mut ordered: Vec<((u32, u32), u32)> = pairs.iter().map(|(k, v)| (*k, *v)).collect();
        ordered.sort_by_key(|x| x.1);
        for ((p, q), _) in &ordered {
            let name = format!("{}_{}", a.state_name(*p), b.state_name(*q));
            let id = out.add_fresh_state(&name);
            if a.finals.contains(p) && b.finals.contains(q) {
                out.finals.insert(id);
            }
        }
        for r1 in &a.rules {
            for r2 in b.rules.iter().filter(|r2| r2.label == r1.label) {
                if let Some(&target) = pairs.get(&(r1.target, r2.target)) {
                    let m = r1.horizontal.product_by(&r2.horizontal, |x, y| pairs.get(&(x, y)).copied()).trim();
                    if !m.is_empty() {
                        out.rules.push(HaRule { label: r1.label.clone(), horizontal: m, target });
                    }
                }
            }
        }
        out
    }

    /// Deterministic complete automaton over reachable state subsets.
    pub fn determinize(&self, alphabet: &BTreeSet<Symbol>) -> Determinized {
        let a = self.normalize();
        let mut subsets: Vec<BTreeSet<u32>> = Vec::new();
        let mut index: BTreeMap<BTreeSet<u32>, u32> = BTreeMap::new();
        let mut by_label: BTreeMap<Symbol, Vec<&HaRule>> = BTreeMap::new();
        for l in alphabet {
            by_label.insert(l.clone(), Vec::new());
        }
        for r in &a.rules {
            if let Some(v) = by_label.get_mut(&r.label) {
                v.push(r);
            }
        }
        // Grow the set of reachable subsets until stable.
        loop {
            let before = subsets.len();
            for rules in by_label.values() {
                let explored = explore_tuples(rules, &subsets);
                for (_, verdict) in explored.accept_sets() {
                    if !index.contains_key(&verdict) {
                        index.insert(verdict.clone(), subsets.len() as u32);
                        subsets.push(verdict);
                    }
                }
            }
            if subsets.len() == before {
                break;
            }
        }
        let mut ha = Ha { alphabet: alphabet.clone(), ..Ha::default() };
        for s in &subsets {
            let name = if s.is_empty() {
                "none".to_string()
            } else {
                s.iter().map(|&q| a.state_name(q)).collect::<Vec<_>>().join("_")
            };
            ha.add_fresh_state(&name);
        }
        for (label, rules) in &by_label {
            let explored = explore_tuples(rules, &subsets);
            for (verdict, nfa) in explored.languages() {
                let target = index[&verdict];
                ha.rules.push(HaRule { label: label.clone(), horizontal: nfa, target });
            }
        }
        Determinized { automaton: ha, subsets }
    }

    /// Automaton for the terms over `alphabet` that this one rejects.
    pub fn complement(&self, alphabet: &BTreeSet<Symbol>) -> Ha {
        let d = self.determinize(alphabet);
        let mut out = d.automaton;
        out.finals = d
            .subsets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_disjoint(&self.finals))
            .map(|(i, _)| i as u32)
            .collect();
        out
    }

    /// `None` when L(self) ⊆ L(other); otherwise a least counterexample.
    pub fn inclusion_counterexample(&self, other: &Ha) -> Option<Term> {
        let mut sigma = self.alphabet.clone();
        sigma.extend(other.alphabet.iter().cloned());
        let comp = other.complement(&sigma);
        self.intersect(&comp).nonempty()
    }

    pub fn included(&self, other: &Ha) -> bool {
        self.inclusion_counterexample(other).is_none()
    }

    /// Automaton accepting exactly `t`, one state per node.
    pub fn singleton(t: &Term) -> Ha {
        fn build(t: &Term, ha: &mut Ha) -> u32 {
            let kids: Vec<u32> = t.children.0.iter().map(|c| build(c, ha)).collect();
            let q = ha.add_state(&format!("n{}", ha.num_states()));
            let n = kids.len() as u32;
            let edges = kids.iter().enumerate().map(|(i, &k)| (i as u32, Some(k), i as u32 + 1)).collect();
            ha.add_rule(t.label.clone(), Nfa::new(n as usize + 1, 0, [n], edges), q);
            q
        }
        let mut ha = Ha::new();
        let root = build(t, &mut ha);
        ha.finals.insert(root);
        ha
    }

    /// Same automaton with the listed states as the only finals.
    pub fn with_finals(&self, finals: impl IntoIterator<Item = u32>) -> Ha {
        Ha { finals: finals.into_iter().collect(), ..self.clone() }
    }

    /// Renumbers states through `map` (old id -> new id) into `num` slots.
    pub fn relabel_states(&self, names: Vec<Symbol>, map: &[u32]) -> Ha {
        let rules = self
            .rules
            .iter()
            .map(|r| HaRule { label: r.label.clone(), horizontal: r.horizontal.map_letters(|l| map[l as usize]), target: map[r.target as usize] })
            .collect();
        Ha { alphabet: self.alphabet.clone(), states: names, finals: self.finals.iter().map(|&f| map[f as usize]).collect(), rules }
    }
}

/// Bottom-up determinization result; state `i` stands for `subsets[i]`.
#[derive(Clone, Debug)]
pub struct Determinized {
    pub automaton: Ha,
    pub subsets: Vec<BTreeSet<u32>>,
}

/// Joint subset simulation of all rules of one label over subset letters.
struct Explored {
    configs: Vec<Vec<BTreeSet<u32>>>,
    edges: Vec<(u32, Letter, u32)>,
    verdicts: Vec<BTreeSet<u32>>,
}

fn explore_tuples(rules: &[&HaRule], subsets: &[BTreeSet<u32>]) -> Explored {
    let start: Vec<BTreeSet<u32>> = rules.iter().map(|r| r.horizontal.graph.closure_of(r.horizontal.initial)).collect();
    let mut index: HashMap<Vec<BTreeSet<u32>>, u32> = HashMap::new();
    let mut configs = vec![start.clone()];
    index.insert(start, 0);
    let mut edges = Vec::new();
    let mut i = 0;
    while i < configs.len() {
        for (li, letter) in subsets.iter().enumerate() {
            let next: Vec<BTreeSet<u32>> = rules
                .iter()
                .zip(&configs[i])
                .map(|(r, cur)| {
                    let g = &r.horizontal.graph;
                    let mut nx = BTreeSet::new();
                    for &s in cur {
                        for &(l, t) in g.out(s as usize) {
                            if l.is_some_and(|l| letter.contains(&l)) {
                                nx.insert(t);
                            }
                        }
                    }
                    g.close(&mut nx);
                    nx
                })
                .collect();
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = configs.len() as u32;
                    index.insert(next.clone(), id);
                    configs.push(next);
                    id
                }
            };
            edges.push((i as u32, li as Letter, id));
        }
        i += 1;
    }
    let verdicts = configs
        .iter()
        .map(|c| rules.iter().zip(c).filter(|(r, set)| set.iter().any(|s| r.horizontal.finals.contains(s))).map(|(r, _)| r.target).collect())
        .collect();
    Explored { configs, edges, verdicts }
}

impl Explored {
    fn accept_sets(&self) -> Vec<(u32, BTreeSet<u32>)> {
        self.verdicts.iter().enumerate().map(|(i, v)| (i as u32, v.clone())).collect()
    }

    /// One deterministic horizontal language per distinct verdict.
    fn languages(&self) -> Vec<(BTreeSet<u32>, Nfa)> {
        let graph = Arc::new(Graph::new(self.configs.len(), self.edges.iter().map(|&(s, l, t)| (s, Some(l), t)).collect()));
        let mut groups: BTreeMap<BTreeSet<u32>, Vec<u32>> = BTreeMap::new();
        for (i, v) in self.verdicts.iter().enumerate() {
            groups.entry(v.clone()).or_default().push(i as u32);
        }
        groups.into_iter().map(|(v, finals)| (v, Nfa::on_graph(graph.clone(), 0, finals).trim())).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub size: usize,
    pub text: String,
    pub term: Term,
}

impl Witness {
    pub fn of(term: Term) -> Witness {
        Witness { size: term.size(), text: term.to_string(), term }
    }

    pub fn key(&self) -> (usize, &str) {
        (self.size, &self.text)
    }
}

/// Least-cost accepted word where letter `q` costs the size of its witness;
/// ties are broken on the rendered prefix.
fn cheapest_word(m: &Nfa, best: &[Option<Witness>]) -> Option<Vec<Letter>> {
    let n = m.num_states();
    let mut dist: Vec<Option<(usize, String)>> = vec![None; n];
    let mut word: Vec<Vec<Letter>> = vec![Vec::new(); n];
    let mut heap = BinaryHeap::new();
    dist[m.initial as usize] = Some((0, String::new()));
    heap.push(Reverse((0usize, String::new(), m.initial)));
    let mut done = vec![false; n];
    while let Some(Reverse((d, text, s))) = heap.pop() {
        if done[s as usize] {
            continue;
        }
        done[s as usize] = true;
        if m.finals.contains(&s) {
            return Some(word[s as usize].clone());
        }
        for &(l, t) in m.graph.out(s as usize) {
            let (nd, ntext) = match l {
                None => (d, text.clone()),
                Some(l) => match best.get(l as usize).and_then(|b| b.as_ref()) {
                    Some(w) => (d + w.size, format!("{text} {}", w.text)),
                    None => continue,
                },
            };
            if done[t as usize] {
                continue;
            }
            let better = dist[t as usize].as_ref().is_none_or(|old| (nd, ntext.as_str()) < (old.0, old.1.as_str()));
            if better {
                dist[t as usize] = Some((nd, ntext.clone()));
                let mut w = word[s as usize].clone();
                if let Some(l) = l {
                    w.push(l);
                }
                word[t as usize] = w;
                heap.push(Reverse((nd, ntext, t)));
            }
        }
    }
    None
}

/// Up to `k` hedges of total size `size` accepted by `m`, using per-size
/// term pools.
fn hedges_of_size(m: &Nfa, pools: &[Vec<Vec<Term>>], size: usize, k: usize) -> Vec<Hedge> {
    // levels[used][node] = hedges of total size `used` leading to `node`.
    let n = m.num_states();
    let mut levels: Vec<Vec<Vec<Vec<Term>>>> = vec![vec![Vec::new(); n]; size + 1];
    for s in m.graph.closure_of(m.initial) {
        levels[0][s as usize].push(Vec::new());
    }
    for used in 0..=size {
        for s in 0..n {
            let here = std::mem::take(&mut levels[used][s]);
            if here.is_empty() {
                continue;
            }
            for &(l, t) in m.graph.out(s) {
                let Some(l) = l else { continue };
                for z in 1..=size - used {
                    let Some(terms) = pools.get(z).map(|p| &p[l as usize]) else { continue };
                    for t2 in m.graph.closure_of(t) {
                        let slot = &mut levels[used + z][t2 as usize];
                        for h in &here {
                            for term in terms {
                                if slot.len() >= k {
                                    break;
                                }
                                let mut h2 = h.clone();
                                h2.push(term.clone());
                                if !slot.contains(&h2) {
                                    slot.push(h2);
                                }
                            }
                        }
                    }
                }
            }
            levels[used][s] = here;
        }
    }
    let mut out = Vec::new();
    for &f in &m.finals {
        for h in &levels[size][f as usize] {
            let h = Hedge(h.clone());
            if out.len() < k && !out.contains(&h) {
                out.push(h);
            }
        }
    }
    out
}

/// `hint`, or `hint` followed by primes, avoiding names for which `taken` holds.
pub fn fresh_name(hint: &str, taken: impl Fn(&str) -> bool) -> String {
    let mut name = hint.to_string();
    while taken(&name) {
        name.push('\'');
    }
    name
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    /// a -> q ; b -> q ; g(q) -> f
    fn small() -> Ha {
        let mut ha = Ha::new();
        let q = ha.add_state("q");
        let f = ha.add_state("f");
        ha.add_rule(Symbol::new("a"), Nfa::epsilon(), q);
        ha.add_rule(Symbol::new("b"), Nfa::epsilon(), q);
        ha.add_rule(Symbol::new("g"), Nfa::letter(q), f);
        ha.finals.insert(f);
        ha
    }

    #[test]
    fn member_and_refine() {
        let ha = small();
        assert!(ha.accepts(&parse_term("g(a)").unwrap()));
        assert!(!ha.accepts(&parse_term("g(a b)").unwrap()));
        let r = ha.top_symbol_refine();
        assert_eq!(r.num_states(), 3);
        assert!(r.accepts(&parse_term("g(b)").unwrap()));
    }

    #[test]
    fn complement_flips() {
        let ha = small();
        let c = ha.complement(&ha.alphabet);
        for t in ["g(a)", "g(a b)", "a", "g(g(a))"] {
            let t = parse_term(t).unwrap();
            assert_ne!(ha.accepts(&t), c.accepts(&t), "{t}");
        }
        assert!(ha.included(&ha));
        assert_eq!(ha.nonempty().unwrap().to_string(), "g(a)");
    }

    #[test]
    fn witnesses_by_size() {
        let ha = small();
        let w: Vec<String> = ha.witnesses(0, 2, 5).iter().map(|t| t.to_string()).collect();
        assert_eq!(w, ["a", "b"]);
    }
}
