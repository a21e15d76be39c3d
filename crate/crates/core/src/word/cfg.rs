//! Context-free grammars over numeric letters, weak Chomsky normal form,
//! CYK on set-words, emptiness with witnesses, Bar-Hillel products and
//! nonterminal grafting.

use std::collections::{BTreeSet, HashMap};

use super::nfa::{Letter, Nfa};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Sym {
    T(Letter),
    N(u32),
}

/// A grammar. `start` is meaningful for single-language use; pools shared by
/// several transitions address nonterminals directly.
#[derive(Clone, Debug, Default)]
pub struct Cfg {
    pub names: Vec<String>,
    pub prods: Vec<(u32, Vec<Sym>)>,
    pub start: u32,
}

impl Cfg {
    pub fn new() -> Cfg {
        Cfg::default()
    }

    /// Grammar with a single nonterminal and no productions.
    pub fn empty_language() -> Cfg {
        let mut g = Cfg::new();
        g.start = g.add_nt("S");
        g
    }

    pub fn add_nt(&mut self, name: impl Into<String>) -> u32 {
        self.names.push(name.into());
        (self.names.len() - 1) as u32
    }

    pub fn add_prod(&mut self, head: u32, body: Vec<Sym>) {
        self.prods.push((head, body));
    }

    pub fn num_nts(&self) -> usize {
        self.names.len()
    }

    pub fn terminals(&self) -> BTreeSet<Letter> {
        self.prods
            .iter()
            .flat_map(|(_, b)| b.iter())
            .filter_map(|s| match s {
                Sym::T(t) => Some(*t),
                Sym::N(_) => None,
            })
            .collect()
    }

    /// Copies every nonterminal and production of `other` into `self`;
    /// returns the offset added to `other`'s nonterminal ids.
    pub fn absorb(&mut self, other: &Cfg) -> u32 {
        let base = self.names.len() as u32;
        self.names.extend(other.names.iter().cloned());
        for (h, b) in &other.prods {
            let body = b.iter().map(|s| shift(*s, base)).collect();
            self.prods.push((h + base, body));
        }
        base
    }

    /// Right-linear grammar for an NFA; returns (grammar, start).
    pub fn from_nfa(m: &Nfa) -> Cfg {
        let mut g = Cfg::new();
        let n = m.num_states();
        for s in 0..n {
            g.add_nt(format!("N{s}"));
        }
        for &(s, l, t) in &m.graph.edges {
            let body = match l {
                Some(l) => vec![Sym::T(l), Sym::N(t)],
                None => vec![Sym::N(t)],
            };
            g.add_prod(s, body);
        }
        for &f in &m.finals {
            g.add_prod(f, vec![]);
        }
        g.start = m.initial;
        g
    }

    pub fn map_terminals(&self, f: impl Fn(Letter) -> Sym) -> Cfg {
        let mut g = self.clone();
        for (_, b) in g.prods.iter_mut() {
            for s in b.iter_mut() {
                if let Sym::T(t) = *s {
                    *s = f(t);
                }
            }
        }
        g
    }

    pub fn nullable(&self) -> Vec<bool> {
        let mut null = vec![false; self.num_nts()];
        let mut changed = true;
        while changed {
            changed = false;
            for (h, b) in &self.prods {
                if !null[*h as usize] && b.iter().all(|s| matches!(s, Sym::N(n) if null[*n as usize])) {
                    null[*h as usize] = true;
                    changed = true;
                }
            }
        }
        null
    }

    /// Nonterminals deriving at least one word over `allowed` terminals.
    pub fn productive(&self, allowed: &impl Fn(Letter) -> bool) -> Vec<bool> {
        let mut prod = vec![false; self.num_nts()];
        let mut changed = true;
        while changed {
            changed = false;
            for (h, b) in &self.prods {
                if !prod[*h as usize]
                    && b.iter().all(|s| match s {
                        Sym::T(t) => allowed(*t),
                        Sym::N(n) => prod[*n as usize],
                    })
                {
                    prod[*h as usize] = true;
                    changed = true;
                }
            }
        }
        prod
    }

    pub fn to_cnf(&self) -> Cnf {
        Cnf::from_cfg(self)
    }

    pub fn accepts(&self, w: &[Letter]) -> bool {
        let sets: Vec<BTreeSet<Letter>> = w.iter().map(|&l| BTreeSet::from([l])).collect();
        self.to_cnf().accepts_setword(self.start, &sets)
    }

    pub fn accepts_setword(&self, w: &[BTreeSet<Letter>]) -> bool {
        self.to_cnf().accepts_setword(self.start, w)
    }

    /// Shortest word over `allowed` derivable from `start`, least among the
    /// shortest in letter order.
    pub fn nonempty(&self, allowed: impl Fn(Letter) -> bool) -> Option<Vec<Letter>> {
        self.nonempty_from(self.start, &allowed)
    }

    pub fn nonempty_from(&self, nt: u32, allowed: &impl Fn(Letter) -> bool) -> Option<Vec<Letter>> {
        let best = self.least_words(|t| if allowed(t) { Some((1, vec![t])) } else { None });
        best[nt as usize].as_ref().map(|(_, w)| w.clone())
    }

    /// Least (weight, word) per nonterminal where terminals carry the weight
    /// and word given by `leaf`. Words compare by weight, then letters.
    pub fn least_words(&self, leaf: impl Fn(Letter) -> Option<(usize, Vec<Letter>)>) -> Vec<Option<(usize, Vec<Letter>)>> {
        let mut best: Vec<Option<(usize, Vec<Letter>)>> = vec![None; self.num_nts()];
        let mut leaves: HashMap<Letter, Option<(usize, Vec<Letter>)>> = HashMap::new();
        let mut changed = true;
        while changed {
            changed = false;
            for (h, b) in &self.prods {
                let mut weight = 0;
                let mut word = Vec::new();
                let mut ok = true;
                for s in b {
                    let part = match s {
                        Sym::T(t) => leaves.entry(*t).or_insert_with(|| leaf(*t)).clone(),
                        Sym::N(n) => best[*n as usize].clone(),
                    };
                    match part {
                        Some((w, mut x)) => {
                            weight += w;
                            word.append(&mut x);
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let cand = (weight, word);
                if best[*h as usize].as_ref().is_none_or(|old| cand < *old) {
                    best[*h as usize] = Some(cand);
                    changed = true;
                }
            }
        }
        best
    }

    /// Fresh start deriving both languages.
    pub fn union(&self, other: &Cfg) -> Cfg {
        let mut g = self.clone();
        let base = g.absorb(other);
        let s = g.add_nt("U");
        g.add_prod(s, vec![Sym::N(self.start)]);
        g.add_prod(s, vec![Sym::N(other.start + base)]);
        g.start = s;
        g
    }

    /// Adds `X_q -> q | start(g)` and replaces terminal `q` by `X_q` in the
    /// productions of both grammars. The start stays `self`'s.
    pub fn graft(&self, q: Letter, g: &Cfg) -> Cfg {
        let mut out = self.clone();
        let base = out.absorb(g);
        let x = out.add_nt(format!("X{q}"));
        for (_, b) in out.prods.iter_mut() {
            for s in b.iter_mut() {
                if *s == Sym::T(q) {
                    *s = Sym::N(x);
                }
            }
        }
        out.add_prod(x, vec![Sym::T(q)]);
        out.add_prod(x, vec![Sym::N(g.start + base)]);
        out
    }

    /// Grammar for L(self) ∩ L(m) via the triple construction.
    pub fn bar_hillel(&self, m: &Nfa) -> Cfg {
        let cnf = self.to_cnf();
        let m = m.remove_epsilon().trim();
        let mut g = Cfg::new();
        let start = g.add_nt("S");
        g.start = start;
        let triples = bar_hillel_into(&cnf, &m, |a, b| if a == b { Some(a) } else { None }, &mut g);
        for &f in &m.finals {
            if let Some(&x) = triples.get(&(m.initial, self.start, f)) {
                g.add_prod(start, vec![Sym::N(x)]);
            }
        }
        if cnf.nullable.get(self.start as usize).copied().unwrap_or(false) && m.finals.contains(&m.initial) {
            g.add_prod(start, vec![]);
        }
        g.prune()
    }

    /// Drops unproductive and unreachable material, keeping `start`.
    pub fn prune(&self) -> Cfg {
        let productive = self.productive(&|_| true);
        let mut reach = vec![false; self.num_nts()];
        reach[self.start as usize] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for (h, b) in &self.prods {
                if reach[*h as usize] && b.iter().all(|s| !matches!(s, Sym::N(n) if !productive[*n as usize])) {
                    for s in b {
                        if let Sym::N(n) = s {
                            if !reach[*n as usize] {
                                reach[*n as usize] = true;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        let keep = |n: u32| reach[n as usize] && productive[n as usize];
        let mut map = vec![u32::MAX; self.num_nts()];
        let mut g = Cfg::new();
        for n in 0..self.num_nts() as u32 {
            if keep(n) || n == self.start {
                map[n as usize] = g.add_nt(self.names[n as usize].clone());
            }
        }
        g.start = map[self.start as usize];
        for (h, b) in &self.prods {
            if !keep(*h) || b.iter().any(|s| matches!(s, Sym::N(n) if !keep(*n))) {
                continue;
            }
            let body = b.iter().map(|s| if let Sym::N(n) = s { Sym::N(map[*n as usize]) } else { *s }).collect();
            g.add_prod(map[*h as usize], body);
        }
        g
    }
}

/// Productive triples `(p, A, q)` of the Bar-Hillel construction for an
/// ε-free `m`, written into `out` as fresh nonterminals. `pair` combines a
/// grammar terminal with an automaton letter into the output letter.
pub fn bar_hillel_into(cnf: &Cnf, m: &Nfa, pair: impl Fn(Letter, Letter) -> Option<Letter>, out: &mut Cfg) -> HashMap<(u32, u32, u32), u32> {
    let mut ids: HashMap<(u32, u32, u32), u32> = HashMap::new();
    let mut by_left: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
    let mut by_right: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
    for &(a, b, c) in &cnf.binary {
        by_left.entry(b).or_default().push((a, c));
        by_right.entry(c).or_default().push((a, b));
    }
    // from[(p, X)] = ends q with (p, X, q); to[(q, X)] = starts p with (p, X, q).
    let mut from: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut to: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut queue: Vec<(u32, u32, u32)> = Vec::new();
    let mut seen_prod: std::collections::HashSet<(u32, u32, u32)> = std::collections::HashSet::new();
    let intern = |t: (u32, u32, u32), out: &mut Cfg, queue: &mut Vec<(u32, u32, u32)>, ids: &mut HashMap<(u32, u32, u32), u32>| -> u32 {
        if let Some(&x) = ids.get(&t) {
            return x;
        }
        let x = out.add_nt(format!("{}_{}_{}", t.0, t.1, t.2));
        ids.insert(t, x);
        queue.push(t);
        x
    };
    for &(a, t) in &cnf.terminal {
        for &(p, l, q) in &m.graph.edges {
            let Some(l) = l else { continue };
            if let Some(x) = pair(t, l) {
                let h = intern((p, a, q), out, &mut queue, &mut ids);
                out.add_prod(h, vec![Sym::T(x)]);
            }
        }
    }
    while let Some((p, x, q)) = queue.pop() {
        from.entry((p, x)).or_default().push(q);
        to.entry((q, x)).or_default().push(p);
        let me = ids[&(p, x, q)];
        if let Some(rules) = by_left.get(&x) {
            for &(a, c) in rules {
                for r in from.get(&(q, c)).cloned().unwrap_or_default() {
                    if seen_prod.insert((ids[&(p, x, q)], ids[&(q, c, r)], a)) {
                        let right = ids[&(q, c, r)];
                        let h = intern((p, a, r), out, &mut queue, &mut ids);
                        out.add_prod(h, vec![Sym::N(me), Sym::N(right)]);
                    }
                }
            }
        }
        if let Some(rules) = by_right.get(&x) {
            for &(a, b) in rules {
                for o in to.get(&(p, b)).cloned().unwrap_or_default() {
                    if seen_prod.insert((ids[&(o, b, p)], me, a)) {
                        let left = ids[&(o, b, p)];
                        let h = intern((o, a, q), out, &mut queue, &mut ids);
                        out.add_prod(h, vec![Sym::N(left), Sym::N(me)]);
                    }
                }
            }
        }
    }
    ids
}

fn shift(s: Sym, base: u32) -> Sym {
    match s {
        Sym::N(n) => Sym::N(n + base),
        t => t,
    }
}

/// Weak Chomsky normal form keeping every original nonterminal id: the
/// ε-free part of each nonterminal's language is derived with binary and
/// terminal rules, and `nullable` records whether ε belongs to it.
#[derive(Clone, Debug)]
pub struct Cnf {
    pub num_nts: usize,
    pub nullable: Vec<bool>,
    pub binary: Vec<(u32, u32, u32)>,
    pub terminal: Vec<(u32, Letter)>,
}

impl Cnf {
    pub fn from_cfg(g: &Cfg) -> Cnf {
        let mut names = g.names.len() as u32;
        let mut fresh = || {
            names += 1;
            names - 1
        };
        // Binarize with terminal wrappers; keep unit and ε rules for now.
        let mut term_nt: HashMap<Letter, u32> = HashMap::new();
        let mut rules: Vec<(u32, Vec<u32>)> = Vec::new();
        let mut terminal: Vec<(u32, Letter)> = Vec::new();
        for (h, body) in &g.prods {
            if let [Sym::T(t)] = body.as_slice() {
                terminal.push((*h, *t));
                continue;
            }
            let syms: Vec<u32> = body
                .iter()
                .map(|s| match s {
                    Sym::N(n) => *n,
                    Sym::T(t) => *term_nt.entry(*t).or_insert_with(|| {
                        let x = fresh();
                        terminal.push((x, *t));
                        x
                    }),
                })
                .collect();
            if syms.len() <= 2 {
                rules.push((*h, syms));
                continue;
            }
            let mut head = *h;
            for i in 0..syms.len() - 2 {
                let next = fresh();
                rules.push((head, vec![syms[i], next]));
                head = next;
            }
            rules.push((head, syms[syms.len() - 2..].to_vec()));
        }
        let n = names as usize;
        let mut nullable = vec![false; n];
        let mut changed = true;
        while changed {
            changed = false;
            for (h, b) in &rules {
                if !nullable[*h as usize] && b.iter().all(|x| nullable[*x as usize]) {
                    nullable[*h as usize] = true;
                    changed = true;
                }
            }
        }
        // Remove ε: binary rules spawn unit variants.
        let mut binary: BTreeSet<(u32, u32, u32)> = BTreeSet::new();
        let mut unit: BTreeSet<(u32, u32)> = BTreeSet::new();
        for (h, b) in &rules {
            match b.as_slice() {
                [] => {}
                [x] => {
                    unit.insert((*h, *x));
                }
                [x, y] => {
                    binary.insert((*h, *x, *y));
                    if nullable[*y as usize] {
                        unit.insert((*h, *x));
                    }
                    if nullable[*x as usize] {
                        unit.insert((*h, *y));
                    }
                }
                _ => unreachable!(),
            }
        }
        // Unit closure: A ⇒* B by unit rules gives A all of B's rules.
        let mut reach: Vec<BTreeSet<u32>> = (0..n as u32).map(|a| BTreeSet::from([a])).collect();
        let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in &unit {
            succ[a as usize].push(b);
        }
        for (a, r) in reach.iter_mut().enumerate() {
            let mut stack = vec![a as u32];
            while let Some(x) = stack.pop() {
                for &y in &succ[x as usize] {
                    if r.insert(y) {
                        stack.push(y);
                    }
                }
            }
        }
        let mut by_head_bin: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for &(h, x, y) in &binary {
            by_head_bin[h as usize].push((x, y));
        }
        let mut by_head_term: Vec<Vec<Letter>> = vec![Vec::new(); n];
        for &(h, t) in &terminal {
            by_head_term[h as usize].push(t);
        }
        let mut out_bin = BTreeSet::new();
        let mut out_term = BTreeSet::new();
        for a in 0..n {
            for &b in &reach[a] {
                for &(x, y) in &by_head_bin[b as usize] {
                    out_bin.insert((a as u32, x, y));
                }
                for &t in &by_head_term[b as usize] {
                    out_term.insert((a as u32, t));
                }
            }
        }
        Cnf { num_nts: n, nullable, binary: out_bin.into_iter().collect(), terminal: out_term.into_iter().collect() }
    }

    /// CYK table over a set-word: `table[i][len]` holds the nonterminals
    /// deriving some choice of the `len` letters starting at `i` (len ≥ 1).
    pub fn cyk(&self, w: &[BTreeSet<Letter>]) -> Vec<Vec<Vec<bool>>> {
        let n = w.len();
        let mut table = vec![vec![Vec::new(); n + 1]; n];
        for (i, set) in w.iter().enumerate() {
            let mut cell = vec![false; self.num_nts];
            for &(a, t) in &self.terminal {
                if set.contains(&t) {
                    cell[a as usize] = true;
                }
            }
            table[i][1] = cell;
        }
        for len in 2..=n {
            for i in 0..=n - len {
                let mut cell = vec![false; self.num_nts];
                for k in 1..len {
                    let left = &table[i][k];
                    let right = &table[i + k][len - k];
                    for &(a, b, c) in &self.binary {
                        if !cell[a as usize] && left[b as usize] && right[c as usize] {
                            cell[a as usize] = true;
                        }
                    }
                }
                table[i][len] = cell;
            }
        }
        table
    }

    /// Nonterminals deriving some choice of the whole set-word.
    pub fn derivers(&self, w: &[BTreeSet<Letter>]) -> Vec<bool> {
        if w.is_empty() {
            return self.nullable.clone();
        }
        let table = self.cyk(w);
        table[0][w.len()].clone()
    }

    pub fn accepts_setword(&self, start: u32, w: &[BTreeSet<Letter>]) -> bool {
        self.derivers(w)[start as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// S -> 0 S 1 | ε
    fn anbn() -> Cfg {
        let mut g = Cfg::new();
        let s = g.add_nt("S");
        g.add_prod(s, vec![Sym::T(0), Sym::N(s), Sym::T(1)]);
        g.add_prod(s, vec![]);
        g.start = s;
        g
    }

    #[test]
    fn cyk_anbn() {
        let g = anbn();
        assert!(g.accepts(&[0, 0, 1, 1]));
        assert!(!g.accepts(&[0, 1, 0]));
        assert!(g.accepts(&[]));
        assert_eq!(g.nonempty(|_| true), Some(vec![]));
    }

    #[test]
    fn no_base_case() {
        let mut g = Cfg::new();
        let s = g.add_nt("S");
        g.add_prod(s, vec![Sym::T(0), Sym::N(s)]);
        assert_eq!(g.nonempty(|_| true), None);
    }

    #[test]
    fn bar_hillel_anbn() {
        let g = anbn();
        let m = Nfa::letter(0).concat(&Nfa::letter(1).star());
        let h = g.bar_hillel(&m);
        assert!(h.accepts(&[0, 1]));
        assert!(!h.accepts(&[]));
        assert!(!h.accepts(&[0, 0, 1, 1]));
        let only_b = g.bar_hillel(&Nfa::letter(1).star());
        assert!(only_b.accepts(&[]));
        assert!(!only_b.accepts(&[1]));
    }

    #[test]
    fn graft_collapse() {
        let mut g1 = Cfg::new();
        let s = g1.add_nt("S");
        g1.add_prod(s, vec![Sym::T(2)]);
        let mut g = Cfg::new();
        let i = g.add_nt("I");
        g.add_prod(i, vec![Sym::T(0), Sym::T(1)]);
        let r = g1.graft(2, &g);
        assert!(r.accepts(&[2]));
        assert!(r.accepts(&[0, 1]));
        assert!(!r.accepts(&[0]));
    }
}
