//! Forward saturation for XACU+ systems into a context-free hedge automaton.
//!
//! A child of a node, seen from its parent, is an item that evolves on its
//! own: it may be renamed, get siblings inserted next to it, be replaced by
//! parameter terms, or vanish leaving its children behind. The grammar below
//! names these evolutions directly:
//!
//! - `T(x,d)`: terminal, a node of origin `x` whose label is now `d`
//! - `B(x,d)`, `W(x,d)`: children words of such a node (`W` adds the
//!   insertions under label `d`)
//! - `Ev(x,d)`: the hedge an item of origin `x` currently labeled `d` becomes
//! - `Item(x)`: the hedge an item of origin `x` becomes
//! - `Ins(S)`: items inserted anywhere among the children while the node
//!   carries a label of `S`; `Copy(N, S)` is `N` with such insertions at
//!   every inner boundary.
//!
//! This is the collapse-free form of the sibling rules read as collapsing
//! transitions (`p q -> q`, `q p -> q`, `p1 .. pn -> q`, `() -> q`, and the
//! spliced children for `DELS`), with every collapse grafted in place.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{check_class, join_parameters_cf, ClosureError};
use crate::cfha::CfHa;
use crate::ha::{fresh_name, Ha};
use crate::rules::{Ptrs, RuleClass, RuleKind, UpdateRule};
use crate::term::Symbol;
use crate::word::{Cfg, Sym};

#[derive(Clone, Debug)]
pub struct PostStarCfHa {
    /// Collapse-free automaton; states are (origin, current label) pairs.
    pub automaton: CfHa,
    /// The sibling rules as collapsing transitions, before grafting.
    pub collapsing: Vec<String>,
    /// Origin state and label of each automaton state.
    pub origin: Vec<(u32, Symbol)>,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Key {
    Orig(u32),
    B(u32, Symbol),
    W(u32, Symbol),
    Ev(u32, Symbol),
    Item(u32),
    Ins(u64),
    Copy(u32, u64),
}

struct Builder<'a> {
    pool: Cfg,
    keys: HashMap<Key, u32>,
    /// Base nonterminal and insertion set of each copy.
    copy_of: HashMap<u32, (u32, u64)>,
    pending: Vec<u32>,
    insert_labels: Vec<Symbol>,
    inserts: &'a BTreeMap<Symbol, Vec<u32>>,
}

impl Builder<'_> {
    fn nt(&mut self, key: Key) -> u32 {
        if let Some(&n) = self.keys.get(&key) {
            return n;
        }
        let n = self.pool.add_nt(format!("{key:?}"));
        self.keys.insert(key.clone(), n);
        match key {
            Key::Ins(set) => {
                self.pool.add_prod(n, vec![]);
                for (i, d) in self.insert_labels.clone().iter().enumerate() {
                    if set & (1 << i) == 0 {
                        continue;
                    }
                    for p in self.inserts[d].clone() {
                        let item = self.nt(Key::Item(p));
                        let c = self.copy(item, set);
                        self.pool.add_prod(n, vec![Sym::N(c), Sym::N(n)]);
                    }
                }
            }
            Key::Copy(base, set) => {
                self.copy_of.insert(n, (base, set));
                self.pending.push(n);
            }
            _ => {}
        }
        n
    }

    /// `n` with insertions from `set` at every inner boundary.
    fn copy(&mut self, n: u32, set: u64) -> u32 {
        match self.copy_of.get(&n) {
            Some(&(base, s)) => self.nt(Key::Copy(base, s | set)),
            None => self.nt(Key::Copy(n, set)),
        }
    }

    /// Expands pending copies until every copy has its productions.
    fn expand_copies(&mut self) {
        let mut by_head: HashMap<u32, Vec<Vec<Sym>>> = HashMap::new();
        let mut indexed = 0;
        while let Some(c) = self.pending.pop() {
            for (h, b) in &self.pool.prods[indexed..] {
                by_head.entry(*h).or_default().push(b.clone());
            }
            indexed = self.pool.prods.len();
            let (base, set) = self.copy_of[&c];
            let ins = self.nt(Key::Ins(set));
            for body in by_head.get(&base).cloned().unwrap_or_default() {
                let mut out = Vec::with_capacity(body.len() * 2);
                for (i, s) in body.iter().enumerate() {
                    if i > 0 {
                        out.push(Sym::N(ins));
                    }
                    out.push(match *s {
                        Sym::T(t) => Sym::T(t),
                        Sym::N(m) => Sym::N(self.copy(m, set)),
                    });
                }
                self.pool.add_prod(c, out);
            }
        }
    }
}

/// post* of a regular automaton, through its context-free reading.
pub fn post_star_xacu_plus_ha(r: &Ptrs, l: &Ha) -> Result<PostStarCfHa, ClosureError> {
    post_star_xacu_plus(r, &CfHa::from_ha(l))
}

pub fn post_star_xacu_plus(r: &Ptrs, l: &CfHa) -> Result<PostStarCfHa, ClosureError> {
    check_class(r, RuleClass::XacuPlus)?;
    let (joined, pmap) = join_parameters_cf(l, &r.parameters);
    let nx = joined.num_states() as u32;
    let param = |p: u32| pmap[p as usize];

    let mut init: Vec<BTreeSet<Symbol>> = vec![BTreeSet::new(); nx as usize];
    for rule in &joined.rules {
        init[rule.target as usize].insert(rule.label.clone());
    }
    // Root relabelings c -> d, from REN and relabeling insertions.
    let relabels: Vec<(&UpdateRule, Symbol, Symbol)> =
        r.rules.iter().filter(|x| x.relabel != x.subject).map(|x| (x, x.subject.clone(), x.relabel.clone())).collect();
    let labels_of: Vec<BTreeSet<Symbol>> = init
        .iter()
        .map(|start| {
            let mut seen = start.clone();
            let mut stack: Vec<Symbol> = start.iter().cloned().collect();
            while let Some(c) = stack.pop() {
                for (_, from, to) in &relabels {
                    if *from == c && seen.insert(to.clone()) {
                        stack.push(to.clone());
                    }
                }
            }
            seen
        })
        .collect();

    let mut inserts: BTreeMap<Symbol, Vec<u32>> = BTreeMap::new();
    for x in r.rules.iter().filter(|x| x.kind == RuleKind::InsInto) {
        inserts.entry(x.subject.clone()).or_default().push(param(x.params[0]));
    }
    let insert_labels: Vec<Symbol> = inserts.keys().cloned().collect();
    assert!(insert_labels.len() <= 64, "too many labels with INSI rules");

    let mut b = Builder { pool: Cfg::new(), keys: HashMap::new(), copy_of: HashMap::new(), pending: Vec::new(), insert_labels: insert_labels.clone(), inserts: &inserts };

    // Output states, one per (origin, label).
    let mut out = CfHa { alphabet: joined.alphabet.clone(), ..CfHa::default() };
    out.alphabet.extend(r.labels());
    let mut origin = Vec::new();
    let mut term_of: BTreeMap<(u32, Symbol), u32> = BTreeMap::new();
    for x in 0..nx {
        for d in &labels_of[x as usize] {
            let hint = format!("{}_{}", joined.state_name(x), d);
            let name = fresh_name(&hint, |n| out.state_id(n).is_some());
            term_of.insert((x, d.clone()), out.add_state(&name));
            origin.push((x, d.clone()));
        }
    }

    // Imported horizontal grammars, letters read as items.
    let orig_base = b.pool.num_nts() as u32;
    for (i, name) in joined.pool.names.iter().enumerate() {
        let n = b.pool.add_nt(format!("G{i}:{name}"));
        b.keys.insert(Key::Orig(i as u32), n);
    }
    for (h, body) in &joined.pool.prods {
        let body = body
            .iter()
            .map(|s| match *s {
                Sym::N(m) => Sym::N(orig_base + m),
                Sym::T(x) => Sym::N(b.nt(Key::Item(x))),
            })
            .collect();
        b.pool.add_prod(orig_base + h, body);
    }

    let mut collapsing = Vec::new();
    for x in 0..nx {
        for d in labels_of[x as usize].clone() {
            let bn = b.nt(Key::B(x, d.clone()));
            for rule in joined.rules.iter().filter(|t| t.target == x && t.label == d) {
                b.pool.add_prod(bn, vec![Sym::N(orig_base + rule.start)]);
            }
            let ev = b.nt(Key::Ev(x, d.clone()));
            b.pool.add_prod(ev, vec![Sym::T(term_of[&(x, d.clone())])]);
            for rule in &r.rules {
                let items: Vec<Sym> = rule.params.iter().map(|&p| Sym::N(b.nt(Key::Item(param(p))))).collect();
                if rule.relabel == d && labels_of[x as usize].contains(&rule.subject) {
                    // Children words: the node took label d through this rule.
                    let w = Sym::N(b.nt(Key::W(x, rule.subject.clone())));
                    let body = match rule.kind {
                        RuleKind::Ren => vec![w],
                        RuleKind::InsFirst => vec![items[0], w],
                        RuleKind::InsLast => vec![w, items[0]],
                        _ => Vec::new(),
                    };
                    if !body.is_empty() {
                        b.pool.add_prod(bn, body);
                    }
                }
                if rule.subject != d {
                    continue;
                }
                let me = Sym::N(ev);
                let body = match rule.kind {
                    RuleKind::InsLeft => vec![items[0], me],
                    RuleKind::InsRight => vec![me, items[0]],
                    RuleKind::Rpl => items.clone(),
                    RuleKind::Dels => vec![Sym::N(b.nt(Key::W(x, d.clone())))],
                    RuleKind::Ren | RuleKind::InsFirst | RuleKind::InsLast if rule.relabel != d => {
                        vec![Sym::N(b.nt(Key::Ev(x, rule.relabel.clone())))]
                    }
                    _ => continue,
                };
                b.pool.add_prod(ev, body);
            }
            let w = b.nt(Key::W(x, d.clone()));
            match insert_labels.iter().position(|l| *l == d) {
                Some(i) => {
                    let set = 1u64 << i;
                    let ins = b.nt(Key::Ins(set));
                    let c = b.copy(bn, set);
                    b.pool.add_prod(w, vec![Sym::N(ins), Sym::N(c), Sym::N(ins)]);
                }
                None => b.pool.add_prod(w, vec![Sym::N(bn)]),
            }
        }
        let item = b.nt(Key::Item(x));
        for d in &init[x as usize] {
            let ev = b.nt(Key::Ev(x, d.clone()));
            b.pool.add_prod(item, vec![Sym::N(ev)]);
        }
    }
    for rule in &r.rules {
        let p = |i: usize| joined.state_name(param(rule.params[i])).to_string();
        let line = match rule.kind {
            RuleKind::InsLeft => format!("{} q -> q  (q labeled {})", p(0), rule.subject),
            RuleKind::InsRight => format!("q {} -> q  (q labeled {})", p(0), rule.subject),
            RuleKind::Rpl if rule.params.is_empty() => format!("() -> q  (q labeled {})", rule.subject),
            RuleKind::Rpl => format!("{} -> q  (q labeled {})", (0..rule.params.len()).map(p).collect::<Vec<_>>().join(" "), rule.subject),
            RuleKind::Dels => format!("children of q -> q  (q labeled {})", rule.subject),
            _ => continue,
        };
        collapsing.push(line);
    }
    b.expand_copies();

    for ((x, d), &t) in &term_of {
        let w = b.keys[&Key::W(*x, d.clone())];
        out.rules.push(crate::cfha::CfRule { label: d.clone(), start: w, target: t });
    }
    out.pool = b.pool;
    // A root ends as a single term T(x,d) derivable from Item(q) for a final q.
    let unit = unit_terminals(&out.pool);
    for &f in &joined.finals {
        if let Some(&item) = b.keys.get(&Key::Item(f)) {
            out.finals.extend(unit[item as usize].iter().copied());
        }
    }
    log::debug!("post* (XACU+): {} nonterminals, {} productions", out.pool.num_nts(), out.pool.prods.len());
    let automaton = out.prune();
    Ok(PostStarCfHa { automaton, collapsing, origin })
}

/// For every nonterminal, the terminals it derives as one-letter words.
fn unit_terminals(g: &Cfg) -> Vec<BTreeSet<u32>> {
    let nullable = g.nullable();
    let null = |s: &Sym| matches!(s, Sym::N(n) if nullable[*n as usize]);
    let mut unit: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); g.num_nts()];
    let mut changed = true;
    while changed {
        changed = false;
        for (h, body) in &g.prods {
            for (i, s) in body.iter().enumerate() {
                if !body.iter().enumerate().all(|(j, o)| j == i || null(o)) {
                    continue;
                }
                let add: Vec<u32> = match *s {
                    Sym::T(t) => vec![t],
                    Sym::N(m) => unit[m as usize].iter().copied().collect(),
                };
                for t in add {
                    changed |= unit[*h as usize].insert(t);
                }
            }
        }
    }
    unit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules;
    use crate::term::parse_term;
    use crate::word::Nfa;

    fn leaf_params() -> Ha {
        let mut a = Ha::new();
        let pa = a.add_state("p_a");
        let pb = a.add_state("p_b");
        a.add_rule(Symbol::new("a"), Nfa::epsilon(), pa);
        a.add_rule(Symbol::new("b"), Nfa::epsilon(), pb);
        a
    }

    #[test]
    fn anbn_from_c() {
        let mut l = Ha::new();
        let q = l.add_state("q_c");
        l.add_rule(Symbol::new("c"), Nfa::epsilon(), q);
        l.finals.insert(q);
        let r = parse_rules("INSF c c' p_a\nINSL c' c p_b\n", &leaf_params()).unwrap();
        let post = post_star_xacu_plus_ha(&r, &l).unwrap().automaton.prepare();
        for (t, want) in [("c", true), ("c(a b)", true), ("c(a a b b)", true), ("c(a b b)", false), ("c'(a)", true), ("c(b a)", false)] {
            assert_eq!(post.accepts(&parse_term(t).unwrap()), want, "{t}");
        }
    }
}
