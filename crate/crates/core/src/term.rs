//! Unranked ordered labeled trees, hedges, positions and the text syntax.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("invalid position {0:?}")]
    InvalidPosition(Vec<usize>),
}

/// Interned label or state name. Ordered by name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Symbol {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid_name(name: &str) -> bool {
        !name.is_empty() && name.chars().all(is_symbol_char)
    }
}

pub(crate) fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Symbol {
        Symbol::new(s)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub label: Symbol,
    pub children: Hedge,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Hedge(pub Vec<Term>);

impl Term {
    pub fn leaf(label: &str) -> Term {
        Term { label: Symbol::new(label), children: Hedge::empty() }
    }

    pub fn new(label: Symbol, children: Vec<Term>) -> Term {
        Term { label, children: Hedge(children) }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.size()
    }

    pub fn into_hedge(self) -> Hedge {
        Hedge(vec![self])
    }

    pub fn labels(&self, out: &mut BTreeSet<Symbol>) {
        out.insert(self.label.clone());
        self.children.labels(out);
    }
}

impl Hedge {
    pub fn empty() -> Hedge {
        Hedge(Vec::new())
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(Term::size).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The single term of a length-one hedge.
    pub fn as_term(&self) -> Option<&Term> {
        match self.0.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    pub fn labels(&self, out: &mut BTreeSet<Symbol>) {
        for t in &self.0 {
            t.labels(out);
        }
    }

    /// All positions in preorder.
    pub fn positions(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        collect_positions(self, &mut path, &mut out);
        out
    }

    pub fn subterm_at(&self, pos: &[usize]) -> Option<&Term> {
        let (first, rest) = pos.split_first()?;
        let mut t = self.0.get(*first)?;
        for &i in rest {
            t = t.children.0.get(i)?;
        }
        Some(t)
    }
}

fn collect_positions(h: &Hedge, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for (i, t) in h.0.iter().enumerate() {
        path.push(i);
        out.push(path.clone());
        collect_positions(&t.children, path, out);
        path.pop();
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            write!(f, "(")?;
            write_items(f, &self.children)?;
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn write_items(f: &mut fmt::Formatter<'_>, h: &Hedge) -> fmt::Result {
    for (i, t) in h.0.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Hedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "()");
        }
        write_items(f, self)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for Hedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn render_hedge(h: &Hedge) -> String {
    h.to_string()
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().collect(), pos: 0, _src: src }
    }

    fn location(&self, at: usize) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..at.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error(&self, msg: impl Into<String>) -> TermError {
        let (line, col) = self.location(self.pos);
        TermError::Syntax { line, col, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.get(self.pos) {
            if c == '#' {
                while let Some(&c) = self.chars.get(self.pos) {
                    if c == '\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if c.is_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn symbol(&mut self) -> Result<Symbol, TermError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|&c| is_symbol_char(c)) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a symbol"));
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        Ok(Symbol::new(&name))
    }

    fn hedge_body(&mut self) -> Result<Hedge, TermError> {
        // Called after "(" has been consumed; reads up to and including ")".
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Some(')') => {
                    self.pos += 1;
                    return Ok(Hedge(items));
                }
                None => return Err(self.error("unclosed parenthesis")),
                _ => items.push(self.term()?),
            }
        }
    }

    fn term(&mut self) -> Result<Term, TermError> {
        let label = self.symbol()?;
        let children = if self.peek() == Some('(') {
            self.pos += 1;
            self.hedge_body()?
        } else {
            Hedge::empty()
        };
        Ok(Term { label, children })
    }
}

/// Parses `hedge := "()" | term (ws term)*`.
pub fn parse_hedge(text: &str) -> Result<Hedge, TermError> {
    let mut lx = Lexer::new(text);
    match lx.peek() {
        None => return Err(lx.error("empty input (write \"()\" for the empty hedge)")),
        Some('(') => {
            lx.pos += 1;
            if lx.peek() != Some(')') {
                return Err(lx.error("expected \")\" after \"(\""));
            }
            lx.pos += 1;
            if lx.peek().is_some() {
                return Err(lx.error("trailing input after \"()\""));
            }
            return Ok(Hedge::empty());
        }
        _ => {}
    }
    let mut items = Vec::new();
    while lx.peek().is_some() {
        items.push(lx.term()?);
    }
    Ok(Hedge(items))
}

pub fn parse_term(text: &str) -> Result<Term, TermError> {
    let h = parse_hedge(text)?;
    match h.0.len() {
        1 => Ok(h.0.into_iter().next().unwrap()),
        n => Err(TermError::Syntax { line: 1, col: 1, msg: format!("expected one term, found {n}") }),
    }
}

/// Removes the subterm at `pos` and splices `r` into its sibling sequence.
pub fn replace_at(h: &Hedge, pos: &[usize], r: &Hedge) -> Result<Hedge, TermError> {
    let bad = || TermError::InvalidPosition(pos.to_vec());
    let (&last, prefix) = pos.split_last().ok_or_else(bad)?;
    let mut out = h.clone();
    let mut siblings = &mut out.0;
    for &i in prefix {
        siblings = &mut siblings.get_mut(i).ok_or_else(bad)?.children.0;
    }
    if last >= siblings.len() {
        return Err(bad());
    }
    siblings.splice(last..=last, r.0.iter().cloned());
    Ok(out)
}

/// Every term with at most `max_nodes` nodes, ordered by size, then label,
/// then children (hedges with a smaller first item come first).
pub fn enumerate_terms(alphabet: &BTreeSet<Symbol>, max_nodes: usize) -> Vec<Term> {
    let mut terms_by_size: Vec<Vec<Term>> = vec![Vec::new()];
    let mut hedges_by_size: Vec<Vec<Hedge>> = vec![vec![Hedge::empty()]];
    for n in 1..=max_nodes {
        let mut terms = Vec::new();
        for a in alphabet {
            for h in &hedges_by_size[n - 1] {
                terms.push(Term { label: a.clone(), children: h.clone() });
            }
        }
        terms_by_size.push(terms);
        let mut hedges = Vec::new();
        for k in 1..=n {
            for t in &terms_by_size[k] {
                for rest in &hedges_by_size[n - k] {
                    let mut items = Vec::with_capacity(rest.len() + 1);
                    items.push(t.clone());
                    items.extend(rest.0.iter().cloned());
                    hedges.push(Hedge(items));
                }
            }
        }
        hedges_by_size.push(hedges);
    }
    terms_by_size.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let h = parse_hedge("g(a b)").unwrap();
        assert_eq!(h.to_string(), "g(a b)");
        assert_eq!(parse_hedge("()").unwrap(), Hedge::empty());
        assert!(parse_hedge("  # only a comment\n").is_err());
        assert!(parse_hedge("a(").is_err());
    }

    #[test]
    fn splice() {
        let h = parse_hedge("g(a b)").unwrap();
        let r = replace_at(&h, &[0, 1], &parse_hedge("c d").unwrap()).unwrap();
        assert_eq!(r.to_string(), "g(a c d)");
        assert!(replace_at(&h, &[0, 2], &Hedge::empty()).is_err());
    }

    #[test]
    fn enumerate_small() {
        let a: BTreeSet<Symbol> = [Symbol::new("a")].into_iter().collect();
        let got: Vec<String> = enumerate_terms(&a, 3).iter().map(|t| t.to_string()).collect();
        assert_eq!(got, ["a", "a(a)", "a(a a)", "a(a(a))"]);
    }
}
