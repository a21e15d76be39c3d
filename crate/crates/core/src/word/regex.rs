//! Regular expressions over state names: juxtaposition, `|`, `*`, `+`, `?`,
//! parentheses and `eps`.

use super::nfa::{Letter, Nfa};
use super::WordError;
use crate::term::is_symbol_char;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String),
    Bar,
    Star,
    Plus,
    Quest,
    Open,
    Close,
}

fn lex(src: &str) -> Result<Vec<Tok>, WordError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '|' => {
                out.push(Tok::Bar);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '?' => {
                out.push(Tok::Quest);
                i += 1
            }
            '(' => {
                out.push(Tok::Open);
                i += 1
            }
            ')' => {
                out.push(Tok::Close);
                i += 1
            }
            c if is_symbol_char(c) => {
                let start = i;
                while i < chars.len() && is_symbol_char(chars[i]) {
                    i += 1;
                }
                out.push(Tok::Name(chars[start..i].iter().collect()));
            }
            other => return Err(WordError::Regex(format!("unexpected character '{other}' in \"{src}\""))),
        }
    }
    Ok(out)
}

struct Parser<'a, F> {
    toks: Vec<Tok>,
    pos: usize,
    resolve: &'a F,
    src: &'a str,
}

impl<F: Fn(&str) -> Option<Letter>> Parser<'_, F> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn alt(&mut self) -> Result<Nfa, WordError> {
        let mut m = self.seq()?;
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            let r = self.seq()?;
            m = m.union(&r);
        }
        Ok(m)
    }

    fn seq(&mut self) -> Result<Nfa, WordError> {
        let mut parts = Vec::new();
        while matches!(self.peek(), Some(Tok::Name(_)) | Some(Tok::Open)) {
            parts.push(self.postfix()?);
        }
        if parts.is_empty() {
            return Err(WordError::Regex(format!("empty alternative in \"{}\"", self.src)));
        }
        let mut it = parts.into_iter();
        let first = it.next().unwrap();
        Ok(it.fold(first, |acc, m| acc.concat(&m)))
    }

    fn postfix(&mut self) -> Result<Nfa, WordError> {
        let mut m = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => m = m.star(),
                Some(Tok::Plus) => m = m.plus(),
                Some(Tok::Quest) => m = m.optional(),
                _ => return Ok(m),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<Nfa, WordError> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Name(n)) => {
                self.pos += 1;
                if n == "eps" {
                    return Ok(Nfa::epsilon());
                }
                let l = (self.resolve)(&n).ok_or_else(|| WordError::UnknownLetter(n.clone()))?;
                Ok(Nfa::letter(l))
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let m = self.alt()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(WordError::Regex(format!("missing \")\" in \"{}\"", self.src)));
                }
                self.pos += 1;
                Ok(m)
            }
            _ => Err(WordError::Regex(format!("expected a letter or \"(\" in \"{}\"", self.src))),
        }
    }
}

/// Thompson-style compilation; the result has a single final node.
pub fn compile_regex(src: &str, resolve: impl Fn(&str) -> Option<Letter>) -> Result<Nfa, WordError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, resolve: &resolve, src };
    let m = p.alt()?;
    if p.pos != p.toks.len() {
        return Err(WordError::Regex(format!("unexpected token in \"{src}\"")));
    }
    Ok(m.single_final())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &str) -> Option<Letter> {
        ["qa", "q", "qb", "p"].iter().position(|x| *x == n).map(|i| i as Letter)
    }

    #[test]
    fn optional_middle() {
        let m = compile_regex("qa q? qb", names).unwrap();
        assert!(m.accepts(&[0, 2]));
        assert!(m.accepts(&[0, 1, 2]));
        assert!(!m.accepts(&[0, 1, 1, 2]));
        assert_eq!(m.finals.len(), 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(compile_regex("zz", names), Err(WordError::UnknownLetter(_))));
        assert!(compile_regex("(p", names).is_err());
        assert!(compile_regex("p |", names).is_err());
        assert!(compile_regex("eps", names).unwrap().accepts(&[]));
    }
}
