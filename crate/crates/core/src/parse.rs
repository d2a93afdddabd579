//! Polynomial text grammar.
//!
//! ```text
//! poly    := ['+'|'-'] term (('+'|'-') term)*
//! term    := factor ('*' factor)*
//! factor  := number ['i'] | 'i' | '(' complex ')' | var ['^' int] | 'e' ['_'] int
//! var     := 'z' | 'z' ['_'] int          (z is the outer variable, z1..zn inner)
//! complex := signed real/imaginary literals summed, e.g. 0.5+0.5i, -i, 2
//! ```
//!
//! Whitespace is ignored everywhere. A missing `e_j` tag means slot 0.

use crate::error::{Error, Result};
use crate::grade::{Grade, MultiIndex};
use crate::hardy::HardyVector;
use crate::linalg::C64;

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
    // byte offsets in the original text, since whitespace is stripped
    origin: Vec<usize>,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let pos = self.origin.get(self.pos).copied().unwrap_or_else(|| self.origin.last().map_or(0, |p| p + 1));
        Err(Error::Parse { pos, msg: msg.into() })
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn uint(&mut self) -> Result<usize> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        match text.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err("integer too large")
            }
        }
    }

    fn real(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        // scientific exponent, only when followed by a digit or sign
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("bad number {text:?}"))
            }
        }
    }

    /// `number ['i'] | 'i'`
    fn scalar(&mut self) -> Result<C64> {
        if self.eat(b'i') {
            return Ok(C64::new(0.0, 1.0));
        }
        let x = self.real()?;
        if self.eat(b'i') {
            Ok(C64::new(0.0, x))
        } else {
            Ok(C64::new(x, 0.0))
        }
    }

    fn complex_body(&mut self) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    1.0
                }
                Some(b'-') => {
                    self.pos += 1;
                    -1.0
                }
                Some(b')') if !first => return Ok(total),
                _ if first => 1.0,
                _ => return self.err("expected '+', '-' or ')' in complex literal"),
            };
            total += self.scalar()? * sign;
            first = false;
        }
    }
}

#[derive(Default)]
struct Term {
    coeff: Option<C64>,
    outer: usize,
    inner: Vec<usize>,
    coord: Option<usize>,
}

fn factor(cur: &mut Cursor<'_>, term: &mut Term, n: usize) -> Result<()> {
    let mul = |term: &mut Term, v: C64| term.coeff = Some(term.coeff.unwrap_or(C64::new(1.0, 0.0)) * v);
    match cur.peek() {
        Some(b'(') => {
            cur.bump();
            let v = cur.complex_body()?;
            if !cur.eat(b')') {
                return cur.err("expected ')'");
            }
            mul(term, v);
        }
        Some(b'0'..=b'9' | b'.' | b'i') => {
            let v = cur.scalar()?;
            mul(term, v);
        }
        Some(b'z') => {
            let at = cur.pos;
            cur.bump();
            cur.eat(b'_');
            let var = if matches!(cur.peek(), Some(b'0'..=b'9')) { cur.uint()? } else { 0 };
            if var > n {
                cur.pos = at;
                return cur.err(format!("variable z{var} but the grade has n = {n}"));
            }
            let exp = if cur.eat(b'^') { cur.uint()? } else { 1 };
            if var == 0 {
                term.outer = term.outer.saturating_add(exp);
            } else {
                term.inner[var - 1] = term.inner[var - 1].saturating_add(exp);
            }
        }
        Some(b'e') => {
            let at = cur.pos;
            cur.bump();
            cur.eat(b'_');
            let j = cur.uint()?;
            if term.coord.is_some() {
                cur.pos = at;
                return cur.err("coefficient slot given twice");
            }
            term.coord = Some(j);
        }
        Some(c) => return cur.err(format!("unexpected character {:?}", c as char)),
        None => return cur.err("unexpected end of input"),
    }
    Ok(())
}

/// Parses a polynomial into a vector of `grade`. Exponents past the caps give
/// [`Error::OutOfCap`]; malformed text gives [`Error::Parse`].
pub fn parse_polynomial(text: &str, grade: Grade) -> Result<HardyVector> {
    let mut bytes = Vec::new();
    let mut origin = Vec::new();
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            continue;
        }
        let ch = if ch == '·' { '*' } else { ch };
        if !ch.is_ascii() {
            return Err(Error::Parse { pos: i, msg: format!("unexpected character {ch:?}") });
        }
        bytes.push(ch as u8);
        origin.push(i);
    }
    let mut cur = Cursor { s: &bytes, pos: 0, origin };
    if bytes.is_empty() {
        return cur.err("empty polynomial");
    }
    let mut out = HardyVector::zero(grade);
    let mut sign = 1.0;
    if cur.eat(b'-') {
        sign = -1.0;
    } else {
        cur.eat(b'+');
    }
    loop {
        let mut term = Term { inner: vec![0; grade.n], ..Default::default() };
        factor(&mut cur, &mut term, grade.n)?;
        while cur.eat(b'*') {
            factor(&mut cur, &mut term, grade.n)?;
        }
        let value = term.coeff.unwrap_or(C64::new(1.0, 0.0)) * sign;
        let idx = MultiIndex::new(term.outer, term.inner, term.coord.unwrap_or(0));
        if value != C64::new(0.0, 0.0) {
            out.add_term(idx, value)?;
        } else {
            grade.check(&idx)?;
        }
        match cur.bump() {
            None => return Ok(out),
            Some(b'+') => sign = 1.0,
            Some(b'-') => sign = -1.0,
            Some(_) => {
                cur.pos -= 1;
                return cur.err("expected '+', '-' or '*'");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use proptest::prelude::*;

    fn g1() -> Grade {
        Grade::new(1, 4, 4, 1).unwrap()
    }

    #[test]
    fn complex_coefficient_and_monomials() {
        let f = parse_polynomial("(0.5+0.5i)*z^2*z1", g1()).unwrap();
        assert_eq!(f.terms().count(), 1);
        assert_eq!(f.get(&MultiIndex::new(2, vec![1], 0)), c(0.5, 0.5));
    }

    #[test]
    fn whitespace_and_signs() {
        let a = parse_polynomial(" z - z1 ", g1()).unwrap();
        let b = parse_polynomial("z-z_1", g1()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.get(&MultiIndex::new(0, vec![1], 0)), c(-1.0, 0.0));
        let m = parse_polynomial("-2i*z + 1e-3", g1()).unwrap();
        assert_eq!(m.get(&MultiIndex::new(1, vec![0], 0)), c(0.0, -2.0));
        assert_eq!(m.get(&MultiIndex::new(0, vec![0], 0)), c(1e-3, 0.0));
    }

    #[test]
    fn repeated_variables_multiply() {
        let f = parse_polynomial("z*z*z1^2*z1", g1()).unwrap();
        assert_eq!(f.get(&MultiIndex::new(2, vec![3], 0)), c(1.0, 0.0));
    }

    #[test]
    fn coordinate_tags() {
        let g = Grade::new(2, 3, 3, 2).unwrap();
        let f = parse_polynomial("z*e1 - z2*e_0", g).unwrap();
        assert_eq!(f.get(&MultiIndex::new(1, vec![0, 0], 1)), c(1.0, 0.0));
        assert_eq!(f.get(&MultiIndex::new(0, vec![0, 1], 0)), c(-1.0, 0.0));
        assert!(matches!(parse_polynomial("e2", g), Err(Error::CoordOutOfRange { .. })));
    }

    #[test]
    fn cap_and_syntax_errors() {
        assert!(matches!(parse_polynomial("z^9", g1()), Err(Error::OutOfCap(_))));
        assert!(matches!(parse_polynomial("z2", g1()), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("z +", g1()), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("(1+2i", g1()), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("", g1()), Err(Error::Parse { .. })));
        assert!(matches!(parse_polynomial("z z1", g1()), Err(Error::Parse { .. })));
    }

    #[test]
    fn error_position_counts_original_bytes() {
        match parse_polynomial("z +  #", g1()) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn display_roundtrip(terms in proptest::collection::vec((0usize..4, 0usize..3, 0usize..3, 0usize..2, -4i32..4, -4i32..4), 1..6)) {
            let g = Grade::new(2, 3, 2, 2).unwrap();
            let f = HardyVector::from_terms(g, terms.iter().map(|&(a, b1, b2, e, re, im)| {
                (MultiIndex::new(a, vec![b1, b2], e), c(re as f64 * 0.25, im as f64 * 0.5))
            })).unwrap();
            let back = parse_polynomial(&f.to_string(), g).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
