//! Ordinals below epsilon_0 in Cantor normal form.
//!
//! An ordinal is a sum `w^a1*c1 + ... + w^ak*ck` with strictly decreasing
//! exponents (themselves ordinals) and positive integer coefficients. The
//! text form uses `w` for omega: `w^2*2+1`, `w^(w+1)*3`, `w*1+1`, `5`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ordinal {
    /// CNF terms (exponent, coefficient), exponents strictly decreasing.
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: vec![] }
    }

    pub fn one() -> Self {
        Ordinal::from_nat(1)
    }

    pub fn omega() -> Self {
        Ordinal { terms: vec![(Ordinal::one(), 1)] }
    }

    pub fn from_nat(n: u64) -> Self {
        if n == 0 {
            Ordinal::zero()
        } else {
            Ordinal { terms: vec![(Ordinal::zero(), n)] }
        }
    }

    /// `w^e * c`, for c >= 1.
    pub fn power_times(e: Ordinal, c: u64) -> Self {
        assert!(c >= 1);
        Ordinal { terms: vec![(e, c)] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.len() <= 1 && self.terms.first().map_or(true, |(e, _)| e.is_zero())
    }

    pub fn as_nat(&self) -> Option<u64> {
        if self.is_zero() {
            Some(0)
        } else if self.is_finite() {
            Some(self.terms[0].1)
        } else {
            None
        }
    }

    pub fn terms(&self) -> &[(Ordinal, u64)] {
        &self.terms
    }

    pub fn leading(&self) -> Option<(&Ordinal, u64)> {
        self.terms.first().map(|(e, c)| (e, *c))
    }

    /// Finite tail: the coefficient of w^0 (0 if absent).
    pub fn finite_part(&self) -> u64 {
        match self.terms.last() {
            Some((e, c)) if e.is_zero() => *c,
            _ => 0,
        }
    }

    /// The ordinal with the finite tail removed (zero or a limit ordinal).
    pub fn limit_part(&self) -> Ordinal {
        let mut t = self.terms.clone();
        if let Some((e, _)) = t.last() {
            if e.is_zero() {
                t.pop();
            }
        }
        Ordinal { terms: t }
    }

    pub fn is_successor(&self) -> bool {
        self.finite_part() > 0
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && !self.is_successor()
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Ordinal::one())
    }

    /// Predecessor of a successor ordinal.
    pub fn pred(&self) -> Option<Ordinal> {
        let m = self.finite_part();
        if m == 0 {
            return None;
        }
        let mut t = self.terms.clone();
        if m == 1 {
            t.pop();
        } else {
            t.last_mut().unwrap().1 -= 1;
        }
        Some(Ordinal { terms: t })
    }

    /// Ordinal addition (left absorption of small terms).
    pub fn add(&self, b: &Ordinal) -> Ordinal {
        let Some((eb, cb)) = b.leading() else { return self.clone() };
        let mut t: Vec<(Ordinal, u64)> =
            self.terms.iter().filter(|(e, _)| e > eb).cloned().collect();
        let merged = self.terms.iter().find(|(e, _)| e == eb).map_or(0, |(_, c)| *c);
        t.push((eb.clone(), merged + cb));
        t.extend(b.terms[1..].iter().cloned());
        Ordinal { terms: t }
    }

    /// Ordinal multiplication.
    pub fn mul(&self, b: &Ordinal) -> Ordinal {
        if self.is_zero() || b.is_zero() {
            return Ordinal::zero();
        }
        let (ea, ca) = self.leading().unwrap();
        let mut acc = Ordinal::zero();
        for (eb, cb) in &b.terms {
            let part = if eb.is_zero() {
                // right factor finite: multiply the leading coefficient
                let mut t = self.terms.clone();
                t[0].1 = ca * cb;
                Ordinal { terms: t }
            } else {
                Ordinal::power_times(ea.add(eb), *cb)
            };
            acc = acc.add(&part);
        }
        acc
    }

    /// Left subtraction: the unique x with `b + x = self`, defined for b <= self.
    pub fn left_sub(&self, b: &Ordinal) -> Option<Ordinal> {
        match self.cmp(b) {
            Ordering::Less => None,
            Ordering::Equal => Some(Ordinal::zero()),
            Ordering::Greater => {
                // drop the common prefix of CNF terms
                let mut i = 0;
                while i < b.terms.len()
                    && i < self.terms.len()
                    && self.terms[i] == b.terms[i]
                {
                    i += 1;
                }
                if i == b.terms.len() {
                    return Some(Ordinal { terms: self.terms[i..].to_vec() });
                }
                // first difference: exponents equal with larger coefficient here,
                // or a strictly larger exponent here
                let (eb, cb) = &b.terms[i];
                let (ea, ca) = &self.terms[i];
                let mut t;
                if ea == eb {
                    debug_assert!(ca > cb);
                    t = vec![(ea.clone(), ca - cb)];
                    t.extend(self.terms[i + 1..].iter().cloned());
                } else {
                    debug_assert!(ea > eb);
                    t = self.terms[i..].to_vec();
                }
                Some(Ordinal { terms: t })
            }
        }
    }

    /// Number of terms in the CNF expression tree, exponents included
    /// recursively (a finite size measure; zero has size 0).
    pub fn cnf_size(&self) -> usize {
        self.terms.iter().map(|(e, _)| 1 + e.cnf_size()).sum::<usize>()
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for ((ea, ca), (eb, cb)) in self.terms.iter().zip(other.terms.iter()) {
            match ea.cmp(eb).then(ca.cmp(cb)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
            } else if e.as_nat() == Some(1) {
                write!(f, "w*{c}")?;
            } else if let Some(k) = e.as_nat() {
                write!(f, "w^{k}*{c}")?;
            } else {
                write!(f, "w^({e})*{c}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad ordinal expression at byte {at}: {msg}")]
pub struct OrdinalParseError {
    pub at: usize,
    pub msg: String,
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T, OrdinalParseError> {
        Err(OrdinalParseError { at: self.i, msg: msg.to_string() })
    }

    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.i < self.s.len() && self.s[self.i] == b {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<u64, OrdinalParseError> {
        self.skip_ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.s[start..self.i])
            .unwrap()
            .parse()
            .or_else(|_| self.err("number too large"))
    }

    fn expr(&mut self) -> Result<Ordinal, OrdinalParseError> {
        let mut acc = self.term()?;
        while self.eat(b'+') {
            let t = self.term()?;
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Ordinal, OrdinalParseError> {
        self.skip_ws();
        if self.i >= self.s.len() {
            return self.err("expected a term");
        }
        if self.s[self.i] == b'w' {
            self.i += 1;
            let exp = if self.eat(b'^') {
                if self.eat(b'(') {
                    let e = self.expr()?;
                    if !self.eat(b')') {
                        return self.err("expected ')'");
                    }
                    e
                } else if self.eat(b'w') {
                    // bare `w^w`; anything larger needs parentheses
                    Ordinal::omega()
                } else {
                    Ordinal::from_nat(self.number()?)
                }
            } else {
                Ordinal::one()
            };
            let coeff = if self.eat(b'*') { self.number()? } else { 1 };
            if coeff == 0 {
                return self.err("zero coefficient");
            }
            Ok(Ordinal::power_times(exp, coeff))
        } else {
            Ok(Ordinal::from_nat(self.number()?))
        }
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { s: s.as_bytes(), i: 0 };
        let o = p.expr()?;
        p.skip_ws();
        if p.i != p.s.len() {
            return p.err("trailing input");
        }
        Ok(o)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(o("w*1+1").to_string(), "w*1+1");
        assert_eq!(o("w^2*2+1").to_string(), "w^2*2+1");
        assert_eq!(o("w^(w)*2+1").to_string(), "w^(w*1)*2+1");
        assert_eq!(o("w").to_string(), "w*1");
        assert_eq!(o("0").to_string(), "0");
        // non-canonical input is normalized by CNF addition
        assert_eq!(o("1+w"), o("w"));
        assert_eq!(o("w+w"), o("w*2"));
        assert!("w^".parse::<Ordinal>().is_err());
        assert!("w*0".parse::<Ordinal>().is_err());
        assert!("w)".parse::<Ordinal>().is_err());
    }

    #[test]
    fn order_is_lexicographic_on_cnf() {
        let mut v = vec![o("w^2"), o("0"), o("w+3"), o("3"), o("w"), o("w*2"), o("w^w")];
        v.sort();
        let shown: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(shown, ["0", "3", "w*1", "w*1+3", "w*2", "w^2*1", "w^(w*1)*1"]);
    }

    #[test]
    fn addition_absorbs() {
        assert_eq!(o("3").add(&o("w")), o("w"));
        assert_eq!(o("w+5").add(&o("w")), o("w*2"));
        assert_eq!(o("w^2").add(&o("w+1")), o("w^2+w+1"));
    }

    #[test]
    fn multiplication_examples() {
        assert_eq!(o("w+1").mul(&o("w")), o("w^2"));
        assert_eq!(o("w").mul(&o("w")), o("w^2"));
        assert_eq!(o("2").mul(&o("3")), o("6"));
        assert_eq!(o("w").mul(&o("2")), o("w*2"));
        assert_eq!(o("w+1").mul(&o("2")), o("w*2+1"));
        assert_eq!(o("w^2+w").mul(&o("w")), o("w^3"));
        assert_eq!(o("w").mul(&o("w+1")), o("w^2+w"));
    }

    #[test]
    fn successor_limit_structure() {
        assert!(o("w").is_limit());
        assert!(o("w+1").is_successor());
        assert!(!o("0").is_limit());
        assert_eq!(o("w+1").pred().unwrap(), o("w"));
        assert_eq!(o("w^2*2").limit_part(), o("w^2*2"));
        assert_eq!(o("w^2*2+3").limit_part(), o("w^2*2"));
        assert_eq!(o("w^2*2+3").finite_part(), 3);
    }

    #[test]
    fn left_subtraction() {
        for (a, b) in [("w^2+w+1", "w^2"), ("w*3", "w"), ("w^2*2", "w^2"), ("7", "3")] {
            let (a, b) = (o(a), o(b));
            let x = a.left_sub(&b).unwrap();
            assert_eq!(b.add(&x), a, "{b} + {x} should be {a}");
        }
        assert!(o("w").left_sub(&o("w^2")).is_none());
        assert_eq!(o("w").left_sub(&o("w")).unwrap(), o("0"));
    }

    #[test]
    fn cnf_size() {
        assert_eq!(o("0").cnf_size(), 0);
        assert_eq!(o("w^2*2+1").cnf_size(), 3);
        assert_eq!(o("w^(w+1)").cnf_size(), 4);
    }
}
