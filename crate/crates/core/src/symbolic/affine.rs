use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SymbolicError;

/// Integer-linear combination of named symbols plus a constant.
///
/// Kept canonical: zero coefficients are never stored, so structural
/// equality is semantic equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineExpr {
    coeffs: BTreeMap<String, i64>,
    constant: i64,
}

/// Symbol values used to evaluate affine expressions.
pub type Binding = BTreeMap<String, i64>;

impl AffineExpr {
    pub fn constant(value: i64) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            constant: value,
        }
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        Self::term(name, 1)
    }

    pub fn term(name: impl Into<String>, coeff: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        if coeff != 0 {
            coeffs.insert(name.into(), coeff);
        }
        Self {
            coeffs,
            constant: 0,
        }
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, name: &str) -> i64 {
        self.coeffs.get(name).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&str, i64)> {
        self.coeffs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_constant(&self) -> Option<i64> {
        self.is_constant().then_some(self.constant)
    }

    pub fn symbols(&self) -> BTreeSet<&str> {
        self.coeffs.keys().map(String::as_str).collect()
    }

    pub fn eval(&self, binding: &Binding) -> Result<i64, SymbolicError> {
        let mut acc = self.constant;
        for (name, c) in &self.coeffs {
            let v = binding
                .get(name)
                .ok_or_else(|| SymbolicError::UnboundSymbol(name.clone()))?;
            acc += c * v;
        }
        Ok(acc)
    }

    /// Replace `name` by `with` everywhere.
    pub fn substitute(&self, name: &str, with: &AffineExpr) -> AffineExpr {
        let c = self.coeff(name);
        if c == 0 {
            return self.clone();
        }
        let mut rest = self.clone();
        rest.coeffs.remove(name);
        rest + with.clone() * c
    }

    /// Bind every symbol present in `binding`, leaving the rest symbolic.
    pub fn partial_eval(&self, binding: &Binding) -> AffineExpr {
        let mut out = AffineExpr::constant(self.constant);
        for (name, c) in &self.coeffs {
            match binding.get(name) {
                Some(v) => out.constant += c * v,
                None => out = out + AffineExpr::term(name.clone(), *c),
            }
        }
        out
    }

    /// Exact division by `d`, if every coefficient and the constant divide.
    pub fn div_exact(&self, d: i64) -> Option<AffineExpr> {
        if d == 0 || self.constant % d != 0 || self.coeffs.values().any(|c| c % d != 0) {
            return None;
        }
        Some(AffineExpr {
            coeffs: self.coeffs.iter().map(|(k, c)| (k.clone(), c / d)).collect(),
            constant: self.constant / d,
        })
    }

    fn normalize(mut self) -> Self {
        self.coeffs.retain(|_, c| *c != 0);
        self
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        for (k, c) in rhs.coeffs {
            *self.coeffs.entry(k).or_insert(0) += c;
        }
        self.constant += rhs.constant;
        self.normalize()
    }
}

impl Add<i64> for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: i64) -> AffineExpr {
        self.constant += rhs;
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + (-rhs)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self * -1
    }
}

impl Mul<i64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(mut self, rhs: i64) -> AffineExpr {
        for c in self.coeffs.values_mut() {
            *c *= rhs;
        }
        self.constant *= rhs;
        self.normalize()
    }
}

impl From<i64> for AffineExpr {
    fn from(v: i64) -> Self {
        AffineExpr::constant(v)
    }
}

impl From<&str> for AffineExpr {
    fn from(s: &str) -> Self {
        s.parse().unwrap_or_else(|e| panic!("invalid affine literal {s:?}: {e}"))
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, c) in &self.coeffs {
            let sign = if *c < 0 { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            if mag == 1 {
                write!(f, "{sign}{name}")?;
            } else {
                write!(f, "{sign}{mag}*{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, "+{}", self.constant)
        } else if self.constant < 0 {
            write!(f, "{}", self.constant)
        } else {
            Ok(())
        }
    }
}

impl FromStr for AffineExpr {
    type Err = SymbolicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser::new(s);
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }
}

impl Serialize for AffineExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AffineExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Recursive-descent parser for integer-linear expressions.
///
/// Grammar: `expr := term (('+'|'-') term)*`, `term := unary ('*' unary)*`,
/// `unary := '-' unary | int | ident | '(' expr ')'`. Products of two
/// non-constant factors are rejected.
pub(crate) struct Parser<'a> {
    pub(crate) src: &'a str,
    pub(crate) pos: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    pub(crate) fn error(&self, msg: &str) -> SymbolicError {
        SymbolicError::Parse {
            input: self.src.to_string(),
            msg: format!("{msg} at offset {}", self.pos),
        }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub(crate) fn expr(&mut self) -> Result<AffineExpr, SymbolicError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<AffineExpr, SymbolicError> {
        let mut acc = self.unary()?;
        while self.eat('*') {
            let rhs = self.unary()?;
            acc = match (acc.as_constant(), rhs.as_constant()) {
                (Some(a), _) => rhs * a,
                (_, Some(b)) => acc * b,
                _ => return Err(self.error("non-linear product")),
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<AffineExpr, SymbolicError> {
        self.skip_ws();
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('(') {
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(e);
        }
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let v: i64 = self.src[start..self.pos]
                    .parse()
                    .map_err(|_| self.error("integer overflow"))?;
                Ok(AffineExpr::constant(v))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    self.pos += 1;
                }
                Ok(AffineExpr::symbol(&self.src[start..self.pos]))
            }
            _ => Err(self.error("expected integer, symbol or '('")),
        }
    }
}
