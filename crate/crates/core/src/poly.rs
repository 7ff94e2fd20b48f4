//! Sparse multivariate polynomial arithmetic over a shared, ordered variable set.
//!
//! Polynomials are immutable values: every operation returns a fresh, pruned
//! term map. Coefficients are `f64`; terms whose coefficient magnitude falls
//! below [`COEFF_EPS`] are dropped so that structural equality is meaningful.
//! Monomials are ordered graded-lexicographically, which makes term iteration
//! (and everything built on it, down to SDP assembly) deterministic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

/// Coefficients with magnitude below this are pruned from term maps.
pub const COEFF_EPS: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("duplicate variable name `{0}` in variable set")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("parse error at byte {at}: {msg}")]
    Parse { msg: String, at: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operands belong to different variable sets")]
    VarSetMismatch,
}

#[derive(Debug)]
struct VarSetInner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

/// Ordered set of distinct variable names, shared by reference between all
/// polynomials of one system.
#[derive(Clone, Debug)]
pub struct VarSet {
    inner: Arc<VarSetInner>,
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Result<VarSet, PolyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(PolyError::DuplicateVariable(n.clone()));
            }
        }
        Ok(VarSet {
            inner: Arc::new(VarSetInner { names, index }),
        })
    }

    pub fn len(&self) -> usize {
        self.inner.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.inner.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.inner.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.inner.index.get(name).copied()
    }

    /// The polynomial `x_i`.
    pub fn var(&self, i: usize) -> Polynomial {
        assert!(i < self.len(), "variable index {i} out of range");
        Polynomial::from_terms(self.clone(), [(Monomial::var(i), 1.0)])
    }

    /// The polynomial `x` for a named variable.
    pub fn var_named(&self, name: &str) -> Result<Polynomial, PolyError> {
        let i = self
            .index_of(name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
        Ok(self.var(i))
    }

    pub fn constant(&self, c: f64) -> Polynomial {
        Polynomial::from_terms(self.clone(), [(Monomial::one(), c)])
    }

    pub fn zero(&self) -> Polynomial {
        Polynomial {
            vars: self.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// `Σ x_i²` over the given variable indices.
    pub fn norm_squared(&self, vars: &[usize]) -> Polynomial {
        let mut p = self.zero();
        for &v in vars {
            p = &p + &(&self.var(v) * &self.var(v));
        }
        p
    }
}

impl PartialEq for VarSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.names == other.inner.names
    }
}

impl Eq for VarSet {}

/// Power product of variables; exponents are stored sparsely, sorted by
/// variable index, with no explicit zero exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<(u32, u32)>,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial { exps: Vec::new() }
    }

    pub fn var(i: usize) -> Monomial {
        Monomial {
            exps: vec![(i as u32, 1)],
        }
    }

    /// Builds a monomial from (variable, exponent) pairs; zero exponents are
    /// dropped and repeated variables accumulate.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Monomial {
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *map.entry(v as u32).or_insert(0) += e;
            }
        }
        Monomial {
            exps: map.into_iter().collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, var: usize) -> u32 {
        self.exps
            .iter()
            .find(|&&(v, _)| v as usize == var)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exps
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.exps.iter().map(|&(v, _)| v as usize)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut a, mut b) = (self.exps.iter().peekable(), other.exps.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(va, ea)), Some(&&(vb, eb))) => {
                    if va < vb {
                        exps.push((va, ea));
                        a.next();
                    } else if vb < va {
                        exps.push((vb, eb));
                        b.next();
                    } else {
                        exps.push((va, ea + eb));
                        a.next();
                        b.next();
                    }
                }
                (Some(&&t), None) => {
                    exps.push(t);
                    a.next();
                }
                (None, Some(&&t)) => {
                    exps.push(t);
                    b.next();
                }
                (None, None) => break,
            }
        }
        Monomial { exps }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 1.0;
        for &(v, e) in &self.exps {
            acc *= point[v as usize].powi(e as i32);
        }
        acc
    }

    /// Exact division: `Some(self / other)` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut exps = Vec::with_capacity(self.exps.len());
        let mut b = other.exps.iter().peekable();
        for &(v, e) in &self.exps {
            let mut rem = e;
            if let Some(&&(vb, eb)) = b.peek() {
                if vb == v {
                    if eb > e {
                        return None;
                    }
                    rem = e - eb;
                    b.next();
                } else if vb < v {
                    return None;
                }
            }
            if rem > 0 {
                exps.push((v, rem));
            }
        }
        if b.peek().is_some() {
            return None;
        }
        Some(Monomial { exps })
    }

    /// Formal partial derivative: returns `(e, m / x_var)` when `x_var`
    /// divides the monomial, `None` otherwise.
    fn diff(&self, var: usize) -> Option<(u32, Monomial)> {
        let pos = self.exps.iter().position(|&(v, _)| v as usize == var)?;
        let (v, e) = self.exps[pos];
        let mut exps = self.exps.clone();
        if e == 1 {
            exps.remove(pos);
        } else {
            exps[pos] = (v, e - 1);
        }
        Some((e, Monomial { exps }))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order: lower total degree first; ties broken so
    /// that, on the earliest variable where the exponents differ, the larger
    /// exponent sorts later.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut a, mut b) = (self.exps.iter(), other.exps.iter());
        loop {
            match (a.next(), b.next()) {
                (Some(&(va, ea)), Some(&(vb, eb))) => {
                    if va != vb {
                        // The side whose next variable has the smaller index
                        // holds a positive power of an earlier variable.
                        return if va < vb {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        };
                    }
                    if ea != eb {
                        return ea.cmp(&eb);
                    }
                }
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
            }
        }
    }
}

/// Sparse multivariate polynomial with `f64` coefficients.
#[derive(Clone)]
pub struct Polynomial {
    vars: VarSet,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(vars: VarSet, terms: I) -> Polynomial {
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert(0.0) += c;
        }
        map.retain(|_, c| c.abs() >= COEFF_EPS);
        Polynomial { vars, terms: map }
    }

    pub fn varset(&self) -> &VarSet {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&Monomial::one())
    }

    /// Total degree; zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).min().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Indices of variables that actually occur.
    pub fn support_vars(&self) -> Vec<usize> {
        let mut seen = std::collections::BTreeSet::new();
        for m in self.terms.keys() {
            seen.extend(m.vars());
        }
        seen.into_iter().collect()
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::from_terms(
            self.vars.clone(),
            self.terms.iter().map(|(m, &c)| (m.clone(), c * s)),
        )
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut acc = self.vars.constant(1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Direct term-by-term evaluation. Deterministic for a fixed term order.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(
            point.len(),
            self.vars.len(),
            "evaluation point has wrong dimension"
        );
        self.terms.iter().map(|(m, &c)| c * m.eval(point)).sum()
    }

    /// Formal partial derivative with respect to variable index `var`.
    pub fn differentiate(&self, var: usize) -> Polynomial {
        assert!(var < self.vars.len(), "variable index {var} out of range");
        Polynomial::from_terms(
            self.vars.clone(),
            self.terms.iter().filter_map(|(m, &c)| {
                m.diff(var).map(|(e, dm)| (dm, c * e as f64))
            }),
        )
    }

    /// Formal partial derivative with respect to a named variable.
    pub fn differentiate_named(&self, var: &str) -> Result<Polynomial, PolyError> {
        let i = self
            .vars
            .index_of(var)
            .ok_or_else(|| PolyError::UnknownVariable(var.to_string()))?;
        Ok(self.differentiate(i))
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.vars.len()).map(|i| self.differentiate(i)).collect()
    }

    fn assert_same_vars(&self, other: &Polynomial) {
        assert!(
            self.vars == other.vars,
            "operands belong to different variable sets"
        );
    }
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.terms == other.terms
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_vars(rhs);
        let mut terms = self.terms.clone();
        for (m, &c) in &rhs.terms {
            *terms.entry(m.clone()).or_insert(0.0) += c;
        }
        terms.retain(|_, c| c.abs() >= COEFF_EPS);
        Polynomial {
            vars: self.vars.clone(),
            terms,
        }
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_vars(rhs);
        let mut terms = self.terms.clone();
        for (m, &c) in &rhs.terms {
            *terms.entry(m.clone()).or_insert(0.0) -= c;
        }
        terms.retain(|_, c| c.abs() >= COEFF_EPS);
        Polynomial {
            vars: self.vars.clone(),
            terms,
        }
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_vars(rhs);
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &rhs.terms {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c| c.abs() >= COEFF_EPS);
        Polynomial {
            vars: self.vars.clone(),
            terms,
        }
    }
}

/// Ordered list of polynomials forming a vector field (or a vector-valued
/// control law); all entries share one variable set.
#[derive(Clone, PartialEq)]
pub struct PolyVec {
    entries: Vec<Polynomial>,
}

impl PolyVec {
    /// Panics if the entries do not all share one variable set.
    pub fn new(entries: Vec<Polynomial>) -> PolyVec {
        assert!(!entries.is_empty(), "PolyVec must be non-empty");
        let vs = entries[0].varset().clone();
        for e in &entries {
            assert!(*e.varset() == vs, "PolyVec entries share one variable set");
        }
        PolyVec { entries }
    }

    pub fn zeros(vars: &VarSet, len: usize) -> PolyVec {
        PolyVec {
            entries: (0..len).map(|_| vars.zero()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> &Polynomial {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[Polynomial] {
        &self.entries
    }

    pub fn varset(&self) -> &VarSet {
        self.entries[0].varset()
    }

    pub fn evaluate(&self, point: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|p| p.evaluate(point)).collect()
    }

    /// Entry-wise sum; operands must have equal length.
    pub fn add(&self, other: &PolyVec) -> PolyVec {
        assert_eq!(self.len(), other.len(), "PolyVec length mismatch");
        PolyVec {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Index<usize> for PolyVec {
    type Output = Polynomial;
    fn index(&self, i: usize) -> &Polynomial {
        &self.entries[i]
    }
}

/// `Σ_j (∂V/∂x_j) · field_j` — the derivative of `V` along the flow of
/// `field`. The field must be explicit: one entry per variable of the set.
pub fn lie_derivative(v: &Polynomial, field: &PolyVec) -> Polynomial {
    assert_eq!(
        field.len(),
        v.varset().len(),
        "field length must equal the number of variables"
    );
    assert!(
        field.varset() == v.varset(),
        "field and V belong to different variable sets"
    );
    let mut acc = v.varset().zero();
    for j in 0..field.len() {
        let dv = v.differentiate(j);
        if dv.is_zero() {
            continue;
        }
        acc = &acc + &(&dv * &field[j]);
    }
    acc
}

fn fmt_coeff(c: f64) -> String {
    let a = c.abs();
    if a != 0.0 && (a < 1e-4 || a >= 1e16) {
        format!("{:e}", c)
    } else {
        format!("{}", c)
    }
}

impl fmt::Display for Polynomial {
    /// Renders in descending graded-lex order as `c*x^2*y + c2*z - ...`;
    /// coefficients use round-trip-exact formatting.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, &c)) in self.terms.iter().rev().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit = (mag - 1.0).abs() < f64::EPSILON;
            if m.is_one() {
                write!(f, "{}", fmt_coeff(mag))?;
            } else {
                if !unit {
                    write!(f, "{}*", fmt_coeff(mag))?;
                }
                let mut first = true;
                for &(v, e) in m.exponents() {
                    if !first {
                        write!(f, "*")?;
                    }
                    first = false;
                    write!(f, "{}", self.vars.name(v as usize))?;
                    if e > 1 {
                        write!(f, "^{}", e)?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({})", self)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    vars: &'a VarSet,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse {
            msg: msg.into(),
            at: self.pos,
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<f64, PolyError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .bytes
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        if self.pos == start {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .map_or_else(|| self.err("malformed number"), Ok)
    }

    fn ident(&mut self) -> Result<String, PolyError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return self.err("expected an identifier");
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    /// term := (number | factor) ('*' factor)* ; factor := ident ('^' uint)?
    fn term(&mut self) -> Result<(Monomial, f64), PolyError> {
        let mut coeff = 1.0;
        let mut pairs: Vec<(usize, u32)> = Vec::new();
        let mut first = true;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    coeff *= self.number()?;
                }
                Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                    let name = self.ident()?;
                    let idx = self
                        .vars
                        .index_of(&name)
                        .ok_or(PolyError::UnknownVariable(name))?;
                    let mut exp = 1u32;
                    self.skip_ws();
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.skip_ws();
                        let n = self.number()?;
                        if n.fract() != 0.0 || n < 0.0 || n > u32::MAX as f64 {
                            return self.err("exponent must be a nonnegative integer");
                        }
                        exp = n as u32;
                    }
                    pairs.push((idx, exp));
                }
                _ if first => return self.err("expected a term"),
                _ => break,
            }
            first = false;
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((Monomial::from_pairs(pairs), coeff))
    }

    fn poly(&mut self) -> Result<Polynomial, PolyError> {
        let mut terms: Vec<(Monomial, f64)> = Vec::new();
        self.skip_ws();
        let mut sign = 1.0;
        if self.peek() == Some(b'-') {
            sign = -1.0;
            self.pos += 1;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        loop {
            let (m, c) = self.term()?;
            terms.push((m, sign * c));
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    sign = 1.0;
                    self.pos += 1;
                }
                Some(b'-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                None => break,
                Some(c) => return self.err(format!("unexpected character `{}`", c as char)),
            }
        }
        Ok(Polynomial::from_terms(self.vars.clone(), terms))
    }
}

impl Polynomial {
    /// Parses the textual form produced by `Display`, e.g.
    /// `1.5*x11^2*x12 - 2*x12 + 1`. Round-trips exactly: for any polynomial
    /// `p`, `parse(p.to_string()) == p`.
    pub fn parse(text: &str, vars: &VarSet) -> Result<Polynomial, PolyError> {
        let mut parser = Parser {
            bytes: text.as_bytes(),
            pos: 0,
            vars,
        };
        let trimmed = text.trim();
        if trimmed == "0" || trimmed == "-0" {
            return Ok(vars.zero());
        }
        parser.poly()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> VarSet {
        VarSet::new(["x", "y"]).unwrap()
    }

    #[test]
    fn varset_rejects_duplicates() {
        assert!(matches!(
            VarSet::new(["a", "b", "a"]),
            Err(PolyError::DuplicateVariable(_))
        ));
    }

    #[test]
    fn difference_of_squares() {
        let vs = VarSet::new(["x"]).unwrap();
        let x = vs.var(0);
        let p = &(&x + &vs.constant(1.0)) * &(&x - &vs.constant(1.0));
        let expected = &(&x * &x) - &vs.constant(1.0);
        assert_eq!(p, expected);
    }

    #[test]
    fn additive_inverse_is_empty() {
        let vs = xy();
        let p = &(&vs.var(0) * &vs.var(1)) + &vs.constant(3.0);
        let z = &p + &p.scale(-1.0);
        assert!(z.is_zero());
        assert_eq!(z.num_terms(), 0);
    }

    #[test]
    fn binomial_expansion() {
        let vs = xy();
        let s = &vs.var(0) + &vs.var(1);
        let sq = s.pow(2);
        assert_eq!(sq.coefficient(&Monomial::from_pairs([(0, 2)])), 1.0);
        assert_eq!(sq.coefficient(&Monomial::from_pairs([(0, 1), (1, 1)])), 2.0);
        assert_eq!(sq.coefficient(&Monomial::from_pairs([(1, 2)])), 1.0);
        assert_eq!(sq.num_terms(), 3);
    }

    #[test]
    fn evaluate_basic() {
        let vs = xy();
        let p = &(&vs.var(0) * &vs.var(0)) + &vs.var(1); // x² + y
        assert_eq!(p.evaluate(&[2.0, 3.0]), 7.0);
        let c = &p - &p; // 0
        assert_eq!(c.evaluate(&[0.0, 0.0]), 0.0);
        let q = &p + &vs.constant(4.5);
        assert_eq!(q.evaluate(&[0.0, 0.0]), 4.5);
    }

    #[test]
    #[should_panic(expected = "wrong dimension")]
    fn evaluate_dimension_mismatch_panics() {
        let vs = xy();
        vs.var(0).evaluate(&[1.0]);
    }

    #[test]
    #[should_panic(expected = "different variable sets")]
    fn mixed_varsets_panic() {
        let a = VarSet::new(["x"]).unwrap();
        let b = VarSet::new(["y"]).unwrap();
        let _ = &a.var(0) + &b.var(0);
    }

    #[test]
    fn differentiate_examples() {
        let vs = xy();
        let x = vs.var(0);
        let y = vs.var(1);
        // ∂(x²y)/∂x = 2xy
        let p = &(&x * &x) * &y;
        assert_eq!(p.differentiate(0), &(&x * &y).scale(2.0) + &vs.zero());
        // ∂(constant)/∂x = 0
        assert!(vs.constant(7.0).differentiate(0).is_zero());
        // ∂(x⁴)/∂x = 4x³
        assert_eq!(x.pow(4).differentiate(0), x.pow(3).scale(4.0));
        assert!(matches!(
            p.differentiate_named("nope"),
            Err(PolyError::UnknownVariable(_))
        ));
    }

    #[test]
    fn lie_derivative_conserved_rotation() {
        let vs = xy();
        let v = &(&vs.var(0) * &vs.var(0)) + &(&vs.var(1) * &vs.var(1));
        let field = PolyVec::new(vec![vs.var(1), vs.var(0).scale(-1.0)]);
        assert!(lie_derivative(&v, &field).is_zero());
    }

    #[test]
    fn lie_derivative_scalar_decay() {
        let vs = VarSet::new(["x"]).unwrap();
        let v = &vs.var(0) * &vs.var(0);
        let field = PolyVec::new(vec![vs.var(0).scale(-1.0)]);
        let ld = lie_derivative(&v, &field);
        assert_eq!(ld, v.scale(-2.0));
    }

    /// Expansion oracle, worked by hand: V = x₁²+x₂², field = (x₂, −x₂(1−x₁²)−x₁)
    /// gives 2x₁x₂ + 2x₂(−x₂+x₁²x₂−x₁) = −2x₂² + 2x₁²x₂².
    #[test]
    fn lie_derivative_vdp_hand_expansion() {
        let vs = xy();
        let (x1, x2) = (vs.var(0), vs.var(1));
        let v = &(&x1 * &x1) + &(&x2 * &x2);
        let f2 = &(&x2.scale(-1.0) + &(&(&x1 * &x1) * &x2)) - &x1;
        let field = PolyVec::new(vec![x2.clone(), f2]);
        let ld = lie_derivative(&v, &field);
        let expected = &(&x2 * &x2).scale(-2.0) + &(&(&x1 * &x1) * &(&x2 * &x2)).scale(2.0);
        assert_eq!(ld, expected);
    }

    #[test]
    #[should_panic(expected = "field length")]
    fn lie_derivative_requires_explicit_field() {
        let vs = xy();
        let v = vs.var(0);
        let short = PolyVec::new(vec![vs.var(0)]);
        let _ = lie_derivative(&v, &short);
    }

    #[test]
    fn grlex_ordering() {
        // 1 < y < x < y² < xy < x²  (ascending grlex with x earlier than y)
        let one = Monomial::one();
        let x = Monomial::var(0);
        let y = Monomial::var(1);
        let x2 = Monomial::from_pairs([(0, 2)]);
        let xy = Monomial::from_pairs([(0, 1), (1, 1)]);
        let y2 = Monomial::from_pairs([(1, 2)]);
        let mut v = vec![x2.clone(), xy.clone(), one.clone(), y.clone(), x.clone(), y2.clone()];
        v.sort();
        assert_eq!(v, vec![one, y, x, y2, xy, x2]);
    }

    #[test]
    fn display_and_parse_roundtrip_simple() {
        let vs = VarSet::new(["x11", "x12"]).unwrap();
        let p = &(&vs.var(0).pow(2) * &vs.var(1)).scale(1.5) - &vs.var(1).scale(2.0);
        let q = &p + &vs.constant(1.0);
        let s = q.to_string();
        assert_eq!(s, "1.5*x11^2*x12 - 2*x12 + 1");
        assert_eq!(Polynomial::parse(&s, &vs).unwrap(), q);
        assert_eq!(Polynomial::parse("0", &vs).unwrap(), vs.zero());
        assert_eq!(vs.zero().to_string(), "0");
    }

    #[test]
    fn parse_rejects_unknown_variable() {
        let vs = xy();
        assert!(matches!(
            Polynomial::parse("3*z", &vs),
            Err(PolyError::UnknownVariable(_))
        ));
    }
}
