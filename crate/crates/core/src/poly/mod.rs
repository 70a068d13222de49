//! Exact sparse multivariate polynomials over the rationals.
//!
//! Every polynomial lives in a space of dimension `d` with `3d` variables laid
//! out as `x1..xd, y1..yd, t1..td` (`t` stands for the shift variable τ).
//! Terms are kept in a [`BTreeMap`] keyed by graded-lexicographic monomial
//! order, so equality and serialization are canonical.

mod affine;
mod compiled;

pub use affine::AffineMap;
pub use compiled::{CompiledPoly, Interval};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Exact coefficient type.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("variable {var} is not valid in dimension {dim}")]
    InvalidVariable { var: VarId, dim: usize },
    #[error("point has length {got}, expected {expected}")]
    PointLength { got: usize, expected: usize },
    #[error("invalid affine map: {0}")]
    InvalidMap(String),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("polynomial is not exactly divisible")]
    InexactDivision,
}

/// Which block of ℝ^d a variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Role {
    X,
    Y,
    Tau,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::X, Role::Y, Role::Tau];

    fn block(self) -> usize {
        match self {
            Role::X => 0,
            Role::Y => 1,
            Role::Tau => 2,
        }
    }

    pub fn prefix(self) -> char {
        match self {
            Role::X => 'x',
            Role::Y => 'y',
            Role::Tau => 't',
        }
    }
}

/// A variable `x_i`, `y_i` or `τ_i`, with a 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub role: Role,
    pub index: usize,
}

impl VarId {
    pub fn new(role: Role, index: usize) -> Self {
        VarId { role, index }
    }

    pub fn x(index: usize) -> Self {
        VarId::new(Role::X, index)
    }

    pub fn y(index: usize) -> Self {
        VarId::new(Role::Y, index)
    }

    pub fn tau(index: usize) -> Self {
        VarId::new(Role::Tau, index)
    }

    pub fn is_valid(&self, dim: usize) -> bool {
        self.index >= 1 && self.index <= dim
    }

    /// Slot of this variable in an exponent vector of length `3 * dim`.
    pub fn position(&self, dim: usize) -> Result<usize, PolyError> {
        if !self.is_valid(dim) {
            return Err(PolyError::InvalidVariable { var: *self, dim });
        }
        Ok(self.role.block() * dim + self.index - 1)
    }

    pub fn from_position(pos: usize, dim: usize) -> Self {
        VarId::new(Role::ALL[pos / dim], pos % dim + 1)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.role.prefix(), self.index)
    }
}

/// Exponent vector, ordered graded-lexicographically (total degree first,
/// then lexicographic with `x1` most significant).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn div(&self, divisor: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&divisor.0).map(|(a, b)| a - b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// Exact sparse polynomial in the `3d` variables `x, y, τ`.
///
/// No stored coefficient is zero, so two polynomials are equal exactly when
/// their term maps are identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "polynomial dimension must be positive");
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut p = Polynomial::zero(dim);
        p.add_term(Monomial::one(3 * dim), c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Polynomial::constant(dim, Rational::one())
    }

    pub fn from_int(dim: usize, c: i64) -> Self {
        Polynomial::constant(dim, Rational::from_integer(BigInt::from(c)))
    }

    pub fn var(dim: usize, v: VarId) -> Result<Self, PolyError> {
        let pos = v.position(dim)?;
        let mut exps = vec![0; 3 * dim];
        exps[pos] = 1;
        let mut p = Polynomial::zero(dim);
        p.add_term(Monomial(exps), Rational::one());
        Ok(p)
    }

    /// Builds a polynomial from `(coefficient, exponent vector)` pairs,
    /// merging duplicates and dropping zeros.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Rational, Vec<u32>)>,
    {
        let mut p = Polynomial::zero(dim);
        for (c, exps) in terms {
            if exps.len() != 3 * dim {
                return Err(PolyError::PointLength {
                    got: exps.len(),
                    expected: 3 * dim,
                });
            }
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nvars(&self) -> usize {
        3 * self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// Terms in canonical (descending graded-lex) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter().rev()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.dim);
        }
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.mul(m), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut result = Polynomial::one(self.dim);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Exact quotient `self / divisor`; fails unless the division is exact.
    pub fn try_div_exact(&self, divisor: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(divisor)?;
        let (lead_m, lead_c) = divisor.leading_term().ok_or(PolyError::InexactDivision)?;
        let mut rem = self.clone();
        let mut quot = Polynomial::zero(self.dim);
        while let Some((m, c)) = rem.leading_term() {
            if !lead_m.divides(m) {
                return Err(PolyError::InexactDivision);
            }
            let qm = m.div(lead_m);
            let qc = c / lead_c;
            rem = &rem - &divisor.mul_monomial(&qm).scale(&qc);
            quot.add_term(qm, qc);
        }
        Ok(quot)
    }

    pub fn differentiate(&self, v: VarId) -> Result<Polynomial, PolyError> {
        let pos = v.position(self.dim)?;
        let mut out = Polynomial::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.0[pos];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[pos] -= 1;
            out.add_term(Monomial(exps), c * Rational::from_integer(BigInt::from(e)));
        }
        Ok(out)
    }

    /// Exact value at a rational point of length `3d`.
    pub fn evaluate_exact(&self, point: &[Rational]) -> Result<Rational, PolyError> {
        self.check_point(point.len())?;
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Floating-point value at a point of length `3d`. Coefficients are
    /// rounded to the nearest `f64` and accumulation is plain IEEE arithmetic.
    pub fn evaluate_f64(&self, point: &[f64]) -> Result<f64, PolyError> {
        self.check_point(point.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                point
                    .iter()
                    .zip(&m.0)
                    .filter(|(_, e)| **e > 0)
                    .fold(rational_to_f64(c), |t, (x, e)| t * x.powi(*e as i32))
            })
            .sum())
    }

    fn check_point(&self, len: usize) -> Result<(), PolyError> {
        if len != self.nvars() {
            return Err(PolyError::PointLength {
                got: len,
                expected: self.nvars(),
            });
        }
        Ok(())
    }

    /// Terms whose total degree in the `(x, y)` variables is exactly `m`;
    /// τ exponents are not counted.
    pub fn homogeneous_part(&self, m: u32) -> Polynomial {
        let xy = 2 * self.dim;
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(mono, _)| mono.0[..xy].iter().sum::<u32>() == m)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    /// Variables that appear with a positive exponent, in slot order.
    pub fn variables(&self) -> Vec<VarId> {
        let mut used = vec![false; self.nvars()];
        for m in self.terms.keys() {
            for (u, &e) in used.iter_mut().zip(&m.0) {
                *u |= e > 0;
            }
        }
        used.iter()
            .enumerate()
            .filter(|(_, u)| **u)
            .map(|(pos, _)| VarId::from_position(pos, self.dim))
            .collect()
    }

    pub fn uses_role(&self, role: Role) -> bool {
        self.variables().iter().any(|v| v.role == role)
    }

    pub fn substitute(&self, map: &AffineMap) -> Result<Polynomial, PolyError> {
        affine::substitute(self, map)
    }

    /// Same polynomial with its leading coefficient made positive. Used where
    /// only `|P|` matters.
    pub fn normalized_sign(&self) -> Polynomial {
        match self.leading_term() {
            Some((_, c)) if c.is_negative() => -self,
            _ => self.clone(),
        }
    }

    /// Scaled so that the leading coefficient is 1; zero stays zero.
    pub fn monic(&self) -> Polynomial {
        match self.leading_term() {
            Some((_, c)) => self.scale(&c.recip()),
            None => self.clone(),
        }
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }
}

pub fn arithmetic(p: &Polynomial, q: &Polynomial, op: ArithOp) -> Result<Polynomial, PolyError> {
    match op {
        ArithOp::Add => p.try_add(q),
        ArithOp::Sub => p.try_sub(q),
        ArithOp::Mul => p.try_mul(q),
    }
}

pub fn differentiate(p: &Polynomial, v: VarId) -> Result<Polynomial, PolyError> {
    p.differentiate(v)
}

pub fn substitute(p: &Polynomial, m: &AffineMap) -> Result<Polynomial, PolyError> {
    p.substitute(m)
}

pub fn homogeneous_part(p: &Polynomial, m: u32) -> Polynomial {
    p.homogeneous_part(m)
}

pub(crate) fn rational_to_f64(c: &Rational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        if c.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Parses `"p"`, `"p/q"` or a decimal literal into an exact rational.
pub fn rational_from_decimal(text: &str) -> Option<Rational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(Rational::new(numer, denom))
}

// Panicking operator impls; use the `try_*` methods when dimensions may differ.
macro_rules! binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl $trait<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$try(rhs).expect("polynomial dimension mismatch")
            }
        }
        impl $trait<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

/// Canonical text form, readable back by [`crate::parser::parse_polynomial`].
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            let mut need_star = false;
            if !abs.is_one() || m.is_constant() {
                write_rational(f, &abs)?;
                need_star = true;
            }
            for (pos, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if need_star {
                    f.write_str("*")?;
                }
                write!(f, "{}", VarId::from_position(pos, self.dim))?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
                need_star = true;
            }
        }
        Ok(())
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn x(i: usize) -> Polynomial {
        Polynomial::var(2, VarId::x(i)).unwrap()
    }
    fn y(i: usize) -> Polynomial {
        Polynomial::var(2, VarId::y(i)).unwrap()
    }
    fn t(i: usize) -> Polynomial {
        Polynomial::var(2, VarId::tau(i)).unwrap()
    }

    #[test]
    fn cancellation() {
        assert_eq!((x(1) + y(1)) + (x(1) - y(1)), x(1).scale(&q(2, 1)));
    }

    #[test]
    fn annihilator() {
        let p = &x(1) * &Polynomial::zero(2);
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
        assert_eq!(p.to_string(), "0");
    }

    #[test]
    fn hand_expansion() {
        let lhs = (x(1) + t(1)) * (y(1) - t(1));
        let rhs = &x(1) * &y(1) - &x(1) * &t(1) + &t(1) * &y(1) - t(1).pow(2);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Polynomial::one(1);
        let b = Polynomial::one(2);
        assert_eq!(
            arithmetic(&a, &b, ArithOp::Mul),
            Err(PolyError::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn power_rule_and_absent_variable() {
        let p = x(1).pow(2) * y(1);
        assert_eq!(p.differentiate(VarId::x(1)).unwrap(), (&x(1) * &y(1)).scale(&q(2, 1)));
        assert!(p.differentiate(VarId::y(2)).unwrap().is_zero());
        assert!(p.differentiate(VarId::x(3)).is_err());
    }

    #[test]
    fn third_order_operator_on_li_phase() {
        let p = x(1).pow(2) * y(1);
        let dx = p.differentiate(VarId::x(1)).unwrap();
        let dy = p.differentiate(VarId::y(1)).unwrap();
        let d = (dx - dy)
            .differentiate(VarId::x(1))
            .unwrap()
            .differentiate(VarId::y(1))
            .unwrap();
        assert_eq!(d, Polynomial::from_int(2, 2));
    }

    #[test]
    fn evaluation() {
        let p = t(1).pow(2) + t(2).pow(2);
        let mut pt = vec![Rational::zero(); 6];
        pt[4] = q(3, 1);
        pt[5] = q(4, 1);
        assert_eq!(p.evaluate_exact(&pt).unwrap(), q(25, 1));
        assert_eq!(Polynomial::zero(2).evaluate_exact(&pt).unwrap(), q(0, 1));
        assert!(p.evaluate_f64(&[0.0; 5]).is_err());

        // τ1τ2(4 + x1/25 + τ1/50) at x1 = 0, τ = (1, 1)
        let big_p = &t(1) * &t(2) * (Polynomial::from_int(2, 4) + x(1).scale(&q(1, 25)) + t(1).scale(&q(1, 50)));
        pt[4] = q(1, 1);
        pt[5] = q(1, 1);
        assert_eq!(big_p.evaluate_exact(&pt).unwrap(), q(201, 50));
    }

    #[test]
    fn homogeneous_parts() {
        let p = x(1).pow(2) * y(1) + x(1).pow(3) * y(1);
        assert_eq!(p.homogeneous_part(3), x(1).pow(2) * y(1));
        assert_eq!(p.homogeneous_part(4), x(1).pow(3) * y(1));
        assert!(p.homogeneous_part(7).is_zero());
        // τ exponents do not count towards the (x, y) degree.
        let r = &x(1) * &t(1);
        assert_eq!(r.homogeneous_part(1), r);
    }

    #[test]
    fn exact_division() {
        let a = x(1) + t(2).scale(&q(1, 3));
        let b = y(2) - t(1);
        let prod = &a * &b;
        assert_eq!(prod.try_div_exact(&b).unwrap(), a);
        assert_eq!(
            (prod + Polynomial::one(2)).try_div_exact(&b),
            Err(PolyError::InexactDivision)
        );
    }

    #[test]
    fn display_is_canonical() {
        let p = (x(1) * y(1).pow(2) + x(2) * y(2).pow(2)).scale(&q(1, 2));
        assert_eq!(p.to_string(), "1/2*x1*y1^2 + 1/2*x2*y2^2");
        let r = Polynomial::from_int(2, -3) - &x(1) * &t(1);
        assert_eq!(r.to_string(), "-x1*t1 - 3");
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(rational_from_decimal("0.5").unwrap(), q(1, 2));
        assert_eq!(rational_from_decimal("12").unwrap(), q(12, 1));
        assert_eq!(rational_from_decimal(".25").unwrap(), q(1, 4));
        assert!(rational_from_decimal(".").is_none());
    }
}
