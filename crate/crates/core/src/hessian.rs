//! Shifted phase, mixed Hessian, third-order operators and minor determinants.
//!
//! Sign convention: `S_τ(x, y) = S(x, y) − S(x + τ, y − τ)`. The opposite
//! shift differs by `τ -> −τ` and an overall sign, which leaves every sublevel
//! set of `|P|` unchanged but flips determinants of odd order. Comparisons with
//! externally supplied matrices should therefore allow a factor `(−1)^k`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::poly::{AffineMap, PolyError, Polynomial, Rational, Role, VarId};

/// Largest dimension for which all minors are enumerated.
pub const MAX_MINOR_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HessianError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("phase must not contain τ variables (found {0})")]
    TauInPhase(String),
    #[error("index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid minor selection: {0}")]
    InvalidSelection(String),
    #[error("dimension {dim} exceeds the minor enumeration limit of {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
}

/// Square matrix of polynomials in a common space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    dim: usize,
    rows: Vec<Vec<Polynomial>>,
}

impl PolyMatrix {
    pub fn new(rows: Vec<Vec<Polynomial>>) -> Result<Self, HessianError> {
        let n = rows.len();
        if n == 0 {
            return Err(HessianError::InvalidMatrix("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(HessianError::InvalidMatrix("matrix is not square".into()));
        }
        let dim = rows[0][0].dim();
        if rows.iter().flatten().any(|p| p.dim() != dim) {
            return Err(HessianError::InvalidMatrix(
                "entries live in different dimensions".into(),
            ));
        }
        Ok(PolyMatrix { dim, rows })
    }

    /// Size of the matrix (number of rows).
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Dimension of the polynomial space the entries live in.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at zero-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &Polynomial {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Polynomial>] {
        &self.rows
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(Polynomial::is_zero)
    }

    pub fn map<F>(&self, mut f: F) -> Result<PolyMatrix, HessianError>
    where
        F: FnMut(&Polynomial) -> Result<Polynomial, PolyError>,
    {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(&mut f).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        PolyMatrix::new(rows)
    }

    pub fn neg(&self) -> PolyMatrix {
        PolyMatrix {
            dim: self.dim,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|p| -p).collect())
                .collect(),
        }
    }

    /// Rows reordered so that new row `i` is old row `perm[i]` (zero-based);
    /// likewise for columns.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> PolyMatrix {
        PolyMatrix {
            dim: self.dim,
            rows: row_perm
                .iter()
                .map(|&i| col_perm.iter().map(|&j| self.rows[i][j].clone()).collect())
                .collect(),
        }
    }

    pub fn submatrix(&self, sel: &MinorSelection) -> Result<PolyMatrix, HessianError> {
        sel.validate(self.size())?;
        Ok(self.permuted(
            &sel.rows.iter().map(|r| r - 1).collect::<Vec<_>>(),
            &sel.cols.iter().map(|c| c - 1).collect::<Vec<_>>(),
        ))
    }

    pub fn determinant(&self) -> Polynomial {
        match self.size() {
            1 => self.rows[0][0].clone(),
            2 => det2(&self.rows),
            3 => det3(&self.rows),
            _ => bareiss(self.dim, self.rows.clone()),
        }
    }
}

fn det2(m: &[Vec<Polynomial>]) -> Polynomial {
    &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0]
}

fn det3(m: &[Vec<Polynomial>]) -> Polynomial {
    let minor = |a: usize, b: usize, c: usize, e: usize| &m[1][a] * &m[2][b] - &m[1][c] * &m[2][e];
    &m[0][0] * &minor(1, 2, 2, 1) - &m[0][1] * &minor(0, 2, 2, 0) + &m[0][2] * &minor(0, 1, 1, 0)
}

/// Fraction-free elimination. Each division is exact in the polynomial ring.
fn bareiss(dim: usize, mut m: Vec<Vec<Polynomial>>) -> Polynomial {
    let n = m.len();
    let mut negate = false;
    let mut prev = Polynomial::one(dim);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    negate = !negate;
                }
                None => return Polynomial::zero(dim),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = num
                    .try_div_exact(&prev)
                    .expect("Bareiss division is exact over an integral domain");
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, p) in r.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl Serialize for PolyMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|p| p.to_string()).collect())
            .collect();
        text.serialize(s)
    }
}

/// Rows and columns of a square minor, one-based and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MinorSelection {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl MinorSelection {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, d: usize) -> Result<Self, HessianError> {
        let sel = MinorSelection { rows, cols };
        sel.validate(d)?;
        Ok(sel)
    }

    pub fn full(d: usize) -> Self {
        MinorSelection {
            rows: (1..=d).collect(),
            cols: (1..=d).collect(),
        }
    }

    pub fn entry(i: usize, j: usize) -> Self {
        MinorSelection {
            rows: vec![i],
            cols: vec![j],
        }
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn is_principal(&self) -> bool {
        self.rows == self.cols
    }

    pub fn validate(&self, d: usize) -> Result<(), HessianError> {
        let k = self.rows.len();
        if k == 0 || k > d {
            return Err(HessianError::InvalidSelection(format!(
                "order {k} outside 1..={d}"
            )));
        }
        if self.cols.len() != k {
            return Err(HessianError::InvalidSelection(format!(
                "{k} rows but {} columns",
                self.cols.len()
            )));
        }
        for set in [&self.rows, &self.cols] {
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HessianError::InvalidSelection(
                    "indices must be strictly increasing".into(),
                ));
            }
            if let Some(&bad) = set.iter().find(|&&i| i == 0 || i > d) {
                return Err(HessianError::IndexOutOfRange { index: bad, dim: d });
            }
        }
        Ok(())
    }
}

impl fmt::Display for MinorSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "rows {{{}}} cols {{{}}}", join(&self.rows), join(&self.cols))
    }
}

/// Invertible rational `d × d` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GLTransform {
    matrix: Vec<Vec<Rational>>,
    det: Rational,
}

impl GLTransform {
    pub fn new(matrix: Vec<Vec<Rational>>) -> Result<Self, HessianError> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n) {
            return Err(HessianError::InvalidMatrix("matrix must be square".into()));
        }
        let det = rational_det(&matrix);
        if det.is_zero() {
            return Err(HessianError::Singular);
        }
        Ok(GLTransform { matrix, det })
    }

    pub fn from_integers(matrix: &[Vec<i64>]) -> Result<Self, HessianError> {
        GLTransform::new(
            matrix
                .iter()
                .map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect())
                .collect(),
        )
    }

    pub fn identity(d: usize) -> Self {
        let matrix = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect();
        GLTransform {
            matrix,
            det: Rational::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.matrix
    }

    pub fn det(&self) -> &Rational {
        &self.det
    }

    /// The substitution `v -> A v` applied to each listed block of variables.
    pub fn as_map(&self, roles: &[Role]) -> Result<AffineMap, PolyError> {
        AffineMap::linear(self.dim(), &self.matrix, roles)
    }
}

/// Gaussian elimination over the rationals.
fn rational_det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Rational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return Rational::zero();
        };
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= &a[k][k];
        for i in k + 1..n {
            let factor = &a[i][k] / &a[k][k];
            for j in k..n {
                let t = &factor * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    det
}

fn check_phase(s: &Polynomial) -> Result<(), HessianError> {
    if let Some(v) = s.variables().into_iter().find(|v| v.role == Role::Tau) {
        return Err(HessianError::TauInPhase(v.to_string()));
    }
    Ok(())
}

fn check_index(index: usize, dim: usize) -> Result<(), HessianError> {
    if index == 0 || index > dim {
        return Err(HessianError::IndexOutOfRange { index, dim });
    }
    Ok(())
}

/// `S(x, y) − S(x + τ, y − τ)`.
pub fn build_s_tau(s: &Polynomial) -> Result<Polynomial, HessianError> {
    check_phase(s)?;
    let shifted = s.substitute(&AffineMap::shift(s.dim()))?;
    Ok(s - &shifted)
}

/// `M_{x,y}(τ)` with entries `∂²S_τ / ∂x_i ∂y_j`.
pub fn mixed_hessian(s: &Polynomial) -> Result<PolyMatrix, HessianError> {
    check_phase(s)?;
    let d = s.dim();
    let shift = AffineMap::shift(d);
    // The shift has unit Jacobian in x and in y, so differentiating first and
    // shifting afterwards gives the same entries as differentiating S_τ.
    let mut rows = Vec::with_capacity(d);
    for i in 1..=d {
        let dx = s.differentiate(VarId::x(i))?;
        let mut row = Vec::with_capacity(d);
        for j in 1..=d {
            let h = dx.differentiate(VarId::y(j))?;
            let shifted = h.substitute(&shift)?;
            row.push(&h - &shifted);
        }
        rows.push(row);
    }
    PolyMatrix::new(rows)
}

/// `D_{i,j,l} S = ∂_{x_i} ∂_{y_j} (∂_{x_l} − ∂_{y_l}) S`, indices one-based.
pub fn d_operator(s: &Polynomial, i: usize, j: usize, l: usize) -> Result<Polynomial, HessianError> {
    let d = s.dim();
    for idx in [i, j, l] {
        check_index(idx, d)?;
    }
    let inner = &s.differentiate(VarId::x(l))? - &s.differentiate(VarId::y(l))?;
    Ok(inner.differentiate(VarId::x(i))?.differentiate(VarId::y(j))?)
}

pub fn minor_determinant(m: &PolyMatrix, sel: &MinorSelection) -> Result<Polynomial, HessianError> {
    Ok(m.submatrix(sel)?.determinant())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&p| cur[p] < n - (k - 1 - p)) else {
            return out;
        };
        cur[pos] += 1;
        for q in pos + 1..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
}

/// All minors with order in `ks`: order descending, then rows, then columns,
/// both lexicographic.
pub fn enumerate_minors(d: usize, ks: &[usize]) -> Result<Vec<MinorSelection>, HessianError> {
    if d > MAX_MINOR_DIM {
        return Err(HessianError::TooLarge {
            dim: d,
            max: MAX_MINOR_DIM,
        });
    }
    let mut orders: Vec<usize> = ks.to_vec();
    orders.sort_unstable_by(|a, b| b.cmp(a));
    orders.dedup();
    let mut out = Vec::new();
    for k in orders {
        if k == 0 || k > d {
            return Err(HessianError::InvalidSelection(format!(
                "order {k} outside 1..={d}"
            )));
        }
        let sets = combinations(d, k);
        for rows in &sets {
            for cols in &sets {
                out.push(MinorSelection {
                    rows: rows.clone(),
                    cols: cols.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// `(S ∘ A)(x, y) = S(Ax, Ay)`.
pub fn gl_pushforward(s: &Polynomial, a: &GLTransform) -> Result<Polynomial, HessianError> {
    check_phase(s)?;
    if a.dim() != s.dim() {
        return Err(PolyError::DimensionMismatch {
            left: s.dim(),
            right: a.dim(),
        }
        .into());
    }
    Ok(s.substitute(&a.as_map(&[Role::X, Role::Y])?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_phase, parse_polynomial};
    use crate::poly::tests::q;

    fn p(src: &str, d: usize) -> Polynomial {
        parse_polynomial(src, d).unwrap()
    }

    /// Laplace expansion along the first row.
    fn laplace(m: &[Vec<Polynomial>], dim: usize) -> Polynomial {
        if m.len() == 1 {
            return m[0][0].clone();
        }
        let mut acc = Polynomial::zero(dim);
        for j in 0..m.len() {
            let sub: Vec<Vec<Polynomial>> = m[1..]
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let term = &m[0][j] * &laplace(&sub, dim);
            acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
        }
        acc
    }

    #[test]
    fn s_tau_examples() {
        let s = parse_phase("x1*y1", 1).unwrap();
        assert_eq!(build_s_tau(&s).unwrap(), p("x1*y1 - (x1+t1)*(y1-t1)", 1));
        let s = parse_phase("x1", 1).unwrap();
        assert_eq!(build_s_tau(&s).unwrap(), p("-t1", 1));
        let s = parse_phase("1/2*x1^2*y1", 1).unwrap();
        assert_eq!(
            build_s_tau(&s).unwrap(),
            p("1/2*x1^2*y1 - 1/2*(x1+t1)^2*(y1-t1)", 1)
        );
        assert!(build_s_tau(&p("t1*x1", 1)).is_err());
    }

    #[test]
    fn hessian_matches_direct_differentiation() {
        let s = parse_phase("x1*x2*y2 + x1^3*y1*y2 - 2/7*x2^2*y1^2 + y2^4", 2).unwrap();
        let st = build_s_tau(&s).unwrap();
        let m = mixed_hessian(&s).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                let direct = st
                    .differentiate(VarId::x(i))
                    .unwrap()
                    .differentiate(VarId::y(j))
                    .unwrap();
                assert_eq!(m.get(i - 1, j - 1), &direct);
            }
        }
    }

    #[test]
    fn chart_case_two() {
        let m = mixed_hessian(&parse_phase("1/2*(x1*y1^2 + x2*y2^2)", 2).unwrap()).unwrap();
        assert_eq!(m.determinant(), p("t1*t2", 2));
        assert_eq!(m.get(0, 1), &Polynomial::zero(2));
    }

    #[test]
    fn d_operator_examples() {
        let s = parse_phase("x1^2*y1", 1).unwrap();
        assert_eq!(d_operator(&s, 1, 1, 1).unwrap(), Polynomial::from_int(1, 2));
        let s = parse_phase("x1*y2", 2).unwrap();
        assert!(d_operator(&s, 1, 2, 2).unwrap().is_zero());
        let s = parse_phase("x1^3", 2).unwrap();
        assert!(d_operator(&s, 1, 1, 1).unwrap().is_zero());
        assert!(d_operator(&s, 3, 1, 1).is_err());
    }

    #[test]
    fn determinant_paths_agree_with_laplace() {
        let entries = [
            "x1*t2 + 1", "t1^2", "x2 - y1", "3", "t3*y3",
            "y2", "x1*x2", "t1 - t2", "0", "1/2*t3",
            "x3", "t2*t3", "y1^2", "t1", "-1",
            "2*x2", "0", "t1*y1", "x3 - t3", "y2*t2",
            "1", "t1", "t2", "t3", "x1",
        ];
        for n in 1..=5 {
            let rows: Vec<Vec<Polynomial>> = (0..n)
                .map(|i| (0..n).map(|j| p(entries[5 * i + j], 3)).collect())
                .collect();
            let m = PolyMatrix::new(rows.clone()).unwrap();
            assert_eq!(m.determinant(), laplace(&rows, 3), "n = {n}");
            assert_eq!(bareiss(3, rows.clone()), laplace(&rows, 3), "bareiss n = {n}");
        }
    }

    #[test]
    fn bareiss_handles_zero_pivots() {
        let rows: Vec<Vec<Polynomial>> = [["0", "t1", "1", "0"], ["t2", "0", "0", "1"], ["1", "0", "t1", "0"], ["0", "1", "0", "t2"]]
            .iter()
            .map(|r| r.iter().map(|e| p(e, 2)).collect())
            .collect();
        assert_eq!(bareiss(2, rows.clone()), laplace(&rows, 2));
        let singular: Vec<Vec<Polynomial>> = (0..4)
            .map(|_| (0..4).map(|_| p("t1", 2)).collect())
            .collect();
        assert!(bareiss(2, singular).is_zero());
    }

    #[test]
    fn selections() {
        assert_eq!(enumerate_minors(2, &[2]).unwrap().len(), 1);
        assert_eq!(enumerate_minors(2, &[1]).unwrap().len(), 4);
        assert_eq!(enumerate_minors(3, &[2]).unwrap().len(), 9);
        let all = enumerate_minors(3, &[1, 2, 3]).unwrap();
        assert_eq!(all.len(), 1 + 9 + 9);
        assert_eq!(all[0], MinorSelection::full(3));
        assert_eq!(all[1].rows, vec![1, 2]);
        assert_eq!(all[1].cols, vec![1, 2]);
        assert_eq!(all[2].cols, vec![1, 3]);
        assert!(enumerate_minors(7, &[1]).is_err());
        assert!(MinorSelection::new(vec![2, 1], vec![1, 2], 2).is_err());
        assert!(MinorSelection::new(vec![1], vec![3], 2).is_err());
        assert_eq!(combinations(4, 2).len(), 6);
    }

    #[test]
    fn k1_minor_is_entry() {
        let m = mixed_hessian(&parse_phase("x1*x2*y2 + x1^2*y1", 2).unwrap()).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                let d = minor_determinant(&m, &MinorSelection::entry(i, j)).unwrap();
                assert_eq!(&d, m.get(i - 1, j - 1));
            }
        }
    }

    #[test]
    fn pushforward_examples() {
        let s = parse_phase("x1*y1", 1).unwrap();
        let a = GLTransform::new(vec![vec![q(2, 1)]]).unwrap();
        assert_eq!(gl_pushforward(&s, &a).unwrap(), p("4*x1*y1", 1));
        let s = parse_phase("1/2*(x1*y1^2 + x2*y2^2)", 2).unwrap();
        assert_eq!(gl_pushforward(&s, &GLTransform::identity(2)).unwrap(), s);
        let swap = GLTransform::from_integers(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(swap.det(), &q(-1, 1));
        assert_eq!(
            gl_pushforward(&s, &swap).unwrap(),
            p("1/2*(x2*y2^2 + x1*y1^2)", 2)
        );
        assert!(matches!(
            GLTransform::from_integers(&[vec![1, 2], vec![2, 4]]),
            Err(HessianError::Singular)
        ));
    }
}
