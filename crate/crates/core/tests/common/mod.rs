#![allow(dead_code)]

use num_bigint::BigInt;
use oscdecay::poly::{Polynomial, Rational, VarId};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x05c_dec4),
        ..Config::default()
    }
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn var(d: usize, v: VarId) -> Polynomial {
    Polynomial::var(d, v).unwrap()
}

pub fn coefficient() -> impl Strategy<Value = Rational> {
    (prop_oneof![-9i64..=-1, 1i64..=9], 1i64..=6).prop_map(|(n, d)| q(n, d))
}

/// Random polynomial in the variables whose slot positions are in `slots`,
/// each exponent at most `max_exp`, total degree at most `max_deg`.
pub fn poly_in(
    d: usize,
    slots: Vec<usize>,
    max_exp: u32,
    max_deg: u32,
    max_terms: usize,
) -> impl Strategy<Value = Polynomial> {
    let n = slots.len();
    let factors = prop::collection::vec(0..n, 0..=max_deg as usize);
    prop::collection::vec((factors, coefficient()), 0..=max_terms).prop_map(move |terms| {
        let terms = terms.into_iter().map(|(fs, c)| {
            let mut full = vec![0u32; 3 * d];
            for k in fs {
                let e = &mut full[slots[k]];
                *e = (*e + 1).min(max_exp);
            }
            (c, full)
        });
        Polynomial::from_terms(d, terms).unwrap()
    })
}

/// Any polynomial in all `3d` variables.
pub fn poly(d: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    poly_in(d, (0..3 * d).collect(), max_deg, max_deg, max_terms)
}

/// Polynomial in `x` and `y` only.
pub fn phase(d: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    poly_in(d, (0..2 * d).collect(), max_deg, max_deg, max_terms)
}

/// Polynomial in the `x` block only (or `y` when `y` is set).
pub fn block(d: usize, y: bool, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    let off = if y { d } else { 0 };
    poly_in(d, (off..off + d).collect(), max_deg, max_deg, max_terms)
}

/// Homogeneous cubic in `x` and `y`, never zero.
pub fn cubic(d: usize, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    let term = (prop::collection::vec(0..2 * d, 3), coefficient());
    prop::collection::vec(term, 1..=max_terms)
        .prop_map(move |terms| {
            let terms = terms.into_iter().map(|(slots, c)| {
                let mut e = vec![0u32; 3 * d];
                for s in slots {
                    e[s] += 1;
                }
                (c, e)
            });
            Polynomial::from_terms(d, terms).unwrap()
        })
        .prop_filter("cancelled to zero", |p| !p.is_zero())
}

/// Integer matrix with `|det| ∈ [1, max_det]`.
pub fn gl_matrix(d: usize, max_det: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-2i64..=2, d), d).prop_filter(
        "determinant out of range",
        move |m| {
            let det = int_det(m).abs();
            det >= 1 && det <= max_det
        },
    )
}

/// Laplace expansion, kept separate from the library's determinant code.
pub fn int_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * m[0][j] * int_det(&minor)
        })
        .sum()
}

/// Cubic whose full mixed-Hessian determinant is not identically zero.
pub fn nondegenerate_cubic(d: usize, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    cubic(d, max_terms).prop_filter("degenerate Hessian", |s| {
        !oscdecay::mixed_hessian(s).unwrap().determinant().is_zero()
    })
}
