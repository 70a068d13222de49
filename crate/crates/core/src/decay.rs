//! From minors and sublevel exponents to a predicted decay rate.
//!
//! A `k × k` minor whose determinant satisfies `|{τ : |P| < ε}| ≲ ε^α`
//! predicts `|Λ| ≲ |λ|^{−σ}` with `σ = kα / (4(α + 1/2))`. The rate tends to
//! `k/4` as α grows and vanishes at α = 0. A third-order operator
//! `D_{i,j,l} S` bounded below by 1 on a rectangle gives `σ = 1/6` directly.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exec::map_indexed;
use crate::grid::XyGrid;
use crate::hessian::{
    d_operator, enumerate_minors, minor_determinant, mixed_hessian, HessianError, MinorSelection,
    PolyMatrix, MAX_MINOR_DIM,
};
use crate::parser::parse_phase;
use crate::poly::{Interval, Polynomial, Rational};
use crate::sublevel::{estimate_alpha, AlphaEstimate, AlphaValue, LadderConfig, SamplerConfig, SupportGeometry};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Theorem1,
    Corollary,
    NoDecay,
    /// α = ∞, exponent `k/4`.
    HoermanderLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayPrediction {
    pub exponent: f64,
    pub regime: Regime,
    pub k: Option<usize>,
    pub selection: Option<MinorSelection>,
}

impl DecayPrediction {
    pub fn no_decay() -> Self {
        DecayPrediction {
            exponent: 0.0,
            regime: Regime::NoDecay,
            k: None,
            selection: None,
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Invalid("minor order k must be at least 1".into()));
    }
    Ok(())
}

/// `kα / (4(α + 1/2))`, with the limit `k/4` at `α = ∞`.
pub fn predicted_exponent(k: usize, alpha: f64) -> Result<f64> {
    check_k(k)?;
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Invalid(format!("α must be nonnegative, got {alpha}")));
    }
    if alpha.is_infinite() {
        return Ok(k as f64 / 4.0);
    }
    Ok(k as f64 * alpha / (4.0 * (alpha + 0.5)))
}

/// Exact version of [`predicted_exponent`] for rational α.
pub fn predicted_exponent_exact(k: usize, alpha: &Rational) -> Result<Rational> {
    check_k(k)?;
    if alpha.is_negative() {
        return Err(Error::Invalid(format!("α must be nonnegative, got {alpha}")));
    }
    let k = Rational::from_integer(k.into());
    let four = Rational::from_integer(4.into());
    let half = Rational::new(1.into(), 2.into());
    Ok(k * alpha / (four * (alpha + half)))
}

/// Prediction for a `k × k` minor with estimated α.
pub fn prediction_for(k: usize, alpha: &AlphaValue, sel: Option<MinorSelection>) -> Result<DecayPrediction> {
    let (exponent, regime) = match alpha {
        AlphaValue::NoDecay => (0.0, Regime::NoDecay),
        AlphaValue::Infinite => (predicted_exponent(k, f64::INFINITY)?, Regime::HoermanderLimit),
        AlphaValue::Finite(a) if *a == 0.0 => (0.0, Regime::NoDecay),
        AlphaValue::Finite(a) => (predicted_exponent(k, *a)?, Regime::Theorem1),
    };
    Ok(DecayPrediction {
        exponent,
        regime,
        k: Some(k),
        selection: sel,
    })
}

/// A phase together with its cutoff geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpec {
    pub phase: Polynomial,
    pub geometry: SupportGeometry,
}

impl PhaseSpec {
    pub fn new(phase: Polynomial, r: f64) -> Self {
        let d = phase.dim();
        PhaseSpec {
            phase,
            geometry: SupportGeometry::new(d, r),
        }
    }

    pub fn parse(src: &str, d: usize, r: f64) -> Result<Self> {
        Ok(PhaseSpec::new(parse_phase(src, d)?, r))
    }

    pub fn dim(&self) -> usize {
        self.phase.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub ladder: LadderConfig,
    pub sampler: SamplerConfig,
    /// Minor orders to examine; empty means all.
    pub orders: Vec<usize>,
    pub corollary_grid: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            ladder: LadderConfig::default(),
            sampler: SamplerConfig::default(),
            orders: Vec::new(),
            corollary_grid: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorReport {
    pub selection: MinorSelection,
    pub k: usize,
    pub determinant: Polynomial,
    pub alpha: AlphaEstimate,
    pub prediction: DecayPrediction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseAnalysis {
    pub phase: Polynomial,
    pub dim: usize,
    pub hessian: PolyMatrix,
    pub minors: Vec<MinorReport>,
    pub best: DecayPrediction,
    pub corollary: CorollaryReport,
}

fn guard(e: HessianError) -> Error {
    match e {
        HessianError::TooLarge { .. } => Error::Guard(e.to_string()),
        HessianError::Poly(p) => Error::Poly(p),
        other => Error::Invalid(other.to_string()),
    }
}

/// Estimates α for every minor and keeps the largest predicted exponent.
/// Ties go to the larger minor, then to the earlier selection.
pub fn analyze_phase(spec: &PhaseSpec, cfg: &AnalysisConfig) -> Result<PhaseAnalysis> {
    let d = spec.dim();
    if d > MAX_MINOR_DIM {
        return Err(Error::Guard(format!(
            "dimension {d} exceeds the minor enumeration limit of {MAX_MINOR_DIM}"
        )));
    }
    let hessian = mixed_hessian(&spec.phase).map_err(guard)?;
    let orders: Vec<usize> = if cfg.orders.is_empty() {
        (1..=d).collect()
    } else {
        cfg.orders.clone()
    };
    let selections = enumerate_minors(d, &orders).map_err(guard)?;
    let dets = selections
        .iter()
        .map(|s| minor_determinant(&hessian, s).map_err(guard))
        .collect::<Result<Vec<_>>>()?;

    // Determinants equal up to sign share one estimate.
    let mut distinct: BTreeMap<String, usize> = BTreeMap::new();
    let mut reps: Vec<Polynomial> = Vec::new();
    let owner: Vec<usize> = dets
        .iter()
        .map(|p| {
            let key = p.normalized_sign().to_string();
            *distinct.entry(key).or_insert_with(|| {
                reps.push(p.normalized_sign());
                reps.len() - 1
            })
        })
        .collect();
    let estimates = map_indexed(reps.len(), cfg.sampler.parallelism, |i| {
        estimate_alpha(&reps[i], &spec.geometry, &cfg.ladder, &cfg.sampler)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut minors = Vec::with_capacity(selections.len());
    for ((sel, det), o) in selections.into_iter().zip(dets).zip(owner) {
        let alpha = estimates[o].clone();
        let prediction = prediction_for(sel.k(), &alpha.alpha, Some(sel.clone()))?;
        minors.push(MinorReport {
            k: sel.k(),
            selection: sel,
            determinant: det,
            alpha,
            prediction,
        });
    }
    let mut best = DecayPrediction::no_decay();
    for m in &minors {
        if m.prediction.regime != Regime::NoDecay && m.prediction.exponent > best.exponent {
            best = m.prediction.clone();
        }
    }
    let corollary = corollary_check(&spec.phase, None, spec.geometry.r, cfg.corollary_grid)?;
    Ok(PhaseAnalysis {
        dim: d,
        phase: spec.phase.clone(),
        hessian,
        minors,
        best,
        corollary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorMin {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub operator: Polynomial,
    pub grid_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    /// Sides `[lo, hi]` for `x1..xd, y1..yd`.
    pub rectangle: Vec<[f64; 2]>,
    pub grid_n: usize,
    pub operators: Vec<OperatorMin>,
    /// Triples whose grid minimum of `|D_{i,j,l} S|` is at least 1.
    pub witnesses: Vec<[usize; 3]>,
    pub prediction: Option<DecayPrediction>,
    pub caveat: String,
}

/// Checks `|D_{i,j,l} S| ≥ 1` on a tensor grid over `rect` (default: the
/// support box `[−r, r]^{2d}`). The grid minimum is evidence, not a proof.
pub fn corollary_check(
    s: &Polynomial,
    rect: Option<&[Interval]>,
    r: f64,
    grid_n: usize,
) -> Result<CorollaryReport> {
    let d = s.dim();
    let default_rect = vec![Interval::symmetric(r); 2 * d];
    let rect = rect.unwrap_or(&default_rect);
    if rect.len() != 2 * d {
        return Err(Error::Invalid(format!(
            "rectangle needs {} sides, got {}",
            2 * d,
            rect.len()
        )));
    }
    if rect.iter().any(|side| side.lo > -r || side.hi < r) {
        return Err(Error::Invalid(format!(
            "rectangle must contain the support box [-{r}, {r}]^{}",
            2 * d
        )));
    }
    let tau = vec![0.0; d];
    let mut operators = Vec::with_capacity(d * d * d);
    for i in 1..=d {
        for j in 1..=d {
            for l in 1..=d {
                let op = d_operator(s, i, j, l).map_err(guard)?;
                let grid_min = XyGrid::over(&op, rect, grid_n).min_abs(&op.compile(), &tau);
                operators.push(OperatorMin {
                    i,
                    j,
                    l,
                    operator: op,
                    grid_min,
                });
            }
        }
    }
    let witnesses: Vec<[usize; 3]> = operators
        .iter()
        .filter(|o| o.grid_min >= 1.0)
        .map(|o| [o.i, o.j, o.l])
        .collect();
    let prediction = (!witnesses.is_empty()).then(|| DecayPrediction {
        exponent: 1.0 / 6.0,
        regime: Regime::Corollary,
        k: None,
        selection: None,
    });
    Ok(CorollaryReport {
        rectangle: rect.iter().map(|s| [s.lo, s.hi]).collect(),
        grid_n,
        operators,
        witnesses,
        prediction,
        caveat: "grid minimum only; not a certified lower bound".into(),
    })
}

/// `a == b` or `a == (−1)^k b`: the two shift conventions for `S_τ` differ
/// by that factor on `k × k` determinants.
pub fn equal_up_to_sign(a: &Polynomial, b: &Polynomial, k: usize) -> bool {
    a == b || (k % 2 == 1 && a == &(-b))
}

/// The positive rational `c` with `a = c·b`, if there is one.
pub fn positive_multiple(a: &Polynomial, b: &Polynomial) -> Option<Rational> {
    let (mb, cb) = b.leading_term()?;
    let c = a.coefficient(mb) / cb;
    if c.is_zero() || c.is_negative() {
        return None;
    }
    (a == &b.scale(&c)).then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_polynomial;
    use crate::poly::tests::q;

    #[test]
    fn exponent_formula() {
        for (k, a, expect) in [(2, q(1, 1), q(1, 3)), (2, q(1, 2), q(1, 4)), (1, q(1, 1), q(1, 6)), (3, q(1, 3), q(3, 10))] {
            assert_eq!(predicted_exponent_exact(k, &a).unwrap(), expect);
        }
        assert_eq!(predicted_exponent(2, f64::INFINITY).unwrap(), 0.5);
        assert_eq!(predicted_exponent(2, 0.0).unwrap(), 0.0);
        assert!(predicted_exponent(0, 1.0).is_err());
        assert!(predicted_exponent(1, -0.5).is_err());
    }

    #[test]
    fn corollary_examples() {
        let s = parse_phase("x1^2*y1", 1).unwrap();
        let rep = corollary_check(&s, None, 1.0, 8).unwrap();
        assert_eq!(rep.witnesses, vec![[1, 1, 1]]);
        assert_eq!(rep.operators[0].grid_min, 2.0);
        assert_eq!(rep.prediction.unwrap().exponent, 1.0 / 6.0);

        let s = parse_phase("x1*y2", 2).unwrap();
        let rep = corollary_check(&s, None, 1.0, 8).unwrap();
        assert!(rep.witnesses.is_empty() && rep.prediction.is_none());

        let s = parse_phase("1/2*x1^2*y1", 1).unwrap();
        let rep = corollary_check(&s, None, 1.0, 8).unwrap();
        assert_eq!(rep.operators[0].grid_min, 1.0);
        assert_eq!(rep.witnesses.len(), 1);

        let small = [Interval::new(-0.5, 0.5), Interval::new(-1.0, 1.0)];
        assert!(corollary_check(&s, Some(&small), 1.0, 8).is_err());
    }

    #[test]
    fn multiples() {
        let a = parse_polynomial("1/2*t1^2 + 1/2*t2^2", 2).unwrap();
        let b = parse_polynomial("t1^2 + t2^2", 2).unwrap();
        assert_eq!(positive_multiple(&a, &b), Some(q(1, 2)));
        assert_eq!(positive_multiple(&-&a, &b), None);
        assert!(equal_up_to_sign(&-&b, &b, 3));
        assert!(!equal_up_to_sign(&-&b, &b, 2));
    }

    #[test]
    fn degenerate_and_quadratic_phases_do_not_decay() {
        let cfg = AnalysisConfig {
            sampler: SamplerConfig {
                samples: 10_000,
                ..SamplerConfig::default()
            },
            ..AnalysisConfig::default()
        };
        for src in ["x1^3", "x1*y2"] {
            let a = analyze_phase(&PhaseSpec::parse(src, 2, 1.0).unwrap(), &cfg).unwrap();
            assert_eq!(a.best.regime, Regime::NoDecay, "{src}");
            assert!(a.minors.iter().all(|m| m.alpha.alpha == AlphaValue::NoDecay));
        }
    }
}
