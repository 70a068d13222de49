//! Worked examples: chart phases, hand expansions and analytic sublevel areas.

mod common;

use common::{q, var};
use oscdecay::decay::{corollary_check, predicted_exponent_exact, AnalysisConfig, PhaseSpec, Regime};
use oscdecay::hessian::{enumerate_minors, MinorSelection};
use oscdecay::oscint::{brute_force_oracle, evaluate_trilinear, family_norms, CutoffSpec, QuadConfig, TestFamily};
use oscdecay::poly::{AffineMap, Polynomial, VarId};
use oscdecay::sublevel::{worst_case_abs, SamplerConfig};
use oscdecay::{
    analyze_phase, build_s_tau, d_operator, minor_determinant, mixed_hessian, parse_phase, parse_polynomial,
    sublevel_measure, AlphaValue, SupportGeometry,
};

fn p(src: &str, d: usize) -> Polynomial {
    parse_polynomial(src, d).unwrap()
}

const EXAMPLE_15: &str = "x1^2*y1 + x2^2*y2 + 1/300*x1^3*y1";
const THREE_D: &str = "x1*x2*y2 + x1*x3*y3 + 1/2*x1*y3^2 + 1/2*x1^2*y1 - 1/2*x2^2*y1 - 1/2*x3*y1^2 - 1/2*x2^2*y3";

#[test]
fn shift_expansions() {
    // (x₁ + τ₁)(y₁ − τ₁) multiplied out term by term
    let (x, y, t) = (var(1, VarId::x(1)), var(1, VarId::y(1)), var(1, VarId::tau(1)));
    let expanded = &(&(&(&x * &y) - &(&x * &t)) + &(&t * &y)) - &(&t * &t);
    assert_eq!(&(&x + &t) * &(&y - &t), expanded);
    assert_eq!(p("x1*y1", 1).substitute(&AffineMap::shift(1)).unwrap(), expanded);
    assert_eq!(build_s_tau(&p("x1*y1", 1)).unwrap(), &(&x * &y) - &expanded);
    assert_eq!(build_s_tau(&p("x1", 1)).unwrap(), -t.clone());
    let half = q(1, 2);
    let s = p("1/2*x1^2*y1", 1);
    let moved = (&(&(&x + &t) * &(&x + &t)) * &(&y - &t)).scale(&half);
    assert_eq!(build_s_tau(&s).unwrap(), &s - &moved);
}

#[test]
fn evaluation_examples() {
    let at = |src: &str, pt: [i64; 6]| p(src, 2).evaluate_exact(&pt.map(|v| q(v, 1))).unwrap();
    assert_eq!(at("t1^2 + t2^2", [0, 0, 0, 0, 3, 4]), q(25, 1));
    assert_eq!(at("0", [1, 2, 3, 4, 5, 6]), q(0, 1));
    // τ₁τ₂(4 + x₁/25 + τ₁/50) at x₁ = 0, τ = (1, 1)
    let value = q(1, 1) * q(1, 1) * (q(4, 1) + q(0, 1) + q(1, 50));
    assert_eq!(at("t1*t2*(4 + 1/25*x1 + 1/50*t1)", [0, 0, 0, 0, 1, 1]), value);
    assert_eq!(value, q(201, 50));
}

#[test]
fn homogeneous_filter() {
    let s = p("x1^2*y1 + x1^3*y1", 1);
    assert_eq!(s.homogeneous_part(3), p("x1^2*y1", 1));
    assert_eq!(s.homogeneous_part(4), p("x1^3*y1", 1));
    assert!(s.homogeneous_part(7).is_zero());
}

#[test]
fn derivative_examples() {
    let s = p("x1^2*y1", 2);
    assert_eq!(s.differentiate(VarId::x(1)).unwrap(), p("2*x1*y1", 2));
    assert!(s.differentiate(VarId::y(2)).unwrap().is_zero());
    // ∂x₁∂y₁(∂x₁ − ∂y₁) by hand: ∂x₁ gives 2x₁y₁, ∂y₁ gives x₁²
    let inner = &p("2*x1*y1", 2) - &p("x1^2", 2);
    let by_hand = inner.differentiate(VarId::x(1)).unwrap().differentiate(VarId::y(1)).unwrap();
    assert_eq!(by_hand, Polynomial::from_int(2, 2));
    assert_eq!(d_operator(&s, 1, 1, 1).unwrap(), by_hand);
    for (i, j, l) in [(1, 1, 1), (1, 2, 2), (2, 1, 1)] {
        assert!(d_operator(&p("x1*y2", 2), i, j, l).unwrap().is_zero());
        assert!(d_operator(&p("x1^3", 2), i, j, l).unwrap().is_zero());
    }
    assert_eq!(d_operator(&p("1/2*x1^2*y1", 1), 1, 1, 1).unwrap(), Polynomial::one(1));
}

#[test]
fn substitution_examples() {
    let m = AffineMap::identity(1).with_image(VarId::x(1), p("2*x1", 1)).unwrap();
    assert_eq!(p("x1^2", 1).substitute(&m).unwrap(), p("4*x1^2", 1));
}

#[test]
fn chart_hessians() {
    // case 2: diag(τ₁, τ₂) up to an overall sign
    let m = mixed_hessian(&parse_phase("1/2*(x1*y1^2 + x2*y2^2)", 2).unwrap()).unwrap();
    let diag = [[p("t1", 2), p("0", 2)], [p("0", 2), p("t2", 2)]];
    let sign = if m.get(0, 0) == &diag[0][0] { 1 } else { -1 };
    for i in 0..2 {
        for j in 0..2 {
            let want = if sign == 1 { diag[i][j].clone() } else { -diag[i][j].clone() };
            assert_eq!(m.get(i, j), &want);
        }
    }
    assert_eq!(m.determinant(), p("t1*t2", 2));

    // Example 1.5, exactly
    let m = mixed_hessian(&parse_phase(EXAMPLE_15, 2).unwrap()).unwrap();
    assert_eq!(m.determinant(), p("t1*t2*(4 + 1/25*x1 + 1/50*t1)", 2));

    // three-dimensional example: the displayed matrix up to sign
    let m = mixed_hessian(&parse_phase(THREE_D, 3).unwrap()).unwrap();
    let shown = [
        ["t1", "t2", "0"],
        ["-t2", "t1", "-t2"],
        ["t1", "0", "t1"],
    ];
    let neg = m.neg();
    let matches = |mm: &oscdecay::PolyMatrix| {
        (0..3).all(|i| (0..3).all(|j| mm.get(i, j) == &p(shown[i][j], 3)))
    };
    assert!(matches(&m) || matches(&neg), "{m}");
    let det = minor_determinant(&m, &MinorSelection::full(3)).unwrap();
    assert!(det == p("t1^3", 3) || det == p("-t1^3", 3));
    let sel = MinorSelection::new(vec![1, 2], vec![1, 2], 3).unwrap();
    assert_eq!(minor_determinant(&m, &sel).unwrap(), p("t1^2 + t2^2", 3));
    assert_eq!(minor_determinant(&m, &MinorSelection::entry(2, 3)).unwrap(), m.get(1, 2).clone());
}

#[test]
fn minor_counts() {
    let count = |d, k| enumerate_minors(d, &[k]).unwrap().len();
    assert_eq!(count(2, 2), 1);
    assert_eq!(count(2, 1), 4);
    assert_eq!(count(3, 2), 9);
}

#[test]
fn exponent_table() {
    for ((k, a), want) in [((2, q(1, 1)), q(1, 3)), ((2, q(1, 2)), q(1, 4)), ((1, q(1, 1)), q(1, 6)), ((3, q(1, 3)), q(3, 10))] {
        assert_eq!(predicted_exponent_exact(k, &a).unwrap(), want);
    }
}

#[test]
fn worst_case_examples() {
    let g = SupportGeometry::new(2, 0.5);
    assert_eq!(worst_case_abs(&p("t1*t2", 2), &[1.0, 2.0], &g, 8), 2.0);
    // monotone in x₁, so the minimum sits at x₁ = −1/2: 4 − 1/50 + 1/50
    let v = worst_case_abs(&p("t1*t2*(4 + 1/25*x1 + 1/50*t1)", 2), &[1.0, 1.0], &g, 8);
    assert!((v - 4.0).abs() < 1e-12);
    assert_eq!(worst_case_abs(&Polynomial::zero(2), &[0.3, 0.4], &g, 8), 0.0);
}

fn within(sample: &oscdecay::sublevel::MeasureSample, exact: f64) {
    let tol = 3.0 * sample.std_error + 1e-12;
    assert!((sample.m_hat - exact).abs() <= tol, "{} vs {exact} (± {tol})", sample.m_hat);
}

#[test]
fn analytic_sublevel_measures() {
    let cfg = SamplerConfig::default();
    let s = sublevel_measure(&p("t1", 1), 0.1, &SupportGeometry::ball(1.0, 1.0), &cfg).unwrap();
    within(&s, 0.2);
    let s = sublevel_measure(&p("t1^2 + t2^2", 2), 0.25, &SupportGeometry::ball(1.0, 1.0), &cfg).unwrap();
    within(&s, std::f64::consts::PI * 0.25);
    // |τ₁τ₂| < ε on [−1, 1]²: 4ε(1 + ln(1/ε))
    let eps: f64 = 0.01;
    let s = sublevel_measure(&p("t1*t2", 2), eps, &SupportGeometry::cube(1.0, 1.0), &cfg).unwrap();
    within(&s, 4.0 * eps * (1.0 + (1.0 / eps).ln()));
}

#[test]
fn analysis_examples() {
    let cfg = AnalysisConfig::default();
    let a = analyze_phase(&PhaseSpec::parse("1/2*x1^2*y1", 1, 1.0).unwrap(), &cfg).unwrap();
    assert_eq!(a.best.k, Some(1));
    assert!((a.best.exponent - 1.0 / 6.0).abs() < 0.01);
    let a = analyze_phase(&PhaseSpec::parse("x1^3", 2, 1.0).unwrap(), &cfg).unwrap();
    assert_eq!(a.best.regime, Regime::NoDecay);
    assert!(a.minors.iter().all(|m| m.determinant.is_zero() && m.alpha.alpha == AlphaValue::NoDecay));
    let a = analyze_phase(&PhaseSpec::parse("x1*y2", 2, 1.0).unwrap(), &cfg).unwrap();
    assert_eq!(a.best.regime, Regime::NoDecay);
}

#[test]
fn corollary_examples() {
    let c = corollary_check(&p("x1^2*y1", 1), None, 1.0, 8).unwrap();
    assert_eq!(c.witnesses, vec![[1, 1, 1]]);
    assert_eq!(c.operators[0].grid_min, 2.0);
    assert!((c.prediction.unwrap().exponent - 1.0 / 6.0).abs() < 1e-15);
    let c = corollary_check(&p("1/2*x1^2*y1", 1), None, 1.0, 8).unwrap();
    assert_eq!(c.operators[0].grid_min, 1.0);
    assert_eq!(c.witnesses, vec![[1, 1, 1]]);
    let c = corollary_check(&p("x1*y2", 2), None, 1.0, 8).unwrap();
    assert!(c.witnesses.is_empty() && c.prediction.is_none());
}

#[test]
fn family_examples() {
    let n = family_norms(&TestFamily::ScaledBox.instance(2, 1e6).unwrap());
    for v in n {
        assert!((v - 1e-2).abs() < 1e-16);
    }
    let lambda: f64 = 100.0;
    let n = family_norms(&TestFamily::AnisoBox.instance(2, lambda).unwrap());
    assert!((n[0] - (lambda.powf(-0.5) / 10.0).sqrt()).abs() < 1e-16);
    assert_eq!(family_norms(&TestFamily::unit_box(1).instance(1, 1.0).unwrap()), [1.0; 3]);
}

#[test]
fn simplex_and_scaled_box_against_the_grid() {
    let one = CutoffSpec::one();
    let unit = TestFamily::unit_box(1).instance(1, 0.0).unwrap();
    let zero = Polynomial::zero(1);
    let v = brute_force_oracle(&zero, &one, &unit, 0.0, 2000).unwrap();
    assert!((v.re - 0.5).abs() < 1e-4 && v.im == 0.0);
    let a = evaluate_trilinear(&zero, &one, &unit, 3.0, &QuadConfig::default()).unwrap();
    let b = evaluate_trilinear(&zero, &one, &unit, 30.0, &QuadConfig::default()).unwrap();
    assert_eq!(a.value(), b.value());

    let s = parse_phase("1/2*x1^2*y1", 1).unwrap();
    let bump = CutoffSpec::bump(1.0);
    let inst = TestFamily::ScaledBox.instance(1, 100.0).unwrap();
    let fast = evaluate_trilinear(&s, &bump, &inst, 100.0, &QuadConfig::default()).unwrap();
    let grid = brute_force_oracle(&s, &bump, &inst, 100.0, 2000).unwrap();
    assert!((fast.value() - grid).norm() <= 1e-3 * grid.norm());
    let conj = brute_force_oracle(&s, &bump, &inst, -100.0, 2000).unwrap();
    assert_eq!(conj, grid.conj());
}
