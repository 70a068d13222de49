//! Numerical evaluation of `Λ(f, g, h)` on test families and decay fits.
//!
//! Box families are integrated after rescaling every coordinate to the unit
//! interval. For the scaled families this removes the λ dependence of the
//! phase (for cubic `S`), so the sampler sees an `O(1)` oscillation however
//! large λ is. Coordinates where `f`, `g` and `h` are all `[0, L]` are sampled
//! on the triangle `{u, v ≥ 0, u + v ≤ 1}` through a fold of the unit square;
//! other coordinates sample the full rectangle and test `h` pointwise.
//!
//! Sampling is randomized quasi-Monte Carlo: one Halton point set with an
//! independent random shift (mod 1) per replicate. The error is the standard
//! error of the replicate mean.
//!
//! The Gaussian family is integrated directly with a tensor Gauss–Legendre
//! rule whose order follows the phase variation.

mod quadrature;

pub use quadrature::{gauss_legendre, gauss_legendre_on, halton};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{derive_seed, map_indexed, Parallelism};
use crate::poly::{CompiledPoly, Interval, Polynomial, VarId};
use crate::{Error, Result};

/// Largest `|λ|` for rescaled box families.
pub const RESCALED_CEILING: f64 = 1e5;

/// Largest `|λ|` for direct quadrature (no rescaling), by dimension.
pub fn direct_ceiling(d: usize) -> f64 {
    match d {
        1 => 1e3,
        2 => 2e2,
        _ => 5e1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffKind {
    /// `∏ exp(1 − 1/(1 − (t/r)²))` on `|t| < r`.
    Bump,
    /// `φ ≡ 1`.
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub kind: CutoffKind,
    pub r: f64,
}

impl CutoffSpec {
    pub fn bump(r: f64) -> Self {
        CutoffSpec {
            kind: CutoffKind::Bump,
            r,
        }
    }

    pub fn one() -> Self {
        CutoffSpec {
            kind: CutoffKind::One,
            r: f64::INFINITY,
        }
    }

    #[inline]
    pub fn eval(&self, coords: &[f64]) -> f64 {
        match self.kind {
            CutoffKind::One => 1.0,
            CutoffKind::Bump => {
                let mut v = 1.0;
                for &t in coords {
                    let s = t / self.r;
                    let q = 1.0 - s * s;
                    if q <= 0.0 {
                        return 0.0;
                    }
                    v *= (1.0 - 1.0 / q).exp();
                }
                v
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// Per-coordinate `[lo, hi]` sides of a box in `ℝ^d`.
pub type BoxSides = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFamily {
    /// `f = g = h = 1_{[0, λ^{−1/3}]^d}`.
    ScaledBox,
    /// `d = 2`: `f = g = h = 1_{[0,1] × [0, λ^{−1/2}/10]}`.
    AnisoBox,
    /// `f = g = h = exp(−|x|²/(2σ²))` with `σ = width · |λ|^{−exponent}`.
    Gaussian { width: f64, exponent: f64 },
    /// Fixed boxes, independent of λ.
    CustomBox { f: BoxSides, g: BoxSides, h: BoxSides },
    /// `Λ = |λ|^{−sigma}` with unit norms; exercises the fitting code.
    Synthetic { sigma: f64 },
}

impl TestFamily {
    pub fn name(&self) -> &'static str {
        match self {
            TestFamily::ScaledBox => "scaled-box",
            TestFamily::AnisoBox => "aniso-box",
            TestFamily::Gaussian { .. } => "gaussian",
            TestFamily::CustomBox { .. } => "custom-box",
            TestFamily::Synthetic { .. } => "synthetic",
        }
    }

    pub fn unit_box(d: usize) -> Self {
        let b = vec![[0.0, 1.0]; d];
        TestFamily::CustomBox {
            f: b.clone(),
            g: b.clone(),
            h: b,
        }
    }

    /// Concrete functions at `λ`.
    pub fn instance(&self, d: usize, lambda: f64) -> Result<FamilyInstance> {
        let scale = lambda.abs();
        let need_lambda = |what: &str| {
            if scale > 0.0 && scale.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{what} family needs a finite λ ≠ 0")))
            }
        };
        match self {
            TestFamily::ScaledBox => {
                need_lambda("scaled-box")?;
                let a = scale.powf(-1.0 / 3.0);
                let b = vec![[0.0, a]; d];
                Ok(FamilyInstance::boxes(b.clone(), b.clone(), b, true))
            }
            TestFamily::AnisoBox => {
                need_lambda("aniso-box")?;
                if d != 2 {
                    return Err(Error::Invalid("aniso-box family is defined for d = 2".into()));
                }
                let b = vec![[0.0, 1.0], [0.0, scale.powf(-0.5) / 10.0]];
                Ok(FamilyInstance::boxes(b.clone(), b.clone(), b, true))
            }
            TestFamily::Gaussian { width, exponent } => {
                need_lambda("gaussian")?;
                if width.is_nan() || *width <= 0.0 {
                    return Err(Error::Invalid("gaussian width must be positive".into()));
                }
                Ok(FamilyInstance::Gaussian {
                    d,
                    sigma: width * scale.powf(-exponent),
                })
            }
            TestFamily::CustomBox { f, g, h } => {
                for b in [f, g, h] {
                    if b.len() != d || b.iter().any(|s| s[0].is_nan() || s[1].is_nan() || s[0] >= s[1]) {
                        return Err(Error::Invalid(format!(
                            "custom boxes need {d} nondegenerate sides"
                        )));
                    }
                }
                Ok(FamilyInstance::boxes(f.clone(), g.clone(), h.clone(), false))
            }
            TestFamily::Synthetic { sigma } => {
                need_lambda("synthetic")?;
                Ok(FamilyInstance::Synthetic {
                    d,
                    value: scale.powf(-sigma),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyInstance {
    Boxes {
        f: BoxSides,
        g: BoxSides,
        h: BoxSides,
        /// Sides shrink with λ so that the rescaled phase stays bounded.
        rescaled: bool,
    },
    Gaussian {
        d: usize,
        sigma: f64,
    },
    Synthetic {
        d: usize,
        value: f64,
    },
}

impl FamilyInstance {
    fn boxes(f: BoxSides, g: BoxSides, h: BoxSides, rescaled: bool) -> Self {
        FamilyInstance::Boxes { f, g, h, rescaled }
    }

    pub fn dim(&self) -> usize {
        match self {
            FamilyInstance::Boxes { f, .. } => f.len(),
            FamilyInstance::Gaussian { d, .. } | FamilyInstance::Synthetic { d, .. } => *d,
        }
    }
}

fn box_volume(b: &[[f64; 2]]) -> f64 {
    b.iter().map(|s| s[1] - s[0]).product()
}

/// `(‖f‖₂, ‖g‖₂, ‖h‖₂)`.
pub fn family_norms(inst: &FamilyInstance) -> [f64; 3] {
    match inst {
        FamilyInstance::Boxes { f, g, h, .. } => {
            [f, g, h].map(|b| box_volume(b).sqrt())
        }
        FamilyInstance::Gaussian { d, sigma } => {
            let n = (std::f64::consts::PI.sqrt() * sigma).powf(*d as f64 / 2.0);
            [n; 3]
        }
        FamilyInstance::Synthetic { .. } => [1.0; 3],
    }
}

/// `‖f‖₁ / ‖f‖₂` for each function.
fn l1_over_l2(inst: &FamilyInstance) -> [f64; 3] {
    match inst {
        FamilyInstance::Boxes { f, g, h, .. } => [f, g, h].map(|b| box_volume(b).sqrt()),
        FamilyInstance::Gaussian { d, sigma } => {
            let l1 = ((2.0 * std::f64::consts::PI).sqrt() * sigma).powi(*d as i32);
            let l2 = (std::f64::consts::PI.sqrt() * sigma).powf(*d as f64 / 2.0);
            [l1 / l2; 3]
        }
        FamilyInstance::Synthetic { .. } => [f64::INFINITY; 3],
    }
}

/// Cauchy–Schwarz bound on the normalized ratio:
/// `|Λ| ≤ ‖φ‖∞ ‖f‖₁ ‖g‖₂ ‖h‖₂`, and symmetrically for `g` and `h`.
pub fn trivial_bound(inst: &FamilyInstance, cutoff: &CutoffSpec) -> f64 {
    cutoff.sup_norm() * l1_over_l2(inst).into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    /// Points per replicate.
    pub points: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Budget for tensor rules (total nodes).
    pub max_nodes: usize,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            points: 1 << 17,
            replicates: 8,
            seed: 42,
            max_nodes: 50_000_000,
            parallelism: Parallelism::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RescaledQmc,
    TensorGauss,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralValue {
    pub lambda: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub err: f64,
    pub norms: [f64; 3],
    pub norm_product: f64,
    pub ratio: f64,
    pub method: Method,
}

impl IntegralValue {
    fn new(lambda: f64, value: Complex64, err: f64, norms: [f64; 3], method: Method) -> Self {
        let norm_product = norms.iter().product::<f64>();
        IntegralValue {
            lambda,
            re: value.re,
            im: value.im,
            abs: value.norm(),
            err,
            norms,
            norm_product,
            ratio: value.norm() / norm_product,
            method,
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn check_phase(s: &Polynomial, d: usize) -> Result<()> {
    if s.dim() != d {
        return Err(Error::Invalid(format!(
            "phase has dimension {}, family has {d}",
            s.dim()
        )));
    }
    if s.variables().iter().any(|v| v.role == crate::poly::Role::Tau) {
        return Err(Error::Invalid("phase must not contain τ variables".into()));
    }
    Ok(())
}

/// `Λ(f, g, h)` at one λ.
pub fn evaluate_trilinear(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    inst: &FamilyInstance,
    lambda: f64,
    quad: &QuadConfig,
) -> Result<IntegralValue> {
    let d = inst.dim();
    check_phase(s, d)?;
    if d > quadrature::MAX_HALTON_DIM / 2 {
        return Err(Error::Guard(format!("dimension {d} too large for quadrature")));
    }
    let norms = family_norms(inst);
    match inst {
        FamilyInstance::Synthetic { value, .. } => Ok(IntegralValue::new(
            lambda,
            Complex64::new(*value, 0.0),
            0.0,
            norms,
            Method::ClosedForm,
        )),
        FamilyInstance::Boxes { f, g, h, rescaled } => {
            let ceiling = if *rescaled {
                RESCALED_CEILING
            } else {
                direct_ceiling(d)
            };
            if lambda.abs() > ceiling {
                return Err(Error::Ceiling(format!(
                    "|λ| = {} exceeds {ceiling} for {} boxes in d = {d}",
                    lambda.abs(),
                    if *rescaled { "rescaled" } else { "fixed" }
                )));
            }
            let (value, err) = qmc_boxes(s, cutoff, f, g, h, lambda, quad)?;
            Ok(IntegralValue::new(lambda, value, err, norms, Method::RescaledQmc))
        }
        FamilyInstance::Gaussian { sigma, .. } => {
            let ceiling = direct_ceiling(d);
            if lambda.abs() > ceiling {
                return Err(Error::Ceiling(format!(
                    "|λ| = {} exceeds the direct-quadrature ceiling {ceiling} in d = {d}",
                    lambda.abs()
                )));
            }
            let (value, err) = tensor_gaussian(s, cutoff, d, *sigma, lambda, quad)?;
            Ok(IntegralValue::new(lambda, value, err, norms, Method::TensorGauss))
        }
    }
}

/// Per-coordinate sampling plan after rescaling to the unit interval.
#[derive(Debug, Clone, Copy)]
enum Axis {
    /// `x, y ∈ [0, L]`, `x + y ≤ L`.
    Triangle { len: f64 },
    /// `x ∈ f`, `y ∈ g`, `x + y ∈ h` tested pointwise.
    Rect { f: [f64; 2], g: [f64; 2], h: [f64; 2] },
}

fn plan_axes(f: &[[f64; 2]], g: &[[f64; 2]], h: &[[f64; 2]]) -> Result<(Vec<Axis>, f64)> {
    let mut axes = Vec::with_capacity(f.len());
    let mut weight = 1.0;
    for i in 0..f.len() {
        let (fi, gi, hi) = (f[i], g[i], h[i]);
        if fi[0] + gi[0] >= hi[1] || fi[1] + gi[1] <= hi[0] {
            return Err(Error::Invalid(format!(
                "empty integration region in coordinate {}",
                i + 1
            )));
        }
        if fi == gi && gi == hi && fi[0] == 0.0 {
            axes.push(Axis::Triangle { len: fi[1] });
            weight *= 0.5 * fi[1] * fi[1];
        } else {
            axes.push(Axis::Rect { f: fi, g: gi, h: hi });
            weight *= (fi[1] - fi[0]) * (gi[1] - gi[0]);
        }
    }
    Ok((axes, weight))
}

/// Maps a unit-square point to `(x_i, y_i)`; `None` if `h` vanishes there.
#[inline]
fn place(axis: &Axis, u: f64, v: f64) -> Option<(f64, f64)> {
    match *axis {
        Axis::Triangle { len } => {
            let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            Some((len * u, len * v))
        }
        Axis::Rect { f, g, h } => {
            let x = f[0] + (f[1] - f[0]) * u;
            let y = g[0] + (g[1] - g[0]) * v;
            let z = x + y;
            (z >= h[0] && z <= h[1]).then_some((x, y))
        }
    }
}

fn qmc_boxes(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    f: &[[f64; 2]],
    g: &[[f64; 2]],
    h: &[[f64; 2]],
    lambda: f64,
    quad: &QuadConfig,
) -> Result<(Complex64, f64)> {
    if quad.points == 0 || quad.replicates < 2 {
        return Err(Error::Invalid(
            "quadrature needs points > 0 and at least 2 replicates".into(),
        ));
    }
    let d = f.len();
    let (axes, weight) = plan_axes(f, g, h)?;
    let phase = s.compile();
    let pts = halton(quad.points, 2 * d);
    let reps = map_indexed(quad.replicates, quad.parallelism, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(quad.seed, &[0x51_4d_43, rep as u64]));
        let shift: Vec<f64> = (0..2 * d).map(|_| rng.random::<f64>()).collect();
        let mut full = vec![0.0; 3 * d];
        let mut acc = Complex64::new(0.0, 0.0);
        for p in pts.chunks_exact(2 * d) {
            let mut inside = true;
            for (i, axis) in axes.iter().enumerate() {
                let u = (p[2 * i] + shift[2 * i]).fract();
                let v = (p[2 * i + 1] + shift[2 * i + 1]).fract();
                match place(axis, u, v) {
                    Some((x, y)) => {
                        full[i] = x;
                        full[d + i] = y;
                    }
                    None => {
                        inside = false;
                        break;
                    }
                }
            }
            if !inside {
                continue;
            }
            let w = cutoff.eval(&full[..2 * d]);
            if w == 0.0 {
                continue;
            }
            let (sn, cs) = (lambda * phase.eval(&full)).sin_cos();
            acc += Complex64::new(w * cs, w * sn);
        }
        acc * (weight / quad.points as f64)
    });
    let r = reps.len() as f64;
    let mean = reps.iter().sum::<Complex64>() / r;
    let var = reps.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (r - 1.0);
    Ok((mean, (var / r).sqrt()))
}

/// Upper bound for `|∇_{x,y} S|` over a box in `(x, y)`.
pub fn gradient_bound(s: &Polynomial, xy_box: &[Interval]) -> Result<f64> {
    let d = s.dim();
    let mut boxes = xy_box.to_vec();
    boxes.extend(std::iter::repeat_n(Interval::point(0.0), d));
    let mut sq = 0.0;
    for k in 0..2 * d {
        let v = VarId::from_position(k, d);
        let dp: CompiledPoly = s.differentiate(v)?.compile();
        sq += dp.eval_interval(&boxes).mag().powi(2);
    }
    Ok(sq.sqrt())
}

fn tensor_gaussian(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    d: usize,
    sigma: f64,
    lambda: f64,
    quad: &QuadConfig,
) -> Result<(Complex64, f64)> {
    let half = cutoff.r.min(8.0 * sigma);
    let region = vec![Interval::symmetric(half); 2 * d];
    let grad = gradient_bound(s, &region)?;
    let variation = lambda.abs() * grad * 2.0 * half;
    let n = (0.6 * variation).ceil() as usize + 48;
    let total = (n as f64).powi(2 * d as i32);
    if total > quad.max_nodes as f64 {
        return Err(Error::Ceiling(format!(
            "tensor rule would need {n}^{} nodes (budget {})",
            2 * d,
            quad.max_nodes
        )));
    }
    let phase = s.compile();
    let eval = |n: usize| -> Complex64 {
        let (x, w) = gauss_legendre_on(n, -half, half);
        let gauss: Vec<f64> = x.iter().map(|t| (-t * t / (2.0 * sigma * sigma)).exp()).collect();
        let dims = 2 * d;
        let parts = map_indexed(n, quad.parallelism, |first| {
            let mut idx = vec![0usize; dims];
            idx[0] = first;
            let mut pt = vec![0.0; 3 * d];
            let mut acc = Complex64::new(0.0, 0.0);
            loop {
                let mut wt = 1.0;
                for (k, &i) in idx.iter().enumerate() {
                    pt[k] = x[i];
                    wt *= w[i];
                }
                let mut fgh = 1.0;
                for i in 0..d {
                    fgh *= gauss[idx[i]] * gauss[idx[d + i]];
                    let z = pt[i] + pt[d + i];
                    fgh *= (-z * z / (2.0 * sigma * sigma)).exp();
                }
                let amp = wt * fgh * cutoff.eval(&pt[..dims]);
                if amp != 0.0 {
                    let (sn, cs) = (lambda * phase.eval(&pt)).sin_cos();
                    acc += Complex64::new(amp * cs, amp * sn);
                }
                // advance all but the first index
                let mut k = dims - 1;
                loop {
                    if k == 0 {
                        return acc;
                    }
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k -= 1;
                }
            }
        });
        parts.into_iter().sum()
    };
    let fine = eval(n);
    let coarse = eval((2 * n).div_ceil(3).max(2));
    Ok((fine, (fine - coarse).norm()))
}

/// Reference value by a midpoint rule on a `grid_n^{2d}` grid over the `f × g`
/// box, with `h` replaced by its exact average over each cell. Refuses when a
/// cell would see more than half a radian of phase.
pub fn brute_force_oracle(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    inst: &FamilyInstance,
    lambda: f64,
    grid_n: usize,
) -> Result<Complex64> {
    let FamilyInstance::Boxes { f, g, h, .. } = inst else {
        return Err(Error::Invalid("the oracle handles box families only".into()));
    };
    let d = f.len();
    check_phase(s, d)?;
    if d > 2 {
        return Err(Error::Guard("the oracle is limited to d ≤ 2".into()));
    }
    if grid_n == 0 {
        return Err(Error::Invalid("grid_n must be positive".into()));
    }
    let mut region: Vec<Interval> = f.iter().map(|s| Interval::new(s[0], s[1])).collect();
    region.extend(g.iter().map(|s| Interval::new(s[0], s[1])));
    let cell: Vec<f64> = region.iter().map(|i| i.width() / grid_n as f64).collect();
    let diag = cell.iter().map(|c| c * c).sum::<f64>().sqrt();
    let grad = gradient_bound(s, &region)?;
    if lambda.abs() * grad * diag > 0.5 {
        return Err(Error::Ceiling(format!(
            "grid too coarse: λ·|∇S|·cell = {:.3} > 0.5",
            lambda.abs() * grad * diag
        )));
    }
    let phase = s.compile();
    let dims = 2 * d;
    let vol: f64 = cell.iter().product();
    let parts = map_indexed(grid_n, Parallelism::Parallel, |first| {
        let mut idx = vec![0usize; dims];
        idx[0] = first;
        let mut pt = vec![0.0; 3 * d];
        let mut acc = Complex64::new(0.0, 0.0);
        loop {
            for k in 0..dims {
                pt[k] = region[k].lo + (idx[k] as f64 + 0.5) * cell[k];
            }
            let mut hw = 1.0;
            for i in 0..d {
                let x0 = region[i].lo + idx[i] as f64 * cell[i];
                let y0 = region[d + i].lo + idx[d + i] as f64 * cell[d + i];
                hw *= cell_fraction(x0, y0, cell[i], cell[d + i], h[i]);
            }
            if hw > 0.0 {
                let amp = hw * cutoff.eval(&pt[..dims]);
                let (sn, cs) = (lambda * phase.eval(&pt)).sin_cos();
                acc += Complex64::new(amp * cs, amp * sn);
            }
            let mut k = dims - 1;
            loop {
                if k == 0 {
                    return acc;
                }
                idx[k] += 1;
                if idx[k] < grid_n {
                    break;
                }
                idx[k] = 0;
                k -= 1;
            }
        }
    });
    Ok(parts.into_iter().sum::<Complex64>() * vol)
}

/// Fraction of the cell `[x0, x0+hx] × [y0, y0+hy]` where `x + y ∈ [c0, c1]`.
fn cell_fraction(x0: f64, y0: f64, hx: f64, hy: f64, band: [f64; 2]) -> f64 {
    let below = |c: f64| {
        let t = c - x0 - y0;
        let p = |v: f64| if v > 0.0 { v * v } else { 0.0 };
        (0.5 * (p(t) - p(t - hx) - p(t - hy) + p(t - hx - hy)) / (hx * hy)).clamp(0.0, 1.0)
    };
    below(band[1]) - below(band[0])
}

/// Geometric λ ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaLadder {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Default for LambdaLadder {
    fn default() -> Self {
        LambdaLadder {
            min: 1e2,
            max: 1e5,
            steps: 8,
        }
    }
}

impl LambdaLadder {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps < 6 {
            return Err(Error::Invalid(format!(
                "λ ladder needs at least 6 rungs, got {}",
                self.steps
            )));
        }
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(Error::Invalid(format!(
                "λ ladder bounds must satisfy 0 < min < max, got {} and {}",
                self.min, self.max
            )));
        }
        let step = (self.max / self.min).ln() / (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min * (step * i as f64).exp()
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub ladder: Vec<IntegralValue>,
    /// Rungs with quadrature error below 10% of `|Λ|`.
    pub used: Vec<bool>,
    pub slope: f64,
    pub slope_std_error: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
    pub trivial_bound: f64,
    pub within_trivial_bound: bool,
}

/// Least-squares fit of `ln y` against `ln x`. Returns
/// `(slope, std error, intercept, residuals)`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, Vec<f64>)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::Estimation("need at least two points to fit".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| b - (intercept + slope * a))
        .collect();
    let se = if n > 2 {
        (residuals.iter().map(|r| r * r).sum::<f64>() / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, se, intercept, residuals))
}

/// Evaluates every rung and fits `ratio ~ λ^{slope}`.
pub fn run_ladder(
    s: &Polynomial,
    cutoff: &CutoffSpec,
    family: &TestFamily,
    ladder: &LambdaLadder,
    quad: &QuadConfig,
) -> Result<DecayFit> {
    let lambdas = ladder.values()?;
    let d = s.dim();
    let rungs = map_indexed(lambdas.len(), quad.parallelism, |i| {
        let inst = family.instance(d, lambdas[i])?;
        let v = evaluate_trilinear(s, cutoff, &inst, lambdas[i], quad)?;
        Ok((v, trivial_bound(&inst, cutoff)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (values, bounds): (Vec<IntegralValue>, Vec<f64>) = rungs.into_iter().unzip();
    let used: Vec<bool> = values
        .iter()
        .map(|v| v.abs > 0.0 && v.err < 0.1 * v.abs && v.ratio.is_finite())
        .collect();
    let n_used = used.iter().filter(|u| **u).count();
    if n_used < 4 {
        return Err(Error::Estimation(format!(
            "only {n_used} of {} rungs have quadrature error below 10% of |Λ|",
            values.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = values
        .iter()
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|(v, _)| (v.lambda, v.ratio))
        .unzip();
    let (slope, se, intercept, residuals) = fit_power_law(&x, &y)?;
    let bound = bounds.iter().copied().fold(f64::INFINITY, f64::min);
    let within = values
        .iter()
        .zip(&bounds)
        .all(|(v, b)| v.ratio <= b * (1.0 + 1e-9) + 3.0 * v.err / v.norm_product);
    Ok(DecayFit {
        max_abs_residual: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
        ladder: values,
        used,
        slope,
        slope_std_error: se,
        intercept,
        residuals,
        trivial_bound: bound,
        within_trivial_bound: within,
    })
}
