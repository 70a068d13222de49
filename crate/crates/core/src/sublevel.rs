//! Sublevel-set measures `|{τ ∈ B : min_{(x,y)} |P_{x,y}(τ)| < ε}|` and the
//! exponent α with `measure ≲ ε^α`.
//!
//! Two samplers are available. [`Strategy::Uniform`] draws τ uniformly in the
//! domain. [`Strategy::Pruned`] (the default) first refines the domain into
//! cells and uses interval bounds to discard cells where `|P| ≥ ε` everywhere
//! and to count cells where `|P| < ε` everywhere exactly; only the undecided
//! cells are sampled. For small ε this is the difference between a handful of
//! hits and a usable estimate.
//!
//! The exponent is read off local log-log slopes between consecutive rungs of
//! a geometric ε ladder. The reported α is the smallest slope minus one
//! standard error, since the hypothesis has to hold for every small ε.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::exec::{derive_seed, fnv1a, map_indexed, Parallelism};
use crate::grid::XyGrid;
use crate::poly::{CompiledPoly, Interval, Polynomial};
use crate::{Error, Result};

const BATCH: usize = 4096;
const MAX_DEPTH: u32 = 40;
/// Rungs whose relative standard error exceeds this are not used.
pub const MAX_RELATIVE_ERROR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// Euclidean ball of radius `radius`.
    Ball,
    /// The cube `[−radius, radius]^d`.
    Box,
}

/// `supp φ ⊆ [−r, r]^{2d}`; τ ranges over a ball (or box) of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportGeometry {
    pub r: f64,
    pub radius: f64,
    pub domain: Domain,
}

impl SupportGeometry {
    /// Ball whose radius is the diameter of the support box, `2r√(2d)`.
    pub fn new(d: usize, r: f64) -> Self {
        SupportGeometry {
            r,
            radius: 2.0 * r * (2.0 * d as f64).sqrt(),
            domain: Domain::Ball,
        }
    }

    pub fn ball(r: f64, radius: f64) -> Self {
        SupportGeometry {
            r,
            radius,
            domain: Domain::Ball,
        }
    }

    pub fn cube(r: f64, half_width: f64) -> Self {
        SupportGeometry {
            r,
            radius: half_width,
            domain: Domain::Box,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite() && self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Invalid(format!(
                "support half-width and radius must be positive, got r = {}, R = {}",
                self.r, self.radius
            )));
        }
        Ok(())
    }

    pub fn volume(&self, d: usize) -> f64 {
        match self.domain {
            Domain::Box => (2.0 * self.radius).powi(d as i32),
            Domain::Ball => unit_ball_volume(d) * self.radius.powi(d as i32),
        }
    }

    fn contains(&self, tau: &[f64]) -> bool {
        match self.domain {
            Domain::Box => true,
            Domain::Ball => tau.iter().map(|t| t * t).sum::<f64>() <= self.radius * self.radius,
        }
    }
}

pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Pruned,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub samples: usize,
    pub grid_n: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// Refinement stops before the number of undecided cells would exceed
    /// this.
    pub max_cells: usize,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            samples: 200_000,
            grid_n: 8,
            seed: 42,
            strategy: Strategy::Pruned,
            max_cells: 1 << 18,
            parallelism: Parallelism::Parallel,
        }
    }
}

/// Geometric ε ladder from `eps_max` down to `eps_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderConfig {
    pub eps_max: f64,
    pub eps_min: f64,
    pub steps: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            eps_max: 1e-1,
            eps_min: 1e-6,
            steps: 6,
        }
    }
}

impl LadderConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps < 4 {
            return Err(Error::Invalid(format!(
                "ε ladder needs at least 4 rungs, got {}",
                self.steps
            )));
        }
        if !(self.eps_min > 0.0 && self.eps_min < self.eps_max && self.eps_max.is_finite()) {
            return Err(Error::Invalid(format!(
                "ε ladder bounds must satisfy 0 < eps_min < eps_max, got {} and {}",
                self.eps_min, self.eps_max
            )));
        }
        let ratio = (self.eps_min / self.eps_max).ln();
        Ok((0..self.steps)
            .map(|i| self.eps_max * (ratio * i as f64 / (self.steps - 1) as f64).exp())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSample {
    pub eps: f64,
    pub m_hat: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub hits: usize,
    /// Volume counted exactly because `|P| < ε` on whole cells.
    pub certified_volume: f64,
    /// Volume left to the sampler.
    pub sampled_volume: f64,
}

impl MeasureSample {
    pub fn relative_error(&self) -> f64 {
        if self.m_hat > 0.0 {
            self.std_error / self.m_hat
        } else {
            f64::INFINITY
        }
    }

    pub fn is_usable(&self) -> bool {
        self.m_hat > 0.0 && self.relative_error() < MAX_RELATIVE_ERROR
    }

    /// Zero measure with nothing left to sample: the sublevel set is empty.
    pub fn is_certified_empty(&self) -> bool {
        self.m_hat == 0.0 && self.sampled_volume == 0.0
    }
}

/// A polynomial prepared for repeated sublevel queries.
#[derive(Debug, Clone)]
pub struct SublevelProblem {
    dim: usize,
    poly: CompiledPoly,
    grid: XyGrid,
    is_zero: bool,
    fingerprint: u64,
    geom: SupportGeometry,
}

impl SublevelProblem {
    pub fn new(p: &Polynomial, geom: SupportGeometry, grid_n: usize) -> Result<Self> {
        geom.validate()?;
        if grid_n == 0 {
            return Err(Error::Invalid("grid_n must be at least 1".into()));
        }
        Ok(SublevelProblem {
            dim: p.dim(),
            poly: p.compile(),
            grid: XyGrid::new(p, geom.r, grid_n),
            is_zero: p.is_zero(),
            fingerprint: fnv1a(p.monic().to_string().as_bytes()),
            geom,
        })
    }

    pub fn worst_case_abs(&self, tau: &[f64]) -> f64 {
        self.grid.min_abs(&self.poly, tau)
    }

    pub fn measure(&self, eps: f64, cfg: &SamplerConfig, stream: u64) -> Result<MeasureSample> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Invalid(format!("ε must be positive, got {eps}")));
        }
        if cfg.samples == 0 {
            return Err(Error::Invalid("sample count must be positive".into()));
        }
        let vol = self.geom.volume(self.dim);
        if self.is_zero {
            return Ok(MeasureSample {
                eps,
                m_hat: vol,
                std_error: 0.0,
                n_samples: 0,
                hits: 0,
                certified_volume: vol,
                sampled_volume: 0.0,
            });
        }
        let seed = derive_seed(cfg.seed, &[self.fingerprint, stream]);
        match cfg.strategy {
            Strategy::Uniform => Ok(self.measure_uniform(eps, cfg, seed, vol)),
            Strategy::Pruned => Ok(self.measure_pruned(eps, cfg, seed)),
        }
    }

    fn hit(&self, tau: &[f64], eps: f64) -> bool {
        self.geom.contains(tau) && self.grid.has_below(&self.poly, tau, eps)
    }

    fn measure_uniform(&self, eps: f64, cfg: &SamplerConfig, seed: u64, vol: f64) -> MeasureSample {
        let d = self.dim;
        let radius = self.geom.radius;
        let hits: usize = run_batches(cfg.samples, seed, cfg.parallelism, |rng, n| {
            let mut tau = vec![0.0; d];
            let mut hits = 0;
            for _ in 0..n {
                // Rejection from the enclosing cube keeps the draw uniform.
                loop {
                    for t in tau.iter_mut() {
                        *t = rng.random_range(-radius..=radius);
                    }
                    if self.geom.contains(&tau) {
                        break;
                    }
                }
                hits += self.grid.has_below(&self.poly, &tau, eps) as usize;
            }
            hits
        });
        let p = hits as f64 / cfg.samples as f64;
        MeasureSample {
            eps,
            m_hat: vol * p,
            std_error: vol * (p * (1.0 - p) / cfg.samples as f64).sqrt(),
            n_samples: cfg.samples,
            hits,
            certified_volume: 0.0,
            sampled_volume: vol,
        }
    }

    fn classify(&self, lo: &[f64], h: f64, eps: f64) -> CellClass {
        let radius = self.geom.radius;
        let (mut dmin, mut dmax) = (0.0, 0.0);
        for &a in lo {
            let b = a + h;
            let near = if a > 0.0 {
                a
            } else if b < 0.0 {
                -b
            } else {
                0.0
            };
            dmin += near * near;
            dmax += a.abs().max(b.abs()).powi(2);
        }
        let ball = self.geom.domain == Domain::Ball;
        if ball && dmin > radius * radius {
            return CellClass::Empty;
        }
        let tau: Vec<Interval> = lo.iter().map(|&a| Interval::new(a, a + h)).collect();
        let range = self.poly.eval_interval(&self.grid.enclosure(&tau));
        if range.mig() >= eps {
            CellClass::Empty
        } else if range.mag() < eps && (!ball || dmax <= radius * radius) {
            CellClass::Full
        } else {
            CellClass::Undecided
        }
    }

    fn measure_pruned(&self, eps: f64, cfg: &SamplerConfig, seed: u64) -> MeasureSample {
        let d = self.dim;
        let radius = self.geom.radius;
        let children = 1usize << d;
        let mut h = 2.0 * radius;
        let mut cells: Vec<f64> = vec![-radius; d];
        let mut certified = 0.0;
        let mut depth = 0;
        loop {
            let mut undecided = Vec::with_capacity(cells.len());
            for lo in cells.chunks(d) {
                match self.classify(lo, h, eps) {
                    CellClass::Empty => {}
                    CellClass::Full => certified += h.powi(d as i32),
                    CellClass::Undecided => undecided.extend_from_slice(lo),
                }
            }
            cells = undecided;
            let n = cells.len() / d;
            if n == 0 || n * children > cfg.max_cells || depth >= MAX_DEPTH {
                break;
            }
            let half = 0.5 * h;
            let mut next = Vec::with_capacity(cells.len() * children);
            for lo in cells.chunks(d) {
                for mask in 0..children {
                    next.extend(
                        lo.iter()
                            .enumerate()
                            .map(|(k, &a)| if mask >> k & 1 == 1 { a + half } else { a }),
                    );
                }
            }
            cells = next;
            h = half;
            depth += 1;
        }
        let ncells = cells.len() / d;
        let sampled_volume = ncells as f64 * h.powi(d as i32);
        if ncells == 0 {
            return MeasureSample {
                eps,
                m_hat: certified,
                std_error: 0.0,
                n_samples: 0,
                hits: 0,
                certified_volume: certified,
                sampled_volume: 0.0,
            };
        }
        let hits: usize = run_batches(cfg.samples, seed, cfg.parallelism, |rng, n| {
            let mut tau = vec![0.0; d];
            let mut hits = 0;
            for _ in 0..n {
                let c = rng.random_range(0..ncells);
                for (k, t) in tau.iter_mut().enumerate() {
                    *t = cells[c * d + k] + h * rng.random::<f64>();
                }
                hits += self.hit(&tau, eps) as usize;
            }
            hits
        });
        let p = hits as f64 / cfg.samples as f64;
        MeasureSample {
            eps,
            m_hat: certified + sampled_volume * p,
            std_error: sampled_volume * (p * (1.0 - p) / cfg.samples as f64).sqrt(),
            n_samples: cfg.samples,
            hits,
            certified_volume: certified,
            sampled_volume,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellClass {
    Empty,
    Full,
    Undecided,
}

/// Splits `n` draws into fixed batches. Batch `b` always uses stream `b` of
/// the same seed, so the total does not depend on scheduling.
fn run_batches<F>(n: usize, seed: u64, mode: Parallelism, f: F) -> usize
where
    F: Fn(&mut ChaCha8Rng, usize) -> usize + Sync + Send,
{
    let batches = n.div_ceil(BATCH);
    map_indexed(batches, mode, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        f(&mut rng, BATCH.min(n - b * BATCH))
    })
    .into_iter()
    .sum()
}

/// `min |P_{x,y}(τ)|` over the `(x, y)` grid at a fixed τ.
pub fn worst_case_abs(p: &Polynomial, tau: &[f64], geom: &SupportGeometry, grid_n: usize) -> f64 {
    XyGrid::new(p, geom.r, grid_n).min_abs(&p.compile(), tau)
}

pub fn sublevel_measure(
    p: &Polynomial,
    eps: f64,
    geom: &SupportGeometry,
    cfg: &SamplerConfig,
) -> Result<MeasureSample> {
    SublevelProblem::new(p, *geom, cfg.grid_n)?.measure(eps, cfg, 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaValue {
    Finite(f64),
    /// Every sublevel set on the ladder is empty.
    Infinite,
    /// `P ≡ 0`.
    NoDecay,
}

impl AlphaValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AlphaValue::Finite(a) => Some(*a),
            AlphaValue::Infinite => Some(f64::INFINITY),
            AlphaValue::NoDecay => None,
        }
    }
}

impl Serialize for AlphaValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlphaValue::Finite(a) => s.serialize_f64(*a),
            AlphaValue::Infinite => s.serialize_str("inf"),
            AlphaValue::NoDecay => s.serialize_str("no-decay"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSlope {
    pub eps_hi: f64,
    pub eps_lo: f64,
    pub slope: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub usable_rungs: usize,
    /// `m_hat` nondecreasing in ε within three pooled standard errors.
    pub monotone: bool,
    pub slopes_increasing: bool,
    /// Largest minus smallest local slope.
    pub slope_spread: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub alpha: AlphaValue,
    pub ladder: Vec<MeasureSample>,
    pub local_slopes: Vec<LocalSlope>,
    /// `ln m_hat / ln ε` per rung, absent where `m_hat = 0`.
    pub local_ratios: Vec<Option<f64>>,
    pub diagnostics: Diagnostics,
}

pub fn estimate_alpha(
    p: &Polynomial,
    geom: &SupportGeometry,
    ladder: &LadderConfig,
    cfg: &SamplerConfig,
) -> Result<AlphaEstimate> {
    let eps = ladder.values()?;
    let problem = SublevelProblem::new(p, *geom, cfg.grid_n)?;
    let samples = map_indexed(eps.len(), cfg.parallelism, |i| {
        problem.measure(eps[i], cfg, i as u64)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    alpha_from_ladder(samples, p.is_zero())
}

/// Turns a measured ladder (ε decreasing) into an estimate.
pub fn alpha_from_ladder(ladder: Vec<MeasureSample>, is_zero: bool) -> Result<AlphaEstimate> {
    let local_ratios = ladder
        .iter()
        .map(|s| (s.m_hat > 0.0).then(|| s.m_hat.ln() / s.eps.ln()))
        .collect();
    let monotone = ladder.windows(2).all(|w| {
        let pooled = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].m_hat <= w[0].m_hat + 3.0 * pooled
    });
    let usable: Vec<&MeasureSample> = ladder.iter().filter(|s| s.is_usable()).collect();
    let local_slopes: Vec<LocalSlope> = usable
        .windows(2)
        .map(|w| {
            let dl = (w[0].eps.ln() - w[1].eps.ln()).abs();
            LocalSlope {
                eps_hi: w[0].eps,
                eps_lo: w[1].eps,
                slope: (w[0].m_hat.ln() - w[1].m_hat.ln()) / (w[0].eps.ln() - w[1].eps.ln()),
                std_error: (w[0].relative_error().powi(2) + w[1].relative_error().powi(2)).sqrt()
                    / dl,
            }
        })
        .collect();
    let slopes_increasing = local_slopes.windows(2).all(|w| w[1].slope > w[0].slope);
    let slope_spread = if local_slopes.is_empty() {
        0.0
    } else {
        let (lo, hi) = local_slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
            (a.min(s.slope), b.max(s.slope))
        });
        hi - lo
    };
    let mut note = None;
    let alpha = if is_zero {
        AlphaValue::NoDecay
    } else if ladder.iter().all(|s| s.m_hat == 0.0)
        || ladder.last().is_some_and(MeasureSample::is_certified_empty)
    {
        note = Some("sublevel sets empty at small ε".into());
        AlphaValue::Infinite
    } else if local_slopes.is_empty() {
        return Err(Error::Estimation(format!(
            "only {} of {} rungs are statistically usable; increase the sample count or widen the ε ladder",
            usable.len(),
            ladder.len()
        )));
    } else {
        let a = local_slopes
            .iter()
            .map(|s| s.slope - s.std_error)
            .fold(f64::INFINITY, f64::min);
        if a < 0.0 {
            note = Some("sublevel measure does not shrink with ε".into());
        }
        AlphaValue::Finite(a.max(0.0))
    };
    Ok(AlphaEstimate {
        alpha,
        diagnostics: Diagnostics {
            usable_rungs: usable.len(),
            monotone,
            slopes_increasing,
            slope_spread,
            note,
        },
        ladder,
        local_slopes,
        local_ratios,
    })
}
