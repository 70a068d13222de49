//! Decay-rate prediction for trilinear oscillatory integrals of convolution
//! type,
//!
//! ```text
//! Λ(f, g, h) = ∫∫ e^{iλS(x,y)} f(x) g(y) h(x+y) φ(x,y) dx dy,   x, y ∈ ℝ^d,
//! ```
//!
//! for polynomial phases `S`. The symbolic side builds the shifted phase
//! `S_τ(x,y) = S(x,y) − S(x+τ, y−τ)`, its mixed Hessian and minor
//! determinants `P_{x,y}(τ)`. The numeric side estimates the sublevel exponent
//! α of each `P`, turns `(k, α)` into the predicted rate `kα / (4(α + 1/2))`,
//! and measures actual decay of `|Λ|` on scaled indicator families.
//!
//! Sampling is data-parallel through rayon when the `parallel` feature is on
//! (the default). Every random stream is derived from a master seed and a
//! batch index, so sequential and parallel runs give bit-identical results.

pub mod decay;
pub mod exec;
pub mod grid;
pub mod hessian;
pub mod oscint;
pub mod parser;
pub mod poly;
pub mod report;
pub mod sublevel;


pub use exec::Parallelism;
pub use decay::{analyze_phase, corollary_check, predicted_exponent, DecayPrediction, PhaseSpec, Regime};
pub use hessian::{build_s_tau, d_operator, minor_determinant, mixed_hessian, MinorSelection, PolyMatrix};
pub use parser::{parse_phase, parse_polynomial, ParseError};
pub use poly::{Polynomial, Rational, VarId};
pub use sublevel::{estimate_alpha, sublevel_measure, AlphaEstimate, AlphaValue, SupportGeometry};


/// Top-level error. The variant decides the process exit code of the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Poly(#[from] poly::PolyError),
    #[error("guard violated: {0}")]
    Guard(String),
    #[error("quadrature ceiling exceeded: {0}")]
    Ceiling(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::Guard(_) => 3,
            Error::Ceiling(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
