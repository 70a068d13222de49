//! Run configurations and the versioned JSON/CSV reports built from them.
//!
//! A report embeds the full effective [`RunConfig`]. Running that config again
//! gives the same report byte for byte, which is what [`replay`] checks.

use serde::{Deserialize, Serialize};

use crate::decay::{analyze_phase, AnalysisConfig, PhaseAnalysis, PhaseSpec, Regime};
use crate::exec::Parallelism;
use crate::hessian::MinorSelection;
use crate::oscint::{run_ladder, CutoffKind, CutoffSpec, DecayFit, LambdaLadder, QuadConfig, TestFamily};
use crate::sublevel::{AlphaValue, LadderConfig, SamplerConfig, Strategy};
use crate::{Error, Result};

pub const SCHEMA: &str = "oscdecay-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Analyze,
    Verify,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything a run depends on. Missing fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: Command,
    pub phase: Option<String>,
    /// Dimension `d`.
    pub dim: usize,
    /// Half-width `r` of the cutoff support `[−r, r]^{2d}`.
    pub support: f64,
    pub seed: u64,
    pub eps: LadderConfig,
    /// Samples per ε rung.
    pub samples: usize,
    /// Grid half-count per `(x, y)` axis for worst-case minimization.
    pub grid: usize,
    pub strategy: Strategy,
    pub family: TestFamily,
    pub cutoff: CutoffKind,
    pub lambda: LambdaLadder,
    /// QMC points per replicate.
    pub points: usize,
    pub replicates: usize,
    pub out: Option<String>,
    pub format: Format,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sampler = SamplerConfig::default();
        let quad = QuadConfig::default();
        RunConfig {
            command: Command::Analyze,
            phase: None,
            dim: 2,
            support: 1.0,
            seed: 42,
            eps: LadderConfig::default(),
            samples: sampler.samples,
            grid: sampler.grid_n,
            strategy: sampler.strategy,
            family: TestFamily::ScaledBox,
            cutoff: CutoffKind::Bump,
            lambda: LambdaLadder::default(),
            points: quad.points,
            replicates: quad.replicates,
            out: None,
            format: Format::Json,
            parallelism: Parallelism::default(),
        }
    }
}

impl RunConfig {
    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            ladder: self.eps.clone(),
            sampler: SamplerConfig {
                samples: self.samples,
                grid_n: self.grid,
                seed: self.seed,
                strategy: self.strategy,
                parallelism: self.parallelism,
                ..SamplerConfig::default()
            },
            orders: Vec::new(),
            corollary_grid: self.grid,
        }
    }

    pub fn quadrature(&self) -> QuadConfig {
        QuadConfig {
            points: self.points,
            replicates: self.replicates,
            seed: self.seed,
            parallelism: self.parallelism,
            ..QuadConfig::default()
        }
    }

    pub fn cutoff_spec(&self) -> CutoffSpec {
        match self.cutoff {
            CutoffKind::Bump => CutoffSpec::bump(self.support),
            CutoffKind::One => CutoffSpec::one(),
        }
    }

    fn phase_text(&self) -> Result<&str> {
        self.phase
            .as_deref()
            .ok_or_else(|| Error::Invalid("no phase given".into()))
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if !(self.support > 0.0 && self.support.is_finite()) {
            return Err(Error::Invalid(format!(
                "support half-width must be positive, got {}",
                self.support
            )));
        }
        Ok(())
    }
}

/// Parses a family name: `scaled-box`, `aniso-box`, `unit-box`,
/// `gaussian[:width[:exponent]]` or `synthetic[:sigma]`.
pub fn parse_family(text: &str, d: usize) -> Result<TestFamily> {
    let mut parts = text.split(':');
    let name = parts.next().unwrap_or_default();
    let nums = parts
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::Invalid(format!("bad family parameter '{p}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let arg = |i: usize, default: f64| nums.get(i).copied().unwrap_or(default);
    let max_args = match name {
        "gaussian" => 2,
        "synthetic" => 1,
        _ => 0,
    };
    if nums.len() > max_args {
        return Err(Error::Invalid(format!("too many parameters for family '{name}'")));
    }
    Ok(match name {
        "scaled-box" => TestFamily::ScaledBox,
        "aniso-box" => TestFamily::AnisoBox,
        "unit-box" => TestFamily::unit_box(d),
        "gaussian" => TestFamily::Gaussian {
            width: arg(0, 0.5),
            exponent: arg(1, 0.0),
        },
        "synthetic" => TestFamily::Synthetic {
            sigma: arg(0, 1.0 / 6.0),
        },
        other => {
            return Err(Error::Invalid(format!(
                "unknown family '{other}' (expected scaled-box, aniso-box, unit-box, gaussian or synthetic)"
            )))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

const TOOL: Tool = Tool {
    name: "oscdecay",
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub family: String,
    pub slope: f64,
    pub slope_std_error: f64,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub phase: String,
    pub dim: usize,
    pub k: Option<usize>,
    pub selection: Option<MinorSelection>,
    pub determinant: Option<String>,
    pub alpha: Option<AlphaValue>,
    pub exponent: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Analyze(PhaseAnalysis),
    Verify(VerifySummary),
    Table { rows: Vec<TableRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: Tool,
    pub config: RunConfig,
    pub payload: Payload,
}

impl Report {
    fn new(config: &RunConfig, payload: Payload) -> Self {
        Report {
            schema: SCHEMA,
            tool: TOOL,
            config: config.clone(),
            payload,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// The λ ladder as CSV. Only verify reports have one.
    pub fn to_csv(&self) -> Result<String> {
        match &self.payload {
            Payload::Verify(v) => ladder_csv(&v.fit),
            _ => Err(Error::Invalid("CSV output is only available for verify".into())),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = ["lambda", "re", "im", "abs", "err", "norm_product", "ratio"];

pub fn ladder_csv(fit: &DecayFit) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for v in &fit.ladder {
        w.serialize((v.lambda, v.re, v.im, v.abs, v.err, v.norm_product, v.ratio))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invalid(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let spec = PhaseSpec::parse(cfg.phase_text()?, cfg.dim, cfg.support)?;
    let analysis = analyze_phase(&spec, &cfg.analysis())?;
    Ok(Report::new(cfg, Payload::Analyze(analysis)))
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let s = crate::parse_phase(cfg.phase_text()?, cfg.dim)?;
    let fit = run_ladder(&s, &cfg.cutoff_spec(), &cfg.family, &cfg.lambda, &cfg.quadrature())?;
    let summary = VerifySummary {
        family: cfg.family.name().to_string(),
        slope: fit.slope,
        slope_std_error: fit.slope_std_error,
        fit,
    };
    Ok(Report::new(cfg, Payload::Verify(summary)))
}

/// The `d = 2` chart phases followed by the three-dimensional example.
pub const TABLE_PHASES: [(&str, usize); 5] = [
    ("1/2*(x1*y1*y2 + x2*y2^2 - x2*y1^2)", 2),
    ("1/2*(x1*y1^2 + x2*y2^2)", 2),
    ("1/2*(x1*y2^2 + x2^2*y1)", 2),
    ("1/2*x1^2*y1", 2),
    (
        "x1*x2*y2 + x1*x3*y3 + 1/2*x1*y3^2 + 1/2*x1^2*y1 - 1/2*x2^2*y1 - 1/2*x3*y1^2 - 1/2*x2^2*y3",
        3,
    ),
];

/// Analyzes every phase in [`TABLE_PHASES`]; `phase` and `dim` in the config
/// are ignored.
pub fn cmd_table(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(TABLE_PHASES.len());
    for (src, d) in TABLE_PHASES {
        let spec = PhaseSpec::parse(src, d, cfg.support)?;
        let a = analyze_phase(&spec, &cfg.analysis())?;
        let source = a
            .best
            .selection
            .as_ref()
            .and_then(|sel| a.minors.iter().find(|m| &m.selection == sel));
        rows.push(TableRow {
            phase: a.phase.to_string(),
            dim: d,
            k: a.best.k,
            selection: a.best.selection.clone(),
            determinant: source.map(|m| m.determinant.to_string()),
            alpha: source.map(|m| m.alpha.alpha),
            exponent: a.best.exponent,
            regime: a.best.regime,
        });
    }
    Ok(Report::new(cfg, Payload::Table { rows }))
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    match cfg.command {
        Command::Analyze => cmd_analyze(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Table => cmd_table(cfg),
    }
}

/// Reads the config embedded in a JSON report.
pub fn embedded_config(report_json: &str) -> Result<RunConfig> {
    let v: serde_json::Value = serde_json::from_str(report_json)?;
    match v.get("schema").and_then(|s| s.as_str()) {
        Some(SCHEMA) => {}
        other => {
            return Err(Error::Invalid(format!(
                "unsupported report schema {other:?}, expected {SCHEMA}"
            )))
        }
    }
    let cfg = v
        .get("config")
        .ok_or_else(|| Error::Invalid("report has no config".into()))?;
    Ok(serde_json::from_value(cfg.clone())?)
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub report: Report,
    pub json: String,
    pub identical: bool,
}

/// Re-runs the config embedded in `report_json` and compares the output.
pub fn replay(report_json: &str, parallelism: Parallelism) -> Result<ReplayOutcome> {
    let mut cfg = embedded_config(report_json)?;
    cfg.parallelism = parallelism;
    let report = run(&cfg)?;
    let json = report.to_json()?;
    Ok(ReplayOutcome {
        identical: json == report_json,
        report,
        json,
    })
}
