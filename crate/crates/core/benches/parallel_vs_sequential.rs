use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oscdecay::decay::{AnalysisConfig, PhaseSpec};
use oscdecay::oscint::{evaluate_trilinear, CutoffSpec, QuadConfig, TestFamily};
use oscdecay::sublevel::{SamplerConfig, Strategy, SublevelProblem};
use oscdecay::{analyze_phase, parse_phase, parse_polynomial, Parallelism, SupportGeometry};

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn sublevel(c: &mut Criterion) {
    let p = parse_polynomial("t1*t2*(4 + 1/25*x1 + 1/50*t1)", 2).unwrap();
    let problem = SublevelProblem::new(&p, SupportGeometry::new(2, 0.5), 8).unwrap();
    let mut g = c.benchmark_group("sublevel_measure");
    g.sample_size(10);
    for strategy in [Strategy::Uniform, Strategy::Pruned] {
        for (name, mode) in MODES {
            let cfg = SamplerConfig { samples: 50_000, strategy, parallelism: mode, ..SamplerConfig::default() };
            g.bench_with_input(BenchmarkId::new(format!("{strategy:?}"), name), &cfg, |b, cfg| {
                b.iter(|| problem.measure(1e-3, cfg, 0).unwrap())
            });
        }
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let s = parse_phase("1/2*(x1*y1*y2 + x2*y2^2 - x2*y1^2)", 2).unwrap();
    let inst = TestFamily::ScaledBox.instance(2, 1e3).unwrap();
    let cutoff = CutoffSpec::bump(1.0);
    let mut g = c.benchmark_group("evaluate_trilinear");
    g.sample_size(10);
    for (name, mode) in MODES {
        let q = QuadConfig { points: 1 << 15, parallelism: mode, ..QuadConfig::default() };
        g.bench_with_input(BenchmarkId::new("scaled-box", name), &q, |b, q| {
            b.iter(|| evaluate_trilinear(&s, &cutoff, &inst, 1e3, q).unwrap())
        });
    }
    g.finish();
}

fn analysis(c: &mut Criterion) {
    let spec = PhaseSpec::parse(
        "x1*x2*y2 + x1*x3*y3 + 1/2*x1*y3^2 + 1/2*x1^2*y1 - 1/2*x2^2*y1 - 1/2*x3*y1^2 - 1/2*x2^2*y3",
        3,
        1.0,
    )
    .unwrap();
    let mut g = c.benchmark_group("analyze_phase");
    g.sample_size(10);
    for (name, mode) in MODES {
        let cfg = AnalysisConfig {
            sampler: SamplerConfig { samples: 20_000, parallelism: mode, ..SamplerConfig::default() },
            ..AnalysisConfig::default()
        };
        g.bench_with_input(BenchmarkId::new("three-dimensional", name), &cfg, |b, cfg| {
            b.iter(|| analyze_phase(&spec, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sublevel, quadrature, analysis);
criterion_main!(benches);
