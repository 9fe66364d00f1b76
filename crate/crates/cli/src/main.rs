//! `renorm`: evaluate the constructed norms, sweep the separation
//! estimates, solve nearest point queries, and run the ladder experiment.
//!
//! Exit codes: 0 when every requested assertion holds, 1 when a numerical
//! assertion fails (the failed invariant is printed), 2 for malformed
//! configuration or input.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, ensure, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use renorm_cli::config::{parse_point, read_pairs, read_points, RunConfig, TargetSpec};
use renorm_cli::report::ExperimentReport;
use renorm_cli::selftest;
use renorm_core::{
    lemma_sweep, modulus_scan, nearest_point, theorem31_run, CompositeNorm, EuclideanGauge,
    Functional, Gauge, Point, TermId,
};

/// Residual floor accepted by `verify-lemma`.
const RESIDUAL_FLOOR: f64 = -1e-12;

#[derive(Parser)]
#[command(
    name = "renorm",
    version,
    about = "Norms with badly behaved nearest point maps: gauges, separation estimates, modulus experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a named norm at one or more points.
    Gauge(GaugeArgs),
    /// Sweep the six separation residuals over random admissible inputs.
    VerifyLemma(VerifyLemmaArgs),
    /// Emit the separating functional pair and its certified norm bound.
    Hyperplanes(HyperplanesArgs),
    /// Solve one nearest point query against the target set.
    Project(ProjectArgs),
    /// Scan input/output separations for a file of point pairs.
    Modulus(ModulusArgs),
    /// Run the full ladder experiment and write its reports.
    Experiment(ExperimentArgs),
    /// Run every module's invariant suite.
    Selftest(SelftestArgs),
}

/// Settings shared by every subcommand; each flag overrides the config
/// file field of the same name.
#[derive(Args, Debug, Clone)]
struct SharedArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Slab depth in (0, 1/4).
    #[arg(long)]
    rho: Option<f64>,
    /// Ladder depth N.
    #[arg(long)]
    levels: Option<usize>,
    /// Ambient dimension d.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// 1-based coordinate of the shared direction (default levels + 3).
    #[arg(long)]
    v_index: Option<usize>,
    /// Target segment half-width along the shared direction.
    #[arg(long, conflicts_with = "k_vertices")]
    k_scale: Option<f64>,
    /// Target polytope vertices: semicolon-separated comma-separated points.
    #[arg(long)]
    k_vertices: Option<String>,
}

impl SharedArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.v_index {
            cfg.v_index = Some(v);
        }
        if let Some(s) = self.k_scale {
            cfg.target = Some(TargetSpec::Segment { scale: Some(s) });
        }
        if let Some(text) = &self.k_vertices {
            let vertices = text
                .split(';')
                .map(|p| Ok(parse_point(p)?.coords().to_vec()))
                .collect::<anyhow::Result<Vec<Vec<f64>>>>()?;
            cfg.target = Some(TargetSpec::Polytope { vertices });
        }
        Ok(cfg)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum NormKind {
    /// Base Euclidean norm.
    Euclid,
    /// Sliced-ball gauge (ball cut to the slab) of the chosen level.
    C,
    /// Blueprint gauge of the chosen level.
    Alpha,
    /// Rotund blend of the chosen level.
    Lur,
    /// Max of every level and the scaled Euclidean floor.
    Composite,
}

#[derive(Args)]
struct GaugeArgs {
    #[command(flatten)]
    shared: SharedArgs,
    #[arg(long, value_enum)]
    norm: NormKind,
    /// Level whose gauge is meant (for c, alpha, lur).
    #[arg(long, default_value_t = 1)]
    term: usize,
    /// Point as comma-separated decimals; repeatable.
    #[arg(long = "point")]
    points: Vec<String>,
    /// File of points, one per line.
    #[arg(long)]
    points_file: Option<PathBuf>,
    /// Also print a certified lower bound and the gap (alpha only).
    #[arg(long)]
    certify: bool,
}

#[derive(Args)]
struct VerifyLemmaArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Random inputs per residual item.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Args)]
struct HyperplanesArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Level whose functional pair is emitted.
    #[arg(long, default_value_t = 1)]
    term: usize,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Query point as comma-separated decimals.
    #[arg(long)]
    point: String,
    #[arg(long, value_enum, default_value_t = NormKind::Composite)]
    norm: NormKind,
    #[arg(long, default_value_t = 1)]
    term: usize,
}

#[derive(Args)]
struct ModulusArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// File of `x ; y ; delta` lines.
    #[arg(long)]
    pairs_file: PathBuf,
    /// Output separation floor (default rho / 16).
    #[arg(long)]
    bound: Option<f64>,
    /// Slack granted to the floor (default the conclusion tolerance).
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long, value_enum, default_value_t = NormKind::Composite)]
    norm: NormKind,
    #[arg(long, default_value_t = 1)]
    term: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// JSON report path (default report.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ladder CSV path (written only when given or configured).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[command(flatten)]
    shared: SharedArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gauge(a) => cmd_gauge(&a),
        Command::VerifyLemma(a) => cmd_verify_lemma(&a),
        Command::Hyperplanes(a) => cmd_hyperplanes(&a),
        Command::Project(a) => cmd_project(&a),
        Command::Modulus(a) => cmd_modulus(&a),
        Command::Experiment(a) => cmd_experiment(&a),
        Command::Selftest(a) => cmd_selftest(&a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// A norm oracle chosen on the command line.
fn build_gauge(cfg: &RunConfig, kind: NormKind, term: usize) -> anyhow::Result<Box<dyn Gauge>> {
    Ok(match kind {
        NormKind::Euclid => Box::new(EuclideanGauge { dim: cfg.dim }),
        NormKind::C => bail!("projections need a full norm oracle: use euclid, alpha, lur, or composite"),
        NormKind::Alpha => {
            let composite = CompositeNorm::build(cfg.scheme()?, cfg.tolerances())?;
            Box::new(composite.term(TermId(term))?.blueprint().clone())
        }
        NormKind::Lur => {
            let composite = CompositeNorm::build(cfg.scheme()?, cfg.tolerances())?;
            Box::new(composite.term(TermId(term))?.clone())
        }
        NormKind::Composite => {
            Box::new(CompositeNorm::build(cfg.scheme()?, cfg.tolerances())?)
        }
    })
}

fn cmd_gauge(args: &GaugeArgs) -> anyhow::Result<bool> {
    let cfg = args.shared.resolve()?;
    ensure!(
        !args.certify || args.norm == NormKind::Alpha,
        "--certify only applies to --norm alpha"
    );
    let mut points: Vec<Point> = Vec::new();
    for text in &args.points {
        points.push(parse_point(text)?);
    }
    if let Some(path) = &args.points_file {
        points.extend(read_points(path)?);
    }
    ensure!(
        !points.is_empty(),
        "no points given: use --point or --points-file"
    );

    if args.norm == NormKind::Euclid {
        let g = EuclideanGauge { dim: cfg.dim };
        for p in &points {
            println!("{}", g.gauge(p)?);
        }
        return Ok(true);
    }

    let composite = CompositeNorm::build(cfg.scheme()?, cfg.tolerances())?;
    let term = composite.term(TermId(args.term))?;
    for p in &points {
        match args.norm {
            NormKind::C => println!("{}", term.blueprint().gauge_c(p)?),
            NormKind::Alpha => {
                if args.certify {
                    let (value, gap) = term.blueprint().gauge_with_certificate(p, cfg.seed)?;
                    println!("{value},{},{gap}", value * (1.0 - gap));
                } else {
                    println!("{}", term.blueprint().gauge(p)?);
                }
            }
            NormKind::Lur => println!("{}", term.gauge(p)?),
            NormKind::Composite => println!("{}", composite.gauge(p)?),
            NormKind::Euclid => unreachable!("handled above"),
        }
    }
    Ok(true)
}

fn cmd_verify_lemma(args: &VerifyLemmaArgs) -> anyhow::Result<bool> {
    let cfg = args.shared.resolve()?;
    let composite = CompositeNorm::build(cfg.scheme()?, cfg.tolerances())?;
    let alpha = composite.term(TermId(1))?.blueprint().alpha();
    let report = lemma_sweep(alpha, args.samples, cfg.seed)?;
    for (name, min) in &report.per_item_min {
        println!("{name}: min residual {min}");
    }
    println!("min residual = {}", report.min_residual);
    if report.min_residual >= RESIDUAL_FLOOR {
        println!(
            "PASS: {} samples, all residuals >= {RESIDUAL_FLOOR:e}",
            report.samples
        );
        Ok(true)
    } else {
        println!(
            "FAIL separation residuals >= {RESIDUAL_FLOOR:e}: item {} reached {}",
            report.worst_item, report.min_residual
        );
        Ok(false)
    }
}

#[derive(Serialize)]
struct HyperplaneEmit<'a> {
    lambda: f64,
    norm_bound: f64,
    dual_norm_plus: f64,
    dual_norm_minus: f64,
    margin: f64,
    formula: &'static str,
    phi_plus: &'a Functional,
    phi_minus: &'a Functional,
}

fn cmd_hyperplanes(args: &HyperplanesArgs) -> anyhow::Result<bool> {
    let cfg = args.shared.resolve()?;
    let composite = CompositeNorm::build(cfg.scheme()?, cfg.tolerances())?;
    let planes = composite.term(TermId(args.term))?.blueprint().planes();
    let dual_norm_plus = planes.phi_plus.dual_norm();
    let dual_norm_minus = planes.phi_minus.dual_norm();
    let margin = planes.norm_bound - dual_norm_plus.max(dual_norm_minus);
    let emit = HyperplaneEmit {
        lambda: planes.lambda,
        norm_bound: planes.norm_bound,
        dual_norm_plus,
        dual_norm_minus,
        margin,
        formula: "phi_pm = lambda e_star +- (1 - lambda)(h_star - (4t/rho) v_star), \
                  lambda = 1 - rho/100, bound = 1 + t/25",
        phi_plus: &planes.phi_plus,
        phi_minus: &planes.phi_minus,
    };
    println!("{}", serde_json::to_string_pretty(&emit)?);
    if margin > 0.0 {
        Ok(true)
    } else {
        println!("FAIL dual_norm(phi_pm) <= 1 + t/25: margin {margin}");
        Ok(false)
    }
}

fn cmd_project(args: &ProjectArgs) -> anyhow::Result<bool> {
    let cfg = args.shared.resolve()?;
    let g = build_gauge(&cfg, args.norm, args.term)?;
    let target = cfg.target_set()?;
    let x = parse_point(&args.point)?;
    let result = nearest_point(g.as_ref(), &x, &target, &cfg.projection_options())?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(true)
}

fn cmd_modulus(args: &ModulusArgs) -> anyhow::Result<bool> {
    let cfg = args.shared.resolve()?;
    let g = build_gauge(&cfg, args.norm, args.term)?;
    let target = cfg.target_set()?;
    let pairs = read_pairs(&args.pairs_file)?;
    let bound = args.bound.unwrap_or(cfg.rho / 16.0);
    let slack = args.slack.unwrap_or(cfg.tolerance.conclusion_tol);
    let report = modulus_scan(
        g.as_ref(),
        &target,
        &pairs,
        bound,
        slack,
        &cfg.projection_options(),
    )?;
    println!("delta,in_sep,out_sep,ratio,gap_x,gap_y,pass");
    for r in &report.rows {
        println!(
            "{},{},{},{},{},{},{}",
            r.delta, r.in_sep, r.out_sep, r.ratio, r.gap_x, r.gap_y, r.pass
        );
    }
    println!("min out_sep = {}", report.min_out_sep);
    if report.all_pass {
        println!("PASS: every output separation >= {bound} - {slack}");
        Ok(true)
    } else {
        println!(
            "FAIL out_sep >= bound - slack: min out_sep {} < {bound} - {slack}",
            report.min_out_sep
        );
        Ok(false)
    }
}

fn cmd_experiment(args: &ExperimentArgs) -> anyhow::Result<bool> {
    let cfg = args.shared.resolve()?;
    let out_path = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("report.json"));
    let csv_path = args.csv.clone().or_else(|| cfg.csv.clone());

    let composite = CompositeNorm::build(cfg.scheme()?, cfg.tolerances())?;
    let target = cfg.target_set()?;
    let started = Instant::now();
    let run = theorem31_run(&composite, &target, &cfg.theorem_options())?;
    let elapsed = started.elapsed().as_secs_f64();

    let report = ExperimentReport::new(&cfg, run);
    fs::write(&out_path, report.to_json()?)
        .with_context(|| format!("writing {}", out_path.display()))?;
    if let Some(path) = &csv_path {
        fs::write(path, report.ladder_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("# wall clock: {elapsed:.3} s");

    for row in &report.run.ladder {
        println!(
            "level {}: in_sep {:.9} <= {:.9}, out_sep {:.9} >= {:.9}, ratio {:.4} [{}]",
            row.level,
            row.in_sep,
            row.delta,
            row.out_sep,
            row.bound,
            row.ratio,
            if row.pass { "pass" } else { "FAIL" }
        );
    }
    println!("report: {}", out_path.display());
    if let Some(path) = &csv_path {
        println!("ladder csv: {}", path.display());
    }

    if report.summary.all_pass {
        println!(
            "PASS: {}/{} levels, witnesses bounded by {:.6}",
            report.summary.levels_passed, report.summary.levels, report.summary.witness_norm_max
        );
        Ok(true)
    } else {
        for level_report in &report.run.reports {
            for name in level_report.failed_hypotheses() {
                println!("FAIL hypothesis {name} at level {}", level_report.level);
            }
        }
        for row in report.run.ladder.iter().filter(|r| !r.pass) {
            println!(
                "FAIL separation at level {}: in_sep {} out_sep {}",
                row.level, row.in_sep, row.out_sep
            );
        }
        Ok(false)
    }
}

fn cmd_selftest(args: &SelftestArgs) -> anyhow::Result<bool> {
    let cfg = args.shared.resolve()?;
    let outcomes = selftest::run_all(&cfg)?;
    let mut all = true;
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        all &= o.passed;
    }
    println!(
        "{}: {} of {} checks passed",
        if all { "PASS" } else { "FAIL" },
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len()
    );
    Ok(all)
}
