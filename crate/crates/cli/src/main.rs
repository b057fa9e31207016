//! `zoll`: command-line front end for curve-shortening, sweepout, spectrum
//! and verification runs on metric 2-spheres.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use zoll_core::geodesics::{self, SpectrumReport};
use zoll_core::sweepout::{self, LSEstimates};
use zoll_core::topology::{self, CurveLoop};
use zoll_core::verify::{self, Theorem, Verdict};
use zoll_core::{flow, DiscreteCurve, FlowStatus, MetricSpec};

use config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "zoll", version, about = "Curve shortening and closed geodesics on metric 2-spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Metric JSON file
    #[arg(long)]
    metric: Option<PathBuf>,
    /// Run configuration JSON file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for random launches and sample points
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one curve by curve-shortening flow
    Flow {
        #[command(flatten)]
        common: Common,
        /// Curve CSV (`index,x,y,z`)
        #[arg(long)]
        curve: PathBuf,
    },
    /// Flow the plane-section sweepout and estimate the minmax values
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep, then assemble and validate the simple length spectrum
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Check the Zoll or covering statement on a metric
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        theorem: TheoremArg,
    },
    /// Compute the ℤ₂ invariant of a loop of curves
    Ainv {
        #[command(flatten)]
        common: Common,
        /// Loop manifest JSON
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum TheoremArg {
    Zoll,
    Cover,
}

impl From<TheoremArg> for Theorem {
    fn from(t: TheoremArg) -> Self {
        match t {
            TheoremArg::Zoll => Theorem::Zoll,
            TheoremArg::Cover => Theorem::Cover,
        }
    }
}

fn setup(common: &Common) -> anyhow::Result<RunConfig> {
    let overrides = Overrides {
        metric: common.metric.clone(),
        out: common.out.clone(),
        workers: common.workers,
        seed: common.seed,
    };
    RunConfig::load(common.config.as_deref(), &overrides)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Runs `f` on a pool of the configured size.
fn in_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?.install(f))
}

fn cmd_flow(common: &Common, curve_path: &Path) -> anyhow::Result<u8> {
    let cfg = setup(common)?;
    let spec = cfg.metric()?;
    let curve = DiscreteCurve::load_csv(curve_path)?;
    let outcome = flow::evolve(&curve, &spec, &cfg.flow)?;
    let out = cfg.out_dir()?;

    let final_path = match outcome.final_curve() {
        Some(c) => {
            c.save_csv(&out.join("final_curve.csv"))?;
            Some("final_curve.csv".to_string())
        }
        None => None,
    };
    let mut trace = Vec::new();
    outcome.trace.write_csv(&mut trace)?;
    std::fs::write(out.join("trace.csv"), trace)?;
    write_json(&out.join("outcome.json"), &outcome.to_json(final_path))?;

    match &outcome.status {
        FlowStatus::Collapsed { point, stop_time } => {
            println!("Collapsed at t = {stop_time:.6} near ({:.6}, {:.6}, {:.6})", point.x, point.y, point.z);
            Ok(0)
        }
        FlowStatus::ConvergedGeodesic { limit_length, .. } => {
            println!("ConvergedGeodesic with limit length {limit_length:.8}");
            Ok(0)
        }
        FlowStatus::BudgetExhausted { .. } => {
            println!("BudgetExhausted at t = {}", cfg.flow.max_time);
            Ok(2)
        }
    }
}

fn run_sweep(cfg: &RunConfig, spec: &MetricSpec) -> anyhow::Result<LSEstimates> {
    let est = in_pool(cfg, || sweepout::estimate_ls_values(spec, &cfg.grid, &cfg.flow))??;
    write_json(&cfg.out_dir()?.join("sweep.json"), &est.report(spec))?;
    if est.degenerate {
        eprintln!("warning: degenerate grid: every member is a constant curve");
    }
    if est.unreliable {
        let bad = est.members.iter().filter(|m| !m.is_reliable()).count();
        eprintln!("warning: {bad} sweep members failed or ran out of time; estimates are unreliable");
    }
    println!("l1 = {:.8}  l2 = {:.8}  l3 = {:.8}", est.l1, est.l2, est.l3);
    Ok(est)
}

fn cmd_sweep(common: &Common) -> anyhow::Result<u8> {
    let cfg = setup(common)?;
    let spec = cfg.metric()?;
    let est = run_sweep(&cfg, &spec)?;
    Ok(if est.degenerate || est.unreliable { 2 } else { 0 })
}

fn run_spectrum(cfg: &RunConfig, spec: &MetricSpec) -> anyhow::Result<SpectrumReport> {
    let est = run_sweep(cfg, spec)?;
    let report = geodesics::simple_spectrum(spec, est.outcomes(), cfg.delta_len)?;
    let out = cfg.out_dir()?;
    let mut paths = Vec::with_capacity(report.entries.len());
    for (i, entry) in report.entries.iter().enumerate() {
        let name = format!("representative_{i:02}.csv");
        entry.representative.save_csv(&out.join(&name))?;
        paths.push(Some(name));
    }
    write_json(&out.join("spectrum.json"), &report.to_json(&paths))?;
    for entry in &report.entries {
        let flag = if entry.validated { "" } else { "  [flagged]" };
        println!(
            "length {:.8}  count {:3}  kappa_max {:.2e}  closure {:.2e}{flag}",
            entry.length, entry.count, entry.residuals.kappa_max, entry.residuals.closure_defect
        );
    }
    Ok(report)
}

fn cmd_spectrum(common: &Common) -> anyhow::Result<u8> {
    let cfg = setup(common)?;
    let spec = cfg.metric()?;
    let report = run_spectrum(&cfg, &spec)?;
    Ok(if report.all_validated() { 0 } else { 2 })
}

fn cmd_verify(common: &Common, theorem: Theorem) -> anyhow::Result<u8> {
    let cfg = setup(common)?;
    let spec = cfg.metric()?;
    let spectrum = run_spectrum(&cfg, &spec)?;
    let report = verify::verify(theorem, &spec, &spectrum, &cfg.verify, cfg.seed)?;
    let name = match theorem {
        Theorem::Zoll => "verify_zoll.json",
        Theorem::Cover => "verify_cover.json",
    };
    write_json(&cfg.out_dir()?.join(name), &report)?;
    println!("{:?}: {}", report.verdict, report.reason);
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 2,
        Verdict::HypothesisNotMet => 3,
    })
}

#[derive(Serialize)]
struct AinvReport {
    manifest: String,
    curves: usize,
    delta_loop: f64,
    a: u8,
}

fn cmd_ainv(common: &Common, manifest: &Path) -> anyhow::Result<u8> {
    let cfg = setup(common)?;
    let lp = CurveLoop::load_manifest(manifest)?;
    let a = topology::a_invariant(&lp)?;
    let report = AinvReport {
        manifest: manifest.display().to_string(),
        curves: lp.curves().len(),
        delta_loop: lp.delta_loop(),
        a: a as u8,
    };
    write_json(&cfg.out_dir()?.join("ainv.json"), &report)?;
    println!("loop of {} curves, delta_loop = {}", report.curves, report.delta_loop);
    println!("A = {}", report.a);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Flow { common, curve } => cmd_flow(common, curve),
        Command::Sweep { common } => cmd_sweep(common),
        Command::Spectrum { common } => cmd_spectrum(common),
        Command::Verify { common, theorem } => cmd_verify(common, (*theorem).into()),
        Command::Ainv { common, manifest } => cmd_ainv(common, manifest),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
