//! Runs a configuration: expands sweep points, executes them in parallel
//! and writes traces, bound reports and the comparison table.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hioco::metrics::{report_for_run, step_constants, BoundCheck, BoundReport};
use hioco::seed::derive_seed;
use hioco::trace::{TraceRow, TRACE_COLUMNS};
use hioco::{run_episode, BaselineKind, Compression, CostScenario, DelayConfig, HiocoParams, Mode, RunTrace};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Hioco,
    Baseline(BaselineKind),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Hioco => "hioco",
            Variant::Baseline(kind) => kind.name(),
        }
    }
}

/// One fully resolved run.
#[derive(Debug, Clone, Serialize)]
pub struct Point {
    pub index: usize,
    pub variant: Variant,
    pub params: HiocoParams,
    pub delays: DelayConfig,
    pub mode: Mode,
    pub gamma: f64,
}

/// A configuration with its scenario generated and every `auto` resolved.
#[derive(Debug)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub scenario: CostScenario,
    pub points: Vec<Point>,
}

fn mode_for(config: &ExperimentConfig, delays: &DelayConfig) -> Mode {
    match config.algorithm.mode {
        Some(m) if delays.tau_l == 0 || m == Mode::LocalDelay => m,
        _ if delays.tau_l > 0 => Mode::LocalDelay,
        _ => Mode::ZeroLocalDelay,
    }
}

/// Generates the scenario, resolves `auto` values and expands the sweep.
pub fn plan(config: ExperimentConfig) -> Result<Plan, CliError> {
    config.validate()?;
    let scenario = CostScenario::generate(&config.scenario)?;
    let k = *scenario.constants();
    info!(
        "scenario: C={} n={} m={} T={} mu={} L={:.6} D={:.6} R={:.6}",
        scenario.num_workers(),
        scenario.dims().iter().sum::<usize>(),
        config.scenario.m,
        scenario.horizon(),
        k.mu,
        k.l,
        k.d,
        k.r
    );
    let alg = &config.algorithm;
    let alpha = alg.alpha.resolve(k.l);
    if alg.alpha == crate::config::AutoOr::Auto {
        info!("alpha = auto resolved to L = {alpha}");
    }
    let gamma = alg.gamma.resolve(k.mu);
    if alg.gamma == crate::config::AutoOr::Auto {
        info!("gamma = auto resolved to mu = {gamma}");
    }
    if alpha < k.l {
        return Err(CliError::Config(format!(
            "algorithm.alpha = {alpha} is below the scenario smoothness L = {}",
            k.l
        )));
    }
    step_constants(k.mu, alpha, gamma).map_err(|e| CliError::Config(e.to_string()))?;

    let sweep = &config.sweep;
    let or_base = |v: &[usize], base: usize| if v.is_empty() { vec![base] } else { v.to_vec() };
    let steps = if sweep.steps.is_empty() {
        vec![[alg.j_l, alg.j_r]]
    } else {
        sweep.steps.clone()
    };
    let delays: Vec<DelayConfig> = if sweep.tau_r.is_empty() {
        or_base(&sweep.tau_l, config.delay.tau_l)
            .into_iter()
            .map(|tau_l| DelayConfig { tau_l, ..config.delay })
            .collect()
    } else {
        let mut out = Vec::new();
        for &tau_r in &sweep.tau_r {
            for &tau_l in &or_base(&sweep.tau_l, config.delay.tau_l) {
                out.push(DelayConfig { tau_u: tau_r, tau_d: 0, tau_l });
            }
        }
        out
    };
    let compressions: Vec<Compression> = if sweep.compression.is_empty() {
        vec![alg.compression]
    } else {
        sweep.compression.clone()
    };

    let master_seed = config.scenario.seed;
    let mut points = Vec::new();
    let mut push = |variant: Variant, params: HiocoParams, delays: DelayConfig| {
        let index = points.len();
        let params = HiocoParams {
            init_seed: derive_seed(master_seed, &[index as u64]),
            ..params
        };
        points.push(Point {
            index,
            variant,
            mode: mode_for(&config, &delays),
            params,
            delays,
            gamma,
        });
    };
    for [j_l, j_r] in &steps {
        for d in &delays {
            for c in &compressions {
                push(
                    Variant::Hioco,
                    HiocoParams::new(alpha, *j_r, *j_l).with_compression(*c),
                    *d,
                );
            }
        }
    }
    for kind in &sweep.baselines {
        for d in &delays {
            for c in &compressions {
                let base = HiocoParams::new(alpha, alg.j_r, alg.j_l).with_compression(*c);
                push(Variant::Baseline(*kind), kind.params(&base), *d);
            }
        }
    }
    Ok(Plan {
        config,
        scenario,
        points,
    })
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub point: Point,
    pub trace: RunTrace,
    pub report: BoundReport,
    pub checks: Vec<BoundCheck>,
}

impl Outcome {
    pub fn violations(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| {
                format!(
                    "point {} ({}): regret {} > {} {}",
                    self.point.index,
                    self.point.variant.name(),
                    self.report.regret,
                    c.name,
                    c.bound
                )
            })
            .collect()
    }
}

pub fn run_point(scenario: &CostScenario, point: &Point) -> Result<Outcome, CliError> {
    let trace = run_episode(scenario, &point.params, &point.delays, point.mode)?;
    let report = report_for_run(scenario, &point.params, &point.delays, point.gamma, &trace)?;
    let checks = report.checks(point.mode);
    Ok(Outcome {
        point: point.clone(),
        trace,
        report,
        checks,
    })
}

/// Runs every point of the plan on the rayon pool, in point order.
pub fn execute(plan: &Plan) -> Result<Vec<Outcome>, CliError> {
    plan.points
        .par_iter()
        .map(|p| run_point(&plan.scenario, p))
        .collect()
}

fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated_unix={secs}\n")
}

/// Trace CSV: a timestamp comment line, then the fixed column set.
pub fn write_trace_csv(rows: &[TraceRow], path: &Path) -> Result<(), CliError> {
    let mut file = File::create(path)?;
    file.write_all(timestamp_line().as_bytes())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(TRACE_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PointReport<'a> {
    point: &'a Point,
    report: &'a BoundReport,
    checks: &'a [BoundCheck],
}

/// One row of the comparison table; carries every resolved constant.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub variant: &'static str,
    pub j_l: usize,
    pub j_r: usize,
    pub tau_u: usize,
    pub tau_d: usize,
    pub tau_l: usize,
    pub tau_r: usize,
    pub tau: usize,
    pub compression: String,
    pub init_seed: u64,
    pub mu: f64,
    pub l: f64,
    pub d: f64,
    pub r: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub beta: f64,
    pub eta_j: f64,
    pub xi: f64,
    pub regret: f64,
    pub bound_i: f64,
    pub bound_ii: Option<f64>,
    pub bound_local_i: f64,
    pub bound_local: Option<f64>,
    pub path: f64,
    pub path2: f64,
    pub delta: f64,
    pub delta2: f64,
    pub bounds_hold: bool,
}

impl SweepRow {
    pub fn from_outcome(o: &Outcome) -> Self {
        let c = &o.report.constants;
        let m = &o.report.measures;
        let p = &o.point;
        Self {
            point: p.index,
            variant: p.variant.name(),
            j_l: p.params.j_l,
            j_r: p.params.j_r,
            tau_u: p.delays.tau_u,
            tau_d: p.delays.tau_d,
            tau_l: p.delays.tau_l,
            tau_r: p.delays.tau_r(),
            tau: p.delays.tau(),
            compression: compression_label(&p.params.compression),
            init_seed: p.params.init_seed,
            mu: c.mu,
            l: c.l,
            d: c.d,
            r: c.r,
            alpha: c.alpha,
            gamma: c.gamma,
            eta: c.eta,
            beta: c.beta,
            eta_j: c.eta.powi((c.j_l + c.j_r) as i32),
            xi: c.xi,
            regret: o.report.regret,
            bound_i: o.report.bound_i,
            bound_ii: o.report.bound_ii.value(),
            bound_local_i: o.report.bound_local_i,
            bound_local: o.report.bound_local.value(),
            path: m.path,
            path2: m.path2,
            delta: m.delta,
            delta2: m.delta2,
            bounds_hold: o.checks.iter().all(|c| c.holds),
        }
    }
}

pub fn compression_label(c: &Compression) -> String {
    match c {
        Compression::Identity => "identity".into(),
        Compression::Quantize { bits, lo, hi } => format!("quantize:{bits}:{lo}:{hi}"),
        Compression::GaussianNoise { std, seed } => format!("noise:{std}:{seed}"),
    }
}

pub fn write_sweep_csv(outcomes: &[Outcome], path: &Path) -> Result<(), CliError> {
    let mut file = File::create(path)?;
    file.write_all(timestamp_line().as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    for o in outcomes {
        w.serialize(SweepRow::from_outcome(o))?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_bound(b: Option<f64>) -> String {
    b.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

pub fn summary_table(outcomes: &[Outcome]) -> String {
    let mut out = format!(
        "{:>5} {:<24} {:>3} {:>3} {:>4} {:>4} {:<20} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10} {:>5}\n",
        "point", "variant", "J_l", "J_r", "tau_r", "tau", "compression", "regret", "bound_i", "bound_ii", "bound_local", "path", "delta", "ok"
    );
    for o in outcomes {
        let row = SweepRow::from_outcome(o);
        out.push_str(&format!(
            "{:>5} {:<24} {:>3} {:>3} {:>4} {:>4} {:<20} {:>12.4} {:>12.4} {:>12} {:>12} {:>10.4} {:>10.4} {:>5}\n",
            row.point,
            row.variant,
            row.j_l,
            row.j_r,
            row.tau_r,
            row.tau,
            row.compression,
            row.regret,
            row.bound_i,
            fmt_bound(row.bound_ii),
            fmt_bound(row.bound_local),
            row.path,
            row.delta,
            if row.bounds_hold { "yes" } else { "NO" }
        ));
    }
    out
}

/// Result of a `run` or `sweep` command.
#[derive(Debug)]
pub struct RunSummary {
    pub outcomes: Vec<Outcome>,
    pub files: Vec<PathBuf>,
    pub violations: Vec<String>,
}

impl RunSummary {
    /// `Err` with a bound violation if any enabled inequality failed.
    pub fn into_result(self) -> Result<Self, CliError> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(CliError::BoundViolation(self.violations.join("; ")))
        }
    }
}

/// Executes the plan and writes per-point traces and reports (plus the
/// comparison table when `aggregate`). Violated bounds are collected in
/// the summary, not raised.
pub fn run_config(plan: &Plan, out_dir: &Path, aggregate: bool) -> Result<RunSummary, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let outcomes = execute(plan)?;
    let mut files = Vec::new();
    for o in &outcomes {
        let squared = match o.point.mode {
            Mode::ZeroLocalDelay => &o.report.bound_ii,
            Mode::LocalDelay => &o.report.bound_local,
        };
        if let hioco::metrics::Bound::ConditionViolated { condition } = squared {
            warn!("point {}: {condition}; bound not checked", o.point.index);
        }
        let trace_path = out_dir.join(format!("trace_{:03}.csv", o.point.index));
        write_trace_csv(&o.trace.rows(), &trace_path)?;
        let report_path = out_dir.join(format!("report_{:03}.json", o.point.index));
        let json = serde_json::to_string_pretty(&PointReport {
            point: &o.point,
            report: &o.report,
            checks: &o.checks,
        })
        .map_err(std::io::Error::other)?;
        std::fs::write(&report_path, json + "\n")?;
        files.push(trace_path);
        files.push(report_path);
    }
    std::fs::write(out_dir.join("config.toml"), plan.config.to_toml())?;
    files.push(out_dir.join("config.toml"));
    if aggregate {
        let path = out_dir.join("sweep.csv");
        write_sweep_csv(&outcomes, &path)?;
        files.push(path);
    }
    let violations: Vec<String> = outcomes.iter().flat_map(Outcome::violations).collect();
    Ok(RunSummary {
        outcomes,
        files,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepConfig;
    use crate::presets::preset;

    fn small() -> ExperimentConfig {
        let mut cfg = preset("thm1").unwrap();
        cfg.scenario.horizon = 40;
        cfg
    }

    #[test]
    fn empty_sweep_is_one_point() {
        let p = plan(small()).unwrap();
        assert_eq!(p.points.len(), 1);
        assert_eq!(p.points[0].params.alpha, p.scenario.constants().l);
        assert_eq!(p.points[0].gamma, 1.0);
    }

    #[test]
    fn sweep_expansion_and_seeds() {
        let mut cfg = small();
        cfg.sweep = SweepConfig {
            steps: vec![[1, 0], [2, 2]],
            tau_r: vec![1, 2, 4],
            baselines: BaselineKind::ALL.to_vec(),
            ..Default::default()
        };
        let p = plan(cfg).unwrap();
        assert_eq!(p.points.len(), 2 * 3 + 4 * 3);
        let seeds: std::collections::BTreeSet<u64> = p.points.iter().map(|x| x.params.init_seed).collect();
        assert_eq!(seeds.len(), p.points.len());
        assert!(p.points.iter().all(|x| x.delays.tau_r() >= 1));
    }

    #[test]
    fn alpha_below_smoothness_is_a_config_error() {
        let mut cfg = small();
        cfg.algorithm.alpha = crate::config::AutoOr::Value(0.5);
        assert!(matches!(plan(cfg), Err(CliError::Config(_))));
    }

    #[test]
    fn local_delay_picks_local_mode() {
        let mut cfg = small();
        cfg.delay.tau_l = 2;
        assert_eq!(plan(cfg).unwrap().points[0].mode, Mode::LocalDelay);
    }
}
