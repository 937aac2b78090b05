//! Command-line front end: argument and config-file resolution, dispatch to
//! the core modules, and atomic emission of JSON/CSV/snapshot artifacts.
//!
//! Exit status is 0 on success, 1 on a domain or input error and 2 when a
//! solver or optimizer did not converge (its output is still written).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use becvortex_core::energetics::tilde_transform;
use becvortex_core::flow::{chi, chi_bound_check, chi_pde_residual, phase_s, ChiBound};
use becvortex_core::gp::{
    nucleation_sweep, scan, solve, GridSpec, NucleationResult, Seed, Snapshot, SolveOptions, SolveReport, SweepPoint,
};
use becvortex_core::ladder::{predict_vortex_count, OmegaLadder, VortexCountPrediction, DEFAULT_DELTA};
use becvortex_core::output::{from_json, positions_csv, to_json, write_atomic};
use becvortex_core::pattern::{match_positions, minimize_pattern, OptimizerConfig, PatternResult};
use becvortex_core::trap::{tf_normalization_residual, DEFAULT_QUADRATURE_RESOLUTION};
use becvortex_core::{Error, Point, Result, ScalingContext, Slope, TrapParams};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub const THREADS_ENV: &str = "BECVORTEX_THREADS";

/// Default grid spacing for oracle solves, as a fraction of `ε`.
const DEFAULT_SPACING_FRACTION: f64 = 0.4;

#[derive(Parser, Debug)]
#[command(name = "becvortex", version, about = "Vortex nucleation and patterns in rotating condensates")]
struct Cli {
    /// Flat `key=value` file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct TrapArgs {
    /// Trap exponent, or "flat".
    #[arg(long)]
    s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct ScaleArgs {
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct OutArgs {
    /// Output path; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Thomas-Fermi chemical potential and domain.
    Tf {
        #[command(flatten)]
        trap: TrapArgs,
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Stream function at a point, with its bound and optional PDE residual.
    Chi {
        #[command(flatten)]
        trap: TrapArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Critical angular velocities.
    Ladder {
        #[command(flatten)]
        trap: TrapArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long)]
        n_max: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Predicted vortex count at one angular velocity.
    Predict {
        #[command(flatten)]
        trap: TrapArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Minimizing vortex pattern of the renormalized energy.
    Pattern {
        #[command(flatten)]
        trap: TrapArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
        #[arg(long)]
        multistarts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        grad_tol: Option<f64>,
        /// Also write the positions as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Grid minimization of the GP functional.
    GpSolve {
        #[command(flatten)]
        trap: TrapArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        /// Seeded phase singularities, `x,y[,d]` separated by `;` (raw coordinates).
        #[arg(long, allow_hyphen_values = true)]
        vortices: Option<String>,
        /// Binary field snapshot path.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Ground states over a range of angular velocities, or bisection for
    /// the first nucleated vortex.
    Sweep {
        #[command(flatten)]
        trap: TrapArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, allow_hyphen_values = true)]
        omega_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        omega_max: Option<f64>,
        /// Scan points, or bisection steps with `--bisect`.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        bisect: Option<bool>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Joins earlier outputs into one comparison table keyed by omega.
    Report {
        #[arg(required = false)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
}

const CONFIG_KEYS: &[&str] = &[
    "s", "lambda", "epsilon", "delta", "output", "format", "resolution", "x", "y", "omega", "n-max", "n",
    "multistarts", "seed", "max-iters", "grad-tol", "csv", "nx", "ny", "vortices", "snapshot", "omega-min",
    "omega-max", "steps", "bisect",
];

/// Parsed `key=value` config file. Keys use the long flag names; `_` and `-`
/// are interchangeable.
#[derive(Debug, Default)]
struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("config line {}: expected key=value", lineno + 1)))?;
            let key = k.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Format(format!("config line {}: unknown key {key:?}", lineno + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Flag value, else config value, else `None`.
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Domain(format!("invalid value {v:?} for {key}"))),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn need<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.get(flag, key)?.ok_or_else(|| Error::Domain(format!("missing required parameter --{key}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfRecord {
    pub s: Slope,
    pub lambda: f64,
    pub mu: f64,
    pub semi_axis_x: f64,
    pub semi_axis_y: f64,
    pub resolution: usize,
    pub normalization_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiRecord {
    pub s: Slope,
    pub lambda: f64,
    pub x: f64,
    pub y: f64,
    pub chi: f64,
    pub bound: ChiBound,
    pub omega: Option<f64>,
    pub phase: Option<f64>,
    pub resolution: Option<usize>,
    pub pde_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRecord {
    pub s: Slope,
    pub lambda: f64,
    #[serde(flatten)]
    pub ladder: OmegaLadder,
    /// `C₁ ln|ln ε|`.
    pub spacing: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictRecord {
    pub s: Slope,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub omega: f64,
    /// `(Ω − Ω₁)/(C₁ ln|ln ε|)`.
    pub nu: f64,
    pub prediction: VortexCountPrediction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub multistarts: usize,
    #[serde(flatten)]
    pub result: PatternResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSolveRecord {
    pub s: Slope,
    pub lambda: f64,
    pub seeds: Vec<Seed>,
    #[serde(flatten)]
    pub report: SolveReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub s: Slope,
    pub lambda: f64,
    pub epsilon: f64,
    pub nx: usize,
    pub points: Vec<SweepPoint>,
    pub nucleation: Option<NucleationResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub omega: f64,
    pub source: String,
    pub predicted: VortexCountPrediction,
    pub measured: usize,
    pub total_winding: i64,
    /// Whether the measured count is one the prediction allows.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionRow {
    pub omega: f64,
    pub n_predicted: usize,
    pub n_measured: usize,
    /// Per predicted vortex, distance (tilde units) to its partner.
    pub mismatch: Vec<Option<f64>>,
    pub max_mismatch: Option<f64>,
    pub constraint_residuals: [f64; 2],
    pub w_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NucleationRow {
    pub epsilon: f64,
    pub omega_star: f64,
    pub omega_1: f64,
    pub ratio: f64,
    pub c1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub s: Slope,
    pub lambda: f64,
    pub epsilon: Option<f64>,
    pub counts: Vec<CountRow>,
    pub positions: Vec<PositionRow>,
    pub nucleation: Vec<NucleationRow>,
}

/// Every JSON document the tool emits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Artifact {
    Tf(TfRecord),
    Chi(ChiRecord),
    Ladder(LadderRecord),
    Predict(PredictRecord),
    Pattern(PatternRecord),
    GpSolve(GpSolveRecord),
    Sweep(SweepRecord),
    Report(ReportTable),
}

impl Artifact {
    fn trap_key(&self) -> (Slope, f64) {
        match self {
            Artifact::Tf(r) => (r.s, r.lambda),
            Artifact::Chi(r) => (r.s, r.lambda),
            Artifact::Ladder(r) => (r.s, r.lambda),
            Artifact::Predict(r) => (r.s, r.lambda),
            Artifact::Pattern(r) => (r.result.s, r.result.lambda),
            Artifact::GpSolve(r) => (r.s, r.lambda),
            Artifact::Sweep(r) => (r.s, r.lambda),
            Artifact::Report(r) => (r.s, r.lambda),
        }
    }

    fn epsilon(&self) -> Option<f64> {
        match self {
            Artifact::Ladder(r) => Some(r.ladder.epsilon),
            Artifact::Predict(r) => Some(r.epsilon),
            Artifact::Pattern(r) => r.epsilon,
            Artifact::GpSolve(r) => Some(r.report.epsilon),
            Artifact::Sweep(r) => Some(r.epsilon),
            Artifact::Report(r) => r.epsilon,
            Artifact::Tf(_) | Artifact::Chi(_) => None,
        }
    }
}

/// Primary output of a command: a JSON artifact, optionally with a CSV view.
struct Emitted {
    artifact: Artifact,
    csv: Option<String>,
    converged: bool,
    what: &'static str,
}

fn trap_from(cfg: &ConfigFile, t: &TrapArgs) -> Result<TrapParams> {
    let s: Slope = cfg.or(t.s.clone(), "s", "2".to_string())?.parse()?;
    let lambda = cfg.or(t.lambda, "lambda", 1.0)?;
    TrapParams::new(s, lambda)
}

fn ctx_from(cfg: &ConfigFile, trap: TrapParams, sc: &ScaleArgs) -> Result<ScalingContext> {
    let eps = cfg.need(sc.epsilon, "epsilon")?;
    let delta = cfg.or(sc.delta, "delta", DEFAULT_DELTA)?;
    ScalingContext::new(trap, eps, delta)
}

fn omega_arg(cfg: &ConfigFile, flag: Option<f64>) -> Result<f64> {
    let omega = cfg.need(flag, "omega")?;
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::Domain(format!("omega must be finite and non-negative, got {omega}")));
    }
    Ok(omega)
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(v: T, key: &str) -> Result<T> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{key} must be positive, got {v}")))
    }
}

fn grid_spec(cfg: &ConfigFile, g: &GridArgs, ctx: &ScalingContext) -> Result<GridSpec> {
    let nx = cfg.get(g.nx, "nx")?;
    let ny = cfg.get(g.ny, "ny")?;
    let mut spec = match nx {
        Some(nx) => GridSpec::square(positive(nx, "nx")?),
        None => GridSpec::for_spacing(ctx, DEFAULT_SPACING_FRACTION * ctx.epsilon),
    };
    if let Some(ny) = ny {
        spec.ny = Some(positive(ny, "ny")?);
    }
    Ok(spec)
}

fn solve_options(cfg: &ConfigFile, g: &GridArgs) -> Result<SolveOptions> {
    let mut o = SolveOptions::default();
    o.max_iters = positive(cfg.or(g.max_iters, "max-iters", o.max_iters)?, "max-iters")?;
    o.grad_tol = positive(cfg.or(g.grad_tol, "grad-tol", o.grad_tol)?, "grad-tol")?;
    Ok(o)
}

/// Parses `x,y[,d];x,y[,d];…`.
pub fn parse_seeds(text: &str) -> Result<Vec<Seed>> {
    text.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let f: Vec<&str> = t.split(',').map(str::trim).collect();
            let bad = || Error::Domain(format!("bad vortex seed {t:?}, expected x,y[,d]"));
            if f.len() < 2 || f.len() > 3 {
                return Err(bad());
            }
            let x: f64 = f[0].parse().map_err(|_| bad())?;
            let y: f64 = f[1].parse().map_err(|_| bad())?;
            let winding: i32 = if f.len() == 3 { f[2].parse().map_err(|_| bad())? } else { 1 };
            if winding == 0 || !x.is_finite() || !y.is_finite() {
                return Err(bad());
            }
            Ok(Seed { at: Point::new(x, y), winding })
        })
        .collect()
}

fn cmd_tf(cfg: &ConfigFile, t: &TrapArgs, resolution: Option<usize>) -> Result<Emitted> {
    let trap = trap_from(cfg, t)?;
    let resolution = cfg.or(resolution, "resolution", DEFAULT_QUADRATURE_RESOLUTION)?;
    let residual = tf_normalization_residual(&trap, resolution)?;
    let rec = TfRecord {
        s: trap.s,
        lambda: trap.lambda,
        mu: trap.mu,
        semi_axis_x: trap.boundary_point(0.0).x,
        semi_axis_y: trap.boundary_point(FRAC_PI_2).y,
        resolution,
        normalization_residual: residual,
    };
    Ok(Emitted { artifact: Artifact::Tf(rec), csv: None, converged: true, what: "tf" })
}

fn cmd_chi(
    cfg: &ConfigFile,
    t: &TrapArgs,
    x: Option<f64>,
    y: Option<f64>,
    omega: Option<f64>,
    resolution: Option<usize>,
) -> Result<Emitted> {
    let trap = trap_from(cfg, t)?;
    let x = cfg.need(x, "x")?;
    let y = cfg.need(y, "y")?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::Domain("x and y must be finite".into()));
    }
    let p = Point::new(x, y);
    let omega = cfg.get(omega, "omega")?;
    let resolution = cfg.get(resolution, "resolution")?;
    let pde_residual = resolution.map(|r| chi_pde_residual(&trap, r, None)).transpose()?;
    let rec = ChiRecord {
        s: trap.s,
        lambda: trap.lambda,
        x,
        y,
        chi: chi(p, &trap),
        bound: chi_bound_check(p, &trap),
        omega,
        phase: omega.map(|o| phase_s(p, trap.lambda, o)),
        resolution,
        pde_residual,
    };
    Ok(Emitted { artifact: Artifact::Chi(rec), csv: None, converged: true, what: "chi" })
}

fn cmd_ladder(cfg: &ConfigFile, t: &TrapArgs, sc: &ScaleArgs, n_max: Option<usize>) -> Result<Emitted> {
    let ctx = ctx_from(cfg, trap_from(cfg, t)?, sc)?;
    let n_max = cfg.or(n_max, "n-max", 5)?;
    let ladder = OmegaLadder::new(&ctx, n_max)?;
    let rec = LadderRecord {
        s: ctx.trap.s,
        lambda: ctx.trap.lambda,
        spacing: ctx.c1() * ctx.loglog_eps(),
        ladder,
    };
    Ok(Emitted { artifact: Artifact::Ladder(rec), csv: None, converged: true, what: "ladder" })
}

fn cmd_predict(cfg: &ConfigFile, t: &TrapArgs, sc: &ScaleArgs, omega: Option<f64>) -> Result<Emitted> {
    let ctx = ctx_from(cfg, trap_from(cfg, t)?, sc)?;
    let omega = omega_arg(cfg, omega)?;
    let nu = (omega - ctx.c1() * ctx.log_eps()) / (ctx.c1() * ctx.loglog_eps());
    let rec = PredictRecord {
        s: ctx.trap.s,
        lambda: ctx.trap.lambda,
        epsilon: ctx.epsilon,
        delta: ctx.delta,
        omega,
        nu,
        prediction: predict_vortex_count(omega, &ctx),
    };
    Ok(Emitted { artifact: Artifact::Predict(rec), csv: None, converged: true, what: "predict" })
}

#[allow(clippy::too_many_arguments)]
fn cmd_pattern(
    cfg: &ConfigFile,
    t: &TrapArgs,
    sc: &ScaleArgs,
    n: Option<usize>,
    omega: Option<f64>,
    multistarts: Option<usize>,
    seed: Option<u64>,
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
) -> Result<Emitted> {
    let trap = trap_from(cfg, t)?;
    // The pattern problem does not depend on ε; it is only recorded when given.
    let epsilon = cfg.get(sc.epsilon, "epsilon")?;
    let ctx = match epsilon {
        Some(_) => ctx_from(cfg, trap, sc)?,
        None => ScalingContext::with_default_delta(trap, 0.01)?,
    };
    let mut opt = OptimizerConfig::new(cfg.need(n, "n")?);
    opt.multistarts = cfg.or(multistarts, "multistarts", opt.multistarts)?;
    opt.seed = cfg.or(seed, "seed", opt.seed)?;
    opt.max_iters = cfg.or(max_iters, "max-iters", opt.max_iters)?;
    opt.grad_tol = cfg.or(grad_tol, "grad-tol", opt.grad_tol)?;
    let omega = omega_arg(cfg, omega)?;
    let result = minimize_pattern(&opt, omega, &ctx)?;
    let csv = positions_csv(&result.points());
    let converged = result.converged;
    let rec = PatternRecord { epsilon, seed: opt.seed, multistarts: opt.multistarts, result };
    Ok(Emitted { artifact: Artifact::Pattern(rec), csv: Some(csv), converged, what: "pattern" })
}

fn cmd_gp_solve(
    cfg: &ConfigFile,
    t: &TrapArgs,
    sc: &ScaleArgs,
    omega: Option<f64>,
    g: &GridArgs,
    vortices: Option<String>,
    snapshot: Option<PathBuf>,
) -> Result<(Emitted, Option<(PathBuf, Snapshot)>)> {
    let ctx = ctx_from(cfg, trap_from(cfg, t)?, sc)?;
    let omega = omega_arg(cfg, omega)?;
    let spec = grid_spec(cfg, g, &ctx)?;
    let mut opts = solve_options(cfg, g)?;
    opts.seeds = match cfg.get(vortices, "vortices")? {
        Some(text) => parse_seeds(&text)?,
        None => Vec::new(),
    };
    let sol = solve(&spec, &ctx, omega, &opts)?;
    let snap = cfg.get(snapshot, "snapshot")?.map(|p| (p, Snapshot::of(&sol.grid)));
    let converged = sol.report.converged;
    let rec = GpSolveRecord { s: ctx.trap.s, lambda: ctx.trap.lambda, seeds: opts.seeds, report: sol.report };
    Ok((Emitted { artifact: Artifact::GpSolve(rec), csv: None, converged, what: "gp-solve" }, snap))
}

fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("omega,vortex_count,total_winding,energy,converged\n");
    for p in points {
        s.push_str(&format!("{:.16e},{},{},{:.16e},{}\n", p.omega, p.vortex_count, p.total_winding, p.energy, p.converged));
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    cfg: &ConfigFile,
    t: &TrapArgs,
    sc: &ScaleArgs,
    omega_min: Option<f64>,
    omega_max: Option<f64>,
    steps: Option<usize>,
    bisect: Option<bool>,
    g: &GridArgs,
) -> Result<Emitted> {
    let ctx = ctx_from(cfg, trap_from(cfg, t)?, sc)?;
    let lo = cfg.or(omega_min, "omega-min", 0.0)?;
    let hi = cfg.need(omega_max, "omega-max")?;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::Domain(format!("need 0 <= omega-min < omega-max, got [{lo}, {hi}]")));
    }
    let bisect = cfg.or(bisect, "bisect", false)?;
    let steps = cfg.or(steps, "steps", 8)?;
    let spec = grid_spec(cfg, g, &ctx)?;
    let opts = solve_options(cfg, g)?;
    let nx = spec.nx;
    let (points, nucleation) = if bisect {
        let r = nucleation_sweep(&ctx, (lo, hi), steps, &spec, &opts)?;
        (r.evaluations.clone(), Some(r))
    } else {
        let steps = positive(steps, "steps")?;
        let omegas: Vec<f64> = if steps == 1 {
            vec![lo]
        } else {
            (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()
        };
        (scan(&spec, &ctx, &omegas, &opts)?, None)
    };
    let converged = points.iter().all(|p| p.converged);
    let csv = sweep_csv(&points);
    let rec = SweepRecord { s: ctx.trap.s, lambda: ctx.trap.lambda, epsilon: ctx.epsilon, nx, points, nucleation };
    Ok(Emitted { artifact: Artifact::Sweep(rec), csv: Some(csv), converged, what: "sweep" })
}

fn same_omega(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Joins predictions with measurements. Fails on an empty input set and on
/// inputs with different `(s, λ, ε)`.
pub fn build_report(artifacts: &[Artifact]) -> Result<ReportTable> {
    let first = artifacts.first().ok_or_else(|| Error::Domain("report needs at least one input".into()))?;
    let (s, lambda) = first.trap_key();
    for a in artifacts {
        let (s2, l2) = a.trap_key();
        if s2 != s || l2 != lambda {
            return Err(Error::Domain(format!(
                "incompatible inputs: (s, lambda) = ({s}, {lambda}) and ({s2}, {l2})"
            )));
        }
    }
    let mut epsilon: Option<f64> = None;
    for e in artifacts.iter().filter_map(Artifact::epsilon) {
        match epsilon {
            Some(e0) if e0 != e => {
                return Err(Error::Domain(format!("incompatible inputs: epsilon {e0} and {e}")));
            }
            _ => epsilon = Some(e),
        }
    }
    let trap = TrapParams::new(s, lambda)?;
    let delta = artifacts
        .iter()
        .find_map(|a| match a {
            Artifact::Ladder(r) => Some(r.ladder.delta),
            Artifact::Predict(r) => Some(r.delta),
            _ => None,
        })
        .unwrap_or(DEFAULT_DELTA);
    let ctx = epsilon.map(|e| ScalingContext::new(trap, e, delta)).transpose()?;

    let mut counts = Vec::new();
    let mut push_count = |omega: f64, source: &str, measured: usize, total_winding: i64| {
        if let Some(ctx) = &ctx {
            let predicted = predict_vortex_count(omega, ctx);
            let consistent = match predicted {
                VortexCountPrediction::Count { n } => n == measured,
                VortexCountPrediction::TransitionBand { lower, upper } => measured == lower || measured == upper,
            };
            counts.push(CountRow { omega, source: source.to_string(), predicted, measured, total_winding, consistent });
        }
    };
    let mut nucleation = Vec::new();
    for a in artifacts {
        match a {
            Artifact::Sweep(r) => {
                for p in &r.points {
                    push_count(p.omega, "sweep", p.vortex_count, p.total_winding);
                }
                if let Some(n) = &r.nucleation {
                    nucleation.push(NucleationRow {
                        epsilon: n.epsilon,
                        omega_star: n.omega_star,
                        omega_1: n.omega_1,
                        ratio: n.ratio,
                        c1: n.c1,
                    });
                }
            }
            Artifact::GpSolve(r) => {
                push_count(r.report.omega, "gp-solve", r.report.vortices.len(), r.report.total_winding());
            }
            _ => {}
        }
    }
    counts.sort_by(|a, b| a.omega.total_cmp(&b.omega));

    let mut positions = Vec::new();
    for a in artifacts {
        let Artifact::GpSolve(g) = a else { continue };
        let omega = g.report.omega;
        for b in artifacts {
            let Artifact::Pattern(p) = b else { continue };
            if !same_omega(p.result.omega, omega) || omega <= 0.0 {
                continue;
            }
            let raw: Vec<Point> = g.report.vortices.iter().map(|v| v.position).collect();
            let measured = tilde_transform(&raw, omega, lambda)?;
            let predicted = p.result.points();
            let m = match_positions(&predicted, &measured, lambda);
            let mut mismatch = vec![None; predicted.len()];
            for &(i, _, d) in &m.pairs {
                mismatch[i] = Some(d);
            }
            positions.push(PositionRow {
                omega,
                n_predicted: predicted.len(),
                n_measured: measured.len(),
                max_mismatch: (!m.pairs.is_empty()).then_some(m.max_mismatch),
                mismatch,
                constraint_residuals: p.result.residuals,
                w_value: p.result.w_value,
            });
        }
    }
    positions.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    Ok(ReportTable { s, lambda, epsilon, counts, positions, nucleation })
}

fn cmd_report(inputs: &[PathBuf]) -> Result<Emitted> {
    if inputs.is_empty() {
        return Err(Error::Domain("report needs at least one input".into()));
    }
    let mut artifacts = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
        let a: Artifact =
            from_json(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        artifacts.push(a);
    }
    let table = build_report(&artifacts)?;
    Ok(Emitted { artifact: Artifact::Report(table), csv: None, converged: true, what: "report" })
}

fn emit(e: &Emitted, out: &OutArgs, cfg: &ConfigFile) -> Result<()> {
    let format = cfg.or(out.format.clone(), "format", "json".to_string())?;
    let body = match format.as_str() {
        "json" => to_json(&e.artifact)?,
        "csv" => e
            .csv
            .clone()
            .ok_or_else(|| Error::Domain(format!("{} output has no csv form", e.what)))?,
        other => return Err(Error::Domain(format!("format must be json or csv, got {other:?}"))),
    };
    match cfg.get(out.output.clone(), "output")? {
        Some(path) => write_atomic(&path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Domain(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // A pool already installed by an earlier call in this process is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let (emitted, out, extra) = match cli.command {
        Command::Tf { trap, resolution, out } => (cmd_tf(&cfg, &trap, resolution)?, out, None),
        Command::Chi { trap, x, y, omega, resolution, out } => {
            (cmd_chi(&cfg, &trap, x, y, omega, resolution)?, out, None)
        }
        Command::Ladder { trap, scale, n_max, out } => (cmd_ladder(&cfg, &trap, &scale, n_max)?, out, None),
        Command::Predict { trap, scale, omega, out } => (cmd_predict(&cfg, &trap, &scale, omega)?, out, None),
        Command::Pattern { trap, scale, n, omega, multistarts, seed, max_iters, grad_tol, csv, out } => {
            let e = cmd_pattern(&cfg, &trap, &scale, n, omega, multistarts, seed, max_iters, grad_tol)?;
            let csv_path = cfg.get(csv, "csv")?;
            let extra = csv_path.map(|p| (p, e.csv.clone().unwrap_or_default().into_bytes()));
            (e, out, extra)
        }
        Command::GpSolve { trap, scale, omega, grid, vortices, snapshot, out } => {
            let (e, snap) = cmd_gp_solve(&cfg, &trap, &scale, omega, &grid, vortices, snapshot)?;
            (e, out, snap.map(|(p, s)| (p, s.to_bytes())))
        }
        Command::Sweep { trap, scale, omega_min, omega_max, steps, bisect, grid, out } => {
            (cmd_sweep(&cfg, &trap, &scale, omega_min, omega_max, steps, bisect, &grid)?, out, None)
        }
        Command::Report { inputs, out } => (cmd_report(&inputs)?, out, None),
    };
    if let Some((path, bytes)) = extra {
        write_atomic(&path, &bytes)?;
    }
    emit(&emitted, &out, &cfg)?;
    if !emitted.converged {
        eprintln!("becvortex: {} did not converge; output written with converged = false", emitted.what);
    }
    Ok(emitted.converged)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => 2,
        _ => 1,
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit status.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("becvortex: {}", line.trim_start_matches("error: "));
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("becvortex: {msg}");
            exit_code(&e)
        }
    }
}
