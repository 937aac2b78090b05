//! Minimization of the renormalized energy over vortex positions in tilde
//! coordinates, and the stationarity constraints its minimizers satisfy.
//!
//! Each start runs a BFGS iteration with Armijo backtracking (the inverse
//! Hessian estimate is only updated when the secant pair has positive
//! curvature), followed by a damped Newton polish with the analytic Hessian.
//! Starts are independent and are reduced in start-index order.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energetics::{flatten, unflatten, RenormalizedEnergy, VortexConfig};
use crate::error::{Error, Result};
use crate::ladder::ScalingContext;
use crate::trap::{Point, Slope, TrapParams};

pub const DEFAULT_MULTISTARTS: usize = 32;
pub const DEFAULT_GRAD_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 20_000;
pub const MAX_VORTICES: usize = 12;
/// Steps that bring two vortices closer than this (tilde units) are halved.
pub const COLLISION_GUARD: f64 = 1e-6;
/// Max-norm distance below which two canonical minima are the same basin.
pub const BASIN_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub n: usize,
    pub multistarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(n: usize) -> Self {
        OptimizerConfig {
            n,
            multistarts: DEFAULT_MULTISTARTS,
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: DEFAULT_GRAD_TOL,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_VORTICES {
            return Err(Error::domain(format!("vortex count must lie in 1..={MAX_VORTICES}, got {}", self.n)));
        }
        if self.multistarts == 0 {
            return Err(Error::domain("multistarts must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::domain(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternResult {
    pub n: usize,
    pub omega: f64,
    pub s: Slope,
    pub lambda: f64,
    /// Canonicalized tilde positions.
    pub positions: Vec<[f64; 2]>,
    pub w_value: f64,
    pub grad_norm: f64,
    /// Residuals of the two moment constraints, see [`check_constraints`].
    pub residuals: [f64; 2],
    pub basin_count: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl PatternResult {
    pub fn points(&self) -> Vec<Point> {
        self.positions.iter().map(|&p| p.into()).collect()
    }

    pub fn config(&self) -> Result<VortexConfig> {
        VortexConfig::unit(self.points())
    }
}

/// Analytic gradient of the renormalized energy, `[∂X_0, ∂Y_0, ∂X_1, …]`.
pub fn grad_w(config: &VortexConfig, omega: f64, trap: &TrapParams) -> Result<Vec<f64>> {
    if !config.all_unit() {
        return Err(Error::domain("gradient is only defined for unit windings"));
    }
    let e = RenormalizedEnergy::new(trap, omega)?;
    let z = flatten(&config.positions);
    let mut g = vec![0.0; z.len()];
    e.gradient(&z, &mut g);
    Ok(g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn min_pair_distance(z: &[f64]) -> f64 {
    let n = z.len() / 2;
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            m = m.min((z[2 * i] - z[2 * j]).hypot(z[2 * i + 1] - z[2 * j + 1]));
        }
    }
    m
}

/// Squared radius of the Thomas–Fermi domain in tilde coordinates (a disc).
fn tilde_domain_radius2(trap: &TrapParams, omega: f64) -> f64 {
    omega * trap.boundary_quad()
}

struct Problem {
    energy: RenormalizedEnergy,
    radius2: f64,
}

impl Problem {
    fn admissible(&self, z: &[f64]) -> bool {
        z.chunks_exact(2).all(|c| c[0] * c[0] + c[1] * c[1] < self.radius2)
            && min_pair_distance(z) >= COLLISION_GUARD
    }
}

struct StartOutcome {
    z: Vec<f64>,
    w: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    is_minimum: bool,
}

/// Backtracking along `d`; returns the accepted point and its value.
fn line_search(p: &Problem, z: &[f64], f: f64, g: &[f64], d: &[f64]) -> Option<(Vec<f64>, f64)> {
    let slope = dot(g, d);
    if !(slope < 0.0) {
        return None;
    }
    let mut alpha = 1.0;
    let mut trial = vec![0.0; z.len()];
    for _ in 0..80 {
        for k in 0..z.len() {
            trial[k] = z[k] + alpha * d[k];
        }
        if p.admissible(&trial) {
            let ft = p.energy.value(&trial);
            if ft <= f + 1e-4 * alpha * slope {
                return Some((trial, ft));
            }
        }
        alpha *= 0.5;
    }
    None
}

fn bfgs(p: &Problem, mut z: Vec<f64>, cfg: &OptimizerConfig, switch_tol: f64) -> (Vec<f64>, usize) {
    let m = z.len();
    let mut h = DMatrix::<f64>::identity(m, m);
    let mut f = p.energy.value(&z);
    let mut g = vec![0.0; m];
    p.energy.gradient(&z, &mut g);
    let mut it = 0;
    while it < cfg.max_iters && norm(&g) > switch_tol {
        it += 1;
        let gv = DVector::from_column_slice(&g);
        let mut d: Vec<f64> = (-(&h * &gv)).iter().copied().collect();
        let step = match line_search(p, &z, f, &g, &d) {
            Some(s) => Some(s),
            None => {
                h.fill_with_identity();
                d = g.iter().map(|x| -x).collect();
                line_search(p, &z, f, &g, &d)
            }
        };
        let Some((zn, fn_)) = step else { break };
        let mut gn = vec![0.0; m];
        p.energy.gradient(&zn, &mut gn);
        let s = DVector::from_iterator(m, zn.iter().zip(&z).map(|(a, b)| a - b));
        let y = DVector::from_iterator(m, gn.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy)) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        z = zn;
        f = fn_;
        g = gn;
    }
    (z, it)
}

/// Levenberg–Marquardt damped Newton iteration on the gradient.
fn newton_polish(p: &Problem, mut z: Vec<f64>, tol: f64, max_iters: usize) -> (Vec<f64>, usize) {
    let m = z.len();
    let mut g = vec![0.0; m];
    p.energy.gradient(&z, &mut g);
    let mut f = p.energy.value(&z);
    let mut gn = norm(&g);
    let mut nu = 1e-8;
    let mut it = 0;
    while it < max_iters && gn > tol {
        it += 1;
        let h = DMatrix::from_row_slice(m, m, &p.energy.hessian(&z));
        let scale = h.diagonal().abs().max().max(1.0);
        let a = &h + DMatrix::identity(m, m) * (nu * scale);
        let Some(chol) = a.cholesky() else {
            nu *= 10.0;
            if nu > 1e6 {
                break;
            }
            continue;
        };
        let step = chol.solve(&DVector::from_iterator(m, g.iter().map(|x| -x)));
        let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let mut gt = vec![0.0; m];
        if p.admissible(&trial) {
            p.energy.gradient(&trial, &mut gt);
            let ft = p.energy.value(&trial);
            let gtn = norm(&gt);
            if gtn < gn && ft <= f + 1e-10 * f.abs().max(1.0) {
                z = trial;
                g = gt;
                f = ft;
                gn = gtn;
                nu = (nu * 0.1).max(1e-14);
                continue;
            }
        }
        nu *= 10.0;
        if nu > 1e6 {
            break;
        }
    }
    (z, it)
}

/// Positive semidefinite up to the rotational zero mode.
fn is_local_minimum(p: &Problem, z: &[f64]) -> bool {
    let m = z.len();
    let h = DMatrix::from_row_slice(m, m, &p.energy.hessian(z));
    let scale = h.diagonal().abs().max().max(1.0);
    (h + DMatrix::identity(m, m) * (1e-7 * scale)).cholesky().is_some()
}

fn sample_start(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    let mut z: Vec<f64> = Vec::with_capacity(2 * n);
    while z.len() < 2 * n {
        let r = radius * rng.gen::<f64>().sqrt();
        let a = 2.0 * PI * rng.gen::<f64>();
        let (x, y) = (r * a.cos(), r * a.sin());
        let clear = z.chunks_exact(2).all(|c| (c[0] - x).hypot(c[1] - y) > 0.05 * radius);
        if clear {
            z.push(x);
            z.push(y);
        }
    }
    z
}

fn run_start(p: &Problem, cfg: &OptimizerConfig, start: usize, radius: f64) -> StartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(start as u64);
    let z0 = sample_start(&mut rng, cfg.n, radius);
    let switch_tol = (1e3 * cfg.grad_tol).max(1e-7);
    let (z, it1) = bfgs(p, z0, cfg, switch_tol);
    let (z, it2) = newton_polish(p, z, cfg.grad_tol, 200);
    let mut g = vec![0.0; z.len()];
    p.energy.gradient(&z, &mut g);
    let grad_norm = norm(&g);
    let w = p.energy.value(&z);
    StartOutcome {
        is_minimum: is_local_minimum(p, &z),
        converged: grad_norm <= cfg.grad_tol,
        z,
        w,
        grad_norm,
        iterations: it1 + it2,
    }
}

fn polar_key(p: Point) -> (f64, f64) {
    let r = p.norm();
    if r < 1e-9 {
        return (0.0, r);
    }
    let mut a = p.y.atan2(p.x);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    // Angles within round-off of a full turn sort with zero.
    if 2.0 * PI - a < 1e-9 {
        a = 0.0;
    }
    (a, r)
}

fn sort_polar(points: &mut [Point]) {
    points.sort_by(|a, b| {
        let (aa, ar) = polar_key(*a);
        let (ba, br) = polar_key(*b);
        if (aa - ba).abs() > 1e-9 {
            aa.partial_cmp(&ba).unwrap_or(Ordering::Equal)
        } else {
            ar.partial_cmp(&br)
                .unwrap_or(Ordering::Equal)
                .then(a.x.partial_cmp(&b.x).unwrap_or(Ordering::Equal))
                .then(a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
        }
    });
}

/// Canonical form of a configuration.
///
/// For `λ = 1` the energy is rotation invariant, so the configuration is first
/// rotated to put its principal inertia axis along `x̃`; when the inertia
/// tensor is isotropic the outermost vortex (smallest angle on ties) is put
/// on the positive `x̃`-axis instead. For `λ < 1` no rotation is applied.
/// Positions are then sorted by (angle, radius).
pub fn canonicalize(points: &[Point], lambda: f64) -> Vec<Point> {
    let mut pts = points.to_vec();
    if lambda == 1.0 && pts.len() > 1 {
        let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
        for p in &pts {
            ixx += p.x * p.x;
            iyy += p.y * p.y;
            ixy += p.x * p.y;
        }
        let trace = ixx + iyy;
        let gap = ((ixx - iyy).powi(2) + 4.0 * ixy * ixy).sqrt();
        let theta = if gap > 1e-6 * trace {
            0.5 * (2.0 * ixy).atan2(ixx - iyy)
        } else {
            let rmax = pts.iter().map(|p| p.norm()).fold(0.0, f64::max);
            let mut outer: Vec<Point> = pts.iter().copied().filter(|p| p.norm() > rmax * (1.0 - 1e-7)).collect();
            sort_polar(&mut outer);
            outer[0].y.atan2(outer[0].x)
        };
        let (c, s) = (theta.cos(), theta.sin());
        for p in &mut pts {
            *p = Point::new(c * p.x + s * p.y, -s * p.x + c * p.y);
        }
    }
    sort_polar(&mut pts);
    pts
}

/// Symmetric Hausdorff distance in the max norm.
pub fn set_distance(a: &[Point], b: &[Point]) -> f64 {
    let one_way = |u: &[Point], v: &[Point]| {
        u.iter()
            .map(|p| v.iter().map(|q| (p.x - q.x).abs().max((p.y - q.y).abs())).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Distance between two configurations modulo the reflections `X → −X`,
/// `Y → −Y` under which the energy is invariant.
pub fn basin_distance(a: &[Point], b: &[Point]) -> f64 {
    [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
        .iter()
        .map(|&(sx, sy)| {
            let r: Vec<Point> = b.iter().map(|p| Point::new(sx * p.x, sy * p.y)).collect();
            set_distance(a, &r)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Residuals of the moment constraints obtained by contracting the
/// stationarity conditions with `(X_k, Y_k)` and with `(−λ⁻²Y_k, X_k)`:
///
/// ```text
/// r₁ = |Σr̃² − (1+λ²)/4·n(n−1)/2 − (1+λ²)/(4μ)·(s ln Ω/Ω^{s/2}) Σr̃^s|
/// r₂ = |(1−λ²)Σx̃ỹ − (1+λ²)/(4μ)·(s ln Ω/Ω^{s/2})(1−λ²) Σx̃ỹ r̃^{s−2}|
/// ```
pub fn check_constraints(points: &[Point], omega: f64, trap: &TrapParams) -> [f64; 2] {
    let n = points.len() as f64;
    let l2 = trap.lambda * trap.lambda;
    let (k, s) = match trap.s {
        Slope::Finite(s) => ((1.0 + l2) / (4.0 * trap.mu) * s * omega.ln() / omega.powf(0.5 * s), s),
        Slope::Flat => (0.0, 2.0),
    };
    let (mut r2, mut rs, mut xy, mut xyrs) = (0.0, 0.0, 0.0, 0.0);
    for p in points {
        let q = p.x * p.x + p.y * p.y;
        r2 += q;
        xy += p.x * p.y;
        if k != 0.0 {
            rs += q.powf(0.5 * s);
            xyrs += p.x * p.y * q.powf(0.5 * s - 1.0);
        }
    }
    let res1 = (r2 - 0.125 * (1.0 + l2) * n * (n - 1.0) - k * rs).abs();
    let res2 = ((1.0 - l2) * xy - k * (1.0 - l2) * xyrs).abs();
    [res1, res2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicReport {
    pub sum_x: f64,
    pub sum_y: f64,
    /// `Σx̃ỹ`; only constrained when `λ ≠ 1`.
    pub sum_xy: Option<f64>,
    /// `max(|x̃₁+x̃₂|, |ỹ₁+ỹ₂|)` for two vortices.
    pub antipodal_residual: Option<f64>,
    /// Largest of the above.
    pub max_residual: f64,
}

impl HarmonicReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// First-moment identities of harmonic-trap minimizers.
pub fn harmonic_special_checks(points: &[Point], trap: &TrapParams) -> Result<HarmonicReport> {
    if !trap.s.is_harmonic() {
        return Err(Error::domain("harmonic checks need s = 2"));
    }
    let sum_x: f64 = points.iter().map(|p| p.x).sum();
    let sum_y: f64 = points.iter().map(|p| p.y).sum();
    let sum_xy = (trap.lambda != 1.0).then(|| points.iter().map(|p| p.x * p.y).sum::<f64>());
    let antipodal_residual = (points.len() == 2)
        .then(|| (points[0].x + points[1].x).abs().max((points[0].y + points[1].y).abs()));
    let max_residual = [Some(sum_x.abs()), Some(sum_y.abs()), sum_xy.map(f64::abs), antipodal_residual]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    Ok(HarmonicReport { sum_x, sum_y, sum_xy, antipodal_residual, max_residual })
}

/// Radius (tilde units) of the disc the multistart samples are drawn from.
fn start_radius(n: usize, trap: &TrapParams, omega: f64) -> f64 {
    let l2 = trap.lambda * trap.lambda;
    let natural = 1.5 * (n as f64 * (n as f64 - 1.0) * (1.0 + l2) / 8.0).sqrt().max(1.0);
    natural.min(0.9 * tilde_domain_radius2(trap, omega).sqrt())
}

/// Best local minimum of the renormalized energy over `opt.multistarts`
/// random starts.
///
/// If no start reaches `grad_tol`, the best iterate is returned with
/// `converged = false`.
pub fn minimize_pattern(opt: &OptimizerConfig, omega: f64, ctx: &ScalingContext) -> Result<PatternResult> {
    opt.validate()?;
    let trap = &ctx.trap;
    let energy = RenormalizedEnergy::new(trap, omega)?;
    let finish = |z: &[f64], w: f64, grad_norm: f64, basins: usize, converged: bool, iterations: usize| {
        let pts = canonicalize(&unflatten(z), trap.lambda);
        PatternResult {
            n: opt.n,
            omega,
            s: trap.s,
            lambda: trap.lambda,
            residuals: check_constraints(&pts, omega, trap),
            positions: pts.iter().map(|p| [p.x, p.y]).collect(),
            w_value: w,
            grad_norm,
            basin_count: basins,
            converged,
            iterations,
        }
    };
    if opt.n == 1 {
        return Ok(finish(&[0.0, 0.0], 0.0, 0.0, 1, true, 0));
    }
    let problem = Problem { energy, radius2: tilde_domain_radius2(trap, omega) };
    let radius = start_radius(opt.n, trap, omega);
    let outcomes: Vec<StartOutcome> = (0..opt.multistarts)
        .into_par_iter()
        .map(|k| run_start(&problem, opt, k, radius))
        .collect();

    let minima: Vec<&StartOutcome> = outcomes.iter().filter(|o| o.converged && o.is_minimum).collect();
    let mut basins: Vec<Vec<Point>> = Vec::new();
    for o in &minima {
        let c = canonicalize(&unflatten(&o.z), trap.lambda);
        if basins.iter().all(|b| basin_distance(b, &c) >= BASIN_TOL) {
            basins.push(c);
        }
    }
    let pick = |set: &[&StartOutcome]| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in set.iter().enumerate() {
            if best.map_or(true, |b| o.w < set[b].w) {
                best = Some(i);
            }
        }
        best
    };
    if let Some(b) = pick(&minima) {
        let o = minima[b];
        return Ok(finish(&o.z, o.w, o.grad_norm, basins.len(), true, o.iterations));
    }
    let all: Vec<&StartOutcome> = outcomes.iter().filter(|o| o.w.is_finite()).collect();
    let best = all
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.grad_norm.partial_cmp(&b.1.grad_norm).unwrap_or(Ordering::Equal))
        .map(|(i, _)| all[i])
        .ok_or_else(|| Error::NonConvergence { iterations: opt.max_iters, detail: "no finite iterate".into() })?;
    Ok(finish(&best.z, best.w, best.grad_norm, basins.len(), false, best.iterations))
}

/// Pairing of a predicted configuration with a measured one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionMatch {
    /// `(predicted index, measured index, distance)` in pairing order.
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_mismatch: f64,
    /// Rotation applied to the measured set (zero unless `λ = 1`).
    pub rotation: f64,
    /// Whether the measured set was reflected `Y → −Y` first.
    pub reflected_y: bool,
    pub reflected_x: bool,
    pub unmatched_predicted: usize,
    pub unmatched_measured: usize,
}

/// Greedy nearest-neighbour pairing: the globally closest remaining pair is
/// matched first.
fn greedy_pairs(a: &[Point], b: &[Point]) -> Vec<(usize, usize, f64)> {
    let mut cand: Vec<(usize, usize, f64)> =
        a.iter().enumerate().flat_map(|(i, p)| b.iter().enumerate().map(move |(j, q)| (i, j, p.dist(*q)))).collect();
    cand.sort_by(|x, y| x.2.partial_cmp(&y.2).unwrap_or(Ordering::Equal).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    let (mut ua, mut ub) = (vec![false; a.len()], vec![false; b.len()]);
    let mut out = Vec::new();
    for (i, j, d) in cand {
        if !ua[i] && !ub[j] {
            ua[i] = true;
            ub[j] = true;
            out.push((i, j, d));
        }
    }
    out
}

fn transform(points: &[Point], angle: f64, sx: f64, sy: f64) -> Vec<Point> {
    let (c, s) = (angle.cos(), angle.sin());
    points
        .iter()
        .map(|p| {
            let (x, y) = (sx * p.x, sy * p.y);
            Point::new(c * x - s * y, s * x + c * y)
        })
        .collect()
}

/// Matches `measured` to `predicted` after aligning by the symmetries of the
/// energy: the reflections `X → −X`, `Y → −Y`, and for `λ = 1` any rotation.
/// The alignment minimizes the largest paired distance.
pub fn match_positions(predicted: &[Point], measured: &[Point], lambda: f64) -> PositionMatch {
    let cost = |angle: f64, sx: f64, sy: f64| {
        let m = transform(measured, angle, sx, sy);
        greedy_pairs(predicted, &m).iter().map(|p| p.2).fold(0.0, f64::max)
    };
    let reflections = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];
    let mut best = (f64::INFINITY, 0.0, 1.0, 1.0);
    for &(sx, sy) in &reflections {
        if lambda == 1.0 {
            const STEPS: usize = 720;
            let h = 2.0 * PI / STEPS as f64;
            for k in 0..STEPS {
                let a = k as f64 * h;
                let c = cost(a, sx, sy);
                if c < best.0 {
                    best = (c, a, sx, sy);
                }
            }
        } else {
            let c = cost(0.0, sx, sy);
            if c < best.0 {
                best = (c, 0.0, sx, sy);
            }
        }
    }
    if lambda == 1.0 {
        // Golden-section refinement around the best grid angle.
        let (_, a0, sx, sy) = best;
        let h = 2.0 * PI / 720.0;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (a0 - h, a0 + h);
        for _ in 0..60 {
            let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if cost(m1, sx, sy) < cost(m2, sx, sy) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let a = 0.5 * (lo + hi);
        let c = cost(a, sx, sy);
        if c < best.0 {
            best = (c, a, sx, sy);
        }
    }
    let (_, angle, sx, sy) = best;
    let aligned = transform(measured, angle, sx, sy);
    let pairs = greedy_pairs(predicted, &aligned);
    let max_mismatch = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    PositionMatch {
        unmatched_predicted: predicted.len() - pairs.len(),
        unmatched_measured: measured.len() - pairs.len(),
        pairs,
        max_mismatch,
        rotation: angle.rem_euclid(2.0 * PI),
        reflected_y: sy < 0.0,
        reflected_x: sx < 0.0,
    }
}
