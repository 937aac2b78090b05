//! Normalized, preconditioned gradient flow for the discrete GP functional.
//!
//! Each step moves along a Sobolev-preconditioned descent direction in the
//! tangent space of the unit sphere (optionally conjugated à la
//! Polak–Ribière), renormalizes, and is accepted only if the energy drops.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::detect::{detect_vortices, DetectedVortex};
use super::dst::SobolevPreconditioner;
use super::grid::{inner, norm_sq, GpGrid, GridSpec, Seed};
use crate::error::Result;
use crate::ladder::ScalingContext;
use crate::trap::Point;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Relative energy change over `energy_window` accepted steps.
    pub energy_tol: f64,
    pub energy_window: usize,
    /// Weighted L² norm of the projected gradient.
    pub grad_tol: f64,
    pub conjugate: bool,
    pub seeds: Vec<Seed>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 20_000,
            energy_tol: 1e-10,
            energy_window: 100,
            grad_tol: 1e-6,
            conjugate: true,
            seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    pub mu_gp: f64,
    pub vortices: Vec<DetectedVortex>,
    /// Phase circulation around the boundary of the detection region, in
    /// units of 2π.
    pub boundary_winding: i64,
    /// `Σ(|u|² − ρ^TF)² h_x h_y` over the box.
    pub l2_tf_distance: f64,
    /// `Σ_{outside D} |u|⁴ h_x h_y`.
    pub tail_mass: f64,
    pub projected_gradient: f64,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
    pub omega: f64,
    pub nx: usize,
    pub ny: usize,
}

impl SolveReport {
    pub fn total_winding(&self) -> i64 {
        self.vortices.iter().map(|v| v.winding as i64).sum()
    }
}

pub struct Solution {
    pub grid: GpGrid,
    pub report: SolveReport,
    /// Energy after every accepted step, starting with the initial state.
    pub energy_trace: Vec<f64>,
}

/// Builds the grid, seeds it and minimizes.
pub fn solve(spec: &GridSpec, ctx: &ScalingContext, omega: f64, opts: &SolveOptions) -> Result<Solution> {
    let mut grid = GpGrid::new(spec, ctx, omega)?;
    grid.initialize(&opts.seeds)?;
    minimize(grid, opts)
}

fn axpy(u: &[Complex64], p: &[Complex64], tau: f64, out: &mut Vec<Complex64>) {
    out.clear();
    out.extend(u.iter().zip(p).map(|(a, b)| a - tau * b));
}

/// Energy of `v/‖v‖` minus energy of `u/‖u‖`, from the scale-invariant form
/// `K/N + Q/N²` with `N = ‖·‖²`, written so that only small differences are
/// ever subtracted.
struct Rayleigh {
    n: f64,
    k: f64,
    q: f64,
}

impl Rayleigh {
    fn delta(&self, dk: f64, dq: f64, dn: f64) -> f64 {
        let nv = self.n + dn;
        (dk * self.n - self.k * dn) / (self.n * nv)
            + (dq * self.n * self.n - self.q * dn * (nv + self.n)) / (self.n * self.n * nv * nv)
    }
}

fn project_out(v: &mut [Complex64], u: &[Complex64], area: f64) {
    let c = inner(u, v) * area;
    for (a, b) in v.iter_mut().zip(u) {
        *a -= c * b;
    }
}

/// Energy changes below this fraction of `|E|` are at the round-off level;
/// the line search then switches to the directional derivative.
const NOISE_FLOOR: f64 = 1e-16;

fn residual_of(grid: &GpGrid, u: &[Complex64], g: &mut [Complex64], r: &mut [Complex64]) -> f64 {
    let area = grid.cell_area();
    grid.gradient_of(u, g);
    let mu = inner(u, g) * area;
    for k in 0..g.len() {
        r[k] = g[k] - mu * u[k];
    }
    (norm_sq(r) * area).sqrt()
}

fn normalize_in_place(u: &mut [Complex64], area: f64) {
    let inv = 1.0 / (norm_sq(u) * area).sqrt();
    for v in u.iter_mut() {
        *v *= inv;
    }
}

/// Minimizes from the grid's current field.
///
/// Convergence requires both the projected-gradient norm below
/// `grad_tol` and a relative energy change below `energy_tol` over the last
/// `energy_window` accepted steps. A run that can no longer find any
/// decrease while the gradient is below tolerance has a stationary energy
/// and also counts as converged.
pub fn minimize(mut grid: GpGrid, opts: &SolveOptions) -> Result<Solution> {
    grid.normalize()?;
    let n = grid.len();
    let area = grid.cell_area();
    let eps = grid.ctx.epsilon;
    let alpha = grid.ctx.trap.mu / (4.0 * eps * eps);
    let mut precond = SobolevPreconditioner::new(grid.nx, grid.ny, grid.hx, grid.hy, alpha);
    let zero = Complex64::new(0.0, 0.0);

    let mut g = vec![zero; n];
    let mut r = vec![zero; n];
    let mut g_trial = vec![zero; n];
    let mut r_trial = vec![zero; n];
    let mut z = vec![zero; n];
    let mut p = vec![zero; n];
    let mut r_prev = vec![zero; n];
    let mut rz_prev = 0.0;
    let mut trial = Vec::with_capacity(n);

    let mut energy = grid.energy();
    let mut trace = vec![energy];
    let mut tau = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut rnorm = residual_of(&grid, &grid.field, &mut g, &mut r);

    while iterations < opts.max_iters {
        let w = opts.energy_window;
        let flat = trace.len() > w && {
            let old = trace[trace.len() - 1 - w];
            (old - energy).abs() <= opts.energy_tol * energy.abs()
        };
        if rnorm < opts.grad_tol && flat {
            converged = true;
            break;
        }
        iterations += 1;

        z.copy_from_slice(&r);
        precond.apply(&mut z);
        for k in 0..n {
            if grid.is_masked(k) {
                z[k] = zero;
            }
        }
        project_out(&mut z, &grid.field, area);
        let rz = inner(&r, &z);
        let mut beta = 0.0;
        if opts.conjugate && rz_prev > 0.0 {
            beta = ((rz - inner(&r_prev, &z)) / rz_prev).max(0.0);
        }
        project_out(&mut p, &grid.field, area);
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        let mut slope = inner(&r, &p);
        if !(slope > 0.0) {
            p.copy_from_slice(&z);
            slope = rz;
        }
        if !(slope > 0.0) {
            converged = rnorm < opts.grad_tol;
            break;
        }
        // dE/dτ at τ = 0 along u − τp.
        let d0 = -2.0 * slope * area;

        let (k_u, q_u) = grid.energy_parts_of(&grid.field);
        let base = Rayleigh { n: norm_sq(&grid.field) * area, k: k_u, q: q_u };
        let up = inner(&grid.field, &p) * area;
        let pp = norm_sq(&p) * area;
        let noise = NOISE_FLOOR * energy.abs();
        let delta_at = |grid: &GpGrid, trial: &mut Vec<Complex64>, t: f64| -> f64 {
            axpy(&grid.field, &p, t, trial);
            let (dk, dq) = grid.parts_difference(trial, &grid.field);
            base.delta(dk, dq, t * t * pp - 2.0 * t * up)
        };

        // (step, energy change, residual already evaluated at the trial)
        let mut accepted: Option<(f64, f64, bool)> = None;
        let mut t = tau;
        let mut below_noise = false;
        for _ in 0..60 {
            let de = delta_at(&grid, &mut trial, t);
            if de.abs() < noise {
                below_noise = true;
                break;
            }
            if de < 0.0 {
                let mut best = (t, de);
                let curv = de - d0 * t;
                if curv > 0.0 {
                    let ts = -d0 * t * t / (2.0 * curv);
                    if ts > 0.2 * t && ts < 5.0 * t && (ts - t).abs() > 0.05 * t {
                        let de2 = delta_at(&grid, &mut trial, ts);
                        if de2 < de {
                            best = (ts, de2);
                        } else {
                            axpy(&grid.field, &p, t, &mut trial);
                        }
                    }
                }
                accepted = Some((best.0, best.1, false));
                break;
            }
            t *= 0.5;
        }
        if below_noise {
            // Energy differences are lost in round-off here; locate the line
            // minimum from the sign of the directional derivative instead.
            let slope_at = |t: f64, trial: &mut Vec<Complex64>, g: &mut [Complex64], r: &mut [Complex64]| {
                axpy(&grid.field, &p, t, trial);
                normalize_in_place(trial, area);
                residual_of(&grid, trial, g, r);
                -inner(r, &p)
            };
            let (mut lo, mut d_lo) = (0.0, -slope);
            let mut hi = t;
            let mut d_hi = slope_at(hi, &mut trial, &mut g_trial, &mut r_trial);
            for _ in 0..40 {
                if !(d_hi < 0.0) {
                    break;
                }
                (lo, d_lo) = (hi, d_hi);
                hi *= 2.0;
                d_hi = slope_at(hi, &mut trial, &mut g_trial, &mut r_trial);
            }
            let mut t_acc = hi;
            if d_hi.is_finite() && d_hi >= 0.0 {
                for _ in 0..8 {
                    t_acc = lo - d_lo * (hi - lo) / (d_hi - d_lo);
                    let d = slope_at(t_acc, &mut trial, &mut g_trial, &mut r_trial);
                    if d.abs() < 0.1 * slope {
                        break;
                    }
                    if d < 0.0 {
                        (lo, d_lo) = (t_acc, d);
                    } else {
                        (hi, d_hi) = (t_acc, d);
                    }
                }
            }
            if t_acc > 0.0 && t_acc.is_finite() {
                // Any computed change is round-off; the true change along a
                // descent direction up to the line minimum is negative.
                let de = delta_at(&grid, &mut Vec::with_capacity(n), t_acc).min(0.0);
                accepted = Some((t_acc, de, true));
            }
        }
        let Some((t_acc, de, have_residual)) = accepted else {
            // No usable decrease along this direction: restart from steepest
            // descent once, then stop.
            if rz_prev == 0.0 {
                converged = rnorm < opts.grad_tol;
                break;
            }
            rz_prev = 0.0;
            p.iter_mut().for_each(|v| *v = zero);
            continue;
        };
        std::mem::swap(&mut grid.field, &mut trial);
        normalize_in_place(&mut grid.field, area);
        energy += de;
        trace.push(energy);
        tau = (t_acc * 1.5).min(1e3);

        std::mem::swap(&mut r_prev, &mut r);
        rz_prev = rz;
        if have_residual {
            std::mem::swap(&mut g, &mut g_trial);
            std::mem::swap(&mut r, &mut r_trial);
            rnorm = (norm_sq(&r) * area).sqrt();
        } else {
            rnorm = residual_of(&grid, &grid.field, &mut g, &mut r);
        }
    }

    let report = build_report(&grid, iterations, converged, rnorm);
    Ok(Solution { grid, report, energy_trace: trace })
}

pub(crate) fn build_report(grid: &GpGrid, iterations: usize, converged: bool, projected_gradient: f64) -> SolveReport {
    let trap = grid.ctx.trap;
    let area = grid.cell_area();
    let (mut l2, mut tail) = (0.0, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p: Point = grid.node(i, j);
            let a = grid.field[j * grid.nx + i].norm_sqr();
            l2 += (a - trap.tf_density(p)).powi(2);
            if !trap.contains(p) {
                tail += a * a;
            }
        }
    }
    let detection = detect_vortices(grid);
    SolveReport {
        energy: grid.energy(),
        mu_gp: grid.chemical_potential(),
        vortices: detection.vortices,
        boundary_winding: detection.boundary_winding,
        l2_tf_distance: l2 * area,
        tail_mass: tail * area,
        projected_gradient,
        iterations,
        converged,
        epsilon: grid.ctx.epsilon,
        omega: grid.omega,
        nx: grid.nx,
        ny: grid.ny,
    }
}
