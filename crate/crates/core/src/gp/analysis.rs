//! Comparisons of converged grid states with Thomas–Fermi predictions, and
//! the nucleation sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::DetectedVortex;
use super::grid::{GpGrid, GridSpec, Seed};
use super::solver::{solve, Solution, SolveOptions};
use crate::error::{Error, Result};
use crate::ladder::{omega_n, ScalingContext};
use crate::trap::Point;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityComparison {
    /// `Σ(|u|² − ρ^TF)² h_x h_y` over the box.
    pub l2_distance: f64,
    /// `max ||u| − √ρ^TF| / √ρ^TF` over the nodes of `D^in`.
    pub pointwise_max: f64,
}

pub fn density_comparison(grid: &GpGrid) -> DensityComparison {
    let trap = grid.ctx.trap;
    let inner = trap.domain_for_epsilon(grid.ctx.epsilon);
    let (mut l2, mut worst) = (0.0, 0.0f64);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.node(i, j);
            let amp = grid.field[j * grid.nx + i].norm();
            let rho = trap.tf_density(p);
            l2 += (amp * amp - rho).powi(2);
            if inner.contains_inner(p) && rho > 0.0 {
                worst = worst.max((amp - rho.sqrt()).abs() / rho.sqrt());
            }
        }
    }
    DensityComparison { l2_distance: l2 * grid.cell_area(), pointwise_max: worst }
}

/// `max |u|²` over `{V > μ + ε^{1/3}}`; zero if no node lies there.
pub fn tail_check(grid: &GpGrid) -> f64 {
    let trap = grid.ctx.trap;
    let cut = trap.mu + grid.ctx.epsilon.cbrt();
    let mut worst = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if trap.potential(grid.node(i, j)) > cut {
                worst = worst.max(grid.field[j * grid.nx + i].norm_sqr());
            }
        }
    }
    worst
}

/// `ε^{1/6} |ln ε|^{1/2}`.
pub fn tail_shape(epsilon: f64) -> f64 {
    epsilon.powf(1.0 / 6.0) * epsilon.ln().abs().sqrt()
}

/// Bound `C ε^{1/6} |ln ε|^{1/2}` with `C` fixed by one calibration run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub constant: f64,
    pub calibration_epsilon: f64,
}

impl TailBound {
    pub fn calibrate(epsilon: f64, measured: f64) -> Self {
        TailBound { constant: measured / tail_shape(epsilon), calibration_epsilon: epsilon }
    }

    pub fn bound(&self, epsilon: f64) -> f64 {
        self.constant * tail_shape(epsilon)
    }

    pub fn holds(&self, epsilon: f64, measured: f64) -> bool {
        measured <= self.bound(epsilon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub vortex_count: usize,
    pub total_winding: i64,
    pub energy: f64,
    pub converged: bool,
    pub vortices: Vec<DetectedVortex>,
}

/// Lowest-energy state at `omega` among the vortex-free start and the starts
/// in `extra_seeds`.
pub fn ground_state(
    spec: &GridSpec,
    ctx: &ScalingContext,
    omega: f64,
    opts: &SolveOptions,
    extra_seeds: &[Vec<Seed>],
) -> Result<Solution> {
    let mut starts = vec![Vec::new()];
    starts.extend(extra_seeds.iter().cloned());
    let solutions: Vec<Result<Solution>> = starts
        .into_par_iter()
        .map(|seeds| {
            let o = SolveOptions { seeds, ..opts.clone() };
            solve(spec, ctx, omega, &o)
        })
        .collect();
    let mut best: Option<Solution> = None;
    for s in solutions {
        let s = s?;
        if best.as_ref().map_or(true, |b| s.report.energy < b.report.energy) {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one start"))
}

fn sweep_point(sol: &Solution) -> SweepPoint {
    SweepPoint {
        omega: sol.report.omega,
        vortex_count: sol.report.vortices.len(),
        total_winding: sol.report.total_winding(),
        energy: sol.report.energy,
        converged: sol.report.converged,
        vortices: sol.report.vortices.clone(),
    }
}

fn nucleation_seeds() -> Vec<Vec<Seed>> {
    vec![vec![Seed { at: Point::ORIGIN, winding: 1 }]]
}

/// Ground states at each of `omegas`, computed concurrently.
pub fn scan(spec: &GridSpec, ctx: &ScalingContext, omegas: &[f64], opts: &SolveOptions) -> Result<Vec<SweepPoint>> {
    omegas
        .par_iter()
        .map(|&o| ground_state(spec, ctx, o, opts, &nucleation_seeds()).map(|s| sweep_point(&s)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NucleationResult {
    pub epsilon: f64,
    /// Midpoint of the final bracket.
    pub omega_star: f64,
    pub lower: f64,
    pub upper: f64,
    /// `Ω*/|ln ε|`, to be compared with `c1`.
    pub ratio: f64,
    pub c1: f64,
    pub omega_1: f64,
    /// Vortices of the ground state at `upper`.
    pub first_vortices: Vec<DetectedVortex>,
    pub evaluations: Vec<SweepPoint>,
}

/// Bisection on `Ω` for the first ground state with a detected vortex.
pub fn nucleation_sweep(
    ctx: &ScalingContext,
    omega_range: (f64, f64),
    steps: usize,
    spec: &GridSpec,
    opts: &SolveOptions,
) -> Result<NucleationResult> {
    let (mut lo, mut hi) = omega_range;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::domain(format!("invalid omega range [{lo}, {hi}]")));
    }
    let seeds = nucleation_seeds();
    let eval = |o: f64| ground_state(spec, ctx, o, opts, &seeds).map(|s| sweep_point(&s));
    let (a, b) = rayon::join(|| eval(lo), || eval(hi));
    let (a, b) = (a?, b?);
    if a.vortex_count != 0 || b.vortex_count == 0 {
        return Err(Error::domain(format!(
            "omega range [{lo}, {hi}] does not bracket the nucleation: {} and {} vortices at the ends",
            a.vortex_count, b.vortex_count
        )));
    }
    let mut first = b.vortices.clone();
    let mut evaluations = vec![a, b];
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let pt = eval(mid)?;
        if pt.vortex_count == 0 {
            lo = mid;
        } else {
            hi = mid;
            first = pt.vortices.clone();
        }
        evaluations.push(pt);
    }
    let omega_star = 0.5 * (lo + hi);
    Ok(NucleationResult {
        epsilon: ctx.epsilon,
        omega_star,
        lower: lo,
        upper: hi,
        ratio: omega_star / ctx.log_eps(),
        c1: ctx.c1(),
        omega_1: omega_n(1, ctx)?,
        first_vortices: first,
        evaluations,
    })
}
