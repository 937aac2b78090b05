//! Stream function χ and vortex-free phase S of the rotating condensate.
//!
//! χ solves `∇·(∇χ/ρ) = −2` in the Thomas–Fermi domain with `χ = 0` on its
//! boundary, and together with S satisfies `ρ(∇S − Ω×r) = Ω∇^⊥χ`. Both are
//! evaluated in closed form; the finite-difference checks below only verify
//! the defining relations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trap::{Point, Slope, TrapParams};

/// Minimum number of grid nodes across the short axis of `D^in` for the
/// finite-difference checks.
pub const MIN_INTERIOR_NODES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    pub trap: TrapParams,
    /// Scaled angular velocity.
    pub omega: f64,
}

impl FlowField {
    pub fn new(trap: TrapParams, omega: f64) -> Self {
        FlowField { trap, omega }
    }

    pub fn chi(&self, p: Point) -> f64 {
        chi(p, &self.trap)
    }

    pub fn phase(&self, p: Point) -> f64 {
        phase_s(p, self.trap.lambda, self.omega)
    }

    /// Gradient of the phase.
    pub fn phase_gradient(&self, p: Point) -> Point {
        let k = anisotropy_factor(self.trap.lambda) * self.omega;
        Point::new(k * p.y, k * p.x)
    }
}

fn anisotropy_factor(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    (l2 - 1.0) / (l2 + 1.0)
}

/// Closed-form stream function. Outside the Thomas–Fermi domain the same
/// expression is returned; it has no physical meaning there.
pub fn chi(p: Point, trap: &TrapParams) -> f64 {
    let q = trap.quad(p);
    let inv = 1.0 / (1.0 + trap.lambda * trap.lambda);
    match trap.s {
        Slope::Finite(s) => {
            let lead = if s == 2.0 { q * q } else { q.powf(0.5 * (s + 2.0)) };
            inv * (lead / (s + 2.0) - 0.5 * trap.mu * q + s * trap.mu_pow_s2_over_s() / (2.0 * (s + 2.0)))
        }
        Slope::Flat => inv * 0.5 * trap.mu * (1.0 - q),
    }
}

/// Vortex-free phase `S = (λ²−1)/(λ²+1) · Ω x y`; independent of the slope.
pub fn phase_s(p: Point, lambda: f64, omega: f64) -> f64 {
    anisotropy_factor(lambda) * omega * p.x * p.y
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares χ with the bound `(1/(1+λ²)) · s 2^{2/s}/(s+2) · ρ^{(2+s)/s}`,
/// which is attained exactly by the harmonic trap.
pub fn chi_bound_check(p: Point, trap: &TrapParams) -> ChiBound {
    let lhs = chi(p, trap);
    let rho = trap.tf_density(p);
    let inv = 1.0 / (1.0 + trap.lambda * trap.lambda);
    let rhs = match trap.s {
        Slope::Finite(s) => inv * s * 2f64.powf(2.0 / s) / (s + 2.0) * rho.powf((2.0 + s) / s),
        Slope::Flat => inv * rho,
    };
    ChiBound { lhs, rhs, holds: lhs <= rhs + 1e-12 }
}

/// Node grid over the bounding box of `D`, restricted to nodes that lie in
/// `D^in` together with their four neighbours.
struct InteriorGrid {
    n: usize,
    hx: f64,
    hy: f64,
    x0: f64,
    y0: f64,
}

impl InteriorGrid {
    fn lattice(trap: &TrapParams, resolution: usize) -> Self {
        let dom = trap.domain();
        InteriorGrid {
            n: resolution + 1,
            hx: 2.0 * dom.semi_axis_x / resolution as f64,
            hy: 2.0 * dom.semi_axis_y / resolution as f64,
            x0: -dom.semi_axis_x,
            y0: -dom.semi_axis_y,
        }
    }

    fn new(trap: &TrapParams, resolution: usize, margin: f64) -> Result<Self> {
        let grid = Self::lattice(trap, resolution);
        let inner = crate::trap::TfDomain::new(trap, margin);
        let across = (0..grid.n)
            .filter(|&i| inner.contains_inner(Point::new(grid.x0 + i as f64 * grid.hx, 0.0)))
            .count();
        if across < MIN_INTERIOR_NODES {
            return Err(Error::domain(format!(
                "resolution {resolution} leaves only {across} interior nodes across the short axis \
                 (need at least {MIN_INTERIOR_NODES})"
            )));
        }
        Ok(grid)
    }

    fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy)
    }

    fn interior_nodes<'a>(&'a self, trap: &'a TrapParams, margin: f64) -> impl Iterator<Item = (usize, usize)> + 'a {
        let inner = crate::trap::TfDomain::new(trap, margin);
        (1..self.n - 1)
            .flat_map(move |j| (1..self.n - 1).map(move |i| (i, j)))
            .filter(move |&(i, j)| {
                [(i, j), (i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
                    .iter()
                    .all(|&(a, b)| inner.contains_inner(self.point(a, b)))
            })
    }
}

fn default_margin(trap: &TrapParams, margin: Option<f64>) -> f64 {
    margin.unwrap_or(0.05 * trap.mu)
}

/// Sample points of [`chi_pde_residual`]: the nodes of this many intervals
/// per axis whose stencil at that spacing stays in `D^in`.
pub const PDE_SAMPLE_INTERVALS: usize = 32;

/// Maximum of `|∇·(∇χ/ρ) + 2|` over a fixed set of sample points, using the
/// conservative five-point stencil with face-averaged `1/ρ` and spacing
/// `2a/resolution` per axis (`a` the semi-axis). The samples do not move
/// with `resolution`, so successive values expose the order of the stencil.
/// `margin` defaults to `0.05μ`.
pub fn chi_pde_residual(trap: &TrapParams, resolution: usize, margin: Option<f64>) -> Result<f64> {
    let margin = default_margin(trap, margin);
    let grid = InteriorGrid::new(trap, resolution, margin)?;
    let samples = InteriorGrid::lattice(trap, PDE_SAMPLE_INTERVALS);
    let (hx, hy) = (grid.hx, grid.hy);
    let inv_rho = |p: Point| 1.0 / trap.tf_density(p);

    let mut worst = 0.0f64;
    for (i, j) in samples.interior_nodes(trap, margin) {
        let p = samples.point(i, j);
        let c = chi(p, trap);
        let k = inv_rho(p);
        let flux = |q: Point| (chi(q, trap) - c) * 0.5 * (k + inv_rho(q));
        let div = (flux(Point::new(p.x + hx, p.y)) + flux(Point::new(p.x - hx, p.y))) / (hx * hx)
            + (flux(Point::new(p.x, p.y + hy)) + flux(Point::new(p.x, p.y - hy))) / (hy * hy);
        worst = worst.max((div + 2.0).abs());
    }
    Ok(worst)
}

/// Maximum componentwise mismatch of `ρ(∇S − Ω×r) = Ω∇^⊥χ` on interior
/// nodes, with centred differences for both gradients.
pub fn flow_relation_residual(field: &FlowField, resolution: usize, margin: Option<f64>) -> Result<f64> {
    let trap = &field.trap;
    let margin = default_margin(trap, margin);
    let grid = InteriorGrid::new(trap, resolution, margin)?;
    let omega = field.omega;
    let s_at = |i: usize, j: usize| field.phase(grid.point(i, j));
    let chi_at = |i: usize, j: usize| chi(grid.point(i, j), trap);

    let mut worst = 0.0f64;
    for (i, j) in grid.interior_nodes(trap, margin) {
        let p = grid.point(i, j);
        let rho = trap.tf_density(p);
        let sx = (s_at(i + 1, j) - s_at(i - 1, j)) / (2.0 * grid.hx);
        let sy = (s_at(i, j + 1) - s_at(i, j - 1)) / (2.0 * grid.hy);
        let cx = (chi_at(i + 1, j) - chi_at(i - 1, j)) / (2.0 * grid.hx);
        let cy = (chi_at(i, j + 1) - chi_at(i, j - 1)) / (2.0 * grid.hy);
        // Ω×r = Ω(−y, x), ∇^⊥χ = (−∂yχ, ∂xχ).
        let lhs_x = rho * (sx + omega * p.y);
        let lhs_y = rho * (sy - omega * p.x);
        let rhs_x = -omega * cy;
        let rhs_y = omega * cx;
        worst = worst.max((lhs_x - rhs_x).abs()).max((lhs_y - rhs_y).abs());
    }
    Ok(worst)
}
