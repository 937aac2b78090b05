//! Uniform grid discretization of the scaled GP functional
//!
//! ```text
//! E[u] = ∫ ½|(∇ − iΩ×r)u|² + |u|²(V + |u|²)/(4ε²) − ½Ω²r²|u|²
//! ```
//!
//! on the interior nodes of `[−L_x, L_x] × [−L_y, L_y]` with zero Dirichlet
//! data. The covariant derivative is discretized with link phases
//! `exp(−i h A)` so that the discrete functional is gauge covariant and
//! bounded below.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::phase_s;
use crate::ladder::ScalingContext;
use crate::trap::{Point, Slope};

pub const DEFAULT_BOX_FACTOR: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    /// Defaults to the value giving `h_y ≈ h_x`.
    pub ny: Option<usize>,
    /// Half-width of the box in units of the domain semi-axes, at least 1.5.
    pub box_factor: f64,
}

impl GridSpec {
    pub fn square(nx: usize) -> Self {
        GridSpec { nx, ny: None, box_factor: DEFAULT_BOX_FACTOR }
    }

    /// Smallest `nx` whose spacing does not exceed `h`, for the given trap.
    pub fn for_spacing(ctx: &ScalingContext, h: f64) -> Self {
        let lx = DEFAULT_BOX_FACTOR * ctx.trap.boundary_quad().sqrt();
        let nx = (2.0 * lx / h).ceil() as usize;
        Self::square(nx.max(8))
    }
}

/// A seeded phase singularity of winding `winding` at raw position `at`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub at: Point,
    pub winding: i32,
}

#[derive(Clone, Debug)]
pub struct GpGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
    pub ctx: ScalingContext,
    pub omega: f64,
    pub field: Vec<Complex64>,
    /// Trap potential per node; zero on masked nodes.
    pub(crate) potential: Vec<f64>,
    /// Nodes pinned to zero (outside the hard wall of the flat trap).
    pub(crate) masked: Vec<bool>,
    link_x: Vec<Complex64>,
    link_y: Vec<Complex64>,
}

impl GpGrid {
    pub fn new(spec: &GridSpec, ctx: &ScalingContext, omega: f64) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::domain(format!("omega must be finite and non-negative, got {omega}")));
        }
        if !(spec.box_factor >= DEFAULT_BOX_FACTOR) {
            return Err(Error::domain(format!(
                "box factor must be at least {DEFAULT_BOX_FACTOR}, got {}",
                spec.box_factor
            )));
        }
        if spec.nx < 8 {
            return Err(Error::domain(format!("nx must be at least 8, got {}", spec.nx)));
        }
        let trap = ctx.trap;
        let lx = spec.box_factor * trap.boundary_quad().sqrt();
        let ly = lx / trap.lambda;
        let hx = 2.0 * lx / (spec.nx + 1) as f64;
        let ny = match spec.ny {
            Some(ny) if ny >= 8 => ny,
            Some(ny) => return Err(Error::domain(format!("ny must be at least 8, got {ny}"))),
            None => ((2.0 * ly / hx).round() as usize).saturating_sub(1).max(8),
        };
        let hy = 2.0 * ly / (ny + 1) as f64;
        let required = 0.5 * ctx.epsilon;
        if hx.max(hy) > required {
            return Err(Error::GridTooCoarse { spacing: hx.max(hy), required });
        }
        let nx = spec.nx;
        let mut potential = vec![0.0; nx * ny];
        let mut masked = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = Point::new(-lx + (i + 1) as f64 * hx, -ly + (j + 1) as f64 * hy);
                let k = j * nx + i;
                match trap.s {
                    Slope::Flat => masked[k] = !trap.contains(p),
                    Slope::Finite(_) => potential[k] = trap.potential(p),
                }
            }
        }
        let link_x = (0..ny)
            .map(|j| Complex64::from_polar(1.0, omega * (-ly + (j + 1) as f64 * hy) * hx))
            .collect();
        let link_y = (0..nx)
            .map(|i| Complex64::from_polar(1.0, -omega * (-lx + (i + 1) as f64 * hx) * hy))
            .collect();
        Ok(GpGrid {
            nx,
            ny,
            lx,
            ly,
            hx,
            hy,
            ctx: *ctx,
            omega,
            field: vec![Complex64::new(0.0, 0.0); nx * ny],
            potential,
            masked,
            link_x,
            link_y,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(-self.lx + (i + 1) as f64 * self.hx, -self.ly + (j + 1) as f64 * self.hy)
    }

    pub fn is_masked(&self, k: usize) -> bool {
        self.masked[k]
    }

    /// `√ρ^TF · e^{iS}` times the seeded singularities
    /// `((z − z_k)/√(|z − z_k|² + ε²))^{d_k}`, normalized.
    pub fn initialize(&mut self, seeds: &[Seed]) -> Result<()> {
        let trap = self.ctx.trap;
        let eps = self.ctx.epsilon;
        for s in seeds {
            if !trap.contains(s.at) {
                return Err(Error::domain(format!(
                    "seed at ({}, {}) lies outside the Thomas-Fermi domain",
                    s.at.x, s.at.y
                )));
            }
            if s.winding == 0 {
                return Err(Error::domain("seed winding must be nonzero"));
            }
        }
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.nx + i;
                let p = self.node(i, j);
                if self.masked[k] {
                    self.field[k] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let mut v = Complex64::from_polar(trap.tf_density(p).sqrt(), phase_s(p, trap.lambda, self.omega));
                for s in seeds {
                    let z = Complex64::new(p.x - s.at.x, p.y - s.at.y);
                    let f = z / (z.norm_sqr() + eps * eps).sqrt();
                    let f = if s.winding > 0 { f } else { f.conj() };
                    v *= f.powi(s.winding.abs());
                }
                self.field[k] = v;
            }
        }
        self.normalize()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.field) * self.cell_area()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::domain("field has zero or non-finite norm"));
        }
        let inv = 1.0 / n.sqrt();
        for v in &mut self.field {
            *v *= inv;
        }
        Ok(())
    }

    #[inline]
    fn at(&self, u: &[Complex64], i: isize, j: isize) -> Complex64 {
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            Complex64::new(0.0, 0.0)
        } else {
            u[j as usize * self.nx + i as usize]
        }
    }

    /// Quadratic and quartic energy of one node: its potential terms plus
    /// its right and upper links (and the links to the ghost nodes on the
    /// lower and left edges).
    #[inline]
    fn node_parts(&self, u: &[Complex64], i: usize, j: usize) -> (f64, f64) {
        let k = j * self.nx + i;
        let c = u[k];
        let (ii, jj) = (i as isize, j as isize);
        let wx = self.link_x[j] * self.at(u, ii + 1, jj) - c;
        let wy = self.link_y[i] * self.at(u, ii, jj + 1) - c;
        let mut kin = wx.norm_sqr() / (2.0 * self.hx * self.hx) + wy.norm_sqr() / (2.0 * self.hy * self.hy);
        let a = c.norm_sqr();
        if i == 0 {
            kin += a / (2.0 * self.hx * self.hx);
        }
        if j == 0 {
            kin += a / (2.0 * self.hy * self.hy);
        }
        let p = self.node(i, j);
        let eps2 = self.ctx.epsilon * self.ctx.epsilon;
        let quad = kin + a * self.potential[k] / (4.0 * eps2) - 0.5 * self.omega * self.omega * (p.x * p.x + p.y * p.y) * a;
        (quad, a * a / (4.0 * eps2))
    }

    /// Quadratic part `K` and quartic part `Q` of the energy, `E = K + Q`.
    pub fn energy_parts_of(&self, u: &[Complex64]) -> (f64, f64) {
        let (mut kq, mut qq) = (0.0, 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (a, b) = self.node_parts(u, i, j);
                kq += a;
                qq += b;
            }
        }
        (kq * self.cell_area(), qq * self.cell_area())
    }

    pub fn energy_of(&self, u: &[Complex64]) -> f64 {
        let (k, q) = self.energy_parts_of(u);
        k + q
    }

    pub fn energy(&self) -> f64 {
        self.energy_of(&self.field)
    }

    /// `(K[a] − K[b], Q[a] − Q[b])` accumulated from node-local differences,
    /// which keeps the result accurate when the two fields are close.
    pub fn parts_difference(&self, a: &[Complex64], b: &[Complex64]) -> (f64, f64) {
        let (mut dk, mut dq) = (0.0, 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (ka, qa) = self.node_parts(a, i, j);
                let (kb, qb) = self.node_parts(b, i, j);
                dk += ka - kb;
                dq += qa - qb;
            }
        }
        (dk * self.cell_area(), dq * self.cell_area())
    }

    pub fn energy_difference(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let (dk, dq) = self.parts_difference(a, b);
        dk + dq
    }

    /// `(1/(4ε²)) Σ |u|⁴ h_x h_y`.
    pub fn quartic_term(&self) -> f64 {
        let eps2 = self.ctx.epsilon * self.ctx.epsilon;
        self.field.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * self.cell_area() / (4.0 * eps2)
    }

    /// The GP operator `G` with `δE = 2 Re⟨G, δu⟩`:
    /// `−½Δ_A u + u(V + 2|u|²)/(4ε²) − ½Ω²r²u`. Zero on masked nodes.
    pub fn gradient_of(&self, u: &[Complex64], out: &mut [Complex64]) {
        let eps2 = self.ctx.epsilon * self.ctx.epsilon;
        let cx = 1.0 / (2.0 * self.hx * self.hx);
        let cy = 1.0 / (2.0 * self.hy * self.hy);
        for j in 0..self.ny {
            let ax = self.link_x[j];
            for i in 0..self.nx {
                let k = j * self.nx + i;
                if self.masked[k] {
                    out[k] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let ay = self.link_y[i];
                let (ii, jj) = (i as isize, j as isize);
                let c = u[k];
                let lap_x = 2.0 * c - ax * self.at(u, ii + 1, jj) - ax.conj() * self.at(u, ii - 1, jj);
                let lap_y = 2.0 * c - ay * self.at(u, ii, jj + 1) - ay.conj() * self.at(u, ii, jj - 1);
                let p = self.node(i, j);
                let local = (self.potential[k] + 2.0 * c.norm_sqr()) / (4.0 * eps2)
                    - 0.5 * self.omega * self.omega * (p.x * p.x + p.y * p.y);
                out[k] = cx * lap_x + cy * lap_y + local * c;
            }
        }
    }

    /// `μ_GP = ⟨u, G u⟩`.
    pub fn chemical_potential(&self) -> f64 {
        let mut g = vec![Complex64::new(0.0, 0.0); self.len()];
        self.gradient_of(&self.field, &mut g);
        inner(&self.field, &g) * self.cell_area()
    }

    /// Weighted L² norm of `G − ⟨u,G⟩u`.
    pub fn projected_gradient_norm(&self) -> f64 {
        let mut g = vec![Complex64::new(0.0, 0.0); self.len()];
        self.gradient_of(&self.field, &mut g);
        let mu = inner(&self.field, &g) * self.cell_area();
        let r: f64 = g.iter().zip(&self.field).map(|(a, b)| (a - mu * b).norm_sqr()).sum();
        (r * self.cell_area()).sqrt()
    }

    /// Copy of the field rotated by `angle` about the origin, bilinearly
    /// interpolated. Only meaningful for `λ = 1`.
    pub fn rotated_field(&self, angle: f64) -> Vec<Complex64> {
        let (c, s) = (angle.cos(), angle.sin());
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.node(i, j);
                // Value at p of the rotated field is the original at R⁻¹p.
                let q = Point::new(c * p.x + s * p.y, -s * p.x + c * p.y);
                out[j * self.nx + i] = self.interpolate(q);
            }
        }
        out
    }

    /// Bilinear interpolation with zero outside the node lattice.
    pub fn interpolate(&self, p: Point) -> Complex64 {
        let fx = (p.x + self.lx) / self.hx - 1.0;
        let fy = (p.y + self.ly) / self.hy - 1.0;
        let (i0, j0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - i0, fy - j0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let u = &self.field;
        self.at(u, i0, j0) * ((1.0 - tx) * (1.0 - ty))
            + self.at(u, i0 + 1, j0) * (tx * (1.0 - ty))
            + self.at(u, i0, j0 + 1) * ((1.0 - tx) * ty)
            + self.at(u, i0 + 1, j0 + 1) * (tx * ty)
    }
}

pub(crate) fn norm_sq(u: &[Complex64]) -> f64 {
    compensated_sum(u.iter().map(|v| v.norm_sqr()))
}

/// Neumaier summation. Renormalization must not inject more round-off than
/// the energy decrease of a nearly converged step.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `Re Σ conj(a) b` without the cell area.
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}
