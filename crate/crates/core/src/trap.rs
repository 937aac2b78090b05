//! Anisotropic homogeneous trap `V(x, y) = (x² + λ²y²)^{s/2}` and the
//! Thomas–Fermi quantities derived from it.
//!
//! The chemical potential `μ` is fixed by normalizing the Thomas–Fermi
//! density `ρ = ½[μ − V]₊` to one. For this trap family the integral is
//! elementary and gives `μ = ((s+2)/s · 2λ/π)^{s/(s+2)}`; [`normalization_mu`]
//! recovers the same value by quadrature and bisection.

use std::f64::consts::PI;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cell count per axis for Thomas–Fermi quadrature.
pub const DEFAULT_QUADRATURE_RESOLUTION: usize = 512;

/// Smallest accepted quadrature resolution.
pub const MIN_QUADRATURE_RESOLUTION: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn scaled(self, gamma: f64) -> Self {
        Point::new(gamma * self.x, gamma * self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

/// Trap slope: a finite exponent `s ≥ 2`, or the flat-trap limit `s → ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slope {
    Finite(f64),
    Flat,
}

impl Slope {
    pub fn finite(self) -> Option<f64> {
        match self {
            Slope::Finite(s) => Some(s),
            Slope::Flat => None,
        }
    }

    pub fn is_harmonic(self) -> bool {
        self == Slope::Finite(2.0)
    }

    /// `s / (s + 2)`, tending to one for the flat trap.
    pub fn ratio(self) -> f64 {
        match self {
            Slope::Finite(s) => s / (s + 2.0),
            Slope::Flat => 1.0,
        }
    }

    /// `s` as a real number; `+∞` for the flat trap.
    pub fn as_f64(self) -> f64 {
        match self {
            Slope::Finite(s) => s,
            Slope::Flat => f64::INFINITY,
        }
    }

    pub fn from_f64(s: f64) -> Self {
        if s.is_infinite() && s > 0.0 {
            Slope::Flat
        } else {
            Slope::Finite(s)
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Finite(s) => write!(f, "{s}"),
            Slope::Flat => f.write_str("flat"),
        }
    }
}

impl std::str::FromStr for Slope {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.eq_ignore_ascii_case("flat") || text.eq_ignore_ascii_case("inf") {
            return Ok(Slope::Flat);
        }
        text.parse::<f64>()
            .map(Slope::from_f64)
            .map_err(|_| Error::domain(format!("slope must be a number or \"flat\", got {text:?}")))
    }
}

// Finite slopes serialize as numbers, the flat trap as the string "flat".
impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Slope::Finite(s) => serializer.serialize_f64(*s),
            Slope::Flat => serializer.serialize_str("flat"),
        }
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct SlopeVisitor;

        impl Visitor<'_> for SlopeVisitor {
            type Value = Slope;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or the string \"flat\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Slope, E> {
                Ok(Slope::Finite(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Slope, E> {
                Ok(Slope::Finite(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Slope, E> {
                Ok(Slope::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Slope, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(SlopeVisitor)
    }
}

/// Closed-form Thomas–Fermi chemical potential.
pub fn chemical_potential(slope: Slope, lambda: f64) -> Result<f64> {
    validate(slope, lambda)?;
    Ok(match slope {
        Slope::Finite(s) => ((s + 2.0) / s * 2.0 * lambda / PI).powf(s / (s + 2.0)),
        Slope::Flat => 2.0 * lambda / PI,
    })
}

fn validate(slope: Slope, lambda: f64) -> Result<()> {
    if let Slope::Finite(s) = slope {
        if !(s >= 2.0) || !s.is_finite() {
            return Err(Error::domain(format!("slope s must satisfy s >= 2, got {s}")));
        }
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::domain(format!("anisotropy lambda must lie in (0, 1], got {lambda}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    pub s: Slope,
    pub lambda: f64,
    /// Cached Thomas–Fermi chemical potential.
    pub mu: f64,
}

impl TrapParams {
    pub fn new(s: Slope, lambda: f64) -> Result<Self> {
        let mu = chemical_potential(s, lambda)?;
        Ok(TrapParams { s, lambda, mu })
    }

    pub fn harmonic(lambda: f64) -> Result<Self> {
        Self::new(Slope::Finite(2.0), lambda)
    }

    pub fn flat(lambda: f64) -> Result<Self> {
        Self::new(Slope::Flat, lambda)
    }

    /// `x² + λ²y²`.
    #[inline]
    pub fn quad(&self, p: Point) -> f64 {
        p.x * p.x + self.lambda * self.lambda * p.y * p.y
    }

    /// `μ^{2/s}`: the value of `x² + λ²y²` on the Thomas–Fermi boundary.
    pub fn boundary_quad(&self) -> f64 {
        match self.s {
            Slope::Finite(s) => self.mu.powf(2.0 / s),
            Slope::Flat => 1.0,
        }
    }

    /// `μ^{(s+2)/s}`.
    pub fn mu_pow_s2_over_s(&self) -> f64 {
        match self.s {
            Slope::Finite(s) => self.mu.powf((s + 2.0) / s),
            Slope::Flat => self.mu,
        }
    }

    /// Trap potential. For the flat trap this is zero inside the unit ellipse,
    /// `μ` on it and `+∞` outside.
    pub fn potential(&self, p: Point) -> f64 {
        let q = self.quad(p);
        match self.s {
            Slope::Finite(s) if s == 2.0 => q,
            Slope::Finite(s) => q.powf(0.5 * s),
            Slope::Flat => {
                if q < 1.0 {
                    0.0
                } else if q == 1.0 {
                    self.mu
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Signed density `½(μ − V)`; its positive part is the Thomas–Fermi density.
    pub fn b_function(&self, p: Point) -> f64 {
        0.5 * (self.mu - self.potential(p))
    }

    pub fn tf_density(&self, p: Point) -> f64 {
        self.b_function(p).max(0.0)
    }

    /// Strictly inside the Thomas–Fermi domain.
    pub fn contains(&self, p: Point) -> bool {
        self.quad(p) < self.boundary_quad()
    }

    pub fn domain(&self) -> TfDomain {
        TfDomain::new(self, 0.05 * self.mu)
    }

    /// Domain whose inner region is `V ≤ μ − ε^{1/3}`.
    pub fn domain_for_epsilon(&self, epsilon: f64) -> TfDomain {
        TfDomain::new(self, epsilon.cbrt())
    }

    /// Point on the Thomas–Fermi boundary at parameter angle `theta`.
    pub fn boundary_point(&self, theta: f64) -> Point {
        let a = self.boundary_quad().sqrt();
        Point::new(a * theta.cos(), a / self.lambda * theta.sin())
    }
}

/// Thomas–Fermi domain `D = {V < μ}`, an ellipse, together with the inner
/// region `D^in = {V ≤ μ − margin}` on which pointwise comparisons are made.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfDomain {
    pub semi_axis_x: f64,
    pub semi_axis_y: f64,
    pub inner_margin: f64,
    trap: TrapParams,
}

impl TfDomain {
    pub fn new(trap: &TrapParams, inner_margin: f64) -> Self {
        let a = trap.boundary_quad().sqrt();
        TfDomain {
            semi_axis_x: a,
            semi_axis_y: a / trap.lambda,
            inner_margin,
            trap: *trap,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.trap.contains(p)
    }

    /// Membership in `D^in`. For the flat trap `V` vanishes inside, so the
    /// inner region is the ellipse shrunk by the margin relative to `μ`.
    pub fn contains_inner(&self, p: Point) -> bool {
        match self.trap.s {
            Slope::Flat => {
                let shrink = (1.0 - self.inner_margin / self.trap.mu).max(0.0);
                self.trap.quad(p) <= shrink * shrink
            }
            Slope::Finite(_) => self.trap.potential(p) <= self.trap.mu - self.inner_margin,
        }
    }
}

/// Integrates `f` over the Thomas–Fermi domain on the bounding rectangle
/// `[−a, a] × [−b, b]` split into `resolution²` cells.
///
/// Cells entirely inside the ellipse use an `interior_sub × interior_sub`
/// midpoint sub-grid; cells straddling the boundary use a finer
/// `boundary_sub × boundary_sub` sub-grid, counting only samples inside `D`.
pub fn integrate_over_domain<F>(
    trap: &TrapParams,
    resolution: usize,
    interior_sub: usize,
    boundary_sub: usize,
    f: F,
) -> f64
where
    F: Fn(Point) -> f64,
{
    let dom = TfDomain::new(trap, 0.0);
    let edge = trap.boundary_quad();
    let lam2 = trap.lambda * trap.lambda;
    let hx = 2.0 * dom.semi_axis_x / resolution as f64;
    let hy = 2.0 * dom.semi_axis_y / resolution as f64;

    let sq_range = |lo: f64, hi: f64| -> (f64, f64) {
        let min = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { (lo * lo).min(hi * hi) };
        (min, (lo * lo).max(hi * hi))
    };

    let mut total = 0.0;
    for j in 0..resolution {
        let y0 = -dom.semi_axis_y + j as f64 * hy;
        let (ymin, ymax) = sq_range(y0, y0 + hy);
        let mut row = 0.0;
        for i in 0..resolution {
            let x0 = -dom.semi_axis_x + i as f64 * hx;
            let (xmin, xmax) = sq_range(x0, x0 + hx);
            let qmin = xmin + lam2 * ymin;
            let qmax = xmax + lam2 * ymax;
            if qmin >= edge {
                continue;
            }
            let (m, masked) = if qmax < edge { (interior_sub, false) } else { (boundary_sub, true) };
            let sx = hx / m as f64;
            let sy = hy / m as f64;
            let mut cell = 0.0;
            for b in 0..m {
                let y = y0 + (b as f64 + 0.5) * sy;
                for a in 0..m {
                    let p = Point::new(x0 + (a as f64 + 0.5) * sx, y);
                    if !masked || trap.quad(p) < edge {
                        cell += f(p);
                    }
                }
            }
            row += cell * sx * sy;
        }
        total += row;
    }
    total
}

/// `|∫_D ρ^TF − 1|` by quadrature on a `resolution²` grid.
pub fn tf_normalization_residual(trap: &TrapParams, resolution: usize) -> Result<f64> {
    if resolution < MIN_QUADRATURE_RESOLUTION {
        return Err(Error::domain(format!(
            "quadrature resolution must be at least {MIN_QUADRATURE_RESOLUTION}, got {resolution}"
        )));
    }
    let mass = integrate_over_domain(trap, resolution, 4, 64, |p| trap.tf_density(p));
    Ok((mass - 1.0).abs())
}

/// Chemical potential obtained directly from the normalization condition:
/// bisection on `μ` of the quadrature of `½[μ − V]₊`.
pub fn normalization_mu(s: Slope, lambda: f64, resolution: usize) -> Result<f64> {
    validate(s, lambda)?;
    let mass = |mu: f64| {
        let trial = TrapParams { s, lambda, mu };
        integrate_over_domain(&trial, resolution, 4, 64, |p| trial.tf_density(p))
    };
    let (mut lo, mut hi) = (1e-6, 1.0);
    while mass(hi) < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
