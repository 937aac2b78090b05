//! Phase-winding detection of vortices on the grid.
//!
//! A plaquette is scanned only when its four corners lie in
//! `D^in = {V ≤ μ − ε^{1/3}}`. Its winding is the sum of principal-branch
//! phase differences around the four edges divided by 2π. Flagged
//! plaquettes that touch (8-connectivity) are merged into one vortex.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GpGrid;
use crate::trap::{Point, TfDomain};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedVortex {
    pub position: Point,
    pub winding: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub vortices: Vec<DetectedVortex>,
    /// Circulation around the boundary of the scanned region, in units of 2π.
    pub boundary_winding: i64,
}

#[inline]
fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

struct Lattice<'a> {
    u: &'a [Complex64],
    nx: usize,
    hx: f64,
    hy: f64,
    x0: f64,
    y0: f64,
}

impl Lattice<'_> {
    fn value(&self, i: usize, j: usize) -> Complex64 {
        self.u[j * self.nx + i]
    }

    /// Counter-clockwise corner sequence of plaquette `(i, j)`.
    fn corners(&self, i: usize, j: usize) -> [Complex64; 4] {
        [self.value(i, j), self.value(i + 1, j), self.value(i + 1, j + 1), self.value(i, j + 1)]
    }

    fn winding(&self, i: usize, j: usize) -> i32 {
        let c = self.corners(i, j);
        let total: f64 = (0..4).map(|k| phase_step(c[k], c[(k + 1) % 4])).sum();
        (total / (2.0 * PI)).round() as i32
    }

    fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy)
    }

    /// Zero of the bilinear interpolant in plaquette `(i, j)` by Newton's
    /// method, falling back to the inverse-amplitude-weighted corner centroid.
    fn locate(&self, i: usize, j: usize) -> Point {
        let [c00, c10, c11, c01] = self.corners(i, j);
        let a = c00;
        let b = c10 - c00;
        let c = c01 - c00;
        let d = c11 - c10 - c01 + c00;
        let (mut s, mut t) = (0.5, 0.5);
        for _ in 0..30 {
            let f = a + b * s + c * t + d * s * t;
            let fs = b + d * t;
            let ft = c + d * s;
            let det = fs.re * ft.im - fs.im * ft.re;
            if det.abs() < 1e-300 {
                break;
            }
            let ds = (f.re * ft.im - f.im * ft.re) / det;
            let dt = (fs.re * f.im - fs.im * f.re) / det;
            s -= ds;
            t -= dt;
            if ds.abs() + dt.abs() < 1e-13 {
                break;
            }
        }
        let f = a + b * s + c * t + d * s * t;
        let scale = c00.norm().max(c10.norm()).max(c11.norm()).max(c01.norm());
        if (-0.25..=1.25).contains(&s) && (-0.25..=1.25).contains(&t) && f.norm() <= 1e-8 * scale {
            let o = self.node(i, j);
            return Point::new(o.x + s * self.hx, o.y + t * self.hy);
        }
        let offsets = [(0, 0), (1, 0), (1, 1), (0, 1)];
        let (mut wx, mut wy, mut ws) = (0.0, 0.0, 0.0);
        for (k, &(di, dj)) in offsets.iter().enumerate() {
            let w = 1.0 / ([c00, c10, c11, c01][k].norm() + 1e-300);
            let p = self.node(i + di, j + dj);
            wx += w * p.x;
            wy += w * p.y;
            ws += w;
        }
        Point::new(wx / ws, wy / ws)
    }
}

/// Scans the plaquettes inside `domain`'s inner region.
pub fn detect_in(u: &[Complex64], grid: &GpGrid, domain: &TfDomain) -> Detection {
    let (nx, ny) = (grid.nx, grid.ny);
    let first = grid.node(0, 0);
    let lat = Lattice { u, nx, hx: grid.hx, hy: grid.hy, x0: first.x, y0: first.y };
    let inner: Vec<bool> = (0..nx * ny).map(|k| domain.contains_inner(grid.node(k % nx, k / nx))).collect();
    let (px, py) = (nx - 1, ny - 1);
    let scanned: Vec<bool> = (0..px * py)
        .map(|q| {
            let (i, j) = (q % px, q / px);
            inner[j * nx + i] && inner[j * nx + i + 1] && inner[(j + 1) * nx + i] && inner[(j + 1) * nx + i + 1]
        })
        .collect();
    let winding: Vec<i32> = (0..px * py)
        .map(|q| if scanned[q] { lat.winding(q % px, q / px) } else { 0 })
        .collect();

    // Boundary circulation: edges of scanned plaquettes whose neighbour
    // across the edge is not scanned, traversed counter-clockwise.
    let is_scanned = |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < px && (j as usize) < py && scanned[j as usize * px + i as usize];
    let mut circulation = 0.0;
    for j in 0..py {
        for i in 0..px {
            if !scanned[j * px + i] {
                continue;
            }
            let c = lat.corners(i, j);
            let (ii, jj) = (i as isize, j as isize);
            let neighbours = [(ii, jj - 1), (ii + 1, jj), (ii, jj + 1), (ii - 1, jj)];
            for (k, &(ni, nj)) in neighbours.iter().enumerate() {
                if !is_scanned(ni, nj) {
                    circulation += phase_step(c[k], c[(k + 1) % 4]);
                }
            }
        }
    }
    let boundary_winding = (circulation / (2.0 * PI)).round() as i64;

    let mut label = vec![usize::MAX; px * py];
    let mut vortices = Vec::new();
    for start in 0..px * py {
        if winding[start] == 0 || label[start] != usize::MAX {
            continue;
        }
        let id = vortices.len();
        let mut stack = vec![start];
        label[start] = id;
        let (mut total, mut sx, mut sy, mut sw) = (0i32, 0.0, 0.0, 0.0);
        while let Some(q) = stack.pop() {
            let (i, j) = (q % px, q / px);
            let p = lat.locate(i, j);
            let w = winding[q].unsigned_abs() as f64;
            total += winding[q];
            sx += w * p.x;
            sy += w * p.y;
            sw += w;
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni as usize >= px || nj as usize >= py {
                        continue;
                    }
                    let nq = nj as usize * px + ni as usize;
                    if winding[nq] != 0 && label[nq] == usize::MAX {
                        label[nq] = id;
                        stack.push(nq);
                    }
                }
            }
        }
        vortices.push(DetectedVortex { position: Point::new(sx / sw, sy / sw), winding: total });
    }
    vortices.retain(|v| v.winding != 0);
    Detection { vortices, boundary_winding }
}

/// Detection on `D^in = {V ≤ μ − ε^{1/3}}`.
pub fn detect_vortices(grid: &GpGrid) -> Detection {
    let domain = grid.ctx.trap.domain_for_epsilon(grid.ctx.epsilon);
    detect_in(&grid.field, grid, &domain)
}
