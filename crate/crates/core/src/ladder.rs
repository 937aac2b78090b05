//! Critical angular velocities `Ω_n = C₁(|ln ε| + (n−1) ln|ln ε|)`, the
//! conversion between scaled and laboratory angular velocities, and the
//! vortex-count prediction with its `δ`-windows.
//!
//! Predictions are leading order only: the additive constants that the
//! asymptotic analysis leaves undetermined are not modelled, and the
//! transition bands around each `Ω_n` mark where the count is indeterminate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trap::{Slope, TrapParams};

pub const DEFAULT_DELTA: f64 = 0.1;

/// Coupling `ε`, stability margin `δ` and the trap they apply to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingContext {
    pub epsilon: f64,
    pub delta: f64,
    pub trap: TrapParams,
}

impl ScalingContext {
    /// Requires `ε ∈ (0, 1/e)` so that `ln|ln ε| > 0`, and `δ ∈ (0, ½)`.
    pub fn new(trap: TrapParams, epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < (-1.0f64).exp()) {
            return Err(Error::domain(format!(
                "epsilon must lie in (0, 1/e) so that ln|ln eps| > 0, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::domain(format!("delta must lie in (0, 0.5), got {delta}")));
        }
        Ok(ScalingContext { epsilon, delta, trap })
    }

    pub fn with_default_delta(trap: TrapParams, epsilon: f64) -> Result<Self> {
        Self::new(trap, epsilon, DEFAULT_DELTA)
    }

    /// `|ln ε|`.
    pub fn log_eps(&self) -> f64 {
        self.epsilon.ln().abs()
    }

    /// `ln|ln ε|`, the ladder spacing in units of `C₁`.
    pub fn loglog_eps(&self) -> f64 {
        self.log_eps().ln()
    }

    pub fn c1(&self) -> f64 {
        c1(&self.trap)
    }

    /// Half-width `C₁ δ ln|ln ε|` of the transition bands.
    pub fn band_half_width(&self) -> f64 {
        self.c1() * self.delta * self.loglog_eps()
    }
}

/// `g = √(8π) ħ² a / (m h)` and `ε = (ħ² / (√(2π) N g m))^{1/2}`.
pub fn epsilon_from_physical(n_particles: f64, scattering_length: f64, thickness: f64, hbar: f64, mass: f64) -> Result<f64> {
    let inputs = [
        ("particle count", n_particles),
        ("scattering length", scattering_length),
        ("slab thickness", thickness),
        ("hbar", hbar),
        ("mass", mass),
    ];
    for (name, v) in inputs {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let g = (8.0 * PI).sqrt() * hbar * hbar * scattering_length / (mass * thickness);
    Ok(epsilon_from_coupling(n_particles * g, hbar, mass))
}

/// `ε` from the combination `N g` directly.
pub fn epsilon_from_coupling(n_times_g: f64, hbar: f64, mass: f64) -> f64 {
    (hbar * hbar / ((2.0 * PI).sqrt() * n_times_g * mass)).sqrt()
}

/// `C₁ = (s+2)/(s μ^{2/s}) · (1+λ²)/2`; equal to `(1+λ²)/2` for the flat trap.
pub fn c1(trap: &TrapParams) -> f64 {
    let half = 0.5 * (1.0 + trap.lambda * trap.lambda);
    half / (trap.s.ratio() * trap.boundary_quad())
}

pub fn omega_n(n: usize, ctx: &ScalingContext) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("vortex count n must be at least 1"));
    }
    Ok(ctx.c1() * (ctx.log_eps() + (n - 1) as f64 * ctx.loglog_eps()))
}

/// Angular velocity below which no vortex is locally stable at the origin of
/// the harmonic trap: `Ω₁/2 = (1+λ²)/(2μ) |ln ε|`. `None` for other slopes.
pub fn local_stability_threshold(ctx: &ScalingContext) -> Option<f64> {
    if !ctx.trap.s.is_harmonic() {
        return None;
    }
    let t = &ctx.trap;
    Some((1.0 + t.lambda * t.lambda) / (2.0 * t.mu) * ctx.log_eps())
}

/// `(16 ε⁴)^{1/(s+2)}`, the factor between laboratory and scaled angular
/// velocities; one for the flat trap.
pub fn omega_scale_factor(epsilon: f64, slope: Slope) -> f64 {
    match slope {
        Slope::Finite(s) => (16.0 * epsilon.powi(4)).powf(1.0 / (s + 2.0)),
        Slope::Flat => 1.0,
    }
}

/// Scaled angular velocity → laboratory angular velocity.
pub fn unscale_omega(omega_scaled: f64, ctx: &ScalingContext) -> f64 {
    omega_scaled * omega_scale_factor(ctx.epsilon, ctx.trap.s)
}

/// Laboratory angular velocity → scaled angular velocity.
pub fn scale_omega(omega_lab: f64, ctx: &ScalingContext) -> f64 {
    omega_lab / omega_scale_factor(ctx.epsilon, ctx.trap.s)
}

/// Ratio of the laboratory first critical velocities of the flat and the
/// harmonic trap (same `λ`, same `ε`): `μ_harmonic / (4ε)`.
pub fn flat_vs_harmonic_ratio(ctx: &ScalingContext) -> Result<f64> {
    let harmonic = TrapParams::harmonic(ctx.trap.lambda)?;
    Ok(harmonic.mu / (4.0 * ctx.epsilon))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaLadder {
    pub c1: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `Ω_1 … Ω_{n_max}`.
    pub omega_n: Vec<f64>,
    /// `Ω₁/2` for the harmonic trap.
    pub local_stability: Option<f64>,
}

impl OmegaLadder {
    pub fn new(ctx: &ScalingContext, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::domain("n_max must be at least 1"));
        }
        let omega_n = (1..=n_max).map(|n| omega_n(n, ctx)).collect::<Result<Vec<_>>>()?;
        Ok(OmegaLadder {
            c1: ctx.c1(),
            epsilon: ctx.epsilon,
            delta: ctx.delta,
            omega_n,
            local_stability: local_stability_threshold(ctx),
        })
    }
}

/// Predicted equilibrium vortex count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VortexCountPrediction {
    Count { n: usize },
    /// Inside the excluded window around `Ω_{upper}`: either `lower` or `upper`.
    TransitionBand { lower: usize, upper: usize },
}

impl VortexCountPrediction {
    /// Position on the step ladder `0, (0|1), 1, (1|2), 2, …`.
    pub fn rank(&self) -> usize {
        match *self {
            VortexCountPrediction::Count { n } => 2 * n,
            VortexCountPrediction::TransitionBand { lower, .. } => 2 * lower + 1,
        }
    }

    pub fn count(&self) -> Option<usize> {
        match *self {
            VortexCountPrediction::Count { n } => Some(n),
            VortexCountPrediction::TransitionBand { .. } => None,
        }
    }
}

/// Writing `Ω = Ω₁ + C₁ ν ln|ln ε|`, the count is `n` when
/// `n − 1 + δ ≤ ν ≤ n − δ`, zero when `ν ≤ −δ`, and indeterminate within `δ`
/// of an integer `ν = m` (the band between `m` and `m + 1` vortices).
pub fn predict_vortex_count(omega_scaled: f64, ctx: &ScalingContext) -> VortexCountPrediction {
    let nu = (omega_scaled - ctx.c1() * ctx.log_eps()) / (ctx.c1() * ctx.loglog_eps());
    let delta = ctx.delta;
    if nu <= -delta {
        return VortexCountPrediction::Count { n: 0 };
    }
    let nearest = nu.round();
    if (nu - nearest).abs() < delta {
        let lower = nearest.max(0.0) as usize;
        return VortexCountPrediction::TransitionBand { lower, upper: lower + 1 };
    }
    VortexCountPrediction::Count { n: nu.floor() as usize + 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx(eps: f64) -> ScalingContext {
        ScalingContext::with_default_delta(TrapParams::harmonic(1.0).unwrap(), eps).unwrap()
    }

    #[test]
    fn epsilon_guard() {
        let t = TrapParams::harmonic(1.0).unwrap();
        assert!(ScalingContext::new(t, 0.5, 0.1).is_err());
        assert!(ScalingContext::new(t, (-1.0f64).exp(), 0.1).is_err());
        assert!(ScalingContext::new(t, 0.0, 0.1).is_err());
        assert!(ScalingContext::new(t, 0.1, 0.5).is_err());
        assert!(ScalingContext::new(t, 0.1, 0.1).is_ok());
    }

    #[test]
    fn physical_epsilon() {
        let ng = 1.0 / (2.0 * PI).sqrt();
        assert_relative_eq!(epsilon_from_coupling(ng, 1.0, 1.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(epsilon_from_coupling(1e4 * ng, 1.0, 1.0), 0.01, max_relative = 1e-14);
        let e1 = epsilon_from_physical(1e4, 1e-3, 0.1, 1.0, 1.0).unwrap();
        let e2 = epsilon_from_physical(2e4, 1e-3, 0.1, 1.0, 1.0).unwrap();
        assert_relative_eq!(e2 * e2, e1 * e1 / 2.0, max_relative = 1e-14);
        assert!(epsilon_from_physical(-1.0, 1e-3, 0.1, 1.0, 1.0).is_err());
        assert!(epsilon_from_physical(1e4, 0.0, 0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn c1_values() {
        let h = TrapParams::harmonic(1.0).unwrap();
        assert_relative_eq!(c1(&h), 2.0 / h.mu, max_relative = 1e-15);
        assert_eq!(c1(&TrapParams::flat(1.0).unwrap()), 1.0);
        let thin: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&l| c1(&TrapParams::new(Slope::Finite(4.0), l).unwrap()))
            .collect();
        assert!(thin[0] < thin[1] && thin[1] < thin[2] && thin[2] > 50.0, "{thin:?}");
    }

    #[test]
    fn ladder_arithmetic() {
        let c = ScalingContext::with_default_delta(TrapParams::flat(1.0).unwrap(), (-10.0f64).exp()).unwrap();
        assert_relative_eq!(omega_n(3, &c).unwrap(), 10.0 + 2.0 * 10f64.ln(), max_relative = 1e-14);
        assert!(omega_n(0, &c).is_err());
        let c = ctx(0.01);
        let gap = omega_n(2, &c).unwrap() - omega_n(1, &c).unwrap();
        assert_relative_eq!(gap, c.c1() * c.loglog_eps(), max_relative = 1e-13);
        assert_relative_eq!(omega_n(1, &c).unwrap(), c.c1() * c.log_eps());
    }

    #[test]
    fn scale_factors() {
        let c = ctx(0.03);
        assert_relative_eq!(unscale_omega(1.0, &c), 2.0 * 0.03, max_relative = 1e-14);
        let flat = ScalingContext::with_default_delta(TrapParams::flat(0.7).unwrap(), 0.03).unwrap();
        assert_eq!(unscale_omega(5.0, &flat), 5.0);
    }

    #[test]
    fn ratio_examples() {
        let c = ctx(0.01);
        let mu = TrapParams::harmonic(1.0).unwrap().mu;
        assert_relative_eq!(flat_vs_harmonic_ratio(&c).unwrap(), 25.0 * mu, max_relative = 1e-14);
        let c = ctx(mu / 4.0);
        assert_relative_eq!(flat_vs_harmonic_ratio(&c).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn local_threshold_is_half_of_first_critical() {
        let c = ScalingContext::with_default_delta(TrapParams::harmonic(0.6).unwrap(), 0.02).unwrap();
        let half = local_stability_threshold(&c).unwrap();
        assert_relative_eq!(2.0 * half, omega_n(1, &c).unwrap(), max_relative = 1e-14);
        let quartic = ScalingContext::with_default_delta(TrapParams::new(Slope::Finite(4.0), 0.6).unwrap(), 0.02).unwrap();
        assert!(local_stability_threshold(&quartic).is_none());
    }

    #[test]
    fn prediction_examples() {
        let c = ctx(0.01);
        let o1 = omega_n(1, &c).unwrap();
        let o2 = omega_n(2, &c).unwrap();
        assert_eq!(predict_vortex_count(0.0, &c), VortexCountPrediction::Count { n: 0 });
        assert_eq!(predict_vortex_count(0.5 * (o1 + o2), &c), VortexCountPrediction::Count { n: 1 });
        assert_eq!(
            predict_vortex_count(o2, &c),
            VortexCountPrediction::TransitionBand { lower: 1, upper: 2 }
        );
        assert_eq!(
            predict_vortex_count(o1, &c),
            VortexCountPrediction::TransitionBand { lower: 0, upper: 1 }
        );
    }
}
