//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::TAU;
use std::process::Command;
use std::time::Instant;

use becvortex_core::energetics::{renormalized_w, single_vortex_delta, tilde_transform, VortexConfig};
use becvortex_core::flow::{chi, chi_bound_check, chi_pde_residual};
use becvortex_core::gp::{
    density_comparison, nucleation_sweep, solve, tail_check, GridSpec, Seed, SolveOptions, TailBound,
};
use becvortex_core::ladder::{flat_vs_harmonic_ratio, omega_n, scale_omega, unscale_omega};
use becvortex_core::pattern::{
    check_constraints, grad_w, harmonic_special_checks, match_positions, minimize_pattern, OptimizerConfig,
};
use becvortex_core::trap::{normalization_mu, tf_normalization_residual};
use becvortex_core::{Point, ScalingContext, Slope, TrapParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLOPES: [Slope; 3] = [Slope::Finite(2.0), Slope::Finite(4.0), Slope::Flat];
const LAMBDAS: [f64; 3] = [1.0, 0.8, 0.5];

fn traps() -> impl Iterator<Item = TrapParams> {
    SLOPES.into_iter().flat_map(|s| LAMBDAS.into_iter().map(move |l| TrapParams::new(s, l).unwrap()))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Grid spacing for oracle solves: `ε/2.5`.
fn spec_for(ctx: &ScalingContext) -> GridSpec {
    GridSpec::for_spacing(ctx, ctx.epsilon / 2.5)
}

fn harmonic_ctx(eps: f64) -> ScalingContext {
    ScalingContext::with_default_delta(TrapParams::harmonic(1.0).unwrap(), eps).unwrap()
}

fn tf_normalization() -> Outcome {
    let mut worst = 0.0f64;
    let mut mu_gap = 0.0f64;
    for t in traps() {
        worst = worst.max(tf_normalization_residual(&t, 512).unwrap());
        let mu = normalization_mu(t.s, t.lambda, 512).unwrap();
        mu_gap = mu_gap.max((mu - t.mu).abs() / t.mu);
    }
    outcome(worst < 1e-6, format!("max |mass - 1| = {worst:.2e} over 9 traps at 512^2; bisection mu vs closed form {mu_gap:.2e}"))
}

fn chi_identities() -> Outcome {
    let mut boundary = 0.0f64;
    let mut order_ok = true;
    let mut orders = Vec::new();
    let mut equality_ok = true;
    for t in traps() {
        let scale = match t.s {
            Slope::Finite(s) => t.mu.powf((s + 2.0) / s),
            Slope::Flat => t.mu,
        };
        for k in 0..1000 {
            let p = t.boundary_point(TAU * k as f64 / 1000.0);
            boundary = boundary.max(chi(p, &t).abs() / scale);
        }
        let r: Vec<f64> = [128, 256, 512].iter().map(|&n| chi_pde_residual(&t, n, None).unwrap()).collect();
        if r[2] > 1e-9 {
            let o1 = (r[0] / r[1]).log2();
            let o2 = (r[1] / r[2]).log2();
            orders.push(o1.min(o2));
            order_ok &= o1 > 1.8 && o2 > 1.8;
        } else {
            // The flat-trap stream function is quadratic: the stencil is exact.
            order_ok &= r.iter().all(|&v| v < 1e-9);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut max_gap = 0.0f64;
        for _ in 0..500 {
            let p = t.boundary_point(rng.gen_range(0.0..TAU)).scaled(rng.gen::<f64>().sqrt() * 0.999);
            let b = chi_bound_check(p, &t);
            equality_ok &= b.holds;
            max_gap = max_gap.max((b.rhs - b.lhs).abs());
        }
        equality_ok &= if t.s.is_harmonic() { max_gap < 1e-10 } else { max_gap > 1e-10 };
    }
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        boundary < 1e-10 && order_ok && equality_ok,
        format!(
            "boundary |chi|/mu^((s+2)/s) <= {boundary:.1e}; PDE order >= {min_order:.2} (flat exact); bound equality only at s=2: {equality_ok}"
        ),
    )
}

fn threshold_algebra() -> Outcome {
    let eps = 0.01;
    let mut delta0 = 0.0f64;
    let mut spacing = 0.0f64;
    let mut round = 0.0f64;
    for t in traps() {
        let c = ScalingContext::with_default_delta(t, eps).unwrap();
        let o1 = omega_n(1, &c).unwrap();
        delta0 = delta0.max(single_vortex_delta(o1, &c).abs());
        for n in 1..6 {
            let gap = omega_n(n + 1, &c).unwrap() - omega_n(n, &c).unwrap();
            spacing = spacing.max((gap - c.c1() * c.loglog_eps()).abs() / gap);
        }
        for omega in [0.5, 7.0, 123.0] {
            round = round.max((scale_omega(unscale_omega(omega, &c), &c) - omega).abs() / omega);
        }
    }
    let mut ratio = 0.0f64;
    for l in LAMBDAS {
        let flat = ScalingContext::with_default_delta(TrapParams::flat(l).unwrap(), eps).unwrap();
        let harm = ScalingContext::with_default_delta(TrapParams::harmonic(l).unwrap(), eps).unwrap();
        let measured = unscale_omega(omega_n(1, &flat).unwrap(), &flat) / unscale_omega(omega_n(1, &harm).unwrap(), &harm);
        let predicted = flat_vs_harmonic_ratio(&harm).unwrap();
        ratio = ratio.max((measured - predicted).abs() / predicted);
    }
    outcome(
        delta0 < 1e-10 && spacing < 1e-12 && round < 1e-14 && ratio < 1e-12,
        format!("delta(Omega_1) {delta0:.1e}; spacing {spacing:.1e}; scale round trip {round:.1e}; flat/harmonic ratio {ratio:.1e}"),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let omega = 20.0;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for t in traps() {
        for n in [2, 3, 5] {
            for _ in 0..100 {
                let pts = loop {
                    let pts: Vec<Point> = (0..n)
                        .map(|_| {
                            let r = 1.5 * rng.gen::<f64>().sqrt();
                            let a = rng.gen_range(0.0..TAU);
                            Point::new(r * a.cos(), r * a.sin())
                        })
                        .collect();
                    if pts.iter().enumerate().all(|(i, p)| pts[..i].iter().all(|q| p.dist(*q) > 0.15)) {
                        break pts;
                    }
                };
                let c = VortexConfig::unit(pts.clone()).unwrap();
                let g = grad_w(&c, omega, &t).unwrap();
                let w_at = |p: Vec<Point>| renormalized_w(&VortexConfig::unit(p).unwrap(), omega, &t).unwrap();
                let mut err = 0.0f64;
                for k in 0..n {
                    for axis in 0..2 {
                        let mut plus = pts.clone();
                        let mut minus = pts.clone();
                        if axis == 0 {
                            plus[k].x += h;
                            minus[k].x -= h;
                        } else {
                            plus[k].y += h;
                            minus[k].y -= h;
                        }
                        let fd = (w_at(plus) - w_at(minus)) / (2.0 * h);
                        err = err.max((g[2 * k + axis] - fd).abs());
                    }
                }
                let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
                worst = worst.max(err / scale);
            }
        }
    }
    outcome(worst < 1e-6, format!("max relative error {worst:.2e} over 2700 configurations"))
}

fn pattern_stationarity() -> Outcome {
    let mut stat = 0.0f64;
    let mut harmonic = 0.0f64;
    let mut all_converged = true;
    for t in traps() {
        let c = ScalingContext::with_default_delta(t, 0.01).unwrap();
        for n in 2..=6 {
            let r = minimize_pattern(&OptimizerConfig::new(n), 50.0, &c).unwrap();
            all_converged &= r.converged;
            let pts = r.points();
            let norm = pts.iter().map(|p| p.x * p.x + p.y * p.y).sum::<f64>().max(1.0);
            let res = check_constraints(&pts, 50.0, &t);
            stat = stat.max(res[0].max(res[1]) / norm).max(r.grad_norm / norm.sqrt());
            if t.s.is_harmonic() {
                harmonic = harmonic.max(harmonic_special_checks(&pts, &t).unwrap().max_residual);
            }
        }
    }
    let mut slopes = Vec::new();
    for (s, expo) in [(Slope::Finite(2.0), 1.0), (Slope::Finite(4.0), 2.0)] {
        let c = ScalingContext::with_default_delta(TrapParams::new(s, 1.0).unwrap(), 0.01).unwrap();
        let omegas = [1e2, 1e3, 1e4];
        let r: Vec<f64> = omegas
            .iter()
            .map(|&o| {
                let p = minimize_pattern(&OptimizerConfig::new(3), o, &c).unwrap().points();
                (p.iter().map(|q| q.x * q.x + q.y * q.y).sum::<f64>() - 1.5).abs() / o.ln()
            })
            .collect();
        let slope = (r[2].ln() - r[0].ln()) / (omegas[2].ln() - omegas[0].ln());
        slopes.push((slope, expo));
    }
    let slope_ok = slopes.iter().all(|&(sl, e)| (sl + e).abs() <= 0.2 * e);
    outcome(
        all_converged && stat < 1e-6 && harmonic < 1e-6 && slope_ok,
        format!(
            "scaled stationarity residual {stat:.1e}; harmonic identities {harmonic:.1e}; collapse slopes {:.3} (s=2), {:.3} (s=4)",
            slopes[0].0, slopes[1].0
        ),
    )
}

struct VortexFreeRun {
    eps: f64,
    l2: f64,
    pointwise: f64,
    tail: f64,
}

fn vortex_free_runs() -> Vec<VortexFreeRun> {
    [0.1, 0.05, 0.025]
        .iter()
        .map(|&eps| {
            let c = harmonic_ctx(eps);
            let sol = solve(&spec_for(&c), &c, 0.0, &SolveOptions::default()).unwrap();
            let d = density_comparison(&sol.grid);
            VortexFreeRun { eps, l2: d.l2_distance, pointwise: d.pointwise_max, tail: tail_check(&sol.grid) }
        })
        .collect()
}

fn density_convergence(runs: &[VortexFreeRun]) -> Outcome {
    let l2_ok = runs.windows(2).all(|w| w[1].l2 < w[0].l2);
    let pw_ok = runs.windows(2).all(|w| w[1].pointwise < w[0].pointwise);
    let text: Vec<String> = runs.iter().map(|r| format!("eps {}: l2 {:.3e}, pointwise {:.3e}", r.eps, r.l2, r.pointwise)).collect();
    outcome(l2_ok && pw_ok, text.join("; "))
}

fn tail_bound(runs: &[VortexFreeRun]) -> Outcome {
    let bound = TailBound::calibrate(runs[0].eps, runs[0].tail);
    let ok = runs[1..].iter().all(|r| bound.holds(r.eps, r.tail));
    let text: Vec<String> = runs[1..].iter().map(|r| format!("eps {}: {:.3e} <= {:.3e}", r.eps, r.tail, bound.bound(r.eps))).collect();
    outcome(ok, format!("C = {:.3e}; {}", bound.constant, text.join("; ")))
}

fn nucleation_trend() -> Outcome {
    let mut lines = Vec::new();
    let mut ratios = Vec::new();
    let mut origin_ok = true;
    for (eps, range, steps) in [(0.05, (3.0, 8.0), 8), (0.025, (4.5, 8.0), 7)] {
        let c = harmonic_ctx(eps);
        let spec = spec_for(&c);
        let r = nucleation_sweep(&c, range, steps, &spec, &SolveOptions::default()).unwrap();
        let h = 2.0 * spec.box_factor * c.trap.boundary_quad().sqrt() / (spec.nx + 1) as f64;
        let single = r.first_vortices.len() == 1 && r.first_vortices[0].winding == 1;
        let near = r.first_vortices.iter().all(|v| v.position.norm() <= 2.0 * h);
        origin_ok &= single && near;
        lines.push(format!("eps {eps}: Omega* {:.3}, ratio {:.3}", r.omega_star, r.ratio));
        ratios.push(r.ratio);
    }
    let c1 = harmonic_ctx(0.05).c1();
    let band = ratios[0] >= 0.5 * c1 && ratios[0] <= 2.0 * c1;
    let closer = (ratios[1] - c1).abs() < (ratios[0] - c1).abs();
    outcome(
        band && closer && origin_ok,
        format!("C1 {c1:.3}; {}; first vortex single, +1, at origin: {origin_ok}", lines.join("; ")),
    )
}

fn pattern_vs_oracle() -> Outcome {
    let c = harmonic_ctx(0.025);
    let omega = 0.5 * (omega_n(2, &c).unwrap() + omega_n(3, &c).unwrap());
    let opts = SolveOptions {
        seeds: vec![Seed { at: Point::new(0.25, 0.0), winding: 1 }, Seed { at: Point::new(-0.25, 0.0), winding: 1 }],
        ..SolveOptions::default()
    };
    let sol = solve(&spec_for(&c), &c, omega, &opts).unwrap();
    let raw: Vec<Point> = sol.report.vortices.iter().map(|v| v.position).collect();
    let measured = tilde_transform(&raw, omega, 1.0).unwrap();
    let predicted = minimize_pattern(&OptimizerConfig::new(2), omega, &c).unwrap().points();
    let m = match_positions(&predicted, &measured, 1.0);
    let complete = measured.len() == 2 && m.unmatched_predicted == 0 && sol.report.converged;
    outcome(
        complete && m.max_mismatch < 0.3,
        format!(
            "Omega {omega:.3}: {} detected, max mismatch {:.3} tilde units (predicted radius {:.3})",
            measured.len(),
            m.max_mismatch,
            predicted[0].norm()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_becvortex");
    let run = |args: &[&str]| Command::new(exe).args(args).output().unwrap();
    let gp_path = dir.path().join("gp.json");
    let pat_path = dir.path().join("pat.json");
    let gp = gp_path.to_str().unwrap();
    let pat = pat_path.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["tf", "--s", "4", "--lambda", "0.8", "--resolution", "128"],
        vec!["chi", "--s", "2", "--lambda", "0.5", "--x", "0.2", "--y", "0.4", "--omega", "3", "--resolution", "128"],
        vec!["ladder", "--s", "flat", "--lambda", "0.8", "--epsilon", "0.01", "--n-max", "5"],
        vec!["predict", "--epsilon", "0.05", "--omega", "9"],
        vec!["pattern", "--n", "6", "--omega", "80", "--lambda", "0.8", "--seed", "3"],
        vec!["pattern", "--n", "6", "--omega", "80", "--lambda", "0.8", "--seed", "3", "--format", "csv"],
        vec!["gp-solve", "--epsilon", "0.1", "--omega", "5", "--nx", "64", "--vortices", "0.2,0.1"],
        vec!["sweep", "--epsilon", "0.1", "--nx", "64", "--omega-min", "0", "--omega-max", "6", "--steps", "2"],
        vec!["gp-solve", "--epsilon", "0.1", "--omega", "6", "--nx", "64", "--vortices", "0.3,0;-0.3,0", "--output", gp],
        vec!["pattern", "--n", "2", "--omega", "6", "--epsilon", "0.1", "--output", pat],
        vec!["report", gp, pat],
    ];
    let mut mismatched = Vec::new();
    for args in &commands {
        let a = run(args);
        let first = if args.contains(&"--output") { std::fs::read(args.last().unwrap()).unwrap() } else { a.stdout.clone() };
        let b = run(args);
        let second = if args.contains(&"--output") { std::fs::read(args.last().unwrap()).unwrap() } else { b.stdout.clone() };
        if a.status.code() != Some(0) || b.status.code() != Some(0) || first != second || first.is_empty() {
            mismatched.push(args[0]);
        }
    }
    outcome(mismatched.is_empty(), format!("{} runs repeated; differing: {mismatched:?}", commands.len()))
}

fn main() {
    let mut failures = 0;
    let mut report = |index: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failures += 1;
        }
        println!("criterion {index:>2} [{name}]: {status} ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
    };
    report(1, "TF normalization", &mut tf_normalization);
    report(2, "chi identities", &mut chi_identities);
    report(3, "threshold algebra", &mut threshold_algebra);
    report(4, "gradient correctness", &mut gradient_check);
    report(5, "pattern stationarity", &mut pattern_stationarity);
    let runs = vortex_free_runs();
    report(6, "oracle density convergence", &mut || density_convergence(&runs));
    report(7, "oracle tail", &mut || tail_bound(&runs));
    report(8, "nucleation trend", &mut nucleation_trend);
    report(9, "pattern vs oracle", &mut pattern_vs_oracle);
    report(10, "determinism", &mut determinism);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
