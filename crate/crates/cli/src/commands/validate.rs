//! Cross-module property suites.

use kawasaki_core::hierarchy::{
    apply_ldelta, integrate, series_horizon, taylor_semigroup_step, ClosureKind, ClosureRule,
    CorrelationField, FieldMode, Generator, MasterState,
};
use kawasaki_core::kmc::detailed_balance_probe;
use kawasaki_core::output::fmt_f64;
use kawasaki_core::scheduler::{delta_theta, horizon_t, lambert_w0, ScaleParams};
use kawasaki_core::{KernelFamily, KernelSpec, LatticeKernels, Occupancy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;

use super::upper_scale;
use crate::artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteResult {
    fn at_most(name: &'static str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            pass: measured <= tolerance,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }

    fn errored(name: &'static str, err: impl std::fmt::Display) -> Self {
        Self {
            name,
            pass: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
            detail: err.to_string(),
        }
    }
}

fn or_error(name: &'static str, r: CliResult<SuiteResult>) -> SuiteResult {
    r.unwrap_or_else(|e| SuiteResult::errored(name, e))
}

pub fn detailed_balance(spec: &KernelSpec, seed: u64) -> SuiteResult {
    let worst = (1..=6u64)
        .map(|n| detailed_balance_probe(100, n as usize, spec, seed.wrapping_add(n)))
        .fold(0.0, f64::max);
    SuiteResult::at_most(
        "detailed-balance",
        worst,
        1e-12,
        format!("max |log-ratio| over N = 1..6 (exclude_self_term = {})", spec.exclude_self_term),
    )
}

pub fn poisson_invariance(cfg: &RunConfig) -> CliResult<SuiteResult> {
    let free = KernelSpec::new(cfg.kernels.jump, KernelFamily::zero(), cfg.domain.dim)?
        .with_exclude_self_term(cfg.kernels.exclude_self_term);
    let lk = LatticeKernels::new(cfg.lattice_kernels()?.lattice, &free)?;
    let rule = cfg.closure()?;
    let kappa = cfg.initial.intensity;
    let mut worst: f64 = 0.0;
    for qy in 1..=2 {
        let f = CorrelationField::poisson(lk.lattice, FieldMode::Invariant, rule, qy, kappa)?;
        worst = worst.max(apply_ldelta(&f, &lk)?.max_abs());
    }
    Ok(SuiteResult::at_most(
        "poisson-invariance",
        worst,
        1e-12,
        format!("max |L k| for k = {kappa}^n with the repulsion switched off"),
    ))
}

/// `a` and `φ` tabulated on the lattice must be even under `s -> -s`.
pub fn kernel_symmetry(lk: &LatticeKernels) -> SuiteResult {
    let lat = &lk.lattice;
    let worst = (0..lat.n_sites())
        .map(|s| {
            let m = lat.neg(s);
            (lk.jump_weight[s] - lk.jump_weight[m])
                .abs()
                .max((lk.phi[s] - lk.phi[m]).abs())
        })
        .fold(0.0, f64::max);
    SuiteResult::at_most("kernel-symmetry", worst, 0.0, "max |f(s) - f(-s)| over a and phi")
}

/// Two particles with multiple occupancy: the hierarchy is exact.
pub fn master_oracle(lk: &LatticeKernels) -> CliResult<SuiteResult> {
    let rule = ClosureRule::new(ClosureKind::ZeroTail, 2)?;
    let t_end = 0.5;
    let mut ms = MasterState::new(lk, Occupancy::Multi, 2)?;
    ms.set_point_mass(&[0, 1])?;
    let start = ms.correlations(rule, 1)?;
    let tr = integrate(&start, lk, 0.0, t_end, 0.005, Generator::Ldelta, 1e12)?;
    ms.evolve(t_end)?;
    let exact = ms.correlations(rule, 1)?;
    let scale = exact.max_abs();
    let diff = exact
        .data()
        .iter()
        .zip(tr.fields.last().expect("nonempty").data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SuiteResult::at_most(
        "master-oracle",
        diff / scale,
        1e-9,
        format!("hierarchy vs master equation, N = 2, t = {t_end}"),
    ))
}

pub fn gibbs_and_conservation(lk: &LatticeKernels) -> CliResult<[SuiteResult; 2]> {
    let mut ms = MasterState::new(lk, Occupancy::Exclusion, 2)?;
    let pi = ms.stationary()?;
    let gibbs = ms.gibbs_weights();
    let gap = pi.iter().zip(&gibbs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ms.set_point_mass(&[0, 1])?;
    let mut drift = ms.rhs().iter().sum::<f64>().abs();
    ms.evolve(1.0)?;
    drift = drift.max(ms.rhs().iter().sum::<f64>().abs());
    Ok([
        SuiteResult::at_most("gibbs-stationarity", gap, 1e-10, "stationary law vs e^{-E}/Z, N = 2"),
        SuiteResult::at_most("probability-conservation", drift, 1e-14, "|sum of master rhs|"),
    ])
}

pub fn lambert_residual(rng: &mut ChaCha8Rng) -> CliResult<SuiteResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = 10f64.powf(rng.random_range(-12.0..12.0));
        let w = lambert_w0(x)?;
        worst = worst.max((w * w.exp() - x).abs() / x);
    }
    Ok(SuiteResult::at_most("lambert-w", worst, 1e-14, "relative residual of w e^w = x"))
}

pub fn scheduler_argmax(rng: &mut ChaCha8Rng) -> CliResult<SuiteResult> {
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = ScaleParams::new(rng.random_range(0.1..5.0), rng.random_range(0.1..5.0), 1.0, 0.1)?;
        let theta = rng.random_range(-3.0..3.0);
        let delta = delta_theta(theta, &p);
        let n = (3.0 * delta / step).ceil() as usize;
        let mut best = (f64::NEG_INFINITY, theta);
        for j in 1..=n {
            let high = theta + j as f64 * step;
            let v = horizon_t(high, theta, &p)?;
            if v > best.0 {
                best = (v, high);
            }
        }
        worst = worst.max((best.1 - theta - delta).abs());
    }
    Ok(SuiteResult::at_most("scheduler-argmax", worst, 1e-4, "grid argmax vs theta + delta(theta)"))
}

fn scale_pair(lk: &LatticeKernels, c: f64, epsilon: f64) -> CliResult<(ScaleParams, f64, f64)> {
    let p = ScaleParams::new(lk.alpha, lk.mean_phi, c, epsilon)?;
    let low = c.ln();
    Ok((p, low, upper_scale(low, 1.0, &p)))
}

/// `S(s1 + s2) k` against `S(s2) S(s1) k` through an intermediate scale.
pub fn composition(cfg: &RunConfig, lk: &LatticeKernels) -> CliResult<SuiteResult> {
    let start = cfg.initial_field(lk.lattice)?;
    let order = cfg.hierarchy.taylor_order;
    let (_, low, high) = scale_pair(lk, cfg.initial.intensity, cfg.scheduler.epsilon)?;
    let mid = 0.5 * (low + high);
    let g = Generator::Ldelta;
    let s1 = 0.25 * series_horizon(lk, g, low, mid)?;
    let s2 = 0.25 * series_horizon(lk, g, mid, high)?;
    let whole = taylor_semigroup_step(&start, lk, s1 + s2, order, g, low, high)?;
    let first = taylor_semigroup_step(&start, lk, s1, order, g, low, mid)?;
    let second = taylor_semigroup_step(&first.field, lk, s2, order, g, mid, high)?;
    let mut gap = whole.field.clone();
    gap.axpy(-1.0, &second.field);
    let tol = whole.last_term + first.last_term + second.last_term + 1e-12 * whole.field.scale_norm(high);
    Ok(SuiteResult::at_most(
        "semigroup-composition",
        gap.scale_norm(high),
        tol,
        "norm of S(s1+s2)k - S(s2)S(s1)k against the truncation diagnostics",
    ))
}

/// Field-norm amplification of one series step stays below `T/(T − t)`.
pub fn amplification(cfg: &RunConfig, lk: &LatticeKernels, rng: &mut ChaCha8Rng) -> CliResult<SuiteResult> {
    let (p, low, high) = scale_pair(lk, cfg.initial.intensity, cfg.scheduler.epsilon)?;
    let horizon = horizon_t(high, low, &p)?;
    let t = 0.5 * horizon;
    let bound = horizon / (horizon - t);
    let rule = cfg.closure()?;
    let lat = lk.lattice;
    let m = lat.n_sites();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let k1 = rng.random::<f64>() * low.exp();
        let mut k2: Vec<f64> = (0..m)
            .map(|_| {
                let u: f64 = if i % 2 == 1 { rng.random_range(-1.0..1.0) } else { rng.random() };
                u * (2.0 * low).exp()
            })
            .collect();
        for s in 0..m {
            k2[lat.neg(s)] = k2[s];
        }
        let mut f = CorrelationField::from_fn(lat, FieldMode::Invariant, rule, cfg.hierarchy.qy_order, |tu| {
            match tu.len() {
                1 => k1,
                2 => k2[lat.sub(tu[1], tu[0])],
                n => k1.powi(n as i32),
            }
        })?;
        f.set_reference(vec![low.exp()])?;
        let out = taylor_semigroup_step(&f, lk, t, cfg.hierarchy.taylor_order, Generator::Ldelta, low, high)?;
        worst = worst.max(out.field.scale_norm(high) / f.scale_norm(low));
    }
    Ok(SuiteResult::at_most(
        "norm-amplification",
        worst,
        bound + 1e-8,
        "max ||S(t)k|| / ||k|| over 20 random fields at t = T/2",
    ))
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let spec = cfg.kernel_spec()?;
    let lk = cfg.lattice_kernels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.dynamics.seed);

    let mut suites = vec![
        detailed_balance(&spec, cfg.dynamics.seed),
        or_error("poisson-invariance", poisson_invariance(cfg)),
        kernel_symmetry(&lk),
        or_error("master-oracle", master_oracle(&lk)),
    ];
    match gibbs_and_conservation(&lk) {
        Ok(pair) => suites.extend(pair),
        Err(e) => suites.push(SuiteResult::errored("gibbs-stationarity", e)),
    }
    suites.push(or_error("lambert-w", lambert_residual(&mut rng)));
    suites.push(or_error("scheduler-argmax", scheduler_argmax(&mut rng)));
    suites.push(or_error("semigroup-composition", composition(cfg, &lk)));
    suites.push(or_error("norm-amplification", amplification(cfg, &lk, &mut rng)));

    let all_pass = suites.iter().all(|s| s.pass);
    for s in &suites {
        println!(
            "{} {}: measured {:e}, tolerance {:e}",
            if s.pass { "PASS" } else { "FAIL" },
            s.name,
            s.measured,
            s.tolerance
        );
    }
    artifacts::csv(cfg, "validation.csv", |w| {
        writeln!(w, "suite,pass,measured,tolerance")?;
        for s in &suites {
            writeln!(w, "{},{},{},{}", s.name, s.pass, fmt_f64(s.measured), fmt_f64(s.tolerance))?;
        }
        Ok(())
    })?;
    artifacts::json(
        cfg,
        "validation.json",
        &serde_json::json!({ "all_pass": all_pass, "suites": suites }),
    )?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("property suite failed".into()))
    }
}
