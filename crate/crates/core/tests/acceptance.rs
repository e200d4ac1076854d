//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use kawasaki_core::estimators::{
    density_estimate, pair_correlation_estimate, sub_poissonian_check,
    sub_poissonian_check_field, uniform_edges,
};
use kawasaki_core::hierarchy::master::separation_counts;
use kawasaki_core::hierarchy::{
    apply_ldelta, integrate, series_horizon, taylor_semigroup_step, ClosureKind, ClosureRule,
    CorrelationField, FieldMode, Generator, MasterState,
};
use kawasaki_core::kmc::{detailed_balance_probe, run_ensemble, InitialLaw, LatticeSimulator};
use kawasaki_core::scheduler::{
    build_ladder, delta_theta, horizon_t, lambert_w0, tau_theta, theta_of_t, ScaleParams,
    DEFAULT_MAX_STEPS,
};
use kawasaki_core::{
    Configuration, KernelFamily, KernelSpec, Lattice, LatticeKernels, Occupancy, TorusDomain,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn top_hat(height: f64, range: f64) -> KernelFamily {
    KernelFamily::TopHat { height, range }
}

/// Top-hat `a` of height 0.5 and range 1 (α = 1); top-hat φ of height `phi` and range 0.5.
fn demo_spec(phi: f64) -> KernelSpec {
    KernelSpec::new(top_hat(0.5, 1.0), top_hat(phi, 0.5), 1).unwrap()
}

fn demo_lattice(phi: f64) -> LatticeKernels {
    LatticeKernels::new(Lattice::new(1, 32, 0.25).unwrap(), &demo_spec(phi)).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_diff(a: &CorrelationField, b: &CorrelationField) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}

fn criterion_1() -> Verdict {
    let free = demo_lattice(0.0);
    let mut worst: f64 = 0.0;
    for mode in [FieldMode::Invariant, FieldMode::FullGrid] {
        for n_max in [2, 3] {
            for qy in [1, 2] {
                let rule = ClosureRule::new(ClosureKind::PoissonTail, n_max).unwrap();
                let f = CorrelationField::poisson(free.lattice, mode, rule, qy, 0.5).unwrap();
                worst = worst.max(apply_ldelta(&f, &free).unwrap().max_abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("|L k| = {worst:e} on a Poisson field"))?;

    let spec = demo_spec(0.0);
    let dom = TorusDomain::new(1, 200.0).unwrap();
    let law = InitialLaw::Poisson { intensity: 0.5 };
    let runs = run_ensemble(&dom, &law, &spec, 2.0, 1.0, 100, 1).map_err(|e| e.to_string())?;
    let finals: Vec<&Configuration> = runs.iter().map(|r| &r.snapshots.last().unwrap().config).collect();
    let edges = uniform_edges(10.0, 10);
    let est = pair_correlation_estimate(&finals, &edges, 2.0).map_err(|e| e.to_string())?;
    let mut worst_z: f64 = 0.0;
    for (v, s) in est.values.iter().zip(&est.stderr) {
        let z = (v - 0.25).abs() / s;
        worst_z = worst_z.max(z);
    }
    ensure(worst_z <= 3.0, || format!("pair correlation bin off by {worst_z:.2} sigma"))?;
    Ok(format!("max |L k| = {worst:.1e}; worst pair bin {worst_z:.2} sigma from 0.25"))
}

fn criterion_2() -> Verdict {
    let c = 0.3;
    let lk = demo_lattice(0.5);
    let rule = ClosureRule::new(ClosureKind::PoissonTail, 2).unwrap();
    let start = CorrelationField::poisson(lk.lattice, FieldMode::Invariant, rule, 1, c).unwrap();
    let tr = integrate(&start, &lk, 0.0, 2.0, 0.01, Generator::Ldelta, 1e6).map_err(|e| e.to_string())?;
    let mut h_margin = f64::INFINITY;
    for (t, f) in tr.times.iter().zip(&tr.fields).step_by(10) {
        for chk in sub_poissonian_check_field(f, c, lk.alpha, *t) {
            ensure(chk.pass, || format!("hierarchy bound fails at t={t}, n={}: {chk:?}", chk.n))?;
            h_margin = h_margin.min(chk.margin);
        }
    }

    let spec = demo_spec(0.5);
    let dom = TorusDomain::new(1, 200.0).unwrap();
    let law = InitialLaw::Poisson { intensity: c };
    let runs = run_ensemble(&dom, &law, &spec, 2.0, 0.25, 100, 2).map_err(|e| e.to_string())?;
    let edges = uniform_edges(5.0, 10);
    let mut checks = 0;
    for k in 0..runs[0].snapshots.len() {
        let t = runs[0].snapshots[k].time;
        let snaps: Vec<&Configuration> = runs.iter().map(|r| &r.snapshots[k].config).collect();
        let d = density_estimate(&snaps, t).map_err(|e| e.to_string())?;
        let p = pair_correlation_estimate(&snaps, &edges, t).map_err(|e| e.to_string())?;
        for est in [&d, &p] {
            let chk = sub_poissonian_check(est, c, spec.alpha, t);
            ensure(chk.pass, || format!("KMC bound fails at t={t}: {chk:?}"))?;
            checks += 1;
        }
    }
    Ok(format!(
        "hierarchy min margin {h_margin:.3e} over {} times; {checks} KMC checks pass",
        tr.times.len().div_ceil(10)
    ))
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_res: f64 = 0.0;
    for i in 0..10_000 {
        let x = if i % 2 == 0 {
            rng.random::<f64>() * 20.0
        } else {
            10f64.powf(rng.random_range(-12.0..12.0))
        };
        let w = lambert_w0(x).map_err(|e| e.to_string())?;
        worst_res = worst_res.max((w * w.exp() - x).abs() / x);
    }
    ensure(worst_res < 1e-14, || format!("Lambert-W residual {worst_res:e}"))?;

    let grid_argmax = |theta: f64, p: &ScaleParams| {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for j in 1..=500_000 {
            let hi = theta + j as f64 * 1e-5;
            let v = horizon_t(hi, theta, p).unwrap();
            if v > best.0 {
                best = (v, hi);
            }
        }
        best
    };
    let mut worst_arg: f64 = 0.0;
    for _ in 0..50 {
        let p = ScaleParams::new(
            rng.random_range(0.1..5.0),
            rng.random_range(0.1..5.0),
            1.0,
            0.1,
        )
        .unwrap();
        let theta = rng.random_range(-3.0..3.0);
        let (_, arg) = grid_argmax(theta, &p);
        worst_arg = worst_arg.max((arg - (theta + delta_theta(theta, &p))).abs());
    }
    ensure(worst_arg <= 1e-4, || format!("argmax off by {worst_arg:e}"))?;

    let unit = ScaleParams::new(1.0, 1.0, 1.0, 0.1).unwrap();
    let tau = tau_theta(0.0, &unit);
    let (max, _) = grid_argmax(0.0, &unit);
    ensure((tau - max).abs() <= 1e-6 && (tau - 0.0486).abs() < 1e-4, || {
        format!("tau(0) = {tau}, grid max {max}")
    })?;
    Ok(format!(
        "W residual {worst_res:.1e}; argmax error {worst_arg:.1e}; tau(0) = {tau:.7}"
    ))
}

fn criterion_4() -> Verdict {
    let p = ScaleParams::new(1.0, 1.0, 1.0, 0.1).unwrap();
    let ladder = build_ladder(&p, 10.0, DEFAULT_MAX_STEPS).map_err(|e| e.to_string())?;
    ensure(ladder.cumulative.windows(2).all(|w| w[1] > w[0]), || {
        "cumulative time not strictly increasing".into()
    })?;
    let worst = ladder
        .cumulative
        .iter()
        .zip(&ladder.theta_star[1..])
        .map(|(t, th)| (th - theta_of_t(*t, &p)).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("theta* identity off by {worst:e}"))?;
    Ok(format!("{} steps to t = {}", ladder.len(), ladder.reached()))
}

fn criterion_5() -> Verdict {
    let lk = demo_lattice(0.5);
    let c: f64 = 0.3;
    let params = ScaleParams::new(lk.alpha, lk.mean_phi, c, 0.1).unwrap();
    let lo = c.ln();
    let hi = lo + delta_theta(lo, &params);
    let big_t = horizon_t(hi, lo, &params).unwrap();
    let t = 0.5 * big_t;
    let rule = ClosureRule::new(ClosureKind::PoissonTail, 2).unwrap();
    let start = CorrelationField::poisson(lk.lattice, FieldMode::Invariant, rule, 1, c).unwrap();
    let series = taylor_semigroup_step(&start, &lk, t, 40, Generator::Ldelta, lo, hi)
        .map_err(|e| e.to_string())?;
    let rk = integrate(&start, &lk, 0.0, t, t / 200.0, Generator::Ldelta, 1e6)
        .map_err(|e| e.to_string())?;
    let diff = rel_diff(&series.field, rk.fields.last().unwrap());
    ensure(diff <= 1e-6, || format!("Taylor vs RK4 relative difference {diff:e}"))?;

    let mid = 0.5 * (lo + hi);
    let (s1, s2) = (0.25 * series_horizon(&lk, Generator::Ldelta, lo, mid).unwrap(),
                    0.25 * series_horizon(&lk, Generator::Ldelta, mid, hi).unwrap());
    let whole = taylor_semigroup_step(&start, &lk, s1 + s2, 40, Generator::Ldelta, lo, hi)
        .map_err(|e| e.to_string())?;
    let first = taylor_semigroup_step(&start, &lk, s1, 40, Generator::Ldelta, lo, mid)
        .map_err(|e| e.to_string())?;
    let second = taylor_semigroup_step(&first.field, &lk, s2, 40, Generator::Ldelta, mid, hi)
        .map_err(|e| e.to_string())?;
    let mut gap = whole.field.clone();
    gap.axpy(-1.0, &second.field);
    let comp = gap.scale_norm(hi);
    let allowed = whole.last_term + first.last_term + second.last_term
        + 1e-12 * whole.field.scale_norm(hi);
    ensure(comp <= allowed, || format!("composition gap {comp:e} > {allowed:e}"))?;

    let bound = big_t / (big_t - t);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_amp: f64 = 0.0;
    for i in 0..100 {
        let signed = i % 2 == 1;
        let k1 = rng.random_range(0.0..1.0) * lo.exp();
        let m = lk.lattice.n_sites();
        let mut k2: Vec<f64> = (0..m)
            .map(|_| {
                let u: f64 = if signed { rng.random_range(-1.0..1.0) } else { rng.random() };
                u * (2.0 * lo).exp()
            })
            .collect();
        for s in 1..m {
            k2[m - s] = k2[s];
        }
        let mut f = CorrelationField::from_fn(lk.lattice, FieldMode::Invariant, rule, 1, |tu| {
            if tu.len() == 1 { k1 } else { k2[tu[1]] }
        })
        .unwrap();
        f.set_reference(vec![lo.exp()]).unwrap();
        let out = taylor_semigroup_step(&f, &lk, t, 40, Generator::Ldelta, lo, hi)
            .map_err(|e| e.to_string())?;
        let amp = out.field.scale_norm(hi) / f.scale_norm(lo);
        worst_amp = worst_amp.max(amp);
    }
    ensure(worst_amp <= bound + 1e-8, || format!("amplification {worst_amp} > {bound}"))?;
    Ok(format!(
        "Taylor/RK4 rel diff {diff:.1e} at t = {t:.4}; composition gap {comp:.1e}; \
         amplification {worst_amp:.4} <= {bound}"
    ))
}

fn criterion_6() -> Verdict {
    let spec = KernelSpec::new(top_hat(0.5, 1.0), top_hat(1.5, 0.5), 1).unwrap();
    let lk = LatticeKernels::new(Lattice::new(1, 16, 0.25).unwrap(), &spec).unwrap();
    let mut ms = MasterState::new(&lk, Occupancy::Exclusion, 2).map_err(|e| e.to_string())?;

    let pi = ms.stationary().map_err(|e| e.to_string())?;
    let gibbs = ms.gibbs_weights();
    let gibbs_err = pi.iter().zip(&gibbs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(gibbs_err <= 1e-10, || format!("stationary vs Gibbs {gibbs_err:e}"))?;

    let start = [0usize, 1];
    ms.set_point_mass(&start).map_err(|e| e.to_string())?;
    let mut rhs_sum: f64 = ms.rhs().iter().sum::<f64>().abs();
    let t_end = 1.0;
    ms.evolve(t_end).map_err(|e| e.to_string())?;
    rhs_sum = rhs_sum.max(ms.rhs().iter().sum::<f64>().abs());
    ensure(rhs_sum <= 1e-14, || format!("sum of rhs {rhs_sum:e}"))?;

    let replicas = 10_000;
    let sim = LatticeSimulator::new(&lk, Occupancy::Exclusion);
    let runs = sim.run_ensemble(&start, t_end, t_end, replicas, 6).map_err(|e| e.to_string())?;
    let m = lk.lattice.n_sites();
    let mut occ = vec![vec![0.0; replicas]; m];
    let mut sep = vec![vec![0.0; replicas]; m];
    let mut tmp = vec![0.0; m];
    for (r, tr) in runs.iter().enumerate() {
        let sites = tr.sites.last().unwrap();
        for &s in sites {
            occ[s][r] += 1.0;
        }
        tmp.iter_mut().for_each(|v| *v = 0.0);
        separation_counts(&lk.lattice, sites, &mut tmp);
        for (s, v) in tmp.iter().enumerate() {
            sep[s][r] = *v;
        }
    }
    let exact_occ = ms.occupation();
    let exact_sep = ms.separation_counts();
    let mut worst_z: f64 = 0.0;
    for (samples, exact) in occ.iter().zip(&exact_occ).chain(sep.iter().zip(&exact_sep)) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        if se == 0.0 {
            ensure(mean == *exact, || format!("deterministic statistic {mean} vs {exact}"))?;
            continue;
        }
        worst_z = worst_z.max((mean - exact).abs() / se);
    }
    ensure(worst_z <= 3.0, || format!("KMC vs master equation off by {worst_z:.2} sigma"))?;
    Ok(format!(
        "Gibbs error {gibbs_err:.1e}; |sum rhs| {rhs_sum:.1e}; worst statistic {worst_z:.2} sigma"
    ))
}

fn criterion_7() -> Verdict {
    let specs = [
        demo_spec(0.5),
        KernelSpec::new(
            KernelFamily::TruncatedGaussian { height: 0.7, width: 0.5 },
            KernelFamily::TruncatedExponential { height: 2.0, decay: 0.3 },
            2,
        )
        .unwrap(),
        KernelSpec::new(
            KernelFamily::TruncatedExponential { height: 0.4, decay: 0.3 },
            top_hat(1.2, 0.8),
            3,
        )
        .unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for (i, spec) in specs.iter().enumerate() {
        for exclude in [false, true] {
            let k = spec.with_exclude_self_term(exclude);
            for n in 1..=6 {
                worst = worst.max(detailed_balance_probe(100, n, &k, (10 * i + n) as u64));
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max |log-ratio| {worst:e}"))?;
    Ok(format!("max |log-ratio| {worst:.1e}"))
}

fn criterion_8() -> Verdict {
    let lk = demo_lattice(0.5);
    let rule = ClosureRule::new(ClosureKind::PoissonTail, 3).unwrap();
    let start = CorrelationField::poisson(lk.lattice, FieldMode::Invariant, rule, 1, 0.3).unwrap();
    let tr = integrate(&start, &lk, 0.0, 1.0, 0.05, Generator::Ldelta, 1e6).map_err(|e| e.to_string())?;
    ensure(tr.fields.iter().all(|f| f.k0() == 1.0), || "k(∅) drifted".into())?;

    let spec = demo_spec(0.5);
    let dom = TorusDomain::new(1, 50.0).unwrap();
    let law = InitialLaw::JitteredGrid { intensity: 0.6, jitter: 1.0 };
    let runs = run_ensemble(&dom, &law, &spec, 3.0, 0.5, 16, 8).map_err(|e| e.to_string())?;
    for r in &runs {
        let n0 = r.snapshots[0].config.len();
        ensure(r.snapshots.iter().all(|s| s.config.len() == n0), || "particle number changed".into())?;
    }
    Ok(format!(
        "k(∅) = 1 at {} RK4 times; N constant over {} KMC trajectories",
        tr.times.len(),
        runs.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("free-jump Poisson invariance", criterion_1),
        ("sub-Poissonian global bound", criterion_2),
        ("scheduler correctness", criterion_3),
        ("global continuation ladder", criterion_4),
        ("series-semigroup consistency", criterion_5),
        ("master-equation oracle", criterion_6),
        ("detailed-balance identity", criterion_7),
        ("conservation surface", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS criterion {} ({name}, {secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}, {secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
