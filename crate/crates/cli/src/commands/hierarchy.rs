use kawasaki_core::estimators::sub_poissonian_check_field;
use kawasaki_core::hierarchy::{
    integrate, qy_tail_bound, taylor_semigroup_step, CorrelationField, Generator,
};
use kawasaki_core::output::{
    write_bound_checks_csv, write_diagnostics_csv, write_trajectory_header, write_trajectory_rows,
    DiagnosticRow,
};
use kawasaki_core::scheduler::{
    build_ladder, delta_theta, horizon_t, norm_certificate, Certificate, ScaleParams,
};
use kawasaki_core::{BoundCheck, LatticeKernels};
use serde::Serialize;

use super::upper_scale;
use crate::artifacts;
use crate::config::{Integrator, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
struct Comparison {
    t: f64,
    horizon: f64,
    rk4_dt: f64,
    relative_difference: f64,
    tolerance: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'static str,
    integrator: Integrator,
    lattice_alpha: f64,
    lattice_mean_phi: f64,
    intensity: f64,
    t_end: f64,
    k0_conserved: bool,
    all_checks_pass: bool,
    certificates: &'a [Certificate],
    comparison: Option<Comparison>,
    checks: &'a [BoundCheck],
}

const TAYLOR_RK4_TOLERANCE: f64 = 1e-6;

struct Record {
    times: Vec<f64>,
    fields: Vec<CorrelationField>,
    diagnostics: Vec<DiagnosticRow>,
}

impl Record {
    fn new() -> Self {
        Self {
            times: Vec::new(),
            fields: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, field: CorrelationField, last_term: f64, lk: &LatticeKernels, p: &ScaleParams) {
        let theta = p.c.ln() + lk.alpha * t;
        self.diagnostics.push(DiagnosticRow {
            t,
            last_taylor_term: last_term,
            closure_tail_bound: qy_tail_bound(&field, lk, theta),
            norm_theta: field.scale_norm(theta),
        });
        self.times.push(t);
        self.fields.push(field);
    }
}

fn relative_difference(a: &CorrelationField, b: &CorrelationField) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let lk = cfg.lattice_kernels()?;
    let start = cfg.initial_field(lk.lattice)?;
    let h = &cfg.hierarchy;
    let c = cfg.initial.intensity;
    let p = ScaleParams::new(lk.alpha, lk.mean_phi, c, cfg.scheduler.epsilon)?;
    let t_end = cfg.dynamics.t_end;

    let mut record = Record::new();
    let mut certificates = Vec::new();
    let mut comparison = None;
    match (h.integrator, h.step_fraction) {
        (Integrator::Rk4, _) => {
            let tr = integrate(&start, &lk, 0.0, t_end, h.dt, Generator::Ldelta, h.overflow_guard)?;
            let stride = ((cfg.dynamics.snapshot_dt / h.dt).round() as usize).max(1);
            let last = tr.times.len() - 1;
            for (i, (t, f)) in tr.times.into_iter().zip(tr.fields).enumerate() {
                if i % stride == 0 || i == last {
                    record.push(t, f, 0.0, &lk, &p);
                }
            }
        }
        (Integrator::Taylor, Some(fraction)) => {
            let low = c.ln();
            let high = low + delta_theta(low, &p);
            let horizon = horizon_t(high, low, &p)?;
            let t = fraction * horizon;
            let cert = norm_certificate(low, high, t, &p)?;
            if !cert.valid {
                let details = serde_json::to_string_pretty(&cert).unwrap_or_default();
                return Err(CliError::Refused(format!(
                    "Taylor step of length {t} is not below the horizon {horizon}; certificate:\n{details}"
                )));
            }
            let out = taylor_semigroup_step(&start, &lk, t, h.taylor_order, Generator::Ldelta, low, high)?;
            let rk4_dt = h.dt.min(t / 200.0);
            let tr = integrate(&start, &lk, 0.0, t, rk4_dt, Generator::Ldelta, h.overflow_guard)?;
            let diff = relative_difference(&out.field, tr.fields.last().expect("nonempty trajectory"));
            println!("taylor vs rk4 at t = {t} (T = {horizon}): relative difference {diff:e}");
            comparison = Some(Comparison {
                t,
                horizon,
                rk4_dt,
                relative_difference: diff,
                tolerance: TAYLOR_RK4_TOLERANCE,
            });
            certificates.push(cert);
            record.push(0.0, start.clone(), 0.0, &lk, &p);
            record.push(t, out.field, out.last_term, &lk, &p);
        }
        (Integrator::Taylor, None) => {
            let ladder = build_ladder(&p, t_end, cfg.scheduler.max_steps)?;
            record.push(0.0, start.clone(), 0.0, &lk, &p);
            let mut field = start.clone();
            let steps = ladder.theta_star.iter().zip(&ladder.steps).zip(&ladder.cumulative);
            for ((&low, &s), &t) in steps {
                let high = upper_scale(low, s, &p);
                let cert = norm_certificate(low, high, s, &p)?;
                if !cert.valid {
                    return Err(CliError::Refused(format!(
                        "ladder step of length {s} from scale {low} has no valid certificate"
                    )));
                }
                let out = taylor_semigroup_step(&field, &lk, s, h.taylor_order, Generator::Ldelta, low, high)?;
                field = out.field;
                certificates.push(cert);
                record.push(t, field.clone(), out.last_term, &lk, &p);
            }
        }
    }

    let k0_conserved = record.fields.iter().all(|f| f.k0() == start.k0());
    assert!(k0_conserved, "k(∅) changed along the trajectory");
    let checks: Vec<BoundCheck> = record
        .times
        .iter()
        .zip(&record.fields)
        .flat_map(|(t, f)| sub_poissonian_check_field(f, c, lk.alpha, *t))
        .collect();
    let comparison_ok = comparison
        .as_ref()
        .is_none_or(|cmp| cmp.relative_difference <= cmp.tolerance);
    let all_pass = checks.iter().all(|c| c.pass) && comparison_ok;

    artifacts::csv(cfg, "trajectory.csv", |w| {
        write_trajectory_header(w)?;
        for (t, f) in record.times.iter().zip(&record.fields) {
            write_trajectory_rows(w, *t, f)?;
        }
        Ok(())
    })?;
    artifacts::csv(cfg, "diagnostics.csv", |w| write_diagnostics_csv(w, &record.diagnostics))?;
    artifacts::csv(cfg, "bound_checks.csv", |w| write_bound_checks_csv(w, &checks))?;
    artifacts::json(
        cfg,
        "manifest.json",
        &Manifest {
            command: "hierarchy",
            integrator: h.integrator,
            lattice_alpha: lk.alpha,
            lattice_mean_phi: lk.mean_phi,
            intensity: c,
            t_end: *record.times.last().unwrap_or(&0.0),
            k0_conserved,
            all_checks_pass: all_pass,
            certificates: &certificates,
            comparison,
            checks: &checks,
        },
    )?;
    println!(
        "hierarchy: {} output times, {} of {} domination checks pass",
        record.times.len(),
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    );
    if !comparison_ok {
        return Err(CliError::CheckFailed(format!(
            "Taylor and RK4 differ by more than {TAYLOR_RK4_TOLERANCE:e}"
        )));
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("domination by the free solution violated".into()))
    }
}
