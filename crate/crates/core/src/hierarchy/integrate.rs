//! Time stepping: the truncated series semigroup and a classical RK4.

use serde::{Deserialize, Serialize};

use super::field::CorrelationField;
use super::ops::{apply_lbar, apply_ldelta};
use crate::error::{Error, Result};
use crate::lattice::LatticeKernels;
use crate::scheduler::{horizon_t, horizon_tbar, ScaleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Ldelta,
    Lbar,
}

pub fn apply(
    field: &CorrelationField,
    kernels: &LatticeKernels,
    which: Generator,
) -> Result<CorrelationField> {
    match which {
        Generator::Ldelta => apply_ldelta(field, kernels),
        Generator::Lbar => apply_lbar(field, kernels),
    }
}

/// Horizon of the series for `which` between two scales, with the lattice constants.
pub fn series_horizon(
    kernels: &LatticeKernels,
    which: Generator,
    theta_low: f64,
    theta_high: f64,
) -> Result<f64> {
    let p = ScaleParams::new(kernels.alpha, kernels.mean_phi, 1.0, 0.5)?;
    match which {
        Generator::Ldelta => horizon_t(theta_high, theta_low, &p),
        Generator::Lbar => horizon_tbar(theta_high, theta_low, &p),
    }
}

#[derive(Debug, Clone)]
pub struct TaylorOutcome {
    pub field: CorrelationField,
    /// `‖tⁿ/n! Lⁿ k‖_{ϑ_high}` for the last retained `n`.
    pub last_term: f64,
    pub horizon: f64,
}

/// `Σ_{n ≤ N_T} tⁿ/n! Lⁿ k`, refused unless `t` lies below the horizon of the
/// scale pair.
pub fn taylor_semigroup_step(
    field: &CorrelationField,
    kernels: &LatticeKernels,
    t: f64,
    order: usize,
    which: Generator,
    theta_low: f64,
    theta_high: f64,
) -> Result<TaylorOutcome> {
    if order == 0 {
        return Err(Error::InvalidParameter("Taylor order must be at least 1".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step length must be nonnegative (got {t})"
        )));
    }
    let horizon = series_horizon(kernels, which, theta_low, theta_high)?;
    if t >= horizon {
        return Err(Error::BeyondHorizon { t, horizon });
    }
    let mut sum = field.clone();
    if t == 0.0 {
        return Ok(TaylorOutcome {
            field: sum,
            last_term: 0.0,
            horizon,
        });
    }
    let mut term = field.clone();
    for n in 1..=order {
        term = apply(&term, kernels, which)?;
        term.scale(t / n as f64);
        sum.axpy(1.0, &term);
    }
    assert_eq!(sum.k0(), field.k0(), "k(∅) drifted in the series");
    Ok(TaylorOutcome {
        last_term: term.scale_norm(theta_high),
        field: sum,
        horizon,
    })
}

pub fn rk4_step(
    field: &CorrelationField,
    kernels: &LatticeKernels,
    dt: f64,
    which: Generator,
) -> Result<CorrelationField> {
    let k1 = apply(field, kernels, which)?;
    let mut y = field.clone();
    y.axpy(0.5 * dt, &k1);
    let k2 = apply(&y, kernels, which)?;
    let mut y = field.clone();
    y.axpy(0.5 * dt, &k2);
    let k3 = apply(&y, kernels, which)?;
    let mut y = field.clone();
    y.axpy(dt, &k3);
    let k4 = apply(&y, kernels, which)?;
    let mut out = field.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<CorrelationField>,
}

/// RK4 over `[0, t_end]` in `⌈t_end/dt⌉` equal steps, starting time `t0`.
///
/// Aborts with [`Error::Overflow`] once any value exceeds `guard` in magnitude
/// or stops being finite.
pub fn integrate(
    field: &CorrelationField,
    kernels: &LatticeKernels,
    t0: f64,
    t_end: f64,
    dt: f64,
    which: Generator,
    guard: f64,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive (got {dt})")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "integration length must be nonnegative (got {t_end})"
        )));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut times = vec![t0];
    let mut fields = vec![field.clone()];
    let mut cur = field.clone();
    for i in 1..=steps {
        cur = rk4_step(&cur, kernels, h, which)?;
        let t = t0 + i as f64 * h;
        let worst = cur
            .data()
            .iter()
            .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if worst > guard {
            return Err(Error::Overflow {
                value: worst,
                guard,
                t,
            });
        }
        assert_eq!(cur.k0(), field.k0(), "k(∅) drifted at t = {t}");
        times.push(t);
        fields.push(cur.clone());
    }
    Ok(Trajectory { times, fields })
}
