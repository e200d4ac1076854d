//! Horizons of the series semigroup, the Lambert-W step size and the
//! continuation ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default safety cap on ladder length.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;
pub const DEFAULT_EPSILON: f64 = 0.1;
const W_MAX_ITER: usize = 100;
/// Orders listed in a certificate's per-factor bounds.
const CERTIFICATE_ORDERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub alpha: f64,
    /// `⟨φ⟩`; zero is accepted and makes every horizon infinite.
    pub mean_phi: f64,
    pub c: f64,
    pub epsilon: f64,
}

impl ScaleParams {
    pub fn new(alpha: f64, mean_phi: f64, c: f64, epsilon: f64) -> Result<Self> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} (got {v})")));
        if !(alpha.is_finite() && alpha > 0.0) {
            return bad("alpha must be positive and finite", alpha);
        }
        if !(mean_phi.is_finite() && mean_phi >= 0.0) {
            return bad("mean_phi must be nonnegative and finite", mean_phi);
        }
        if !(c.is_finite() && c > 0.0) {
            return bad("C must be positive and finite", c);
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)", epsilon);
        }
        Ok(Self {
            alpha,
            mean_phi,
            c,
            epsilon,
        })
    }
}

/// Principal branch of Lambert W on `[0, ∞)`.
///
/// Halley iteration from `log(1 + x)`; above `1e100` Newton on
/// `w + ln w = ln x` instead, which avoids overflowing `e^w`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambert_w0 needs x >= 0 (got {x})"
        )));
    }
    if x == 0.0 || x == f64::INFINITY {
        return Ok(x);
    }
    if x > 1e100 {
        return Ok(w_from_log(x.ln()));
    }
    let mut w = x.ln_1p();
    for _ in 0..W_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= f64::EPSILON * w.abs() {
            break;
        }
    }
    Ok(polish(w, x))
}

/// Walks `w` ulp by ulp toward the smallest residual `|w e^w − x|`.
fn polish(mut w: f64, x: f64) -> f64 {
    let residual = |w: f64| (w * w.exp() - x).abs();
    for _ in 0..64 {
        let best = [w.next_down(), w.next_up()]
            .into_iter()
            .filter(|c| residual(*c) < residual(w))
            .min_by(|a, b| residual(*a).total_cmp(&residual(*b)));
        match best {
            Some(c) => w = c,
            None => break,
        }
    }
    w
}

/// `W(e^{ln_x})` for large arguments.
fn w_from_log(ln_x: f64) -> f64 {
    let mut w = ln_x - ln_x.ln();
    for _ in 0..W_MAX_ITER {
        let g = w + w.ln() - ln_x;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= f64::EPSILON * w {
            break;
        }
    }
    w
}

fn check_pair(theta_high: f64, theta_low: f64) -> Result<()> {
    if theta_low < theta_high {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "scale pair needs theta_low < theta_high (got {theta_low} >= {theta_high})"
        )))
    }
}

/// `T(ϑ′, ϑ) = ((ϑ′ − ϑ)/2α) exp(−⟨φ⟩ e^{ϑ′})`.
pub fn horizon_t(theta_high: f64, theta_low: f64, p: &ScaleParams) -> Result<f64> {
    check_pair(theta_high, theta_low)?;
    Ok((theta_high - theta_low) / (2.0 * p.alpha) * (-p.mean_phi * theta_high.exp()).exp())
}

/// `T̄(ϑ′, ϑ) = (ϑ′ − ϑ)/2α`.
pub fn horizon_tbar(theta_high: f64, theta_low: f64, p: &ScaleParams) -> Result<f64> {
    check_pair(theta_high, theta_low)?;
    Ok((theta_high - theta_low) / (2.0 * p.alpha))
}

/// `δ(ϑ)`, the positive root of `δ e^δ = e^{−ϑ}/⟨φ⟩`.
pub fn delta_theta(theta: f64, p: &ScaleParams) -> f64 {
    if p.mean_phi == 0.0 {
        return f64::INFINITY;
    }
    let ln_x = -theta - p.mean_phi.ln();
    if ln_x > 230.0 {
        w_from_log(ln_x)
    } else {
        lambert_w0(ln_x.exp()).expect("exp is nonnegative")
    }
}

/// `τ(ϑ) = sup_{ϑ′>ϑ} T(ϑ′, ϑ) = (δ/2α) e^{−1/δ}`, attained at `ϑ′ = ϑ + δ(ϑ)`.
pub fn tau_theta(theta: f64, p: &ScaleParams) -> f64 {
    let d = delta_theta(theta, p);
    if d.is_infinite() {
        return f64::INFINITY;
    }
    d / (2.0 * p.alpha) * (-1.0 / d).exp()
}

/// `ϑ(t) = log C + tα`.
pub fn theta_of_t(t: f64, p: &ScaleParams) -> f64 {
    p.c.ln() + t * p.alpha
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleLadder {
    /// `ϑ*_0, ϑ*_1, …`; one longer than `steps`.
    pub theta_star: Vec<f64>,
    pub steps: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub taus: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl ScaleLadder {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn reached(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `(ϑ*_{n−1}, ϑ*_{n−1} + δ(ϑ*_{n−1}))` for each step.
    pub fn scale_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta_star
            .iter()
            .zip(&self.deltas)
            .map(|(&t, &d)| (t, t + d))
    }
}

/// Steps `s_n = (1 − ε) τ(ϑ*_{n−1})` until the cumulative time reaches `t_target`.
///
/// Hitting `max_steps`, or a step too small to move the cumulative time in
/// floating point, is reported as [`Error::LadderAnomaly`]. With `⟨φ⟩ = 0`
/// the horizon is infinite and a single step covers the whole target.
pub fn build_ladder(p: &ScaleParams, t_target: f64, max_steps: usize) -> Result<ScaleLadder> {
    if !(t_target.is_finite() && t_target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_target must be positive and finite (got {t_target})"
        )));
    }
    let theta0 = p.c.ln();
    let mut ladder = ScaleLadder {
        theta_star: vec![theta0],
        steps: Vec::new(),
        cumulative: Vec::new(),
        taus: Vec::new(),
        deltas: Vec::new(),
    };
    let mut cum = 0.0;
    let mut theta = theta0;
    while cum < t_target {
        if ladder.steps.len() >= max_steps {
            return Err(Error::LadderAnomaly {
                steps: ladder.steps.len(),
                reached: cum,
                reason: format!("step cap of {max_steps} hit before t_target = {t_target}"),
            });
        }
        let delta = delta_theta(theta, p);
        let tau = tau_theta(theta, p);
        let s = if tau.is_infinite() {
            t_target - cum
        } else {
            (1.0 - p.epsilon) * tau
        };
        let next = cum + s;
        if next <= cum {
            return Err(Error::LadderAnomaly {
                steps: ladder.steps.len(),
                reached: cum,
                reason: format!("step {s:e} no longer advances the cumulative time"),
            });
        }
        cum = next;
        theta = theta_of_t(cum, p);
        ladder.steps.push(s);
        ladder.cumulative.push(cum);
        ladder.taus.push(tau);
        ladder.deltas.push(delta);
        ladder.theta_star.push(theta);
    }
    Ok(ladder)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub theta_low: f64,
    pub theta_high: f64,
    pub t: f64,
    pub horizon: f64,
    pub valid: bool,
    /// `T/(T − t)`; absent when `t ≥ T`.
    pub norm_bound: Option<f64>,
    /// `t/T`, the ratio of the geometric series behind `norm_bound`.
    pub ratio: f64,
    /// `2α exp(⟨φ⟩ e^{ϑ_low}) / (e (ϑ_high − ϑ_low))`, the bound on one
    /// application of the generator from the low scale to the high one.
    pub operator_bound: f64,
    /// `n/(e T)` for `n = 1..=10`.
    pub per_factor_bounds: Vec<f64>,
}

pub fn norm_certificate(
    theta_low: f64,
    theta_high: f64,
    t: f64,
    p: &ScaleParams,
) -> Result<Certificate> {
    let horizon = horizon_t(theta_high, theta_low, p)?;
    let valid = t >= 0.0 && t < horizon;
    let gap = theta_high - theta_low;
    Ok(Certificate {
        theta_low,
        theta_high,
        t,
        horizon,
        valid,
        norm_bound: valid.then(|| horizon / (horizon - t)),
        ratio: t / horizon,
        operator_bound: 2.0 * p.alpha * (p.mean_phi * theta_low.exp()).exp()
            / (std::f64::consts::E * gap),
        per_factor_bounds: (1..=CERTIFICATE_ORDERS)
            .map(|n| n as f64 / (std::f64::consts::E * horizon))
            .collect(),
    })
}
