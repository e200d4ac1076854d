//! The correlation-evolution generator, its free counterpart and `Q_y`.

use rayon::prelude::*;
use serde::Serialize;

use super::field::{CorrelationField, CLOSURE_REACH};
use crate::error::{Error, Result};
use crate::lattice::LatticeKernels;

const MAX_TUPLE: usize = 3 + CLOSURE_REACH;

/// Fixed-capacity tuple of sites.
#[derive(Clone, Copy)]
struct Tuple {
    sites: [usize; MAX_TUPLE],
    len: usize,
}

impl Tuple {
    fn from_slice(s: &[usize]) -> Self {
        let mut sites = [0; MAX_TUPLE];
        sites[..s.len()].copy_from_slice(s);
        Self {
            sites,
            len: s.len(),
        }
    }

    fn with(mut self, z: usize) -> Self {
        self.sites[self.len] = z;
        self.len += 1;
        self
    }

    fn as_slice(&self) -> &[usize] {
        &self.sites[..self.len]
    }
}

fn check_lattice(field: &CorrelationField, kernels: &LatticeKernels) -> Result<()> {
    if field.lattice() != &kernels.lattice {
        return Err(Error::Incompatible(
            "field and kernels live on different lattices".into(),
        ));
    }
    Ok(())
}

/// `(Q_y k)(η) = Σ_{m ≤ M_Q} (1/m!) Σ_{z_1..z_m} k(η z_1..z_m) Π t_y(z_i) h^{md}`.
pub fn apply_qy(
    field: &CorrelationField,
    kernels: &LatticeKernels,
    y: usize,
    eta: &[usize],
) -> Result<f64> {
    check_lattice(field, kernels)?;
    let n_max = field.n_max();
    if eta.len() > n_max || eta.len() + field.qy_order() > n_max + CLOSURE_REACH {
        return Err(Error::ClosureReach {
            order: eta.len(),
            qy_order: field.qy_order(),
            n_max,
        });
    }
    Ok(qy(field, kernels, y, Tuple::from_slice(eta)))
}

fn qy(field: &CorrelationField, kernels: &LatticeKernels, y: usize, eta: Tuple) -> f64 {
    let mut acc = field.value(eta.as_slice());
    if field.qy_order() == 0 || kernels.t_support.is_empty() {
        return acc;
    }
    let lat = &kernels.lattice;
    let hd = lat.cell_volume();
    let mut first = 0.0;
    for &(s, t) in &kernels.t_support {
        first += t * field.value(eta.with(lat.add(y, s)).as_slice());
    }
    acc += first * hd;
    if field.qy_order() >= 2 {
        let mut second = 0.0;
        for &(s1, t1) in &kernels.t_support {
            let e1 = eta.with(lat.add(y, s1));
            for &(s2, t2) in &kernels.t_support {
                second += t1 * t2 * field.value(e1.with(lat.add(y, s2)).as_slice());
            }
        }
        acc += 0.5 * second * hd * hd;
    }
    acc
}

/// `(L^Δ k)(η)` at one tuple, straight from the gain and loss sums.
fn ldelta_at(field: &CorrelationField, kernels: &LatticeKernels, eta: Tuple) -> f64 {
    let lat = &kernels.lattice;
    let n = eta.len;
    let skip_self = kernels.exclude_self_term;
    let mut gain = 0.0;
    let mut loss = 0.0;
    for j in 0..n {
        let here = eta.sites[j];
        for &(s, w) in &kernels.jump_support {
            let other = lat.add(here, s);
            // Gain: a particle jumped from `other` into `here`.
            let mut moved = eta;
            moved.sites[j] = other;
            let mut e = 1.0;
            for (i, &z) in moved.as_slice().iter().enumerate() {
                if !(skip_self && i == j) {
                    e *= kernels.tau[lat.sub(z, here)];
                }
            }
            if e != 0.0 {
                gain += w * e * qy(field, kernels, here, moved);
            }
            // Loss: the particle at `here` jumps to `other`.
            let mut e = 1.0;
            for (i, &z) in eta.as_slice().iter().enumerate() {
                if !(skip_self && i == j) {
                    e *= kernels.tau[lat.sub(z, other)];
                }
            }
            if e != 0.0 {
                loss += w * e * qy(field, kernels, other, eta);
            }
        }
    }
    gain - loss
}

/// `(L̄ k)(η) = Σ_{y∈η} Σ_x a(x − y) h^d k(η∖y ∪ x)`.
fn lbar_at(field: &CorrelationField, kernels: &LatticeKernels, eta: Tuple) -> f64 {
    let lat = &kernels.lattice;
    let mut acc = 0.0;
    for j in 0..eta.len {
        for &(s, w) in &kernels.jump_support {
            let mut moved = eta;
            moved.sites[j] = lat.add(eta.sites[j], s);
            acc += w * field.value(moved.as_slice());
        }
    }
    acc
}

const PERMS_2: [[usize; 3]; 2] = [[0, 1, 2], [1, 0, 2]];
const PERMS_3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Evaluates `f` on every stored entry, averaged over argument permutations.
fn derivative_field(
    field: &CorrelationField,
    f: impl Fn(Tuple) -> f64 + Sync,
) -> CorrelationField {
    let mut out = field.zeros_like();
    for n in 1..=field.n_max() {
        let perms: &[[usize; 3]] = match n {
            1 => &PERMS_2[..1],
            2 => &PERMS_2,
            _ => &PERMS_3,
        };
        let values: Vec<f64> = (0..field.order_len(n))
            .into_par_iter()
            .map(|idx| {
                let mut rep = [0usize; 3];
                field.decode(n, idx, &mut rep);
                let sum: f64 = perms
                    .iter()
                    .map(|p| {
                        let mut t = [0usize; 3];
                        for i in 0..n {
                            t[i] = rep[p[i]];
                        }
                        f(Tuple::from_slice(&t[..n]))
                    })
                    .sum();
                sum / perms.len() as f64
            })
            .collect();
        out.order_mut(n).copy_from_slice(&values);
    }
    out
}

/// `L^Δ k` on every stored entry; the `∅` component is zero.
pub fn apply_ldelta(field: &CorrelationField, kernels: &LatticeKernels) -> Result<CorrelationField> {
    check_lattice(field, kernels)?;
    Ok(derivative_field(field, |t| ldelta_at(field, kernels, t)))
}

/// `L̄ k`: the gain term of `L^Δ` with `φ = 0`.
pub fn apply_lbar(field: &CorrelationField, kernels: &LatticeKernels) -> Result<CorrelationField> {
    check_lattice(field, kernels)?;
    Ok(derivative_field(field, |t| lbar_at(field, kernels, t)))
}

/// `C^n e^{tαn}`.
pub fn free_solution(c: f64, alpha: f64, t: f64, n: usize) -> f64 {
    c.powi(n as i32) * (t * alpha * n as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleNormReport {
    pub theta: f64,
    pub norm_value: f64,
}

pub fn scale_norm(field: &CorrelationField, theta: f64) -> ScaleNormReport {
    ScaleNormReport {
        theta,
        norm_value: field.scale_norm(theta),
    }
}

/// Bound on the part of `L^Δ k` dropped by truncating `Q_y` at `M_Q`:
/// `2 α N_max ‖k‖_ϑ e^{ϑ N_max} Σ_{m > M_Q} (⟨φ⟩ e^ϑ)^m / m!`, using `|t_y| ≤ 1`
/// and `Σ |t_y| h^d ≤ ⟨φ⟩`.
pub fn qy_tail_bound(field: &CorrelationField, kernels: &LatticeKernels, theta: f64) -> f64 {
    let x = kernels.mean_phi * theta.exp();
    let m0 = field.qy_order();
    let mut term = 1.0;
    for m in 1..=m0 + 1 {
        term *= x / m as f64;
    }
    let mut tail = 0.0;
    let mut m = m0 + 1;
    while term > 1e-17 * tail || tail == 0.0 {
        tail += term;
        m += 1;
        term *= x / m as f64;
        if term == 0.0 || m > 10_000 {
            break;
        }
    }
    let n_max = field.n_max() as f64;
    2.0 * kernels.alpha * n_max * field.scale_norm(theta) * (theta * n_max).exp() * tail
}
