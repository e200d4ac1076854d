//! Exact forward equation of the lattice jump process in a fixed-`N` sector.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::field::{ClosureRule, CorrelationField, FieldMode};
use crate::error::{Error, Result};
use crate::lattice::{LatticeKernels, Occupancy};

/// Largest sector that is enumerated.
pub const MAX_SECTOR: u128 = 100_000;
/// Largest sector handed to the dense stationary solver.
pub const MAX_DENSE: usize = 4_000;
/// Largest `Λ dt` per uniformization chunk.
const CHUNK: f64 = 50.0;

/// Probability vector over the `N`-particle configurations of a small lattice,
/// together with the jump rates between them.
#[derive(Debug, Clone)]
pub struct MasterState {
    kernels: LatticeKernels,
    occupancy: Occupancy,
    n: usize,
    /// Sorted site lists.
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    /// `(from, to, rate)`; rates use the pre-jump configuration.
    transitions: Vec<(usize, usize, f64)>,
    exit: Vec<f64>,
    prob: Vec<f64>,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn enumerate(m: usize, n: usize, repeats: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(m: usize, n: usize, start: usize, repeats: bool, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for s in start..m {
            cur.push(s);
            rec(m, n, if repeats { s } else { s + 1 }, repeats, cur, out);
            cur.pop();
        }
    }
    rec(m, n, 0, repeats, &mut cur, &mut out);
    out
}

impl MasterState {
    /// Sector of `n` particles, initialised to the uniform distribution.
    pub fn new(kernels: &LatticeKernels, occupancy: Occupancy, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sector needs at least one particle".into()));
        }
        let m = kernels.lattice.n_sites();
        let size = match occupancy {
            Occupancy::Exclusion => binomial(m as u128, n as u128),
            Occupancy::Multi => binomial((m + n - 1) as u128, n as u128),
        };
        if size > MAX_SECTOR {
            return Err(Error::SectorTooLarge {
                states: size,
                limit: MAX_SECTOR,
            });
        }
        if size == 0 {
            return Err(Error::InvalidParameter(format!(
                "{n} excluding particles do not fit on {m} sites"
            )));
        }
        let states = enumerate(m, n, occupancy == Occupancy::Multi);
        let index: HashMap<Vec<usize>, usize> =
            states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let lat = &kernels.lattice;
        let mut transitions = Vec::new();
        let mut exit = vec![0.0; states.len()];
        for (from, eta) in states.iter().enumerate() {
            let mut i = 0;
            while i < eta.len() {
                let x = eta[i];
                let mult = eta[i..].iter().take_while(|&&s| s == x).count();
                for &(s, w) in &kernels.jump_support {
                    let y = lat.add(x, s);
                    if y == x || (occupancy == Occupancy::Exclusion && eta.contains(&y)) {
                        continue;
                    }
                    let mut field: f64 = eta.iter().map(|&z| kernels.phi[lat.sub(y, z)]).sum();
                    if kernels.exclude_self_term {
                        field -= kernels.phi[lat.sub(y, x)];
                    }
                    let rate = mult as f64 * w * (-field).exp();
                    let mut target = eta.clone();
                    target[i] = y;
                    target.sort_unstable();
                    transitions.push((from, index[&target], rate));
                    exit[from] += rate;
                }
                i += mult;
            }
        }
        let len = states.len();
        Ok(Self {
            kernels: kernels.clone(),
            occupancy,
            n,
            states,
            index,
            transitions,
            exit,
            prob: vec![1.0 / len as f64; len],
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn occupancy(&self) -> Occupancy {
        self.occupancy
    }

    pub fn kernels(&self) -> &LatticeKernels {
        &self.kernels
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn index_of(&self, sites: &[usize]) -> Option<usize> {
        let mut key = sites.to_vec();
        key.sort_unstable();
        self.index.get(&key).copied()
    }

    pub fn set_prob(&mut self, prob: Vec<f64>) -> Result<()> {
        if prob.len() != self.len() {
            return Err(Error::Incompatible(format!(
                "{} probabilities for a sector of {} states",
                prob.len(),
                self.len()
            )));
        }
        self.prob = prob;
        Ok(())
    }

    /// Point mass on one configuration.
    pub fn set_point_mass(&mut self, sites: &[usize]) -> Result<()> {
        let i = self.index_of(sites).ok_or_else(|| {
            Error::InvalidParameter(format!("{sites:?} is not a state of this sector"))
        })?;
        self.prob.iter_mut().for_each(|p| *p = 0.0);
        self.prob[i] = 1.0;
        Ok(())
    }

    /// `dP/dt` for an arbitrary vector.
    pub fn rhs_of(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        for &(from, to, r) in &self.transitions {
            let flux = r * p[from];
            out[to] += flux;
            out[from] -= flux;
        }
        out
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rhs_of(&self.prob)
    }

    /// Advances the probability vector by `dt` via uniformization.
    pub fn evolve(&mut self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be nonnegative (got {dt})")));
        }
        let lambda = self.exit.iter().cloned().fold(0.0, f64::max);
        if lambda == 0.0 || dt == 0.0 {
            return Ok(());
        }
        let chunks = (lambda * dt / CHUNK).ceil().max(1.0) as usize;
        let mu = lambda * dt / chunks as f64;
        for _ in 0..chunks {
            let mut v = self.prob.clone();
            let mut weight = (-mu).exp();
            let mut acc: Vec<f64> = v.iter().map(|x| weight * x).collect();
            let mut total = weight;
            let mut k = 0usize;
            while 1.0 - total > 1e-17 || (k as f64) < mu {
                k += 1;
                let d = self.rhs_of(&v);
                for (vi, di) in v.iter_mut().zip(&d) {
                    *vi = (*vi + di / lambda).max(0.0);
                }
                weight *= mu / k as f64;
                total += weight;
                for (a, vi) in acc.iter_mut().zip(&v) {
                    *a += weight * vi;
                }
                if k > 10_000 {
                    break;
                }
            }
            let s: f64 = acc.iter().sum();
            self.prob = acc.into_iter().map(|a| a / s).collect();
        }
        Ok(())
    }

    /// Solves `rhs(p) = 0`, `Σ p = 1` by dense LU.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let s = self.len();
        if s > MAX_DENSE {
            return Err(Error::SectorTooLarge {
                states: s as u128,
                limit: MAX_DENSE as u128,
            });
        }
        let mut a = DMatrix::<f64>::zeros(s, s);
        for &(from, to, r) in &self.transitions {
            a[(to, from)] += r;
            a[(from, from)] -= r;
        }
        for j in 0..s {
            a[(s - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(s);
        b[s - 1] = 1.0;
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular("stationary system".into()))?;
        Ok(x.iter().copied().collect())
    }

    /// Pair energy `Σ_{i<j} φ(x_i − x_j)` of one state.
    pub fn energy(&self, state: usize) -> f64 {
        let lat = &self.kernels.lattice;
        let eta = &self.states[state];
        let mut e = 0.0;
        for i in 0..eta.len() {
            for j in (i + 1)..eta.len() {
                e += self.kernels.phi[lat.sub(eta[i], eta[j])];
            }
        }
        e
    }

    /// Normalised equilibrium weights: `e^{−E}` under exclusion and
    /// `e^{−E}/Π n_x!` with multiple occupancy.
    pub fn gibbs_weights(&self) -> Vec<f64> {
        let w: Vec<f64> = (0..self.len())
            .map(|i| {
                let mut v = (-self.energy(i)).exp();
                if self.occupancy == Occupancy::Multi {
                    let eta = &self.states[i];
                    let mut j = 0;
                    while j < eta.len() {
                        let m = eta[j..].iter().take_while(|&&s| s == eta[j]).count();
                        v /= (1..=m).map(|k| k as f64).product::<f64>();
                        j += m;
                    }
                }
                v
            })
            .collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    }

    /// `E[n_x]` per site.
    pub fn occupation(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.kernels.lattice.n_sites()];
        for (eta, p) in self.states.iter().zip(&self.prob) {
            for &s in eta {
                out[s] += p;
            }
        }
        out
    }

    /// Expected number of ordered particle pairs `(i ≠ j)` per separation `x_j − x_i`.
    pub fn separation_counts(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.kernels.lattice.n_sites()];
        let mut tmp = vec![0.0; out.len()];
        for (eta, p) in self.states.iter().zip(&self.prob) {
            tmp.iter_mut().for_each(|v| *v = 0.0);
            separation_counts(&self.kernels.lattice, eta, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += p * t;
            }
        }
        out
    }

    /// Factorial-moment densities of the current distribution as a full-grid field.
    pub fn correlations(&self, closure: ClosureRule, qy_order: usize) -> Result<CorrelationField> {
        let lat = self.kernels.lattice;
        let m = lat.n_sites();
        let hd = lat.cell_volume();
        let mut field = CorrelationField::new(lat, FieldMode::FullGrid, closure, qy_order)?;
        for (eta, &p) in self.states.iter().zip(&self.prob) {
            if p == 0.0 {
                continue;
            }
            for (i, &a) in eta.iter().enumerate() {
                field.order_mut(1)[a] += p / hd;
                for (j, &b) in eta.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    field.order_mut(2)[a + m * b] += p / (hd * hd);
                    if closure.n_max >= 3 {
                        for (l, &c) in eta.iter().enumerate() {
                            if l != i && l != j {
                                field.order_mut(3)[a + m * (b + m * c)] += p / (hd * hd * hd);
                            }
                        }
                    }
                }
            }
        }
        field.freeze_reference();
        Ok(field)
    }
}

/// Adds the ordered-pair separation histogram of one configuration to `out`.
pub fn separation_counts(lattice: &crate::lattice::Lattice, sites: &[usize], out: &mut [f64]) {
    for (i, &a) in sites.iter().enumerate() {
        for (j, &b) in sites.iter().enumerate() {
            if i != j {
                out[lattice.sub(b, a)] += 1.0;
            }
        }
    }
}
