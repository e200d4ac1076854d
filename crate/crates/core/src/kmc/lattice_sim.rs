//! Thinning simulator for the lattice version of the jump process.

use rand::Rng;
use rayon::prelude::*;

use super::engine::{replica_stream, snapshot_schedule, EventCounters, Stream};
use crate::error::{Error, Result};
use crate::lattice::{LatticeKernels, Occupancy};

/// Site-valued trajectory sampled on a fixed schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeTrajectory {
    pub times: Vec<f64>,
    /// `sites[k][i]`: site of particle `i` at `times[k]`.
    pub sites: Vec<Vec<usize>>,
    pub counters: EventCounters,
}

pub struct LatticeSimulator<'a> {
    kernels: &'a LatticeKernels,
    occupancy: Occupancy,
    cumulative: Vec<f64>,
}

impl<'a> LatticeSimulator<'a> {
    pub fn new(kernels: &'a LatticeKernels, occupancy: Occupancy) -> Self {
        let mut acc = 0.0;
        let cumulative = kernels
            .jump_support
            .iter()
            .map(|(_, w)| {
                acc += w;
                acc
            })
            .collect();
        Self {
            kernels,
            occupancy,
            cumulative,
        }
    }

    fn draw_separation(&self, rng: &mut Stream) -> usize {
        let u = rng.random::<f64>() * self.kernels.alpha;
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.kernels.jump_support[k.min(self.cumulative.len() - 1)].0
    }

    fn acceptance(&self, sites: &[usize], mover: usize, y: usize) -> f64 {
        let lat = &self.kernels.lattice;
        let sum: f64 = sites
            .iter()
            .enumerate()
            .filter(|(j, _)| !(self.kernels.exclude_self_term && *j == mover))
            .map(|(_, &z)| self.kernels.phi[lat.sub(y, z)])
            .sum();
        (-sum).exp()
    }

    pub fn run(
        &self,
        initial: Vec<usize>,
        t_end: f64,
        snapshot_dt: f64,
        rng: &mut Stream,
    ) -> Result<LatticeTrajectory> {
        let schedule = snapshot_schedule(t_end, snapshot_dt)?;
        let n_sites = self.kernels.lattice.n_sites();
        if let Some(&s) = initial.iter().find(|&&s| s >= n_sites) {
            return Err(Error::InvalidParameter(format!("site {s} is off the lattice")));
        }
        let mut occ = vec![0u32; n_sites];
        for &s in &initial {
            occ[s] += 1;
        }
        if self.occupancy == Occupancy::Exclusion && occ.iter().any(|&c| c > 1) {
            return Err(Error::InvalidParameter(
                "exclusion lattice holds at most one particle per site".into(),
            ));
        }
        let mut sites = initial;
        let n = sites.len();
        let mut counters = EventCounters::default();
        let mut out = Vec::with_capacity(schedule.len());
        let mut next = 0;
        let rate = self.kernels.alpha * n as f64;
        let mut clock = 0.0;
        while next < schedule.len() {
            let t_next = if n == 0 {
                f64::INFINITY
            } else {
                let u: f64 = rng.random();
                clock - (-u).ln_1p() / rate
            };
            while next < schedule.len() && schedule[next] < t_next {
                out.push(sites.clone());
                next += 1;
            }
            if next == schedule.len() {
                break;
            }
            clock = t_next;
            let i = rng.random_range(0..n);
            let x = sites[i];
            let y = self.kernels.lattice.add(x, self.draw_separation(rng));
            counters.proposals += 1;
            if y == x || (self.occupancy == Occupancy::Exclusion && occ[y] > 0) {
                continue;
            }
            let p = self.acceptance(&sites, i, y);
            if rng.random::<f64>() < p {
                counters.acceptances += 1;
                occ[x] -= 1;
                occ[y] += 1;
                sites[i] = y;
            }
        }
        Ok(LatticeTrajectory {
            times: schedule,
            sites: out,
            counters,
        })
    }

    /// Independent replicas from one fixed initial placement.
    pub fn run_ensemble(
        &self,
        initial: &[usize],
        t_end: f64,
        snapshot_dt: f64,
        replicas: usize,
        seed: u64,
    ) -> Result<Vec<LatticeTrajectory>> {
        (0..replicas as u64)
            .into_par_iter()
            .map(|r| self.run(initial.to_vec(), t_end, snapshot_dt, &mut replica_stream(seed, r)))
            .collect()
    }
}
