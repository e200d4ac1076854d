//! Poisson-clock thinning for the continuum jump process.
//!
//! A global clock rings at rate `α N`. On each ring a uniformly chosen particle
//! proposes a displacement with density `a / α`; the move is accepted with
//! probability `exp(−Σ_{z∈γ} φ(y − z))`. Rejected proposals still consume time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cells::CellList;
use super::init::InitialLaw;
use crate::error::{Error, Result};
use crate::model::{Configuration, KernelSpec, Position, TorusDomain};

/// Counter-based random stream (ChaCha8).
pub type Stream = ChaCha8Rng;

/// Stream for replica `r` of a run seeded with `seed`: seeded with `seed ⊕ r`.
pub fn replica_stream(seed: u64, replica: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed ^ replica)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounters {
    pub proposals: u64,
    pub acceptances: u64,
}

impl EventCounters {
    pub fn acceptance_ratio(&self) -> f64 {
        if self.proposals == 0 {
            return 1.0;
        }
        self.acceptances as f64 / self.proposals as f64
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            proposals: self.proposals + other.proposals,
            acceptances: self.acceptances + other.acceptances,
        }
    }
}

/// Result of one proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub particle: usize,
    pub target: Position,
    pub acceptance_probability: f64,
    pub accepted: bool,
}

pub struct SimState {
    config: Configuration,
    cells: CellList,
    kernels: KernelSpec,
    clock: f64,
    rng: Stream,
    counters: EventCounters,
}

impl SimState {
    pub fn new(config: Configuration, kernels: KernelSpec, rng: Stream) -> Result<Self> {
        kernels.check_domain(config.domain())?;
        let cells = CellList::build(&config, kernels.interaction_range());
        Ok(Self {
            config,
            cells,
            kernels,
            clock: 0.0,
            rng,
            counters: EventCounters::default(),
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn counters(&self) -> EventCounters {
        self.counters
    }

    pub fn cells(&self) -> &CellList {
        &self.cells
    }

    pub fn kernels(&self) -> &KernelSpec {
        &self.kernels
    }

    pub fn total_rate(&self) -> f64 {
        self.kernels.alpha * self.config.len() as f64
    }

    /// `exp(−Σ φ(y − z))` using the cell list.
    pub fn acceptance_probability(&self, particle: usize, y: &Position) -> f64 {
        if self.kernels.repulsion.is_zero() {
            return 1.0;
        }
        let dom = self.config.domain();
        let pts = self.config.points();
        let skip = self.kernels.exclude_self_term.then_some(particle);
        let mut sum = 0.0;
        self.cells.for_each_near(y, |i| {
            if Some(i) != skip {
                sum += self.kernels.phi(&dom.min_image(y, &pts[i]));
            }
        });
        (-sum).exp()
    }

    /// Same quantity by an `O(N)` sum over all particles.
    pub fn acceptance_probability_brute(&self, particle: usize, y: &Position) -> f64 {
        let skip = self.kernels.exclude_self_term.then_some(particle);
        (-crate::model::repulsion_sum(&self.config, y, &self.kernels, skip)).exp()
    }

    fn waiting_time(&mut self) -> f64 {
        let u: f64 = self.rng.random();
        -(-u).ln_1p() / self.total_rate()
    }

    /// Draws a displacement with density `a / α`.
    pub fn sample_displacement(&mut self) -> Position {
        let r = self.kernels.jump.sample_radius(self.rng.random());
        let mut v = [0.0; 3];
        match self.kernels.dim() {
            1 => v[0] = if self.rng.random::<bool>() { r } else { -r },
            2 => {
                let th = std::f64::consts::TAU * self.rng.random::<f64>();
                v[0] = r * th.cos();
                v[1] = r * th.sin();
            }
            _ => {
                let z = 2.0 * self.rng.random::<f64>() - 1.0;
                let th = std::f64::consts::TAU * self.rng.random::<f64>();
                let s = (1.0 - z * z).max(0.0).sqrt();
                v = [r * s * th.cos(), r * s * th.sin(), r * z];
            }
        }
        v
    }

    fn attempt_jump(&mut self) -> StepOutcome {
        let n = self.config.len();
        let particle = self.rng.random_range(0..n);
        let xi = self.sample_displacement();
        let x = self.config.points()[particle];
        let target = self
            .config
            .domain()
            .wrap([x[0] + xi[0], x[1] + xi[1], x[2] + xi[2]]);
        let p = self.acceptance_probability(particle, &target);
        let u: f64 = self.rng.random();
        let accepted = u < p;
        self.counters.proposals += 1;
        if accepted {
            self.counters.acceptances += 1;
            self.config.set_position(particle, target);
            self.cells.relocate(particle, &self.config.points()[particle]);
        }
        StepOutcome {
            particle,
            target,
            acceptance_probability: p,
            accepted,
        }
    }

    /// Advances the clock by one exponential waiting time and processes one proposal.
    pub fn step(&mut self) -> Result<StepOutcome> {
        if self.config.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        self.clock += self.waiting_time();
        Ok(self.attempt_jump())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub config: Configuration,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicaResult {
    pub seed: u64,
    pub snapshots: Vec<Snapshot>,
    pub counters: EventCounters,
}

impl ReplicaResult {
    pub fn acceptance_ratio(&self) -> f64 {
        self.counters.acceptance_ratio()
    }
}

/// `0, dt, 2dt, …` strictly below `t_end`, followed by `t_end`.
pub fn snapshot_schedule(t_end: f64, snapshot_dt: f64) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end > 0.0) || !(snapshot_dt.is_finite() && snapshot_dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "times must be positive (t_end = {t_end}, snapshot_dt = {snapshot_dt})"
        )));
    }
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * snapshot_dt;
        if t >= t_end {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(t_end);
    Ok(times)
}

/// Runs one trajectory on an explicit stream.
pub fn run_with_stream(
    initial: Configuration,
    kernels: &KernelSpec,
    t_end: f64,
    snapshot_dt: f64,
    rng: Stream,
    seed: u64,
) -> Result<ReplicaResult> {
    let schedule = snapshot_schedule(t_end, snapshot_dt)?;
    let n0 = initial.len();
    let mut state = SimState::new(initial, *kernels, rng)?;
    let mut snapshots = Vec::with_capacity(schedule.len());
    let mut next = 0;
    if state.config.is_empty() {
        for &t in &schedule {
            snapshots.push(Snapshot {
                time: t,
                config: state.config.clone(),
            });
        }
    } else {
        loop {
            let t_next = state.clock + state.waiting_time();
            while next < schedule.len() && schedule[next] < t_next {
                snapshots.push(Snapshot {
                    time: schedule[next],
                    config: state.config.clone(),
                });
                next += 1;
            }
            if next == schedule.len() {
                state.clock = t_end;
                break;
            }
            state.clock = t_next;
            state.attempt_jump();
        }
    }
    for s in &snapshots {
        assert_eq!(s.config.len(), n0, "particle number changed during a run");
    }
    Ok(ReplicaResult {
        seed,
        snapshots,
        counters: state.counters,
    })
}

/// Runs one trajectory; bit-reproducible for a given seed.
pub fn run(
    initial: Configuration,
    kernels: &KernelSpec,
    t_end: f64,
    snapshot_dt: f64,
    seed: u64,
) -> Result<ReplicaResult> {
    run_with_stream(
        initial,
        kernels,
        t_end,
        snapshot_dt,
        ChaCha8Rng::seed_from_u64(seed),
        seed,
    )
}

/// Independent replicas in parallel; replica `r` draws its initial state and
/// dynamics from `replica_stream(seed, r)`.
pub fn run_ensemble(
    domain: &TorusDomain,
    law: &InitialLaw,
    kernels: &KernelSpec,
    t_end: f64,
    snapshot_dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<ReplicaResult>> {
    kernels.check_domain(domain)?;
    snapshot_schedule(t_end, snapshot_dt)?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_stream(seed, r);
            let initial = law.sample(domain, &mut rng)?;
            run_with_stream(initial, kernels, t_end, snapshot_dt, rng, seed ^ r)
        })
        .collect()
}
