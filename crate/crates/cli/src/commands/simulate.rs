use kawasaki_core::estimators::{
    density_estimate, pair_correlation_estimate, sub_poissonian_check, uniform_edges,
};
use kawasaki_core::kmc::{run_ensemble, EventCounters};
use kawasaki_core::output::{write_bound_checks_csv, write_moments_csv, write_snapshots_csv};
use kawasaki_core::{BoundCheck, Configuration, KernelSpec, MomentEstimate};
use serde::Serialize;

use crate::artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
struct Truncation {
    jump_cutoff: f64,
    jump_tail_fraction: f64,
    repulsion_cutoff: f64,
    repulsion_tail_fraction: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'static str,
    seed: u64,
    replicas: usize,
    kernels: &'a KernelSpec,
    intensity: f64,
    counters: EventCounters,
    acceptance_ratio: f64,
    truncation: Truncation,
    all_checks_pass: bool,
    checks: &'a [BoundCheck],
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let spec = cfg.kernel_spec()?;
    let domain = cfg.torus()?;
    let law = cfg.initial_law()?;
    spec.check_domain(&domain)?;
    let dy = &cfg.dynamics;
    let c = cfg.initial.intensity;
    let edges = uniform_edges(dy.pair_r_max, dy.pair_bins);

    let runs = run_ensemble(&domain, &law, &spec, dy.t_end, dy.snapshot_dt, dy.replicas, dy.seed)?;
    let counters = runs
        .iter()
        .map(|r| r.counters)
        .fold(EventCounters::default(), EventCounters::merge);

    let mut estimates: Vec<MomentEstimate> = Vec::new();
    let mut checks = Vec::new();
    for k in 0..runs[0].snapshots.len() {
        let t = runs[0].snapshots[k].time;
        let snaps: Vec<&Configuration> = runs.iter().map(|r| &r.snapshots[k].config).collect();
        for est in [
            density_estimate(&snaps, t)?,
            pair_correlation_estimate(&snaps, &edges, t)?,
        ] {
            checks.push(sub_poissonian_check(&est, c, spec.alpha, t));
            estimates.push(est);
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);

    if cfg.outputs.snapshots && cfg.writes(crate::config::Format::Csv) {
        for (r, run) in runs.iter().enumerate() {
            let path = cfg.outputs.directory.join(format!("snapshots/replica_{r:05}.csv"));
            artifacts::write_to(&path, |w| write_snapshots_csv(w, spec.dim(), &run.snapshots))?;
        }
    }
    artifacts::csv(cfg, "moments.csv", |w| write_moments_csv(w, &estimates))?;
    artifacts::csv(cfg, "bound_checks.csv", |w| write_bound_checks_csv(w, &checks))?;
    artifacts::json(
        cfg,
        "manifest.json",
        &Manifest {
            command: "simulate",
            seed: dy.seed,
            replicas: dy.replicas,
            kernels: &spec,
            intensity: c,
            counters,
            acceptance_ratio: counters.acceptance_ratio(),
            truncation: Truncation {
                jump_cutoff: spec.jump.cutoff,
                jump_tail_fraction: spec.jump.tail_fraction,
                repulsion_cutoff: spec.repulsion.cutoff,
                repulsion_tail_fraction: spec.repulsion.tail_fraction,
            },
            all_checks_pass: all_pass,
            checks: &checks,
        },
    )?;
    println!(
        "simulate: {} replicas, acceptance ratio {:.4}, {} of {} bound checks pass",
        dy.replicas,
        counters.acceptance_ratio(),
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    );
    if all_pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("sub-Poissonian bound violated".into()))
    }
}
