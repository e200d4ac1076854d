use kawasaki_core::output::write_ladder_csv;
use kawasaki_core::scheduler::{build_ladder, norm_certificate, Certificate, ScaleParams};
use kawasaki_core::Error;
use serde::Serialize;

use super::upper_scale;
use crate::artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'static str,
    params: &'a ScaleParams,
    t_target: f64,
    steps: usize,
    reached: f64,
    anomaly: Option<String>,
    all_certificates_valid: bool,
    certificates: Vec<Certificate>,
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let p = cfg.scheduler_params()?;
    let t_target = cfg.scheduler.t_target;
    let ladder = match build_ladder(&p, t_target, cfg.scheduler.max_steps) {
        Ok(l) => l,
        Err(e @ Error::LadderAnomaly { steps, reached, .. }) => {
            artifacts::json(
                cfg,
                "manifest.json",
                &Manifest {
                    command: "schedule",
                    params: &p,
                    t_target,
                    steps,
                    reached,
                    anomaly: Some(e.to_string()),
                    all_certificates_valid: false,
                    certificates: Vec::new(),
                },
            )?;
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let certificates = ladder
        .theta_star
        .iter()
        .zip(&ladder.steps)
        .map(|(&low, &s)| norm_certificate(low, upper_scale(low, s, &p), s, &p))
        .collect::<Result<Vec<_>, _>>()?;
    let all_valid = certificates.iter().all(|c| c.valid);
    artifacts::csv(cfg, "ladder.csv", |w| write_ladder_csv(w, &ladder))?;
    artifacts::json(
        cfg,
        "manifest.json",
        &Manifest {
            command: "schedule",
            params: &p,
            t_target,
            steps: ladder.len(),
            reached: ladder.reached(),
            anomaly: None,
            all_certificates_valid: all_valid,
            certificates,
        },
    )?;
    println!(
        "ladder: {} steps reaching t = {} (epsilon = {})",
        ladder.len(),
        ladder.reached(),
        p.epsilon
    );
    if all_valid {
        Ok(())
    } else {
        Err(CliError::CheckFailed("a ladder step lacks a valid certificate".into()))
    }
}
