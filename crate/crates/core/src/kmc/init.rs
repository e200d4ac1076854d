use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Configuration, Position, TorusDomain};

/// Law of the initial configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitialLaw {
    /// Homogeneous Poisson process of the given intensity.
    Poisson { intensity: f64 },
    /// `round((κ L^d)^{1/d})` points per axis on a regular grid, each shifted
    /// uniformly by up to `±jitter/2` grid spacings per axis.
    JitteredGrid { intensity: f64, jitter: f64 },
    Fixed(Configuration),
}

impl InitialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, domain: &TorusDomain, rng: &mut R) -> Result<Configuration> {
        match self {
            InitialLaw::Poisson { intensity } => {
                check_intensity(*intensity)?;
                let mean = intensity * domain.volume();
                let n = if mean > 0.0 {
                    Poisson::new(mean)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?
                        .sample(rng) as usize
                } else {
                    0
                };
                Ok(Configuration::from_points(
                    *domain,
                    (0..n).map(|_| uniform_point(domain, rng)),
                ))
            }
            InitialLaw::JitteredGrid { intensity, jitter } => {
                check_intensity(*intensity)?;
                if !(0.0..=1.0).contains(jitter) {
                    return Err(Error::InvalidParameter(format!(
                        "jitter must lie in [0, 1] (got {jitter})"
                    )));
                }
                let d = domain.dim();
                let per_axis = (intensity * domain.volume()).powf(1.0 / d as f64).round() as usize;
                let spacing = domain.side() / per_axis.max(1) as f64;
                let total = per_axis.pow(d as u32);
                let mut pts = Vec::with_capacity(total);
                for k in 0..total {
                    let mut p = [0.0; 3];
                    let mut kk = k;
                    for c in p.iter_mut().take(d) {
                        let j = kk % per_axis;
                        kk /= per_axis;
                        let shift = jitter * (rng.random::<f64>() - 0.5);
                        *c = (j as f64 + 0.5 + shift) * spacing;
                    }
                    pts.push(p);
                }
                Ok(Configuration::from_points(*domain, pts))
            }
            InitialLaw::Fixed(c) => {
                if c.domain() != domain {
                    return Err(Error::InvalidParameter(
                        "fixed configuration lives on a different domain".into(),
                    ));
                }
                Ok(c.clone())
            }
        }
    }
}

fn check_intensity(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "intensity must be finite and nonnegative (got {k})"
        )))
    }
}

pub fn uniform_point<R: Rng + ?Sized>(domain: &TorusDomain, rng: &mut R) -> Position {
    let mut p = [0.0; 3];
    for c in p.iter_mut().take(domain.dim()) {
        *c = rng.random::<f64>() * domain.side();
    }
    domain.wrap(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmc::replica_stream;

    #[test]
    fn jittered_grid_has_expected_count() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let law = InitialLaw::JitteredGrid {
            intensity: 0.25,
            jitter: 0.5,
        };
        let c = law.sample(&dom, &mut replica_stream(3, 0)).unwrap();
        assert_eq!(c.len(), 25);
        assert!(c.points().iter().all(|p| dom.contains(p)));
    }

    #[test]
    fn negative_intensity_is_rejected() {
        let dom = TorusDomain::new(1, 10.0).unwrap();
        let law = InitialLaw::Poisson { intensity: -0.5 };
        assert!(law.sample(&dom, &mut replica_stream(3, 0)).is_err());
    }
}
