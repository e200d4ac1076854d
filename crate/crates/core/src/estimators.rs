//! Correlation-function estimates from snapshots and the checks run on them.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::{free_solution, CorrelationField};
use crate::model::{ball_volume, Configuration, SupportBox};

/// Standard errors are multiplied by this before a statistical verdict.
pub const SIGMA_SLACK: f64 = 3.0;
/// Absolute slack for deterministic inputs.
pub const DETERMINISTIC_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub time: f64,
    /// Radial bin edges for `order = 2`; empty otherwise.
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub sample_count: usize,
}

impl MomentEstimate {
    /// `(bin_lo, bin_hi)` of entry `i`; `(0, 0)` when there are no bins.
    pub fn bin(&self, i: usize) -> (f64, f64) {
        if self.edges.is_empty() {
            (0.0, 0.0)
        } else {
            (self.edges[i], self.edges[i + 1])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub shell_volumes: Vec<f64>,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn snapshot_volume(snapshots: &[&Configuration]) -> Result<f64> {
    let first = snapshots.first().ok_or(Error::NoSnapshots)?;
    let dom = first.domain();
    if snapshots.iter().any(|s| s.domain() != dom) {
        return Err(Error::Incompatible("snapshots live on different domains".into()));
    }
    Ok(dom.volume())
}

/// `k̂^(1) = mean(N)/|Λ|`.
pub fn density_estimate(snapshots: &[&Configuration], time: f64) -> Result<MomentEstimate> {
    let vol = snapshot_volume(snapshots)?;
    let xs: Vec<f64> = snapshots.iter().map(|s| s.len() as f64 / vol).collect();
    let (m, se) = mean_and_stderr(&xs);
    Ok(MomentEstimate {
        order: 1,
        time,
        edges: Vec::new(),
        values: vec![m],
        stderr: vec![se],
        sample_count: xs.len(),
    })
}

/// Spatially averaged factorial-moment density `⟨N(N−1)…(N−n+1)⟩/|Λ|^n`.
pub fn factorial_moment_density(
    snapshots: &[&Configuration],
    order: usize,
    time: f64,
) -> Result<MomentEstimate> {
    let vol = snapshot_volume(snapshots)?;
    let xs: Vec<f64> = snapshots
        .iter()
        .map(|s| {
            let n = s.len() as f64;
            (0..order).map(|j| (n - j as f64) / vol).product()
        })
        .collect();
    let (m, se) = mean_and_stderr(&xs);
    Ok(MomentEstimate {
        order,
        time,
        edges: Vec::new(),
        values: vec![m],
        stderr: vec![se],
        sample_count: xs.len(),
    })
}

fn check_edges(edges: &[f64], half: f64) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    if edges[0] < 0.0 || edges.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater)) {
        return Err(Error::InvalidParameter(
            "bin edges must be nonnegative and strictly increasing".into(),
        ));
    }
    if let Some(&edge) = edges.iter().find(|&&e| e > half) {
        return Err(Error::BinBeyondHalfBox { edge, half });
    }
    Ok(())
}

/// `count` evenly spaced edges from `0` to `r_max`.
pub fn uniform_edges(r_max: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| r_max * i as f64 / bins as f64).collect()
}

/// Ordered-pair distance histogram of one configuration. The last bin is
/// closed on the right.
pub fn pair_histogram(config: &Configuration, edges: &[f64]) -> Result<PairHistogram> {
    let dom = config.domain();
    check_edges(edges, 0.5 * dom.side())?;
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    let (lo, hi) = (edges[0], edges[nb]);
    let pts = config.points();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let r = dom.distance(&pts[i], &pts[j]);
            if r < lo || r > hi {
                continue;
            }
            let b = (edges.partition_point(|&e| e <= r) - 1).min(nb - 1);
            counts[b] += 2;
        }
    }
    let shell_volumes = edges
        .windows(2)
        .map(|w| ball_volume(dom.dim(), w[1]) - ball_volume(dom.dim(), w[0]))
        .collect();
    Ok(PairHistogram {
        edges: edges.to_vec(),
        counts,
        shell_volumes,
    })
}

/// `k̂^(2)(r)` per bin: ordered-pair count over `|Λ| × shell volume`, averaged
/// over snapshots.
pub fn pair_correlation_estimate(
    snapshots: &[&Configuration],
    edges: &[f64],
    time: f64,
) -> Result<MomentEstimate> {
    let vol = snapshot_volume(snapshots)?;
    let per: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| {
            pair_histogram(s, edges).map(|h| {
                h.counts
                    .iter()
                    .zip(&h.shell_volumes)
                    .map(|(&c, &v)| c as f64 / (vol * v))
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    let nb = edges.len() - 1;
    let mut values = Vec::with_capacity(nb);
    let mut stderr = Vec::with_capacity(nb);
    let mut col = vec![0.0; per.len()];
    for b in 0..nb {
        for (c, row) in col.iter_mut().zip(&per) {
            *c = row[b];
        }
        let (m, se) = mean_and_stderr(&col);
        values.push(m);
        stderr.push(se);
    }
    Ok(MomentEstimate {
        order: 2,
        time,
        edges: edges.to_vec(),
        values,
        stderr,
        sample_count: per.len(),
    })
}

/// `k̂^(1)` on a grid of `cells_per_axis^d` boxes, for initial laws that are not
/// translation invariant. Entry order: first axis fastest.
pub fn gridded_density(
    snapshots: &[&Configuration],
    cells_per_axis: usize,
    time: f64,
) -> Result<MomentEstimate> {
    snapshot_volume(snapshots)?;
    if cells_per_axis == 0 {
        return Err(Error::InvalidParameter("need at least one cell per axis".into()));
    }
    let dom = snapshots[0].domain();
    let d = dom.dim();
    let w = dom.side() / cells_per_axis as f64;
    let cells = cells_per_axis.pow(d as u32);
    let cell_vol = w.powi(d as i32);
    let per: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| {
            let mut c = vec![0.0; cells];
            for p in s.points() {
                let idx = (0..d).rev().fold(0, |acc, i| {
                    acc * cells_per_axis + ((p[i] / w) as usize).min(cells_per_axis - 1)
                });
                c[idx] += 1.0 / cell_vol;
            }
            c
        })
        .collect();
    let mut values = Vec::with_capacity(cells);
    let mut stderr = Vec::with_capacity(cells);
    let mut col = vec![0.0; per.len()];
    for k in 0..cells {
        for (c, row) in col.iter_mut().zip(&per) {
            *c = row[k];
        }
        let (m, se) = mean_and_stderr(&col);
        values.push(m);
        stderr.push(se);
    }
    Ok(MomentEstimate {
        order: 1,
        time,
        edges: Vec::new(),
        values,
        stderr,
        sample_count: per.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub t: f64,
    pub n: usize,
    pub bound: f64,
    /// Largest value seen.
    pub worst_value: f64,
    /// `min(bound − value)` over all entries; negative means a raw violation.
    /// Negative values fail the check but do not enter the margin.
    pub margin: f64,
    pub pass: bool,
}

fn check_entries(
    n: usize,
    t: f64,
    bound: f64,
    entries: impl Iterator<Item = (f64, f64)>,
) -> BoundCheck {
    let mut worst_value = f64::NEG_INFINITY;
    let mut margin = f64::INFINITY;
    let mut pass = true;
    for (v, slack) in entries {
        worst_value = worst_value.max(v);
        margin = margin.min(bound - v);
        if !(v <= bound + slack && v >= -slack) {
            pass = false;
        }
    }
    BoundCheck {
        t,
        n,
        bound,
        worst_value,
        margin,
        pass,
    }
}

/// `0 ≤ k̂^(n) ≤ C^n e^{ntα}` within `3σ` per entry.
pub fn sub_poissonian_check(estimate: &MomentEstimate, c: f64, alpha: f64, t: f64) -> BoundCheck {
    let bound = free_solution(c, alpha, t, estimate.order);
    check_entries(
        estimate.order,
        t,
        bound,
        estimate
            .values
            .iter()
            .zip(&estimate.stderr)
            .map(|(&v, &s)| (v, SIGMA_SLACK * s)),
    )
}

/// The same bound, pointwise over the stored entries of orders 1 and 2 of a
/// field, with absolute slack `1e−8`.
pub fn sub_poissonian_check_field(
    field: &CorrelationField,
    c: f64,
    alpha: f64,
    t: f64,
) -> Vec<BoundCheck> {
    (1..=field.n_max().min(2))
        .map(|n| {
            check_entries(
                n,
                t,
                free_solution(c, alpha, t, n),
                field.order(n).iter().map(|&v| (v, DETERMINISTIC_SLACK)),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceCheck {
    /// `∫∫ k^(2) + ∫ k^(1) − (∫ k^(1))²` over the window.
    pub value: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `Var(N_{Λ′}) ≥ 0` for a lattice field, summing over the sites inside `window`.
pub fn variance_positivity_check_field(field: &CorrelationField, window: &SupportBox) -> VarianceCheck {
    let lat = field.lattice();
    let hd = lat.cell_volume();
    let sites: Vec<usize> = (0..lat.n_sites())
        .filter(|&s| window.contains(&lat.position(s)))
        .collect();
    let one: f64 = sites.iter().map(|&x| field.value(&[x])).sum::<f64>() * hd;
    let mut two = 0.0;
    for &x in &sites {
        for &y in &sites {
            two += field.value(&[x, y]);
        }
    }
    let value = two * hd * hd + one - one * one;
    VarianceCheck {
        value,
        slack: DETERMINISTIC_SLACK,
        pass: value >= -DETERMINISTIC_SLACK,
    }
}

/// `Var(N_{Λ′}) ≥ 0` from a density and a radial pair estimate, by midpoint
/// quadrature over `Λ′ × Λ′`. Beyond the last bin `k^(2)` is taken as `k̂1²`.
/// The slack is `3σ` with the per-bin errors added in absolute value.
pub fn variance_positivity_check(
    density: &MomentEstimate,
    pair: &MomentEstimate,
    window: &SupportBox,
) -> VarianceCheck {
    let d = window.dim;
    let vol = window.volume();
    if vol <= 0.0 {
        return VarianceCheck {
            value: 0.0,
            slack: 0.0,
            pass: true,
        };
    }
    let per_axis: usize = match d {
        1 => 256,
        2 => 32,
        _ => 12,
    };
    let mut pts = Vec::with_capacity(per_axis.pow(d as u32));
    for k in 0..per_axis.pow(d as u32) {
        let mut p = [0.0; 3];
        let mut kk = k;
        for (i, c) in p.iter_mut().enumerate().take(d) {
            let j = kk % per_axis;
            kk /= per_axis;
            *c = window.lo[i] + (j as f64 + 0.5) * (window.hi[i] - window.lo[i]) / per_axis as f64;
        }
        pts.push(p);
    }
    let cell = vol / pts.len() as f64;
    let k1 = density.values[0];
    let s1 = density.stderr[0];
    let nb = pair.values.len();
    let mut weights = vec![0.0; nb];
    let mut outside = 0.0;
    for p in &pts {
        for q in &pts {
            let r = (0..d).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt();
            if r > pair.edges[nb] || r < pair.edges[0] {
                outside += cell * cell;
            } else {
                let b = (pair.edges.partition_point(|&e| e <= r) - 1).min(nb - 1);
                weights[b] += cell * cell;
            }
        }
    }
    let two: f64 = weights.iter().zip(&pair.values).map(|(w, v)| w * v).sum::<f64>()
        + outside * k1 * k1;
    let one = k1 * vol;
    let value = two + one - one * one;
    let sigma = weights.iter().zip(&pair.stderr).map(|(w, s)| w * s).sum::<f64>()
        + (2.0 * outside * k1 + vol - 2.0 * one * vol).abs() * s1;
    let slack = SIGMA_SLACK * sigma;
    VarianceCheck {
        value,
        slack,
        pass: value >= -slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{ClosureKind, ClosureRule, FieldMode};
    use crate::lattice::Lattice;
    use crate::model::TorusDomain;

    fn line(l: f64) -> TorusDomain {
        TorusDomain::new(1, l).unwrap()
    }

    #[test]
    fn density_examples() {
        let dom = line(10.0);
        let a = Configuration::from_points(dom, (0..5).map(|i| [i as f64, 0.0, 0.0]));
        let e = density_estimate(&[&a, &a, &a], 0.0).unwrap();
        assert_eq!(e.values, vec![0.5]);
        assert_eq!(e.stderr, vec![0.0]);
        let empty = Configuration::empty(dom);
        assert_eq!(density_estimate(&[&empty], 0.0).unwrap().values, vec![0.0]);
        assert!(matches!(density_estimate(&[], 0.0), Err(Error::NoSnapshots)));
    }

    #[test]
    fn two_particles_fill_one_bin() {
        let dom = line(10.0);
        let c = Configuration::from_points(dom, [[1.0, 0.0, 0.0], [3.3, 0.0, 0.0]]);
        let e = pair_correlation_estimate(&[&c], &uniform_edges(5.0, 10), 0.0).unwrap();
        for (i, v) in e.values.iter().enumerate() {
            if i == 4 {
                assert!((v - 2.0 / (10.0 * 1.0)).abs() < 1e-15);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn bins_beyond_half_box_are_rejected() {
        let c = Configuration::empty(line(10.0));
        assert!(matches!(
            pair_correlation_estimate(&[&c], &[0.0, 5.5], 0.0),
            Err(Error::BinBeyondHalfBox { .. })
        ));
        assert!(pair_correlation_estimate(&[&c], &[0.0, 1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn bound_check_examples() {
        let k = 0.3;
        let e = MomentEstimate {
            order: 1,
            time: 0.0,
            edges: vec![],
            values: vec![k],
            stderr: vec![0.0],
            sample_count: 1,
        };
        let r = sub_poissonian_check(&e, k, 1.0, 0.0);
        assert!(r.pass);
        assert_eq!(r.margin, 0.0);

        let lat = Lattice::new(1, 16, 0.25).unwrap();
        let rule = ClosureRule::new(ClosureKind::PoissonTail, 2).unwrap();
        let f = CorrelationField::poisson(lat, FieldMode::Invariant, rule, 1, k).unwrap();
        let m1 = sub_poissonian_check_field(&f, k, 1.0, 1.0)[1].margin;
        let m2 = sub_poissonian_check_field(&f, k, 1.0, 2.0)[1].margin;
        assert!(m2 > m1 && m1 > 0.0);

        let t: f64 = 0.7;
        let bad = CorrelationField::from_fn(lat, FieldMode::Invariant, rule, 1, |x| {
            1.01 * (k * t.exp()).powi(x.len() as i32)
        })
        .unwrap();
        let r = sub_poissonian_check_field(&bad, k, 1.0, t);
        assert!(!r[0].pass && r[0].margin < 0.0);
    }

    #[test]
    fn variance_examples() {
        let lat = Lattice::new(1, 40, 0.25).unwrap();
        let rule = ClosureRule::new(ClosureKind::ZeroTail, 2).unwrap();
        let kappa = 0.5;
        let win = SupportBox::new(1, [0.0; 3], [4.0, 0.0, 0.0]).unwrap();
        let f = CorrelationField::poisson(lat, FieldMode::Invariant, rule, 1, kappa).unwrap();
        let v = variance_positivity_check_field(&f, &win);
        assert!((v.value - kappa * 4.0).abs() < 1e-12 && v.pass);

        let no_pairs = CorrelationField::from_fn(lat, FieldMode::Invariant, rule, 1, |t| {
            if t.len() == 1 {
                kappa
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(!variance_positivity_check_field(&no_pairs, &win).pass);
        let small = SupportBox::new(1, [0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert!(variance_positivity_check_field(&no_pairs, &small).pass);

        let empty = SupportBox {
            dim: 1,
            lo: [0.0; 3],
            hi: [0.0; 3],
        };
        let d = MomentEstimate {
            order: 1,
            time: 0.0,
            edges: vec![],
            values: vec![kappa],
            stderr: vec![0.0],
            sample_count: 1,
        };
        let p = MomentEstimate {
            order: 2,
            time: 0.0,
            edges: uniform_edges(5.0, 5),
            values: vec![kappa * kappa; 5],
            stderr: vec![0.0; 5],
            sample_count: 1,
        };
        let v = variance_positivity_check(&d, &p, &empty);
        assert!(v.pass && v.value == 0.0);
        let v = variance_positivity_check(&d, &p, &win);
        assert!((v.value - kappa * 4.0).abs() < 1e-9, "{}", v.value);
    }
}
