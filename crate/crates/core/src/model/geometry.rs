use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the torus. Components beyond the domain dimension are zero.
pub type Position = [f64; 3];

/// Periodic box `[0, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusDomain {
    dim: usize,
    side: f64,
}

impl TorusDomain {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "side length must be positive (got {side})"
            )));
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Maps an arbitrary point onto its representative in `[0, L)^d`.
    pub fn wrap(&self, p: Position) -> Position {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let mut v = p[i].rem_euclid(self.side);
            // rem_euclid can round up to exactly L for tiny negative inputs
            if v >= self.side {
                v = 0.0;
            }
            *o = v;
        }
        out
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0..3).all(|i| {
            if i < self.dim {
                p[i] >= 0.0 && p[i] < self.side
            } else {
                p[i] == 0.0
            }
        })
    }

    /// Minimum-image displacement `p - q`, every component in `[-L/2, L/2)`.
    pub fn min_image(&self, p: &Position, q: &Position) -> Position {
        min_image(p, q, self)
    }

    pub fn distance(&self, p: &Position, q: &Position) -> f64 {
        norm(&self.min_image(p, q))
    }
}

pub fn min_image(p: &Position, q: &Position, domain: &TorusDomain) -> Position {
    let l = domain.side;
    let mut out = [0.0; 3];
    for i in 0..domain.dim {
        let d = p[i] - q[i];
        let mut w = d - l * (d / l + 0.5).floor();
        if w >= 0.5 * l {
            w -= l;
        } else if w < -0.5 * l {
            w += l;
        }
        out[i] = w;
    }
    out
}

pub fn norm(v: &Position) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

pub fn ball_volume(dim: usize, r: f64) -> f64 {
    unit_ball_volume(dim) * r.powi(dim as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_across_boundary_in_1d() {
        let dom = TorusDomain::new(1, 10.0).unwrap();
        let d = min_image(&[9.5, 0.0, 0.0], &[0.5, 0.0, 0.0], &dom);
        assert_eq!(d[0], -1.0);
    }

    #[test]
    fn identical_points_have_zero_displacement() {
        let dom = TorusDomain::new(3, 2.0).unwrap();
        let p = [0.3, 1.9, 0.7];
        assert_eq!(min_image(&p, &p, &dom), [0.0; 3]);
    }

    #[test]
    fn componentwise_wrap_in_2d() {
        let dom = TorusDomain::new(2, 4.0).unwrap();
        let d = min_image(&[3.9, 0.1, 0.0], &[0.1, 3.9, 0.0], &dom);
        assert!((d[0] + 0.2).abs() < 1e-12);
        assert!((d[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn half_box_maps_to_lower_edge() {
        let dom = TorusDomain::new(1, 10.0).unwrap();
        let d = min_image(&[5.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &dom);
        assert_eq!(d[0], -5.0);
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(TorusDomain::new(0, 1.0).is_err());
        assert!(TorusDomain::new(4, 1.0).is_err());
        assert!(TorusDomain::new(2, 0.0).is_err());
        assert!(TorusDomain::new(2, f64::NAN).is_err());
    }

    #[test]
    fn wrap_stays_inside() {
        let dom = TorusDomain::new(2, 3.0).unwrap();
        let p = dom.wrap([-1e-18, 7.5, 0.0]);
        assert!(dom.contains(&p));
        assert!((p[1] - 1.5).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn min_image_is_bounded(
            px in 0.0f64..5.0, py in 0.0f64..5.0, qx in 0.0f64..5.0, qy in 0.0f64..5.0
        ) {
            let dom = TorusDomain::new(2, 5.0).unwrap();
            let d = min_image(&[px, py, 0.0], &[qx, qy, 0.0], &dom);
            for c in d.iter().take(2) {
                proptest::prop_assert!(*c >= -2.5 && *c < 2.5);
            }
            proptest::prop_assert!(norm(&d) <= 5.0 * 2f64.sqrt() / 2.0 + 1e-12);
            // same residue class as p - q
            let k = ((px - qx) - d[0]) / 5.0;
            proptest::prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }
}
