//! Radial, compactly supported jump kernels and repulsion potentials.
//!
//! Each family is parameterized by a height (value at the origin) and a length
//! scale. Smooth families are cut off at the smallest radius (on a 0.01 grid in
//! units of the length scale) where the discarded tail carries less than
//! [`TAIL_TOLERANCE`] of the untruncated mass; all derived constants use the
//! truncated closed forms.

use serde::{Deserialize, Serialize};

use super::geometry::{norm, unit_ball_volume, unit_sphere_area, Position, TorusDomain};
use crate::error::{Error, Result};

pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelFamily {
    /// `height` on the closed ball of radius `range`.
    TopHat { height: f64, range: f64 },
    /// `height * exp(-r^2 / (2 width^2))`.
    TruncatedGaussian { height: f64, width: f64 },
    /// `height * exp(-r / decay)`.
    TruncatedExponential { height: f64, decay: f64 },
}

impl KernelFamily {
    pub fn height(&self) -> f64 {
        match *self {
            KernelFamily::TopHat { height, .. }
            | KernelFamily::TruncatedGaussian { height, .. }
            | KernelFamily::TruncatedExponential { height, .. } => height,
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            KernelFamily::TopHat { range, .. } => range,
            KernelFamily::TruncatedGaussian { width, .. } => width,
            KernelFamily::TruncatedExponential { decay, .. } => decay,
        }
    }

    pub fn zero() -> Self {
        KernelFamily::TopHat {
            height: 0.0,
            range: 1.0,
        }
    }
}

/// A radial profile `f(|x|)` on `R^d` together with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialKernel {
    pub family: KernelFamily,
    pub dim: usize,
    pub cutoff: f64,
    /// `∫ f` over `R^d` of the truncated profile.
    pub integral: f64,
    /// Untruncated mass discarded beyond `cutoff`, relative to the full mass.
    pub tail_fraction: f64,
}

impl RadialKernel {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        let h = family.height();
        let s = family.scale();
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel height must be finite and nonnegative (got {h})"
            )));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel length scale must be positive (got {s})"
            )));
        }
        let (cutoff, tail_fraction) = match family {
            KernelFamily::TopHat { range, .. } => (range, 0.0),
            _ => {
                let mut u = 1.0;
                let mut k = 100usize;
                while tail_of(&family, dim, u) >= TAIL_TOLERANCE {
                    k += 1;
                    u = k as f64 / 100.0;
                }
                (u * s, tail_of(&family, dim, u))
            }
        };
        let mut kernel = Self {
            family,
            dim,
            cutoff,
            integral: 0.0,
            tail_fraction,
        };
        kernel.integral = kernel.mass_within(cutoff);
        Ok(kernel)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(KernelFamily::zero(), dim).expect("zero kernel is valid")
    }

    pub fn height(&self) -> f64 {
        self.family.height()
    }

    pub fn is_zero(&self) -> bool {
        self.height() == 0.0
    }

    /// Profile value at radius `r`; zero beyond the cutoff.
    pub fn value(&self, r: f64) -> f64 {
        if r > self.cutoff {
            return 0.0;
        }
        match self.family {
            KernelFamily::TopHat { height, .. } => height,
            KernelFamily::TruncatedGaussian { height, width } => {
                height * (-(r * r) / (2.0 * width * width)).exp()
            }
            KernelFamily::TruncatedExponential { height, decay } => height * (-r / decay).exp(),
        }
    }

    pub fn at(&self, displacement: &Position) -> f64 {
        self.value(norm(displacement))
    }

    /// Closed-form `∫_{|x| ≤ r} f(x) dx` for `r ≤ cutoff`.
    pub fn mass_within(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.cutoff);
        let d = self.dim;
        match self.family {
            KernelFamily::TopHat { height, .. } => height * unit_ball_volume(d) * r.powi(d as i32),
            KernelFamily::TruncatedGaussian { height, width } => {
                height
                    * (2.0 * std::f64::consts::PI * width * width).powf(d as f64 / 2.0)
                    * gaussian_radial_cdf(d, r / width)
            }
            KernelFamily::TruncatedExponential { height, decay } => {
                height
                    * unit_sphere_area(d)
                    * decay.powi(d as i32)
                    * lower_gamma_int(d, r / decay)
            }
        }
    }

    /// Samples a radius with density proportional to `f(r) r^{d-1}` on `[0, cutoff]`.
    pub fn sample_radius(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let d = self.dim;
        match self.family {
            KernelFamily::TopHat { range, .. } => range * u.powf(1.0 / d as f64),
            KernelFamily::TruncatedGaussian { width, .. } if d == 2 => {
                let uc = self.cutoff / width;
                let p = -(-0.5 * uc * uc).exp_m1();
                (width * (-2.0 * (-u * p).ln_1p()).sqrt()).min(self.cutoff)
            }
            KernelFamily::TruncatedExponential { decay, .. } if d == 1 => {
                let xc = self.cutoff / decay;
                let p = -(-xc).exp_m1();
                (-decay * (-u * p).ln_1p()).min(self.cutoff)
            }
            _ => self.invert_cdf(u),
        }
    }

    fn invert_cdf(&self, u: f64) -> f64 {
        let target = u * self.integral;
        let (mut lo, mut hi) = (0.0, self.cutoff);
        let mut r = 0.5 * self.cutoff;
        for _ in 0..200 {
            let f = self.mass_within(r) - target;
            if f.abs() <= 1e-15 * self.integral {
                break;
            }
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let dens = self.value(r) * unit_sphere_area(self.dim) * r.powi(self.dim as i32 - 1);
            let newton = if dens > 0.0 { r - f / dens } else { f64::NAN };
            r = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * self.cutoff {
                break;
            }
        }
        r
    }

    /// Composite Simpson rule for `∫_{R^d} g(f(|x|)) dx` over the support.
    pub fn radial_quadrature(&self, g: impl Fn(f64) -> f64, intervals: usize) -> f64 {
        let n = intervals.max(2) & !1;
        let h = self.cutoff / n as f64;
        let d = self.dim as i32;
        let w = |r: f64| g(self.value(r)) * r.powi(d - 1);
        let mut acc = w(0.0) + w(self.cutoff);
        for i in 1..n {
            let c = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += c * w(i as f64 * h);
        }
        unit_sphere_area(self.dim) * acc * h / 3.0
    }
}

/// Fraction of the untruncated mass beyond `u` length scales.
fn tail_of(family: &KernelFamily, dim: usize, u: f64) -> f64 {
    match family {
        KernelFamily::TopHat { .. } => 0.0,
        KernelFamily::TruncatedGaussian { .. } => {
            let a = u / std::f64::consts::SQRT_2;
            match dim {
                1 => libm::erfc(a),
                2 => (-0.5 * u * u).exp(),
                _ => {
                    libm::erfc(a)
                        + (2.0 / std::f64::consts::PI).sqrt() * u * (-0.5 * u * u).exp()
                }
            }
        }
        KernelFamily::TruncatedExponential { .. } => {
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..dim {
                term *= u / k as f64;
                sum += term;
            }
            (-u).exp() * sum
        }
    }
}

/// Probability that a standard `d`-dimensional normal has norm at most `u`.
fn gaussian_radial_cdf(dim: usize, u: f64) -> f64 {
    let a = u / std::f64::consts::SQRT_2;
    match dim {
        1 => libm::erf(a),
        2 => -(-0.5 * u * u).exp_m1(),
        _ => libm::erf(a) - (2.0 / std::f64::consts::PI).sqrt() * u * (-0.5 * u * u).exp(),
    }
}

/// Lower incomplete gamma `γ(d, x)` for integer `d ≥ 1`.
fn lower_gamma_int(d: usize, x: f64) -> f64 {
    let mut fact = 1.0;
    for k in 1..d {
        fact *= k as f64;
    }
    if d == 1 {
        return -(-x).exp_m1();
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..d {
        term *= x / k as f64;
        sum += term;
    }
    fact * (1.0 - (-x).exp() * sum)
}

/// Jump kernel `a` and repulsion potential `φ` with their derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub jump: RadialKernel,
    pub repulsion: RadialKernel,
    /// `∫ a`.
    pub alpha: f64,
    /// `⟨φ⟩ = ∫ φ`.
    pub mean_phi: f64,
    /// `φ̄ = sup φ`.
    pub sup_phi: f64,
    /// Largest support radius of `a` and `φ`.
    pub cutoff_radius: f64,
    /// Drops the jumping particle's own contribution from the repulsion sum.
    pub exclude_self_term: bool,
}

impl KernelSpec {
    pub fn new(jump: KernelFamily, repulsion: KernelFamily, dim: usize) -> Result<Self> {
        let jump = RadialKernel::new(jump, dim)?;
        let repulsion = RadialKernel::new(repulsion, dim)?;
        if jump.is_zero() {
            return Err(Error::InvalidParameter(
                "jump kernel must have positive height".into(),
            ));
        }
        Ok(Self {
            alpha: jump.integral,
            mean_phi: repulsion.integral,
            sup_phi: repulsion.height(),
            cutoff_radius: jump.cutoff.max(repulsion.cutoff),
            jump,
            repulsion,
            exclude_self_term: false,
        })
    }

    pub fn with_exclude_self_term(mut self, exclude: bool) -> Self {
        self.exclude_self_term = exclude;
        self
    }

    pub fn dim(&self) -> usize {
        self.jump.dim
    }

    /// `a(x)` evaluated at a displacement.
    pub fn a(&self, displacement: &Position) -> f64 {
        self.jump.at(displacement)
    }

    /// `φ(x)` evaluated at a displacement.
    pub fn phi(&self, displacement: &Position) -> f64 {
        self.repulsion.at(displacement)
    }

    pub fn interaction_range(&self) -> f64 {
        self.repulsion.cutoff
    }

    /// Both supports must fit inside half the box so min-image evaluation is unambiguous.
    pub fn check_domain(&self, domain: &TorusDomain) -> Result<()> {
        if domain.dim() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "kernel dimension {} differs from domain dimension {}",
                self.dim(),
                domain.dim()
            )));
        }
        if self.cutoff_radius > 0.5 * domain.side() {
            return Err(Error::InvalidParameter(format!(
                "kernel cutoff {} exceeds half the box side {}",
                self.cutoff_radius,
                0.5 * domain.side()
            )));
        }
        Ok(())
    }

    /// `(∫(1 - e^{-φ}), ⟨φ⟩)` with the left side by quadrature.
    pub fn repulsion_integral_pair(&self) -> (f64, f64) {
        let lhs = self
            .repulsion
            .radial_quadrature(|v| -(-v).exp_m1(), 20_000);
        (lhs, self.mean_phi)
    }

    pub fn max_tail_fraction(&self) -> f64 {
        self.jump.tail_fraction.max(self.repulsion.tail_fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<KernelFamily> {
        vec![
            KernelFamily::TopHat {
                height: 0.7,
                range: 1.3,
            },
            KernelFamily::TruncatedGaussian {
                height: 1.1,
                width: 0.4,
            },
            KernelFamily::TruncatedExponential {
                height: 2.0,
                decay: 0.25,
            },
        ]
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        for dim in 1..=3 {
            for fam in families() {
                let k = RadialKernel::new(fam, dim).unwrap();
                let q = k.radial_quadrature(|v| v, 200_000);
                let rel = (q - k.integral).abs() / k.integral;
                assert!(rel < 1e-10, "{fam:?} d={dim}: {q} vs {}", k.integral);
            }
        }
    }

    #[test]
    fn top_hat_constants() {
        let k = RadialKernel::new(
            KernelFamily::TopHat {
                height: 0.5,
                range: 1.0,
            },
            1,
        )
        .unwrap();
        assert_eq!(k.integral, 1.0);
        assert_eq!(k.cutoff, 1.0);
        assert_eq!(k.value(1.0), 0.5);
        assert_eq!(k.value(1.0 + 1e-12), 0.0);
    }

    #[test]
    fn truncation_tail_is_below_tolerance() {
        for dim in 1..=3 {
            for fam in families().into_iter().skip(1) {
                let k = RadialKernel::new(fam, dim).unwrap();
                assert!(k.tail_fraction < TAIL_TOLERANCE);
                assert!(k.tail_fraction > 0.0);
            }
        }
    }

    #[test]
    fn sampled_radius_inverts_the_cdf() {
        for dim in 1..=3 {
            for fam in families() {
                let k = RadialKernel::new(fam, dim).unwrap();
                for i in 0..=20 {
                    let u = i as f64 / 20.0;
                    let r = k.sample_radius(u);
                    assert!((0.0..=k.cutoff * (1.0 + 1e-12)).contains(&r), "{fam:?} {dim} {u} {r}");
                    let back = k.mass_within(r) / k.integral;
                    assert!((back - u).abs() < 1e-9, "{fam:?} d={dim} u={u}: {back}");
                }
            }
        }
    }

    #[test]
    fn repulsion_bound_holds_for_all_families() {
        for dim in 1..=3 {
            for fam in families() {
                let spec = KernelSpec::new(families()[0], fam, dim).unwrap();
                let (lhs, rhs) = spec.repulsion_integral_pair();
                assert!(lhs <= rhs * (1.0 + 1e-8), "{lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(RadialKernel::new(
            KernelFamily::TopHat {
                height: -1.0,
                range: 1.0
            },
            1
        )
        .is_err());
        assert!(RadialKernel::new(
            KernelFamily::TruncatedGaussian {
                height: 1.0,
                width: 0.0
            },
            2
        )
        .is_err());
        assert!(RadialKernel::new(
            KernelFamily::TopHat {
                height: f64::INFINITY,
                range: 1.0
            },
            1
        )
        .is_err());
        assert!(KernelSpec::new(KernelFamily::zero(), KernelFamily::zero(), 1).is_err());
    }

    #[test]
    fn domain_check_rejects_wide_kernels() {
        let spec = KernelSpec::new(families()[0], KernelFamily::zero(), 1).unwrap();
        assert!(spec.check_domain(&TorusDomain::new(1, 2.0).unwrap()).is_err());
        assert!(spec.check_domain(&TorusDomain::new(1, 3.0).unwrap()).is_ok());
        assert!(spec.check_domain(&TorusDomain::new(2, 3.0).unwrap()).is_err());
    }
}
