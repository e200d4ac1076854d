//! Periodic lattices and lattice-sampled kernels.
//!
//! Every continuum integral `∫ f(x) dx` becomes `Σ_sites f(x) h^d`. The lattice
//! constants `α_h = Σ a h^d` and `⟨φ⟩_h = Σ φ h^d` are the ones used by the
//! hierarchy, the master equation and the scale scheduler alike.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{KernelSpec, Position, TorusDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatticeShape {
    pub dim: usize,
    pub sites_per_axis: usize,
}

/// Periodic grid with `M` sites per axis and spacing `h`; site `0` sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice {
    dim: usize,
    sites_per_axis: usize,
    spacing: f64,
}

impl Lattice {
    pub fn new(dim: usize, sites_per_axis: usize, spacing: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("lattice dimension {dim}")));
        }
        if sites_per_axis < 2 {
            return Err(Error::InvalidParameter(
                "lattice needs at least 2 sites per axis".into(),
            ));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lattice spacing must be positive (got {spacing})"
            )));
        }
        Ok(Self {
            dim,
            sites_per_axis,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites_per_axis(&self) -> usize {
        self.sites_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_sites(&self) -> usize {
        self.sites_per_axis.pow(self.dim as u32)
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.n_sites() as f64 * self.cell_volume()
    }

    pub fn domain(&self) -> TorusDomain {
        TorusDomain::new(self.dim, self.sites_per_axis as f64 * self.spacing)
            .expect("lattice geometry is valid")
    }

    pub fn coords(&self, site: usize) -> [usize; 3] {
        let m = self.sites_per_axis;
        let mut c = [0; 3];
        let mut s = site;
        for ci in c.iter_mut().take(self.dim) {
            *ci = s % m;
            s /= m;
        }
        c
    }

    pub fn site(&self, coords: [usize; 3]) -> usize {
        let m = self.sites_per_axis;
        let mut s = 0;
        for i in (0..self.dim).rev() {
            s = s * m + coords[i] % m;
        }
        s
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        let m = self.sites_per_axis;
        match self.dim {
            1 => (a + b) % m,
            _ => {
                let (ca, cb) = (self.coords(a), self.coords(b));
                let mut c = [0; 3];
                for i in 0..self.dim {
                    c[i] = (ca[i] + cb[i]) % m;
                }
                self.site(c)
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        let m = self.sites_per_axis;
        match self.dim {
            1 => (m - a) % m,
            _ => {
                let ca = self.coords(a);
                let mut c = [0; 3];
                for i in 0..self.dim {
                    c[i] = (m - ca[i]) % m;
                }
                self.site(c)
            }
        }
    }

    /// Separation `a − b` as a site index.
    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn position(&self, site: usize) -> Position {
        let c = self.coords(site);
        let mut p = [0.0; 3];
        for i in 0..self.dim {
            p[i] = c[i] as f64 * self.spacing;
        }
        p
    }

    /// Minimum-image displacement vector represented by a separation site.
    pub fn displacement(&self, sep: usize) -> Position {
        self.domain().min_image(&self.position(sep), &[0.0; 3])
    }

    /// Nearest site to a continuum position.
    pub fn nearest_site(&self, p: &Position) -> usize {
        let m = self.sites_per_axis;
        let mut c = [0; 3];
        for i in 0..self.dim {
            let k = (p[i] / self.spacing).round() as i64;
            c[i] = k.rem_euclid(m as i64) as usize;
        }
        self.site(c)
    }
}

/// How many particles a lattice site may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Occupancy {
    /// At most one particle per site; jumps onto occupied sites are suppressed.
    Exclusion,
    /// Unrestricted occupation numbers. The lattice hierarchy is the exact
    /// correlation hierarchy of this process.
    #[default]
    Multi,
}

/// Kernels tabulated by separation site.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeKernels {
    pub lattice: Lattice,
    /// `a(s) h^d`.
    pub jump_weight: Vec<f64>,
    pub phi: Vec<f64>,
    /// `τ(s) = e^{−φ(s)}`.
    pub tau: Vec<f64>,
    /// `t(s) = τ(s) − 1`.
    pub t: Vec<f64>,
    /// Nonzero entries of `jump_weight`.
    pub jump_support: Vec<(usize, f64)>,
    /// Nonzero entries of `t`.
    pub t_support: Vec<(usize, f64)>,
    /// `Σ_s a(s) h^d`.
    pub alpha: f64,
    /// `Σ_s φ(s) h^d`.
    pub mean_phi: f64,
    pub sup_phi: f64,
    pub exclude_self_term: bool,
}

impl LatticeKernels {
    pub fn new(lattice: Lattice, kernels: &KernelSpec) -> Result<Self> {
        kernels.check_domain(&lattice.domain())?;
        let n = lattice.n_sites();
        let hd = lattice.cell_volume();
        let mut jump_weight = vec![0.0; n];
        let mut phi = vec![0.0; n];
        for s in 0..n {
            let d = lattice.displacement(s);
            jump_weight[s] = kernels.a(&d) * hd;
            phi[s] = kernels.phi(&d);
        }
        let tau: Vec<f64> = phi.iter().map(|p| (-p).exp()).collect();
        let t: Vec<f64> = phi.iter().map(|p| (-p).exp_m1()).collect();
        let jump_support = support_of(&jump_weight);
        let t_support = support_of(&t);
        Ok(Self {
            lattice,
            alpha: jump_weight.iter().sum(),
            mean_phi: phi.iter().sum::<f64>() * hd,
            sup_phi: phi.iter().cloned().fold(0.0, f64::max),
            jump_weight,
            phi,
            tau,
            t,
            jump_support,
            t_support,
            exclude_self_term: kernels.exclude_self_term,
        })
    }

    pub fn is_free(&self) -> bool {
        self.t_support.is_empty()
    }
}

fn support_of(v: &[f64]) -> Vec<(usize, f64)> {
    v.iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(i, w)| (i, *w))
        .collect()
}
