//! Rate, energy and the elementary functionals on finite configurations.

use std::cmp::Ordering;

use super::configuration::Configuration;
use super::geometry::{Position, TorusDomain};
use super::kernel::KernelSpec;
use crate::error::{Error, Result};

/// `Σ_{z ∈ γ} φ(y − z)`, optionally skipping the particle at index `skip`.
pub fn repulsion_sum(
    gamma: &Configuration,
    y: &Position,
    kernels: &KernelSpec,
    skip: Option<usize>,
) -> f64 {
    let dom = gamma.domain();
    gamma
        .points()
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, z)| kernels.phi(&dom.min_image(y, z)))
        .sum()
}

/// `c(x, y, γ) = a(x − y) exp(−Σ_{z∈γ} φ(y − z))`.
///
/// The sum includes the jumping particle itself unless the kernel spec sets
/// `exclude_self_term`.
pub fn jump_rate(gamma: &Configuration, x: u64, y: &Position, kernels: &KernelSpec) -> Result<f64> {
    let i = gamma.index_of(x).ok_or(Error::UnknownParticle(x))?;
    let dom = gamma.domain();
    let xp = gamma.points()[i];
    let a = kernels.a(&dom.min_image(&xp, y));
    if a == 0.0 {
        return Ok(0.0);
    }
    let skip = kernels.exclude_self_term.then_some(i);
    Ok(a * (-repulsion_sum(gamma, y, kernels, skip)).exp())
}

/// `ln c(x, y, γ)`; `-inf` when `a(x − y) = 0`.
pub fn log_jump_rate(
    gamma: &Configuration,
    x: u64,
    y: &Position,
    kernels: &KernelSpec,
) -> Result<f64> {
    let i = gamma.index_of(x).ok_or(Error::UnknownParticle(x))?;
    let dom = gamma.domain();
    let a = kernels.a(&dom.min_image(&gamma.points()[i], y));
    let skip = kernels.exclude_self_term.then_some(i);
    Ok(a.ln() - repulsion_sum(gamma, y, kernels, skip))
}

/// Pair energy `Σ_{{u,v} ⊂ γ} φ(u − v)`.
pub fn total_energy(gamma: &Configuration, kernels: &KernelSpec) -> f64 {
    let pts = gamma.points();
    let dom = gamma.domain();
    let mut e = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            e += kernels.phi(&dom.min_image(&pts[i], &pts[j]));
        }
    }
    e
}

/// `e(f; η) = Π_{x∈η} f(x)`.
pub fn e_product<F: Fn(&Position) -> f64>(f: F, eta: &[Position]) -> f64 {
    eta.iter().map(f).product()
}

/// `τ_y(z) = exp(−φ(y − z))`.
pub fn tau(kernels: &KernelSpec, domain: &TorusDomain, y: &Position, z: &Position) -> f64 {
    (-kernels.phi(&domain.min_image(y, z))).exp()
}

/// `t_y(z) = τ_y(z) − 1`.
pub fn t_minus_one(kernels: &KernelSpec, domain: &TorusDomain, y: &Position, z: &Position) -> f64 {
    (-kernels.phi(&domain.min_image(y, z))).exp_m1()
}

/// Axis-aligned half-open box `[lo, hi)` in the first `dim` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    pub dim: usize,
    pub lo: Position,
    pub hi: Position,
}

impl SupportBox {
    pub fn new(dim: usize, lo: Position, hi: Position) -> Result<Self> {
        if !(1..=3).contains(&dim) || (0..dim).any(|i| hi[i].partial_cmp(&lo[i]) != Some(Ordering::Greater)) {
            return Err(Error::InvalidParameter("degenerate support box".into()));
        }
        Ok(Self { dim, lo, hi })
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0..self.dim).all(|i| p[i] >= self.lo[i] && p[i] < self.hi[i])
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.hi[i] - self.lo[i]).product()
    }
}

type OrderFn = Box<dyn Fn(&[Position]) -> f64 + Send + Sync>;

/// A function on finite configurations with bounded support: it vanishes once
/// any argument leaves the support box or the order exceeds `max_order`.
///
/// Each order-`n` evaluator must be symmetric in its arguments.
pub struct FiniteSupportFunction {
    empty_value: f64,
    orders: Vec<OrderFn>,
    support: SupportBox,
}

impl FiniteSupportFunction {
    pub fn new(support: SupportBox, empty_value: f64) -> Self {
        Self {
            empty_value,
            orders: Vec::new(),
            support,
        }
    }

    /// Appends the evaluator for the next order (1, 2, ...).
    pub fn with_order(mut self, f: impl Fn(&[Position]) -> f64 + Send + Sync + 'static) -> Self {
        self.orders.push(Box::new(f));
        self
    }

    pub fn max_order(&self) -> usize {
        self.orders.len()
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn eval(&self, eta: &[Position]) -> f64 {
        match eta.len() {
            0 => self.empty_value,
            n if n > self.orders.len() => 0.0,
            n => {
                if eta.iter().all(|p| self.support.contains(p)) {
                    (self.orders[n - 1])(eta)
                } else {
                    0.0
                }
            }
        }
    }
}

/// `(KG)(γ) = Σ_{η ⋐ γ} G(η)` over nonempty finite subsets.
pub fn k_transform(g: &FiniteSupportFunction, gamma: &Configuration) -> f64 {
    let inside: Vec<Position> = gamma
        .points()
        .iter()
        .copied()
        .filter(|p| g.support.contains(p))
        .collect();
    let m = inside.len();
    let mut total = 0.0;
    let mut buf = Vec::with_capacity(g.max_order());
    for n in 1..=g.max_order().min(m) {
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            buf.clear();
            buf.extend(idx.iter().map(|&i| inside[i]));
            total += g.eval(&buf);
            // next combination in lexicographic order
            let mut k = n;
            while k > 0 && idx[k - 1] == m - n + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..n {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    total
}

/// Midpoint quadrature grid on an axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub lo: Position,
    pub hi: Position,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn covering(b: &SupportBox, points_per_axis: usize) -> Self {
        Self {
            dim: b.dim,
            lo: b.lo,
            hi: b.hi,
            points_per_axis,
        }
    }

    fn nodes(&self) -> Vec<Position> {
        let m = self.points_per_axis;
        let total = m.pow(self.dim as u32);
        (0..total)
            .map(|mut k| {
                let mut p = [0.0; 3];
                for (i, c) in p.iter_mut().enumerate().take(self.dim) {
                    let j = k % m;
                    k /= m;
                    let h = (self.hi[i] - self.lo[i]) / m as f64;
                    *c = self.lo[i] + (j as f64 + 0.5) * h;
                }
                p
            })
            .collect()
    }

    fn cell_volume(&self) -> f64 {
        (0..self.dim)
            .map(|i| (self.hi[i] - self.lo[i]) / self.points_per_axis as f64)
            .product()
    }
}

/// `G(∅) + Σ_{n=1}^{order_cap} (1/n!) ∫ G^{(n)}` by midpoint quadrature.
pub fn lp_integral_truncated(
    g: &FiniteSupportFunction,
    order_cap: usize,
    grid: &GridSpec,
) -> Result<f64> {
    let s = &g.support;
    if grid.dim != s.dim
        || grid.points_per_axis == 0
        || (0..s.dim).any(|i| grid.lo[i] > s.lo[i] || grid.hi[i] < s.hi[i])
    {
        return Err(Error::GridDoesNotCover);
    }
    let nodes = grid.nodes();
    let w = grid.cell_volume();
    let mut total = g.eval(&[]);
    let mut factorial = 1.0;
    for n in 1..=order_cap.min(g.max_order()) {
        factorial *= n as f64;
        let mut idx = vec![0usize; n];
        let mut buf = vec![[0.0; 3]; n];
        let mut acc = 0.0;
        'tuples: loop {
            for (b, &i) in buf.iter_mut().zip(idx.iter()) {
                *b = nodes[i];
            }
            acc += g.eval(&buf);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < nodes.len() {
                    continue 'tuples;
                }
                *slot = 0;
            }
            break;
        }
        total += acc * w.powi(n as i32) / factorial;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::kernel::KernelFamily;
    use super::*;

    fn line(l: f64) -> TorusDomain {
        TorusDomain::new(1, l).unwrap()
    }

    fn top_hat(h: f64, r: f64) -> KernelFamily {
        KernelFamily::TopHat {
            height: h,
            range: r,
        }
    }

    #[test]
    fn free_rate_equals_jump_kernel() {
        let k = KernelSpec::new(top_hat(0.5, 1.0), KernelFamily::zero(), 1).unwrap();
        let g = Configuration::from_points(line(10.0), [[1.0, 0.0, 0.0], [1.2, 0.0, 0.0]]);
        assert_eq!(jump_rate(&g, 0, &[1.5, 0.0, 0.0], &k).unwrap(), 0.5);
        assert_eq!(jump_rate(&g, 0, &[3.0, 0.0, 0.0], &k).unwrap(), 0.0);
    }

    #[test]
    fn lone_particle_sees_its_own_repulsion() {
        let k = KernelSpec::new(top_hat(0.5, 1.0), top_hat(0.8, 0.6), 1).unwrap();
        let g = Configuration::from_points(line(10.0), [[2.0, 0.0, 0.0]]);
        let c = jump_rate(&g, 0, &[2.4, 0.0, 0.0], &k).unwrap();
        assert!((c - 0.5 * (-0.8f64).exp()).abs() < 1e-15);
        let excl = k.with_exclude_self_term(true);
        assert_eq!(jump_rate(&g, 0, &[2.4, 0.0, 0.0], &excl).unwrap(), 0.5);
    }

    #[test]
    fn far_target_is_unrepelled() {
        let k = KernelSpec::new(top_hat(0.5, 2.0), top_hat(0.8, 0.3), 1).unwrap();
        let g = Configuration::from_points(line(10.0), [[2.0, 0.0, 0.0], [5.0, 0.0, 0.0]]);
        assert_eq!(jump_rate(&g, 0, &[3.0, 0.0, 0.0], &k).unwrap(), 0.5);
    }

    #[test]
    fn unknown_particle_is_an_error() {
        let k = KernelSpec::new(top_hat(0.5, 1.0), KernelFamily::zero(), 1).unwrap();
        let g = Configuration::from_points(line(10.0), [[1.0, 0.0, 0.0]]);
        assert_eq!(
            jump_rate(&g, 7, &[1.0, 0.0, 0.0], &k),
            Err(Error::UnknownParticle(7))
        );
    }

    #[test]
    fn energy_cases() {
        let k = KernelSpec::new(top_hat(0.5, 1.0), top_hat(1.7, 0.5), 1).unwrap();
        let dom = line(10.0);
        assert_eq!(total_energy(&Configuration::empty(dom), &k), 0.0);
        let one = Configuration::from_points(dom, [[1.0, 0.0, 0.0]]);
        assert_eq!(total_energy(&one, &k), 0.0);
        let far = Configuration::from_points(dom, [[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        assert_eq!(total_energy(&far, &k), 0.0);
        let near = Configuration::from_points(dom, [[1.0, 0.0, 0.0], [1.4, 0.0, 0.0]]);
        assert_eq!(total_energy(&near, &k), 1.7);
        // across the periodic boundary
        let wrap = Configuration::from_points(dom, [[0.1, 0.0, 0.0], [9.8, 0.0, 0.0]]);
        assert_eq!(total_energy(&wrap, &k), 1.7);
    }

    #[test]
    fn e_product_cases() {
        assert_eq!(e_product(|p| p[0], &[]), 1.0);
        assert_eq!(e_product(|p| p[0], &[[2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]), 6.0);
        let k = KernelSpec::new(top_hat(0.5, 1.0), KernelFamily::zero(), 1).unwrap();
        let dom = line(10.0);
        let y = [1.0, 0.0, 0.0];
        let v = e_product(|z| t_minus_one(&k, &dom, &y, z), &[[1.0, 0.0, 0.0]]);
        assert_eq!(v, 0.0);
    }

    fn unit_box(side: f64) -> SupportBox {
        SupportBox::new(1, [0.0; 3], [side, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn k_transform_of_singleton_function_is_a_sum() {
        let g = FiniteSupportFunction::new(unit_box(10.0), 5.0).with_order(|p| p[0][0] * p[0][0]);
        let gamma = Configuration::from_points(
            line(10.0),
            [[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]],
        );
        assert_eq!(k_transform(&g, &gamma), 14.0);
        assert_eq!(k_transform(&g, &Configuration::empty(line(10.0))), 0.0);
    }

    #[test]
    fn k_transform_counts_pairs_inside_the_window() {
        let g = FiniteSupportFunction::new(unit_box(4.0), 0.0)
            .with_order(|_| 0.0)
            .with_order(|_| 1.0);
        let pts = (0..9).map(|i| [i as f64 * 0.7, 0.0, 0.0]);
        let gamma = Configuration::from_points(line(10.0), pts);
        // points inside [0, 4): 0, 0.7, ..., 3.5 -> m = 6
        assert_eq!(k_transform(&g, &gamma), 15.0);
    }

    #[test]
    fn lp_integral_examples() {
        let only_empty = FiniteSupportFunction::new(unit_box(1.0), 1.0).with_order(|_| 0.0);
        let grid = GridSpec::covering(only_empty.support(), 8);
        assert_eq!(lp_integral_truncated(&only_empty, 3, &grid).unwrap(), 1.0);

        let ind = FiniteSupportFunction::new(unit_box(2.0), 0.0).with_order(|_| 1.0);
        let grid = GridSpec::covering(ind.support(), 16);
        assert!((lp_integral_truncated(&ind, 1, &grid).unwrap() - 2.0).abs() < 1e-14);

        let pair = FiniteSupportFunction::new(unit_box(1.0), 0.0)
            .with_order(|_| 0.0)
            .with_order(|_| 1.0);
        let grid = GridSpec::covering(pair.support(), 10);
        assert!((lp_integral_truncated(&pair, 2, &grid).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn lp_integral_rejects_short_grids() {
        let ind = FiniteSupportFunction::new(unit_box(2.0), 0.0).with_order(|_| 1.0);
        let grid = GridSpec::covering(&unit_box(1.0), 4);
        assert_eq!(
            lp_integral_truncated(&ind, 1, &grid),
            Err(Error::GridDoesNotCover)
        );
    }

    #[test]
    fn lp_integral_of_a_product_form_matches_analytic_value() {
        // G(η) = Π c on [0,1)^n for n ≤ 3: Σ c^n / n!
        let c = 0.7;
        let g = FiniteSupportFunction::new(unit_box(1.0), 1.0)
            .with_order(move |_| c)
            .with_order(move |_| c * c)
            .with_order(move |_| c * c * c);
        let grid = GridSpec::covering(g.support(), 6);
        let expected = 1.0 + c + c * c / 2.0 + c * c * c / 6.0;
        assert!((lp_integral_truncated(&g, 3, &grid).unwrap() - expected).abs() < 1e-13);
        let two = 1.0 + c + c * c / 2.0;
        assert!((lp_integral_truncated(&g, 2, &grid).unwrap() - two).abs() < 1e-13);
    }
}
