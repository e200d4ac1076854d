//! Lattice correlation functions truncated at a maximal order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Largest `M_Q` a closure may be asked to supply beyond `N_max`.
pub const CLOSURE_REACH: usize = 2;
/// Largest number of stored values in one field.
pub const MAX_STORAGE: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosureKind {
    /// Excess points factor through a frozen one-point reference density.
    PoissonTail,
    /// Orders above `N_max` vanish.
    ZeroTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureRule {
    pub kind: ClosureKind,
    pub n_max: usize,
}

impl ClosureRule {
    pub fn new(kind: ClosureKind, n_max: usize) -> Result<Self> {
        if !(2..=3).contains(&n_max) {
            return Err(Error::InvalidParameter(format!(
                "N_max must be 2 or 3 (got {n_max})"
            )));
        }
        Ok(Self { kind, n_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMode {
    /// `k^(1)` scalar, `k^(n)` stored by separations from the first point.
    Invariant,
    /// One value per site tuple.
    FullGrid,
}

/// `k(∅), k^(1), …, k^(N_max)` on a periodic lattice.
///
/// Tuples may repeat sites: on the lattice `k` is the factorial-moment density
/// `E[Π (n_x)_↓] / h^{nd}`, which is what the discrete hierarchy evolves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationField {
    lattice: Lattice,
    mode: FieldMode,
    closure: ClosureRule,
    qy_order: usize,
    /// One-point density used by the poisson-tail closure, fixed at construction.
    reference: Vec<f64>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl CorrelationField {
    /// Field with `k0 = 1` and every other entry zero.
    pub fn new(
        lattice: Lattice,
        mode: FieldMode,
        closure: ClosureRule,
        qy_order: usize,
    ) -> Result<Self> {
        if qy_order > CLOSURE_REACH {
            return Err(Error::ClosureReach {
                order: closure.n_max,
                qy_order,
                n_max: closure.n_max,
            });
        }
        let n = lattice.n_sites();
        let mut offsets = vec![0, 1];
        let mut len = 1usize;
        for order in 1..=closure.n_max {
            let entries = match mode {
                FieldMode::Invariant => n.checked_pow(order as u32 - 1),
                FieldMode::FullGrid => n.checked_pow(order as u32),
            }
            .unwrap_or(usize::MAX);
            len = len.saturating_add(entries);
            if len > MAX_STORAGE {
                return Err(Error::StorageTooLarge { entries: len });
            }
            offsets.push(len);
        }
        let mut data = vec![0.0; len];
        data[0] = 1.0;
        let reference = vec![0.0; if mode == FieldMode::Invariant { 1 } else { n }];
        Ok(Self {
            lattice,
            mode,
            closure,
            qy_order,
            reference,
            offsets,
            data,
        })
    }

    /// `k^(n) ≡ κ^n`.
    pub fn poisson(
        lattice: Lattice,
        mode: FieldMode,
        closure: ClosureRule,
        qy_order: usize,
        kappa: f64,
    ) -> Result<Self> {
        Self::from_fn(lattice, mode, closure, qy_order, |t| kappa.powi(t.len() as i32))
    }

    /// Fills every stored entry from `f` evaluated at its representative tuple
    /// and freezes the resulting `k^(1)` as the closure reference.
    pub fn from_fn(
        lattice: Lattice,
        mode: FieldMode,
        closure: ClosureRule,
        qy_order: usize,
        f: impl Fn(&[usize]) -> f64,
    ) -> Result<Self> {
        let mut field = Self::new(lattice, mode, closure, qy_order)?;
        let mut tuple = [0usize; 3];
        for n in 1..=closure.n_max {
            for idx in 0..field.order_len(n) {
                field.decode(n, idx, &mut tuple);
                let v = f(&tuple[..n]);
                field.data[field.offsets[n] + idx] = v;
            }
        }
        field.freeze_reference();
        Ok(field)
    }

    /// Copies the current `k^(1)` into the closure reference.
    pub fn freeze_reference(&mut self) {
        let k1 = self.order(1).to_vec();
        self.reference = k1;
    }

    pub fn set_reference(&mut self, reference: Vec<f64>) -> Result<()> {
        if reference.len() != self.reference.len() {
            return Err(Error::Incompatible(format!(
                "reference has {} entries, field expects {}",
                reference.len(),
                self.reference.len()
            )));
        }
        self.reference = reference;
        Ok(())
    }

    /// Same shape, closure and reference; every entry (including `k0`) zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.data.iter_mut().for_each(|v| *v = 0.0);
        z
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mode(&self) -> FieldMode {
        self.mode
    }

    pub fn closure(&self) -> ClosureRule {
        self.closure
    }

    pub fn n_max(&self) -> usize {
        self.closure.n_max
    }

    pub fn qy_order(&self) -> usize {
        self.qy_order
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn k0(&self) -> f64 {
        self.data[0]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn order(&self, n: usize) -> &[f64] {
        &self.data[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn order_mut(&mut self, n: usize) -> &mut [f64] {
        let (a, b) = (self.offsets[n], self.offsets[n + 1]);
        &mut self.data[a..b]
    }

    pub fn order_len(&self, n: usize) -> usize {
        self.offsets[n + 1] - self.offsets[n]
    }

    /// Order of the entry at flat position `i`.
    pub fn order_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.lattice == other.lattice
            && self.mode == other.mode
            && self.closure == other.closure
            && self.qy_order == other.qy_order
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Representative tuple of stored entry `idx` of order `n`.
    pub fn decode(&self, n: usize, idx: usize, out: &mut [usize]) {
        let m = self.lattice.n_sites();
        let mut rest = idx;
        match self.mode {
            FieldMode::Invariant => {
                out[0] = 0;
                for o in out.iter_mut().take(n).skip(1) {
                    *o = rest % m;
                    rest /= m;
                }
            }
            FieldMode::FullGrid => {
                for o in out.iter_mut().take(n) {
                    *o = rest % m;
                    rest /= m;
                }
            }
        }
    }

    /// Stored index of a tuple of order `1..=N_max`.
    pub fn encode(&self, tuple: &[usize]) -> usize {
        let m = self.lattice.n_sites();
        match self.mode {
            FieldMode::Invariant => {
                let base = tuple[0];
                tuple[1..]
                    .iter()
                    .rev()
                    .fold(0, |acc, &s| acc * m + self.lattice.sub(s, base))
            }
            FieldMode::FullGrid => tuple.iter().rev().fold(0, |acc, &s| acc * m + s),
        }
    }

    fn reference_at(&self, site: usize) -> f64 {
        match self.mode {
            FieldMode::Invariant => self.reference[0],
            FieldMode::FullGrid => self.reference[site],
        }
    }

    /// `k(η)` for any tuple; orders above `N_max` come from the closure.
    pub fn value(&self, tuple: &[usize]) -> f64 {
        let n = tuple.len();
        if n == 0 {
            return self.data[0];
        }
        if n <= self.closure.n_max {
            return self.data[self.offsets[n] + self.encode(tuple)];
        }
        match self.closure.kind {
            ClosureKind::ZeroTail => 0.0,
            ClosureKind::PoissonTail => {
                let (head, tail) = tuple.split_at(self.closure.n_max);
                tail.iter()
                    .fold(self.value(head), |acc, &z| acc * self.reference_at(z))
            }
        }
    }

    /// `max_{n ≥ 1} |k^(n)| e^{−ϑn}` over stored entries; `k0` is not included.
    pub fn scale_norm(&self, theta: f64) -> f64 {
        (1..=self.closure.n_max)
            .map(|n| {
                let w = (-theta * n as f64).exp();
                self.order(n).iter().fold(0.0f64, |m, v| m.max(v.abs())) * w
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> Lattice {
        Lattice::new(1, 8, 0.5).unwrap()
    }

    #[test]
    fn invariant_lookup_is_translation_invariant() {
        let cl = ClosureRule::new(ClosureKind::ZeroTail, 3).unwrap();
        let f = CorrelationField::from_fn(lat(), FieldMode::Invariant, cl, 1, |t| {
            t.iter().map(|&s| s as f64 + 1.0).product()
        })
        .unwrap();
        let l = lat();
        for base in 0..8 {
            let t = [base, l.add(base, 3), l.add(base, 5)];
            assert_eq!(f.value(&t), f.value(&[0, 3, 5]));
            assert_eq!(f.value(&t[..2]), 4.0);
        }
        assert_eq!(f.value(&[1, 2, 3, 4]), 0.0);
    }

    #[test]
    fn poisson_tail_factorises_through_reference() {
        let cl = ClosureRule::new(ClosureKind::PoissonTail, 2).unwrap();
        let f = CorrelationField::poisson(lat(), FieldMode::FullGrid, cl, 1, 0.3).unwrap();
        assert!((f.value(&[1, 1, 4]) - 0.027).abs() < 1e-17);
        assert!((f.value(&[1, 1, 4, 6]) - 0.0081).abs() < 1e-17);
    }

    #[test]
    fn scale_norm_examples() {
        let cl = ClosureRule::new(ClosureKind::PoissonTail, 3).unwrap();
        let f = CorrelationField::poisson(lat(), FieldMode::Invariant, cl, 1, 0.4).unwrap();
        assert!((f.scale_norm(0.4f64.ln()) - 1.0).abs() < 1e-15);
        assert_eq!(f.zeros_like().scale_norm(0.0), 0.0);
    }

    #[test]
    fn shape_errors() {
        let cl = ClosureRule::new(ClosureKind::ZeroTail, 2).unwrap();
        assert!(ClosureRule::new(ClosureKind::ZeroTail, 4).is_err());
        assert!(matches!(
            CorrelationField::new(lat(), FieldMode::Invariant, cl, 3),
            Err(Error::ClosureReach { .. })
        ));
        let big = Lattice::new(2, 128, 0.1).unwrap();
        let cl3 = ClosureRule::new(ClosureKind::ZeroTail, 3).unwrap();
        assert!(matches!(
            CorrelationField::new(big, FieldMode::FullGrid, cl3, 1),
            Err(Error::StorageTooLarge { .. })
        ));
    }

    #[test]
    fn order_bookkeeping() {
        let cl = ClosureRule::new(ClosureKind::ZeroTail, 3).unwrap();
        let f = CorrelationField::new(lat(), FieldMode::FullGrid, cl, 1).unwrap();
        assert_eq!(f.data().len(), 1 + 8 + 64 + 512);
        assert_eq!(f.order_of(0), 0);
        assert_eq!(f.order_of(8), 1);
        assert_eq!(f.order_of(9), 2);
        assert_eq!(f.order_of(1 + 8 + 64), 3);
        let mut t = [0; 3];
        for idx in 0..512 {
            f.decode(3, idx, &mut t);
            assert_eq!(f.encode(&t), idx);
        }
    }
}
