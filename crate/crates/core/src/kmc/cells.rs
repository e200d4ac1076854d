use crate::model::{Configuration, Position};

const MAX_CELLS: usize = 1 << 18;

/// Uniform cell list on the torus; cell side is at least the interaction range.
#[derive(Debug, Clone)]
pub struct CellList {
    dim: usize,
    side: f64,
    per_axis: usize,
    cells: Vec<Vec<usize>>,
    cell_of: Vec<usize>,
}

impl CellList {
    pub fn build(config: &Configuration, min_cell_side: f64) -> Self {
        let dom = config.domain();
        let dim = dom.dim();
        let side = dom.side();
        let mut per_axis = if min_cell_side > 0.0 {
            ((side / min_cell_side).floor() as usize).max(1)
        } else {
            1
        };
        while per_axis > 1 && per_axis.pow(dim as u32) > MAX_CELLS {
            per_axis -= 1;
        }
        let mut list = Self {
            dim,
            side,
            per_axis,
            cells: vec![Vec::new(); per_axis.pow(dim as u32)],
            cell_of: Vec::with_capacity(config.len()),
        };
        for (i, p) in config.points().iter().enumerate() {
            let c = list.cell_index(p);
            list.cells[c].push(i);
            list.cell_of.push(c);
        }
        list
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn cell_index(&self, p: &Position) -> usize {
        let w = self.side / self.per_axis as f64;
        let mut idx = 0;
        for i in (0..self.dim).rev() {
            let k = ((p[i] / w) as usize).min(self.per_axis - 1);
            idx = idx * self.per_axis + k;
        }
        idx
    }

    fn neighbor_cells(&self, cell: usize) -> Vec<usize> {
        let m = self.per_axis;
        let mut coords = [0usize; 3];
        let mut c = cell;
        for ci in coords.iter_mut().take(self.dim) {
            *ci = c % m;
            c /= m;
        }
        let span: &[usize] = if m >= 3 { &[m - 1, 0, 1] } else if m == 2 { &[0, 1] } else { &[0] };
        let mut out = Vec::with_capacity(27);
        let combos = span.len().pow(self.dim as u32);
        for k in 0..combos {
            let mut kk = k;
            let mut idx = 0;
            let mut stride = 1;
            for &ci in coords.iter().take(self.dim) {
                let off = span[kk % span.len()];
                kk /= span.len();
                idx += ((ci + off) % m) * stride;
                stride *= m;
            }
            out.push(idx);
        }
        out
    }

    /// Visits every particle index in the cells surrounding `p` (its own included).
    pub fn for_each_near(&self, p: &Position, mut f: impl FnMut(usize)) {
        for c in self.neighbor_cells(self.cell_index(p)) {
            for &i in &self.cells[c] {
                f(i);
            }
        }
    }

    pub fn relocate(&mut self, particle: usize, new_position: &Position) {
        let old = self.cell_of[particle];
        let new = self.cell_index(new_position);
        if old == new {
            return;
        }
        let slot = self.cells[old]
            .iter()
            .position(|&i| i == particle)
            .expect("cell list out of sync");
        self.cells[old].swap_remove(slot);
        self.cells[new].push(particle);
        self.cell_of[particle] = new;
    }

    /// True iff the list indexes exactly the points of `config`.
    pub fn is_consistent_with(&self, config: &Configuration) -> bool {
        if self.cell_of.len() != config.len() {
            return false;
        }
        let total: usize = self.cells.iter().map(Vec::len).sum();
        total == config.len()
            && config
                .points()
                .iter()
                .enumerate()
                .all(|(i, p)| {
                    let c = self.cell_index(p);
                    self.cell_of[i] == c && self.cells[c].contains(&i)
                })
    }
}
