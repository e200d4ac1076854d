use serde::Serialize;

use super::geometry::{Position, TorusDomain};
use crate::error::{Error, Result};

/// Finite point configuration on a torus; every point carries a stable id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    domain: TorusDomain,
    ids: Vec<u64>,
    points: Vec<Position>,
    next_id: u64,
}

impl Configuration {
    pub fn empty(domain: TorusDomain) -> Self {
        Self {
            domain,
            ids: Vec::new(),
            points: Vec::new(),
            next_id: 0,
        }
    }

    /// Builds a configuration from raw positions (wrapped onto the torus), ids `0..n`.
    pub fn from_points(domain: TorusDomain, points: impl IntoIterator<Item = Position>) -> Self {
        let mut c = Self::empty(domain);
        for p in points {
            c.push(p);
        }
        c
    }

    pub fn push(&mut self, p: Position) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.ids.push(id);
        self.points.push(self.domain.wrap(p));
        id
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Position] {
        &self.points
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.ids.iter().position(|&i| i == id)
    }

    pub fn position(&self, id: u64) -> Result<Position> {
        self.index_of(id)
            .map(|i| self.points[i])
            .ok_or(Error::UnknownParticle(id))
    }

    /// Moves the particle at `index` to `target` (wrapped).
    pub fn set_position(&mut self, index: usize, target: Position) {
        self.points[index] = self.domain.wrap(target);
    }

    /// `γ \ x ∪ y`: the particle with id `x` relocated to `y`, keeping its id.
    pub fn jumped(&self, x: u64, y: Position) -> Result<Self> {
        let i = self.index_of(x).ok_or(Error::UnknownParticle(x))?;
        let mut out = self.clone();
        out.set_position(i, y);
        Ok(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Position)> {
        self.ids.iter().copied().zip(self.points.iter())
    }
}
