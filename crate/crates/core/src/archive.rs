//! Per-island MAP-Elites grid.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::genome::{BinnedCoordinates, Prompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertOutcome {
    Inserted,
    Replaced,
    Rejected,
}

impl InsertOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            InsertOutcome::Inserted => "inserted",
            InsertOutcome::Replaced => "replaced",
            InsertOutcome::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArchiveError {
    #[error("coordinates {coords:?} outside a {bins}x{bins} grid")]
    OutOfBounds { coords: [usize; 2], bins: usize },
    #[error("fitness {0} is not a fraction in [0, 1]")]
    InvalidFitness(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub coords: BinnedCoordinates,
    pub elite: Prompt,
    pub fitness: f64,
    /// Acceptance order of the current elite; smaller is older.
    pub seq: u64,
}

/// Result of one insert: the outcome, plus the cell pushed out by the
/// capacity cap, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Insertion {
    pub outcome: InsertOutcome,
    pub evicted: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    bins_per_dim: usize,
    capacity: usize,
    #[serde(with = "cells_as_list")]
    cells: BTreeMap<[usize; 2], Cell>,
    next_seq: u64,
}

impl Archive {
    /// Panics when `bins_per_dim` or `capacity` is zero; both come from
    /// validated configuration.
    pub fn new(bins_per_dim: usize, capacity: usize) -> Self {
        assert!(bins_per_dim >= 1, "bins_per_dim must be at least 1");
        assert!(capacity >= 1, "capacity must be at least 1");
        Self { bins_per_dim, capacity, cells: BTreeMap::new(), next_seq: 0 }
    }

    pub fn bins_per_dim(&self) -> usize {
        self.bins_per_dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, coords: [usize; 2]) -> Option<&Cell> {
        self.cells.get(&coords)
    }

    /// Occupied cells in lexicographic coordinate order.
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    pub fn insert(
        &mut self,
        prompt: Prompt,
        fitness: f64,
        coords: BinnedCoordinates,
    ) -> Result<Insertion, ArchiveError> {
        if !(0.0..=1.0).contains(&fitness) {
            return Err(ArchiveError::InvalidFitness(fitness));
        }
        if coords.dims.iter().any(|&d| d >= self.bins_per_dim) {
            return Err(ArchiveError::OutOfBounds { coords: coords.dims, bins: self.bins_per_dim });
        }
        let seq = self.next_seq;
        let key = coords.dims;
        let outcome = match self.cells.get_mut(&key) {
            Some(cell) if fitness > cell.fitness => {
                *cell = Cell { coords, elite: prompt, fitness, seq };
                InsertOutcome::Replaced
            }
            Some(_) => InsertOutcome::Rejected,
            None => {
                self.cells.insert(key, Cell { coords, elite: prompt, fitness, seq });
                InsertOutcome::Inserted
            }
        };
        if outcome != InsertOutcome::Rejected {
            self.next_seq += 1;
        }
        let evicted = if self.cells.len() > self.capacity { self.evict_weakest() } else { None };
        Ok(Insertion { outcome, evicted })
    }

    /// Removes the lowest-fitness cell, oldest first among ties.
    fn evict_weakest(&mut self) -> Option<Cell> {
        let key = self
            .cells
            .iter()
            .min_by(|(_, a), (_, b)| a.fitness.total_cmp(&b.fitness).then(a.seq.cmp(&b.seq)))
            .map(|(k, _)| *k)?;
        self.cells.remove(&key)
    }

    /// Highest-fitness elite; ties go to the lexicographically lowest cell.
    pub fn best(&self) -> Option<(&Prompt, f64)> {
        self.cells
            .values()
            .fold(None::<&Cell>, |acc, cell| match acc {
                Some(b) if cell.fitness <= b.fitness => Some(b),
                _ => Some(cell),
            })
            .map(|c| (&c.elite, c.fitness))
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best().map(|(_, f)| f)
    }

    /// Up to `k` elites by fitness descending, ties by coordinates ascending.
    pub fn elites_top(&self, k: usize) -> Vec<(&Prompt, f64)> {
        self.top_cells(k).into_iter().map(|c| (&c.elite, c.fitness)).collect()
    }

    pub fn top_cells(&self, k: usize) -> Vec<&Cell> {
        let mut cells: Vec<&Cell> = self.cells.values().collect();
        // BTreeMap order is already coordinate-ascending; the stable sort keeps it for ties.
        cells.sort_by(|a, b| b.fitness.partial_cmp(&a.fitness).unwrap_or(Ordering::Equal));
        cells.truncate(k);
        cells
    }
}

mod cells_as_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Cell;

    pub fn serialize<S: Serializer>(
        cells: &BTreeMap<[usize; 2], Cell>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<&Cell> = cells.values().collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<[usize; 2], Cell>, D::Error> {
        let list = Vec::<Cell>::deserialize(d)?;
        Ok(list.into_iter().map(|c| (c.coords.dims, c)).collect())
    }
}
