//! Query sets as unions of equal half-open cells of `[0, 1]`.

use std::fmt;

/// A union of cells `[c/grid, (c+1)/grid)` of a uniform grid. The point
/// `1.0` belongs to the last cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellSet {
    grid: u32,
    cells: Vec<u32>,
}

impl CellSet {
    pub fn new(grid: u32, mut cells: Vec<u32>) -> Self {
        assert!(grid > 0, "grid must have at least one cell");
        cells.sort_unstable();
        cells.dedup();
        assert!(cells.last().is_none_or(|&c| c < grid), "cell index outside grid");
        Self { grid, cells }
    }

    pub fn empty(grid: u32) -> Self {
        Self::new(grid, Vec::new())
    }

    pub fn full(grid: u32) -> Self {
        Self::new(grid, (0..grid).collect())
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Lebesgue measure of the union.
    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 / self.grid as f64
    }

    pub fn contains_cell(&self, c: u32) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    pub fn contains(&self, s: f64) -> bool {
        self.contains_cell(cell_of(self.grid, s))
    }

    /// Maximal half-open intervals making up the set.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let g = self.grid as f64;
        let mut out: Vec<(u32, u32)> = Vec::new();
        for &c in &self.cells {
            match out.last_mut() {
                Some(run) if run.1 == c => run.1 = c + 1,
                _ => out.push((c, c + 1)),
            }
        }
        out.into_iter().map(|(a, b)| (a as f64 / g, b as f64 / g)).collect()
    }
}

impl fmt::Display for CellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self.intervals();
        if parts.is_empty() {
            return write!(f, "∅");
        }
        for (i, (a, b)) in parts.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "[{a}, {b})")?;
        }
        Ok(())
    }
}

/// Index of the grid cell containing `s`.
pub fn cell_of(grid: u32, s: f64) -> u32 {
    let c = (s * grid as f64).floor();
    if c <= 0.0 {
        0
    } else {
        (c as u32).min(grid - 1)
    }
}

/// The oracle's noiseless answer `1{s ∈ A}`.
pub fn oracle_answer(s: f64, query: &CellSet) -> bool {
    query.contains(s)
}

/// The two-level partition: `levels` first-level sub-intervals, each split
/// into `bins` second-level cells, `levels * bins` cells overall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    levels: u32,
    bins: u32,
}

impl Partition {
    pub fn new(levels: u32, bins: u32) -> Self {
        assert!(levels >= 1 && bins >= 1);
        Self { levels, bins }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn bins_per_level(&self) -> u32 {
        self.bins
    }

    pub fn total_bins(&self) -> u32 {
        self.levels * self.bins
    }

    pub fn first_level_of(&self, s: f64) -> u32 {
        cell_of(self.total_bins(), s) / self.bins
    }

    pub fn offset_of(&self, s: f64) -> u32 {
        cell_of(self.total_bins(), s) % self.bins
    }

    pub fn center(&self, first: u32, offset: u32) -> f64 {
        ((first * self.bins + offset) as f64 + 0.5) / self.total_bins() as f64
    }

    pub fn first_level_center(&self, first: u32) -> f64 {
        (first as f64 + 0.5) / self.levels as f64
    }
}
