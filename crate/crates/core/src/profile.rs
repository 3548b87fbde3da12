//! Shared machinery for compiled performance profiles.
//!
//! A profile table maps a grid coordinate (external-quality cell followed by
//! the output-quality cells) to the cheapest observation plan reaching it.
//! Both solvers build one table per subtree and only ever touch grid
//! representatives, never the raw values, when composing tables.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{OssError, Result};
use crate::plan::ObservationPlan;

/// Linear interpolation `c·x + (1−c)·y`.
#[inline]
pub fn lerp(x: f64, y: f64, c: f64) -> f64 {
    c * x + (1.0 - c) * y
}

/// Harmonic combination of two precisions, `x·y/(x+y)`, with `J(0,0) = 0`.
///
/// This is the precision of a quantity observed through two independent
/// noise stages of precisions `x` and `y`. An infinite argument acts as a
/// noiseless stage and returns the other one.
#[inline]
pub fn precision_join(x: f64, y: f64) -> f64 {
    debug_assert!(x >= 0.0 && y >= 0.0, "precision_join({x}, {y})");
    if x == 0.0 || y == 0.0 {
        0.0
    } else if x.is_infinite() {
        y
    } else if y.is_infinite() {
        x
    } else {
        x * y / (x + y)
    }
}

/// Normalized logarithm truncated to [0, 1]: 0 at or below `a`, 1 at or above
/// `b`, `(ln p − ln a)/(ln b − ln a)` in between.
#[inline]
pub fn logbar(a: f64, b: f64, p: f64) -> f64 {
    debug_assert!(a > 0.0 && b > a, "logbar needs 0 < a < b, got ({a}, {b})");
    if p <= a {
        0.0
    } else if p >= b {
        1.0
    } else {
        (p.ln() - a.ln()) / (b.ln() - a.ln())
    }
}

/// Uniform discretization of one quality domain.
///
/// Plain grids split [0, 1] into `d = ⌈1/eps⌉` cells of width `eps`. Log
/// grids apply the same split to `logbar(a, b, v)` and add one extra cell,
/// index `d`, holding exactly zero (a subtree without evidence has zero
/// evidence precision, which must not be rounded up to a positive value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    eps: f64,
    d: u32,
    log_projection: Option<(f64, f64)>,
}

impl GridSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
            return Err(OssError::InvalidArgument(format!(
                "grid step must lie in (0, 1), got {eps}"
            )));
        }
        let inv = 1.0 / eps;
        let nearest = inv.round();
        let d = if (inv - nearest).abs() <= 1e-9 * inv {
            nearest
        } else {
            inv.ceil()
        };
        if d > u32::MAX as f64 / 2.0 {
            return Err(OssError::InvalidArgument(format!("grid step {eps} is too small")));
        }
        Ok(GridSpec {
            eps,
            d: d as u32,
            log_projection: None,
        })
    }

    pub fn log(eps: f64, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && a < b) {
            return Err(OssError::InvalidArgument(format!(
                "log grid needs 0 < a < b, got ({a}, {b})"
            )));
        }
        Ok(GridSpec {
            log_projection: Some((a, b)),
            ..Self::new(eps)?
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Number of regular cells, `⌈1/eps⌉`.
    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn log_projection(&self) -> Option<(f64, f64)> {
        self.log_projection
    }

    /// Total number of cell indices, including the zero cell of log grids.
    pub fn cell_count(&self) -> u32 {
        self.d + u32::from(self.log_projection.is_some())
    }

    /// Index of the exact-zero cell, present on log grids only.
    pub fn zero_cell(&self) -> Option<u32> {
        self.log_projection.map(|_| self.d)
    }

    /// Cell index of `v`. Out-of-range values clamp to the first or last
    /// regular cell.
    pub fn discretize(&self, v: f64) -> Result<u32> {
        if !v.is_finite() {
            return Err(OssError::InvalidArgument(format!(
                "cannot discretize non-finite value {v}"
            )));
        }
        if self.log_projection.is_some() && v < 0.0 {
            return Err(OssError::InvalidArgument(format!("negative precision {v}")));
        }
        Ok(self.cell(v))
    }

    /// Unchecked [`discretize`](Self::discretize) for values already known to
    /// be valid.
    #[inline]
    pub fn cell(&self, v: f64) -> u32 {
        let t = match self.log_projection {
            None => v,
            Some(_) if v == 0.0 => return self.d,
            Some((a, b)) => logbar(a, b, v),
        };
        let k = (t / self.eps).floor();
        if k <= 0.0 {
            0
        } else if k >= (self.d - 1) as f64 {
            self.d - 1
        } else {
            k as u32
        }
    }

    /// Canonical value of a cell: the cell midpoint, mapped back through the
    /// log projection on log grids. The last cell is truncated at 1 when
    /// `eps` does not divide 1, and its midpoint follows.
    #[inline]
    pub fn representative(&self, cell: u32) -> f64 {
        debug_assert!(cell < self.cell_count(), "cell {cell} out of range");
        if Some(cell) == self.zero_cell() {
            return 0.0;
        }
        let lo = cell as f64 * self.eps;
        let hi = ((cell + 1) as f64 * self.eps).min(1.0);
        let mid = if cell + 1 == self.d {
            0.5 * (lo + hi)
        } else {
            (cell as f64 + 0.5) * self.eps
        };
        match self.log_projection {
            None => mid,
            Some((a, b)) => a * (b / a).powf(mid),
        }
    }

    /// Discretize-then-represent.
    #[inline]
    pub fn snap(&self, v: f64) -> f64 {
        self.representative(self.cell(v))
    }
}

/// Approximate equivalence: both values land in the same cell.
pub fn equivalent(grid: &GridSpec, u: f64, v: f64) -> bool {
    match (grid.discretize(u), grid.discretize(v)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// One reachable conditional performance of a subtree.
///
/// `cell[0]` is the external-quality (p) cell, the remaining entries are the
/// output-quality cells. `raw` holds the values that were discretized into
/// `cell`, kept for diagnostics only.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPerf<const D: usize> {
    pub plan: ObservationPlan,
    pub time: u64,
    pub cell: [u32; D],
    pub raw: [f64; D],
}

impl<const D: usize> CondPerf<D> {
    pub fn p_cell(&self) -> u32 {
        self.cell[0]
    }

    pub fn q_cells(&self) -> &[u32] {
        &self.cell[1..]
    }

    /// Total preference order among CPs sharing a coordinate: cheaper first,
    /// then the lexicographically smaller plan.
    fn preference(&self, other: &Self) -> Ordering {
        self.time
            .cmp(&other.time)
            .then_with(|| self.plan.cmp(&other.plan))
            .then_with(|| {
                self.raw
                    .iter()
                    .zip(&other.raw)
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// The plan costs more than the budget.
    OverBudget,
    /// An entry at least as good already holds the coordinate.
    Dominated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    Replaced,
    Rejected(Rejection),
}

/// Purged profile of one subtree: at most one CP per grid coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable<const D: usize> {
    grids: [GridSpec; D],
    budget: u64,
    entries: BTreeMap<[u32; D], CondPerf<D>>,
}

impl<const D: usize> ProfileTable<D> {
    pub fn new(grids: [GridSpec; D], budget: u64) -> Self {
        ProfileTable {
            grids,
            budget,
            entries: BTreeMap::new(),
        }
    }

    pub fn grids(&self) -> &[GridSpec; D] {
        &self.grids
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Product of the grids' cell counts: the most entries the table can hold.
    pub fn capacity(&self) -> u128 {
        self.grids.iter().map(|g| g.cell_count() as u128).product()
    }

    pub fn get(&self, coord: &[u32; D]) -> Option<&CondPerf<D>> {
        self.entries.get(coord)
    }

    /// Entries in ascending coordinate order.
    pub fn iter(&self) -> impl Iterator<Item = &CondPerf<D>> {
        self.entries.values()
    }

    /// Entries whose coordinate starts with `prefix`, in ascending order.
    pub fn with_prefix<'a>(&'a self, prefix: &[u32]) -> impl Iterator<Item = &'a CondPerf<D>> + 'a {
        debug_assert!(prefix.len() <= D);
        let mut lo = [0u32; D];
        let mut hi = [u32::MAX; D];
        lo[..prefix.len()].copy_from_slice(prefix);
        hi[..prefix.len()].copy_from_slice(prefix);
        self.entries.range(lo..=hi).map(|(_, cp)| cp)
    }

    /// Inserts `cp` unless an entry at the same coordinate dominates it.
    ///
    /// Among CPs at one coordinate the table keeps the one with the smallest
    /// time, breaking ties by the lexicographically smallest plan, so the
    /// final table does not depend on insertion order.
    pub fn insert_purged(&mut self, cp: CondPerf<D>) -> InsertOutcome {
        debug_assert!(
            cp.cell.iter().zip(&self.grids).all(|(&c, g)| c < g.cell_count()),
            "cell {:?} outside grids",
            cp.cell
        );
        if cp.time > self.budget {
            return InsertOutcome::Rejected(Rejection::OverBudget);
        }
        match self.entries.get_mut(&cp.cell) {
            None => {
                self.entries.insert(cp.cell, cp);
                InsertOutcome::Inserted
            }
            Some(existing) => {
                if cp.preference(existing).is_lt() {
                    *existing = cp;
                    InsertOutcome::Replaced
                } else {
                    InsertOutcome::Rejected(Rejection::Dominated)
                }
            }
        }
    }

    /// Folds every entry of `other` into `self` through
    /// [`insert_purged`](Self::insert_purged).
    pub fn absorb(&mut self, other: ProfileTable<D>) {
        for (_, cp) in other.entries {
            self.insert_purged(cp);
        }
    }
}
