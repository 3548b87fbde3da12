use std::fmt;

use crate::error::{OssError, Result};
use crate::model::{Instance, NodeId};

/// Observation counts per node, stored sparsely as `(node, m)` pairs with
/// `m >= 1`, sorted by node id.
///
/// The derived ordering compares the sorted pair sequences lexicographically;
/// it is the tie-break used wherever two plans are otherwise equivalent.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservationPlan {
    entries: Vec<(NodeId, u32)>,
}

impl ObservationPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a plan from `(node, m)` pairs. Repeated nodes accumulate.
    pub fn from_counts<I: IntoIterator<Item = (NodeId, u32)>>(counts: I) -> Self {
        let mut plan = Self::new();
        for (node, m) in counts {
            let current = plan.count(node);
            plan.set(node, current + m);
        }
        plan
    }

    /// Parses a comma-separated node list; a node listed k times is observed
    /// k times. The empty string is the empty plan.
    pub fn parse_subset(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Self::new());
        }
        let ids = text
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|_| OssError::InvalidArgument(format!("bad node id `{}` in subset", tok.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_counts(ids.into_iter().map(|id| (NodeId(id), 1))))
    }

    pub fn set(&mut self, node: NodeId, m: u32) {
        match self.entries.binary_search_by_key(&node, |e| e.0) {
            Ok(pos) if m == 0 => {
                self.entries.remove(pos);
            }
            Ok(pos) => self.entries[pos].1 = m,
            Err(_) if m == 0 => {}
            Err(pos) => self.entries.insert(pos, (node, m)),
        }
    }

    pub fn count(&self, node: NodeId) -> u32 {
        self.entries
            .binary_search_by_key(&node, |e| e.0)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(NodeId, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of individual observations.
    pub fn observations(&self) -> u32 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Union of two plans over disjoint node sets (counts add on overlap).
    pub fn merged(&self, other: &ObservationPlan) -> ObservationPlan {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    entries.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    entries.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    entries.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        entries.extend_from_slice(&self.entries[i..]);
        entries.extend_from_slice(&other.entries[j..]);
        ObservationPlan { entries }
    }

    /// Σ m·cost over the plan.
    pub fn time(&self, inst: &Instance) -> u64 {
        self.entries.iter().map(|&(id, m)| m as u64 * inst.node(id).cost).sum()
    }

    /// Checks that every entry names a measurable node within the per-node
    /// observation limit. Does not check the budget.
    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        for &(id, m) in &self.entries {
            if id.0 == 0 || id.index() >= inst.len() {
                return Err(OssError::InvalidArgument(format!("node {id} does not exist")));
            }
            if !inst.node(id).is_measurable {
                return Err(OssError::InvalidArgument(format!("node {id} is not measurable")));
            }
            if m > inst.max_obs_per_node() {
                return Err(OssError::InvalidArgument(format!(
                    "node {id} observed {m} times, max_obs_per_node is {}",
                    inst.max_obs_per_node()
                )));
            }
        }
        Ok(())
    }

    /// Like [`check_against`](Self::check_against), additionally enforcing
    /// the instance budget.
    pub fn check_feasible(&self, inst: &Instance) -> Result<u64> {
        self.check_against(inst)?;
        let time = self.time(inst);
        if time > inst.budget() {
            return Err(OssError::BudgetExceeded {
                time,
                budget: inst.budget(),
            });
        }
        Ok(time)
    }
}

impl fmt::Display for ObservationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &(id, m) in &self.entries {
            for _ in 0..m {
                if !first {
                    f.write_str(",")?;
                }
                write!(f, "{id}")?;
                first = false;
            }
        }
        Ok(())
    }
}
