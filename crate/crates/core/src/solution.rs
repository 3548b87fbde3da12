use serde::{Deserialize, Serialize};

use crate::error::{OssError, Result};
use crate::model::{InstanceKind, NodeId};
use crate::plan::ObservationPlan;

pub const FORMAT_VERSION: u32 = 1;

/// Grid steps a solution was computed with. `eps_g` is absent for Gaussian
/// instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsUsed {
    pub eps_p: f64,
    pub eps_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_g: Option<f64>,
    pub eps_r: f64,
}

/// Result of a solver or oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub kind: InstanceKind,
    pub plan: ObservationPlan,
    pub time_used: u64,
    /// Reward the solver attributes to its plan, from grid representatives.
    pub predicted_reward: f64,
    /// Exact expected reward of the plan, when an oracle evaluated it.
    pub exact_reward: Option<f64>,
    pub delta_u_bound: f64,
    pub grids_used: GridsUsed,
    pub root_table_cells: usize,
    pub largest_table: usize,
    pub table_capacity: u128,
    pub solver_millis: u64,
}

/// On-disk solution document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDoc {
    pub format_version: u32,
    pub kind: InstanceKind,
    /// `(node id, observation count)` pairs in ascending node order.
    pub subset: Vec<(u32, u32)>,
    pub time_used: u64,
    pub predicted_reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_reward: Option<f64>,
    pub delta_u_bound: f64,
    pub grids_used: GridsUsed,
    pub root_table_cells: usize,
    pub solver_millis: u64,
}

impl Solution {
    pub fn to_doc(&self) -> SolutionDoc {
        SolutionDoc {
            format_version: FORMAT_VERSION,
            kind: self.kind,
            subset: self.plan.iter().map(|(id, m)| (id.0, m)).collect(),
            time_used: self.time_used,
            predicted_reward: self.predicted_reward,
            exact_reward: self.exact_reward,
            delta_u_bound: self.delta_u_bound,
            grids_used: self.grids_used,
            root_table_cells: self.root_table_cells,
            solver_millis: self.solver_millis,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("solution documents always serialize")
    }
}

impl SolutionDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: SolutionDoc = serde_json::from_str(text)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(OssError::field(
                "format_version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", doc.format_version),
            ));
        }
        Ok(doc)
    }

    pub fn plan(&self) -> ObservationPlan {
        ObservationPlan::from_counts(self.subset.iter().map(|&(id, m)| (NodeId(id), m)))
    }
}

/// Exact evaluation of one plan.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetEval {
    pub plan: ObservationPlan,
    pub time: u64,
    pub exact_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetEvalDoc {
    pub format_version: u32,
    pub subset: Vec<(u32, u32)>,
    pub time: u64,
    pub exact_reward: f64,
}

impl SubsetEval {
    pub fn to_doc(&self) -> SubsetEvalDoc {
        SubsetEvalDoc {
            format_version: FORMAT_VERSION,
            subset: self.plan.iter().map(|(id, m)| (id.0, m)).collect(),
            time: self.time,
            exact_reward: self.exact_reward,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("evaluation documents always serialize")
    }
}
