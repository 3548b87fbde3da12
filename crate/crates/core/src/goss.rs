//! Gaussian observation subset selection.
//!
//! The reward is the worst normalized log-precision over the hypothesis
//! nodes. Posterior variances in a linear-Gaussian tree do not depend on the
//! observed values, so the reward of a plan is deterministic and can be
//! computed by precision message passing: each subtree reports the evidence
//! precision `f` it contributes to its root, and receives from outside the
//! external precision `p` of its root. A node's posterior precision is
//! `p + f`.
//!
//! Across an edge `X_c = a·X_s + N(0, σ²)` with `α = a²`, `β = 1/σ²`:
//!
//! ```text
//! f'_c = α · J(f_c, β)                        evidence precision about X_s
//! p_c  = J(β, (p_s + m·θ_s + Σ_{j≠c} f'_j) / α) external precision of X_c
//! ```
//!
//! [`EdgeScaling::Inverted`] swaps `α` for `1/α` in both lines. It agrees
//! with exact conditioning only when `a² = 1` and is kept for comparison.

use std::time::Instant;

use crate::engine::{compile_tree, select, Compilation, Composer, LocalEval};
use crate::error::{OssError, Result};
use crate::model::{GaussianParams, Instance, InstanceKind, NodeId};
use crate::plan::ObservationPlan;
use crate::profile::{precision_join, CondPerf, GridSpec};
use crate::solution::{GridsUsed, Solution};

pub use crate::profile::logbar;

/// How precision is scaled across an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeScaling {
    /// Scale evidence precision by `a²` towards the parent and external
    /// precision by `1/a²` towards the child. Matches exact conditioning.
    #[default]
    Exact,
    /// Scale by `1/a²` towards the parent and by `a²` towards the child.
    Inverted,
}

/// Output quality of a Gaussian subtree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GossQuality {
    /// Evidence precision about the subtree root from inside the subtree.
    pub f: f64,
    /// Subtree reward: worst normalized log-precision among its hypotheses.
    pub r: f64,
}

impl EdgeScaling {
    /// Evidence precision a child with inside precision `f` passes upward.
    fn lift(self, f: f64, child: &GaussianParams) -> f64 {
        let (alpha, beta) = (child.alpha(), child.beta());
        match self {
            EdgeScaling::Exact => alpha * precision_join(f, beta),
            EdgeScaling::Inverted if alpha == 0.0 => 0.0,
            EdgeScaling::Inverted => precision_join(f, beta) / alpha,
        }
    }

    /// External precision of a child whose parent has precision `outside`
    /// from everything except that child.
    fn lower(self, outside: f64, child: &GaussianParams) -> f64 {
        let (alpha, beta) = (child.alpha(), child.beta());
        match self {
            // A zero-weight edge decouples the child, leaving its own prior.
            EdgeScaling::Exact if alpha == 0.0 => beta,
            EdgeScaling::Exact => precision_join(beta, outside / alpha),
            EdgeScaling::Inverted => precision_join(beta, alpha * outside),
        }
    }
}

fn local_reward(posterior: f64, is_hypothesis: bool, range: (f64, f64)) -> f64 {
    if is_hypothesis {
        logbar(range.0, range.1, posterior)
    } else {
        1.0
    }
}

/// ψ for a leaf observed `m` times.
pub fn psi_leaf(p: f64, m: u32, node: &GaussianParams, is_hypothesis: bool, range: (f64, f64)) -> GossQuality {
    let f = m as f64 * node.theta;
    GossQuality {
        f,
        r: local_reward(p + f, is_hypothesis, range),
    }
}

/// ψ for an internal node. Returns the node's quality and each child's
/// external precision.
#[allow(clippy::too_many_arguments)]
pub fn psi_internal(
    p: f64,
    m: u32,
    node: &GaussianParams,
    is_hypothesis: bool,
    children: &[GaussianParams],
    child_q: &[GossQuality],
    range: (f64, f64),
    scaling: EdgeScaling,
) -> (GossQuality, Vec<f64>) {
    debug_assert_eq!(children.len(), child_q.len());
    let own = m as f64 * node.theta;
    let lifted: Vec<f64> = children
        .iter()
        .zip(child_q)
        .map(|(c, q)| scaling.lift(q.f, c))
        .collect();
    let f = own + lifted.iter().sum::<f64>();
    let r0 = local_reward(p + f, is_hypothesis, range);
    let r = child_q.iter().fold(r0, |acc, q| acc.min(q.r));
    let externals = children
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let rest: f64 = lifted.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, l)| l).sum();
            scaling.lower(own + p + rest, c)
        })
        .collect();
    (GossQuality { f, r }, externals)
}

/// Undiscretized evaluation of a fixed plan through the ψ recursion.
#[derive(Debug, Clone)]
pub struct GossTrace {
    pub quality: Vec<GossQuality>,
    /// External precision per node; the root's is its prior precision.
    pub external: Vec<f64>,
}

impl GossTrace {
    /// Posterior precision `p + f` of a node.
    pub fn posterior(&self, id: NodeId) -> f64 {
        self.external[id.index()] + self.quality[id.index()].f
    }

    /// Reward of the whole tree.
    pub fn reward(&self) -> f64 {
        self.quality[NodeId::ROOT.index()].r
    }
}

pub fn evaluate_plan(inst: &Instance, plan: &ObservationPlan, scaling: EdgeScaling) -> GossTrace {
    assert_eq!(inst.kind(), InstanceKind::Gaussian);
    let range = inst.reward_range().expect("gaussian instances carry a reward range");
    let n = inst.len();
    let post = inst.post_order();
    let params = |id: NodeId| *inst.node(id).gaussian();
    let kids_params = |id: NodeId| -> Vec<GaussianParams> { inst.children(id).iter().map(|&c| params(c)).collect() };
    let kids_quality = |q: &[GossQuality], id: NodeId| -> Vec<GossQuality> {
        inst.children(id).iter().map(|c| q[c.index()]).collect()
    };
    let psi = |id: NodeId, p: f64, q: &[GossQuality], hyp: bool| {
        psi_internal(
            p,
            plan.count(id),
            &params(id),
            hyp,
            &kids_params(id),
            &kids_quality(q, id),
            range,
            scaling,
        )
    };

    let mut quality = vec![GossQuality { f: 0.0, r: 1.0 }; n];
    for &id in &post {
        let (q, _) = psi(id, 0.0, &quality, false);
        quality[id.index()] = GossQuality { r: 1.0, ..q };
    }

    let mut external = vec![0.0; n];
    external[NodeId::ROOT.index()] = params(NodeId::ROOT).beta();
    for id in inst.pre_order() {
        let (_, ext) = psi(id, external[id.index()], &quality, false);
        for (c, p) in inst.children(id).iter().zip(ext) {
            external[c.index()] = p;
        }
    }

    for &id in &post {
        let (q, _) = psi(id, external[id.index()], &quality, inst.node(id).is_hypothesis);
        quality[id.index()] = q;
    }
    GossTrace { quality, external }
}

/// Grids of a Gaussian compilation: log-projected p and f, plain r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GossGrids {
    pub p: GridSpec,
    pub f: GridSpec,
    pub r: GridSpec,
}

impl GossGrids {
    pub fn explicit(eps_p: f64, eps_f: f64, eps_r: f64, range: (f64, f64)) -> Result<Self> {
        Ok(GossGrids {
            p: GridSpec::log(eps_p, range.0, range.1)?,
            f: GridSpec::log(eps_f, range.0, range.1)?,
            r: GridSpec::new(eps_r)?,
        })
    }

    /// ε/h for p and f, ε for r (h taken as at least 1).
    pub fn recipe(epsilon: f64, inst: &Instance) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(OssError::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let range = inst
            .reward_range()
            .ok_or_else(|| OssError::InvalidArgument("goss solver needs a gaussian instance".into()))?;
        let h = inst.tree_stats().h.max(1) as f64;
        Self::explicit(epsilon / h, epsilon / h, epsilon, range)
    }

    pub fn as_array(&self) -> [GridSpec; 3] {
        [self.p, self.f, self.r]
    }

    /// Additive optimality-gap bound `h·εp + h·εf + εr`.
    pub fn delta_u(&self, inst: &Instance) -> f64 {
        let h = inst.tree_stats().h.max(1) as f64;
        h * self.p.eps() + h * self.f.eps() + self.r.eps()
    }

    pub fn used(&self) -> GridsUsed {
        GridsUsed {
            eps_p: self.p.eps(),
            eps_f: self.f.eps(),
            eps_g: None,
            eps_r: self.r.eps(),
        }
    }
}

struct GossComposer<'a> {
    inst: &'a Instance,
    range: (f64, f64),
    scaling: EdgeScaling,
}

impl Composer<3> for GossComposer<'_> {
    fn local(&self, node: NodeId, p: f64, m: u32, child_inner: &[&[f64]]) -> LocalEval<3> {
        let n = self.inst.node(node);
        let children: Vec<GaussianParams> = self
            .inst
            .children(node)
            .iter()
            .map(|&c| *self.inst.node(c).gaussian())
            .collect();
        let child_q: Vec<GossQuality> = child_inner.iter().map(|c| GossQuality { f: c[0], r: 1.0 }).collect();
        let (q, externals) = psi_internal(
            p,
            m,
            n.gaussian(),
            n.is_hypothesis,
            &children,
            &child_q,
            self.range,
            self.scaling,
        );
        LocalEval {
            raw: [p, q.f, q.r],
            externals,
        }
    }

    fn merge_reward(&self, acc: f64, child: f64) -> f64 {
        acc.min(child)
    }
}

/// Compiles the root profile table of a Gaussian instance.
pub fn compile(inst: &Instance, grids: &GossGrids, scaling: EdgeScaling) -> Result<Compilation<3>> {
    let range = match (inst.kind(), inst.reward_range()) {
        (InstanceKind::Gaussian, Some(range)) => range,
        _ => {
            return Err(OssError::InvalidArgument(
                "goss solver needs a gaussian instance".into(),
            ))
        }
    };
    Ok(compile_tree(
        inst,
        grids.as_array(),
        &GossComposer { inst, range, scaling },
    ))
}

/// Utility of a root entry: its r representative when the p-cell matches the
/// root prior precision and the entry fits the budget, −∞ otherwise.
pub fn utility(cp: &CondPerf<3>, beta_root: f64, budget: u64, grids: &GossGrids) -> f64 {
    if cp.p_cell() != grids.p.cell(beta_root) || cp.time > budget {
        return f64::NEG_INFINITY;
    }
    grids.r.representative(cp.cell[2])
}

pub fn solve(inst: &Instance, grids: &GossGrids) -> Result<Solution> {
    solve_with(inst, grids, EdgeScaling::Exact)
}

pub fn solve_with(inst: &Instance, grids: &GossGrids, scaling: EdgeScaling) -> Result<Solution> {
    let started = Instant::now();
    let compiled = compile(inst, grids, scaling)?;
    let beta_root = inst.node(NodeId::ROOT).gaussian().beta();
    let (best, u) = select(&compiled.root, |cp| utility(cp, beta_root, inst.budget(), grids))
        .expect("the empty plan is always feasible");
    Ok(Solution {
        kind: InstanceKind::Gaussian,
        plan: best.plan.clone(),
        time_used: best.time,
        predicted_reward: u,
        exact_reward: None,
        delta_u_bound: grids.delta_u(inst),
        grids_used: grids.used(),
        root_table_cells: compiled.root.len(),
        largest_table: compiled.largest_table(),
        table_capacity: compiled.capacity(),
        solver_millis: started.elapsed().as_millis() as u64,
    })
}

/// Smallest and largest precisions any plan can produce.
///
/// Precisions only grow with evidence, so the extremes come from the empty
/// plan, the single-observation plans (smallest non-zero evidence precision)
/// and the plan observing every measurable node the maximum number of times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionExtremes {
    pub min_external: f64,
    pub min_nonzero_evidence: Option<f64>,
    pub max: f64,
}

pub fn precision_extremes(inst: &Instance) -> PrecisionExtremes {
    let nodes: Vec<NodeId> = (0..inst.len()).map(NodeId::from_index).collect();
    let empty = evaluate_plan(inst, &ObservationPlan::new(), EdgeScaling::Exact);
    let min_external = empty.external.iter().copied().fold(f64::INFINITY, f64::min);

    let mut min_nonzero_evidence: Option<f64> = None;
    for &id in &nodes {
        if inst.max_obs(id) == 0 || inst.node(id).gaussian().theta == 0.0 {
            continue;
        }
        let trace = evaluate_plan(inst, &ObservationPlan::from_counts([(id, 1)]), EdgeScaling::Exact);
        for q in &trace.quality {
            if q.f > 0.0 {
                min_nonzero_evidence = Some(min_nonzero_evidence.map_or(q.f, |m| m.min(q.f)));
            }
        }
    }

    let full = ObservationPlan::from_counts(nodes.iter().map(|&id| (id, inst.max_obs(id))));
    let full = evaluate_plan(inst, &full, EdgeScaling::Exact);
    let max = nodes.iter().map(|&id| full.posterior(id)).fold(0.0, f64::max);
    PrecisionExtremes {
        min_external,
        min_nonzero_evidence,
        max,
    }
}

/// Warnings for instances whose reachable precisions fall far outside the
/// reward range, where the grid error bound no longer applies.
pub fn reward_range_warnings(inst: &Instance) -> Vec<String> {
    let Some((a, b)) = inst.reward_range() else {
        return Vec::new();
    };
    let (lo, hi) = (a / 10.0, 10.0 * b);
    let mut out = Vec::new();
    for node in inst.nodes() {
        let beta = node.gaussian().beta();
        if !(lo..=hi).contains(&beta) {
            out.push(format!(
                "node {}: precision 1/sigma2 = {beta} outside [{lo}, {hi}]",
                node.id
            ));
        }
    }
    let ext = precision_extremes(inst);
    let mut check = |label: &str, v: f64| {
        if !(lo..=hi).contains(&v) {
            out.push(format!("{label} {v} outside [{lo}, {hi}]"));
        }
    };
    check("smallest external precision", ext.min_external);
    if let Some(v) = ext.min_nonzero_evidence {
        check("smallest evidence precision", v);
    }
    check("largest posterior precision", ext.max);
    out
}
