//! Boolean observation subset selection.
//!
//! The reward of a posterior is the largest posterior-positive probability
//! among the hypothesis nodes. With false-positive-free tests a single
//! positive result pins the reward at 1, so the expected reward of a plan is
//! determined by the all-negative outcome alone:
//!
//! ```text
//! U = Pr(ê)·R(ê) + (1 − Pr(ê))·1,   Pr(ê) = lerp(f, g, α₁)
//! ```
//!
//! where `f`/`g` are the likelihoods of the all-negative evidence given the
//! root state and `R(ê)` is the reward under that evidence. Each subtree's
//! profile tracks `(f, g, r)` on uniform grids, conditioned on the external
//! probability `p` that its root is positive.

use std::time::Instant;

use crate::engine::{compile_tree, select, Compilation, Composer, LocalEval};
use crate::error::{OssError, Result};
use crate::model::{BooleanParams, Instance, InstanceKind, NodeId};
use crate::plan::ObservationPlan;
use crate::profile::{lerp, CondPerf, GridSpec};
use crate::solution::{GridsUsed, Solution};

/// Output quality of a boolean subtree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BossQuality {
    /// Pr(all-negative evidence inside the subtree | subtree root = 1).
    pub f: f64,
    /// Pr(all-negative evidence inside the subtree | subtree root = 0).
    pub g: f64,
    /// Subtree reward under all-negative evidence.
    pub r: f64,
}

/// `num / den`, or 0 when the conditioning event is impossible.
#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Posterior-positive probability of a node with external probability `p`
/// and all-negative evidence likelihoods `f`, `g`.
#[inline]
fn local_reward(p: f64, f: f64, g: f64, is_hypothesis: bool) -> f64 {
    if is_hypothesis {
        ratio(p * f, lerp(f, g, p))
    } else {
        0.0
    }
}

/// ψ for a leaf observed `m` times.
pub fn psi_leaf(p: f64, m: u32, node: &BooleanParams, is_hypothesis: bool) -> BossQuality {
    let f = node.theta.powi(m as i32);
    let g = (1.0 - node.zeta).powi(m as i32);
    BossQuality {
        f,
        g,
        r: local_reward(p, f, g, is_hypothesis),
    }
}

/// ψ for an internal node. `children[i]` supplies the edge parameters
/// (`alpha`, `beta`) of the i-th child and `child_q[i]` its subtree quality.
/// Returns the node's quality and the external probability of each child.
pub fn psi_internal(
    p: f64,
    m: u32,
    node: &BooleanParams,
    is_hypothesis: bool,
    children: &[BooleanParams],
    child_q: &[BossQuality],
) -> (BossQuality, Vec<f64>) {
    debug_assert_eq!(children.len(), child_q.len());
    let own_f = node.theta.powi(m as i32);
    let own_g = (1.0 - node.zeta).powi(m as i32);
    let lifted: Vec<(f64, f64)> = children
        .iter()
        .zip(child_q)
        .map(|(c, q)| (lerp(q.f, q.g, c.alpha), lerp(q.f, q.g, c.beta)))
        .collect();

    let f = own_f * lifted.iter().map(|l| l.0).product::<f64>();
    let g = own_g * lifted.iter().map(|l| l.1).product::<f64>();
    let r0 = local_reward(p, f, g, is_hypothesis);
    let r = child_q.iter().fold(r0, |acc, q| acc.max(q.r));

    let externals = children
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (mut f_rest, mut g_rest) = (own_f, own_g);
            for (j, l) in lifted.iter().enumerate() {
                if j != i {
                    f_rest *= l.0;
                    g_rest *= l.1;
                }
            }
            lerp(c.alpha, c.beta, ratio(p * f_rest, lerp(f_rest, g_rest, p)))
        })
        .collect();
    (BossQuality { f, g, r }, externals)
}

/// Undiscretized evaluation of a fixed plan through the ψ recursion.
#[derive(Debug, Clone)]
pub struct BossTrace {
    /// Subtree quality per node, indexed by `NodeId::index`.
    pub quality: Vec<BossQuality>,
    /// External probability per node; the root's is its prior.
    pub external: Vec<f64>,
    alpha_root: f64,
}

impl BossTrace {
    /// Expected reward `lerp(r, 1, lerp(f, g, α₁))` at the root. Exact when
    /// the tests have no false positives.
    pub fn expected_reward(&self) -> f64 {
        let root = self.quality[NodeId::ROOT.index()];
        lerp(root.r, 1.0, lerp(root.f, root.g, self.alpha_root))
    }

    pub fn root(&self) -> BossQuality {
        self.quality[NodeId::ROOT.index()]
    }
}

/// Runs the ψ recursion on exact values for `plan`: likelihoods bottom-up,
/// external probabilities top-down, then rewards bottom-up.
pub fn evaluate_plan(inst: &Instance, plan: &ObservationPlan) -> BossTrace {
    assert_eq!(inst.kind(), InstanceKind::Boolean);
    let n = inst.len();
    let post = inst.post_order();
    let params = |id: NodeId| *inst.node(id).boolean();
    let kids_params = |id: NodeId| -> Vec<BooleanParams> { inst.children(id).iter().map(|&c| params(c)).collect() };
    let kids_quality = |q: &[BossQuality], id: NodeId| -> Vec<BossQuality> {
        inst.children(id).iter().map(|c| q[c.index()]).collect()
    };

    // f and g do not depend on p.
    let mut quality = vec![BossQuality { f: 1.0, g: 1.0, r: 0.0 }; n];
    for &id in &post {
        let (q, _) = psi_internal(
            0.0,
            plan.count(id),
            &params(id),
            false,
            &kids_params(id),
            &kids_quality(&quality, id),
        );
        quality[id.index()] = BossQuality { r: 0.0, ..q };
    }

    let mut external = vec![0.0; n];
    let alpha_root = params(NodeId::ROOT).alpha;
    external[NodeId::ROOT.index()] = alpha_root;
    for id in inst.pre_order() {
        let (_, ext) = psi_internal(
            external[id.index()],
            plan.count(id),
            &params(id),
            false,
            &kids_params(id),
            &kids_quality(&quality, id),
        );
        for (c, p) in inst.children(id).iter().zip(ext) {
            external[c.index()] = p;
        }
    }

    for &id in &post {
        let node = inst.node(id);
        let (q, _) = psi_internal(
            external[id.index()],
            plan.count(id),
            &params(id),
            node.is_hypothesis,
            &kids_params(id),
            &kids_quality(&quality, id),
        );
        quality[id.index()] = q;
    }
    BossTrace {
        quality,
        external,
        alpha_root,
    }
}

/// The four grids of a boolean compilation: p, f, g, r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BossGrids {
    pub p: GridSpec,
    pub f: GridSpec,
    pub g: GridSpec,
    pub r: GridSpec,
}

impl BossGrids {
    pub fn explicit(eps_p: f64, eps_f: f64, eps_g: f64, eps_r: f64) -> Result<Self> {
        Ok(BossGrids {
            p: GridSpec::new(eps_p)?,
            f: GridSpec::new(eps_f)?,
            g: GridSpec::new(eps_g)?,
            r: GridSpec::new(eps_r)?,
        })
    }

    /// Steps that keep the grid error within `epsilon`: ε/3h for p, ε/6n for
    /// f and g, ε/3 for r (h taken as at least 1).
    pub fn recipe(epsilon: f64, inst: &Instance) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(OssError::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let stats = inst.tree_stats();
        let h = stats.h.max(1) as f64;
        let n = stats.n as f64;
        Self::explicit(
            epsilon / (3.0 * h),
            epsilon / (6.0 * n),
            epsilon / (6.0 * n),
            epsilon / 3.0,
        )
    }

    pub fn as_array(&self) -> [GridSpec; 4] {
        [self.p, self.f, self.g, self.r]
    }

    /// Additive optimality-gap bound `h·εp + 2n·max(εf, εg) + εr + n·ζmax`.
    pub fn delta_u(&self, inst: &Instance) -> f64 {
        let stats = inst.tree_stats();
        let h = stats.h.max(1) as f64;
        let n = stats.n as f64;
        h * self.p.eps() + 2.0 * n * self.f.eps().max(self.g.eps()) + self.r.eps() + n * inst.zeta_max()
    }

    pub fn used(&self) -> GridsUsed {
        GridsUsed {
            eps_p: self.p.eps(),
            eps_f: self.f.eps(),
            eps_g: Some(self.g.eps()),
            eps_r: self.r.eps(),
        }
    }
}

struct BossComposer<'a> {
    inst: &'a Instance,
}

impl Composer<4> for BossComposer<'_> {
    fn local(&self, node: NodeId, p: f64, m: u32, child_inner: &[&[f64]]) -> LocalEval<4> {
        let n = self.inst.node(node);
        let children: Vec<BooleanParams> = self
            .inst
            .children(node)
            .iter()
            .map(|&c| *self.inst.node(c).boolean())
            .collect();
        let child_q: Vec<BossQuality> = child_inner
            .iter()
            .map(|c| BossQuality {
                f: c[0],
                g: c[1],
                r: 0.0,
            })
            .collect();
        let (q, externals) = psi_internal(p, m, n.boolean(), n.is_hypothesis, &children, &child_q);
        LocalEval {
            raw: [p, q.f, q.g, q.r],
            externals,
        }
    }

    fn merge_reward(&self, acc: f64, child: f64) -> f64 {
        acc.max(child)
    }
}

/// Compiles the root profile table of a boolean instance.
pub fn compile(inst: &Instance, grids: &BossGrids) -> Result<Compilation<4>> {
    if inst.kind() != InstanceKind::Boolean {
        return Err(OssError::InvalidArgument("boss solver needs a boolean instance".into()));
    }
    Ok(compile_tree(inst, grids.as_array(), &BossComposer { inst }))
}

/// Utility of a root entry: `lerp(r, 1, lerp(f, g, α₁))` on representatives
/// when the entry's p-cell matches the root prior and it fits the budget,
/// −∞ otherwise.
pub fn utility(cp: &CondPerf<4>, alpha_root: f64, budget: u64, grids: &BossGrids) -> f64 {
    if cp.p_cell() != grids.p.cell(alpha_root) || cp.time > budget {
        return f64::NEG_INFINITY;
    }
    let f = grids.f.representative(cp.cell[1]);
    let g = grids.g.representative(cp.cell[2]);
    let r = grids.r.representative(cp.cell[3]);
    lerp(r, 1.0, lerp(f, g, alpha_root))
}

/// Compiles `inst` and returns the best plan found in the root table.
pub fn solve(inst: &Instance, grids: &BossGrids) -> Result<Solution> {
    let started = Instant::now();
    let compiled = compile(inst, grids)?;
    let alpha_root = inst.node(NodeId::ROOT).boolean().alpha;
    let (best, u) = select(&compiled.root, |cp| utility(cp, alpha_root, inst.budget(), grids))
        .expect("the empty plan is always feasible");
    Ok(Solution {
        kind: InstanceKind::Boolean,
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

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64, theta: f64, zeta: f64) -> BooleanParams {
        BooleanParams {
            alpha,
            beta,
            theta,
            zeta,
        }
    }

    #[test]
    fn leaf_without_observation_keeps_prior() {
        let q = psi_leaf(0.37, 0, &params(0.4, 0.4, 0.2, 0.0), true);
        assert_eq!(
            q,
            BossQuality {
                f: 1.0,
                g: 1.0,
                r: 0.37
            }
        );
    }

    #[test]
    fn leaf_non_hypothesis_has_zero_reward() {
        let q = psi_leaf(0.8, 1, &params(0.4, 0.4, 1.0, 0.0), false);
        assert_eq!(q.r, 0.0);
    }

    #[test]
    fn leaf_noisy_test() {
        let q = psi_leaf(0.5, 1, &params(0.5, 0.5, 0.1, 0.0), true);
        assert!((q.f - 0.1).abs() < 1e-15);
        assert_eq!(q.g, 1.0);
        assert!((q.r - 0.05 / 0.55).abs() < 1e-15);
    }

    #[test]
    fn leaf_impossible_evidence_has_zero_reward() {
        // p = 1 and an exact test: the all-negative outcome cannot happen.
        let q = psi_leaf(1.0, 1, &params(1.0, 1.0, 0.0, 0.0), true);
        assert_eq!((q.f, q.r), (0.0, 0.0));
    }

    #[test]
    fn internal_without_evidence_propagates_prior() {
        let kids = [params(0.7, 0.2, 1.0, 0.0), params(0.9, 0.05, 1.0, 0.0)];
        let q0 = BossQuality { f: 1.0, g: 1.0, r: 0.0 };
        let (q, ext) = psi_internal(0.6, 0, &params(0.6, 0.6, 1.0, 0.0), false, &kids, &[q0, q0]);
        assert_eq!((q.f, q.g, q.r), (1.0, 1.0, 0.0));
        assert!((ext[0] - lerp(0.7, 0.2, 0.6)).abs() < 1e-15);
        assert!((ext[1] - lerp(0.9, 0.05, 0.6)).abs() < 1e-15);
    }

    #[test]
    fn internal_exact_child_test() {
        let child = params(0.7, 0.2, 0.0, 0.0);
        let leaf = psi_leaf(0.0, 1, &child, true);
        let (q, _) = psi_internal(0.6, 0, &params(0.6, 0.6, 1.0, 0.0), true, &[child], &[leaf]);
        assert!((q.f - 0.3).abs() < 1e-15);
        assert!((q.g - 0.8).abs() < 1e-15);
    }

    #[test]
    fn internal_reward_is_max() {
        let kids = [params(0.5, 0.5, 1.0, 0.0), params(0.5, 0.5, 1.0, 0.0)];
        let qs = [
            BossQuality { f: 1.0, g: 1.0, r: 0.3 },
            BossQuality { f: 1.0, g: 1.0, r: 0.9 },
        ];
        let (q, _) = psi_internal(0.5, 0, &params(0.5, 0.5, 1.0, 0.0), true, &kids, &qs);
        assert_eq!(q.r, 0.9);
    }

    #[test]
    fn recipe_steps() {
        let inst = crate::generate::GenParams::boolean(5, 1, 3).generate().unwrap();
        let g = BossGrids::recipe(0.3, &inst).unwrap();
        let h = inst.tree_stats().h.max(1) as f64;
        assert!((g.p.eps() - 0.1 / h).abs() < 1e-15);
        assert!((g.f.eps() - 0.01).abs() < 1e-15);
        assert!((g.r.eps() - 0.1).abs() < 1e-15);
        assert!((g.delta_u(&inst) - 0.3 - 5.0 * inst.zeta_max()).abs() < 1e-12);
    }
    #[test]
    fn child_external_is_propagated_parent_posterior() {
        // Parent posterior after one negative test: 0.5·0.5 / (0.5·0.5 + 0.5) = 1/3.
        let (_, ext) = psi_internal(
            0.5,
            1,
            &params(0.5, 0.5, 0.5, 0.0),
            false,
            &[params(0.9, 0.1, 1.0, 0.0)],
            &[BossQuality { f: 1.0, g: 1.0, r: 0.0 }],
        );
        assert!((ext[0] - 11.0 / 30.0).abs() < 1e-12, "{}", ext[0]);
    }
}
