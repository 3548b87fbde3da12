//! Exact reference computations.
//!
//! Nothing here goes through the ψ recursions: boolean rewards come from
//! enumerating every joint assignment of the state variables and every test
//! outcome, Gaussian rewards from conditioning the joint covariance matrix.
//! The solvers are validated against these.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{OssError, Result};
use crate::model::{Instance, InstanceKind, NodeId};
use crate::plan::ObservationPlan;
use crate::profile::logbar;
use crate::solution::SubsetEval;

pub const MAX_BOOLEAN_NODES: usize = 16;
pub const MAX_BOOLEAN_OBSERVATIONS: u32 = 16;
pub const MAX_GAUSSIAN_NODES: usize = 64;
pub const MAX_ENUMERATED_PLANS: u128 = 1 << 20;

/// Exact expected reward of `plan`, dispatched on the instance kind. The
/// budget is not checked.
pub fn eval_exact(inst: &Instance, plan: &ObservationPlan) -> Result<SubsetEval> {
    match inst.kind() {
        InstanceKind::Boolean => boss_eval_exact(inst, plan),
        InstanceKind::Gaussian => goss_eval_exact(inst, plan),
    }
}

/// Probability mass of each joint state, indexed by bit mask (bit i is
/// node i+1).
fn joint_prior(inst: &Instance) -> Vec<f64> {
    let n = inst.len();
    (0..1usize << n)
        .map(|x| {
            inst.nodes()
                .iter()
                .map(|node| {
                    let p = node.boolean();
                    let on = match node.parent {
                        None => p.alpha,
                        Some(parent) if x >> parent.index() & 1 == 1 => p.alpha,
                        Some(_) => p.beta,
                    };
                    if x >> node.id.index() & 1 == 1 {
                        on
                    } else {
                        1.0 - on
                    }
                })
                .product()
        })
        .collect()
}

/// Summary of the test-outcome distribution of a boolean plan.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSummary {
    /// Σ over outcomes of Pr(e) · max over hypotheses Pr(X_i = 1 | e).
    pub expected_reward: f64,
    /// Σ over outcomes of Pr(e); 1 up to rounding.
    pub total_probability: f64,
    /// Pr(all tests negative).
    pub all_negative: f64,
}

/// Enumerates all joint states and all outcomes of the plan's tests. Repeated
/// tests at one node are independent given the node's state.
pub fn boss_outcomes(inst: &Instance, plan: &ObservationPlan) -> Result<OutcomeSummary> {
    if inst.kind() != InstanceKind::Boolean {
        return Err(OssError::InvalidArgument(
            "boolean oracle needs a boolean instance".into(),
        ));
    }
    plan.check_against(inst)?;
    if inst.len() > MAX_BOOLEAN_NODES || plan.observations() > MAX_BOOLEAN_OBSERVATIONS {
        return Err(OssError::Guard(format!(
            "boolean oracle handles at most {MAX_BOOLEAN_NODES} nodes and {MAX_BOOLEAN_OBSERVATIONS} observations, \
             got {} and {}",
            inst.len(),
            plan.observations()
        )));
    }

    let prior = joint_prior(inst);
    let tests: Vec<(usize, f64, f64)> = plan
        .iter()
        .flat_map(|(id, m)| {
            let p = inst.node(id).boolean();
            std::iter::repeat_n((id.index(), p.theta, p.zeta), m as usize)
        })
        .collect();
    let hypotheses: Vec<usize> = inst
        .nodes()
        .iter()
        .filter(|n| n.is_hypothesis)
        .map(|n| n.id.index())
        .collect();
    let outcomes = 1usize << tests.len();
    let h = hypotheses.len();

    let mut mass = vec![0.0; outcomes];
    let mut positive = vec![0.0; outcomes * h];
    let mut likelihood = vec![0.0; outcomes];
    for (x, &px) in prior.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        // likelihood[e] = Pr(E = e | X = x), built one test at a time; bit t
        // of e is the outcome of test t.
        likelihood[0] = 1.0;
        for (t, &(node, theta, zeta)) in tests.iter().enumerate() {
            let (neg, pos) = if x >> node & 1 == 1 {
                (theta, 1.0 - theta)
            } else {
                (1.0 - zeta, zeta)
            };
            let half = 1usize << t;
            for e in 0..half {
                let l = likelihood[e];
                likelihood[e] = l * neg;
                likelihood[e | half] = l * pos;
            }
        }
        let on: Vec<usize> = hypotheses
            .iter()
            .enumerate()
            .filter(|&(_, &i)| x >> i & 1 == 1)
            .map(|(j, _)| j)
            .collect();
        for e in 0..outcomes {
            let w = px * likelihood[e];
            if w == 0.0 {
                continue;
            }
            mass[e] += w;
            for &j in &on {
                positive[e * h + j] += w;
            }
        }
    }

    let expected_reward = (0..outcomes)
        .map(|e| positive[e * h..(e + 1) * h].iter().copied().fold(0.0, f64::max))
        .sum();
    Ok(OutcomeSummary {
        expected_reward,
        total_probability: mass.iter().sum(),
        all_negative: mass[0],
    })
}

/// Exact expected reward of a boolean plan by joint enumeration.
pub fn boss_eval_exact(inst: &Instance, plan: &ObservationPlan) -> Result<SubsetEval> {
    let summary = boss_outcomes(inst, plan)?;
    Ok(SubsetEval {
        plan: plan.clone(),
        time: plan.time(inst),
        exact_reward: summary.expected_reward.clamp(0.0, 1.0),
    })
}

/// Joint covariance of the state variables of a linear-Gaussian tree.
pub fn gaussian_covariance(inst: &Instance) -> DMatrix<f64> {
    let n = inst.len();
    let mut cov = DMatrix::zeros(n, n);
    let mut done: Vec<usize> = Vec::with_capacity(n);
    for id in inst.pre_order() {
        let i = id.index();
        let node = inst.node(id);
        let p = node.gaussian();
        match node.parent {
            None => cov[(i, i)] = p.sigma2,
            Some(parent) => {
                let q = parent.index();
                // X_i = a·X_q + noise, noise independent of everything placed so far.
                for &j in &done {
                    let c = p.edge_weight * cov[(q, j)];
                    cov[(i, j)] = c;
                    cov[(j, i)] = c;
                }
                cov[(i, i)] = p.edge_weight * p.edge_weight * cov[(q, q)] + p.sigma2;
            }
        }
        done.push(i);
    }
    cov
}

/// Posterior precision of every node given the plan's observations, by
/// Schur-complement conditioning of the joint covariance.
pub fn goss_posterior_precisions(inst: &Instance, plan: &ObservationPlan) -> Result<Vec<f64>> {
    if inst.kind() != InstanceKind::Gaussian {
        return Err(OssError::InvalidArgument(
            "gaussian oracle needs a gaussian instance".into(),
        ));
    }
    plan.check_against(inst)?;
    if inst.len() > MAX_GAUSSIAN_NODES {
        return Err(OssError::Guard(format!(
            "gaussian oracle handles at most {MAX_GAUSSIAN_NODES} nodes, got {}",
            inst.len()
        )));
    }
    let cov = gaussian_covariance(inst);
    // One observed copy per observation; zero-precision tests carry no
    // information and are left out.
    let copies: Vec<(usize, f64)> = plan
        .iter()
        .filter(|&(id, _)| inst.node(id).gaussian().theta > 0.0)
        .flat_map(|(id, m)| std::iter::repeat_n((id.index(), inst.node(id).gaussian().theta), m as usize))
        .collect();
    let n = inst.len();
    let k = copies.len();
    if k == 0 {
        return Ok((0..n).map(|i| 1.0 / cov[(i, i)]).collect());
    }
    let cross = DMatrix::from_fn(n, k, |i, c| cov[(i, copies[c].0)]);
    let obs = DMatrix::from_fn(k, k, |a, b| {
        let noise = if a == b { 1.0 / copies[a].1 } else { 0.0 };
        cov[(copies[a].0, copies[b].0)] + noise
    });
    let chol = obs
        .cholesky()
        .ok_or_else(|| OssError::InvalidArgument("observation covariance is not positive definite".into()))?;
    let solved = chol.solve(&cross.transpose());
    Ok((0..n)
        .map(|i| {
            let reduction: f64 = (0..k).map(|c| cross[(i, c)] * solved[(c, i)]).sum();
            1.0 / (cov[(i, i)] - reduction)
        })
        .collect())
}

/// Exact reward of a Gaussian plan: the worst normalized log posterior
/// precision over the hypothesis nodes.
pub fn goss_eval_exact(inst: &Instance, plan: &ObservationPlan) -> Result<SubsetEval> {
    let precisions = goss_posterior_precisions(inst, plan)?;
    let (a, b) = inst.reward_range().expect("gaussian instances carry a reward range");
    let exact_reward = inst
        .nodes()
        .iter()
        .filter(|n| n.is_hypothesis)
        .map(|n| logbar(a, b, precisions[n.id.index()]))
        .fold(1.0, f64::min);
    Ok(SubsetEval {
        plan: plan.clone(),
        time: plan.time(inst),
        exact_reward,
    })
}

/// Every plan within the budget, in mixed-radix order over the measurable
/// nodes (lowest node id varies slowest).
pub fn feasible_plans(inst: &Instance) -> Result<Vec<ObservationPlan>> {
    let measurable: Vec<NodeId> = inst.nodes().iter().filter(|n| n.is_measurable).map(|n| n.id).collect();
    let radix = inst.max_obs_per_node() as u128 + 1;
    let total = measurable.iter().try_fold(1u128, |acc, _| acc.checked_mul(radix));
    match total {
        Some(t) if t <= MAX_ENUMERATED_PLANS => {}
        _ => {
            return Err(OssError::Guard(format!(
                "{} measurable nodes with up to {} observations each exceed {MAX_ENUMERATED_PLANS} plans",
                measurable.len(),
                inst.max_obs_per_node()
            )))
        }
    }
    let mut counts = vec![0u32; measurable.len()];
    let mut out = Vec::new();
    loop {
        let plan = ObservationPlan::from_counts(measurable.iter().copied().zip(counts.iter().copied()));
        if plan.time(inst) <= inst.budget() {
            out.push(plan);
        }
        let mut i = counts.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            counts[i] += 1;
            if counts[i] <= inst.max_obs_per_node() {
                break;
            }
            counts[i] = 0;
        }
    }
}

/// Picks the best evaluation: highest reward, ties to the lexicographically
/// smallest plan.
pub fn best_of(evals: impl IntoIterator<Item = SubsetEval>) -> Option<SubsetEval> {
    evals.into_iter().fold(None, |best: Option<SubsetEval>, e| match best {
        None => Some(e),
        Some(b) if e.exact_reward > b.exact_reward || (e.exact_reward == b.exact_reward && e.plan < b.plan) => Some(e),
        keep => keep,
    })
}

/// Optimal plan within the budget by exhaustive enumeration.
pub fn brute_force_optimum(inst: &Instance) -> Result<SubsetEval> {
    let plans = feasible_plans(inst)?;
    let evals = plans
        .par_iter()
        .map(|plan| eval_exact(inst, plan))
        .collect::<Result<Vec<_>>>()?;
    Ok(best_of(evals).expect("the empty plan is always feasible"))
}
