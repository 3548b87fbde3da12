//! Seeded random instance generation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{OssError, Result};
use crate::goss::precision_extremes;
use crate::model::{BooleanParams, GaussianParams, Instance, InstanceKind, Node, NodeId, NodeParams};

#[derive(Debug, Clone, PartialEq)]
pub struct BooleanRanges {
    /// Root prior.
    pub prior: (f64, f64),
    /// Pr(X = 1 | parent = 1).
    pub alpha: (f64, f64),
    /// Pr(X = 1 | parent = 0).
    pub beta: (f64, f64),
    /// Test miss rate.
    pub theta: (f64, f64),
    /// False-positive rates are drawn from [0, zeta_max].
    pub zeta_max: f64,
}

impl Default for BooleanRanges {
    fn default() -> Self {
        BooleanRanges {
            prior: (0.05, 0.95),
            alpha: (0.5, 0.95),
            beta: (0.05, 0.5),
            theta: (0.0, 0.3),
            zeta_max: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRanges {
    /// Magnitude of the edge weight; the sign is drawn separately.
    pub weight: (f64, f64),
    pub sigma2: (f64, f64),
    pub obs_precision: (f64, f64),
    /// Fixed reward range; `None` picks one covering every reachable
    /// precision.
    pub reward_range: Option<(f64, f64)>,
}

impl Default for GaussianRanges {
    fn default() -> Self {
        GaussianRanges {
            weight: (0.3, 1.5),
            sigma2: (0.3, 2.0),
            obs_precision: (0.5, 4.0),
            reward_range: None,
        }
    }
}

/// Parameters of [`GenParams::generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub kind: InstanceKind,
    pub nodes: usize,
    /// Maximum number of children per node.
    pub branching: usize,
    pub seed: u64,
    /// Inclusive range of measurable-node costs.
    pub cost_range: (u64, u64),
    /// Budget as a fraction of the total cost of all measurable nodes.
    pub budget_fraction: f64,
    pub max_obs_per_node: u32,
    /// Independent, all-measurable hypotheses with exact tests and
    /// heterogeneous costs: a knapsack in disguise.
    pub knapsack: bool,
    pub hypothesis_prob: f64,
    /// Probability that a node (a hypothesis, for boolean instances) is
    /// measurable.
    pub measurable_prob: f64,
    pub boolean: BooleanRanges,
    pub gaussian: GaussianRanges,
}

impl GenParams {
    pub fn new(kind: InstanceKind, nodes: usize, branching: usize, seed: u64) -> Self {
        GenParams {
            kind,
            nodes,
            branching,
            seed,
            cost_range: (1, 5),
            budget_fraction: 0.5,
            max_obs_per_node: 1,
            knapsack: false,
            hypothesis_prob: 0.7,
            measurable_prob: 0.6,
            boolean: BooleanRanges::default(),
            gaussian: GaussianRanges::default(),
        }
    }

    pub fn boolean(nodes: usize, branching: usize, seed: u64) -> Self {
        Self::new(InstanceKind::Boolean, nodes, branching, seed)
    }

    pub fn gaussian(nodes: usize, branching: usize, seed: u64) -> Self {
        Self::new(InstanceKind::Gaussian, nodes, branching, seed)
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(OssError::InvalidArgument(what.to_string()));
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        let prob_ok = |r: (f64, f64)| range_ok(r) && r.0 >= 0.0 && r.1 <= 1.0;
        if self.nodes == 0 {
            return bad("need at least one node");
        }
        if self.branching == 0 {
            return bad("branching must be at least 1");
        }
        if self.cost_range.0 > self.cost_range.1 {
            return bad("cost range is empty");
        }
        if !(self.budget_fraction.is_finite() && self.budget_fraction >= 0.0) {
            return bad("budget fraction must be a non-negative number");
        }
        if self.max_obs_per_node == 0 {
            return bad("max_obs_per_node must be at least 1");
        }
        if !prob_ok((self.hypothesis_prob, self.measurable_prob)) && !(0.0..=1.0).contains(&self.hypothesis_prob) {
            return bad("hypothesis probability must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.measurable_prob) || !(0.0..=1.0).contains(&self.hypothesis_prob) {
            return bad("node-role probabilities must lie in [0, 1]");
        }
        let b = &self.boolean;
        if !(prob_ok(b.prior) && prob_ok(b.alpha) && prob_ok(b.beta) && prob_ok(b.theta)) {
            return bad("boolean parameter ranges must be ordered sub-intervals of [0, 1]");
        }
        if !(0.0..=1.0).contains(&b.zeta_max) {
            return bad("zeta_max must lie in [0, 1]");
        }
        let g = &self.gaussian;
        if !(range_ok(g.weight) && g.weight.0 >= 0.0) {
            return bad("edge weight range must be ordered and non-negative");
        }
        if !(range_ok(g.sigma2) && g.sigma2.0 > 0.0) {
            return bad("sigma2 range must be ordered and positive");
        }
        if !(range_ok(g.obs_precision) && g.obs_precision.0 >= 0.0) {
            return bad("observation precision range must be ordered and non-negative");
        }
        if let Some((lo, hi)) = g.reward_range {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return bad("reward range needs 0 < a < b");
            }
        }
        Ok(())
    }

    /// Draws an instance. The result is a pure function of `self`.
    pub fn generate(&self) -> Result<Instance> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if lo == hi { lo } else { rng.gen_range(lo..=hi) };

        let mut parents: Vec<Option<u32>> = vec![None];
        let mut child_count = vec![0usize; self.nodes];
        for id in 2..=self.nodes as u32 {
            let open: Vec<u32> = (1..id)
                .filter(|&j| child_count[j as usize - 1] < self.branching)
                .collect();
            let parent = open[rng.gen_range(0..open.len())];
            child_count[parent as usize - 1] += 1;
            parents.push(Some(parent));
        }

        let mut nodes = Vec::with_capacity(self.nodes);
        for (index, parent) in parents.iter().enumerate() {
            let id = NodeId::from_index(index);
            let (is_hypothesis, is_measurable) = if self.knapsack {
                (true, true)
            } else {
                let h = rng.gen_bool(self.hypothesis_prob);
                let m = rng.gen_bool(self.measurable_prob);
                match self.kind {
                    InstanceKind::Boolean => (h, h && m),
                    InstanceKind::Gaussian => (h, m),
                }
            };
            let cost = if is_measurable {
                rng.gen_range(self.cost_range.0..=self.cost_range.1)
            } else {
                0
            };
            let params = match self.kind {
                InstanceKind::Boolean => {
                    let r = &self.boolean;
                    let (alpha, beta) = if parent.is_none() || self.knapsack {
                        let prior = draw(&mut rng, r.prior);
                        (prior, prior)
                    } else {
                        (draw(&mut rng, r.alpha), draw(&mut rng, r.beta))
                    };
                    let (theta, zeta) = match (is_measurable, self.knapsack) {
                        (false, _) => (1.0, 0.0),
                        (true, true) => (0.0, 0.0),
                        (true, false) => (draw(&mut rng, r.theta), draw(&mut rng, (0.0, r.zeta_max))),
                    };
                    NodeParams::Boolean(BooleanParams {
                        alpha,
                        beta,
                        theta,
                        zeta,
                    })
                }
                InstanceKind::Gaussian => {
                    let r = &self.gaussian;
                    let edge_weight = if parent.is_none() || self.knapsack {
                        0.0
                    } else {
                        let w = draw(&mut rng, r.weight);
                        if rng.gen_bool(0.5) {
                            w
                        } else {
                            -w
                        }
                    };
                    let sigma2 = draw(&mut rng, r.sigma2);
                    let theta = if is_measurable {
                        draw(&mut rng, r.obs_precision)
                    } else {
                        0.0
                    };
                    NodeParams::Gaussian(GaussianParams {
                        edge_weight,
                        sigma2,
                        theta,
                        mu: None,
                    })
                }
            };
            nodes.push(Node {
                id,
                parent: parent.map(NodeId),
                is_hypothesis,
                is_measurable,
                cost,
                params,
            });
        }
        if !nodes.iter().any(|n| n.is_hypothesis) {
            nodes[0].is_hypothesis = true;
        }

        let total_cost: u64 = nodes.iter().filter(|n| n.is_measurable).map(|n| n.cost).sum();
        let budget = (self.budget_fraction * total_cost as f64).round() as u64;
        let max_obs = self.max_obs_per_node;
        match self.kind {
            InstanceKind::Boolean => Instance::new(
                InstanceKind::Boolean,
                nodes,
                budget,
                max_obs,
                Some(self.boolean.zeta_max),
                None,
            ),
            InstanceKind::Gaussian => {
                let range = match self.gaussian.reward_range {
                    Some(range) => range,
                    None => {
                        let probe = Instance::new(
                            InstanceKind::Gaussian,
                            nodes.clone(),
                            budget,
                            max_obs,
                            None,
                            Some((1e-300, 1e300)),
                        )?;
                        covering_range(&probe)
                    }
                };
                Instance::new(InstanceKind::Gaussian, nodes, budget, max_obs, None, Some(range))
            }
        }
    }
}

/// A reward range enclosing every precision reachable under any plan, with a
/// 10% margin on each side.
fn covering_range(inst: &Instance) -> (f64, f64) {
    let ext = precision_extremes(inst);
    let lo = ext
        .min_nonzero_evidence
        .map_or(ext.min_external, |e| e.min(ext.min_external));
    (0.9 * lo, 1.1 * ext.max)
}
