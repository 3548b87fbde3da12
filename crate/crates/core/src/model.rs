//! Tree-shaped Bayesian network instances.
//!
//! An [`Instance`] is an out-tree over state variables rooted at node 1. Every
//! node may be a hypothesis (it contributes to the reward) and may be
//! measurable (tests can be attached to it, each costing `cost` time units).
//! Boolean instances carry per-node likelihood parameters, Gaussian instances
//! a linear-Gaussian edge model plus an observation precision.
//!
//! The JSON document format is defined by [`InstanceDoc`]; [`Instance`] is the
//! validated, immutable form used by everything else.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{OssError, Result};

/// Dense 1-based node identifier. Node 1 is the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        NodeId(index as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Boolean,
    Gaussian,
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceKind::Boolean => f.write_str("boolean"),
            InstanceKind::Gaussian => f.write_str("gaussian"),
        }
    }
}

/// Boolean node parameters.
///
/// * `alpha` = Pr(X=1 | parent=1), the prior for the root.
/// * `beta`  = Pr(X=1 | parent=0), the prior for the root.
/// * `theta` = Pr(Y=0 | X=1), the miss rate of one test.
/// * `zeta`  = Pr(Y=1 | X=0), the false-positive rate of one test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BooleanParams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub zeta: f64,
}

/// Linear-Gaussian node parameters: `X = a * X_parent + N(0, sigma2)`, and
/// each test observes `X + N(0, 1/theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    /// Edge weight to the parent. Ignored for the root.
    pub edge_weight: f64,
    pub sigma2: f64,
    /// Precision of one observation; 0 for non-measurable nodes.
    pub theta: f64,
    pub mu: Option<f64>,
}

impl GaussianParams {
    /// Squared edge weight.
    #[inline]
    pub fn alpha(&self) -> f64 {
        self.edge_weight * self.edge_weight
    }

    /// Conditional precision given the parent.
    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 / self.sigma2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeParams {
    Boolean(BooleanParams),
    Gaussian(GaussianParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub is_hypothesis: bool,
    pub is_measurable: bool,
    pub cost: u64,
    pub params: NodeParams,
}

impl Node {
    pub fn boolean(&self) -> &BooleanParams {
        match &self.params {
            NodeParams::Boolean(p) => p,
            NodeParams::Gaussian(_) => panic!("node {} has gaussian parameters", self.id),
        }
    }

    pub fn gaussian(&self) -> &GaussianParams {
        match &self.params {
            NodeParams::Gaussian(p) => p,
            NodeParams::Boolean(_) => panic!("node {} has boolean parameters", self.id),
        }
    }
}

/// Tree shape summary: node count, height in edges, maximum branching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeStats {
    pub n: usize,
    pub h: usize,
    pub c: usize,
}

/// A validated observation subset selection instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    kind: InstanceKind,
    nodes: Vec<Node>,
    budget: u64,
    max_obs_per_node: u32,
    zeta_max: f64,
    reward_range: Option<(f64, f64)>,
    children: Vec<Vec<NodeId>>,
}

impl Instance {
    /// Validates the parts and assembles an instance. `nodes` may come in any
    /// order; they are stored by id.
    pub fn new(
        kind: InstanceKind,
        mut nodes: Vec<Node>,
        budget: u64,
        max_obs_per_node: u32,
        zeta_max: Option<f64>,
        reward_range: Option<(f64, f64)>,
    ) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        let zeta_max = match kind {
            InstanceKind::Boolean => {
                if reward_range.is_some() {
                    return Err(OssError::field("reward_range", "only valid for gaussian instances"));
                }
                let z = zeta_max.ok_or_else(|| OssError::field("zeta_max", "required for boolean instances"))?;
                check_probability(None, "zeta_max", z)?;
                z
            }
            InstanceKind::Gaussian => {
                if zeta_max.is_some() {
                    return Err(OssError::field("zeta_max", "only valid for boolean instances"));
                }
                let (a, b) =
                    reward_range.ok_or_else(|| OssError::field("reward_range", "required for gaussian instances"))?;
                if !(a.is_finite() && b.is_finite() && a > 0.0 && a < b) {
                    return Err(OssError::field(
                        "reward_range",
                        format!("need 0 < a < b, got [{a}, {b}]"),
                    ));
                }
                0.0
            }
        };
        if max_obs_per_node < 1 {
            return Err(OssError::field("max_obs_per_node", "must be at least 1"));
        }
        if nodes.is_empty() {
            return Err(OssError::field("nodes", "instance has no nodes"));
        }
        for (index, node) in nodes.iter().enumerate() {
            let expected = NodeId::from_index(index);
            if node.id != expected {
                let message = if index > 0 && nodes[index - 1].id == node.id {
                    format!("duplicate node id {}", node.id)
                } else {
                    format!("ids must be 1..{} without gaps, missing {expected}", nodes.len())
                };
                return Err(OssError::node(node.id.0, "id", message));
            }
        }

        let n = nodes.len();
        let mut children = vec![Vec::new(); n];
        for node in &nodes {
            match (node.id == NodeId::ROOT, node.parent) {
                (true, Some(_)) => return Err(OssError::node(1, "parent", "root with parent")),
                (true, None) => {}
                (false, None) => {
                    return Err(OssError::node(node.id.0, "parent", "only node 1 may be a root"));
                }
                (false, Some(parent)) => {
                    if parent == node.id {
                        return Err(OssError::node(
                            node.id.0,
                            "parent",
                            format!("cycle at node {}", node.id),
                        ));
                    }
                    if parent.0 == 0 || parent.index() >= n {
                        return Err(OssError::node(
                            node.id.0,
                            "parent",
                            format!("orphan node: parent {parent} does not exist"),
                        ));
                    }
                    children[parent.index()].push(node.id);
                }
            }
        }
        // Every chain of parent links must reach the root within n steps.
        for node in &nodes {
            let mut cursor = node.parent;
            let mut steps = 0;
            while let Some(p) = cursor {
                steps += 1;
                if steps > n {
                    return Err(OssError::node(
                        node.id.0,
                        "parent",
                        format!("cycle at node {}", node.id),
                    ));
                }
                cursor = nodes[p.index()].parent;
            }
        }

        if !nodes.iter().any(|n| n.is_hypothesis) {
            return Err(OssError::field("nodes", "at least one hypothesis node is required"));
        }
        for node in &nodes {
            validate_params(kind, node, zeta_max)?;
        }

        Ok(Instance {
            kind,
            nodes,
            budget,
            max_obs_per_node,
            zeta_max,
            reward_range,
            children,
        })
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn max_obs_per_node(&self) -> u32 {
        self.max_obs_per_node
    }

    /// Upper bound on false-positive rates (boolean instances; 0 otherwise).
    pub fn zeta_max(&self) -> f64 {
        self.zeta_max
    }

    /// Precision range `(a, b)` mapped onto rewards 0..1 (gaussian only).
    pub fn reward_range(&self) -> Option<(f64, f64)> {
        self.reward_range
    }

    /// Children of `id`, in ascending id order.
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.index()]
    }

    /// Copy of the instance with a different budget.
    pub fn with_budget(&self, budget: u64) -> Self {
        Instance { budget, ..self.clone() }
    }

    /// Allowed observation counts at a node: `0..=max_obs_per_node` when
    /// measurable, `{0}` otherwise.
    pub fn max_obs(&self, id: NodeId) -> u32 {
        if self.node(id).is_measurable {
            self.max_obs_per_node
        } else {
            0
        }
    }

    /// Nodes in depth-first post-order (children before parents, children
    /// visited in ascending id order).
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(NodeId::ROOT, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
            } else {
                stack.push((id, true));
                for &child in self.children(id).iter().rev() {
                    stack.push((child, false));
                }
            }
        }
        out
    }

    /// Nodes ordered so that every parent precedes its children.
    pub fn pre_order(&self) -> Vec<NodeId> {
        let mut order = self.post_order();
        order.reverse();
        order
    }

    pub fn tree_stats(&self) -> TreeStats {
        let mut depth = vec![0usize; self.len()];
        for id in self.pre_order() {
            if let Some(parent) = self.node(id).parent {
                depth[id.index()] = depth[parent.index()] + 1;
            }
        }
        TreeStats {
            n: self.len(),
            h: depth.iter().copied().max().unwrap_or(0),
            c: self.children.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        doc.into_instance()
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc::from(self)
    }

    /// Pretty-printed JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance documents always serialize")
    }
}

fn check_probability(node: Option<u32>, field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        let message = format!("probability out of range: {v}");
        Err(match node {
            Some(id) => OssError::node(id, field, message),
            None => OssError::field(field, message),
        })
    }
}

fn validate_params(kind: InstanceKind, node: &Node, zeta_max: f64) -> Result<()> {
    let id = node.id.0;
    match (kind, &node.params) {
        (InstanceKind::Boolean, NodeParams::Boolean(p)) => {
            check_probability(Some(id), "alpha", p.alpha)?;
            check_probability(Some(id), "beta", p.beta)?;
            check_probability(Some(id), "theta", p.theta)?;
            check_probability(Some(id), "zeta", p.zeta)?;
            if node.parent.is_none() && p.alpha != p.beta {
                return Err(OssError::node(
                    id,
                    "beta",
                    "root must have alpha == beta (both are the prior)",
                ));
            }
            if !node.is_measurable && (p.theta != 1.0 || p.zeta != 0.0) {
                return Err(OssError::node(
                    id,
                    "theta",
                    "non-measurable node needs theta = 1 and zeta = 0",
                ));
            }
            if p.zeta > zeta_max {
                return Err(OssError::node(
                    id,
                    "zeta",
                    format!("zeta {} exceeds zeta_max {zeta_max}", p.zeta),
                ));
            }
            if node.is_measurable && !node.is_hypothesis {
                return Err(OssError::node(id, "measurable", "measurable nodes must be hypotheses"));
            }
        }
        (InstanceKind::Gaussian, NodeParams::Gaussian(p)) => {
            if !p.edge_weight.is_finite() {
                return Err(OssError::node(id, "a", "edge weight must be finite"));
            }
            if !(p.sigma2.is_finite() && p.sigma2 > 0.0) {
                return Err(OssError::node(
                    id,
                    "sigma2",
                    format!("must be positive, got {}", p.sigma2),
                ));
            }
            if !(p.theta.is_finite() && p.theta >= 0.0) {
                return Err(OssError::node(
                    id,
                    "theta",
                    format!("must be non-negative, got {}", p.theta),
                ));
            }
            if !node.is_measurable && p.theta != 0.0 {
                return Err(OssError::node(id, "theta", "non-measurable node needs theta = 0"));
            }
            if p.mu.is_some_and(|mu| !mu.is_finite()) {
                return Err(OssError::node(id, "mu", "must be finite"));
            }
        }
        _ => {
            return Err(OssError::node(
                id,
                "params",
                format!("parameters do not match a {kind} instance"),
            ))
        }
    }
    Ok(())
}

/// On-disk instance document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub kind: InstanceKind,
    pub budget: u64,
    #[serde(default = "default_max_obs")]
    pub max_obs_per_node: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_range: Option<[f64; 2]>,
    pub nodes: Vec<NodeDoc>,
}

fn default_max_obs() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: u32,
    pub parent: Option<u32>,
    pub hypothesis: bool,
    pub measurable: bool,
    #[serde(default)]
    pub cost: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl NodeDoc {
    fn into_node(self, kind: InstanceKind) -> Result<Node> {
        let id = self.id;
        let require = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| OssError::node(id, field, format!("required for {kind} nodes")))
        };
        let forbid = |v: Option<f64>, field: &str| match v {
            Some(_) => Err(OssError::node(id, field, format!("not a {kind} parameter"))),
            None => Ok(()),
        };
        let params = match kind {
            InstanceKind::Boolean => {
                forbid(self.a, "a")?;
                forbid(self.sigma2, "sigma2")?;
                forbid(self.mu, "mu")?;
                NodeParams::Boolean(BooleanParams {
                    alpha: require(self.alpha, "alpha")?,
                    beta: require(self.beta, "beta")?,
                    theta: require(self.theta, "theta")?,
                    zeta: require(self.zeta, "zeta")?,
                })
            }
            InstanceKind::Gaussian => {
                forbid(self.alpha, "alpha")?;
                forbid(self.beta, "beta")?;
                forbid(self.zeta, "zeta")?;
                NodeParams::Gaussian(GaussianParams {
                    edge_weight: require(self.a, "a")?,
                    sigma2: require(self.sigma2, "sigma2")?,
                    theta: require(self.theta, "theta")?,
                    mu: self.mu,
                })
            }
        };
        if id == 0 {
            return Err(OssError::node(0, "id", "ids start at 1"));
        }
        Ok(Node {
            id: NodeId(id),
            parent: self.parent.map(NodeId),
            is_hypothesis: self.hypothesis,
            is_measurable: self.measurable,
            cost: self.cost,
            params,
        })
    }
}

impl InstanceDoc {
    pub fn into_instance(self) -> Result<Instance> {
        let kind = self.kind;
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| n.into_node(kind))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(
            kind,
            nodes,
            self.budget,
            self.max_obs_per_node,
            self.zeta_max,
            self.reward_range.map(|[a, b]| (a, b)),
        )
    }
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        let nodes = inst
            .nodes
            .iter()
            .map(|node| {
                let mut doc = NodeDoc {
                    id: node.id.0,
                    parent: node.parent.map(|p| p.0),
                    hypothesis: node.is_hypothesis,
                    measurable: node.is_measurable,
                    cost: node.cost,
                    alpha: None,
                    beta: None,
                    a: None,
                    sigma2: None,
                    theta: None,
                    zeta: None,
                    mu: None,
                };
                match node.params {
                    NodeParams::Boolean(p) => {
                        doc.alpha = Some(p.alpha);
                        doc.beta = Some(p.beta);
                        doc.theta = Some(p.theta);
                        doc.zeta = Some(p.zeta);
                    }
                    NodeParams::Gaussian(p) => {
                        doc.a = Some(p.edge_weight);
                        doc.sigma2 = Some(p.sigma2);
                        doc.theta = Some(p.theta);
                        doc.mu = p.mu;
                    }
                }
                doc
            })
            .collect();
        InstanceDoc {
            kind: inst.kind,
            budget: inst.budget,
            max_obs_per_node: inst.max_obs_per_node,
            zeta_max: match inst.kind {
                InstanceKind::Boolean => Some(inst.zeta_max),
                InstanceKind::Gaussian => None,
            },
            reward_range: inst.reward_range.map(|(a, b)| [a, b]),
            nodes,
        }
    }
}
