//! Bottom-up profile compilation shared by both solvers.
//!
//! Every node's table is built from its children's finished tables: for each
//! external-quality cell, each observation count and each combination of
//! child output cells, the local ψ function produces the node's output
//! quality and the external quality each child would see. Child entries are
//! then fetched at those external cells and every surviving combination is
//! inserted into the node's table.

use rayon::prelude::*;

use crate::model::{Instance, NodeId};
use crate::plan::ObservationPlan;
use crate::profile::{CondPerf, GridSpec, ProfileTable};

/// Output of one local ψ evaluation.
///
/// `raw[1..D-1]` are the node's inner output qualities, `raw[D-1]` is the
/// node's own local reward (before merging the children's rewards), and
/// `externals[i]` is the external quality passed to the i-th child.
pub(crate) struct LocalEval<const D: usize> {
    pub raw: [f64; D],
    pub externals: Vec<f64>,
}

pub(crate) trait Composer<const D: usize>: Sync {
    /// Evaluates ψ at `node` for external quality `p`, `m` observations and
    /// the children's inner output qualities (grid representatives).
    fn local(&self, node: NodeId, p: f64, m: u32, child_inner: &[&[f64]]) -> LocalEval<D>;

    /// Folds one child's reward into the running subtree reward.
    fn merge_reward(&self, acc: f64, child: f64) -> f64;
}

/// A compiled tree: the root table plus per-node table sizes.
#[derive(Debug, Clone)]
pub struct Compilation<const D: usize> {
    pub root: ProfileTable<D>,
    /// Final table size of every node, indexed by `NodeId::index`.
    pub table_sizes: Vec<usize>,
}

impl<const D: usize> Compilation<D> {
    /// Cell-count product of the grids, the cap on any table's size.
    pub fn capacity(&self) -> u128 {
        self.root.capacity()
    }

    pub fn largest_table(&self) -> usize {
        self.table_sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Observation counts considered at a node. Free measurable nodes are always
/// observed the maximum number of times.
pub(crate) fn allowed_counts(inst: &Instance, id: NodeId) -> Vec<u32> {
    let max = inst.max_obs(id);
    if max > 0 && inst.node(id).cost == 0 {
        vec![max]
    } else {
        (0..=max).collect()
    }
}

pub(crate) fn compile_tree<const D: usize, C: Composer<D>>(
    inst: &Instance,
    grids: [GridSpec; D],
    composer: &C,
) -> Compilation<D> {
    let mut tables: Vec<Option<ProfileTable<D>>> = vec![None; inst.len()];
    let mut table_sizes = vec![0; inst.len()];
    for id in inst.post_order() {
        let kids: Vec<ProfileTable<D>> = inst
            .children(id)
            .iter()
            .map(|c| tables[c.index()].take().expect("children compile first"))
            .collect();
        let table = compile_node(inst, &grids, composer, id, &kids);
        table_sizes[id.index()] = table.len();
        tables[id.index()] = Some(table);
    }
    Compilation {
        root: tables[NodeId::ROOT.index()].take().expect("root compiled"),
        table_sizes,
    }
}

/// Distinct inner cell tuples (coordinates 1..D-1) present in a child table,
/// with their representatives.
fn inner_cells<const D: usize>(table: &ProfileTable<D>) -> Vec<(Vec<u32>, Vec<f64>)> {
    let mut cells: Vec<Vec<u32>> = table.iter().map(|cp| cp.cell[1..D - 1].to_vec()).collect();
    cells.sort_unstable();
    cells.dedup();
    let grids = table.grids();
    cells
        .into_iter()
        .map(|c| {
            let reps = c
                .iter()
                .enumerate()
                .map(|(j, &k)| grids[j + 1].representative(k))
                .collect();
            (c, reps)
        })
        .collect()
}

/// Advances a mixed-radix counter; returns false after the last combination.
fn advance(counter: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for i in (0..counter.len()).rev() {
        counter[i] += 1;
        if counter[i] < radix(i) {
            return true;
        }
        counter[i] = 0;
    }
    false
}

fn compile_node<const D: usize, C: Composer<D>>(
    inst: &Instance,
    grids: &[GridSpec; D],
    composer: &C,
    id: NodeId,
    kids: &[ProfileTable<D>],
) -> ProfileTable<D> {
    let budget = inst.budget();
    let cost = inst.node(id).cost;
    let counts = allowed_counts(inst, id);
    let inner: Vec<Vec<(Vec<u32>, Vec<f64>)>> = kids.iter().map(inner_cells).collect();
    let p_grid = grids[0];
    let r_grid = grids[D - 1];

    let build = |p_cell: u32| -> ProfileTable<D> {
        let mut frag = ProfileTable::new(*grids, budget);
        if inner.iter().any(Vec::is_empty) {
            return frag;
        }
        let p = p_grid.representative(p_cell);
        let mut combo = vec![0usize; kids.len()];
        let mut prefix = vec![0u32; D - 1];
        loop {
            let child_inner: Vec<&[f64]> = combo
                .iter()
                .enumerate()
                .map(|(i, &j)| inner[i][j].1.as_slice())
                .collect();
            for &m in &counts {
                let base_time = m as u64 * cost;
                if base_time > budget {
                    continue;
                }
                let local = composer.local(id, p, m, &child_inner);
                let mut lists: Vec<Vec<&CondPerf<D>>> = Vec::with_capacity(kids.len());
                for (i, kid) in kids.iter().enumerate() {
                    prefix[0] = p_grid.cell(local.externals[i]);
                    prefix[1..].copy_from_slice(&inner[i][combo[i]].0);
                    let hits: Vec<_> = kid.with_prefix(&prefix).collect();
                    if hits.is_empty() {
                        break;
                    }
                    lists.push(hits);
                }
                if lists.len() < kids.len() {
                    continue;
                }

                let mut pick = vec![0usize; kids.len()];
                loop {
                    let time = base_time + pick.iter().enumerate().map(|(i, &j)| lists[i][j].time).sum::<u64>();
                    if time <= budget {
                        let mut raw = local.raw;
                        raw[0] = p;
                        raw[D - 1] = pick.iter().enumerate().fold(local.raw[D - 1], |acc, (i, &j)| {
                            composer.merge_reward(acc, r_grid.representative(lists[i][j].cell[D - 1]))
                        });
                        let mut cell = [p_cell; D];
                        for j in 1..D {
                            cell[j] = grids[j].cell(raw[j]);
                        }
                        if frag.get(&cell).is_none_or(|e| time <= e.time) {
                            let mut plan = ObservationPlan::new();
                            for (i, &j) in pick.iter().enumerate() {
                                plan = plan.merged(&lists[i][j].plan);
                            }
                            plan.set(id, m);
                            frag.insert_purged(CondPerf { plan, time, cell, raw });
                        }
                    }
                    if !advance(&mut pick, |i| lists[i].len()) {
                        break;
                    }
                }
            }
            if !advance(&mut combo, |i| inner[i].len()) {
                break;
            }
        }
        frag
    };

    let fragments: Vec<ProfileTable<D>> = (0..p_grid.d()).into_par_iter().map(build).collect();
    let mut table = ProfileTable::new(*grids, budget);
    for frag in fragments {
        table.absorb(frag);
    }
    table
}

/// Best root entry under `utility`: highest utility, then lower time, then
/// the lexicographically smaller plan. Entries at −∞ are never selected.
pub(crate) fn select<const D: usize>(
    root: &ProfileTable<D>,
    utility: impl Fn(&CondPerf<D>) -> f64,
) -> Option<(&CondPerf<D>, f64)> {
    let mut best: Option<(&CondPerf<D>, f64)> = None;
    for cp in root.iter() {
        let u = utility(cp);
        if u == f64::NEG_INFINITY {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bu)) => u > bu || (u == bu && (cp.time, &cp.plan) < (b.time, &b.plan)),
        };
        if better {
            best = Some((cp, u));
        }
    }
    best
}
