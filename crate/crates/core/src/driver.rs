//! Entry points shared by the command-line tool and the C ABI.

use crate::boss::{self, BossGrids};
use crate::error::{OssError, Result};
use crate::goss::{self, GossGrids};
use crate::model::{Instance, InstanceKind};
use crate::oracle;
use crate::solution::Solution;

/// How the solver's grids are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridChoice {
    /// Steps derived from a single accuracy target.
    Recipe(f64),
    /// Steps given directly. `eps_g` applies to boolean instances only.
    Explicit {
        eps_p: f64,
        eps_f: f64,
        eps_g: Option<f64>,
        eps_r: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub grids: GridChoice,
    /// Evaluate the returned plan with the exact oracle.
    pub exact_eval: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Report `solver_millis` as 0 so output depends on the input alone.
    pub no_timing: bool,
}

impl SolveOptions {
    pub fn recipe(epsilon: f64) -> Self {
        SolveOptions {
            grids: GridChoice::Recipe(epsilon),
            exact_eval: false,
            threads: None,
            no_timing: false,
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(OssError::InvalidArgument("thread count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| OssError::InvalidArgument(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn boss_grids(inst: &Instance, choice: GridChoice) -> Result<BossGrids> {
    match choice {
        GridChoice::Recipe(eps) => BossGrids::recipe(eps, inst),
        GridChoice::Explicit {
            eps_p,
            eps_f,
            eps_g,
            eps_r,
        } => BossGrids::explicit(eps_p, eps_f, eps_g.unwrap_or(eps_f), eps_r),
    }
}

pub fn goss_grids(inst: &Instance, choice: GridChoice) -> Result<GossGrids> {
    match choice {
        GridChoice::Recipe(eps) => GossGrids::recipe(eps, inst),
        GridChoice::Explicit { eps_g: Some(_), .. } => Err(OssError::InvalidArgument(
            "eps_g applies to boolean instances only".into(),
        )),
        GridChoice::Explicit {
            eps_p, eps_f, eps_r, ..
        } => {
            let range = inst
                .reward_range()
                .ok_or_else(|| OssError::InvalidArgument("gaussian instance without reward range".into()))?;
            GossGrids::explicit(eps_p, eps_f, eps_r, range)
        }
    }
}

/// Solves `inst` with the variant matching its kind.
pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<Solution> {
    let mut sol = with_threads(opts.threads, || match inst.kind() {
        InstanceKind::Boolean => boss::solve(inst, &boss_grids(inst, opts.grids)?),
        InstanceKind::Gaussian => goss::solve(inst, &goss_grids(inst, opts.grids)?),
    })??;
    if opts.exact_eval {
        sol.exact_reward = Some(oracle::eval_exact(inst, &sol.plan)?.exact_reward);
    }
    if opts.no_timing {
        sol.solver_millis = 0;
    }
    Ok(sol)
}

/// Brute-force optimum reported as a solution document.
pub fn exact(inst: &Instance, threads: Option<usize>) -> Result<Solution> {
    let best = with_threads(threads, || oracle::brute_force_optimum(inst))??;
    Ok(Solution {
        kind: inst.kind(),
        plan: best.plan,
        time_used: best.time,
        predicted_reward: best.exact_reward,
        exact_reward: Some(best.exact_reward),
        delta_u_bound: 0.0,
        grids_used: crate::solution::GridsUsed {
            eps_p: 0.0,
            eps_f: 0.0,
            eps_g: None,
            eps_r: 0.0,
        },
        root_table_cells: 0,
        largest_table: 0,
        table_capacity: 0,
        solver_millis: 0,
    })
}

/// One row of an accuracy sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub epsilon: f64,
    pub predicted_reward: f64,
    pub exact_reward: f64,
    pub optimum: f64,
    pub gap: f64,
    pub bound: f64,
    pub table_cells_root: usize,
    pub solver_millis: u64,
}

impl CompareRow {
    pub const HEADER: &'static str =
        "epsilon,predicted_reward,exact_reward,optimum,gap,bound,table_cells_root,solver_millis";

    pub fn within_bound(&self) -> bool {
        self.gap <= self.bound + 1e-9
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.epsilon,
            self.predicted_reward,
            self.exact_reward,
            self.optimum,
            self.gap,
            self.bound,
            self.table_cells_root,
            self.solver_millis
        )
    }
}

/// Solves `inst` once per accuracy target and compares each result with the
/// brute-force optimum.
pub fn compare(inst: &Instance, epsilons: &[f64], threads: Option<usize>, no_timing: bool) -> Result<Vec<CompareRow>> {
    let optimum = with_threads(threads, || oracle::brute_force_optimum(inst))??.exact_reward;
    epsilons
        .iter()
        .map(|&epsilon| {
            let opts = SolveOptions {
                grids: GridChoice::Recipe(epsilon),
                exact_eval: true,
                threads,
                no_timing,
            };
            let sol = solve(inst, &opts)?;
            let exact_reward = sol.exact_reward.expect("exact evaluation requested");
            Ok(CompareRow {
                epsilon,
                predicted_reward: sol.predicted_reward,
                exact_reward,
                optimum,
                gap: optimum - exact_reward,
                bound: sol.delta_u_bound,
                table_cells_root: sol.root_table_cells,
                solver_millis: sol.solver_millis,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::GenParams;

    #[test]
    fn thread_count_does_not_change_output() {
        let inst = GenParams::boolean(7, 2, 9).generate().unwrap();
        let run = |threads| {
            let opts = SolveOptions {
                threads: Some(threads),
                no_timing: true,
                ..SolveOptions::recipe(0.2)
            };
            solve(&inst, &opts).unwrap().to_json()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn eps_g_rejected_for_gaussian() {
        let inst = GenParams::gaussian(4, 2, 1).generate().unwrap();
        let choice = GridChoice::Explicit {
            eps_p: 0.1,
            eps_f: 0.1,
            eps_g: Some(0.1),
            eps_r: 0.1,
        };
        assert!(matches!(goss_grids(&inst, choice), Err(OssError::InvalidArgument(_))));
    }

    #[test]
    fn zero_threads_rejected() {
        assert!(with_threads(Some(0), || ()).is_err());
    }

    #[test]
    fn compare_rows_respect_bound() {
        let inst = GenParams::boolean(5, 2, 4).generate().unwrap();
        let rows = compare(&inst, &[0.2, 0.1], None, true).unwrap();
        assert_eq!(rows.len(), 2);
        for row in rows {
            assert!(row.gap >= -1e-12);
            assert!(row.within_bound(), "{row:?}");
        }
    }
}
