//! Acceptance gate: runs every criterion and prints one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oss_core::boss;
use oss_core::driver::{self, GridChoice, SolveOptions};
use oss_core::generate::GenParams;
use oss_core::goss::{self, EdgeScaling};
use oss_core::model::{BooleanParams, Instance, InstanceKind, Node, NodeId, NodeParams};
use oss_core::oracle;
use oss_core::plan::ObservationPlan;
use oss_core::profile::{equivalent, lerp, logbar, precision_join, CondPerf, GridSpec, ProfileTable};

struct Outcome {
    failures: Vec<String>,
    checks: usize,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            checks: 0,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

struct Gate {
    all_passed: bool,
}

impl Gate {
    fn run(&mut self, number: u32, title: &str, limit: Duration, body: impl FnOnce() -> Outcome) {
        let started = Instant::now();
        let mut out = body();
        let elapsed = started.elapsed();
        if elapsed > limit {
            out.failures.push(format!("took {elapsed:.1?}, limit {limit:?}"));
        }
        let passed = out.failures.is_empty();
        self.all_passed &= passed;
        let mut line = format!(
            "{} criterion {number:>2}: {title} ({} checks, {elapsed:.2?})",
            if passed { "PASS" } else { "FAIL" },
            out.checks
        );
        for note in &out.notes {
            line.push_str(&format!("; {note}"));
        }
        println!("{line}");
        for f in out.failures.iter().take(10) {
            println!("      {f}");
        }
        if out.failures.len() > 10 {
            println!("      ... and {} more", out.failures.len() - 10);
        }
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_plan(inst: &Instance, rng: &mut ChaCha8Rng) -> ObservationPlan {
    ObservationPlan::from_counts(
        (0..inst.len())
            .map(NodeId::from_index)
            .map(|id| (id, rng.gen_range(0..=inst.max_obs(id))))
            .filter(|&(_, m)| m > 0),
    )
}

fn boolean_params(rng: &mut ChaCha8Rng, n: usize, zeta_max: f64) -> GenParams {
    let mut p = GenParams::boolean(n, rng.gen_range(1..=3), rng.gen());
    p.max_obs_per_node = if n <= 7 { rng.gen_range(1..=2) } else { 1 };
    p.hypothesis_prob = rng.gen_range(0.4..=1.0);
    p.measurable_prob = rng.gen_range(0.4..=0.9);
    p.budget_fraction = rng.gen_range(0.2..=0.8);
    p.boolean.zeta_max = zeta_max;
    p
}

fn gaussian_params(rng: &mut ChaCha8Rng, n: usize) -> GenParams {
    let mut p = GenParams::gaussian(n, rng.gen_range(1..=3), rng.gen());
    p.max_obs_per_node = rng.gen_range(1..=2);
    p.hypothesis_prob = rng.gen_range(0.3..=1.0);
    p.measurable_prob = rng.gen_range(0.3..=0.8);
    p.budget_fraction = rng.gen_range(0.2..=0.8);
    p
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let t = 1e-12;
    o.check(close(lerp(0.3, 0.9, 1.0), 0.3, t), || "lerp(0.3, 0.9, 1) != 0.3".into());
    o.check(close(lerp(0.3, 0.9, 0.0), 0.9, t), || "lerp(0.3, 0.9, 0) != 0.9".into());
    o.check(close(lerp(0.2, 0.8, 0.5), 0.5, t), || {
        "lerp(0.2, 0.8, 0.5) != 0.5".into()
    });
    o.check(precision_join(0.0, 0.0) == 0.0, || "J(0, 0) != 0".into());
    o.check(
        precision_join(5.0, 0.0) == 0.0 && precision_join(0.0, 5.0) == 0.0,
        || "J(5, 0) != 0".into(),
    );
    o.check(close(precision_join(3.0, 6.0), 2.0, t), || "J(3, 6) != 2".into());

    let g = GridSpec::new(0.25).unwrap();
    o.check(g.d() == 4, || format!("d for eps 0.25 is {}", g.d()));
    o.check(g.discretize(0.3).unwrap() == 1 && close(g.snap(0.3), 0.375, t), || {
        "discretize(0.3)".into()
    });
    o.check(g.discretize(1.0).unwrap() == 3 && close(g.snap(1.0), 0.875, t), || {
        "discretize(1.0)".into()
    });
    o.check(g.discretize(0.0).unwrap() == 0 && close(g.snap(0.0), 0.125, t), || {
        "discretize(0.0)".into()
    });
    o.check(equivalent(&g, 0.7, 0.7), || "0.7 !~ 0.7".into());
    o.check(equivalent(&g, 0.26, 0.49), || "0.26 ~ 0.49".into());
    o.check(!equivalent(&g, 0.24, 0.26), || "0.24 !~ 0.26".into());
    o.check(g.discretize(f64::NAN).is_err(), || "NaN accepted".into());

    o.check(close(logbar(1.0, 100.0, 10.0), 0.5, t), || {
        "logbar(1, 100, 10) != 0.5".into()
    });
    o.check(logbar(1.0, 100.0, 0.5) == 0.0, || {
        "logbar below range not clamped".into()
    });
    o.check(logbar(1.0, 100.0, 1000.0) == 1.0, || {
        "logbar above range not clamped".into()
    });
    o.check(
        logbar(1.0, 100.0, 1.0) == 0.0 && logbar(1.0, 100.0, 100.0) == 1.0,
        || "logbar endpoints".into(),
    );
    let lg = GridSpec::log(0.5, 1.0, 100.0).unwrap();
    o.check(
        lg.discretize(10.0).unwrap() == 1 && close(lg.snap(10.0), 100f64.powf(0.75), 1e-9),
        || "log grid discretize(10)".into(),
    );
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB055);
    for k in 0..200 {
        let n = rng.gen_range(2..=8);
        let inst = boolean_params(&mut rng, n, 0.0).generate().unwrap();
        let plan = random_plan(&inst, &mut rng);
        let trace = boss::evaluate_plan(&inst, &plan);
        let root = trace.root();

        // Pr(all tests negative | X₁ = x) from the oracle, by pinning the root.
        let pinned = |x: f64| {
            let mut nodes = inst.nodes().to_vec();
            nodes[0].params = NodeParams::Boolean(BooleanParams {
                alpha: x,
                beta: x,
                ..*nodes[0].boolean()
            });
            let fixed = Instance::new(
                InstanceKind::Boolean,
                nodes,
                inst.budget(),
                inst.max_obs_per_node(),
                Some(0.0),
                None,
            )
            .unwrap();
            oracle::boss_outcomes(&fixed, &plan).unwrap().all_negative
        };
        let (f, g) = (pinned(1.0), pinned(0.0));
        let exact = oracle::boss_eval_exact(&inst, &plan).unwrap().exact_reward;
        o.check(close(root.f, f, 1e-9), || {
            format!("instance {k}: f {} vs oracle {f}", root.f)
        });
        o.check(close(root.g, g, 1e-9), || {
            format!("instance {k}: g {} vs oracle {g}", root.g)
        });
        o.check(close(trace.expected_reward(), exact, 1e-9), || {
            format!("instance {k}: reward {} vs oracle {exact}", trace.expected_reward())
        });
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6055);
    let mut inverted_disagrees = 0;
    for k in 0..200 {
        let n = rng.gen_range(2..=8);
        let inst = gaussian_params(&mut rng, n).generate().unwrap();
        let plan = random_plan(&inst, &mut rng);
        let trace = goss::evaluate_plan(&inst, &plan, EdgeScaling::Exact);
        let exact = oracle::goss_posterior_precisions(&inst, &plan).unwrap();
        for node in inst.nodes().iter().filter(|n| n.is_hypothesis) {
            let (got, want) = (trace.posterior(node.id), exact[node.id.index()]);
            o.check((got - want).abs() <= 1e-9 * want.abs(), || {
                format!("instance {k}, node {}: precision {got} vs oracle {want}", node.id)
            });
        }
        let reward = oracle::goss_eval_exact(&inst, &plan).unwrap().exact_reward;
        o.check(close(trace.reward(), reward, 1e-9), || {
            format!("instance {k}: reward {} vs {reward}", trace.reward())
        });

        let inverted = goss::evaluate_plan(&inst, &plan, EdgeScaling::Inverted);
        if inst
            .nodes()
            .iter()
            .any(|n| (inverted.posterior(n.id) - exact[n.id.index()]).abs() > 1e-9 * exact[n.id.index()])
        {
            inverted_disagrees += 1;
        }
    }
    o.notes.push(format!(
        "inverted edge scaling disagrees with the oracle on {inverted_disagrees}/200"
    ));
    o
}

struct BoundRun {
    bound_failures: Vec<String>,
    checks: usize,
    table_checks: usize,
    table_violations: Vec<String>,
    determinism_checks: usize,
    determinism_violations: Vec<String>,
    feasibility_checks: usize,
    feasibility_violations: Vec<String>,
    worst_slack: f64,
}

impl BoundRun {
    fn new() -> Self {
        BoundRun {
            bound_failures: Vec::new(),
            checks: 0,
            table_checks: 0,
            table_violations: Vec::new(),
            determinism_checks: 0,
            determinism_violations: Vec::new(),
            feasibility_checks: 0,
            feasibility_violations: Vec::new(),
            worst_slack: f64::INFINITY,
        }
    }

    /// Solves with 1 and 4 threads, then checks the gap against the
    /// brute-force optimum, table sizes and feasibility. `cap` is an
    /// additional upper limit on the gap.
    fn run(&mut self, label: &str, inst: &Instance, epsilon: f64, optimum: f64, cap: f64) {
        let opts = |threads| SolveOptions {
            grids: GridChoice::Recipe(epsilon),
            exact_eval: true,
            threads: Some(threads),
            no_timing: true,
        };
        let one = driver::solve(inst, &opts(1)).unwrap();
        let four = driver::solve(inst, &opts(4)).unwrap();

        self.determinism_checks += 1;
        if one.to_json() != four.to_json() {
            self.determinism_violations
                .push(format!("{label} eps {epsilon}: 1 vs 4 threads differ"));
        }

        self.table_checks += 1;
        if one.largest_table as u128 > one.table_capacity {
            self.table_violations.push(format!(
                "{label} eps {epsilon}: table of {} entries exceeds cap {}",
                one.largest_table, one.table_capacity
            ));
        }

        self.feasibility_checks += 1;
        if one.time_used > inst.budget() || one.plan.check_feasible(inst).is_err() {
            self.feasibility_violations.push(format!(
                "{label} eps {epsilon}: time {} over budget {}",
                one.time_used,
                inst.budget()
            ));
        }

        let exact = one.exact_reward.unwrap();
        let gap = optimum - exact;
        self.checks += 1;
        self.worst_slack = self.worst_slack.min(one.delta_u_bound.min(cap) - gap);
        if gap > one.delta_u_bound + 1e-9 || gap > cap + 1e-9 {
            self.bound_failures.push(format!(
                "{label} eps {epsilon}: gap {gap} exceeds bound {} / cap {cap}",
                one.delta_u_bound
            ));
        }
    }
}

fn bound_runs() -> (BoundRun, BoundRun) {
    let epsilons = [0.2, 0.1, 0.05];

    let mut boolean = BoundRun::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7402);
    for k in 0..130 {
        let zeta_max = if k < 100 { 0.0 } else { 0.01 };
        let n = rng.gen_range(4..=10);
        let inst = boolean_params(&mut rng, n, zeta_max).generate().unwrap();
        let optimum = oracle::brute_force_optimum(&inst).unwrap().exact_reward;
        let extra = inst.len() as f64 * inst.zeta_max();
        for eps in epsilons {
            boolean.run(&format!("boolean #{k}"), &inst, eps, optimum, eps + extra);
        }
    }

    let mut gaussian = BoundRun::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7404);
    for k in 0..100 {
        let n = rng.gen_range(4..=10);
        let inst = gaussian_params(&mut rng, n).generate().unwrap();
        let (a, b) = inst.reward_range().unwrap();
        let ext = goss::precision_extremes(&inst);
        let lowest = ext
            .min_nonzero_evidence
            .map_or(ext.min_external, |e| e.min(ext.min_external));
        gaussian.checks += 1;
        if !(a <= lowest && ext.max <= b) {
            gaussian.bound_failures.push(format!(
                "gaussian #{k}: precisions [{lowest}, {}] outside [{a}, {b}]",
                ext.max
            ));
            continue;
        }
        let optimum = oracle::brute_force_optimum(&inst).unwrap().exact_reward;
        for eps in epsilons {
            gaussian.run(&format!("gaussian #{k}"), &inst, eps, optimum, eps);
        }
    }
    (boolean, gaussian)
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9);
    let grids = [GridSpec::new(0.125).unwrap(), GridSpec::new(0.25).unwrap()];
    let budget = 10;
    let mut pool: Vec<CondPerf<2>> = Vec::new();
    for _ in 0..200 {
        let cell = [rng.gen_range(0..8), rng.gen_range(0..4)];
        let raw = [grids[0].representative(cell[0]), rng.gen_range(0.0..1.0)];
        let counts: Vec<(NodeId, u32)> = (1..=4u32).map(|i| (NodeId(i), rng.gen_range(0..=2))).collect();
        let plan = ObservationPlan::from_counts(counts.into_iter().filter(|&(_, m)| m > 0));
        pool.push(CondPerf {
            plan,
            time: rng.gen_range(0..=12),
            cell,
            raw,
        });
    }
    // Exact duplicates of time and plan at one coordinate.
    for i in 0..40 {
        let mut dup = pool[i].clone();
        dup.raw[1] = rng.gen_range(0.0..1.0);
        pool.push(dup);
    }
    let build = |items: &[CondPerf<2>]| {
        let mut t = ProfileTable::new(grids, budget);
        for cp in items {
            t.insert_purged(cp.clone());
        }
        t
    };
    let reference = build(&pool);
    for k in 0..1000 {
        pool.shuffle(&mut rng);
        let t = build(&pool);
        o.check(t == reference, || format!("permutation {k} produced a different table"));
    }
    o.notes
        .push(format!("{} entries from {} candidates", reference.len(), pool.len()));
    o
}

fn small_fixtures() -> Vec<Instance> {
    let mut out = Vec::new();
    for seed in 0..10u64 {
        let mut p = GenParams::boolean(3 + (seed as usize % 4), 1 + (seed as usize % 3), 1000 + seed);
        p.max_obs_per_node = 1 + (seed as u32 % 2);
        p.measurable_prob = 0.8;
        out.push(p.generate().unwrap());
    }
    for seed in 0..10u64 {
        let mut p = GenParams::gaussian(3 + (seed as usize % 4), 1 + (seed as usize % 3), 2000 + seed);
        p.max_obs_per_node = 1 + (seed as u32 % 2);
        out.push(p.generate().unwrap());
    }
    // Two independent hypotheses with exact tests, and a noisy chain.
    let exact = |id: u32, parent: Option<u32>, alpha: f64, beta: f64, theta: f64| Node {
        id: NodeId(id),
        parent: parent.map(NodeId),
        is_hypothesis: true,
        is_measurable: true,
        cost: 1,
        params: NodeParams::Boolean(BooleanParams {
            alpha,
            beta,
            theta,
            zeta: 0.0,
        }),
    };
    out[0] = Instance::new(
        InstanceKind::Boolean,
        vec![exact(1, None, 0.6, 0.6, 0.0), exact(2, Some(1), 0.5, 0.5, 0.0)],
        1,
        1,
        Some(0.0),
        None,
    )
    .unwrap();
    out[1] = Instance::new(
        InstanceKind::Boolean,
        vec![
            exact(1, None, 0.3, 0.3, 0.1),
            exact(2, Some(1), 0.9, 0.2, 0.2),
            exact(3, Some(2), 0.8, 0.1, 0.3),
        ],
        2,
        2,
        Some(0.0),
        None,
    )
    .unwrap();
    out
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let mut worst: f64 = 0.0;
    for (k, inst) in small_fixtures().iter().enumerate() {
        let optimum = oracle::brute_force_optimum(inst).unwrap().exact_reward;
        let opts = SolveOptions {
            exact_eval: true,
            ..SolveOptions::recipe(0.01)
        };
        let sol = driver::solve(inst, &opts).unwrap();
        let gap = optimum - sol.exact_reward.unwrap();
        worst = worst.max(gap);
        o.check(gap <= 0.01 + 1e-9, || {
            format!("fixture {k} ({}): gap {gap} at eps 0.01", inst.kind())
        });
    }
    o.notes.push(format!("largest gap {worst:.3e}"));
    o
}

fn main() -> ExitCode {
    let mut gate = Gate { all_passed: true };
    let secs = Duration::from_secs;

    gate.run(1, "grid and scalar operators", secs(1), criterion_1);
    gate.run(2, "boolean recursion matches joint enumeration", secs(30), criterion_2);
    gate.run(
        3,
        "gaussian recursion matches covariance conditioning",
        secs(30),
        criterion_3,
    );

    let started = Instant::now();
    let (boolean, gaussian) = bound_runs();
    let elapsed = started.elapsed();
    println!("      bound runs finished in {elapsed:.1?}");
    let bound = |run: &BoundRun| {
        let mut o = Outcome::new();
        o.checks = run.checks;
        o.failures = run.bound_failures.clone();
        o.notes.push(format!("smallest slack {:.3e}", run.worst_slack));
        o
    };
    gate.run(4, "boolean gap within bound (130 instances x 3 eps)", secs(300), || {
        bound(&boolean)
    });
    gate.run(
        5,
        "gaussian gap within bound (100 instances x 3 eps)",
        secs(300),
        || bound(&gaussian),
    );
    if elapsed > secs(600) {
        println!("FAIL bound runs exceeded 10 minutes");
        gate.all_passed = false;
    }
    let merge = |checks: usize, a: &[String], b: &[String], c2: usize| {
        let mut o = Outcome::new();
        o.checks = checks + c2;
        o.failures = a.iter().chain(b).cloned().collect();
        o
    };
    gate.run(6, "every table within the grid-size cap", secs(1), || {
        merge(
            boolean.table_checks,
            &boolean.table_violations,
            &gaussian.table_violations,
            gaussian.table_checks,
        )
    });
    gate.run(7, "1 and 4 threads give byte-identical solutions", secs(1), || {
        merge(
            boolean.determinism_checks,
            &boolean.determinism_violations,
            &gaussian.determinism_violations,
            gaussian.determinism_checks,
        )
    });
    gate.run(8, "every plan within budget", secs(1), || {
        merge(
            boolean.feasibility_checks,
            &boolean.feasibility_violations,
            &gaussian.feasibility_violations,
            gaussian.feasibility_checks,
        )
    });
    gate.run(9, "purge is insertion-order insensitive", secs(30), criterion_9);
    gate.run(
        10,
        "gap at eps 0.01 is at most 0.01 on small fixtures",
        secs(300),
        criterion_10,
    );

    if gate.all_passed {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
