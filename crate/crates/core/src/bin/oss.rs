use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use oss_core::driver::{self, CompareRow, GridChoice, SolveOptions};
use oss_core::generate::GenParams;
use oss_core::model::{Instance, InstanceKind};
use oss_core::oracle;
use oss_core::plan::ObservationPlan;
use oss_core::solution::SolutionDoc;
use oss_core::{goss, OssError};

#[derive(Parser)]
#[command(
    name = "oss",
    version,
    about = "Budgeted observation selection on tree-shaped Bayesian networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Select observations with the grid solver.
    Solve(SolveArgs),
    /// Find the optimal plan by exhaustive enumeration.
    Exact(ExactArgs),
    /// Evaluate a fixed plan exactly.
    Eval(EvalArgs),
    /// Sweep accuracy targets and compare each result with the optimum.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Boolean,
    Gaussian,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "boolean")]
    kind: Kind,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    nodes: u32,
    /// Maximum children per node.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    branching: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    budget_fraction: f64,
    #[arg(long, default_value_t = 1)]
    max_obs: u32,
    /// Inclusive cost range as LO,HI.
    #[arg(long, default_value = "1,5")]
    costs: String,
    /// Independent hypotheses with exact tests.
    #[arg(long)]
    knapsack: bool,
    /// Upper limit on false-positive rates (boolean).
    #[arg(long, default_value_t = 0.0)]
    zeta_max: f64,
    /// Reward range as A,B (gaussian); derived from the instance if absent.
    #[arg(long)]
    reward_range: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    grids: GridArgs,
    /// Also evaluate the returned plan exactly.
    #[arg(long)]
    exact_eval: bool,
    #[command(flatten)]
    run: RunArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Accuracy target; grid steps follow from it.
    #[arg(long, conflicts_with_all = ["eps_p", "eps_f", "eps_g", "eps_r"])]
    epsilon: Option<f64>,
    #[arg(long, requires_all = ["eps_f", "eps_r"])]
    eps_p: Option<f64>,
    #[arg(long, requires_all = ["eps_p", "eps_r"])]
    eps_f: Option<f64>,
    #[arg(long, requires_all = ["eps_p", "eps_f", "eps_r"])]
    eps_g: Option<f64>,
    #[arg(long, requires_all = ["eps_p", "eps_f"])]
    eps_r: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Report solver_millis as 0 for reproducible output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct ExactArgs {
    instance: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    instance: PathBuf,
    /// Comma-separated node ids; repeating an id observes it again.
    #[arg(long, conflicts_with = "solution", allow_hyphen_values = true)]
    subset: Option<String>,
    /// Take the plan from a solution document.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    instance: PathBuf,
    #[arg(long, default_value = "0.2,0.1,0.05")]
    epsilon_list: String,
    #[command(flatten)]
    run: RunArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    /// Bad flags or arguments: exit 2.
    Usage(String),
    /// Bad input, guard or bound violation: exit 1.
    Input(String),
}

impl From<OssError> for Failure {
    fn from(e: OssError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(Instance::parse(&text)?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Input(e.to_string())),
    }
}

fn pair(text: &str, what: &str) -> Result<(String, String), Failure> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| usage(format!("{what} must be given as LO,HI")))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let kind = match args.kind {
        Kind::Boolean => InstanceKind::Boolean,
        Kind::Gaussian => InstanceKind::Gaussian,
    };
    let mut params = GenParams::new(kind, args.nodes as usize, args.branching as usize, args.seed);
    params.budget_fraction = args.budget_fraction;
    params.max_obs_per_node = args.max_obs;
    params.knapsack = args.knapsack;
    params.boolean.zeta_max = args.zeta_max;
    let (lo, hi) = pair(&args.costs, "--costs")?;
    params.cost_range = (lo.parse().map_err(usage)?, hi.parse().map_err(usage)?);
    if let Some(range) = &args.reward_range {
        if kind == InstanceKind::Boolean {
            return Err(usage("--reward-range applies to gaussian instances only"));
        }
        let (a, b) = pair(range, "--reward-range")?;
        params.gaussian.reward_range = Some((a.parse().map_err(usage)?, b.parse().map_err(usage)?));
    }
    let inst = params.generate().map_err(usage)?;
    if kind == InstanceKind::Gaussian {
        for warning in goss::reward_range_warnings(&inst) {
            eprintln!("warning: {warning}");
        }
    }
    emit(args.output.as_deref(), &inst.to_json())
}

fn grid_choice(args: &GridArgs, kind: InstanceKind) -> Result<GridChoice, Failure> {
    if let Some(eps) = args.epsilon {
        return Ok(GridChoice::Recipe(eps));
    }
    let (Some(eps_p), Some(eps_f), Some(eps_r)) = (args.eps_p, args.eps_f, args.eps_r) else {
        return Err(usage("give either --epsilon or --eps-p, --eps-f and --eps-r"));
    };
    if kind == InstanceKind::Gaussian && args.eps_g.is_some() {
        return Err(usage("--eps-g applies to boolean instances only"));
    }
    Ok(GridChoice::Explicit {
        eps_p,
        eps_f,
        eps_g: args.eps_g,
        eps_r,
    })
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let grids = grid_choice(&args.grids, inst.kind())?;
    // Reject bad grid steps as usage errors before any solving.
    match inst.kind() {
        InstanceKind::Boolean => driver::boss_grids(&inst, grids).map(|_| ()),
        InstanceKind::Gaussian => driver::goss_grids(&inst, grids).map(|_| ()),
    }
    .map_err(usage)?;
    let opts = SolveOptions {
        grids,
        exact_eval: args.exact_eval,
        threads: args.run.threads.map(|t| t as usize),
        no_timing: args.run.no_timing,
    };
    let sol = driver::solve(&inst, &opts)?;
    emit(args.output.as_deref(), &sol.to_json())
}

fn exact(args: ExactArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let sol = driver::exact(&inst, args.threads.map(|t| t as usize))?;
    emit(args.output.as_deref(), &sol.to_json())
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let plan = match (&args.subset, &args.solution) {
        (Some(subset), None) => ObservationPlan::parse_subset(subset).map_err(usage)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            SolutionDoc::parse(&text)?.plan()
        }
        _ => return Err(usage("give exactly one of --subset and --solution")),
    };
    plan.check_feasible(&inst)?;
    let result = oracle::eval_exact(&inst, &plan)?;
    emit(args.output.as_deref(), &result.to_json())
}

fn compare(args: CompareArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let epsilons = args
        .epsilon_list
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad epsilon `{}`", t.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for &eps in &epsilons {
        match inst.kind() {
            InstanceKind::Boolean => driver::boss_grids(&inst, GridChoice::Recipe(eps)).map(|_| ()),
            InstanceKind::Gaussian => driver::goss_grids(&inst, GridChoice::Recipe(eps)).map(|_| ()),
        }
        .map_err(usage)?;
    }
    let rows = driver::compare(
        &inst,
        &epsilons,
        args.run.threads.map(|t| t as usize),
        args.run.no_timing,
    )?;
    let mut csv = String::from(CompareRow::HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    emit(args.output.as_deref(), &csv)?;
    match rows.iter().find(|r| !r.within_bound()) {
        Some(r) => Err(Failure::Input(format!(
            "gap {} exceeds bound {} at epsilon {}",
            r.gap, r.bound, r.epsilon
        ))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Exact(a) => exact(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
