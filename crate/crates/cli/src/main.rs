use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use stochastic_probing::bounds::{self, RatioTable};
use stochastic_probing::exact::{adaptive_opt, adaptive_opt_packing, strategy_tree, TREE_EDGE_CAP};
use stochastic_probing::harness::{
    monte_carlo, run_experiment, ExperimentConfig, ExperimentReport, Mode,
};
use stochastic_probing::instance::{
    generate_random_matching, generate_random_online, generate_random_packing, load_instance,
    AnyInstance, MatchingGenSpec, OnlineGenSpec, PackingGenSpec, Schema,
};
use stochastic_probing::online::{expected_graph, online_policy_run};
use stochastic_probing::policy::PolicyKind;
use stochastic_probing::relax::{
    solve_matching_lp, solve_multiround_lp, solve_online_lp, solve_packing_lp,
};
use stochastic_probing::{Error, Rational};

#[derive(Parser)]
#[command(
    name = "stochprobe",
    version,
    about = "Stochastic probing: LP bounds, policies and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Solve the LP relaxation of an instance.
    Lp(InstanceArgs),
    /// Compute the optimal adaptive value of a small instance.
    Oracle(OracleArgs),
    /// Run an experiment config.
    Run(RunArgs),
    /// Simulate the online offer policy.
    Online(OnlineArgs),
    /// Print every approximation constant.
    Bounds(OutArgs),
    /// Render a saved report as CSV.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Matching,
    Online,
    Packing,
    Multiround,
}

impl From<SchemaArg> for Schema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Matching => Schema::Matching,
            SchemaArg::Online => Schema::Online,
            SchemaArg::Packing => Schema::Packing,
            SchemaArg::Multiround => Schema::Multiround,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ExactWhenFeasible,
    MonteCarlo,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ExactWhenFeasible => Mode::ExactWhenFeasible,
            ModeArg::MonteCarlo => Mode::MonteCarlo,
        }
    }
}

#[derive(Args)]
struct OutArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "matching")]
    schema: SchemaArg,
    /// Generator parameters as JSON; built-in defaults otherwise.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "matching")]
    schema: SchemaArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Include the optimal decision tree (matching instances with few edges).
    #[arg(long)]
    dump: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Restrict the run to these policies.
    #[arg(long)]
    policy: Vec<String>,
    /// Override alpha for every policy.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the hybrid cutoff.
    #[arg(long)]
    pc: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OnlineArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Offer scaling; defaults to 2 / (sqrt 3 - 1).
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

fn emit(out: &OutArgs, text: &str) -> Result<(), Error> {
    match &out.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json(out: &OutArgs, value: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

fn read_spec<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Error> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn load(args: &InstanceArgs) -> Result<AnyInstance, Error> {
    load_instance(File::open(&args.input)?, args.schema.into())
}

fn gen(args: &GenArgs) -> Result<(), Error> {
    let spec = args.input.as_deref();
    let inst = match args.schema {
        SchemaArg::Matching => AnyInstance::Matching(generate_random_matching(
            &read_spec::<MatchingGenSpec>(spec)?,
            args.seed,
        )?),
        SchemaArg::Online => AnyInstance::Online(generate_random_online(
            &read_spec::<OnlineGenSpec>(spec)?,
            args.seed,
        )?),
        SchemaArg::Packing => AnyInstance::Packing(generate_random_packing(
            &read_spec::<PackingGenSpec>(spec)?,
            args.seed,
        )?),
        SchemaArg::Multiround => {
            return Err(Error::Validation(
                "no generator for multiround instances".into(),
            ));
        }
    };
    emit(&args.out, &inst.to_json())
}

fn lp(args: &InstanceArgs) -> Result<(), Error> {
    let value = match load(args)? {
        AnyInstance::Matching(inst) => {
            let sol = solve_matching_lp(&inst)?;
            json!({ "lp_value": sol.objective, "y": sol.y, "x": sol.x })
        }
        AnyInstance::Online(inst) => {
            let sol = solve_online_lp(&expected_graph(&inst)?)?;
            json!({ "lp_value": sol.objective, "y": sol.y })
        }
        AnyInstance::Packing(inst) => {
            let sol = solve_packing_lp(&inst)?;
            json!({ "lp_value": sol.objective, "y": sol.y })
        }
        AnyInstance::MultiRound(inst) => {
            let sol = solve_multiround_lp(&inst.graph, &inst.config)?;
            json!({ "lp_value": sol.objective, "y": sol.y, "decomposition": sol.decomposition.rounds })
        }
    };
    emit_json(&args.out, &value)
}

fn oracle(args: &OracleArgs) -> Result<(), Error> {
    let value = match load(&args.instance)? {
        AnyInstance::Matching(inst) => {
            let sol = adaptive_opt::<Rational>(&inst)?;
            let float = adaptive_opt::<f64>(&inst)?;
            let mut v = json!({
                "adaptive_opt": float.value,
                "exact": sol.value.to_string(),
                "states": sol.n_states(),
            });
            if args.dump {
                if inst.n_edges() > TREE_EDGE_CAP {
                    return Err(Error::Budget(format!(
                        "strategy tree limited to {TREE_EDGE_CAP} edges (instance has {})",
                        inst.n_edges()
                    )));
                }
                v["strategy"] = strategy_tree(&inst, &float)?;
            }
            v
        }
        AnyInstance::Packing(inst) => {
            let exact = adaptive_opt_packing::<Rational>(&inst)?;
            json!({ "adaptive_opt": adaptive_opt_packing::<f64>(&inst)?, "exact": exact.to_string() })
        }
        _ => {
            return Err(Error::Validation(
                "oracle supports matching and packing instances".into(),
            ))
        }
    };
    emit_json(&args.instance.out, &value)
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode.into();
    }
    if !args.policy.is_empty() {
        let keep = args
            .policy
            .iter()
            .map(|p| PolicyKind::parse(p))
            .collect::<Result<Vec<_>, _>>()?;
        cfg.policies.retain(|e| keep.contains(&e.policy));
    }
    for entry in &mut cfg.policies {
        if args.alpha.is_some() {
            entry.alpha = args.alpha;
        }
        if args.pc.is_some() {
            entry.cutoff = args.pc;
        }
    }
    let report = run_experiment(&cfg)?;
    let text = report.to_json();
    match (&args.out.out, &cfg.output) {
        (None, Some(path)) => fs::write(path, &text)?,
        _ => emit(&args.out, &text)?,
    }
    Ok(())
}

fn online(args: &OnlineArgs) -> Result<(), Error> {
    let AnyInstance::Online(inst) = load_instance(File::open(&args.input)?, Schema::Online)? else {
        unreachable!("online schema yields an online instance")
    };
    let alpha = args.alpha.unwrap_or_else(bounds::alpha_online);
    let graph = expected_graph(&inst)?;
    let lp = solve_online_lp(&graph)?;
    let (mean, std_error) = monte_carlo(args.seed, "online", args.trials, |c| {
        Ok(online_policy_run(&graph, &lp, alpha, c)?.revenue)
    })?;
    emit_json(
        &args.out,
        &json!({
            "lp_value": lp.objective,
            "alpha": alpha,
            "mean_revenue": mean,
            "std_error": std_error,
            "trials": args.trials,
            "ratio": if mean > 0.0 { lp.objective / mean } else { f64::INFINITY },
        }),
    )
}

fn report(args: &ReportArgs) -> Result<(), Error> {
    let report = ExperimentReport::from_json(&fs::read_to_string(&args.input)?)?;
    emit(&args.out, &report.to_csv())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::Validation(_) | Error::Io(_) => 2,
        Error::Numerical(_) | Error::Budget(_) => 3,
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn cli_main(argv: impl IntoIterator<Item = OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            return fail("usage", first, 1);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Lp(a) => lp(a),
        Command::Oracle(a) => oracle(a),
        Command::Run(a) => run(a),
        Command::Online(a) => online(a),
        Command::Bounds(a) => serde_json::to_value(RatioTable::compute())
            .map_err(Error::from)
            .and_then(|v| emit_json(a, &v)),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), exit_code(&e)),
    }
}

fn main() -> ExitCode {
    cli_main(std::env::args_os())
}
