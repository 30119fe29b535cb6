use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde_json::json;

use fcavpp::bench::{
    load_instances, load_suite, run_benchmark, run_lp_comparison, summarize, summary_path,
    write_records, write_summary, LP_STATUS,
};
use fcavpp::bnc::{solve_bnc, BncConfig, BncStatus};
use fcavpp::generator::{generate_instance, generate_suite, GeneratorConfig, DEFAULT_ROOT_SEED};
use fcavpp::oracle::oracle_solve;
use fcavpp::{
    build_formulation, check_feasibility, validate_instance, BuildOptions, FormulationVariant,
    Instance, Solution,
};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NO_INCUMBENT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "fcavpp",
    version,
    about = "Exact solver for fuel-constrained multi-vehicle path planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one random instance.
    Gen {
        #[arg(long)]
        targets: usize,
        #[arg(long)]
        vehicles: usize,
        #[arg(long = "fuel-mult")]
        fuel_mult: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the 420-instance benchmark suite with its manifest.
    GenSuite {
        #[arg(long = "root-seed", default_value_t = DEFAULT_ROOT_SEED)]
        root_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance by branch-and-cut.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "f4")]
        formulation: FormulationVariant,
        /// Seconds; unlimited when omitted.
        #[arg(long = "time-limit")]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        gap: f64,
        #[arg(long = "node-limit")]
        node_limit: Option<usize>,
        /// Solution file, written when an incumbent exists.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON-lines log of node, bound, cut and incumbent events.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Root LP values of all four formulations (no connectivity rows).
    LpCompare {
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Branch-and-cut over a suite directory.
    Bench {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "f2,f4")]
        formulations: Vec<FormulationVariant>,
        #[arg(long = "time-limit")]
        time_limit: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a solution file against an instance.
    Check {
        instance: PathBuf,
        solution: PathBuf,
    },
    /// Exhaustive optimum of a tiny instance.
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn invalid(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        error: error.into(),
    }
}

fn internal(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INTERNAL,
        error: error.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn duration(secs: Option<f64>) -> Result<Option<Duration>, Failure> {
    match secs {
        None => Ok(None),
        Some(s) if s.is_finite() && s >= 0.0 => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(invalid(anyhow!(
            "time limit {s} must be a non-negative number"
        ))),
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let inst = Instance::load(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(invalid)?;
    let report = validate_instance(&inst);
    for w in &report.warnings {
        log::warn!("{:?} at {:?} by {}", w.kind, w.vertices, w.magnitude);
    }
    if report.has_structural_errors() {
        return Err(invalid(anyhow!(
            "{} is not a valid instance: {:?}",
            path.display(),
            report.violations
        )));
    }
    Ok(inst)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(internal)
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json value")
    );
}

fn gen(targets: usize, vehicles: usize, fuel_mult: f64, seed: u64, out: &Path) -> CmdResult {
    let cfg = GeneratorConfig {
        num_targets: targets,
        num_vehicles: vehicles,
        fuel_multiplier: fuel_mult,
        seed,
        ..GeneratorConfig::default()
    };
    let inst = generate_instance(&cfg).map_err(invalid)?;
    inst.save(out).map_err(internal)?;
    Ok(0)
}

fn gen_suite(root_seed: u64, out: &Path) -> CmdResult {
    let manifest = generate_suite(out, root_seed).map_err(internal)?;
    println!(
        "{} instances written to {}",
        manifest.entries.len(),
        out.display()
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    file: &Path,
    variant: FormulationVariant,
    time_limit: Option<f64>,
    gap: f64,
    node_limit: Option<usize>,
    out: Option<&Path>,
    events: Option<&Path>,
) -> CmdResult {
    if !(gap.is_finite() && gap >= 0.0) {
        return Err(invalid(anyhow!("gap {gap} must be non-negative")));
    }
    let inst = load_instance(file)?;
    let form = build_formulation(&inst, variant, &BuildOptions::default()).map_err(invalid)?;
    let cfg = BncConfig {
        time_limit: duration(time_limit)?,
        gap_tol: gap,
        node_limit,
        record_events: events.is_some(),
        ..BncConfig::default()
    };
    let res = solve_bnc(&form, &inst, &cfg).map_err(internal)?;
    if let Some(path) = events {
        let file = fs::File::create(path)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(internal)?;
        res.write_events(std::io::BufWriter::new(file))
            .map_err(internal)?;
    }
    if let (Some(path), Some(sol)) = (out, &res.solution) {
        write_text(path, &sol.to_json().map_err(internal)?)?;
    }
    let finite = |v: f64| v.is_finite().then_some(v);
    print_json(&json!({
        "formulation": variant.to_string(),
        "status": res.status.to_string(),
        "incumbent": res.incumbent_cost,
        "bound": finite(res.best_bound),
        "gap": finite(res.gap),
        "root_bound": res.root_bound,
        "nodes": res.nodes,
        "cuts": res.cuts_added,
        "lp_iterations": res.lp_iterations,
        "wall_time": res.wall_time.as_secs_f64(),
        "routes": res.solution.as_ref().map(|s| s.routes.clone()),
    }));
    Ok(match (res.status, res.incumbent_cost) {
        (BncStatus::Infeasible, _) => EXIT_INFEASIBLE,
        (BncStatus::TimeLimit | BncStatus::NodeLimit, None) => EXIT_NO_INCUMBENT,
        _ => 0,
    })
}

fn lp_compare(path: &Path, out: &Path, jobs: Option<usize>) -> CmdResult {
    let instances = load_instances(path).map_err(invalid)?;
    let records = run_lp_comparison(&instances, jobs);
    write_records(out, &records).map_err(internal)?;
    let summary = summarize(&records);
    write_summary(summary_path(out), &summary).map_err(internal)?;
    let failed = records.iter().filter(|r| r.status != LP_STATUS).count();
    eprintln!(
        "{} rows written to {} (LP values exclude connectivity rows; {failed} failed)",
        records.len(),
        out.display()
    );
    Ok(0)
}

fn bench(
    dir: &Path,
    variants: &[FormulationVariant],
    time_limit: Option<f64>,
    jobs: Option<usize>,
    out: &Path,
) -> CmdResult {
    let instances = load_suite(dir).map_err(invalid)?;
    let records = run_benchmark(&instances, variants, duration(time_limit)?, jobs);
    write_records(out, &records).map_err(internal)?;
    let summary = summarize(&records);
    write_summary(summary_path(out), &summary).map_err(internal)?;
    let solved = records.iter().filter(|r| r.is_optimal()).count();
    eprintln!(
        "{solved}/{} runs solved, written to {}",
        records.len(),
        out.display()
    );
    Ok(0)
}

fn check(instance: &Path, solution: &Path) -> CmdResult {
    let inst = load_instance(instance)?;
    let text = fs::read_to_string(solution)
        .with_context(|| format!("reading {}", solution.display()))
        .map_err(invalid)?;
    let sol = Solution::from_json(&text, &inst).map_err(invalid)?;
    let report = check_feasibility(&sol, &inst);
    print_json(&serde_json::to_value(&report).map_err(internal)?);
    Ok(if report.pass { 0 } else { EXIT_INFEASIBLE })
}

fn oracle(instance: &Path, out: Option<&Path>) -> CmdResult {
    let inst = load_instance(instance)?;
    let sol = oracle_solve(&inst).map_err(invalid)?;
    if let (Some(path), Some(sol)) = (out, &sol) {
        write_text(path, &sol.to_json().map_err(internal)?)?;
    }
    print_json(&json!({
        "status": if sol.is_some() { "optimal" } else { "infeasible" },
        "cost": sol.as_ref().map(|s| s.total_cost),
        "routes": sol.as_ref().map(|s| s.routes.clone()),
    }));
    Ok(if sol.is_some() { 0 } else { EXIT_INFEASIBLE })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen {
            targets,
            vehicles,
            fuel_mult,
            seed,
            out,
        } => gen(*targets, *vehicles, *fuel_mult, *seed, out),
        Command::GenSuite { root_seed, out } => gen_suite(*root_seed, out),
        Command::Solve {
            file,
            formulation,
            time_limit,
            gap,
            node_limit,
            out,
            events,
        } => solve(
            file,
            *formulation,
            *time_limit,
            *gap,
            *node_limit,
            out.as_deref(),
            events.as_deref(),
        ),
        Command::LpCompare { path, out, jobs } => lp_compare(path, out, *jobs),
        Command::Bench {
            dir,
            formulations,
            time_limit,
            jobs,
            out,
        } => bench(dir, formulations, *time_limit, *jobs, out),
        Command::Check { instance, solution } => check(instance, solution),
        Command::Oracle { instance, out } => oracle(instance, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
