//! Command-line front end: simulation CSV, the verification suite, exhaustive
//! search and a loopback publisher/subscriber demo.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use optsample_core::analytic::{self, Formulas, LemmaReport};
use optsample_core::bruteforce::{brute_force_optimal, exhaustive_subset_optimum};
use optsample_core::simulator::{self, emit_csv, run_policy, Scenario, Series};
use optsample_core::transport::{self, DisruptionSchedule, PublishConfig};
use optsample_core::{EvalFn, PolicyKind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "optsample",
    version,
    about = "Sampling buffer policies: simulation, verification and a transport demo"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-arrival profit of each policy as CSV.
    Simulate(SimulateArgs),
    /// Check the closed forms, the inequality grid and the brute-force sandwich.
    Verify(VerifyArgs),
    /// Exhaustive search for the best feasible (or unconstrained) sequence.
    BruteForce(BruteForceArgs),
    /// Publish a message stream to a subscriber through a policy buffer.
    DemoPub(DemoPubArgs),
    /// Accept one publisher and report what arrived.
    DemoSub(DemoSubArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Buffer capacity L.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub capacity: u64,
    /// Number of arrivals T_max.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub arrivals: u64,
    /// Comma-separated series: oracle, oracle-analytic, drop-oldest, <delta>-sample, optsample.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "oracle,drop-oldest,2-sample,optsample"
    )]
    pub policies: Vec<Series>,
    /// Evaluation function: ln, log2, sqrt or arctan.
    #[arg(long, default_value = "ln")]
    pub eval_fn: EvalFn,
    /// Dequeue one message after every second arrival.
    #[arg(long)]
    pub drain: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Capacities L to check.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16"
    )]
    pub capacities: Vec<u64>,
    /// Largest horizon T on the inequality grid.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
    pub t_max: u64,
    /// Largest horizon for the simulation-vs-closed-form comparison.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub sim_t_max: u64,
}

#[derive(Debug, Args)]
pub struct BruteForceArgs {
    /// Horizon T.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub arrivals: u64,
    /// Buffer capacity L.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub capacity: u64,
    #[arg(long, default_value = "ln")]
    pub eval_fn: EvalFn,
    /// Search all subsets instead of feasible online schedules.
    #[arg(long)]
    pub subset: bool,
}

#[derive(Debug, Args)]
pub struct DemoPubArgs {
    /// Subscriber address, host:port.
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value = "optsample")]
    pub policy: PolicyKind,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub capacity: u64,
    /// Synthetic message count (ignored with --source).
    #[arg(long, default_value_t = 200)]
    pub messages: u64,
    /// Newline-delimited payload file; one message per line.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Synthetic payload size in bytes.
    #[arg(long, default_value_t = 64)]
    pub payload_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outage windows in arrival counts, e.g. `41-160,300-320`.
    #[arg(long, default_value = "")]
    pub disrupt: DisruptionSchedule,
}

#[derive(Debug, Args)]
pub struct DemoSubArgs {
    /// Address to listen on, host:port.
    #[arg(long)]
    pub listen: String,
    /// Number of messages the publisher sent; the profit horizon.
    #[arg(long)]
    pub published: Option<u64>,
}

/// Runs a parsed command and maps the outcome to an exit code.
pub fn run(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Verify(args) => cmd_verify(&args, &Formulas::CLOSED_FORM, &mut io::stdout()),
        Command::BruteForce(args) => cmd_brute_force(&args),
        Command::DemoPub(args) => cmd_demo_pub(&args),
        Command::DemoSub(args) => cmd_demo_sub(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_FAILURE
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<u8> {
    let scenario = Scenario {
        capacity: args.capacity as usize,
        t_max: args.arrivals,
        eval_fn: args.eval_fn,
        series: args.policies.clone(),
        drain: args.drain,
    };
    let rows = match simulator::run(&scenario) {
        Ok(rows) => rows,
        Err(err @ optsample_core::Error::Domain { .. }) => {
            eprintln!("error: {err}");
            return Ok(EXIT_USAGE);
        }
        Err(err) => return Err(err.into()),
    };
    let bytes = match &args.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            emit_csv(&rows, io::BufWriter::new(file))?
        }
        None => emit_csv(&rows, io::stdout().lock())?,
    };
    info!("wrote {} rows ({bytes} bytes)", rows.len());
    Ok(EXIT_OK)
}

fn first_lemma_failure(report: &LemmaReport) -> Option<String> {
    report.violations.first().map(|v| {
        format!(
            "{} fails at T={} L={} (short by {:.3e})",
            v.lemma.describe(),
            v.horizon,
            v.capacity,
            v.excess
        )
    })
}

/// Runs every check against `formulas` and writes a report to `out`.
pub fn cmd_verify<W: Write>(
    args: &VerifyArgs,
    formulas: &Formulas,
    out: &mut W,
) -> anyhow::Result<u8> {
    if args.capacities.is_empty() || args.capacities.iter().any(|&l| l == 0 || l > args.t_max) {
        eprintln!("error: every capacity must satisfy 1 <= L <= t-max");
        return Ok(EXIT_USAGE);
    }
    let mut failures: Vec<String> = Vec::new();

    let report = analytic::verify_lemmas_with(formulas, &args.capacities, args.t_max)?;
    let c = analytic::ratio_constant();
    writeln!(
        out,
        "lemma grid: {} points, {} checks passed, {} failed",
        report.points,
        report.passed,
        report.failed()
    )?;
    writeln!(
        out,
        "worst ratio P_optsample/P_oracle = {:.6} at T={} L={} (C = {c:.6})",
        report.worst_ratio, report.worst_at.0, report.worst_at.1
    )?;
    failures.extend(first_lemma_failure(&report));

    let sim_t_max = args.sim_t_max.min(args.t_max);
    let mut compared = 0usize;
    let mut sim_failure = None;
    'outer: for &capacity in &args.capacities {
        if capacity > sim_t_max {
            continue;
        }
        let pairs = [
            (PolicyKind::DropOldest, formulas.ros),
            (PolicyKind::TWO_SAMPLE, formulas.two_sample),
            (PolicyKind::OptSample, formulas.optsample),
        ];
        for (kind, formula) in pairs {
            let run = run_policy(
                kind,
                capacity as usize,
                sim_t_max,
                EvalFn::NaturalLog,
                false,
            )?;
            for row in run.rows.iter().filter(|r| r.horizon >= capacity) {
                let expected = formula(row.horizon, capacity)?;
                compared += 1;
                if (row.profit - expected).abs() > 1e-9 {
                    sim_failure = Some(format!(
                        "{kind} at T={} L={capacity}: simulated {:.12} vs closed form {:.12}",
                        row.horizon, row.profit, expected
                    ));
                    break 'outer;
                }
            }
        }
    }
    writeln!(out, "simulation vs closed form: {compared} points compared")?;
    failures.extend(sim_failure);

    let mut sandwiches = 0;
    'sandwich: for capacity in 1..=3u64 {
        for horizon in capacity..=11 {
            let sim = run_policy(
                PolicyKind::OptSample,
                capacity as usize,
                horizon,
                EvalFn::NaturalLog,
                false,
            )?;
            let opt = sim.rows.last().map(|r| r.profit).unwrap_or_default();
            let brute = brute_force_optimal(horizon, capacity, EvalFn::NaturalLog)?.best_profit;
            let subset =
                exhaustive_subset_optimum(horizon, capacity, EvalFn::NaturalLog)?.best_profit;
            let oracle = (formulas.oracle)(horizon, capacity)?;
            sandwiches += 1;
            if !(opt <= brute + 1e-9 && brute <= subset + 1e-9 && subset <= oracle + 1e-9) {
                failures.push(format!(
                    "sandwich fails at T={horizon} L={capacity}: {opt} <= {brute} <= {subset} <= {oracle}"
                ));
                break 'sandwich;
            }
        }
    }
    writeln!(out, "brute-force sandwich: {sandwiches} instances")?;

    match failures.first() {
        None => {
            writeln!(out, "verify: all checks passed")?;
            Ok(EXIT_OK)
        }
        Some(first) => {
            writeln!(out, "verify: FAILED, first counterexample: {first}")?;
            Ok(EXIT_FAILURE)
        }
    }
}

pub fn cmd_brute_force(args: &BruteForceArgs) -> anyhow::Result<u8> {
    let result = if args.subset {
        exhaustive_subset_optimum(args.arrivals, args.capacity, args.eval_fn)
    } else {
        brute_force_optimal(args.arrivals, args.capacity, args.eval_fn)
    };
    let result = match result {
        Ok(r) => r,
        Err(
            err @ (optsample_core::Error::Domain { .. }
            | optsample_core::Error::InstanceTooLarge { .. }),
        ) => {
            eprintln!("error: {err}");
            return Ok(EXIT_USAGE);
        }
        Err(err) => return Err(err.into()),
    };
    println!(
        "best_profit={:.9} sequence={:?} nodes={}",
        result.best_profit,
        result.best_sequence.members(),
        result.nodes_explored
    );
    Ok(EXIT_OK)
}

fn file_source(path: &PathBuf) -> anyhow::Result<Vec<Vec<u8>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .map(|line| Ok(line?.into_bytes()))
        .collect()
}

pub fn cmd_demo_pub(args: &DemoPubArgs) -> anyhow::Result<u8> {
    let config = PublishConfig {
        policy: args.policy,
        capacity: args.capacity as usize,
        schedule: args.disrupt.clone(),
    };
    debug!("publishing with {config:?}");
    let summary = match &args.source {
        Some(path) => transport::publish_tcp(file_source(path)?, &config, args.endpoint.as_str()),
        None => transport::publish_tcp(
            transport::synthetic_source(args.messages, args.payload_size, args.seed),
            &config,
            args.endpoint.as_str(),
        ),
    };
    let summary = match summary {
        Ok(s) => s,
        Err(err) if err.is_retriable() => bail!("{err} (is demo-sub listening?)"),
        Err(err) => return Err(err.into()),
    };
    println!(
        "published={} dropped={} sent={}",
        summary.published, summary.dropped, summary.sent
    );
    Ok(EXIT_OK)
}

pub fn cmd_demo_sub(args: &DemoSubArgs) -> anyhow::Result<u8> {
    let subscriber = transport::Subscriber::bind(args.listen.as_str())
        .with_context(|| format!("binding {}", args.listen))?;
    eprintln!("listening on {}", subscriber.local_addr()?);
    let report = subscriber.accept(args.published)?;
    println!("{}", report.summary_line());
    Ok(EXIT_OK)
}
