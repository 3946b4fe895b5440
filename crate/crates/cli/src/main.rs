use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use watchdog_core::analysis::{
    binary_entropy, expected_matched_count, inferred_combination_bound, relay_ball_fraction, AnalysisParams,
};
use watchdog_core::experiment::{render, run_experiment, ExperimentSpec, ExportFormat, SweepVar};
use watchdog_core::simnet::{
    collusion_scenarios, run_protocol, write_trials_csv, write_trials_json, BehaviorKind, NetworkConfig, ProtocolRun,
    ScenarioKind, TrialRecord, TwoHopConfig, TwoHopRunner,
};
use watchdog_core::SimRng;

#[derive(Parser)]
#[command(name = "watchdog", version, about = "Algebraic watchdog simulator for coded wireless relays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one paired two-hop trial and print both verdicts.
    TwoHop {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the trial record (format taken from --format).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
    },
    /// Sweep one parameter over paired trials and tabulate mean and variance of p*.
    Sweep {
        #[command(flatten)]
        net: NetArgs,
        /// p_adv, delta, p_s or m.
        #[arg(long)]
        sweep: SweepVar,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// One digest function per sweep value instead of one per trial.
        #[arg(long)]
        pin_hash: bool,
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the distributed watchdog on a network file.
    Protocol {
        /// Network description (TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        rounds: u64,
        /// Probability that a node checks its neighborhood in a round.
        #[arg(long, default_value_t = 1.0)]
        check_prob: f64,
        /// Overrides the threshold in the network file.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
        /// Per-check records; a summary is printed either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the expected matched-codeword count in closed form.
    Analyze {
        #[arg(long, default_value_t = 10)]
        n: u32,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        p_s: f64,
        #[arg(long, default_value_t = 0.1)]
        p_relay: f64,
        /// Minimum distance of every node's code.
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        /// Observing source, 1-based.
        #[arg(long, default_value_t = 1)]
        observer: usize,
    },
    /// Check detection coverage with and without colluding neighbors.
    Scenarios {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print the reports as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Clone, Copy)]
struct NetArgs {
    #[arg(long, default_value_t = 10)]
    n: u32,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    delta: u32,
    #[arg(long, default_value_t = 0.1)]
    p_s: f64,
    #[arg(long, default_value_t = 0.1)]
    p_relay: f64,
    #[arg(long, default_value_t = 0.1)]
    p_adv: f64,
    /// Flag the relay when p* <= threshold.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
}

impl NetArgs {
    fn config(self) -> TwoHopConfig {
        TwoHopConfig {
            n: self.n,
            m: self.m,
            delta: self.delta,
            p_s: self.p_s,
            p_relay: self.p_relay,
            p_adv: self.p_adv,
            threshold: self.threshold,
            hash: None,
        }
    }
}

fn write_records(records: &[TrialRecord], format: ExportFormat, path: &Path) -> Result<()> {
    match format {
        ExportFormat::Csv => write_trials_csv(records, path)?,
        ExportFormat::Json => write_trials_json(records, path)?,
    }
    Ok(())
}

fn two_hop(net: NetArgs, seed: u64, out: Option<PathBuf>, format: ExportFormat) -> Result<()> {
    let runner = TwoHopRunner::new(net.config())?;
    let record = runner.run(&SimRng::new(seed), 0)?;
    for c in &record.checks {
        let label = match c.target_truth {
            BehaviorKind::Honest => "honest relay",
            BehaviorKind::Adversarial => "adversarial relay",
        };
        println!(
            "{label:<18} p*={:.6e} matched={} flagged={}",
            c.verdict.p_star, c.verdict.matched_count, c.verdict.flagged
        );
    }
    if let Some(path) = out {
        write_records(&[record], format, &path)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    net: NetArgs,
    sweep: SweepVar,
    values: Vec<f64>,
    trials: u64,
    seed: u64,
    pin_hash: bool,
    format: ExportFormat,
    out: Option<PathBuf>,
) -> Result<()> {
    let spec = ExperimentSpec { sweep, values, base: net.config(), trials, seed, pin_hash };
    let rows = run_experiment(&spec)?;
    let text = render(&rows, format)?;
    match out {
        Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn protocol(
    config: &Path,
    rounds: u64,
    check_prob: f64,
    threshold: Option<f64>,
    seed: u64,
    format: ExportFormat,
    out: Option<PathBuf>,
) -> Result<()> {
    let net = NetworkConfig::load(config)?;
    let threshold = threshold.unwrap_or(net.threshold);
    if !(0.0..=1.0).contains(&threshold) {
        bail!("threshold {threshold} outside [0, 1]");
    }
    let run = ProtocolRun { rounds, check_prob, threshold, hash: net.hash };
    let records = run_protocol(&net.topology, &net.behaviors, &run, &SimRng::new(seed))?;

    let mut pairs: BTreeMap<(u32, u32), (usize, f64, usize)> = Default::default();
    for c in records.iter().flat_map(|r| &r.checks) {
        let e = pairs.entry((c.observer, c.target)).or_default();
        e.0 += 1;
        e.1 += c.verdict.p_star;
        e.2 += usize::from(c.verdict.flagged);
    }
    println!("observer target checks mean_p_star flagged");
    for ((u, v), (count, total, flagged)) in &pairs {
        println!("{u} {v} {count} {:.6e} {flagged}", total / *count as f64);
    }
    let skipped: usize = records.iter().map(|r| r.skipped.len()).sum();
    if skipped > 0 {
        println!("skipped checks (missing overhearing): {skipped}");
    }
    if let Some(path) = out {
        write_records(&records, format, &path)?;
    }
    Ok(())
}

fn analyze(n: u32, m: usize, delta: f64, p_s: f64, p_relay: f64, d: f64, observer: usize) -> Result<()> {
    // Row i holds the channels out of node i; the relay is the last node.
    let mut p = vec![vec![p_s; m + 1]; m + 1];
    p[m] = vec![p_relay; m + 1];
    let params = AnalysisParams::new(n, m, delta, vec![d; m + 1], p)?;
    let matched = expected_matched_count(&params, observer)?;
    let inferred = inferred_combination_bound(&params, observer)?;
    let relay = relay_ball_fraction(&params, observer)?;
    println!("H(p_s)                   = {:.6}", binary_entropy(p_s));
    println!("H(p_relay)               = {:.6}", binary_entropy(p_relay));
    println!("inferred combinations    = 2^{:.6} = {:.6e}", inferred.exponent, inferred.value);
    println!("relay ball fraction      = 2^{:.6} = {:.6e}", relay.exponent, relay.value);
    println!("expected matched count   = 2^{:.6} = {:.6e}", matched.exponent, matched.value);
    Ok(())
}

fn scenarios(seed: u64, json: bool) -> Result<()> {
    let reports = collusion_scenarios(&SimRng::new(seed))?;
    if json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
        return Ok(());
    }
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
    println!("scenario honest_checks covering_checks covered adversary_p_star honest_p_star separation_p");
    for r in &reports {
        let name = match r.kind {
            ScenarioKind::Healthy => "healthy",
            ScenarioKind::AllParentsByzantine => "all-parents-colluding",
            ScenarioKind::AllChildrenByzantine => "all-children-colluding",
        };
        println!(
            "{name} {} {} {} {} {} {}",
            r.honest_checks,
            r.covering_checks,
            r.covered(),
            opt(r.adversary_p_star),
            opt(r.honest_p_star),
            opt(r.separation_p_value)
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TwoHop { net, seed, out, format } => two_hop(net, seed, out, format),
        Command::Sweep { net, sweep: var, values, trials, seed, pin_hash, format, out } => {
            sweep(net, var, values, trials, seed, pin_hash, format, out)
        }
        Command::Protocol { config, rounds, check_prob, threshold, seed, format, out } => {
            protocol(&config, rounds, check_prob, threshold, seed, format, out)
        }
        Command::Analyze { n, m, delta, p_s, p_relay, d, observer } => analyze(n, m, delta, p_s, p_relay, d, observer),
        Command::Scenarios { seed, json } => scenarios(seed, json),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
