use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use svlasov::config::{load_config_with_overrides, write_config, SimulationConfig};
use svlasov::diagnostics::{reference_laws, LawField};
use svlasov::experiments::{
    monte_carlo_summary, run_convergence_study, run_monte_carlo, run_timing_study, with_threads,
};
use svlasov::io::{convergence_text, monte_carlo_text, timing_text, write_snapshot, write_timeseries, TimeseriesMeta};
use svlasov::solver::{run_with, sample_increments, DomainMode};
use svlasov::{Error, Result};

#[derive(Parser)]
#[command(name = "svlasov", version, about = "Dynamic-domain semi-Lagrangian solver for stochastic Vlasov equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// override a configuration key, e.g. `--set initial.alpha=0.1`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one sample path, writing the time series and snapshots
    Run {
        #[command(flatten)]
        common: Common,
        /// sample index; the path seed is `seed + sample`
        #[arg(long, default_value_t = 0)]
        sample: u64,
        /// use the fixed-growth baseline instead of the adaptive domain
        #[arg(long)]
        nonadaptive: bool,
    },
    /// Strong convergence study over dyadic refinements
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: u32,
    },
    /// Wall-clock comparison of the adaptive and non-adaptive domains
    Timing {
        #[command(flatten)]
        common: Common,
        /// step counts to time, comma separated (default: the configured N)
        #[arg(long, value_delimiter = ',')]
        steps: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Monte Carlo means and standard errors of the diagnostics
    Mc {
        #[command(flatten)]
        common: Common,
    },
}

fn prepare(common: &Common) -> Result<SimulationConfig> {
    let cfg = load_config_with_overrides(&common.config, &common.set)?;
    fs::create_dir_all(&common.out)?;
    write_config(&cfg, &common.out.join("config.toml"))?;
    Ok(cfg)
}

fn meta(cfg: &SimulationConfig, seed: u64, first: &svlasov::DiagnosticsRecord) -> TimeseriesMeta {
    let sigma = cfg.sigma_model();
    let laws = match cfg.field.case_one() {
        Some(ref e) => reference_laws(first, LawField::CaseOne(e), &sigma),
        None => reference_laws(first, LawField::CaseTwo, &sigma),
    };
    TimeseriesMeta { cfg_hash: cfg.hash(), seed, laws }
}

fn cmd_run(common: &Common, sample: u64, nonadaptive: bool) -> Result<()> {
    let cfg = prepare(common)?;
    let inc = sample_increments(&cfg, sample)?;
    let mode = if nonadaptive { DomainMode::NonAdaptive } else { DomainMode::Adaptive };
    let every = cfg.snapshot_every;
    let last = cfg.steps;
    let out = common.out.clone();
    let mut io_error = None;
    let result = with_threads(common.threads, || {
        run_with(&cfg, &inc, mode, |n, t, f| {
            let due = every.is_some_and(|k| k > 0 && (n % k == 0 || n == last));
            if due && io_error.is_none() {
                let path = out.join(format!("snapshot_{n:06}.txt"));
                io_error = write_snapshot(f, t, &path).err();
            }
        })
    })??;
    if let Some(e) = io_error {
        return Err(e);
    }
    let m = meta(&cfg, inc.seed(), &result.diagnostics[0]);
    write_timeseries(&result.diagnostics, &m, &common.out.join("timeseries.csv"))?;
    let d = result.diagnostics.last().expect("at least the initial record");
    println!(
        "steps {} U {} mass {} min {} wall {:.3}s",
        cfg.steps,
        d.half_width,
        d.mass,
        result.min_value,
        result.wall_clock.as_secs_f64()
    );
    Ok(())
}

fn cmd_converge(common: &Common, levels: u32) -> Result<()> {
    let cfg = prepare(common)?;
    let report = with_threads(common.threads, || run_convergence_study(&cfg, levels, cfg.samples))??;
    let text = convergence_text(&report);
    fs::write(common.out.join("convergence.csv"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_timing(common: &Common, steps: &[usize], reps: usize) -> Result<()> {
    let cfg = prepare(common)?;
    let cfgs: Vec<SimulationConfig> = if steps.is_empty() {
        vec![cfg]
    } else {
        steps.iter().map(|&n| SimulationConfig { steps: n, ..cfg.clone() }).collect()
    };
    let rows = run_timing_study(&cfgs, reps)?;
    let text = timing_text(&rows);
    fs::write(common.out.join("timing.csv"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_mc(common: &Common) -> Result<()> {
    let cfg = prepare(common)?;
    let report = run_monte_carlo(&cfg, cfg.samples, common.threads)?;
    let m = TimeseriesMeta { cfg_hash: cfg.hash(), seed: cfg.seed, laws: report.laws };
    fs::write(common.out.join("mc_mean.csv"), monte_carlo_text(&report, &m, false))?;
    fs::write(common.out.join("mc_se.csv"), monte_carlo_text(&report, &m, true))?;
    let summary = monte_carlo_summary(&report);
    fs::write(common.out.join("mc_summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn report(e: &Error, out: &Path) {
    match e {
        Error::NonFinite { step } => eprintln!("numerical abort at step {step}"),
        _ => eprintln!("error: {e} (output directory {})", out.display()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, out) = match &cli.command {
        Command::Run { common, sample, nonadaptive } => (cmd_run(common, *sample, *nonadaptive), &common.out),
        Command::Converge { common, levels } => (cmd_converge(common, *levels), &common.out),
        Command::Timing { common, steps, reps } => (cmd_timing(common, steps, *reps), &common.out),
        Command::Mc { common } => (cmd_mc(common), &common.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, out);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
