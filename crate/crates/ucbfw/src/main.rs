use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use ucbfw::config::TheoremName;
use ucbfw::{analyze, build_rows, load_config, run_experiment, write_csv, write_summary, Analysis, Experiment};
use ucbfw_core::{diagnostics, BoundStatus, Theorem};

#[derive(Parser)]
#[command(name = "ucbfw", version, about = "Bandit Frank-Wolfe experiments over the simplex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (YAML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `seeds.base` from the config.
    #[arg(long)]
    seed_base: Option<u64>,
    /// Overrides `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoremArg {
    Lemma1,
    Thm1,
    Prop2,
    Thm4,
}

#[derive(Subcommand)]
enum Command {
    /// Run all seeds and write `<id>.csv` and `<id>.summary.json`.
    Run(RunArgs),
    /// Run, fit the log-log rate and print the slope table.
    Rates(RunArgs),
    /// Run and compare the mean error curve with a theoretical bound.
    CheckBounds {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        theorem: TheoremArg,
    },
    /// Finite-difference check of every loss family's gradient.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run all property suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Outcome {
    Pass,
    CheckFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Run(args) => {
            let (exp, analysis) = execute(&args, None, false)?;
            write_outputs(&args, &exp, &analysis)?;
            Ok(verdict(analysis.pass()))
        }
        Command::Rates(args) => {
            let (exp, analysis) = execute(&args, None, false)?;
            print_rates(&analysis);
            write_outputs(&args, &exp, &analysis)?;
            Ok(verdict(analysis.pass()))
        }
        Command::CheckBounds { run, theorem } => {
            let theorem = match theorem {
                TheoremArg::Lemma1 => TheoremName::Lemma1,
                TheoremArg::Thm1 => TheoremName::Thm1,
                TheoremArg::Prop2 => TheoremName::Prop2,
                TheoremArg::Thm4 => TheoremName::Thm4,
            };
            let (exp, analysis) = execute(&run, Some(theorem.into()), theorem == TheoremName::Lemma1)?;
            write_outputs(&run, &exp, &analysis)?;
            let report = analysis.bound.as_ref().expect("bound requested");
            println!("{:>10} {:>14} {:>14} {:>14}  pass", "T", "empirical", "bound", "margin");
            for r in &report.rows {
                println!("{:>10} {:>14.6e} {:>14.6e} {:>14.6e}  {}", r.horizon, r.empirical, r.bound, r.margin, r.pass);
            }
            match &report.status {
                BoundStatus::Pass => Ok(Outcome::Pass),
                BoundStatus::Fail => Ok(Outcome::CheckFailed),
                BoundStatus::Unsupported(why) => anyhow::bail!("{} does not apply: {why}", report.theorem.name()),
            }
        }
        Command::Gradcheck { seed } => {
            let checks = diagnostics::gradient_suite(seed, 100)?;
            for c in &checks {
                println!("{:<14} points={} max_rel_err={:.3e} {}", c.kind.name(), c.points, c.max_rel_error, pass_word(c.pass));
            }
            Ok(verdict(checks.iter().all(|c| c.pass)))
        }
        Command::Selftest { seed } => {
            let items = diagnostics::selftest(seed)?;
            for it in &items {
                println!("{:<20} {} {}", it.name, pass_word(it.pass), it.detail);
            }
            Ok(verdict(items.iter().all(|i| i.pass)))
        }
    }
}

fn verdict(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    }
}

fn pass_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn execute(args: &RunArgs, theorem: Option<Theorem>, diagnostics: bool) -> anyhow::Result<(Experiment, Analysis)> {
    let mut exp = load_config(&args.config)?;
    if let Some(base) = args.seed_base {
        exp.config.seeds.base = base;
    }
    if diagnostics {
        exp.config.output.diagnostics = true;
        exp.trial.diagnostics = true;
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    info!("running {} with {} seeds on {} workers", exp.config.id, exp.config.seeds.count, workers);
    let records = run_experiment(&exp, workers)?;
    let analysis = analyze(&exp, records, theorem)?;
    Ok((exp, analysis))
}

fn write_outputs(args: &RunArgs, exp: &Experiment, analysis: &Analysis) -> anyhow::Result<()> {
    let dir: &Path = args.out.as_deref().unwrap_or(&exp.config.output.dir);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = dir.join(format!("{}.csv", exp.config.id));
    write_csv(exp, &build_rows(&analysis.records, Some(analysis)), &csv)?;
    write_summary(exp, analysis, &dir.join(format!("{}.summary.json", exp.config.id)))?;
    println!("wrote {}", csv.display());
    Ok(())
}

fn print_rates(analysis: &Analysis) {
    let Some(agg) = &analysis.aggregate else {
        println!("need at least two seeds for a rate table");
        return;
    };
    println!("{:>10} {:>14} {:>14}", "T", "mean", "stderr");
    for ((t, m), s) in agg.horizons.iter().zip(&agg.mean).zip(&agg.stderr) {
        println!("{t:>10} {m:>14.6e} {s:>14.6e}");
    }
    match &analysis.slope {
        Some(s) => {
            let band = s.band.map(|(lo, hi)| format!(" band [{lo}, {hi}] {}", pass_word(s.pass))).unwrap_or_default();
            println!("slope {:.4} (intercept {:.4}, residual rms {:.3e}){band}", s.fit.slope, s.fit.intercept, s.fit.residual_rms);
        }
        None => println!("slope unavailable (needs three horizons with positive mean error)"),
    }
}
