mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use autoconv_core::coeffs::{convert_appendix, read_step_function, write_step_function};
use autoconv_core::plot::{parse_trace_csv, trace_csv, PlotKind, PlotSeries};
use autoconv_core::stepfn::norms;
use autoconv_core::{
    objective_c, refine_pipeline, run_search, verify_claim, RefineConfig, SearchConfig,
};
use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "autoconv",
    version,
    about = "Step-function search and exact certification for the autoconvolution ratio"
)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Batched noisy-Adam search with elitist respawn.
    Search(SearchArgs),
    /// Upsample, ascend and trim an existing solution.
    Refine(RefineArgs),
    /// Print C and its three norms in floating point.
    Eval { input: PathBuf },
    /// Certify C >= bound in exact arithmetic. Exit 0 iff the bound holds.
    Verify {
        input: PathBuf,
        #[arg(long)]
        bound: String,
    },
    /// Write CSV series for external plotting.
    PlotData {
        input: PathBuf,
        /// step-function, autoconvolution or c-trace (input is then a trace CSV).
        #[arg(long, default_value = "step-function")]
        kind: String,
        /// Rescale the autoconvolution to a maximum of 1.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a LaTeX longtable of coefficients into the coefficient format.
    ConvertAppendix {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long = "n", alias = "n-intervals", default_value_t = 768, value_parser = clap::value_parser!(u64).range(1..))]
    n_intervals: u64,
    #[arg(long = "batch", alias = "batch-size", default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
    #[arg(long = "iters", alias = "iterations", default_value_t = 100_000)]
    iterations: u64,
    /// Defaults to 30% of the iterations.
    #[arg(long)]
    explore_steps: Option<u64>,
    #[arg(long, default_value_t = 3e-2)]
    lr_explore: f64,
    #[arg(long, default_value_t = 5e-3)]
    lr_exploit: f64,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    #[arg(long, default_value_t = 0.55)]
    gamma: f64,
    /// Defaults to 20% of the iterations; 0 disables respawn.
    #[arg(long)]
    respawn_period: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    keep_frac: f64,
    #[arg(long, default_value_t = 0.9)]
    adam_beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    adam_beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    adam_epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    checkpoint_every: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            n_intervals: self.n_intervals as usize,
            batch_size: self.batch_size as usize,
            iterations: self.iterations,
            explore_steps: self.explore_steps.unwrap_or(self.iterations * 3 / 10),
            lr_explore: self.lr_explore,
            lr_exploit: self.lr_exploit,
            eta: self.eta,
            gamma: self.gamma,
            respawn_period: self.respawn_period.unwrap_or(self.iterations / 5),
            keep_frac: self.keep_frac,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_epsilon: self.adam_epsilon,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
            threads: self.threads,
        }
    }
}

#[derive(Args)]
struct RefineArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 3e-2)]
    lr: f64,
    /// Ascent steps per round.
    #[arg(long = "iters", alias = "iterations", default_value_t = 200_000)]
    iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    log_every: usize,
    #[arg(long = "rounds", alias = "upsample-rounds", default_value_t = 2)]
    upsample_rounds: usize,
    #[arg(long = "factor", alias = "upsample-factor", default_value_t = 2)]
    upsample_factor: usize,
    /// Return the best iterate of each ascent instead of the final one.
    #[arg(long)]
    keep_best: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Search(args) => cmd_search(&args),
        Command::Refine(args) => cmd_refine(&args),
        Command::Eval { input } => cmd_eval(&input),
        Command::Verify { input, bound } => cmd_verify(&input, &bound),
        Command::PlotData {
            input,
            kind,
            normalize,
            out,
        } => cmd_plot_data(&input, &kind, normalize, out.as_deref()),
        Command::ConvertAppendix { input, out } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            emit(out.as_deref(), &convert_appendix(&text)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn cmd_search(args: &SearchArgs) -> Result<ExitCode> {
    let config = args.config();
    config.validate()?;
    let started = Utc::now();
    info!(
        "search: n={} batch={} iterations={} seed={}",
        config.n_intervals, config.batch_size, config.iterations, config.seed
    );
    let outcome = run_search(&config)?;
    for e in &outcome.events {
        warn!("step {} slot {}: {}", e.step, e.slot, e.reason);
    }

    let best_path = out_file(&args.out_dir, "best.txt")?;
    let trace_path = out_file(&args.out_dir, "trace.csv")?;
    let manifest_path = out_file(&args.out_dir, "manifest.toml")?;
    let header = vec![
        format!(
            "search n={} batch={} iterations={} seed={}",
            config.n_intervals, config.batch_size, config.iterations, config.seed
        ),
        format!("C = {}", outcome.best_value),
    ];
    write_step_function(&best_path, &outcome.best, &header)?;
    let trace: Vec<(u64, f64)> = outcome
        .history
        .iter()
        .map(|c| (c.iteration, c.best_c))
        .collect();
    std::fs::write(&trace_path, trace_csv(&trace))
        .with_context(|| format!("writing {}", trace_path.display()))?;

    let mut manifest = RunManifest::new("search", started, outcome.best_value);
    manifest.seed = Some(config.seed);
    manifest.search = Some(config);
    manifest
        .outputs
        .insert("coefficients".into(), best_path.display().to_string());
    manifest
        .outputs
        .insert("trace".into(), trace_path.display().to_string());
    manifest.write(&manifest_path)?;
    println!("C = {:.12}", outcome.best_value);
    println!("coefficients = {}", best_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_refine(args: &RefineArgs) -> Result<ExitCode> {
    let config = RefineConfig {
        lr: args.lr,
        iterations: args.iterations,
        log_every: args.log_every,
        upsample_rounds: args.upsample_rounds,
        upsample_factor: args.upsample_factor,
        keep_best: args.keep_best,
    };
    config.validate()?;
    let started = Utc::now();
    let input = read_step_function(&args.input)?;
    let outcome = refine_pipeline(&input, &config)?;
    if outcome.regressed {
        warn!(
            "refinement regressed: {} -> {}",
            outcome.start_value, outcome.value
        );
    }

    let out_path = out_file(&args.out_dir, "refined.txt")?;
    let trace_path = out_file(&args.out_dir, "refine_trace.csv")?;
    let manifest_path = out_file(&args.out_dir, "manifest.toml")?;
    let header = vec![
        format!("refined from {}", args.input.display()),
        format!("C = {}", outcome.value),
    ];
    write_step_function(&out_path, &outcome.heights, &header)?;
    // Iterations run on across rounds.
    let mut offset = 0u64;
    let mut trace = Vec::new();
    for round in &outcome.traces {
        trace.extend(round.iter().map(|&(i, c)| (offset + i as u64, c)));
        offset += config.iterations as u64;
    }
    std::fs::write(&trace_path, trace_csv(&trace))
        .with_context(|| format!("writing {}", trace_path.display()))?;

    let mut manifest = RunManifest::new("refine", started, outcome.value);
    manifest.input = Some(args.input.display().to_string());
    manifest.refine = Some(config);
    manifest
        .outputs
        .insert("coefficients".into(), out_path.display().to_string());
    manifest
        .outputs
        .insert("trace".into(), trace_path.display().to_string());
    manifest.write(&manifest_path)?;
    println!("start_c = {:.12}", outcome.start_value);
    println!("C = {:.12}", outcome.value);
    println!("n_intervals = {}", outcome.heights.len());
    println!("regressed = {}", outcome.regressed);
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(input: &Path) -> Result<ExitCode> {
    let h = read_step_function(input)?;
    let c = objective_c(&h)?;
    let t = norms(&h);
    println!("n_intervals = {}", h.len());
    println!("c = {c:.12}");
    println!("l2_squared = {}", t.l2_squared);
    println!("l1 = {}", t.l1);
    println!("linf = {}", t.linf);
    println!("linf_argmax = {}", t.linf_argmax);
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(input: &Path, bound: &str) -> Result<ExitCode> {
    let cert = verify_claim(input, bound)?;
    print!("{}", cert.render());
    Ok(if cert.passes {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_plot_data(
    input: &Path,
    kind: &str,
    normalize: bool,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let kind: PlotKind = kind.parse()?;
    let series = match kind {
        PlotKind::CTrace => {
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            PlotSeries::c_trace(&parse_trace_csv(&text)?)
        }
        PlotKind::StepFunction => PlotSeries::step_function(&read_step_function(input)?),
        PlotKind::Autoconvolution => {
            PlotSeries::autoconvolution(&read_step_function(input)?, normalize)
        }
    };
    if normalize && kind != PlotKind::Autoconvolution {
        bail!("--normalize only applies to the autoconvolution series");
    }
    emit(out, &series.to_csv())?;
    Ok(ExitCode::SUCCESS)
}
