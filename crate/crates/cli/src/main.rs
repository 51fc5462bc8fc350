use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ekfadmm::experiment::sweep::{self, Estimate};
use ekfadmm::experiment::{output, presets, runner, Experiment, ExperimentConfig, Filter};
use ekfadmm::{selftest, Error, Result};

#[derive(Parser)]
#[command(name = "ekfadmm", version, about = "Online learning with EKF-ADMM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its result files.
    Run {
        /// Preset name or path to a TOML configuration.
        config: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory (defaults to the configuration's).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Store the estimate vectors in trace.csv.
        #[arg(long)]
        trace_vectors: bool,
    },
    /// Repeat an experiment over seeds and filters and tabulate the results.
    Sweep {
        config: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Seed range `a..b` (end excluded) or a comma-separated list.
        #[arg(long, default_value = "0..10")]
        seeds: String,
        /// Comma-separated filters (defaults to the configuration's).
        #[arg(long, value_delimiter = ',')]
        filters: Vec<Filter>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the TOML configuration of a preset.
    Config { preset: String },
    /// Run the oracle-equivalence suites.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Overrides {
    /// Number of steps N.
    #[arg(long, short = 'N', visible_alias = "steps")]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    filter: Option<Filter>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    n_a: Option<usize>,
    /// Forgetting factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// Measurement noise standard deviation of the generated data.
    #[arg(long)]
    sigma: Option<f64>,
    /// Skip the batch comparator and the regret.
    #[arg(long)]
    no_hindsight: bool,
    /// Iteration cap of the batch comparator.
    #[arg(long)]
    hindsight_iters: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(n) = self.n {
            cfg.steps = n;
            if cfg.experiment == Experiment::Lasso && self.rho.is_none() {
                presets::lasso_schedule(cfg);
            }
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.filter {
            cfg.filter = v;
        }
        if let Some(v) = self.rho {
            cfg.hyper.rho = v;
        }
        if let Some(v) = self.n_a {
            cfg.hyper.n_a = v;
        }
        if let Some(v) = self.alpha {
            cfg.hyper.alpha_forget = v;
        }
        if let Some(v) = self.sigma {
            cfg.noise_sigma = v;
        }
        if self.no_hindsight {
            cfg.hindsight.enabled = false;
        }
        if let Some(v) = self.hindsight_iters {
            cfg.hindsight.max_iter = v;
        }
    }
}

fn load(source: &str) -> Result<ExperimentConfig> {
    let path = Path::new(source);
    if path.is_file() {
        ExperimentConfig::from_file(path)
    } else if source.ends_with(".toml") {
        Err(Error::config("config", format!("no such file `{source}`")))
    } else {
        presets::preset(source)
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::config("seeds", format!("expected `a..b` or a comma-separated list, got `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a >= b {
            return Err(bad());
        }
        Ok((a..b).collect())
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, overrides, out, trace_vectors } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if trace_vectors {
                cfg.output.trace_vectors = Some(true);
            }
            cfg.validate()?;
            let started = Instant::now();
            let result = runner::run_experiment(&cfg)?;
            let written = output::write_all(&cfg.output_dir, &result)?;
            print!("{}", output::summary_text(&result));
            eprintln!("finished in {:.2} s, wrote {} files to {}", started.elapsed().as_secs_f64(), written.len(), cfg.output_dir.display());
            Ok(true)
        }
        Command::Sweep { config, overrides, seeds, filters, out } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            cfg.output.checkpoints = 0;
            cfg.validate()?;
            let seeds = parse_seeds(&seeds)?;
            let filters = if filters.is_empty() { vec![cfg.filter] } else { filters };
            let result = sweep::sweep(&cfg, &seeds, &filters)?;
            let mut text = format!(
                "{} N={} seeds={} noise_sigma={}\n\nat nu\n{}\nat x\n{}",
                cfg.experiment,
                cfg.steps,
                seeds.len(),
                cfg.noise_sigma,
                result.table(Estimate::Nu),
                result.table(Estimate::X)
            );
            let regrets: Vec<String> = filters
                .iter()
                .filter_map(|&f| {
                    let v: Vec<f64> = result.runs.iter().filter(|r| r.filter == f).filter_map(|r| r.sample_regret).collect();
                    (!v.is_empty()).then(|| {
                        let (m, s) = sweep::mean_std(&v);
                        format!("{:<22} R_f(N)/N {m:.4e} ({s:.2e})", f.label())
                    })
                })
                .collect();
            if !regrets.is_empty() {
                text.push('\n');
                text.push_str(&regrets.join("\n"));
                text.push('\n');
            }
            print!("{text}");
            let dir = out.unwrap_or(cfg.output_dir);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_text(&dir.join("sweep.txt"), &text)?;
            result.write_csv(&dir.join("sweep.csv"))?;
            Ok(true)
        }
        Command::Config { preset } => {
            print!("{}", presets::preset(&preset)?.to_toml_string()?);
            Ok(true)
        }
        Command::Selftest { seed } => {
            let checks = selftest::run_all(seed)?;
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.passed()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
