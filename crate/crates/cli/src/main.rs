use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kautz_core::harness::report::{write_ensemble_report, write_monte_carlo_report, write_sdof_report};
use kautz_core::harness::{
    cost_model, fir_errors, run_ensemble_experiment, run_monte_carlo, run_sdof_experiment, EnsembleSource,
    ExperimentConfig, FilterKind, IdentificationMode,
};
use kautz_core::io::{
    format_error_history, format_screened_poles, format_weights, read_ensemble_dir, read_frf,
    read_impulse_response, read_poles, write_ensemble_dir,
};
use kautz_core::{
    estimate_poles, fir_identify, frf_to_impulse_response, lms_identify, ls_optimal_weights, normalized_error,
    KautzBank, LmsConfig, MdofProxySpec, Plant, TrainingEnsemble,
};

#[derive(Parser)]
#[command(name = "kautz", version, about = "Kautz filter identification of resonant systems")]
struct Cli {
    /// TOML file overriding experiment parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ls,
    Lms,
}

impl From<Mode> for IdentificationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Ls => IdentificationMode::Ls,
            Mode::Lms => IdentificationMode::Lms,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Kautz,
    Fir,
}

impl From<Kind> for FilterKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Kautz => FilterKind::Kautz,
            Kind::Fir => FilterKind::Fir,
        }
    }
}

#[derive(Args)]
struct ModeArg {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// SDOF study on one training set.
    Sdof(ModeArg),
    /// SDOF study repeated over random training sets.
    Montecarlo {
        #[command(flatten)]
        mode: ModeArg,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Held-out identification over all training subsets of an ensemble.
    Ensemble {
        #[command(flatten)]
        mode: ModeArg,
        /// Use the synthetic multi-mode ensemble.
        #[arg(long, conflicts_with = "data_dir")]
        proxy: bool,
        /// Directory of impulse-response CSV files.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Estimate poles from a directory of impulse responses.
    Poles {
        #[arg(long)]
        data_dir: PathBuf,
        /// Number of pole pairs to keep.
        #[arg(long, default_value_t = 6)]
        pairs: usize,
    },
    /// Fit one impulse response with a Kautz or FIR model.
    Identify {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = Mode::Ls)]
        mode: Mode,
        /// Target impulse response CSV.
        #[arg(long)]
        target: PathBuf,
        /// Pole CSV (Kautz only).
        #[arg(long)]
        poles: Option<PathBuf>,
        /// Model order; number of basis functions for Kautz, taps minus one for FIR.
        #[arg(long)]
        order: usize,
    },
    /// Per-sample operation count of a filter.
    Cost {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        order: u64,
    },
    /// Convert frequency-response CSV files to impulse responses.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lowcut: Option<f64>,
        /// Interpolate non-uniform grids onto a uniform one.
        #[arg(long)]
        resample: bool,
    },
}

fn load_config(cli: &Cli, mut cfg: ExperimentConfig, mode: Option<&ModeArg>) -> Result<ExperimentConfig> {
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(m) = mode.and_then(|m| m.mode) {
        cfg.mode = m.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> Result<()> {
    let Format::Csv = cli.format;
    match &cli.command {
        Command::Sdof(mode) => {
            let cfg = load_config(cli, ExperimentConfig::sdof(), Some(mode))?;
            let r = run_sdof_experiment(&cfg)?;
            write_sdof_report(&cli.out, &cfg, &r)?;
            for ov in &r.overlays {
                println!("{} order={} error={}", ov.case, ov.order, ov.error);
            }
        }
        Command::Montecarlo { mode, trials } => {
            let mut cfg = load_config(cli, ExperimentConfig::monte_carlo(), Some(mode))?;
            if let Some(t) = trials {
                cfg.monte_carlo_trials = *t;
                cfg.validate()?;
            }
            let r = run_monte_carlo(&cfg)?;
            write_monte_carlo_report(&cli.out, &cfg, &r)?;
            println!("trials={} failures={}", r.trials, r.failures.len());
        }
        Command::Ensemble { mode, proxy, data_dir } => {
            let mut cfg = load_config(cli, ExperimentConfig::ensemble(), Some(mode))?;
            let source = match (proxy, data_dir.as_ref().or(cfg.data_dir.as_ref())) {
                (true, _) => EnsembleSource::Proxy {
                    spec: MdofProxySpec::default(),
                    seed: cfg.seed,
                },
                (false, Some(dir)) => EnsembleSource::Dir(dir.clone()),
                (false, None) => bail!("ensemble needs --proxy or --data-dir"),
            };
            if let EnsembleSource::Dir(dir) = &source {
                cfg.data_dir = Some(dir.clone());
            }
            let r = run_ensemble_experiment(&cfg, &source)?;
            write_ensemble_report(&cli.out, &cfg, &r)?;
            println!("subsets={} failures={}", r.subsets.len(), r.failures.len());
        }
        Command::Poles { data_dir, pairs } => {
            let (_, ensemble) = read_ensemble_dir(data_dir)?;
            let poles = estimate_poles(&ensemble, *pairs)?;
            write(&cli.out.join("poles.csv"), &format_screened_poles(&poles))?;
            println!("pairs={} order={} retries={}", poles.poles.len(), poles.order, poles.retries);
        }
        Command::Identify {
            kind,
            mode,
            target,
            poles,
            order,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let h = read_impulse_response(target)?;
            let fs = h.sample_rate_hz();
            let error = match (kind, mode) {
                (Kind::Fir, Mode::Ls) => fir_errors(&h, &[*order], IdentificationMode::Ls, seed)?[0],
                (Kind::Fir, Mode::Lms) => {
                    let run = fir_identify(&Plant::Impulse(h.clone()), *order, &LmsConfig::with_seed(seed))?;
                    write(&cli.out.join("error_history.csv"), &format_error_history(&run.error_history))?;
                    let c = run.converged.coefficients();
                    let w = kautz_core::WeightVector::new(c.to_vec())?;
                    write(&cli.out.join("weights.csv"), &format_weights(&w))?;
                    normalized_error(&h, &run.converged.impulse_response(fs)?)?
                }
                (Kind::Kautz, mode) => {
                    let Some(poles) = poles else {
                        bail!("--poles is required for Kautz models");
                    };
                    if *order == 0 || order % 2 != 0 {
                        bail!("Kautz order must be even and positive, got {order}");
                    }
                    let bank = KautzBank::new(read_poles(poles)?.cyclic(order / 2))?;
                    let w = match mode {
                        Mode::Ls => ls_optimal_weights(&bank.basis_impulse_responses(h.len(), fs)?, &h)?,
                        Mode::Lms => {
                            let run = lms_identify(&bank, &Plant::Impulse(h.clone()), &LmsConfig::with_seed(seed))?;
                            write(&cli.out.join("error_history.csv"), &format_error_history(&run.error_history))?;
                            run.converged_weights
                        }
                    };
                    write(&cli.out.join("weights.csv"), &format_weights(&w))?;
                    normalized_error(&h, &bank.model_impulse_response(&w, h.len(), fs)?)?
                }
            };
            println!("normalized_error={error}");
        }
        Command::Cost { kind, order } => {
            println!("{}", cost_model((*kind).into(), *order));
        }
        Command::Ingest { input, lowcut, resample } => {
            let cfg = load_config(cli, ExperimentConfig::ensemble(), None)?;
            let lowcut = lowcut.unwrap_or(cfg.lowcut_hz);
            let mut paths: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("reading {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                bail!("no .csv files in {}", input.display());
            }
            let responses = paths
                .iter()
                .map(|p| {
                    let frf = read_frf(p)?;
                    Ok(frf_to_impulse_response(&frf, lowcut, *resample)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let written = write_ensemble_dir(&cli.out, &TrainingEnsemble::new(responses)?)?;
            println!("wrote {} impulse responses", written.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
