use std::path::PathBuf;
use std::process::ExitCode;

use boxpath::case1::DirectionModel;
use boxpath::case2::ExitWeighting;
use boxpath::par;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod svg;

use config::{parse_json_enum, CaseSelector, ExperimentConfig, Overrides};
use error::CliError;

/// Length and exit-position densities of random straight trajectories through a box.
#[derive(Parser)]
#[command(name = "boxpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic joint densities of the nine face-pair classes plus the combined and single-face length densities.
    Analytic(RunArgs),
    /// Monte Carlo histograms of sampled trajectories.
    Sample(RunArgs),
    /// Compare a sample run with analytic densities of the same box.
    Compare {
        #[arg(long)]
        analytic: PathBuf,
        #[arg(long)]
        sample: PathBuf,
        /// Report path; defaults to compare.json in the sample directory.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Figure data (CSV) and renderings (SVG).
    Figures {
        #[command(flatten)]
        run: RunArgs,
        /// Figure ids, 3 to 9; all when omitted.
        #[arg(long = "fig", value_delimiter = ',')]
        figs: Vec<u32>,
        /// Sample run directories to overlay where the box matches.
        #[arg(long)]
        sample: Vec<PathBuf>,
    },
    /// Write the short, cubic and long box configurations.
    Presets {
        /// Directory for the config files; printed to stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Start from a preset: short, cubic or long.
    #[arg(long)]
    preset: Option<String>,
    /// Box sides, e.g. 1,0.1,1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    dims: Option<Vec<f64>>,
    /// i, ii or baseline.
    #[arg(long, value_parser = parse_json_enum::<CaseSelector>)]
    case: Option<CaseSelector>,
    /// cube_components or ball_rejection.
    #[arg(long, value_parser = parse_json_enum::<DirectionModel>)]
    direction: Option<DirectionModel>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Restrict entries to one face, e.g. x2lo.
    #[arg(long)]
    entry_face: Option<String>,
    #[arg(long)]
    length_bins: Option<usize>,
    /// per_area or per_face.
    #[arg(long, value_parser = parse_json_enum::<ExitWeighting>)]
    weighting: Option<ExitWeighting>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, env = "BOXPATH_WORKERS")]
    workers: Option<usize>,
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => config::preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        cfg.apply(Overrides {
            dims: self.dims,
            case: self.case,
            direction: self.direction,
            seed: self.seed,
            samples: self.samples,
            entry_face: self.entry_face,
            length_bins: self.length_bins,
            weighting: self.weighting,
            output: self.out,
            workers: self.workers,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn in_pool<T: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> T + Send) -> T {
    par::with_workers(cfg.workers.unwrap_or(0), f)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analytic(args) => {
            let cfg = args.resolve()?;
            let dir = in_pool(&cfg, || commands::analytic(&cfg))?;
            println!("wrote {}", dir.display());
        }
        Command::Sample(args) => {
            let cfg = args.resolve()?;
            let dir = in_pool(&cfg, || commands::sample(&cfg))?;
            println!("wrote {}", dir.display());
        }
        Command::Compare {
            analytic,
            sample,
            out,
        } => {
            let report = commands::compare(&analytic, &sample)?;
            let path = out.unwrap_or_else(|| sample.join("compare.json"));
            std::fs::write(&path, output::to_json(&report))
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!(
                "lengths L1 {:.4} (chi-square p {:.3}); worst class L1 {:.4}; wrote {}",
                report.lengths.l1_distance,
                report.lengths.chi_square.p_value,
                report.worst_class_l1,
                path.display()
            );
        }
        Command::Figures { run, figs, sample } => {
            let cfg = run.resolve()?;
            let figs = if figs.is_empty() {
                commands::FIGURES.to_vec()
            } else {
                figs
            };
            let dir = in_pool(&cfg, || commands::figures(&cfg, &figs, &sample))?;
            println!("wrote {}", dir.display());
        }
        Command::Presets { out } => match out {
            Some(dir) => {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                for (name, _) in config::PRESETS {
                    let path = dir.join(format!("{name}.json"));
                    std::fs::write(&path, output::to_json(&config::preset(name)?))
                        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    println!("wrote {}", path.display());
                }
            }
            None => {
                let all: Vec<_> = config::PRESETS
                    .iter()
                    .map(|(n, _)| config::preset(n))
                    .collect::<Result<_, _>>()?;
                print!("{}", String::from_utf8_lossy(&output::to_json(&all)));
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("boxpath: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
