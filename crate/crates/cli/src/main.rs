//! `varord`: featurize, label, augment, split, train and evaluate
//! variable-ordering datasets, and run the cross-dataset experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use varord_core::cadcost::rank_orderings;
use varord_core::dataset::{generate_synthetic, save_dataset, GeneratorConfig, SplitMode, SplitSpec};
use varord_core::models::Family;
use varord_core::pipeline::{
    self, bias_pattern, ExperimentConfig, LabelSource, PipelineError, ReproConfig, TrainConfig,
};
use varord_core::polysys::{label_to_ordering, parse_system};

#[derive(Parser, Debug)]
#[command(name = "varord", version, about = "Machine-learned CAD variable-ordering selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Random,
    Orbit,
}

impl From<Mode> for SplitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Random => SplitMode::Random,
            Mode::Orbit => SplitMode::Orbit,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse problems (JSONL) and write the feature table.
    Featurize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Attach timings, cheapest-ordering labels and tie flags.
    Label {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// CSV with header id,t0..t5; without it the sotd oracle is used.
        #[arg(long)]
        timings: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Expand every root into its six variable permutations.
    Augment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Split into train and test files inside the output directory.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Grid-search one model family and save the best model.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the family in the config file.
        #[arg(long)]
        family: Option<Family>,
        #[command(flatten)]
        common: Common,
    },
    /// Accuracy of a saved model on a labeled dataset.
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-dataset evaluation of two labeled datasets, in both directions.
    Experiment {
        /// Pass twice: the two datasets to compare.
        #[arg(long = "in", required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic roots, skewed subsample and augmented set, end to end.
    ReproBiasStudy {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate labeled synthetic roots.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Projection cost of every ordering of one system, as JSON.
    Costs {
        /// System text, e.g. "vars 3; x1^2 + x2; x2*x3 - 1".
        system: String,
    },
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, PipelineError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Featurize { input, out, .. } => {
            let d = pipeline::featurize(&input, &out)?;
            println!("featurized {} records -> {}", d.len(), out.display());
        }
        Command::Label {
            input,
            out,
            timings,
            ..
        } => {
            let source = timings.map_or(LabelSource::Oracle, LabelSource::Timings);
            let d = pipeline::label_file(&input, &out, &source)?;
            let ties = d.records.iter().filter(|r| r.tie).count();
            println!("labeled {} records ({ties} ties) -> {}", d.len(), out.display());
        }
        Command::Augment { input, out, .. } => {
            let dist = pipeline::augment_file(&input, &out)?;
            println!("augmented to {} records -> {}", dist.total, out.display());
            println!("class counts {:?}", dist.counts);
        }
        Command::Split {
            input,
            out,
            test_fraction,
            mode,
            common,
        } => {
            let spec = SplitSpec {
                test_fraction,
                seed: common.seed,
                mode: mode.into(),
            };
            std::fs::create_dir_all(&out)?;
            let ext = input
                .extension()
                .map_or("csv".to_string(), |e| e.to_string_lossy().into_owned());
            let (train, test) = (out.join(format!("train.{ext}")), out.join(format!("test.{ext}")));
            let leakage = pipeline::split_file(&input, &train, &test, &spec)?;
            println!("wrote {} and {}", train.display(), test.display());
            println!("orbit leakage {leakage:.4}");
        }
        Command::Train {
            input,
            out,
            family,
            common,
        } => {
            let mut cfg: TrainConfig = read_config(common.config.as_deref())?;
            if let Some(f) = family {
                cfg.family = f;
            }
            let (_, search) = pipeline::train_file(&input, &out, &cfg, common.seed)?;
            println!(
                "{} best {} (cv accuracy {:.4}) -> {}",
                cfg.family,
                search.best,
                search.table[search.best_index].cv.mean,
                out.display()
            );
        }
        Command::Evaluate { input, model, .. } => {
            let acc = pipeline::evaluate_file(&model, &input)?;
            println!("accuracy {acc:.6}");
        }
        Command::Experiment { input, out, common } => {
            if input.len() != 2 {
                return Err(PipelineError::Config(format!(
                    "experiment needs exactly two --in datasets, got {}",
                    input.len()
                )));
            }
            let cfg: ExperimentConfig = read_config(common.config.as_deref())?;
            let report = pipeline::experiment_files(&input[0], &input[1], &cfg, common.seed, &out)?;
            print!("{}", pipeline::report_markdown(std::slice::from_ref(&report)));
        }
        Command::ReproBiasStudy { out, common } => {
            let cfg: ReproConfig = read_config(common.config.as_deref())?;
            let outcome = pipeline::repro_bias_study(common.seed, &cfg, Some(&out))?;
            println!(
                "roots {}, D1 {}, D2 {} -> {}",
                outcome.roots.len(),
                outcome.biased.len(),
                outcome.balanced.len(),
                out.display()
            );
            for rep in &outcome.reports {
                println!("split mode {:?}:", rep.split.mode);
                for c in bias_pattern(rep) {
                    println!(
                        "  {:<4} D1-trained drop {:+.1} pts, D2-trained shift {:+.1} pts",
                        c.family.name(),
                        c.biased_drop,
                        c.balanced_shift
                    );
                }
            }
        }
        Command::Generate { out, common } => {
            let cfg: GeneratorConfig = read_config(common.config.as_deref())?;
            let d = generate_synthetic(&cfg, common.seed).map_err(PipelineError::from)?;
            save_dataset(&d, &out).map_err(PipelineError::from)?;
            println!("generated {} records -> {}", d.len(), out.display());
        }
        Command::Costs { system } => {
            let s = parse_system(&system).map_err(|e| PipelineError::Config(e.to_string()))?;
            let table = rank_orderings(&s)?;
            let ordering = label_to_ordering(table.argmin_label, s.nvars())
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            let value = serde_json::json!({ "table": table, "best_ordering": ordering });
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
