//! Argument parsing and dispatch for `xlabel-exp`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use xlabel_core::ebm::TrainConfig;
use xlabel_core::experiments::report::{write_cv, write_noise, write_totalflips};
use xlabel_core::experiments::{
    default_noise_levels, kfold_cv, label_noise_eval, simulate_totalflips, ModelKind, SimConfig,
};
use xlabel_core::ncd::{read_dataset_from_path, synth_dataset, write_dataset, ClinicalLists, SynthConfig, Task, TaskView};
use xlabel_core::XlabelError;

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error(transparent)]
    Core(#[from] XlabelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "xlabel-exp", version, about = "Run labeling experiments on a labeled record CSV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the labeling loop and count pseudo-labels needing a flip.
    Totalflips(TotalFlipsArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Accuracy on deliberately flipped labels.
    Noise(NoiseArgs),
    /// Generate a synthetic labeled CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub task: Task,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Keyword / ICD-10 / drug list file; the bundled lists when absent.
    #[arg(long)]
    pub lists: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = TrainConfig::default().max_bins)]
    pub max_bins: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().n_rounds)]
    pub rounds: usize,
    #[arg(long, default_value_t = TrainConfig::default().early_stop_patience)]
    pub patience: usize,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_bins: self.max_bins,
            learning_rate: self.learning_rate,
            n_rounds: self.rounds,
            early_stop_patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct TotalFlipsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = SimConfig::default().initial_fraction)]
    pub initial_fraction: f64,
    #[arg(long, default_value_t = SimConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = SimConfig::default().repetitions)]
    pub repetitions: usize,
    /// Reveal batches in ascending confidence order instead of at random.
    #[arg(long)]
    pub confidence_batches: bool,
    #[arg(long, default_value = "EBM")]
    pub model: ModelKind,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_value = "EBM,RuleBased,AllNegative")]
    pub models: Vec<ModelKind>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated fractions; 0.05 to 0.50 in steps of 0.05 by default.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, value_delimiter = ',', default_value = "EBM,RuleBased")]
    pub models: Vec<ModelKind>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().n_records)]
    pub n_records: usize,
    #[arg(long, default_value_t = 0.0)]
    pub flag_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dropout_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub typo_rate: f64,
    #[arg(long)]
    pub lists: Option<PathBuf>,
}

fn load_lists(path: Option<&Path>) -> Result<ClinicalLists, ExpError> {
    Ok(match path {
        Some(p) => ClinicalLists::from_path(p)?,
        None => ClinicalLists::default(),
    })
}

fn load_view(common: &Common) -> Result<(TaskView, ClinicalLists), ExpError> {
    let lists = load_lists(common.lists.as_deref())?;
    let dataset = read_dataset_from_path(&common.data)?;
    let view = TaskView::from_dataset(&dataset, common.task, &lists)?;
    Ok((view, lists))
}

/// Run one command and return the files it wrote.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, ExpError> {
    match cli.command {
        Command::Totalflips(a) => {
            let (view, lists) = load_view(&a.common)?;
            let sim = SimConfig {
                initial_fraction: a.initial_fraction,
                batch_size: a.batch_size,
                repetitions: a.repetitions,
                seed: a.common.seed,
                confidence_batches: a.confidence_batches,
            };
            let classifier = a.model.classifier(&lists, &a.common.train.config(a.common.seed));
            let report = simulate_totalflips(&view, &*classifier, &sim)?;
            log::info!(
                "{}: median TotalFlips {} vs all-negative {}",
                report.task,
                report.median,
                report.baseline_flips
            );
            Ok(write_totalflips(&a.common.out, &report)?)
        }
        Command::Cv(a) => {
            let (view, lists) = load_view(&a.common)?;
            let train = a.common.train.config(a.common.seed);
            let reports = a
                .models
                .iter()
                .map(|m| kfold_cv(&view, a.k, &*m.classifier(&lists, &train), a.common.seed))
                .collect::<Result<Vec<_>, _>>()?;
            for r in &reports {
                log::info!("{} {}: mean F1 {:.4}", r.task, r.model, r.mean.f1);
            }
            Ok(write_cv(&a.common.out, &reports)?)
        }
        Command::Noise(a) => {
            let (view, lists) = load_view(&a.common)?;
            let train = a.common.train.config(a.common.seed);
            let levels = if a.levels.is_empty() { default_noise_levels() } else { a.levels.clone() };
            let reports = a
                .models
                .iter()
                .map(|m| label_noise_eval(&view, &levels, a.repeats, &*m.classifier(&lists, &train), a.common.seed))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(write_noise(&a.common.out, &reports)?)
        }
        Command::Synth(a) => {
            let lists = load_lists(a.lists.as_deref())?;
            let config = SynthConfig {
                n_records: a.n_records,
                flag_noise: a.flag_noise,
                dropout_rate: a.dropout_rate,
                typo_rate: a.typo_rate,
                seed: a.seed,
                ..SynthConfig::default()
            };
            let dataset = synth_dataset(&config, &lists)?;
            if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            write_dataset(std::fs::File::create(&a.out)?, &dataset)?;
            Ok(vec![a.out])
        }
    }
}
