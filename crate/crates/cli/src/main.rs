//! Command-line front end: ingest datasets, run the full two-stage
//! pipeline, drive the synthetic oracle, or export a trained model.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use saiot_gr::pipeline::{self, RunConfig, SynthConfig};
use saiot_gr::Error;

#[derive(Parser)]
#[command(name = "saiot-gr", version, about = "Two-stage group recommender for implicit feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load TSV files, filter inactive users, and write the canonical
    /// dataset artifact.
    Ingest(IngestArgs),
    /// Run the full pipeline: split, groups, training, equilibria,
    /// evaluation report.
    Run(RunArgs),
    /// Generate synthetic data with known ground truth and report
    /// parameter recovery and the model-vs-Frequency comparison.
    Synth(SynthArgs),
    /// Train on a dataset and write only the model JSON.
    ExportModel(ExportModelArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct IngestArgs {
    /// Interactions TSV: user, item, weight.
    #[arg(long)]
    interactions: PathBuf,
    /// Social edges TSV: user, user.
    #[arg(long)]
    social: PathBuf,
    /// Topic labels TSV: item, topic index.
    #[arg(long)]
    topics: PathBuf,
    /// Drop users with fewer interactions than this.
    #[arg(long, default_value_t = 5)]
    min_interactions: usize,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Also write the string-id to dense-index mapping.
    #[arg(long)]
    id_map: bool,
}

/// Overrides shared by `run` and `export-model`; unset flags fall back to
/// the config file, then the preset, then the defaults.
#[derive(Args)]
struct ConfigOverrides {
    /// JSON config file with RunConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter preset: lastfm or delicious.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    interactions: Option<PathBuf>,
    #[arg(long)]
    social: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long)]
    min_interactions: Option<usize>,
    #[arg(long)]
    num_topics: Option<usize>,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    sigma1_sq: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
    #[arg(long)]
    sigma2_sq: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    convergence_threshold: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    negative_ratio: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    num_groups: Option<usize>,
    #[arg(long)]
    min_density: Option<f64>,
    #[arg(long)]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    #[arg(long)]
    external_predictions: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    fn resolve(&self, seed: u64) -> Result<RunConfig, Error> {
        if self.preset.is_some() && self.config.is_some() {
            return Err(Error::InvalidParam(
                "--preset and --config are mutually exclusive".into(),
            ));
        }
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::from_json_file(path)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => RunConfig::default(),
        };
        macro_rules! set_path {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    cfg.$field = Some(v.clone());
                }
            };
        }
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            };
        }
        set_path!(interactions);
        set_path!(social);
        set_path!(topics);
        set!(min_interactions);
        if let Some(d) = self.num_topics {
            cfg.num_topics = Some(d);
        }
        set!(mu1);
        set!(sigma1_sq);
        set!(mu2);
        set!(sigma2_sq);
        set!(learning_rate);
        set!(convergence_threshold);
        set!(max_epochs);
        set!(negative_ratio);
        set!(train_fraction);
        set!(group_size);
        set!(num_groups);
        set!(min_density);
        set!(eta1);
        set!(eta2);
        set!(exponent);
        set!(max_rounds);
        set_path!(external_predictions);
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        cfg.seed = seed;
        Ok(cfg)
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// RNG seed; the run is a pure function of config and seed.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SynthArgs {
    /// JSON config file with SynthConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    num_users: Option<usize>,
    #[arg(long)]
    num_items: Option<usize>,
    #[arg(long)]
    num_topics: Option<usize>,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    sigma1_sq: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
    #[arg(long)]
    sigma2_sq: Option<f64>,
    #[arg(long)]
    interactions_per_user: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    convergence_threshold: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    negative_ratio: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    num_groups: Option<usize>,
    #[arg(long)]
    min_density: Option<f64>,
    #[arg(long)]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// How many consecutive seeds to sweep.
    #[arg(long)]
    num_seeds: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Base RNG seed for the sweep.
    #[arg(long)]
    seed: u64,
}

impl SynthArgs {
    fn resolve(&self) -> Result<SynthConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => SynthConfig::from_json_file(path)?,
            None => SynthConfig::default(),
        };
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            };
        }
        set!(num_users);
        set!(num_items);
        set!(num_topics);
        set!(mu1);
        set!(sigma1_sq);
        set!(mu2);
        set!(sigma2_sq);
        set!(interactions_per_user);
        set!(learning_rate);
        set!(convergence_threshold);
        set!(max_epochs);
        set!(negative_ratio);
        set!(train_fraction);
        set!(group_size);
        set!(num_groups);
        set!(min_density);
        set!(eta1);
        set!(eta2);
        set!(exponent);
        set!(max_rounds);
        set!(num_seeds);
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        cfg.seed = self.seed;
        Ok(cfg)
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ExportModelArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    #[arg(long)]
    seed: u64,
    /// Where to write the model JSON.
    #[arg(long, default_value = "model.json")]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest(args) => {
            let summary = pipeline::ingest(
                &args.interactions,
                &args.social,
                &args.topics,
                args.min_interactions,
                &args.output_dir,
                args.id_map,
            )?;
            println!(
                "ingested: {} users, {} items, {} interactions, {} social edges, {} topics",
                summary.users,
                summary.items,
                summary.interactions,
                summary.social_edges,
                summary.num_topics
            );
            if summary.items_missing_topic > 0 {
                println!(
                    "dropped {} items ({} interactions) lacking a topic label",
                    summary.items_missing_topic, summary.interactions_missing_topic
                );
            }
            if summary.zero_weight_rows > 0 {
                println!("dropped {} zero-weight rows", summary.zero_weight_rows);
            }
            println!("wrote {}", args.output_dir.join("dataset.json").display());
            Ok(())
        }
        Command::Run(args) => {
            let cfg = args.overrides.resolve(args.seed)?;
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            let outcome = pipeline::run(&cfg)?;
            println!(
                "groups: {}/{} built, {} evaluated; training: {} epochs{}; equilibria converged: {}/{}",
                outcome.groups_built,
                outcome.groups_requested,
                outcome.groups_evaluated,
                outcome.epochs_run,
                if outcome.train_converged { "" } else { " (max reached)" },
                outcome.equilibria_converged,
                outcome.groups_built,
            );
            for (method, means) in &outcome.mean_distances {
                let cells: Vec<String> = means.iter().map(|v| format!("{v:.4}")).collect();
                println!("{method}: {}", cells.join(" "));
            }
            println!("wrote {}", outcome.output_dir.join("report.csv").display());
            Ok(())
        }
        Command::Synth(args) => {
            let cfg = args.resolve()?;
            let report = pipeline::synth(&cfg)?;
            match report.mean_recovery_correlation {
                Some(r) => println!(
                    "recovery correlation: {r:.4} (mean over {} seeds, {} degenerate)",
                    report.num_seeds, report.degenerate_seeds
                ),
                None => println!(
                    "recovery correlation: undefined on all {} seeds (degenerate spec)",
                    report.num_seeds
                ),
            }
            println!(
                "win rate vs Frequency on EucDist: {:.2} over {} seeds",
                report.win_rate, report.num_seeds
            );
            println!(
                "wrote {}",
                cfg.output_dir.join("synth_report.json").display()
            );
            Ok(())
        }
        Command::ExportModel(args) => {
            let cfg = args.overrides.resolve(args.seed)?;
            let model = pipeline::export_model(&cfg, &args.output)?;
            println!(
                "trained {} users x {} topics; wrote {}",
                model.num_users,
                model.num_topics,
                args.output.display()
            );
            Ok(())
        }
    }
}
