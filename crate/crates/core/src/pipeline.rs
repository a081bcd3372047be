//! End-to-end drivers behind the CLI subcommands: ingestion to disk, the
//! full run (split, groups, training, equilibria, evaluation), and the
//! synthetic-oracle harness.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cbn::{train, CbnHyperparams, CbnModel};
use crate::data::{
    build_groups, filter_inactive, generate_synthetic, load_hetrec, split,
    InteractionDataset, SyntheticSpec,
};
use crate::error::{io_err, Error, Result};
use crate::eval::{parse_external_predictions, run_experiment, DistanceMetric, Method};
use crate::game::{find_equilibrium, normalize, recommend, GameConfig};
use crate::matrix::Matrix;

fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.in_stage(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Resolved configuration for `run`; every field has a default so partial
/// JSON configs and flag overrides compose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub interactions: Option<PathBuf>,
    pub social: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    /// Users below this interaction count are filtered out.
    pub min_interactions: usize,
    /// Expected topic count; the ingested labels must fit inside it.
    pub num_topics: Option<usize>,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub mu2: f64,
    pub sigma2_sq: f64,
    pub learning_rate: f64,
    pub convergence_threshold: f64,
    pub max_epochs: usize,
    pub negative_ratio: f64,
    pub train_fraction: f64,
    pub group_size: usize,
    pub num_groups: usize,
    pub min_density: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub exponent: f64,
    pub max_rounds: usize,
    /// Optional JSON file of externally computed predictions to include in
    /// the report: {"group_index": [ratios...]} per external method name.
    pub external_predictions: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            interactions: None,
            social: None,
            topics: None,
            min_interactions: 5,
            num_topics: None,
            mu1: 45.0,
            sigma1_sq: 70.0,
            mu2: 12.0,
            sigma2_sq: 30.0,
            learning_rate: 0.01,
            convergence_threshold: 0.001,
            max_epochs: 200,
            negative_ratio: 1.0,
            train_fraction: 0.7,
            group_size: 5,
            num_groups: 100,
            min_density: 0.25,
            eta1: 0.6,
            eta2: 0.4,
            exponent: 2.0,
            max_rounds: 100,
            external_predictions: None,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Named parameter presets for the two benchmark datasets.
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        match name {
            "lastfm" => {
                cfg.num_topics = Some(6);
                cfg.mu1 = 45.0;
                cfg.sigma1_sq = 70.0;
                cfg.mu2 = 12.0;
                cfg.sigma2_sq = 30.0;
            }
            "delicious" => {
                cfg.num_topics = Some(10);
                cfg.mu1 = 45.0;
                cfg.sigma1_sq = 75.0;
                cfg.mu2 = 10.0;
                cfg.sigma2_sq = 25.0;
            }
            other => {
                return Err(Error::InvalidParam(format!(
                    "unknown preset '{other}' (expected lastfm or delicious)"
                )))
            }
        }
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn hyperparams(&self, seed: u64) -> CbnHyperparams {
        CbnHyperparams {
            mu1: self.mu1,
            sigma1_sq: self.sigma1_sq,
            mu2: self.mu2,
            sigma2_sq: self.sigma2_sq,
            learning_rate: self.learning_rate,
            convergence_threshold: self.convergence_threshold,
            max_epochs: self.max_epochs,
            negative_ratio: self.negative_ratio,
            seed,
        }
    }

    pub fn game_config(&self, seed: u64) -> GameConfig {
        GameConfig {
            eta1: self.eta1,
            eta2: self.eta2,
            exponent: self.exponent,
            max_rounds: self.max_rounds,
            seed,
        }
    }

    fn dataset_paths(&self) -> Result<(&Path, &Path, &Path)> {
        match (&self.interactions, &self.social, &self.topics) {
            (Some(i), Some(s), Some(t)) => Ok((i, s, t)),
            _ => Err(Error::InvalidParam(
                "interactions, social and topics paths are all required".into(),
            )),
        }
    }
}

/// Decorrelated per-stage seeds derived from the run seed.
fn stage_seed(seed: u64, stage: u64) -> u64 {
    seed.wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Summary returned by [`ingest`] for the CLI to print.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSummary {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub social_edges: usize,
    pub num_topics: usize,
    pub items_missing_topic: usize,
    pub interactions_missing_topic: usize,
    pub zero_weight_rows: usize,
}

/// Load, filter, and write the canonical dataset artifact plus the
/// id-mapping sidecar.
pub fn ingest(
    interactions: &Path,
    social: &Path,
    topics: &Path,
    min_interactions: usize,
    output_dir: &Path,
    write_id_map: bool,
) -> Result<IngestSummary> {
    let (raw, id_map, stats) = stage("ingest", load_hetrec(interactions, social, topics))?;
    let ds = stage("filter", filter_inactive(&raw, min_interactions))?;
    stage("write", ensure_dir(output_dir))?;
    stage(
        "write",
        write_text(
            &output_dir.join("dataset.json"),
            &serde_json::to_string_pretty(&ds)?,
        ),
    )?;
    if write_id_map {
        stage(
            "write",
            write_text(
                &output_dir.join("id_map.json"),
                &serde_json::to_string_pretty(&id_map)?,
            ),
        )?;
    }
    Ok(IngestSummary {
        users: ds.num_users,
        items: ds.num_items,
        interactions: ds.interactions.len(),
        social_edges: ds.social_edges.len(),
        num_topics: ds.num_topics,
        items_missing_topic: stats.items_missing_topic,
        interactions_missing_topic: stats.interactions_missing_topic,
        zero_weight_rows: stats.zero_weight_rows,
    })
}

/// One group's equilibrium as written to `equilibria.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub group: usize,
    pub members: Vec<u32>,
    pub strategies: Vec<u32>,
    pub utilities: Vec<f64>,
    pub converged: bool,
    pub rounds_used: usize,
    pub ratios: Vec<f64>,
}

/// What `run` leaves behind, for the CLI summary line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub groups_built: usize,
    pub groups_requested: usize,
    pub groups_evaluated: usize,
    pub epochs_run: usize,
    pub train_converged: bool,
    pub equilibria_converged: usize,
    pub mean_distances: Vec<(String, Vec<f64>)>,
}

/// Execute the full pipeline and write `config.json`, `model.json`,
/// `equilibria.json`, `report.csv`, `report.json` and `curves.csv` into
/// the configured output directory.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let (ipath, spath, tpath) = cfg.dataset_paths()?;
    let (raw, _, _) = stage("ingest", load_hetrec(ipath, spath, tpath))?;
    let mut ds = stage("filter", filter_inactive(&raw, cfg.min_interactions))?;
    if let Some(d) = cfg.num_topics {
        if ds.num_topics > d {
            return Err(Error::InvalidParam(format!(
                "dataset labels {} topics but num_topics is {d}",
                ds.num_topics
            ))
            .in_stage("ingest"));
        }
        ds.num_topics = d;
    }
    run_on_dataset(cfg, &ds)
}

/// As [`run`], but on an already-loaded dataset (used by tests and the
/// synthetic harness).
pub fn run_on_dataset(cfg: &RunConfig, ds: &InteractionDataset) -> Result<RunOutcome> {
    let split_ds = stage(
        "split",
        split(ds, cfg.train_fraction, stage_seed(cfg.seed, 1)),
    )?;
    let build = stage(
        "groups",
        build_groups(
            ds,
            cfg.group_size,
            cfg.num_groups,
            cfg.min_density,
            stage_seed(cfg.seed, 2),
        ),
    )?;
    if build.groups.is_empty() {
        return Err(Error::Empty("group construction".into()).in_stage("groups"));
    }

    let hp = cfg.hyperparams(stage_seed(cfg.seed, 3));
    let (model, train_report) = stage("train", train(&split_ds.train, &hp))?;
    let norm = normalize(&model);
    let game_cfg = cfg.game_config(stage_seed(cfg.seed, 4));

    let mut equilibria = Vec::with_capacity(build.groups.len());
    for (gi, group) in build.groups.iter().enumerate() {
        let eq = stage("equilibrium", find_equilibrium(group, &norm, &game_cfg))?;
        let ratios = recommend(&eq, ds.num_topics);
        equilibria.push(EquilibriumRecord {
            group: gi,
            members: group.members.clone(),
            strategies: eq.strategies,
            utilities: eq.utilities,
            converged: eq.converged,
            rounds_used: eq.rounds_used,
            ratios: ratios.0,
        });
    }

    let external = match &cfg.external_predictions {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            Some(stage("evaluate", parse_external_predictions(&text))?)
        }
        None => None,
    };
    let mut methods = vec![
        Method::SaiotGr {
            norm: &norm,
            cfg: &game_cfg,
        },
        Method::Frequency,
        Method::FreGroup,
    ];
    if let Some(preds) = &external {
        methods.push(Method::External {
            name: "External".into(),
            predictions: preds,
        });
    }
    let report = stage(
        "evaluate",
        run_experiment(
            &split_ds.train,
            &split_ds.test,
            &build.groups,
            &methods,
            serde_json::to_value(cfg)?,
        ),
    )?;

    stage("write", ensure_dir(&cfg.output_dir))?;
    stage(
        "write",
        write_text(
            &cfg.output_dir.join("config.json"),
            &serde_json::to_string_pretty(cfg)?,
        ),
    )?;
    stage(
        "write",
        write_text(&cfg.output_dir.join("model.json"), &model.to_json()?),
    )?;
    stage(
        "write",
        write_text(
            &cfg.output_dir.join("equilibria.json"),
            &serde_json::to_string_pretty(&equilibria)?,
        ),
    )?;
    stage(
        "write",
        write_text(&cfg.output_dir.join("report.csv"), &report.to_csv()),
    )?;
    stage(
        "write",
        write_text(&cfg.output_dir.join("report.json"), &report.to_json()?),
    )?;
    stage(
        "write",
        write_text(&cfg.output_dir.join("curves.csv"), &report.curves_csv()),
    )?;

    Ok(RunOutcome {
        output_dir: cfg.output_dir.clone(),
        groups_built: build.groups.len(),
        groups_requested: build.requested,
        groups_evaluated: report.evaluated_groups,
        epochs_run: train_report.epochs_run,
        train_converged: train_report.converged,
        equilibria_converged: equilibria.iter().filter(|e| e.converged).count(),
        mean_distances: report
            .methods
            .iter()
            .map(|m| (m.method.clone(), m.mean_distances.clone()))
            .collect(),
    })
}

/// Configuration of the synthetic-oracle harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub num_topics: usize,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub mu2: f64,
    pub sigma2_sq: f64,
    pub interactions_per_user: usize,
    pub learning_rate: f64,
    pub convergence_threshold: f64,
    pub max_epochs: usize,
    pub negative_ratio: f64,
    pub train_fraction: f64,
    pub group_size: usize,
    pub num_groups: usize,
    pub min_density: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub exponent: f64,
    pub max_rounds: usize,
    pub num_seeds: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for SynthConfig {
    /// Sparse per-user histories over many users and groups: the regime
    /// where the equilibrium recommendation separates most clearly from
    /// the Frequency baseline. Parameter recovery is better probed with
    /// denser histories (interactions_per_user around 30, see README).
    fn default() -> Self {
        let spec = SyntheticSpec::default();
        SynthConfig {
            num_users: 400,
            num_items: spec.num_items,
            num_topics: spec.num_topics,
            mu1: spec.mu1,
            sigma1_sq: spec.sigma1_sq,
            mu2: spec.mu2,
            sigma2_sq: spec.sigma2_sq,
            interactions_per_user: 7,
            // the synthetic regime benefits from a finer convergence test
            // than the benchmark presets
            learning_rate: 0.02,
            convergence_threshold: 1e-6,
            max_epochs: 400,
            negative_ratio: 1.0,
            train_fraction: 0.7,
            group_size: 5,
            num_groups: 600,
            min_density: 0.25,
            eta1: 0.6,
            eta2: 0.4,
            exponent: 2.0,
            max_rounds: 100,
            num_seeds: 10,
            seed: 0,
            output_dir: PathBuf::from("out-synth"),
        }
    }
}

impl SynthConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let cfg: SynthConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            num_users: self.num_users,
            num_items: self.num_items,
            num_topics: self.num_topics,
            mu1: self.mu1,
            sigma1_sq: self.sigma1_sq,
            mu2: self.mu2,
            sigma2_sq: self.sigma2_sq,
            interactions_per_user: self.interactions_per_user,
            seed,
        }
    }
}

/// One seed's outcome inside a [`SynthReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSeedResult {
    pub seed: u64,
    /// Pearson correlation between trained and true interest on the
    /// user-topic cells with at least one training interaction; None when
    /// either side is (near-)constant.
    pub recovery_correlation: Option<f64>,
    pub recovery_degenerate: bool,
    pub euc_saiot_gr: f64,
    pub euc_frequency: f64,
    pub win: bool,
    pub groups_evaluated: usize,
}

/// Aggregated synthetic-oracle report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthReport {
    pub per_seed: Vec<SynthSeedResult>,
    pub num_seeds: usize,
    /// Mean over seeds with a defined recovery correlation.
    pub mean_recovery_correlation: Option<f64>,
    pub degenerate_seeds: usize,
    /// Fraction of seeds where the two-stage model beat Frequency on mean
    /// Euclidean distance.
    pub win_rate: f64,
    pub config_echo: SynthConfig,
}

/// Pearson correlation between trained and true interest over interacted
/// user-topic cells.
pub fn recovery_correlation(
    train_ds: &InteractionDataset,
    model: &CbnModel,
    true_interest: &Matrix,
) -> Option<f64> {
    let mut seen = std::collections::HashSet::new();
    let mut trained = Vec::new();
    let mut truth = Vec::new();
    for &(u, j) in &train_ds.interactions {
        let cell = (u, train_ds.topic_of(j));
        if seen.insert(cell) {
            trained.push(model.interest.get(u as usize, cell.1 as usize));
            truth.push(true_interest.get(u as usize, cell.1 as usize));
        }
    }
    if trained.len() < 2 {
        return None;
    }
    pearson_vec(&trained, &truth)
}

fn pearson_vec(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    // near-constant values on either side make the correlation
    // numerically meaningless; report it as undefined instead
    let min_cell_variance = 1e-4;
    if va / (n - 1.0) < min_cell_variance || vb / (n - 1.0) < min_cell_variance {
        return None;
    }
    Some(cov / (va.sqrt() * vb.sqrt()))
}

/// Run the synthetic oracle over `num_seeds` consecutive seeds and write
/// `synth_report.json`.
pub fn synth(cfg: &SynthConfig) -> Result<SynthReport> {
    if cfg.num_seeds == 0 {
        return Err(Error::InvalidParam("num_seeds must be positive".into()));
    }
    let mut per_seed = Vec::with_capacity(cfg.num_seeds);
    for k in 0..cfg.num_seeds as u64 {
        let seed = cfg.seed.wrapping_add(k);
        per_seed.push(synth_one_seed(cfg, seed)?);
    }

    let defined: Vec<f64> = per_seed
        .iter()
        .filter_map(|s| s.recovery_correlation)
        .collect();
    let mean_recovery_correlation = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let wins = per_seed.iter().filter(|s| s.win).count();
    let report = SynthReport {
        num_seeds: cfg.num_seeds,
        mean_recovery_correlation,
        degenerate_seeds: per_seed.iter().filter(|s| s.recovery_degenerate).count(),
        win_rate: wins as f64 / cfg.num_seeds as f64,
        per_seed,
        config_echo: cfg.clone(),
    };

    stage("write", ensure_dir(&cfg.output_dir))?;
    stage(
        "write",
        write_text(
            &cfg.output_dir.join("synth_report.json"),
            &serde_json::to_string_pretty(&report)?,
        ),
    )?;
    Ok(report)
}

fn synth_one_seed(cfg: &SynthConfig, seed: u64) -> Result<SynthSeedResult> {
    let spec = cfg.spec(stage_seed(seed, 10));
    let (ds, true_interest, _) = stage("generate", generate_synthetic(&spec))?;
    let split_ds = stage(
        "split",
        split(&ds, cfg.train_fraction, stage_seed(seed, 1)),
    )?;
    let build = stage(
        "groups",
        build_groups(
            &ds,
            cfg.group_size,
            cfg.num_groups,
            cfg.min_density,
            stage_seed(seed, 2),
        ),
    )?;
    if build.groups.is_empty() {
        return Err(Error::Empty("group construction".into()).in_stage("groups"));
    }

    let hp = CbnHyperparams {
        mu1: cfg.mu1,
        sigma1_sq: cfg.sigma1_sq,
        mu2: cfg.mu2,
        sigma2_sq: cfg.sigma2_sq,
        learning_rate: cfg.learning_rate,
        convergence_threshold: cfg.convergence_threshold,
        max_epochs: cfg.max_epochs,
        negative_ratio: cfg.negative_ratio,
        seed: stage_seed(seed, 3),
    };
    hp.validate()?;
    let (model, _) = stage("train", train(&split_ds.train, &hp))?;
    let recovery = recovery_correlation(&split_ds.train, &model, &true_interest);

    let norm = normalize(&model);
    let game_cfg = GameConfig {
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        exponent: cfg.exponent,
        max_rounds: cfg.max_rounds,
        seed: stage_seed(seed, 4),
    };
    let methods = [
        Method::SaiotGr {
            norm: &norm,
            cfg: &game_cfg,
        },
        Method::Frequency,
    ];
    let report = stage(
        "evaluate",
        run_experiment(
            &split_ds.train,
            &split_ds.test,
            &build.groups,
            &methods,
            serde_json::Value::Null,
        ),
    )?;
    let euc = DistanceMetric::ALL
        .iter()
        .position(|m| *m == DistanceMetric::Euclidean)
        .unwrap();
    let euc_saiot_gr = report.methods[0].mean_distances[euc];
    let euc_frequency = report.methods[1].mean_distances[euc];
    Ok(SynthSeedResult {
        seed,
        recovery_correlation: recovery,
        recovery_degenerate: recovery.is_none(),
        euc_saiot_gr,
        euc_frequency,
        win: euc_saiot_gr < euc_frequency,
        groups_evaluated: report.evaluated_groups,
    })
}

/// Train on a freshly ingested dataset and write just the model JSON.
pub fn export_model(cfg: &RunConfig, output: &Path) -> Result<CbnModel> {
    let (ipath, spath, tpath) = cfg.dataset_paths()?;
    let (raw, _, _) = stage("ingest", load_hetrec(ipath, spath, tpath))?;
    let mut ds = stage("filter", filter_inactive(&raw, cfg.min_interactions))?;
    if let Some(d) = cfg.num_topics {
        if ds.num_topics > d {
            return Err(Error::InvalidParam(format!(
                "dataset labels {} topics but num_topics is {d}",
                ds.num_topics
            ))
            .in_stage("ingest"));
        }
        ds.num_topics = d;
    }
    let hp = cfg.hyperparams(stage_seed(cfg.seed, 3));
    let (model, _) = stage("train", train(&ds, &hp))?;
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            stage("write", ensure_dir(parent))?;
        }
    }
    stage("write", write_text(output, &model.to_json()?))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_the_documented_settings() {
        let lastfm = RunConfig::preset("lastfm").unwrap();
        assert_eq!(lastfm.num_topics, Some(6));
        assert_eq!(
            (lastfm.mu1, lastfm.sigma1_sq, lastfm.mu2, lastfm.sigma2_sq),
            (45.0, 70.0, 12.0, 30.0)
        );
        let delicious = RunConfig::preset("delicious").unwrap();
        assert_eq!(delicious.num_topics, Some(10));
        assert_eq!(
            (
                delicious.mu1,
                delicious.sigma1_sq,
                delicious.mu2,
                delicious.sigma2_sq
            ),
            (45.0, 75.0, 10.0, 25.0)
        );
        for cfg in [&lastfm, &delicious] {
            assert_eq!(cfg.learning_rate, 0.01);
            assert_eq!(cfg.convergence_threshold, 0.001);
            assert_eq!(cfg.train_fraction, 0.7);
            assert_eq!((cfg.eta1, cfg.eta2), (0.6, 0.4));
            assert_eq!(cfg.min_density, 0.25);
        }
        assert!(RunConfig::preset("netflix").is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = RunConfig::preset("delicious").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 9, "group_size": 3}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.group_size, 3);
        assert_eq!(cfg.num_groups, 100);
        assert_eq!(cfg.min_interactions, 5);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"learningrate": 1.0}"#);
        assert!(err.is_err());
    }
}
