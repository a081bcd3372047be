//! Baselines, distribution distances, and the experiment harness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Group, InteractionDataset};
use crate::error::{Error, Result};
use crate::game::{find_equilibrium, recommend, GameConfig, NormalizedModel, TopicDistribution};

/// The six distances between a predicted and a real topic distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMetric {
    Euclidean,
    Manhattan,
    Chebyshev,
    Correlation,
    MeanAbsolute,
    MeanSquared,
}

impl DistanceMetric {
    pub const ALL: [DistanceMetric; 6] = [
        DistanceMetric::Euclidean,
        DistanceMetric::Manhattan,
        DistanceMetric::Chebyshev,
        DistanceMetric::Correlation,
        DistanceMetric::MeanAbsolute,
        DistanceMetric::MeanSquared,
    ];

    /// Column label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            DistanceMetric::Euclidean => "EucDist",
            DistanceMetric::Manhattan => "ManDist",
            DistanceMetric::Chebyshev => "CheDist",
            DistanceMetric::Correlation => "CorDist",
            DistanceMetric::MeanAbsolute => "MAEDist",
            DistanceMetric::MeanSquared => "MSEDist",
        }
    }
}

fn pearson(p: &[f64], q: &[f64]) -> Option<f64> {
    let n = p.len() as f64;
    let mean_p = p.iter().sum::<f64>() / n;
    let mean_q = q.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_q = 0.0;
    for (a, b) in p.iter().zip(q) {
        cov += (a - mean_p) * (b - mean_q);
        var_p += (a - mean_p).powi(2);
        var_q += (b - mean_q).powi(2);
    }
    if var_p == 0.0 || var_q == 0.0 {
        return None;
    }
    Some(cov / (var_p.sqrt() * var_q.sqrt()))
}

/// Distance between two equal-length distributions.
///
/// The correlation distance of a zero-variance vector is defined as 0 when
/// the inputs are identical and 1 otherwise.
pub fn distance(metric: DistanceMetric, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::InvalidParam("distributions must be nonempty".into()));
    }
    let d = p.len() as f64;
    Ok(match metric {
        DistanceMetric::Euclidean => p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt(),
        DistanceMetric::Manhattan => p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum(),
        DistanceMetric::Chebyshev => p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        DistanceMetric::Correlation => {
            if p == q {
                // identical inputs are exactly distance 0, also when constant
                // or a single topic
                0.0
            } else if p.len() < 2 {
                return Err(Error::InvalidParam(
                    "correlation distance needs at least 2 topics".into(),
                ));
            } else {
                match pearson(p, q) {
                    // rounding can push |r| past 1; keep the result in [0, 2]
                    Some(r) => (1.0 - r).clamp(0.0, 2.0),
                    None => 1.0,
                }
            }
        }
        DistanceMetric::MeanAbsolute => {
            p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / d
        }
        DistanceMetric::MeanSquared => {
            p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / d
        }
    })
}

/// Real topic proportions of a group: its members' pooled test
/// interactions, counted per topic and normalized. A group without test
/// interactions gets the uniform distribution and is flagged excluded.
pub struct GroundTruth {
    pub distribution: TopicDistribution,
    pub excluded: bool,
}

pub fn ground_truth_distribution(
    group: &Group,
    test: &InteractionDataset,
    num_topics: usize,
) -> GroundTruth {
    let members: std::collections::HashSet<u32> = group.members.iter().copied().collect();
    let mut counts = vec![0.0; num_topics];
    let mut total = 0usize;
    for &(u, j) in &test.interactions {
        if members.contains(&u) {
            counts[test.topic_of(j) as usize] += 1.0;
            total += 1;
        }
    }
    GroundTruth {
        distribution: TopicDistribution::from_counts(&counts),
        excluded: total == 0,
    }
}

fn member_distribution(items: &[u32], train: &InteractionDataset, num_topics: usize) -> Vec<f64> {
    if items.is_empty() {
        return vec![1.0 / num_topics as f64; num_topics];
    }
    let mut counts = vec![0.0; num_topics];
    for &j in items {
        counts[train.topic_of(j) as usize] += 1.0;
    }
    let total = items.len() as f64;
    counts.iter().map(|c| c / total).collect()
}

/// Equal-weight average of each member's train topic distribution.
pub fn frequency_baseline(
    group: &Group,
    train: &InteractionDataset,
    num_topics: usize,
) -> TopicDistribution {
    let by_user = train.items_by_user();
    let mut mean = vec![0.0; num_topics];
    for &m in &group.members {
        let dist = member_distribution(&by_user[m as usize], train, num_topics);
        for (acc, v) in mean.iter_mut().zip(dist) {
            *acc += v;
        }
    }
    TopicDistribution::from_counts(&mean)
}

/// Pool all member train interactions into one multiset, then count.
pub fn fregroup_baseline(
    group: &Group,
    train: &InteractionDataset,
    num_topics: usize,
) -> TopicDistribution {
    let members: std::collections::HashSet<u32> = group.members.iter().copied().collect();
    let mut counts = vec![0.0; num_topics];
    for &(u, j) in &train.interactions {
        if members.contains(&u) {
            counts[train.topic_of(j) as usize] += 1.0;
        }
    }
    TopicDistribution::from_counts(&counts)
}

/// A recommendation method under evaluation.
pub enum Method<'a> {
    /// The two-stage model: equilibrium topic ratios from the trained,
    /// normalized latent matrices.
    SaiotGr {
        norm: &'a NormalizedModel,
        cfg: &'a GameConfig,
    },
    Frequency,
    FreGroup,
    /// Externally computed predictions keyed by group index.
    External {
        name: String,
        predictions: &'a BTreeMap<usize, Vec<f64>>,
    },
}

impl Method<'_> {
    pub fn name(&self) -> &str {
        match self {
            Method::SaiotGr { .. } => "SAIoT-GR",
            Method::Frequency => "Frequency",
            Method::FreGroup => "FreGroup",
            Method::External { name, .. } => name,
        }
    }

    pub fn predict(
        &self,
        group_index: usize,
        group: &Group,
        train: &InteractionDataset,
        num_topics: usize,
    ) -> Result<TopicDistribution> {
        match self {
            Method::SaiotGr { norm, cfg } => {
                let eq = find_equilibrium(group, norm, cfg)?;
                Ok(recommend(&eq, num_topics))
            }
            Method::Frequency => Ok(frequency_baseline(group, train, num_topics)),
            Method::FreGroup => Ok(fregroup_baseline(group, train, num_topics)),
            Method::External { name, predictions } => {
                let vec = predictions
                    .get(&group_index)
                    .ok_or_else(|| Error::MissingPrediction {
                        method: name.clone(),
                        group: group_index,
                    })?;
                if vec.len() != num_topics {
                    return Err(Error::LengthMismatch {
                        left: vec.len(),
                        right: num_topics,
                    });
                }
                Ok(TopicDistribution::from_counts(vec))
            }
        }
    }
}

/// Per-group distances for one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupResult {
    pub group: usize,
    pub distances: Vec<f64>,
}

/// Per-method block of an [`EvalReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// Mean distance per metric over non-excluded groups, metric order as
    /// in [`DistanceMetric::ALL`].
    pub mean_distances: Vec<f64>,
    pub per_group: Vec<GroupResult>,
    /// Mean predicted ratio per topic over non-excluded groups.
    pub mean_predicted: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: Vec<String>,
    pub methods: Vec<MethodResult>,
    /// Groups that entered the averages.
    pub evaluated_groups: usize,
    /// Indices of groups without test interactions.
    pub excluded_groups: Vec<usize>,
    /// Mean real ratio per topic over non-excluded groups.
    pub mean_real: Vec<f64>,
    pub config_echo: serde_json::Value,
}

impl EvalReport {
    /// Table-layout CSV: one row per method, one column per metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for method in &self.methods {
            out.push_str(&method.method);
            for v in &method.mean_distances {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }

    /// Plot-ready predicted-vs-real curves:
    /// `topic_index,real,predicted,method`.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("topic_index,real,predicted,method\n");
        for method in &self.methods {
            for (k, (real, pred)) in self
                .mean_real
                .iter()
                .zip(&method.mean_predicted)
                .enumerate()
            {
                out.push_str(&format!("{k},{real:.6},{pred:.6},{}\n", method.method));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evaluate every method against the pooled-test ground truth of every
/// group, averaging each of the six distances over non-excluded groups.
pub fn run_experiment(
    train: &InteractionDataset,
    test: &InteractionDataset,
    groups: &[Group],
    methods: &[Method<'_>],
    config_echo: serde_json::Value,
) -> Result<EvalReport> {
    if methods.is_empty() {
        return Err(Error::InvalidParam("no methods to evaluate".into()));
    }
    let num_topics = train.num_topics;
    let truths: Vec<GroundTruth> = groups
        .iter()
        .map(|g| ground_truth_distribution(g, test, num_topics))
        .collect();
    let excluded_groups: Vec<usize> = truths
        .iter()
        .enumerate()
        .filter(|(_, t)| t.excluded)
        .map(|(i, _)| i)
        .collect();
    let evaluated_groups = groups.len() - excluded_groups.len();
    if evaluated_groups == 0 {
        return Err(Error::NoEvaluableGroups);
    }

    let mut mean_real = vec![0.0; num_topics];
    for t in truths.iter().filter(|t| !t.excluded) {
        for (acc, v) in mean_real.iter_mut().zip(t.distribution.as_slice()) {
            *acc += v / evaluated_groups as f64;
        }
    }

    let mut method_results = Vec::with_capacity(methods.len());
    for method in methods {
        let mut per_group = Vec::with_capacity(evaluated_groups);
        let mut sums = vec![0.0; DistanceMetric::ALL.len()];
        let mut mean_predicted = vec![0.0; num_topics];
        for (gi, (group, truth)) in groups.iter().zip(&truths).enumerate() {
            if truth.excluded {
                continue;
            }
            let predicted = method.predict(gi, group, train, num_topics)?;
            let mut distances = Vec::with_capacity(DistanceMetric::ALL.len());
            for metric in DistanceMetric::ALL {
                let d = distance(metric, predicted.as_slice(), truth.distribution.as_slice())?;
                distances.push(d);
            }
            for (acc, v) in sums.iter_mut().zip(&distances) {
                *acc += v;
            }
            for (acc, v) in mean_predicted.iter_mut().zip(predicted.as_slice()) {
                *acc += v / evaluated_groups as f64;
            }
            per_group.push(GroupResult {
                group: gi,
                distances,
            });
        }
        method_results.push(MethodResult {
            method: method.name().to_string(),
            mean_distances: sums.iter().map(|s| s / evaluated_groups as f64).collect(),
            per_group,
            mean_predicted,
        });
    }

    Ok(EvalReport {
        metrics: DistanceMetric::ALL.iter().map(|m| m.label().to_string()).collect(),
        methods: method_results,
        evaluated_groups,
        excluded_groups,
        mean_real,
        config_echo,
    })
}

/// Parse an external-predictions file: `{"group_id": [ratios...]}` with
/// group ids as decimal strings.
pub fn parse_external_predictions(text: &str) -> Result<BTreeMap<usize, Vec<f64>>> {
    let raw: BTreeMap<String, Vec<f64>> = serde_json::from_str(text)?;
    let mut out = BTreeMap::new();
    for (k, v) in raw {
        let idx: usize = k
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad group id '{k}' in predictions")))?;
        out.insert(idx, v);
    }
    Ok(out)
}
