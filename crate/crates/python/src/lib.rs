//! Python bindings for the two-stage group recommender.
//!
//! Exposes the dataset types, the collaborative inference stage, the topic
//! game, and the evaluation helpers as an in-process extension module, so
//! a Python script can drive the whole pipeline without the CLI.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use saiot_gr::cbn;
use saiot_gr::data;
use saiot_gr::eval;
use saiot_gr::game;
use saiot_gr::Error;

fn to_py_err(e: Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

type Rows = Vec<Vec<f64>>;

fn matrix_rows(m: &saiot_gr::Matrix) -> Rows {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Binary interaction dataset with a social graph and item topics.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Dataset {
    inner: data::InteractionDataset,
}

#[pymethods]
impl Dataset {
    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.inner.num_items
    }

    #[getter]
    fn num_topics(&self) -> usize {
        self.inner.num_topics
    }

    #[getter]
    fn num_interactions(&self) -> usize {
        self.inner.interactions.len()
    }

    #[getter]
    fn num_social_edges(&self) -> usize {
        self.inner.social_edges.len()
    }

    fn interactions(&self) -> Vec<(u32, u32)> {
        self.inner.interactions.clone()
    }

    fn social_edges(&self) -> Vec<(u32, u32)> {
        self.inner.social_edges.clone()
    }

    fn topic_of_item(&self) -> Vec<u32> {
        self.inner.topic_of_item.clone()
    }

    /// Drop users with fewer interactions than the threshold.
    fn filter_inactive(&self, min_interactions: usize) -> PyResult<Dataset> {
        data::filter_inactive(&self.inner, min_interactions)
            .map(|inner| Dataset { inner })
            .map_err(to_py_err)
    }

    /// Per-user train/test partition; returns (train, test).
    fn split(&self, train_fraction: f64, seed: u64) -> PyResult<(Dataset, Dataset)> {
        let s = data::split(&self.inner, train_fraction, seed).map_err(to_py_err)?;
        Ok((Dataset { inner: s.train }, Dataset { inner: s.test }))
    }

    /// Rejection-sample member sets meeting the social-density floor.
    fn build_groups(
        &self,
        group_size: usize,
        num_groups: usize,
        min_density: f64,
        seed: u64,
    ) -> PyResult<Vec<Group>> {
        let build = data::build_groups(&self.inner, group_size, num_groups, min_density, seed)
            .map_err(to_py_err)?;
        Ok(build.groups.into_iter().map(|inner| Group { inner }).collect())
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Dataset> {
        let inner: data::InteractionDataset =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py_err)?;
        Ok(Dataset { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(users={}, items={}, topics={}, interactions={}, social_edges={})",
            self.inner.num_users,
            self.inner.num_items,
            self.inner.num_topics,
            self.inner.interactions.len(),
            self.inner.social_edges.len()
        )
    }
}

/// A user group with its internal social-edge count.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Group {
    inner: data::Group,
}

#[pymethods]
impl Group {
    #[new]
    fn new(members: Vec<u32>, dataset: &Dataset) -> Group {
        Group {
            inner: data::Group::from_members(members, &dataset.inner),
        }
    }

    #[getter]
    fn members(&self) -> Vec<u32> {
        self.inner.members.clone()
    }

    #[getter]
    fn internal_edges(&self) -> usize {
        self.inner.internal_edges
    }

    fn social_density(&self) -> f64 {
        self.inner.social_density()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Group(members={:?}, density={:.3})",
            self.inner.members,
            self.inner.social_density()
        )
    }
}

/// Trained latent state: interest, social influence, contribution rates.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Model {
    inner: cbn::CbnModel,
}

#[pymethods]
impl Model {
    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users
    }

    #[getter]
    fn num_topics(&self) -> usize {
        self.inner.num_topics
    }

    fn interest(&self) -> Rows {
        matrix_rows(&self.inner.interest)
    }

    fn social(&self) -> Rows {
        matrix_rows(&self.inner.social)
    }

    fn contribution_rates(&self) -> Rows {
        matrix_rows(&self.inner.rates)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Model> {
        cbn::CbnModel::from_json(text)
            .map(|inner| Model { inner })
            .map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(users={}, topics={})",
            self.inner.num_users, self.inner.num_topics
        )
    }
}

/// Interest and social matrices rescaled into [0, 1].
#[pyclass(from_py_object)]
#[derive(Clone)]
struct NormalizedModel {
    inner: game::NormalizedModel,
}

#[pymethods]
impl NormalizedModel {
    fn interest(&self) -> Rows {
        matrix_rows(&self.inner.interest)
    }

    fn social(&self) -> Rows {
        matrix_rows(&self.inner.social)
    }
}

/// Result of the best-response dynamics for one group.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Equilibrium {
    inner: game::Equilibrium,
}

#[pymethods]
impl Equilibrium {
    #[getter]
    fn strategies(&self) -> Vec<u32> {
        self.inner.strategies.clone()
    }

    #[getter]
    fn utilities(&self) -> Vec<f64> {
        self.inner.utilities.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn rounds_used(&self) -> usize {
        self.inner.rounds_used
    }

    fn __repr__(&self) -> String {
        format!(
            "Equilibrium(strategies={:?}, converged={}, rounds={})",
            self.inner.strategies, self.inner.converged, self.inner.rounds_used
        )
    }
}

/// Load the TSV triple (interactions, social, topics); returns the dataset
/// and a dict of ingestion statistics.
#[pyfunction]
fn load_hetrec(
    py: Python<'_>,
    interactions: PathBuf,
    social: PathBuf,
    topics: PathBuf,
) -> PyResult<(Dataset, Py<PyDict>)> {
    let (ds, id_map, stats) =
        data::load_hetrec(&interactions, &social, &topics).map_err(to_py_err)?;
    let info = PyDict::new(py);
    info.set_item("users", id_map.users)?;
    info.set_item("items", id_map.items)?;
    info.set_item("zero_weight_rows", stats.zero_weight_rows)?;
    info.set_item("duplicate_interactions", stats.duplicate_interactions)?;
    info.set_item("items_missing_topic", stats.items_missing_topic)?;
    info.set_item("interactions_missing_topic", stats.interactions_missing_topic)?;
    info.set_item("topic_rows_ignored", stats.topic_rows_ignored)?;
    info.set_item("social_rows_ignored", stats.social_rows_ignored)?;
    Ok((Dataset { inner: ds }, info.into()))
}

/// Sample a dataset with known latent ground truth; returns
/// (dataset, true_interest, true_social).
#[pyfunction]
#[pyo3(signature = (num_users=200, num_items=60, num_topics=5, mu1=5.0, sigma1_sq=300.0, mu2=-5.0, sigma2_sq=0.25, interactions_per_user=30, seed=0))]
#[allow(clippy::too_many_arguments)]
fn generate_synthetic(
    num_users: usize,
    num_items: usize,
    num_topics: usize,
    mu1: f64,
    sigma1_sq: f64,
    mu2: f64,
    sigma2_sq: f64,
    interactions_per_user: usize,
    seed: u64,
) -> PyResult<(Dataset, Rows, Rows)> {
    let spec = data::SyntheticSpec {
        num_users,
        num_items,
        num_topics,
        mu1,
        sigma1_sq,
        mu2,
        sigma2_sq,
        interactions_per_user,
        seed,
    };
    let (ds, interest, social) = data::generate_synthetic(&spec).map_err(to_py_err)?;
    Ok((
        Dataset { inner: ds },
        matrix_rows(&interest),
        matrix_rows(&social),
    ))
}

/// sigma(rate * interest + social).
#[pyfunction]
fn selection_probability(rate: f64, interest: f64, social: f64) -> f64 {
    cbn::selection_probability(rate, interest, social)
}

/// Contribution-rate matrix of a dataset, one row per user.
#[pyfunction]
fn contribution_rates(dataset: &Dataset) -> Rows {
    matrix_rows(&cbn::contribution_rates(&dataset.inner))
}

/// Fit the latent matrices by SGD; returns (model, report dict).
#[pyfunction]
#[pyo3(signature = (dataset, mu1=5.0, sigma1_sq=300.0, mu2=-5.0, sigma2_sq=0.25, learning_rate=0.01, convergence_threshold=0.001, max_epochs=200, negative_ratio=1.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    dataset: &Dataset,
    mu1: f64,
    sigma1_sq: f64,
    mu2: f64,
    sigma2_sq: f64,
    learning_rate: f64,
    convergence_threshold: f64,
    max_epochs: usize,
    negative_ratio: f64,
    seed: u64,
) -> PyResult<(Model, Py<PyDict>)> {
    let hp = cbn::CbnHyperparams {
        mu1,
        sigma1_sq,
        mu2,
        sigma2_sq,
        learning_rate,
        convergence_threshold,
        max_epochs,
        negative_ratio,
        seed,
    };
    let (model, report) = cbn::train(&dataset.inner, &hp).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("epochs_run", report.epochs_run)?;
    out.set_item("final_objective", report.final_objective)?;
    out.set_item("objective_trace", report.objective_trace)?;
    out.set_item("converged", report.converged)?;
    Ok((Model { inner: model }, out.into()))
}

/// Min-max rescale both latent matrices into [0, 1].
#[pyfunction]
fn normalize(model: &Model) -> NormalizedModel {
    NormalizedModel {
        inner: game::normalize(&model.inner),
    }
}

/// Run sequential best-response dynamics for one group.
#[pyfunction]
#[pyo3(signature = (group, normalized, eta1=0.6, eta2=0.4, exponent=2.0, max_rounds=100, seed=0))]
fn find_equilibrium(
    group: &Group,
    normalized: &NormalizedModel,
    eta1: f64,
    eta2: f64,
    exponent: f64,
    max_rounds: usize,
    seed: u64,
) -> PyResult<Equilibrium> {
    let cfg = game::GameConfig {
        eta1,
        eta2,
        exponent,
        max_rounds,
        seed,
    };
    game::find_equilibrium(&group.inner, &normalized.inner, &cfg)
        .map(|inner| Equilibrium { inner })
        .map_err(to_py_err)
}

/// Topic ratios of an equilibrium profile.
#[pyfunction]
fn recommend(equilibrium: &Equilibrium, num_topics: usize) -> Vec<f64> {
    game::recommend(&equilibrium.inner, num_topics).0
}

/// Pooled test-topic proportions of a group; returns (ratios, excluded).
#[pyfunction]
fn ground_truth_distribution(
    group: &Group,
    test: &Dataset,
    num_topics: usize,
) -> (Vec<f64>, bool) {
    let gt = eval::ground_truth_distribution(&group.inner, &test.inner, num_topics);
    (gt.distribution.0, gt.excluded)
}

/// Equal-weight average of member topic distributions.
#[pyfunction]
fn frequency_baseline(group: &Group, train: &Dataset, num_topics: usize) -> Vec<f64> {
    eval::frequency_baseline(&group.inner, &train.inner, num_topics).0
}

/// Pooled member interactions, then counting.
#[pyfunction]
fn fregroup_baseline(group: &Group, train: &Dataset, num_topics: usize) -> Vec<f64> {
    eval::fregroup_baseline(&group.inner, &train.inner, num_topics).0
}

/// One of EucDist, ManDist, CheDist, CorDist, MAEDist, MSEDist.
#[pyfunction]
fn distance(metric: &str, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let m = eval::DistanceMetric::ALL
        .into_iter()
        .find(|m| m.label() == metric)
        .ok_or_else(|| {
            PyValueError::new_err(format!(
                "unknown metric '{metric}' (expected one of EucDist, ManDist, CheDist, CorDist, MAEDist, MSEDist)"
            ))
        })?;
    eval::distance(m, &p, &q).map_err(to_py_err)
}

/// Evaluate the equilibrium recommender and both baselines on every group
/// against the pooled-test ground truth; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (train, test, groups, normalized, eta1=0.6, eta2=0.4, exponent=2.0, max_rounds=100, seed=0))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    train: &Dataset,
    test: &Dataset,
    groups: Vec<Group>,
    normalized: &NormalizedModel,
    eta1: f64,
    eta2: f64,
    exponent: f64,
    max_rounds: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let cfg = game::GameConfig {
        eta1,
        eta2,
        exponent,
        max_rounds,
        seed,
    };
    let groups: Vec<data::Group> = groups.into_iter().map(|g| g.inner).collect();
    let methods = [
        eval::Method::SaiotGr {
            norm: &normalized.inner,
            cfg: &cfg,
        },
        eval::Method::Frequency,
        eval::Method::FreGroup,
    ];
    let report = eval::run_experiment(
        &train.inner,
        &test.inner,
        &groups,
        &methods,
        serde_json::Value::Null,
    )
    .map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("metrics", report.metrics.clone())?;
    out.set_item("evaluated_groups", report.evaluated_groups)?;
    out.set_item("excluded_groups", report.excluded_groups.clone())?;
    out.set_item("mean_real", report.mean_real.clone())?;
    let methods_out = PyDict::new(py);
    for m in &report.methods {
        let entry = PyDict::new(py);
        entry.set_item("mean_distances", m.mean_distances.clone())?;
        entry.set_item("mean_predicted", m.mean_predicted.clone())?;
        let per_group: Vec<(usize, Vec<f64>)> = m
            .per_group
            .iter()
            .map(|g| (g.group, g.distances.clone()))
            .collect();
        entry.set_item("per_group", per_group)?;
        methods_out.set_item(&m.method, entry)?;
    }
    out.set_item("methods", methods_out)?;
    out.set_item("csv", report.to_csv())?;
    Ok(out.into())
}

#[pymodule]
fn saiot_gr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Dataset>()?;
    m.add_class::<Group>()?;
    m.add_class::<Model>()?;
    m.add_class::<NormalizedModel>()?;
    m.add_class::<Equilibrium>()?;
    m.add_function(wrap_pyfunction!(load_hetrec, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(selection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(contribution_rates, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(find_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(recommend, m)?)?;
    m.add_function(wrap_pyfunction!(ground_truth_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(fregroup_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
