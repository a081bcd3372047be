//! Collaborative Bayesian inference of per-user interest and social
//! influence from binary interactions.
//!
//! An interaction of user `i` with an item of topic `d` is modelled as a
//! Bernoulli draw with probability `sigma(pi(i,d) * I(i,d) + S(i,d))`,
//! where `pi(i,d)` is the fraction of the user's interactions on that
//! topic, `I` is inherent interest with prior `N(mu1, sigma1_sq)` and `S`
//! is social influence with prior `N(mu2, sigma2_sq)`. Minimizing the
//! per-example negative log posterior by SGD yields the latent matrices.

mod train;

pub use train::{sample_negatives, train, TrainReport};

use serde::{Deserialize, Serialize};

use crate::data::InteractionDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probability floor used before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbnHyperparams {
    /// Prior mean of inherent interest.
    pub mu1: f64,
    /// Prior variance of inherent interest.
    pub sigma1_sq: f64,
    /// Prior mean of social influence.
    pub mu2: f64,
    /// Prior variance of social influence.
    pub sigma2_sq: f64,
    pub learning_rate: f64,
    pub convergence_threshold: f64,
    pub max_epochs: usize,
    /// Negative examples sampled per positive, per epoch.
    pub negative_ratio: f64,
    pub seed: u64,
}

impl Default for CbnHyperparams {
    /// Priors mirror `SyntheticSpec::default`; the optimizer settings are
    /// the benchmark-dataset values.
    fn default() -> Self {
        CbnHyperparams {
            mu1: 5.0,
            sigma1_sq: 300.0,
            mu2: -5.0,
            sigma2_sq: 0.25,
            learning_rate: 0.01,
            convergence_threshold: 0.001,
            max_epochs: 200,
            negative_ratio: 1.0,
            seed: 0,
        }
    }
}

impl CbnHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma1_sq <= 0.0 || self.sigma2_sq <= 0.0 {
            return Err(Error::InvalidParam("prior variances must be positive".into()));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::InvalidParam("learning_rate must be nonnegative".into()));
        }
        if self.convergence_threshold <= 0.0 {
            return Err(Error::InvalidParam(
                "convergence_threshold must be positive".into(),
            ));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParam("max_epochs must be positive".into()));
        }
        if self.negative_ratio < 0.0 {
            return Err(Error::InvalidParam("negative_ratio must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Trained latent state: inherent interest, social influence, and the
/// contribution rates the likelihood was evaluated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbnModel {
    pub num_users: usize,
    pub num_topics: usize,
    pub interest: Matrix,
    pub social: Matrix,
    pub rates: Matrix,
    pub hyperparams: CbnHyperparams,
}

impl CbnModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: CbnModel = serde_json::from_str(text)?;
        Ok(model)
    }
}

/// One labelled (user, item) pair; `label` 1 for an observed interaction,
/// 0 for a sampled negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub user: u32,
    pub item: u32,
    pub topic: u32,
    pub label: u8,
}

/// Contribution rates pi(i,d) = m_i^(d) / m_i from the training
/// interactions; users without interactions get the uniform row 1/D.
pub fn contribution_rates(train: &InteractionDataset) -> Matrix {
    let d = train.num_topics;
    let mut counts = Matrix::filled(train.num_users, d, 0.0);
    let mut totals = vec![0usize; train.num_users];
    for &(u, j) in &train.interactions {
        counts.add(u as usize, train.topic_of(j) as usize, 1.0);
        totals[u as usize] += 1;
    }
    Matrix::from_fn(train.num_users, d, |u, t| {
        if totals[u] == 0 {
            1.0 / d as f64
        } else {
            counts.get(u, t) / totals[u] as f64
        }
    })
}

/// Numerically stable logistic function.
#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// P(B = 1 | rate, interest, social) = sigma(rate * interest + social).
#[inline]
pub fn selection_probability(rate: f64, interest: f64, social: f64) -> f64 {
    sigmoid(rate * interest + social)
}

/// P(B = 0 | ...), the exact complement of [`selection_probability`].
#[inline]
pub fn non_selection_probability(rate: f64, interest: f64, social: f64) -> f64 {
    1.0 - selection_probability(rate, interest, social)
}

/// Negative log posterior of one example: the Bernoulli log loss plus the
/// two Gaussian prior penalties on the touched entries.
pub fn example_loss(ex: &TrainingExample, model: &CbnModel, hp: &CbnHyperparams) -> f64 {
    let u = ex.user as usize;
    let t = ex.topic as usize;
    let rate = model.rates.get(u, t);
    let interest = model.interest.get(u, t);
    let social = model.social.get(u, t);
    let p = selection_probability(rate, interest, social).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let log_lik = if ex.label == 1 { p.ln() } else { (1.0 - p).ln() };
    let interest_penalty = (interest - hp.mu1).powi(2) / (2.0 * hp.sigma1_sq);
    let social_penalty = (social - hp.mu2).powi(2) / (2.0 * hp.sigma2_sq);
    -log_lik + interest_penalty + social_penalty
}

/// Partial derivatives of [`example_loss`] with respect to the touched
/// interest and social entries.
pub fn example_gradients(
    ex: &TrainingExample,
    model: &CbnModel,
    hp: &CbnHyperparams,
) -> (f64, f64) {
    let u = ex.user as usize;
    let t = ex.topic as usize;
    let rate = model.rates.get(u, t);
    let interest = model.interest.get(u, t);
    let social = model.social.get(u, t);
    let p = selection_probability(rate, interest, social);
    let residual = ex.label as f64 - p;
    let d_interest = -residual * rate + (interest - hp.mu1) / hp.sigma1_sq;
    let d_social = -residual + (social - hp.mu2) / hp.sigma2_sq;
    (d_interest, d_social)
}
