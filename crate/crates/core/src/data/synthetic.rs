//! Synthetic dataset generator with known latent ground truth.
//!
//! Interest and social values are drawn from the two Gaussian priors, item
//! topics are uniform, and each interaction is accepted with the same
//! logistic law the inference stage assumes. Contribution rates feed back
//! as the user's history grows, so heavy topics get heavier.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cbn::selection_probability;
use crate::data::InteractionDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probability of a social edge between any pair of synthetic users.
const SOCIAL_EDGE_PROB: f64 = 0.5;
/// Candidate draws allowed per requested interaction before a user is
/// abandoned (keeps generation finite when acceptance is low).
const DRAWS_PER_INTERACTION: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_users: usize,
    pub num_items: usize,
    pub num_topics: usize,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub mu2: f64,
    pub sigma2_sq: f64,
    pub interactions_per_user: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// A sparse lock-in regime: the negative social mean suppresses
    /// baseline acceptance, so each user's interactions concentrate on
    /// their high-interest topics and the per-user topic signal is strong.
    fn default() -> Self {
        SyntheticSpec {
            num_users: 200,
            num_items: 60,
            num_topics: 5,
            mu1: 5.0,
            sigma1_sq: 300.0,
            mu2: -5.0,
            sigma2_sq: 0.25,
            interactions_per_user: 30,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0
            || self.num_items == 0
            || self.num_topics == 0
            || self.interactions_per_user == 0
        {
            return Err(Error::InvalidParam("synthetic counts must be positive".into()));
        }
        if self.sigma1_sq <= 0.0 || self.sigma2_sq <= 0.0 {
            return Err(Error::InvalidParam("synthetic variances must be positive".into()));
        }
        Ok(())
    }
}

/// Generate a dataset plus the true interest and social matrices it was
/// sampled from.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(InteractionDataset, Matrix, Matrix)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.num_topics;

    let interest_prior = Normal::new(spec.mu1, spec.sigma1_sq.sqrt())
        .map_err(|e| Error::InvalidParam(e.to_string()))?;
    let social_prior = Normal::new(spec.mu2, spec.sigma2_sq.sqrt())
        .map_err(|e| Error::InvalidParam(e.to_string()))?;
    let true_interest =
        Matrix::from_fn(spec.num_users, d, |_, _| interest_prior.sample(&mut rng));
    let true_social = Matrix::from_fn(spec.num_users, d, |_, _| social_prior.sample(&mut rng));

    let topic_of_item: Vec<u32> = (0..spec.num_items)
        .map(|_| rng.random_range(0..d as u32))
        .collect();

    let mut social_edges = Vec::new();
    for a in 0..spec.num_users as u32 {
        for b in a + 1..spec.num_users as u32 {
            if rng.random_bool(SOCIAL_EDGE_PROB) {
                social_edges.push((a, b));
            }
        }
    }

    let mut interactions = Vec::new();
    let target = spec.interactions_per_user.min(spec.num_items);
    let max_draws = DRAWS_PER_INTERACTION * spec.interactions_per_user;
    for u in 0..spec.num_users {
        let mut taken = vec![false; spec.num_items];
        let mut total = 0usize;
        let mut per_topic = vec![0usize; d];
        let mut draws = 0usize;
        while total < target && draws < max_draws {
            draws += 1;
            let j = rng.random_range(0..spec.num_items);
            if taken[j] {
                continue;
            }
            let topic = topic_of_item[j] as usize;
            let rate = if total == 0 {
                1.0 / d as f64
            } else {
                per_topic[topic] as f64 / total as f64
            };
            let p = selection_probability(
                rate,
                true_interest.get(u, topic),
                true_social.get(u, topic),
            );
            if rng.random::<f64>() < p {
                taken[j] = true;
                interactions.push((u as u32, j as u32));
                per_topic[topic] += 1;
                total += 1;
            }
        }
    }
    interactions.sort_unstable();

    let ds = InteractionDataset {
        num_users: spec.num_users,
        num_items: spec.num_items,
        num_topics: d,
        interactions,
        social_edges,
        topic_of_item,
    };
    ds.validate()?;
    Ok((ds, true_interest, true_social))
}
