//! Negative sampling and the SGD training loop.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cbn::{
    contribution_rates, example_gradients, example_loss, CbnHyperparams, CbnModel,
    TrainingExample,
};
use crate::data::InteractionDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean per-example objective after the last epoch.
    pub final_objective: f64,
    /// Mean objective at initialization followed by one entry per epoch,
    /// always evaluated on the same fixed example set so consecutive
    /// entries are comparable.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

/// Sample `ceil(ratio * positives(user))` non-interacted items per user,
/// uniformly without replacement, as label-0 examples.
pub fn sample_negatives(
    train: &InteractionDataset,
    ratio: f64,
    seed: u64,
) -> Vec<TrainingExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_negatives_rng(train, &train.items_by_user(), ratio, &mut rng)
}

pub(crate) fn sample_negatives_rng(
    train: &InteractionDataset,
    items_by_user: &[Vec<u32>],
    ratio: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<TrainingExample> {
    let mut negatives = Vec::new();
    if ratio <= 0.0 {
        return negatives;
    }
    for (u, positives) in items_by_user.iter().enumerate() {
        let available = train.num_items - positives.len();
        let wanted = ((ratio * positives.len() as f64).ceil() as usize).min(available);
        if wanted == 0 {
            continue;
        }
        let positive_set: std::collections::HashSet<u32> = positives.iter().copied().collect();
        let items = if wanted * 2 >= available {
            // dense user: enumerate the complement and sample from it
            let complement: Vec<u32> = (0..train.num_items as u32)
                .filter(|j| !positive_set.contains(j))
                .collect();
            rand::seq::index::sample(rng, complement.len(), wanted)
                .into_iter()
                .map(|k| complement[k])
                .collect::<Vec<_>>()
        } else {
            // sparse user: rejection-sample directly from the item range
            let mut chosen = std::collections::HashSet::with_capacity(wanted);
            let mut items = Vec::with_capacity(wanted);
            while items.len() < wanted {
                let j = rng.random_range(0..train.num_items as u32);
                if !positive_set.contains(&j) && chosen.insert(j) {
                    items.push(j);
                }
            }
            items
        };
        for j in items {
            negatives.push(TrainingExample {
                user: u as u32,
                item: j,
                topic: train.topic_of(j),
                label: 0,
            });
        }
    }
    negatives
}

fn positive_examples(train: &InteractionDataset) -> Vec<TrainingExample> {
    train
        .interactions
        .iter()
        .map(|&(u, j)| TrainingExample {
            user: u,
            item: j,
            topic: train.topic_of(j),
            label: 1,
        })
        .collect()
}

fn mean_loss(examples: &[TrainingExample], model: &CbnModel, hp: &CbnHyperparams) -> f64 {
    let total: f64 = examples.iter().map(|ex| example_loss(ex, model, hp)).sum();
    total / examples.len() as f64
}

/// Fit interest and social matrices by per-example SGD.
///
/// Parameters start at the prior means. Every epoch draws a fresh negative
/// sample, shuffles it together with the positives, and applies one
/// gradient step per example. The objective is tracked on a fixed
/// evaluation set (the positives plus one held negative draw) so that
/// consecutive epochs are comparable; training stops when it moves less
/// than the convergence threshold between epochs.
pub fn train(
    train: &InteractionDataset,
    hp: &CbnHyperparams,
) -> Result<(CbnModel, TrainReport)> {
    hp.validate()?;
    if train.interactions.is_empty() {
        return Err(Error::Empty("training input".into()));
    }

    let items_by_user = train.items_by_user();
    let positives = positive_examples(train);
    let mut model = CbnModel {
        num_users: train.num_users,
        num_topics: train.num_topics,
        interest: Matrix::filled(train.num_users, train.num_topics, hp.mu1),
        social: Matrix::filled(train.num_users, train.num_topics, hp.mu2),
        rates: contribution_rates(train),
        hyperparams: hp.clone(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut eval_set = positives.clone();
    eval_set.extend(sample_negatives_rng(
        train,
        &items_by_user,
        hp.negative_ratio,
        &mut rng,
    ));

    let mut report = TrainReport {
        epochs_run: 0,
        final_objective: f64::NAN,
        objective_trace: vec![mean_loss(&eval_set, &model, hp)],
        converged: false,
    };
    let mut previous = report.objective_trace[0];

    for epoch in 1..=hp.max_epochs {
        let mut examples = positives.clone();
        examples.extend(sample_negatives_rng(
            train,
            &items_by_user,
            hp.negative_ratio,
            &mut rng,
        ));
        examples.shuffle(&mut rng);

        for ex in &examples {
            let (d_interest, d_social) = example_gradients(ex, &model, hp);
            let u = ex.user as usize;
            let t = ex.topic as usize;
            model.interest.add(u, t, -hp.learning_rate * d_interest);
            model.social.add(u, t, -hp.learning_rate * d_social);
        }

        let objective = mean_loss(&eval_set, &model, hp);
        if !objective.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        report.objective_trace.push(objective);
        report.epochs_run = epoch;
        report.final_objective = objective;
        if (objective - previous).abs() < hp.convergence_threshold {
            report.converged = true;
            break;
        }
        previous = objective;
    }

    if !model.interest.is_finite() || !model.social.is_finite() {
        return Err(Error::Diverged {
            epoch: report.epochs_run,
        });
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dataset() -> InteractionDataset {
        // 4 users, 12 items, 3 topics; users favour distinct topics
        let topic_of_item: Vec<u32> = (0..12).map(|j| j % 3).collect();
        let mut interactions = Vec::new();
        for u in 0..4u32 {
            for j in 0..12u32 {
                if topic_of_item[j as usize] == u % 3 {
                    interactions.push((u, j));
                }
            }
        }
        InteractionDataset {
            num_users: 4,
            num_items: 12,
            num_topics: 3,
            interactions,
            social_edges: vec![],
            topic_of_item,
        }
    }

    #[test]
    fn negatives_avoid_positives() {
        let ds = small_dataset();
        let negs = sample_negatives(&ds, 1.0, 9);
        let positives: std::collections::HashSet<_> = ds.interactions.iter().copied().collect();
        // each user has 4 positives and 8 candidates: expect 4 negatives each
        assert_eq!(negs.len(), 16);
        for n in &negs {
            assert_eq!(n.label, 0);
            assert!(!positives.contains(&(n.user, n.item)));
            assert_eq!(n.topic, ds.topic_of(n.item));
        }
        // without replacement
        let unique: std::collections::HashSet<_> =
            negs.iter().map(|n| (n.user, n.item)).collect();
        assert_eq!(unique.len(), negs.len());
    }

    #[test]
    fn ratio_zero_is_empty() {
        assert!(sample_negatives(&small_dataset(), 0.0, 1).is_empty());
    }

    #[test]
    fn saturated_user_gets_no_negatives() {
        let ds = InteractionDataset {
            num_users: 1,
            num_items: 3,
            num_topics: 1,
            interactions: vec![(0, 0), (0, 1), (0, 2)],
            social_edges: vec![],
            topic_of_item: vec![0, 0, 0],
        };
        assert!(sample_negatives(&ds, 1.0, 1).is_empty());
    }

    #[test]
    fn negatives_deterministic_per_seed() {
        let ds = small_dataset();
        assert_eq!(sample_negatives(&ds, 1.5, 4), sample_negatives(&ds, 1.5, 4));
        assert_ne!(sample_negatives(&ds, 1.5, 4), sample_negatives(&ds, 1.5, 5));
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let hp = CbnHyperparams {
            learning_rate: 0.0,
            max_epochs: 3,
            convergence_threshold: 1e-30,
            ..CbnHyperparams::default()
        };
        let (model, _) = train(&small_dataset(), &hp).unwrap();
        assert!(model.interest.values().iter().all(|&v| v == hp.mu1));
        assert!(model.social.values().iter().all(|&v| v == hp.mu2));
    }

    #[test]
    fn huge_threshold_converges_after_one_epoch() {
        let hp = CbnHyperparams {
            convergence_threshold: 1e9,
            ..CbnHyperparams::default()
        };
        let (_, report) = train(&small_dataset(), &hp).unwrap();
        assert_eq!(report.epochs_run, 1);
        assert!(report.converged);
        // initial evaluation plus the first epoch
        assert_eq!(report.objective_trace.len(), 2);
    }

    #[test]
    fn tight_priors_pin_parameters_to_means() {
        // SGD on the quadratic prior is stable for learning_rate < 2 sigma^2,
        // and the equilibrium deviation is about sigma^2 * likelihood-gradient
        let hp = CbnHyperparams {
            mu1: 1.25,
            sigma1_sq: 1e-4,
            mu2: -0.75,
            sigma2_sq: 1e-4,
            learning_rate: 1e-4,
            max_epochs: 100,
            convergence_threshold: 1e-9,
            ..CbnHyperparams::default()
        };
        let (model, _) = train(&small_dataset(), &hp).unwrap();
        for &v in model.interest.values() {
            assert!((v - hp.mu1).abs() < 1e-3, "interest drifted to {v}");
        }
        for &v in model.social.values() {
            assert!((v - hp.mu2).abs() < 1e-3, "social drifted to {v}");
        }
    }

    #[test]
    fn empty_dataset_is_error() {
        let ds = InteractionDataset {
            num_users: 1,
            num_items: 1,
            num_topics: 1,
            interactions: vec![],
            social_edges: vec![],
            topic_of_item: vec![0],
        };
        assert!(train(&ds, &CbnHyperparams::default()).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let hp = CbnHyperparams {
            max_epochs: 5,
            convergence_threshold: 1e-12,
            seed: 21,
            ..CbnHyperparams::default()
        };
        let ds = small_dataset();
        let (a, ra) = train(&ds, &hp).unwrap();
        let (b, rb) = train(&ds, &hp).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }
}
