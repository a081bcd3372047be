//! Training behavior on synthetic data that unit tests are too small for.

use saiot_gr::cbn::{example_gradients, example_loss, train, CbnHyperparams, CbnModel, TrainingExample};
use saiot_gr::data::{generate_synthetic, SyntheticSpec};
use saiot_gr::matrix::Matrix;

/// The epoch-mean objective is non-increasing for at least 90% of
/// consecutive epoch pairs (per-epoch negative resampling adds noise).
#[test]
fn objective_decreases_on_average() {
    let spec = SyntheticSpec {
        num_users: 80,
        num_items: 50,
        num_topics: 4,
        interactions_per_user: 12,
        seed: 5,
        ..SyntheticSpec::default()
    };
    let (ds, _, _) = generate_synthetic(&spec).unwrap();
    let hp = CbnHyperparams {
        mu1: spec.mu1,
        sigma1_sq: spec.sigma1_sq,
        mu2: spec.mu2,
        sigma2_sq: spec.sigma2_sq,
        learning_rate: 0.02,
        convergence_threshold: 1e-9,
        max_epochs: 60,
        negative_ratio: 1.0,
        seed: 17,
    };
    let (_, report) = train(&ds, &hp).unwrap();
    assert!(report.objective_trace.len() >= 30);
    let pairs = report.objective_trace.windows(2).count();
    let non_increasing = report
        .objective_trace
        .windows(2)
        .filter(|w| w[1] <= w[0] + 1e-12)
        .count();
    let fraction = non_increasing as f64 / pairs as f64;
    assert!(
        fraction >= 0.9,
        "objective decreased in only {:.0}% of epoch pairs",
        fraction * 100.0
    );
    assert!(report.objective_trace.iter().all(|j| j.is_finite()));
}

/// Gradients match central finite differences on a long randomized sweep;
/// the same oracle as the acceptance suite but over the library API alone.
#[test]
fn gradient_matches_finite_differences() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    for _ in 0..1000 {
        let hp = CbnHyperparams {
            mu1: rng.random_range(-3.0..3.0),
            sigma1_sq: rng.random_range(0.5..5.0),
            mu2: rng.random_range(-2.0..2.0),
            sigma2_sq: rng.random_range(0.1..1.0),
            ..CbnHyperparams::default()
        };
        let interest = rng.random_range(-6.0..6.0);
        let social = rng.random_range(-3.0..3.0);
        let rate = rng.random_range(0.0..=1.0);
        let label = u8::from(rng.random_bool(0.5));
        let ex = TrainingExample {
            user: 0,
            item: 0,
            topic: 0,
            label,
        };
        let model_at = |i: f64, s: f64| CbnModel {
            num_users: 1,
            num_topics: 1,
            interest: Matrix::filled(1, 1, i),
            social: Matrix::filled(1, 1, s),
            rates: Matrix::filled(1, 1, rate),
            hyperparams: hp.clone(),
        };
        let (gi, gs) = example_gradients(&ex, &model_at(interest, social), &hp);
        let fd_i = (example_loss(&ex, &model_at(interest + h, social), &hp)
            - example_loss(&ex, &model_at(interest - h, social), &hp))
            / (2.0 * h);
        let fd_s = (example_loss(&ex, &model_at(interest, social + h), &hp)
            - example_loss(&ex, &model_at(interest, social - h), &hp))
            / (2.0 * h);
        for (analytic, numeric) in [(gi, fd_i), (gs, fd_s)] {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "relative error {rel} at I={interest} S={social} rate={rate} y={label}");
        }
    }
}

/// Training a model and reloading it from JSON yields the same vectors.
#[test]
fn trained_model_round_trips_through_json() {
    let spec = SyntheticSpec {
        num_users: 30,
        num_items: 30,
        num_topics: 3,
        interactions_per_user: 8,
        seed: 40,
        ..SyntheticSpec::default()
    };
    let (ds, _, _) = generate_synthetic(&spec).unwrap();
    let hp = CbnHyperparams {
        max_epochs: 15,
        convergence_threshold: 1e-9,
        seed: 3,
        ..CbnHyperparams::default()
    };
    let (model, _) = train(&ds, &hp).unwrap();
    let text = model.to_json().unwrap();
    let restored = saiot_gr::cbn::CbnModel::from_json(&text).unwrap();
    assert_eq!(model, restored);
}
