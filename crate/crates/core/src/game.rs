//! Non-cooperative topic game and its equilibrium search.
//!
//! Each group member plays one topic as their strategy. Profit is the
//! member's normalized interest in the chosen topic diluted by how many
//! members chose the same topic; cost grows with social pressure against
//! the choice; utility is the trade-off-weighted difference. Sequential
//! best-response dynamics run until no member wants to move, and the
//! resulting strategy counts become the group's topic-ratio
//! recommendation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cbn::CbnModel;
use crate::data::Group;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Cost trade-off weight.
    pub eta1: f64,
    /// Utility trade-off weight.
    pub eta2: f64,
    /// Cost exponent.
    pub exponent: f64,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            eta1: 0.6,
            eta2: 0.4,
            exponent: 2.0,
            max_rounds: 100,
            seed: 0,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta1 < 0.0 {
            return Err(Error::InvalidParam("eta1 must be nonnegative".into()));
        }
        if self.eta2 <= 0.0 {
            return Err(Error::InvalidParam("eta2 must be positive".into()));
        }
        if self.exponent <= 0.0 {
            return Err(Error::InvalidParam("exponent must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParam("max_rounds must be positive".into()));
        }
        Ok(())
    }
}

/// Interest and social matrices min-max rescaled into [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedModel {
    pub interest: Matrix,
    pub social: Matrix,
}

impl NormalizedModel {
    pub fn num_topics(&self) -> usize {
        self.interest.cols()
    }
}

/// Strategies of the members of one group, indexed like `Group::members`,
/// plus the best-response round that produced them (0 = initial profile).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub strategies: Vec<u32>,
    pub round: usize,
}

impl StrategyProfile {
    /// Initial profile: every member on their highest normalized interest,
    /// ties toward the smallest topic index.
    pub fn initial(members: &[u32], norm: &NormalizedModel) -> Self {
        StrategyProfile {
            strategies: members
                .iter()
                .map(|&m| argmax_row(norm.interest.row(m as usize)))
                .collect(),
            round: 0,
        }
    }
}

/// A finished equilibrium search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub strategies: Vec<u32>,
    pub utilities: Vec<f64>,
    pub converged: bool,
    pub rounds_used: usize,
}

/// Nonnegative topic ratios summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution(pub Vec<f64>);

impl TopicDistribution {
    /// Normalize raw nonnegative counts; an all-zero vector becomes uniform.
    pub fn from_counts(counts: &[f64]) -> Self {
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            let d = counts.len();
            return TopicDistribution(vec![1.0 / d as f64; d]);
        }
        TopicDistribution(counts.iter().map(|c| c / total).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn min_max_rescale(m: &Matrix) -> Matrix {
    let (min, max) = m.extent().unwrap_or((0.0, 0.0));
    if max == min {
        return Matrix::filled(m.rows(), m.cols(), 0.5);
    }
    let span = max - min;
    Matrix::from_fn(m.rows(), m.cols(), |r, c| (m.get(r, c) - min) / span)
}

/// Rescale both latent matrices into [0, 1] by a global min-max per
/// matrix. A constant matrix maps to all 0.5.
pub fn normalize(model: &CbnModel) -> NormalizedModel {
    NormalizedModel {
        interest: min_max_rescale(&model.interest),
        social: min_max_rescale(&model.social),
    }
}

fn count_playing(strategies: &[u32], topic: u32) -> usize {
    strategies.iter().filter(|&&s| s == topic).count()
}

/// Profit of member `i` under the profile: their normalized interest in
/// their chosen topic divided by how many members chose it (including
/// themselves, so the divisor is never zero).
pub fn profit(norm: &NormalizedModel, members: &[u32], strategies: &[u32], i: usize) -> f64 {
    let topic = strategies[i];
    let crowd = count_playing(strategies, topic);
    norm.interest.get(members[i] as usize, topic as usize) / crowd as f64
}

/// Cost for member `i` of committing to `topic`:
/// eta1 * (S_N + 1 - I_N)^n on that member's row.
pub fn cost(norm: &NormalizedModel, cfg: &GameConfig, member: u32, topic: u32) -> f64 {
    let u = member as usize;
    let t = topic as usize;
    let base = norm.social.get(u, t) + 1.0 - norm.interest.get(u, t);
    cfg.eta1 * base.powf(cfg.exponent)
}

/// Utility of member `i` under the profile: eta2 * (profit - cost).
pub fn utility(
    norm: &NormalizedModel,
    cfg: &GameConfig,
    members: &[u32],
    strategies: &[u32],
    i: usize,
) -> f64 {
    cfg.eta2 * base_utility(norm, cfg, members, strategies, i)
}

/// Profit minus cost, before the eta2 scaling. Best responses compare this
/// quantity directly, which makes them independent of eta2 by construction.
fn base_utility(
    norm: &NormalizedModel,
    cfg: &GameConfig,
    members: &[u32],
    strategies: &[u32],
    i: usize,
) -> f64 {
    profit(norm, members, strategies, i) - cost(norm, cfg, members[i], strategies[i])
}

/// Candidate score for member `i` switching to `topic`, with the crowd
/// count recomputed as if they had moved.
fn deviation_base_utility(
    norm: &NormalizedModel,
    cfg: &GameConfig,
    members: &[u32],
    strategies: &[u32],
    i: usize,
    topic: u32,
) -> f64 {
    let others = count_playing(strategies, topic) - usize::from(strategies[i] == topic);
    let interest = norm.interest.get(members[i] as usize, topic as usize);
    interest / (others + 1) as f64 - cost(norm, cfg, members[i], topic)
}

/// The utility-maximizing topic for member `i` holding everyone else
/// fixed; ties break toward the smallest topic index.
pub fn best_response(
    norm: &NormalizedModel,
    cfg: &GameConfig,
    members: &[u32],
    strategies: &[u32],
    i: usize,
) -> u32 {
    let mut best = 0u32;
    let mut best_score = f64::NEG_INFINITY;
    for topic in 0..norm.num_topics() as u32 {
        let score = deviation_base_utility(norm, cfg, members, strategies, i, topic);
        if score > best_score {
            best_score = score;
            best = topic;
        }
    }
    best
}

fn argmax_row(row: &[f64]) -> u32 {
    let mut best = 0usize;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best as u32
}

fn total_utility(
    norm: &NormalizedModel,
    cfg: &GameConfig,
    members: &[u32],
    strategies: &[u32],
) -> f64 {
    (0..members.len())
        .map(|i| base_utility(norm, cfg, members, strategies, i))
        .sum()
}

/// Run sequential best-response dynamics for one group.
///
/// Members start on their highest normalized interest and respond in a
/// seeded random order each round. Convergence means a full round with no
/// strategy change; if `max_rounds` runs out, the best profile seen (by
/// total utility) is returned with `converged` false.
pub fn find_equilibrium(
    group: &Group,
    norm: &NormalizedModel,
    cfg: &GameConfig,
) -> Result<Equilibrium> {
    cfg.validate()?;
    if group.is_empty() {
        return Err(Error::InvalidParam("group has no members".into()));
    }
    let members = &group.members;
    if let Some(&m) = members.iter().find(|&&m| m as usize >= norm.interest.rows()) {
        return Err(Error::InvalidParam(format!(
            "group member {m} outside the trained model"
        )));
    }

    let mut profile = StrategyProfile::initial(members, norm);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..members.len()).collect();
    let mut best_seen = profile.strategies.clone();
    let mut best_total = total_utility(norm, cfg, members, &profile.strategies);
    let mut converged = false;

    for round in 1..=cfg.max_rounds {
        profile.round = round;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &i in &order {
            let response = best_response(norm, cfg, members, &profile.strategies, i);
            if response != profile.strategies[i] {
                profile.strategies[i] = response;
                changed = true;
            }
        }
        let total = total_utility(norm, cfg, members, &profile.strategies);
        if total > best_total {
            best_total = total;
            best_seen = profile.strategies.clone();
        }
        if !changed {
            converged = true;
            break;
        }
    }

    let rounds_used = profile.round;
    let final_strategies = if converged {
        profile.strategies
    } else {
        best_seen
    };
    let utilities = (0..members.len())
        .map(|i| utility(norm, cfg, members, &final_strategies, i))
        .collect();
    Ok(Equilibrium {
        strategies: final_strategies,
        utilities,
        converged,
        rounds_used,
    })
}

/// Topic ratios of an equilibrium profile: the fraction of members settled
/// on each topic.
pub fn recommend(eq: &Equilibrium, num_topics: usize) -> TopicDistribution {
    let mut counts = vec![0.0; num_topics];
    for &s in &eq.strategies {
        counts[s as usize] += 1.0;
    }
    TopicDistribution::from_counts(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbn::CbnHyperparams;

    fn norm_from(interest: Vec<Vec<f64>>, social: Vec<Vec<f64>>) -> NormalizedModel {
        NormalizedModel {
            interest: Matrix::from_rows(interest),
            social: Matrix::from_rows(social),
        }
    }

    fn group_of(members: Vec<u32>) -> Group {
        Group {
            members,
            internal_edges: 0,
        }
    }

    #[test]
    fn normalize_min_max() {
        let model = CbnModel {
            num_users: 1,
            num_topics: 3,
            interest: Matrix::from_rows(vec![vec![0.0, 5.0, 10.0]]),
            social: Matrix::filled(1, 3, 2.0),
            rates: Matrix::filled(1, 3, 1.0 / 3.0),
            hyperparams: CbnHyperparams::default(),
        };
        let norm = normalize(&model);
        assert_eq!(norm.interest.row(0), &[0.0, 0.5, 1.0]);
        // constant matrix degenerates to 0.5
        assert_eq!(norm.social.row(0), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn normalize_output_in_unit_range() {
        let model = CbnModel {
            num_users: 2,
            num_topics: 2,
            interest: Matrix::from_rows(vec![vec![-7.5, 3.0], vec![44.0, 0.1]]),
            social: Matrix::from_rows(vec![vec![1.0, -1.0], vec![0.0, 9.0]]),
            rates: Matrix::filled(2, 2, 0.5),
            hyperparams: CbnHyperparams::default(),
        };
        let norm = normalize(&model);
        for &v in norm.interest.values().iter().chain(norm.social.values()) {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn profit_dilutes_with_congestion() {
        let norm = norm_from(
            vec![vec![0.8, 0.2], vec![0.8, 0.3]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        );
        let members = [0u32, 1u32];
        // alone on topic 0
        assert_eq!(profit(&norm, &members, &[0, 1], 0), 0.8);
        // sharing topic 0
        assert_eq!(profit(&norm, &members, &[0, 0], 0), 0.4);
        // zero interest earns zero regardless of the crowd
        let zero = norm_from(vec![vec![0.0, 1.0]], vec![vec![0.0, 0.0]]);
        assert_eq!(profit(&zero, &[0], &[0], 0), 0.0);
    }

    #[test]
    fn cost_formula() {
        let cfg = GameConfig::default();
        let norm = norm_from(vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]);
        // S_N = 0, I_N = 1: base 0
        assert_eq!(cost(&norm, &cfg, 0, 0), 0.0);
        // S_N = 1, I_N = 0, eta1 = 0.6, n = 2: 0.6 * 2^2
        assert!((cost(&norm, &cfg, 0, 1) - 2.4).abs() < 1e-12);
        let free = GameConfig {
            eta1: 0.0,
            ..GameConfig::default()
        };
        assert_eq!(cost(&norm, &free, 0, 1), 0.0);
    }

    #[test]
    fn utility_scales_profit_minus_cost() {
        // X = 0.4 (alone on the topic), M = eta1 * (0 + 1 - 0.4)^2 = 0.1,
        // H = 0.4 * (0.4 - 0.1) = 0.12
        let cfg = GameConfig {
            eta1: 0.1 / 0.36,
            eta2: 0.4,
            ..GameConfig::default()
        };
        let norm = norm_from(vec![vec![0.4, 0.0]], vec![vec![0.0, 0.0]]);
        let h = utility(&norm, &cfg, &[0], &[0], 0);
        assert!((h - 0.12).abs() < 1e-12);

        // X == M gives zero utility
        let cfg2 = GameConfig {
            eta1: 1.0,
            eta2: 0.4,
            exponent: 1.0,
            ..GameConfig::default()
        };
        // I_N = 0.5, S_N = 0: X = 0.5, M = 1 * (0 + 1 - 0.5) = 0.5
        let even = norm_from(vec![vec![0.5]], vec![vec![0.0]]);
        assert!(utility(&even, &cfg2, &[0], &[0], 0).abs() < 1e-12);
    }

    #[test]
    fn single_topic_best_response() {
        let norm = norm_from(vec![vec![0.3]], vec![vec![0.9]]);
        let cfg = GameConfig::default();
        assert_eq!(best_response(&norm, &cfg, &[0], &[0], 0), 0);
    }

    #[test]
    fn dominant_interest_wins() {
        let norm = norm_from(
            vec![vec![1.0, 0.0, 0.0]],
            vec![vec![0.2, 0.2, 0.2]],
        );
        let cfg = GameConfig::default();
        assert_eq!(best_response(&norm, &cfg, &[0], &[1], 0), 0);
    }

    #[test]
    fn best_response_beats_every_alternative() {
        let norm = norm_from(
            vec![vec![0.9, 0.4, 0.6], vec![0.8, 0.7, 0.1], vec![0.2, 0.9, 0.5]],
            vec![vec![0.1, 0.5, 0.3], vec![0.6, 0.2, 0.4], vec![0.3, 0.3, 0.9]],
        );
        let cfg = GameConfig::default();
        let members = [0u32, 1, 2];
        let strategies = [2u32, 0, 1];
        for i in 0..3 {
            let choice = best_response(&norm, &cfg, &members, &strategies, i);
            let mut moved = strategies;
            moved[i] = choice;
            let chosen_utility = utility(&norm, &cfg, &members, &moved, i);
            for alt in 0..3u32 {
                let mut alt_profile = strategies;
                alt_profile[i] = alt;
                let alt_utility = utility(&norm, &cfg, &members, &alt_profile, i);
                assert!(
                    chosen_utility >= alt_utility,
                    "member {i}: topic {choice} loses to {alt}"
                );
            }
        }
    }

    #[test]
    fn eta2_does_not_change_best_response() {
        let norm = norm_from(
            vec![vec![0.9, 0.41, 0.6], vec![0.35, 0.7, 0.12]],
            vec![vec![0.15, 0.5, 0.3], vec![0.6, 0.22, 0.4]],
        );
        let members = [0u32, 1];
        let strategies = [1u32, 2];
        let mut picks = Vec::new();
        for eta2 in [0.1, 0.4, 1.0, 10.0] {
            let cfg = GameConfig {
                eta2,
                ..GameConfig::default()
            };
            picks.push(best_response(&norm, &cfg, &members, &strategies, 0));
        }
        assert!(picks.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn shared_favorite_is_equilibrium_in_two_by_two() {
        // both members love topic 0, costs disabled: sharing still beats
        // moving to a worthless topic (0.5 vs 0.0)
        let norm = norm_from(
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        );
        let cfg = GameConfig {
            eta1: 0.0,
            ..GameConfig::default()
        };
        let group = group_of(vec![0, 1]);
        let eq = find_equilibrium(&group, &norm, &cfg).unwrap();
        assert!(eq.converged);
        assert_eq!(eq.strategies, vec![0, 0]);
        // hand-checked payoff table: each member gets 0.5 on (0,0); a
        // deviation to topic 1 pays 0
        for i in 0..2 {
            for alt in 0..2u32 {
                let mut moved = eq.strategies.clone();
                moved[i] = alt;
                assert!(
                    utility(&norm, &cfg, &group.members, &moved, i)
                        <= utility(&norm, &cfg, &group.members, &eq.strategies, i)
                );
            }
        }
    }

    #[test]
    fn singleton_group_converges_immediately() {
        let norm = norm_from(vec![vec![0.1, 0.9, 0.3]], vec![vec![0.5, 0.1, 0.4]]);
        let cfg = GameConfig::default();
        let eq = find_equilibrium(&group_of(vec![0]), &norm, &cfg).unwrap();
        assert!(eq.converged);
        assert!(eq.rounds_used <= 2);
        assert_eq!(eq.strategies, vec![1]);
    }

    #[test]
    fn equilibrium_is_deviation_free() {
        let norm = norm_from(
            vec![
                vec![0.9, 0.5, 0.1, 0.7],
                vec![0.85, 0.6, 0.2, 0.1],
                vec![0.3, 0.8, 0.75, 0.2],
                vec![0.4, 0.45, 0.5, 0.55],
            ],
            vec![
                vec![0.2, 0.3, 0.6, 0.1],
                vec![0.5, 0.1, 0.2, 0.8],
                vec![0.4, 0.2, 0.3, 0.3],
                vec![0.6, 0.5, 0.1, 0.2],
            ],
        );
        let cfg = GameConfig::default();
        let group = group_of(vec![0, 1, 2, 3]);
        let eq = find_equilibrium(&group, &norm, &cfg).unwrap();
        assert!(eq.converged);
        for i in 0..group.len() {
            let current = utility(&norm, &cfg, &group.members, &eq.strategies, i);
            for alt in 0..4u32 {
                if alt == eq.strategies[i] {
                    continue;
                }
                let mut moved = eq.strategies.clone();
                moved[i] = alt;
                let deviated = utility(&norm, &cfg, &group.members, &moved, i);
                assert!(deviated <= current, "member {i} improves by moving to {alt}");
            }
        }
    }

    #[test]
    fn equilibrium_deterministic() {
        let norm = norm_from(
            vec![vec![0.9, 0.8], vec![0.85, 0.8], vec![0.8, 0.81]],
            vec![vec![0.1, 0.2], vec![0.3, 0.1], vec![0.2, 0.2]],
        );
        let cfg = GameConfig {
            seed: 5,
            ..GameConfig::default()
        };
        let group = group_of(vec![0, 1, 2]);
        let a = find_equilibrium(&group, &norm, &cfg).unwrap();
        let b = find_equilibrium(&group, &norm, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recommend_counts_strategies() {
        let eq = Equilibrium {
            strategies: vec![0, 0, 1, 2],
            utilities: vec![0.0; 4],
            converged: true,
            rounds_used: 1,
        };
        let dist = recommend(&eq, 3);
        assert_eq!(dist.as_slice(), &[0.5, 0.25, 0.25]);
        let sum: f64 = dist.as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);

        let unanimous = Equilibrium {
            strategies: vec![2, 2, 2],
            utilities: vec![0.0; 3],
            converged: true,
            rounds_used: 1,
        };
        assert_eq!(recommend(&unanimous, 4).as_slice(), &[0.0, 0.0, 1.0, 0.0]);
    }
}
