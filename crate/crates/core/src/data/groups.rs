//! Group construction by rejection sampling under a social-density floor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{count_internal_edges, Group, InteractionDataset};
use crate::error::{Error, Result};

/// Attempts per requested group before giving up.
pub const ATTEMPTS_PER_GROUP: usize = 1000;

/// Outcome of [`build_groups`]: possibly fewer groups than requested when
/// the attempt budget ran out.
#[derive(Debug, Clone)]
pub struct GroupBuild {
    pub groups: Vec<Group>,
    pub requested: usize,
    pub attempts: usize,
    pub budget: usize,
}

impl GroupBuild {
    /// Groups the sampler failed to find within the budget.
    pub fn shortfall(&self) -> usize {
        self.requested - self.groups.len()
    }
}

/// Sample `num_groups` random member sets of size `group_size`, keeping only
/// those whose social density is at least `min_density`. Budget exhaustion
/// yields a partial result, not an error.
pub fn build_groups(
    ds: &InteractionDataset,
    group_size: usize,
    num_groups: usize,
    min_density: f64,
    seed: u64,
) -> Result<GroupBuild> {
    if group_size < 2 {
        return Err(Error::InvalidParam("group_size must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&min_density) {
        return Err(Error::InvalidParam(
            "min_density must lie in [0, 1]".into(),
        ));
    }
    let budget = ATTEMPTS_PER_GROUP.saturating_mul(num_groups);
    let mut build = GroupBuild {
        groups: Vec::with_capacity(num_groups),
        requested: num_groups,
        attempts: 0,
        budget,
    };
    if group_size > ds.num_users {
        build.attempts = budget;
        return Ok(build);
    }

    let edges = ds.edge_set();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while build.groups.len() < num_groups && build.attempts < budget {
        build.attempts += 1;
        let mut members: Vec<u32> = rand::seq::index::sample(&mut rng, ds.num_users, group_size)
            .into_iter()
            .map(|u| u as u32)
            .collect();
        members.sort_unstable();
        let internal_edges = count_internal_edges(&members, &edges);
        let group = Group {
            members,
            internal_edges,
        };
        if group.social_density() >= min_density {
            build.groups.push(group);
        }
    }
    Ok(build)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset_with_edges(num_users: usize, edges: Vec<(u32, u32)>) -> InteractionDataset {
        InteractionDataset {
            num_users,
            num_items: 1,
            num_topics: 1,
            interactions: (0..num_users as u32).map(|u| (u, 0)).collect(),
            social_edges: edges,
            topic_of_item: vec![0],
        }
    }

    fn complete_graph(n: u32) -> Vec<(u32, u32)> {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        edges
    }

    #[test]
    fn complete_graph_always_accepts() {
        let ds = dataset_with_edges(10, complete_graph(10));
        let build = build_groups(&ds, 4, 5, 0.25, 7).unwrap();
        assert_eq!(build.groups.len(), 5);
        assert_eq!(build.attempts, 5);
        for g in &build.groups {
            assert_eq!(g.social_density(), 1.0);
        }
    }

    #[test]
    fn edgeless_graph_exhausts_budget() {
        let ds = dataset_with_edges(10, vec![]);
        let build = build_groups(&ds, 4, 3, 0.25, 7).unwrap();
        assert!(build.groups.is_empty());
        assert_eq!(build.shortfall(), 3);
        assert_eq!(build.attempts, build.budget);
    }

    #[test]
    fn deterministic_given_seed() {
        // 20 users, every other pair connected.
        let edges: Vec<(u32, u32)> = complete_graph(20)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 0)
            .map(|(_, e)| e)
            .collect();
        let ds = dataset_with_edges(20, edges);
        let a = build_groups(&ds, 5, 10, 0.25, 42).unwrap();
        let b = build_groups(&ds, 5, 10, 0.25, 42).unwrap();
        assert_eq!(a.groups, b.groups);
        assert_eq!(a.attempts, b.attempts);
        let c = build_groups(&ds, 5, 10, 0.25, 43).unwrap();
        assert_ne!(a.groups, c.groups);
    }

    #[test]
    fn density_recomputed_independently_holds() {
        let edges: Vec<(u32, u32)> = complete_graph(12)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i % 3 != 0)
            .map(|(_, e)| e)
            .collect();
        let ds = dataset_with_edges(12, edges.clone());
        let set: std::collections::HashSet<_> = edges.into_iter().collect();
        let build = build_groups(&ds, 4, 8, 0.25, 5).unwrap();
        assert!(!build.groups.is_empty());
        for g in &build.groups {
            // recount E_G from scratch and recompute the density formula
            let recount = count_internal_edges(&g.members, &set);
            assert_eq!(recount, g.internal_edges);
            let n = g.members.len() as f64;
            let density = 2.0 * recount as f64 / (n * (n - 1.0));
            assert!(density >= 0.25);
            assert!((0.0..=1.0).contains(&density));
        }
    }
}
