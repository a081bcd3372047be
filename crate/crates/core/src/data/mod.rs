//! Dataset representation, ingestion, filtering, splitting, group
//! construction, and the synthetic generator.

mod filter;
mod groups;
mod hetrec;
mod split;
mod synthetic;

pub use filter::filter_inactive;
pub use groups::{build_groups, GroupBuild};
pub use hetrec::{load_hetrec, IdMap, IngestStats};
pub use split::split;
pub use synthetic::{generate_synthetic, SyntheticSpec};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary implicit-feedback dataset with a social graph and one topic
/// indicator per item. User and item ids are dense 0-based indices; the
/// mapping back to the original opaque ids lives in [`IdMap`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionDataset {
    pub num_users: usize,
    pub num_items: usize,
    pub num_topics: usize,
    /// Sorted, unique (user, item) pairs; presence means B(user, item) = 1.
    pub interactions: Vec<(u32, u32)>,
    /// Sorted, unique undirected edges stored with the smaller id first.
    pub social_edges: Vec<(u32, u32)>,
    /// topic_of_item[j] is the topic indicator of item j, in [0, num_topics).
    pub topic_of_item: Vec<u32>,
}

impl InteractionDataset {
    /// Check the structural invariants; ingestion and the generators call
    /// this before handing a dataset out.
    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::InvalidParam("num_topics must be positive".into()));
        }
        if self.topic_of_item.len() != self.num_items {
            return Err(Error::InvalidParam(format!(
                "topic_of_item has {} entries for {} items",
                self.topic_of_item.len(),
                self.num_items
            )));
        }
        if let Some(t) = self.topic_of_item.iter().find(|t| **t as usize >= self.num_topics) {
            return Err(Error::InvalidParam(format!(
                "topic indicator {t} out of range [0, {})",
                self.num_topics
            )));
        }
        for &(u, j) in &self.interactions {
            if u as usize >= self.num_users || j as usize >= self.num_items {
                return Err(Error::InvalidParam(format!(
                    "interaction ({u}, {j}) out of range"
                )));
            }
        }
        for w in self.interactions.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParam("interactions not sorted unique".into()));
            }
        }
        for &(a, b) in &self.social_edges {
            if a >= b || b as usize >= self.num_users {
                return Err(Error::InvalidParam(format!("bad social edge ({a}, {b})")));
            }
        }
        for w in self.social_edges.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParam("social edges not sorted unique".into()));
            }
        }
        Ok(())
    }

    /// Items of each user, ascending, indexed by user id.
    pub fn items_by_user(&self) -> Vec<Vec<u32>> {
        let mut per_user = vec![Vec::new(); self.num_users];
        for &(u, j) in &self.interactions {
            per_user[u as usize].push(j);
        }
        per_user
    }

    /// Interaction count per user.
    pub fn interaction_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_users];
        for &(u, _) in &self.interactions {
            counts[u as usize] += 1;
        }
        counts
    }

    pub fn edge_set(&self) -> HashSet<(u32, u32)> {
        self.social_edges.iter().copied().collect()
    }

    pub fn topic_of(&self, item: u32) -> u32 {
        self.topic_of_item[item as usize]
    }

    /// Replace the interaction set, keeping everything else.
    pub(crate) fn with_interactions(&self, mut interactions: Vec<(u32, u32)>) -> Self {
        interactions.sort_unstable();
        InteractionDataset {
            interactions,
            ..self.clone()
        }
    }
}

/// A group of users together with the count of social edges observed
/// between its members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub members: Vec<u32>,
    pub internal_edges: usize,
}

impl Group {
    /// Build a group from members, counting internal edges against `ds`.
    pub fn from_members(members: Vec<u32>, ds: &InteractionDataset) -> Self {
        let edges = ds.edge_set();
        let internal_edges = count_internal_edges(&members, &edges);
        Group {
            members,
            internal_edges,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// 2 E_G / (|G| (|G| - 1)), in [0, 1].
    pub fn social_density(&self) -> f64 {
        let n = self.members.len();
        if n < 2 {
            return 0.0;
        }
        2.0 * self.internal_edges as f64 / (n as f64 * (n as f64 - 1.0))
    }
}

pub(crate) fn count_internal_edges(members: &[u32], edges: &HashSet<(u32, u32)>) -> usize {
    let mut count = 0;
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            let key = if a < b { (a, b) } else { (b, a) };
            if edges.contains(&key) {
                count += 1;
            }
        }
    }
    count
}

/// Disjoint train/test partition of a dataset's interaction set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: InteractionDataset,
    pub test: InteractionDataset,
    pub train_fraction: f64,
}
