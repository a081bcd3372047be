//! Inactive-user filtering.

use crate::data::InteractionDataset;
use crate::error::{Error, Result};

/// Drop users with fewer than `min_interactions` interactions, repeating
/// until a fixed point, and re-densify user indices. Items are kept even if
/// they lose all their interactions.
pub fn filter_inactive(
    ds: &InteractionDataset,
    min_interactions: usize,
) -> Result<InteractionDataset> {
    if min_interactions < 1 {
        return Err(Error::InvalidParam(
            "min_interactions must be at least 1".into(),
        ));
    }
    let mut current = ds.clone();
    loop {
        let counts = current.interaction_counts();
        if counts.iter().all(|&c| c >= min_interactions) {
            break;
        }
        let mut remap: Vec<Option<u32>> = vec![None; current.num_users];
        let mut kept = 0u32;
        for (u, &c) in counts.iter().enumerate() {
            if c >= min_interactions {
                remap[u] = Some(kept);
                kept += 1;
            }
        }
        let interactions = current
            .interactions
            .iter()
            .filter_map(|&(u, j)| remap[u as usize].map(|nu| (nu, j)))
            .collect::<Vec<_>>();
        let mut social_edges = current
            .social_edges
            .iter()
            .filter_map(|&(a, b)| match (remap[a as usize], remap[b as usize]) {
                (Some(na), Some(nb)) => Some((na.min(nb), na.max(nb))),
                _ => None,
            })
            .collect::<Vec<_>>();
        social_edges.sort_unstable();
        current = InteractionDataset {
            num_users: kept as usize,
            interactions,
            social_edges,
            ..current
        };
    }
    if current.num_users == 0 || current.interactions.is_empty() {
        return Err(Error::Empty(format!(
            "filtering at threshold {min_interactions}"
        )));
    }
    current.validate()?;
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Users 0..3 with 5, 3 and 1 interactions over 9 items; one edge per pair.
    fn counted_dataset() -> InteractionDataset {
        let mut interactions = Vec::new();
        for j in 0..5 {
            interactions.push((0, j));
        }
        for j in 5..8 {
            interactions.push((1, j));
        }
        interactions.push((2, 8));
        InteractionDataset {
            num_users: 3,
            num_items: 9,
            num_topics: 3,
            interactions,
            social_edges: vec![(0, 1), (0, 2), (1, 2)],
            topic_of_item: vec![0, 1, 2, 0, 1, 2, 0, 1, 2],
        }
    }

    #[test]
    fn drops_below_threshold() {
        let out = filter_inactive(&counted_dataset(), 2).unwrap();
        assert_eq!(out.num_users, 2);
        assert_eq!(out.interaction_counts(), vec![5, 3]);
        assert_eq!(out.social_edges, vec![(0, 1)]);
        // items are kept regardless
        assert_eq!(out.num_items, 9);
        out.validate().unwrap();
    }

    #[test]
    fn threshold_one_is_identity() {
        let ds = counted_dataset();
        let out = filter_inactive(&ds, 1).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn all_small_gives_empty_error() {
        let err = filter_inactive(&counted_dataset(), 10).unwrap_err();
        assert!(matches!(err, Error::Empty(_)));
    }
}
