//! Tab-separated ingestion: interactions, social edges, topic labels.
//!
//! All three files are UTF-8, one record per line, `#`-prefixed lines and
//! blank lines skipped. Ids are opaque strings; ingestion assigns dense
//! indices in order of first appearance in the interactions file.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::InteractionDataset;
use crate::error::{io_err, Error, Result};

/// Dense index back to original string id, per entity kind.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IdMap {
    pub users: Vec<String>,
    pub items: Vec<String>,
}

/// What ingestion kept and what it dropped, for the summary line.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestStats {
    /// Interaction rows with weight <= 0.
    pub zero_weight_rows: usize,
    /// Interaction rows that repeated an already-seen (user, item) pair.
    pub duplicate_interactions: usize,
    /// Items that appeared in interactions but carried no topic label;
    /// dropped together with their interactions.
    pub items_missing_topic: usize,
    pub interactions_missing_topic: usize,
    /// Topic rows whose item never appears in the interactions file.
    pub topic_rows_ignored: usize,
    /// Social rows referencing unknown users, plus self-loops.
    pub social_rows_ignored: usize,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect())
}

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn fields(line: &str) -> Vec<&str> {
    line.split('\t').map(str::trim).collect()
}

/// Load a dataset from TSV files: `user \t item \t weight`, `user \t user`,
/// `item \t topic`. Any positive weight collapses to a binary interaction;
/// the topic count is inferred as max labelled topic + 1.
pub fn load_hetrec(
    interaction_path: &Path,
    social_path: &Path,
    topic_path: &Path,
) -> Result<(InteractionDataset, IdMap, IngestStats)> {
    let mut stats = IngestStats::default();

    // Interactions first: they define the user and item universe.
    let mut user_index: HashMap<String, u32> = HashMap::new();
    let mut item_index: HashMap<String, u32> = HashMap::new();
    let mut users: Vec<String> = Vec::new();
    let mut items: Vec<String> = Vec::new();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut seen_pairs = std::collections::HashSet::new();

    for (line_no, line) in read_lines(interaction_path)? {
        let f = fields(&line);
        if f.len() != 3 {
            return Err(parse_err(
                interaction_path,
                line_no,
                format!("expected 3 tab-separated fields, got {}", f.len()),
            ));
        }
        let weight: f64 = f[2].parse().map_err(|_| {
            parse_err(interaction_path, line_no, format!("bad weight '{}'", f[2]))
        })?;
        let user = *user_index.entry(f[0].to_string()).or_insert_with(|| {
            users.push(f[0].to_string());
            (users.len() - 1) as u32
        });
        if weight <= 0.0 {
            stats.zero_weight_rows += 1;
            continue;
        }
        let item = *item_index.entry(f[1].to_string()).or_insert_with(|| {
            items.push(f[1].to_string());
            (items.len() - 1) as u32
        });
        if !seen_pairs.insert((user, item)) {
            stats.duplicate_interactions += 1;
            continue;
        }
        pairs.push((user, item));
    }

    // Topic labels. Only items from the interactions file matter; the topic
    // count covers every labelled topic so indicator ranges stay comparable
    // across datasets sharing a label file.
    let mut topic_of: Vec<Option<u32>> = vec![None; items.len()];
    let mut max_topic: Option<u32> = None;
    for (line_no, line) in read_lines(topic_path)? {
        let f = fields(&line);
        if f.len() != 2 {
            return Err(parse_err(
                topic_path,
                line_no,
                format!("expected 2 tab-separated fields, got {}", f.len()),
            ));
        }
        let topic: u32 = f[1]
            .parse()
            .map_err(|_| parse_err(topic_path, line_no, format!("bad topic index '{}'", f[1])))?;
        max_topic = Some(max_topic.map_or(topic, |m| m.max(topic)));
        match item_index.get(f[0]) {
            Some(&j) => {
                if topic_of[j as usize].is_none() {
                    topic_of[j as usize] = Some(topic);
                }
            }
            None => stats.topic_rows_ignored += 1,
        }
    }

    // Drop items without a topic, re-densifying item indices.
    let mut remap: Vec<Option<u32>> = vec![None; items.len()];
    let mut kept_items: Vec<String> = Vec::new();
    let mut kept_topics: Vec<u32> = Vec::new();
    for (j, label) in topic_of.iter().enumerate() {
        match label {
            Some(t) => {
                remap[j] = Some(kept_items.len() as u32);
                kept_items.push(items[j].clone());
                kept_topics.push(*t);
            }
            None => stats.items_missing_topic += 1,
        }
    }
    let mut interactions: Vec<(u32, u32)> = Vec::with_capacity(pairs.len());
    for (u, j) in pairs {
        match remap[j as usize] {
            Some(nj) => interactions.push((u, nj)),
            None => stats.interactions_missing_topic += 1,
        }
    }
    interactions.sort_unstable();

    // Social edges between known users.
    let mut social: Vec<(u32, u32)> = Vec::new();
    for (line_no, line) in read_lines(social_path)? {
        let f = fields(&line);
        if f.len() != 2 {
            return Err(parse_err(
                social_path,
                line_no,
                format!("expected 2 tab-separated fields, got {}", f.len()),
            ));
        }
        match (user_index.get(f[0]), user_index.get(f[1])) {
            (Some(&a), Some(&b)) if a != b => {
                social.push((a.min(b), a.max(b)));
            }
            _ => stats.social_rows_ignored += 1,
        }
    }
    social.sort_unstable();
    social.dedup();

    if interactions.is_empty() {
        return Err(Error::Empty("ingestion".into()));
    }

    let ds = InteractionDataset {
        num_users: users.len(),
        num_items: kept_items.len(),
        num_topics: max_topic.map_or(0, |m| m as usize + 1),
        interactions,
        social_edges: social,
        topic_of_item: kept_topics,
    };
    ds.validate()?;
    Ok((
        ds,
        IdMap {
            users,
            items: kept_items,
        },
        stats,
    ))
}
