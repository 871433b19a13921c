//! JSON configuration files for thread vectors and distributed vectors.
//!
//! Thread vector:
//! `{"threads": ["(pcc f.a S D)", ...], "fragments": ["S", ...]}`
//!
//! Distributed vector:
//! `{"locations": [1, 2], "vector": [{"location": 1, "threads": [...],
//! "fragments": [1, 2]}], "fragment_vector": [...], "n": 2}`; `locations`
//! defaults to the entry locations, and `n` (the number of fragments) to
//! the larger of the fragment vector length and the highest index named.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dist::{DistEntry, Loc, LocSet};
use crate::dsl::{parse_thread, print_thread};
use crate::error::{Error, Result};
use crate::fragsearch::{FragSet, FsEntry};
use crate::term::Thread;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadVector {
    pub threads: Vec<Thread>,
    pub fragments: Vec<Thread>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorFile {
    threads: Vec<String>,
    #[serde(default)]
    fragments: Vec<String>,
}

fn threads(srcs: &[String]) -> Result<Vec<Thread>> {
    srcs.iter()
        .map(|s| parse_thread(s).map_err(|e| Error::Config(format!("thread `{s}`: {e}"))))
        .collect()
}

fn printed(ts: &[Thread]) -> Vec<String> {
    ts.iter().map(print_thread).collect()
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Config(e.to_string())
}

pub fn parse_thread_vector(src: &str) -> Result<ThreadVector> {
    let file: VectorFile = serde_json::from_str(src).map_err(json_error)?;
    Ok(ThreadVector {
        threads: threads(&file.threads)?,
        fragments: threads(&file.fragments)?,
    })
}

pub fn print_thread_vector(v: &ThreadVector) -> String {
    let file = VectorFile {
        threads: printed(&v.threads),
        fragments: printed(&v.fragments),
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistConfig {
    pub locations: LocSet,
    pub vector: Vec<FsEntry>,
    pub alpha: Vec<Thread>,
}

impl DistConfig {
    /// The vector without fragment sets.
    pub fn plain(&self) -> Vec<DistEntry> {
        self.vector
            .iter()
            .map(|e| DistEntry::new(e.location, e.threads.clone()))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    location: Loc,
    threads: Vec<String>,
    #[serde(default)]
    fragments: FragSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    locations: Option<BTreeSet<Loc>>,
    vector: Vec<EntryFile>,
    #[serde(default)]
    fragment_vector: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

pub fn parse_dist_config(src: &str) -> Result<DistConfig> {
    let file: DistFile = serde_json::from_str(src).map_err(json_error)?;
    let alpha = threads(&file.fragment_vector)?;
    let highest = file
        .vector
        .iter()
        .flat_map(|e| e.fragments.iter().copied())
        .max()
        .unwrap_or(0);
    let n = file.n.unwrap_or(highest.max(alpha.len()));
    if n != alpha.len() {
        return Err(Error::Config(format!(
            "{n} fragments expected, the fragment vector has {}",
            alpha.len()
        )));
    }
    if highest > n || file.vector.iter().any(|e| e.fragments.contains(&0)) {
        return Err(Error::Config(format!(
            "fragment indices must lie in 1..={n}"
        )));
    }
    let mut vector = Vec::with_capacity(file.vector.len());
    for e in &file.vector {
        vector.push(FsEntry::new(
            e.location,
            threads(&e.threads)?,
            e.fragments.clone(),
        ));
    }
    let locations = file
        .locations
        .unwrap_or_else(|| vector.iter().map(|e| e.location).collect());
    Ok(DistConfig {
        locations,
        vector,
        alpha,
    })
}

pub fn print_dist_config(c: &DistConfig) -> String {
    let file = DistFile {
        locations: Some(c.locations.clone()),
        vector: c
            .vector
            .iter()
            .map(|e| EntryFile {
                location: e.location,
                threads: printed(&e.threads),
                fragments: e.fragments.clone(),
            })
            .collect(),
        fragment_vector: printed(&c.alpha),
        n: Some(c.alpha.len()),
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_vectors() {
        let v = parse_thread_vector(r#"{"threads": ["S", "(pcc f.a S D)"], "fragments": ["D"]}"#)
            .unwrap();
        assert_eq!(v.threads.len(), 2);
        assert_eq!(v.fragments, vec![Thread::Deadlock]);
        assert_eq!(parse_thread_vector(&print_thread_vector(&v)).unwrap(), v);
        assert!(parse_thread_vector(r#"{"threads": ["(pcc"]}"#).is_err());
        assert!(parse_thread_vector(r#"{"threads": [], "extra": 1}"#).is_err());
    }

    #[test]
    fn distributed_vectors() {
        let src = r#"{"vector": [{"location": 1, "threads": ["(switch 2)"], "fragments": [1]},
                                 {"location": 2, "threads": [], "fragments": [2]}],
                      "fragment_vector": ["S", "S"]}"#;
        let c = parse_dist_config(src).unwrap();
        assert_eq!(c.locations, [1, 2].into_iter().collect());
        assert_eq!(c.alpha.len(), 2);
        assert_eq!(c.plain()[0].threads, vec![Thread::Switch(2)]);
        assert_eq!(parse_dist_config(&print_dist_config(&c)).unwrap(), c);

        let short = r#"{"vector": [{"location": 1, "threads": [], "fragments": [3]}], "fragment_vector": ["S"]}"#;
        assert!(parse_dist_config(short).is_err());
        let given = r#"{"vector": [], "fragment_vector": ["S"], "n": 2}"#;
        assert!(parse_dist_config(given).is_err());
        let zero = r#"{"vector": [{"location": 1, "threads": [], "fragments": [0]}], "fragment_vector": ["S"]}"#;
        assert!(parse_dist_config(zero).is_err());
    }
}
