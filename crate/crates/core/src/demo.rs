//! Seeded synthetic labeled sentences.
//!
//! Every class draws from its own token pool and the pools never overlap, so
//! a bag-of-words model separates the classes by construction.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{ingest, Source, TextDataset};
use crate::wire::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DemoError {
    #[error("bad demo config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoConfig {
    pub n_records: usize,
    pub classes: Vec<String>,
    pub seed: u64,
    pub vocab_per_class: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            n_records: 200,
            classes: vec!["pos".into(), "neg".into()],
            seed: 7,
            vocab_per_class: 12,
        }
    }
}

impl DemoConfig {
    fn check(&self) -> Result<(), DemoError> {
        if self.n_records == 0 {
            return Err(DemoError::BadConfig("n_records must be at least 1".into()));
        }
        if self.classes.is_empty() {
            return Err(DemoError::BadConfig("need at least one class".into()));
        }
        if self.vocab_per_class == 0 {
            return Err(DemoError::BadConfig("vocab_per_class must be at least 1".into()));
        }
        let distinct: BTreeSet<&String> = self.classes.iter().collect();
        if distinct.len() != self.classes.len() {
            return Err(DemoError::BadConfig("class names must be distinct".into()));
        }
        if self.classes.iter().any(|c| c.trim().is_empty()) {
            return Err(DemoError::BadConfig("class names must not be blank".into()));
        }
        Ok(())
    }
}

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(2..=3);
    (0..syllables)
        .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), NUCLEI.choose(rng).unwrap()))
        .collect()
}

/// Disjoint per-class token pools, in class order.
pub fn demo_vocabulary(config: &DemoConfig) -> Result<BTreeMap<String, Vec<String>>, DemoError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut used = BTreeSet::new();
    let mut pools = BTreeMap::new();
    for class in &config.classes {
        let mut pool = Vec::with_capacity(config.vocab_per_class);
        while pool.len() < config.vocab_per_class {
            let w = pseudo_word(&mut rng);
            if used.insert(w.clone()) {
                pool.push(w);
            }
        }
        pools.insert(class.clone(), pool);
    }
    Ok(pools)
}

/// The generated records as JSON lines, without ids.
///
/// Labels go round-robin over `classes`; each row also gets a 1–5 `rating`.
pub fn demo_jsonl(config: &DemoConfig) -> Result<String, DemoError> {
    let pools = demo_vocabulary(config)?;
    // A separate stream so the vocabulary does not depend on n_records.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = String::new();
    for i in 0..config.n_records {
        let label = &config.classes[i % config.classes.len()];
        let pool = &pools[label];
        let n_tokens = rng.gen_range(4..=9);
        let words: Vec<&str> = (0..n_tokens).map(|_| pool.choose(&mut rng).unwrap().as_str()).collect();
        let mut text = words.join(" ");
        if let Some(first) = text.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        text.push('.');
        let row = Value::map([
            ("text", Value::from(text)),
            ("label", Value::from(label.as_str())),
            ("rating", Value::from(rng.gen_range(1..=5i64))),
        ]);
        out.push_str(&row.encode());
        out.push('\n');
    }
    Ok(out)
}

/// Builds the demo dataset; the seed fully determines the result.
pub fn demo_data(config: &DemoConfig) -> Result<TextDataset, DemoError> {
    let jsonl = demo_jsonl(config)?;
    ingest(Source::Jsonl(&jsonl)).map_err(|e| DemoError::BadConfig(e.to_string()))
}
