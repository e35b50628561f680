//! Selection of generated questions as extra QG training data, and the
//! mixed-ratio multi-task batch schedule.

use std::io::BufRead;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::eval::token_f1;

/// Default auxiliary-task mixture ratio.
pub const DEFAULT_MIX_RATIO: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolCandidate {
    pub question: String,
    pub qqp_score: f64,
}

/// A gold `(passage, question, answer)` triple and the questions a
/// generator produced for it, in beam order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenPoolRecord {
    pub passage: String,
    pub question: String,
    pub answer: String,
    pub candidates: Vec<PoolCandidate>,
}

/// A selected training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub passage: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Maximum selections per record.
    pub max_per_record: usize,
}

impl AugmentConfig {
    /// Candidates similar to the gold question: F1 in [0.5, 1.0].
    pub fn da_sim() -> Self {
        AugmentConfig { s_min: 0.5, s_max: 1.0, f_min: 0.5, f_max: 1.0, max_per_record: 2 }
    }

    /// Candidates diverging from the gold question: F1 in [0.0, 0.5].
    pub fn da_div() -> Self {
        AugmentConfig { f_min: 0.0, f_max: 0.5, ..Self::da_sim() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "da-sim" => Some(Self::da_sim()),
            "da-div" => Some(Self::da_div()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if ![self.s_min, self.s_max, self.f_min, self.f_max].into_iter().all(unit) {
            return Err(Error::InvalidInput("thresholds must lie in [0, 1]".into()));
        }
        if self.s_min > self.s_max || self.f_min > self.f_max {
            return Err(Error::InvalidInput("threshold windows must satisfy min <= max".into()));
        }
        Ok(())
    }

    pub fn accepts(&self, qqp_score: f64, f1: f64) -> bool {
        (self.s_min..=self.s_max).contains(&qqp_score) && (self.f_min..=self.f_max).contains(&f1)
    }
}

/// Scan each record's candidates in order and keep those inside both
/// threshold windows, at most `max_per_record` per record.
pub fn select_augmented(pool: &[GenPoolRecord], config: &AugmentConfig) -> Result<Vec<AugmentedExample>> {
    config.validate()?;
    let mut out = Vec::new();
    for rec in pool {
        let mut taken = 0;
        for cand in &rec.candidates {
            if taken >= config.max_per_record {
                break;
            }
            if config.accepts(cand.qqp_score, token_f1(&cand.question, &rec.question)) {
                out.push(AugmentedExample {
                    passage: rec.passage.clone(),
                    question: cand.question.clone(),
                    answer: rec.answer.clone(),
                });
                taken += 1;
            }
        }
    }
    Ok(out)
}

pub fn parse_pool<R: BufRead>(reader: R, source: &str) -> Result<Vec<GenPoolRecord>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let schema = |message: String| Error::Schema { path: source.to_owned(), line: n + 1, message };
        let line = line.map_err(|e| schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GenPoolRecord = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if rec.question.trim().is_empty() {
            return Err(schema("gold question must be non-empty".into()));
        }
        if let Some(c) = rec.candidates.iter().find(|c| !(0.0..=1.0).contains(&c.qqp_score)) {
            return Err(schema(format!("qqp_score {} outside [0, 1]", c.qqp_score)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// One mini-batch in a training plan. Task 0 is the target task;
/// auxiliary tasks are numbered from 1 in the order given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BatchRef {
    pub task: usize,
    pub batch: usize,
}

/// All target batches plus `round(ratio * target_batches)` batches drawn
/// without replacement from each auxiliary task (capped at its size),
/// shuffled with a seeded RNG.
pub fn mixed_ratio_schedule(
    target_batches: usize,
    aux_batch_counts: &[usize],
    ratio: f64,
    seed: u64,
) -> Result<Vec<BatchRef>> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidInput(format!("ratio must be finite and >= 0, got {ratio}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_task = (ratio * target_batches as f64).round() as usize;
    let mut plan: Vec<BatchRef> = (0..target_batches).map(|batch| BatchRef { task: 0, batch }).collect();
    for (j, &available) in aux_batch_counts.iter().enumerate() {
        let take = per_task.min(available);
        let mut picked = index::sample(&mut rng, available, take).into_vec();
        picked.sort_unstable();
        plan.extend(picked.into_iter().map(|batch| BatchRef { task: j + 1, batch }));
    }
    plan.shuffle(&mut rng);
    Ok(plan)
}
