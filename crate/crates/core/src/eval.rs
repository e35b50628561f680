//! Exact match, token F1, and per-stage latency reporting.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Lowercase, turn punctuation into spaces, drop English articles and
/// collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let spaced: String =
        s.to_lowercase().chars().map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' }).collect();
    spaced.split_whitespace().filter(|w| !ARTICLES.contains(w)).collect::<Vec<_>>().join(" ")
}

/// Harmonic mean of token precision and recall over normalized token
/// multisets. Two empty strings score 1.0.
pub fn token_f1(candidate: &str, gold: &str) -> f64 {
    let cand = normalize_answer(candidate);
    let gold = normalize_answer(gold);
    let cand: Vec<&str> = cand.split_whitespace().collect();
    let gold: Vec<&str> = gold.split_whitespace().collect();
    if cand.is_empty() || gold.is_empty() {
        return if cand.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for t in &cand {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    // 2PR / (P + R) reduced to a single division, so rational
    // boundaries such as 0.5 come out exact.
    (2 * common) as f64 / (cand.len() + gold.len()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question: String,
    pub gold_answers: Vec<String>,
    /// `None` is a no-answer prediction.
    pub predicted: Option<String>,
}

pub fn exact_match(record: &EvalRecord) -> u8 {
    let Some(pred) = &record.predicted else { return 0 };
    let pred = normalize_answer(pred);
    record.gold_answers.iter().any(|g| normalize_answer(g) == pred) as u8
}

pub fn f1(record: &EvalRecord) -> f64 {
    let Some(pred) = &record.predicted else { return 0.0 };
    record.gold_answers.iter().map(|g| token_f1(pred, g)).fold(0.0, f64::max)
}

/// One line of an evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalQuestion {
    pub question: String,
    pub answers: Vec<String>,
}

/// Read an evaluation set (`{"question", "answers": [...]}` per line).
/// With `exclude_yes_no`, questions whose gold answers are all "yes" or
/// "no" are skipped.
pub fn read_eval_set(path: &Path, exclude_yes_no: bool) -> Result<Vec<EvalQuestion>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_eval_set(std::io::BufReader::new(file), &path.display().to_string(), exclude_yes_no)
}

pub fn parse_eval_set<R: BufRead>(reader: R, source: &str, exclude_yes_no: bool) -> Result<Vec<EvalQuestion>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let schema = |message: String| Error::Schema { path: source.to_owned(), line: n + 1, message };
        let line = line.map_err(|e| schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let q: EvalQuestion = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if q.answers.is_empty() {
            return Err(schema("answers must be non-empty".into()));
        }
        if exclude_yes_no && q.answers.iter().all(|a| matches!(normalize_answer(a).as_str(), "yes" | "no")) {
            continue;
        }
        out.push(q);
    }
    Ok(out)
}

/// Mean wall-clock seconds per query for each pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub doc_rank: f64,
    pub para_rank: f64,
    #[serde(rename = "match")]
    pub matching: f64,
    pub total: f64,
    pub count: usize,
}

/// Per-query stage durations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub doc_rank: Duration,
    pub para_rank: Duration,
    pub matching: Duration,
    pub total: Duration,
}

impl LatencyReport {
    pub fn from_samples(samples: &[StageTimes]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("no latency samples".into()));
        }
        let n = samples.len() as f64;
        let mean = |f: fn(&StageTimes) -> Duration| samples.iter().map(|s| f(s).as_secs_f64()).sum::<f64>() / n;
        Ok(LatencyReport {
            doc_rank: mean(|s| s.doc_rank),
            para_rank: mean(|s| s.para_rank),
            matching: mean(|s| s.matching),
            total: mean(|s| s.total),
            count: samples.len(),
        })
    }

    /// Stage table in the layout of the per-component speed breakdown.
    pub fn to_table(&self) -> String {
        format!(
            "{:<6}{:>12}{:>13}{:>19}{:>12}\n{:<6}{:>12.6}{:>13.6}{:>19.6}{:>12.6}\n",
            "",
            "Doc Ranker",
            "Para Ranker",
            "Question Matching",
            "Total",
            "s/Q",
            self.doc_rank,
            self.para_rank,
            self.matching,
            self.total
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub em: f64,
    pub f1: f64,
    pub latency: LatencyReport,
    pub records: Vec<EvalRecord>,
}

impl RunReport {
    /// EM / F1 / s/Q row followed by the stage breakdown.
    pub fn to_table(&self) -> String {
        format!(
            "{:<6}{:>8}{:>8}{:>12}\n{:<6}{:>8.2}{:>8.2}{:>12.6}\n\n{}",
            "",
            "EM",
            "F1",
            "s/Q",
            "run",
            self.em,
            self.f1,
            self.latency.total,
            self.latency.to_table()
        )
    }
}

/// Answer every question with `engine` in a single-threaded loop and
/// aggregate EM, F1 and stage latency.
pub fn evaluate_run(eval_set: &[EvalQuestion], engine: &Engine) -> Result<RunReport> {
    if eval_set.is_empty() {
        return Err(Error::InvalidInput("empty evaluation set".into()));
    }
    let mut records = Vec::with_capacity(eval_set.len());
    let mut samples = Vec::with_capacity(eval_set.len());
    for q in eval_set {
        let (result, times) = engine.answer_timed(&q.question)?;
        samples.push(times);
        records.push(EvalRecord {
            question: q.question.clone(),
            gold_answers: q.answers.clone(),
            predicted: result.answer,
        });
    }
    let n = records.len() as f64;
    let em = 100.0 * records.iter().map(|r| exact_match(r) as f64).sum::<f64>() / n;
    let f1 = 100.0 * records.iter().map(f1).sum::<f64>() / n;
    Ok(RunReport { em, f1, latency: LatencyReport::from_samples(&samples)?, records })
}
