//! Top-K answer spans from start/end logits.
//!
//! A span `(s, e)` scores `start[s] + end[e]` and is valid when
//! `s <= e < n` and `e - s + 1 <= max_answer_len`.

use std::cmp::Ordering;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ANSWER_LEN: usize = 10;
pub const DEFAULT_TOP_K: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanLogits {
    start: Vec<f64>,
    end: Vec<f64>,
}

impl SpanLogits {
    pub fn new(start: Vec<f64>, end: Vec<f64>) -> Result<Self> {
        if start.len() != end.len() {
            return Err(Error::InvalidInput(format!("start has {} logits, end has {}", start.len(), end.len())));
        }
        if start.iter().chain(&end).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("logits must be finite".into()));
        }
        Ok(SpanLogits { start, end })
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> &[f64] {
        &self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanCandidate {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

/// Higher score first; ties by ascending start, then ascending end.
pub fn span_order(a: &SpanCandidate, b: &SpanCandidate) -> Ordering {
    b.score.total_cmp(&a.score).then(a.start.cmp(&b.start)).then(a.end.cmp(&b.end))
}

pub fn top_k_spans(logits: &SpanLogits, k: usize, max_answer_len: usize) -> Result<Vec<SpanCandidate>> {
    if k == 0 || max_answer_len == 0 {
        return Err(Error::InvalidInput("k and max_answer_len must be at least 1".into()));
    }
    let n = logits.len();
    let mut spans = Vec::with_capacity(n * max_answer_len.min(n.max(1)));
    for s in 0..n {
        let last = (s + max_answer_len).min(n);
        for e in s..last {
            spans.push(SpanCandidate { start: s, end: e, score: logits.start[s] + logits.end[e] });
        }
    }
    if spans.len() > k {
        spans.select_nth_unstable_by(k - 1, span_order);
        spans.truncate(k);
    }
    spans.sort_by(span_order);
    Ok(spans)
}

/// One line of the logits file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitsRecord {
    pub para_id: String,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

/// One line of span output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpansRecord {
    pub para_id: String,
    pub spans: Vec<SpanCandidate>,
}

pub fn parse_logits<R: BufRead>(reader: R, source: &str) -> Result<Vec<(String, SpanLogits)>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let schema = |message: String| Error::Schema { path: source.to_owned(), line: n + 1, message };
        let line = line.map_err(|e| schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogitsRecord = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        let logits = SpanLogits::new(rec.start, rec.end).map_err(|e| schema(e.to_string()))?;
        out.push((rec.para_id, logits));
    }
    Ok(out)
}
