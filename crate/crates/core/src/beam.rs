//! Standard and diverse beam search over a pluggable next-token scorer.
//!
//! Each live hypothesis proposes its `L` best extensions; the step keeps
//! the global top `L` of those. Diverse search ranks candidates by
//! `cum_score - gamma * k`, where `k` is the 1-based rank of a candidate
//! among the extensions of its own parent. The penalty only affects
//! selection; reported scores are always the plain cumulative sums.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default diversity rate for question generation.
pub const DEFAULT_GAMMA: f64 = 4.0;

pub trait TokenScorer {
    /// Candidate next tokens with their incremental log-scores.
    fn next_tokens(&self, context: &str, prefix: &[String]) -> Result<Vec<(String, f64)>>;
}

/// Scorer backed by an explicit `prefix -> {token: score}` table, where a
/// prefix is its tokens joined by single spaces (`""` for the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableScorer {
    table: BTreeMap<String, BTreeMap<String, f64>>,
}

impl TableScorer {
    pub fn new(table: BTreeMap<String, BTreeMap<String, f64>>) -> Result<Self> {
        for (prefix, row) in &table {
            if let Some((tok, s)) = row.iter().find(|(_, s)| !s.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite score {s} for {tok:?} after {prefix:?}")));
            }
        }
        Ok(TableScorer { table })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::new(serde_json::from_str(json)?)
    }

    pub fn table(&self) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.table
    }
}

/// Build a scorer from a table fixture.
pub fn toy_scorer_from_table(table: BTreeMap<String, BTreeMap<String, f64>>) -> Result<TableScorer> {
    TableScorer::new(table)
}

impl TokenScorer for TableScorer {
    fn next_tokens(&self, _context: &str, prefix: &[String]) -> Result<Vec<(String, f64)>> {
        let key = prefix.join(" ");
        self.table
            .get(&key)
            .map(|row| row.iter().map(|(t, &s)| (t.clone(), s)).collect())
            .ok_or(Error::MissingPrefix(key))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub tokens: Vec<String>,
    /// Sum of incremental scores, without any diversity penalty.
    pub cum_score: f64,
    /// Index of the parent in the previous step's beam.
    pub parent_beam: usize,
    /// 1-based rank among the parent's extensions.
    pub sibling_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub max_steps: usize,
    pub eos: String,
}

impl BeamConfig {
    fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.max_steps == 0 {
            return Err(Error::InvalidInput("beam size and max steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Higher score first, then lexicographic token order.
fn by_score_then_tokens(a: (f64, &[String]), b: (f64, &[String])) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

pub fn beam_search<S: TokenScorer + ?Sized>(scorer: &S, context: &str, config: &BeamConfig) -> Result<Vec<Hypothesis>> {
    search(scorer, context, config, None)
}

pub fn diverse_beam_search<S: TokenScorer + ?Sized>(
    scorer: &S,
    context: &str,
    config: &BeamConfig,
    gamma: f64,
) -> Result<Vec<Hypothesis>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    search(scorer, context, config, Some(gamma))
}

struct Candidate {
    hyp: Hypothesis,
    key: f64,
}

fn search<S: TokenScorer + ?Sized>(
    scorer: &S,
    context: &str,
    config: &BeamConfig,
    gamma: Option<f64>,
) -> Result<Vec<Hypothesis>> {
    config.validate()?;
    let width = config.beam_size;
    let mut live = vec![Hypothesis { tokens: Vec::new(), cum_score: 0.0, parent_beam: 0, sibling_rank: 1 }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _ in 0..config.max_steps {
        if live.is_empty() {
            break;
        }
        let mut candidates = Vec::new();
        for (k, hyp) in live.drain(..).enumerate() {
            let mut ext = scorer.next_tokens(context, &hyp.tokens)?;
            if let Some((t, s)) = ext.iter().find(|(_, s)| !s.is_finite()) {
                return Err(Error::InvalidInput(format!("scorer returned {s} for {t:?}")));
            }
            if ext.is_empty() {
                finished.push(hyp);
                continue;
            }
            ext.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ext.truncate(width);
            for (i, (tok, s)) in ext.into_iter().enumerate() {
                let rank = i + 1;
                let cum_score = hyp.cum_score + s;
                let key = match gamma {
                    Some(g) => cum_score - g * rank as f64,
                    None => cum_score,
                };
                let mut tokens = hyp.tokens.clone();
                tokens.push(tok);
                candidates
                    .push(Candidate { hyp: Hypothesis { tokens, cum_score, parent_beam: k, sibling_rank: rank }, key });
            }
        }
        candidates.sort_by(|a, b| by_score_then_tokens((a.key, &a.hyp.tokens), (b.key, &b.hyp.tokens)));
        candidates.truncate(width);
        for c in candidates {
            if c.hyp.tokens.last() == Some(&config.eos) {
                finished.push(c.hyp);
            } else {
                live.push(c.hyp);
            }
        }
    }

    let order =
        |a: &Hypothesis, b: &Hypothesis| by_score_then_tokens((a.cum_score, &a.tokens), (b.cum_score, &b.tokens));
    finished.sort_by(order);
    finished.truncate(width);
    if finished.len() < width {
        live.sort_by(order);
        let missing = width - finished.len();
        finished.extend(live.into_iter().take(missing));
    }
    Ok(finished)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &[(&str, f64)])]) -> TableScorer {
        TableScorer::new(
            rows.iter().map(|(p, r)| (p.to_string(), r.iter().map(|(t, s)| (t.to_string(), *s)).collect())).collect(),
        )
        .unwrap()
    }

    fn cfg(beam_size: usize, max_steps: usize) -> BeamConfig {
        BeamConfig { beam_size, max_steps, eos: "</s>".into() }
    }

    fn texts(h: &[Hypothesis]) -> Vec<String> {
        h.iter().map(|h| h.tokens.join(" ")).collect()
    }

    /// Two steps: A's second child beats B's first child by 0.75.
    fn trace() -> TableScorer {
        table(&[
            ("", &[("a", -1.0), ("b", -2.0)]),
            ("a", &[("x", -0.25), ("y", -0.5)]),
            ("b", &[("z", -0.25), ("w", -3.0)]),
            ("a x", &[("</s>", 0.0)]),
            ("a y", &[("</s>", 0.0)]),
            ("b z", &[("</s>", 0.0)]),
            ("b w", &[("</s>", 0.0)]),
        ])
    }

    #[test]
    fn greedy_when_width_one() {
        let out = beam_search(&trace(), "", &cfg(1, 5)).unwrap();
        assert_eq!(texts(&out), ["a x </s>"]);
        assert_eq!(out[0].cum_score, -1.25);
    }

    #[test]
    fn diversity_switches_parent_past_margin() {
        let standard = beam_search(&trace(), "", &cfg(2, 5)).unwrap();
        assert_eq!(texts(&standard), ["a x </s>", "a y </s>"]);
        let below = diverse_beam_search(&trace(), "", &cfg(2, 5), 0.75).unwrap();
        assert_eq!(texts(&below), ["a x </s>", "a y </s>"]);
        let above = diverse_beam_search(&trace(), "", &cfg(2, 5), 0.8).unwrap();
        assert_eq!(texts(&above), ["a x </s>", "b z </s>"]);
        assert_eq!(above[1].cum_score, -2.25);
    }

    #[test]
    fn gamma_zero_matches_standard() {
        for w in 1..4 {
            assert_eq!(
                beam_search(&trace(), "", &cfg(w, 5)).unwrap(),
                diverse_beam_search(&trace(), "", &cfg(w, 5), 0.0).unwrap()
            );
        }
    }

    #[test]
    fn single_token_vocabulary() {
        let t = table(&[("", &[("go", -0.5)]), ("go", &[("go", -0.5)]), ("go go", &[("</s>", -0.5)])]);
        let out = beam_search(&t, "", &cfg(3, 10)).unwrap();
        assert_eq!(texts(&out), ["go go </s>"]);
    }

    #[test]
    fn pads_with_unfinished_at_max_steps() {
        let t = table(&[("", &[("a", -1.0), ("</s>", -5.0)]), ("a", &[("b", -1.0)])]);
        let out = beam_search(&t, "", &cfg(2, 2)).unwrap();
        assert_eq!(texts(&out), ["</s>", "a b"]);
    }

    #[test]
    fn empty_extensions_retire() {
        let t = table(&[("", &[("a", -1.0)]), ("a", &[])]);
        let out = beam_search(&t, "", &cfg(2, 5)).unwrap();
        assert_eq!(texts(&out), ["a"]);
    }

    #[test]
    fn errors() {
        let t = table(&[("", &[("a", -1.0)])]);
        assert!(matches!(beam_search(&t, "", &cfg(1, 3)), Err(Error::MissingPrefix(p)) if p == "a"));
        assert!(beam_search(&trace(), "", &cfg(0, 3)).is_err());
        assert!(diverse_beam_search(&trace(), "", &cfg(1, 3), -1.0).is_err());
        assert!(TableScorer::from_json(r#"{"": {"a": 1e999}}"#).is_err());
    }

    #[test]
    fn sibling_ranks_and_parents() {
        let out = beam_search(&trace(), "", &cfg(4, 2)).unwrap();
        // Unfinished after two steps; all four paths are padded in.
        let got: Vec<_> = out.iter().map(|h| (h.tokens.join(" "), h.parent_beam, h.sibling_rank)).collect();
        assert_eq!(
            got,
            [
                ("a x".to_string(), 0, 1),
                ("a y".to_string(), 0, 2),
                ("b z".to_string(), 1, 1),
                ("b w".to_string(), 1, 2)
            ]
        );
    }
}
