//! Two-step retrieval: top-n documents, then the top-m paragraphs among
//! those documents.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::normalize_answer;
use crate::tfidf::{self, TfIdfIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub top_n_docs: usize,
    pub top_m_paras: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { top_n_docs: 20, top_m_paras: 100 }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n_docs == 0 || self.top_m_paras == 0 {
            return Err(Error::InvalidInput("top_n_docs and top_m_paras must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedParagraph {
    /// Index into [`Corpus::paragraphs`].
    pub paragraph: usize,
    pub para_id: String,
    pub para_score: f64,
    pub doc_id: String,
    pub doc_score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RankedParagraphs {
    pub paragraphs: Vec<RankedParagraph>,
    /// Set when the query embeds to an empty vector (e.g. only
    /// stopwords); the result is then empty.
    pub empty_query: bool,
}

/// Everything the ranker needs, borrowed from a loaded index.
#[derive(Clone, Copy)]
pub struct Indexes<'a> {
    pub corpus: &'a Corpus,
    pub docs: &'a TfIdfIndex,
    pub paras: &'a TfIdfIndex,
}

/// Per-stage output of [`retrieve_staged`], so callers can time stages.
pub struct DocumentStage {
    pub doc_scores: Vec<f64>,
    pub top_docs: Vec<usize>,
}

/// Order by descending score, then ascending id.
pub fn rank_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Indices of the `k` best items under [`rank_order`].
fn top_k_by(scores: &[f64], ids: &[String], candidates: Vec<usize>, k: usize) -> Vec<usize> {
    let cmp = |&a: &usize, &b: &usize| rank_order((scores[a], &ids[a]), (scores[b], &ids[b]));
    let mut c = candidates;
    if c.len() > k {
        c.select_nth_unstable_by(k - 1, cmp);
        c.truncate(k);
    }
    c.sort_by(cmp);
    c
}

pub fn rank_documents(indexes: Indexes<'_>, query: &tfidf::SparseVector, top_n: usize) -> DocumentStage {
    let doc_scores = indexes.docs.score_all(query);
    let all = (0..doc_scores.len()).collect();
    let top_docs = top_k_by(&doc_scores, indexes.docs.ids(), all, top_n);
    DocumentStage { doc_scores, top_docs }
}

pub fn rank_paragraphs(
    indexes: Indexes<'_>,
    question: &str,
    docs: &DocumentStage,
    top_m: usize,
) -> Vec<RankedParagraph> {
    let query = indexes.paras.embed_query(question);
    let corpus = indexes.corpus;
    let candidates: Vec<usize> =
        docs.top_docs.iter().flat_map(|&d| corpus.documents[d].paragraphs.iter().copied()).collect();
    let mut para_scores = vec![0.0; corpus.paragraphs.len()];
    for &p in &candidates {
        para_scores[p] = tfidf::score(&query, indexes.paras.vector(p));
    }
    let doc_of: std::collections::HashMap<usize, usize> =
        docs.top_docs.iter().flat_map(|&d| corpus.documents[d].paragraphs.iter().map(move |&p| (p, d))).collect();
    top_k_by(&para_scores, indexes.paras.ids(), candidates, top_m)
        .into_iter()
        .map(|p| {
            let d = doc_of[&p];
            RankedParagraph {
                paragraph: p,
                para_id: corpus.paragraphs[p].para_id.clone(),
                para_score: para_scores[p],
                doc_id: corpus.documents[d].doc_id.clone(),
                doc_score: docs.doc_scores[d],
            }
        })
        .collect()
}

/// Retrieve the top paragraphs for `question`.
pub fn retrieve(question: &str, indexes: Indexes<'_>, config: &RetrievalConfig) -> Result<RankedParagraphs> {
    config.validate()?;
    if indexes.corpus.documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let query = indexes.docs.embed_query(question);
    if query.is_empty() {
        return Ok(RankedParagraphs { paragraphs: Vec::new(), empty_query: true });
    }
    let docs = rank_documents(indexes, &query, config.top_n_docs);
    let paragraphs = rank_paragraphs(indexes, question, &docs, config.top_m_paras);
    Ok(RankedParagraphs { paragraphs, empty_query: false })
}

/// Whether `answer` occurs in `text` as a whole-token substring after
/// answer normalization.
pub fn contains_answer(text: &str, answer: &str) -> bool {
    let needle = normalize_answer(answer);
    if needle.is_empty() {
        return false;
    }
    let hay = format!(" {} ", normalize_answer(text));
    hay.contains(&format!(" {needle} "))
}

/// Percentage of questions with at least one retrieved paragraph that
/// contains any of their gold answers.
pub fn retrieval_accuracy<Q, A>(
    questions: &[(Q, Vec<A>)],
    indexes: Indexes<'_>,
    config: &RetrievalConfig,
) -> Result<f64>
where
    Q: AsRef<str>,
    A: AsRef<str>,
{
    if questions.is_empty() {
        return Err(Error::InvalidInput("empty question set".into()));
    }
    let mut hits = 0usize;
    for (q, golds) in questions {
        let ranked = retrieve(q.as_ref(), indexes, config)?;
        let hit = ranked.paragraphs.iter().any(|rp| {
            let text = &indexes.corpus.paragraphs[rp.paragraph].text;
            golds.iter().any(|g| contains_answer(text, g.as_ref()))
        });
        hits += hit as usize;
    }
    Ok(100.0 * hits as f64 / questions.len() as f64)
}
