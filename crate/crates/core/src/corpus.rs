//! Documents, paragraphs and the generated question pool ("ocean").
//!
//! Ingestion reads one JSON object per paragraph:
//!
//! ```json
//! {"doc_id": "d1", "title": "Super Bowl 50", "para_id": "d1-p0",
//!  "text": "...", "qa_pairs": [{"question": "...", "answer": "...",
//!  "raw_answer": "...", "answer_span": [3, 5],
//!  "gen_scores": {"qg_score": -1.2, "qqp_score": 0.9, "f1_score": 0.8}}]}
//! ```
//!
//! Paragraphs of one document appear in file order; a document is created
//! the first time its `doc_id` is seen.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    /// Indices into [`Corpus::paragraphs`], in document order.
    pub paragraphs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub para_id: String,
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qg_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qqp_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_score: Option<f64>,
}

/// One generated question with its (verified) answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    /// Answer after verification; this is what the engine returns.
    pub answer: String,
    /// Extracted span before verification replaced it, if different.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_answer: Option<String>,
    /// Inclusive `(start, end)` in paragraph token coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_span: Option<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_scores: Option<GenScores>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OceanStats {
    /// Number of documents.
    pub num_documents: u64,
    pub num_paragraphs: u64,
    pub num_pairs: u64,
    /// Mean paragraphs per document.
    pub mean_paragraphs_per_doc: f64,
    /// Mean distinct answers per paragraph.
    pub mean_answers_per_paragraph: f64,
    /// Mean questions per distinct (paragraph, answer).
    pub mean_questions_per_answer: f64,
}

impl OceanStats {
    pub fn compute(corpus: &Corpus, ocean: &QuestionOcean) -> Self {
        let num_documents = corpus.documents.len() as u64;
        let num_paragraphs = corpus.paragraphs.len() as u64;
        let num_pairs = ocean.num_pairs() as u64;
        let distinct_answers: u64 = ocean
            .pairs
            .iter()
            .map(|group| group.iter().map(|p| p.answer.as_str()).collect::<HashSet<_>>().len() as u64)
            .sum();
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        OceanStats {
            num_documents,
            num_paragraphs,
            num_pairs,
            mean_paragraphs_per_doc: ratio(num_paragraphs, num_documents),
            mean_answers_per_paragraph: ratio(distinct_answers, num_paragraphs),
            mean_questions_per_answer: ratio(num_pairs, distinct_answers),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub paragraphs: Vec<Paragraph>,
}

impl Corpus {
    pub fn paragraph_index(&self) -> HashMap<&str, usize> {
        self.paragraphs.iter().enumerate().map(|(i, p)| (p.para_id.as_str(), i)).collect()
    }

    /// Index of each paragraph's parent in [`Corpus::documents`].
    pub fn paragraph_parents(&self) -> Vec<usize> {
        let mut parents = vec![usize::MAX; self.paragraphs.len()];
        for (d, doc) in self.documents.iter().enumerate() {
            for &p in &doc.paragraphs {
                parents[p] = d;
            }
        }
        parents
    }

    /// Check ids are unique and every cross reference resolves.
    pub fn validate(&self) -> Result<()> {
        let mut doc_ids = HashMap::new();
        for (d, doc) in self.documents.iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(Error::InvalidCorpus("empty doc_id".into()));
            }
            if doc_ids.insert(doc.doc_id.as_str(), d).is_some() {
                return Err(Error::InvalidCorpus(format!("duplicate doc_id {:?}", doc.doc_id)));
            }
            if doc.paragraphs.is_empty() {
                return Err(Error::InvalidCorpus(format!("document {:?} has no paragraphs", doc.doc_id)));
            }
        }
        let mut seen_para = HashSet::new();
        for p in &self.paragraphs {
            if p.para_id.is_empty() {
                return Err(Error::InvalidCorpus("empty para_id".into()));
            }
            if !seen_para.insert(p.para_id.as_str()) {
                return Err(Error::InvalidCorpus(format!("duplicate para_id {:?}", p.para_id)));
            }
            if !doc_ids.contains_key(p.doc_id.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "paragraph {:?} references unknown doc_id {:?}",
                    p.para_id, p.doc_id
                )));
            }
        }
        let mut owner = vec![None; self.paragraphs.len()];
        for (d, doc) in self.documents.iter().enumerate() {
            for &p in &doc.paragraphs {
                let para = self.paragraphs.get(p).ok_or_else(|| {
                    Error::InvalidCorpus(format!("document {:?} references missing paragraph #{p}", doc.doc_id))
                })?;
                if para.doc_id != doc.doc_id || owner[p].replace(d).is_some() {
                    return Err(Error::InvalidCorpus(format!(
                        "paragraph {:?} is not owned exactly once by {:?}",
                        para.para_id, para.doc_id
                    )));
                }
            }
        }
        if let Some(p) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidCorpus(format!(
                "paragraph {:?} is not listed by its document",
                self.paragraphs[p].para_id
            )));
        }
        Ok(())
    }
}

/// The generated QA pairs, grouped by paragraph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuestionOcean {
    /// Paragraph id of each group, aligned with [`Corpus::paragraphs`].
    pub para_ids: Vec<String>,
    /// `pairs[i]` are the QA pairs generated from paragraph `i`.
    pub pairs: Vec<Vec<QaPair>>,
    pub stats: OceanStats,
}

impl QuestionOcean {
    pub fn num_pairs(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &QaPair)> {
        self.pairs.iter().enumerate().flat_map(|(p, group)| group.iter().enumerate().map(move |(i, qa)| (p, i, qa)))
    }

    /// Check the ocean against `corpus`: groups resolve to paragraphs,
    /// pairs are well formed and stored statistics match a recount.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        if self.pairs.len() != self.para_ids.len() {
            return Err(Error::InvalidCorpus("ocean group count does not match its paragraph ids".into()));
        }
        let index = corpus.paragraph_index();
        if self.para_ids.len() != corpus.paragraphs.len() {
            return Err(Error::InvalidCorpus(format!(
                "ocean has {} paragraph groups, corpus has {} paragraphs",
                self.para_ids.len(),
                corpus.paragraphs.len()
            )));
        }
        for (i, para_id) in self.para_ids.iter().enumerate() {
            match index.get(para_id.as_str()) {
                Some(&p) if p == i => {}
                Some(_) => {
                    return Err(Error::InvalidCorpus(format!("ocean group {i} ({para_id:?}) is out of corpus order")))
                }
                None => return Err(Error::InvalidCorpus(format!("dangling para_id {para_id:?} in ocean"))),
            }
            let token_count = text::tokenize(&corpus.paragraphs[i].text).len();
            for qa in &self.pairs[i] {
                check_pair(qa, token_count).map_err(Error::InvalidCorpus)?;
            }
        }
        let recomputed = OceanStats::compute(corpus, self);
        if recomputed != self.stats {
            return Err(Error::InvalidCorpus(format!(
                "stored statistics {:?} do not match recount {:?}",
                self.stats, recomputed
            )));
        }
        Ok(())
    }

    /// Drop repeated questions (identical token sequences) within each
    /// paragraph, keeping the first occurrence.
    pub fn dedup_questions(&mut self) {
        for group in &mut self.pairs {
            let mut seen = HashSet::new();
            group.retain(|qa| seen.insert(text::tokenize(&qa.question)));
        }
    }
}

fn check_pair(qa: &QaPair, paragraph_tokens: usize) -> std::result::Result<(), String> {
    if qa.question.trim().is_empty() {
        return Err("empty question".into());
    }
    if qa.answer.trim().is_empty() {
        return Err(format!("empty answer for question {:?}", qa.question));
    }
    if let Some((start, end)) = qa.answer_span {
        if start > end || end as usize >= paragraph_tokens {
            return Err(format!("answer_span ({start}, {end}) outside paragraph of {paragraph_tokens} tokens"));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParagraphRecord {
    doc_id: String,
    title: String,
    para_id: String,
    text: String,
    qa_pairs: Vec<QaPair>,
}

/// Read a JSONL corpus from `path`.
pub fn ingest_corpus(path: &Path) -> Result<(Corpus, QuestionOcean)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(std::io::BufReader::new(file), &path.display().to_string())
}

/// Read a JSONL corpus from any reader; `source` names it in errors.
pub fn ingest_reader<R: BufRead>(reader: R, source: &str) -> Result<(Corpus, QuestionOcean)> {
    let mut corpus = Corpus::default();
    let mut ocean = QuestionOcean::default();
    let mut doc_lookup: HashMap<String, usize> = HashMap::new();
    let mut para_seen: HashSet<String> = HashSet::new();

    let schema = |line: usize, message: String| Error::Schema { path: source.to_owned(), line, message };

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| schema(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ParagraphRecord = serde_json::from_str(&line).map_err(|e| schema(line_no, e.to_string()))?;
        if rec.doc_id.is_empty() || rec.para_id.is_empty() {
            return Err(schema(line_no, "doc_id and para_id must be non-empty".into()));
        }
        if !para_seen.insert(rec.para_id.clone()) {
            return Err(schema(line_no, format!("duplicate para_id {:?}", rec.para_id)));
        }
        let token_count = text::tokenize(&rec.text).len();
        for (i, qa) in rec.qa_pairs.iter().enumerate() {
            check_pair(qa, token_count).map_err(|m| schema(line_no, format!("qa_pairs[{i}]: {m}")))?;
        }

        let doc = match doc_lookup.get(&rec.doc_id) {
            Some(&d) => {
                if corpus.documents[d].title != rec.title {
                    return Err(schema(line_no, format!("conflicting title for doc_id {:?}", rec.doc_id)));
                }
                d
            }
            None => {
                corpus.documents.push(Document {
                    doc_id: rec.doc_id.clone(),
                    title: rec.title.clone(),
                    paragraphs: Vec::new(),
                });
                doc_lookup.insert(rec.doc_id.clone(), corpus.documents.len() - 1);
                corpus.documents.len() - 1
            }
        };
        corpus.documents[doc].paragraphs.push(corpus.paragraphs.len());
        ocean.para_ids.push(rec.para_id.clone());
        ocean.pairs.push(rec.qa_pairs);
        corpus.paragraphs.push(Paragraph { para_id: rec.para_id, doc_id: rec.doc_id, text: rec.text });
    }

    if corpus.documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    corpus.validate()?;
    ocean.stats = OceanStats::compute(&corpus, &ocean);
    Ok((corpus, ocean))
}

/// Per-document pair counts, handy for reports.
pub fn pairs_per_document(corpus: &Corpus, ocean: &QuestionOcean) -> BTreeMap<String, usize> {
    corpus
        .documents
        .iter()
        .map(|d| {
            let n = d.paragraphs.iter().map(|&p| ocean.pairs[p].len()).sum();
            (d.doc_id.clone(), n)
        })
        .collect()
}
