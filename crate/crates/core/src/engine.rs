//! The query engine: ranker + matcher over a loaded index.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use crate::corpus::{Corpus, QuestionOcean};
use crate::error::Result;
use crate::eval::StageTimes;
use crate::index::{self, IndexData, Manifest};
use crate::matcher::{
    candidate_order, overlap_score, sorted_intersection_len, Alternative, MatchedQa, QueryResult, ScoredCandidate,
    TimingMs,
};
use crate::ranker::{self, Indexes, RankedParagraphs, RetrievalConfig};
use crate::text;
use crate::tfidf::{self, Level, TfIdfIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub retrieval: RetrievalConfig,
    /// Drop stopwords from both sides before token-overlap matching.
    pub match_drop_stopwords: bool,
    /// Remove repeated questions within a paragraph at load time.
    pub dedup_questions: bool,
    /// When false, `timing_ms` is reported as zeros so results are
    /// byte-for-byte reproducible.
    pub report_timing: bool,
    pub max_alternatives: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            retrieval: RetrievalConfig::default(),
            match_drop_stopwords: false,
            dedup_questions: false,
            report_timing: true,
            max_alternatives: 5,
        }
    }
}

/// Build both TF-IDF levels for `corpus`. Document counts are the sums
/// of their paragraphs' counts.
pub fn build_indexes(corpus: &Corpus) -> Result<(TfIdfIndex, TfIdfIndex)> {
    let para_items: Vec<(&str, &str)> =
        corpus.paragraphs.iter().map(|p| (p.para_id.as_str(), p.text.as_str())).collect();
    let para_counts = count_paragraphs(&para_items);
    let doc_counts =
        corpus.documents.iter().map(|d| tfidf::merge_counts(d.paragraphs.iter().map(|&p| &para_counts[p]))).collect();
    let doc_ids = corpus.documents.iter().map(|d| d.doc_id.clone()).collect();
    let docs = TfIdfIndex::from_counts(doc_ids, doc_counts, Level::Document)?;
    let para_ids = corpus.paragraphs.iter().map(|p| p.para_id.clone()).collect();
    let paras = TfIdfIndex::from_counts(para_ids, para_counts, Level::Paragraph)?;
    Ok((docs, paras))
}

#[cfg(feature = "parallel")]
fn count_paragraphs(items: &[(&str, &str)]) -> Vec<tfidf::GramCounts> {
    use rayon::prelude::*;
    items.par_iter().map(|(_, t)| tfidf::gram_counts(t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn count_paragraphs(items: &[(&str, &str)]) -> Vec<tfidf::GramCounts> {
    items.iter().map(|(_, t)| tfidf::gram_counts(t)).collect()
}

/// Build a complete in-memory index from an ingested corpus.
pub fn build_index_data(corpus: Corpus, ocean: QuestionOcean) -> Result<IndexData> {
    let (docs, paras) = build_indexes(&corpus)?;
    Ok(IndexData { corpus, ocean, docs, paras })
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    fn lap(&mut self) -> Duration {
        let now = std::time::Instant::now();
        let d = now - self.0;
        self.0 = now;
        d
    }
}

// No monotonic clock on bare wasm; stages report zero.
#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }

    fn lap(&mut self) -> Duration {
        Duration::ZERO
    }
}

pub struct Engine {
    data: IndexData,
    manifest: Option<Manifest>,
    config: EngineConfig,
    vocab: HashMap<String, u32>,
    /// Sorted token ids of every generated question, by paragraph.
    question_tokens: Vec<Vec<Vec<u32>>>,
}

impl Engine {
    pub fn load(dir: &Path, config: EngineConfig) -> Result<Self> {
        let (manifest, data) = index::load(dir)?;
        let mut engine = Self::new(data, config)?;
        engine.manifest = Some(manifest);
        Ok(engine)
    }

    pub fn new(mut data: IndexData, config: EngineConfig) -> Result<Self> {
        config.retrieval.validate()?;
        if config.dedup_questions {
            data.ocean.dedup_questions();
        }
        let mut vocab = HashMap::new();
        let question_tokens = data
            .ocean
            .pairs
            .iter()
            .map(|group| {
                group
                    .iter()
                    .map(|qa| {
                        let mut ids: Vec<u32> = Self::match_tokens(&qa.question, &config)
                            .map(|t| {
                                let next = vocab.len() as u32;
                                *vocab.entry(t).or_insert(next)
                            })
                            .collect();
                        ids.sort_unstable();
                        ids.dedup();
                        ids
                    })
                    .collect()
            })
            .collect();
        Ok(Engine { data, manifest: None, config, vocab, question_tokens })
    }

    fn match_tokens<'a>(question: &str, config: &'a EngineConfig) -> impl Iterator<Item = String> + 'a {
        let drop = config.match_drop_stopwords;
        text::tokenize(question)
            .into_iter()
            .map(text::Token::into_string)
            .filter(move |t| !drop || !text::is_stopword(t))
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn manifest(&self) -> Option<&Manifest> {
        self.manifest.as_ref()
    }

    pub fn data(&self) -> &IndexData {
        &self.data
    }

    pub fn corpus(&self) -> &Corpus {
        &self.data.corpus
    }

    pub fn ocean(&self) -> &QuestionOcean {
        &self.data.ocean
    }

    pub fn indexes(&self) -> Indexes<'_> {
        Indexes { corpus: &self.data.corpus, docs: &self.data.docs, paras: &self.data.paras }
    }

    pub fn retrieve(&self, question: &str) -> Result<RankedParagraphs> {
        ranker::retrieve(question, self.indexes(), &self.config.retrieval)
    }

    /// Sorted ids of the query's unique tokens, and the set's full size
    /// (tokens outside the question vocabulary still count towards it).
    fn query_tokens(&self, question: &str) -> (Vec<u32>, usize) {
        let mut tokens: Vec<String> = Self::match_tokens(question, &self.config).collect();
        tokens.sort_unstable();
        tokens.dedup();
        let mut ids: Vec<u32> = tokens.iter().filter_map(|t| self.vocab.get(t).copied()).collect();
        ids.sort_unstable();
        (ids, tokens.len())
    }

    fn score_candidates(&self, question: &str, ranked: &RankedParagraphs) -> Vec<ScoredCandidate> {
        let (query, query_len) = self.query_tokens(question);
        let mut out = Vec::new();
        for (rank, rp) in ranked.paragraphs.iter().enumerate() {
            for (pair, cand) in self.question_tokens[rp.paragraph].iter().enumerate() {
                out.push(ScoredCandidate {
                    score: overlap_score(sorted_intersection_len(&query, cand), query_len, cand.len()),
                    rank,
                    paragraph: rp.paragraph,
                    pair,
                });
            }
        }
        out
    }

    /// Every candidate from the retrieved paragraphs, best first.
    pub fn rank_candidates(&self, question: &str) -> Result<Vec<ScoredCandidate>> {
        let ranked = self.retrieve(question)?;
        let mut all = self.score_candidates(question, &ranked);
        all.sort_by(candidate_order);
        Ok(all)
    }

    pub fn answer(&self, question: &str) -> Result<QueryResult> {
        self.answer_timed(question).map(|(r, _)| r)
    }

    /// Answer `question` and report wall-clock time per stage.
    pub fn answer_timed(&self, question: &str) -> Result<(QueryResult, StageTimes)> {
        let mut total = Stopwatch::start();
        let mut lap = Stopwatch::start();
        let indexes = self.indexes();
        let retrieval = &self.config.retrieval;
        retrieval.validate()?;

        let query = indexes.docs.embed_query(question);
        let docs = (!query.is_empty()).then(|| ranker::rank_documents(indexes, &query, retrieval.top_n_docs));
        let doc_rank = lap.lap();

        let ranked = RankedParagraphs {
            empty_query: docs.is_none(),
            paragraphs: docs
                .map(|d| ranker::rank_paragraphs(indexes, question, &d, retrieval.top_m_paras))
                .unwrap_or_default(),
        };
        let para_rank = lap.lap();

        let mut scored = self.score_candidates(question, &ranked);
        let keep = 1 + self.config.max_alternatives;
        if scored.len() > keep {
            scored.select_nth_unstable_by(keep - 1, candidate_order);
            scored.truncate(keep);
        }
        scored.sort_by(candidate_order);
        let matching = lap.lap();

        let times = StageTimes { doc_rank, para_rank, matching, total: total.lap() };
        let timing_ms = if self.config.report_timing {
            TimingMs {
                doc_rank: doc_rank.as_secs_f64() * 1e3,
                para_rank: para_rank.as_secs_f64() * 1e3,
                matching: matching.as_secs_f64() * 1e3,
            }
        } else {
            TimingMs::default()
        };

        let Some(best) = scored.first() else {
            return Ok((QueryResult::no_answer(timing_ms), times));
        };
        let qa = self.matched(best);
        let alternatives = scored[1..]
            .iter()
            .map(|c| {
                let m = self.matched(c);
                Alternative {
                    question: m.question,
                    answer: m.answer,
                    para_id: m.para_id,
                    doc_id: m.doc_id,
                    score: c.score,
                }
            })
            .collect();
        Ok((
            QueryResult { answer: Some(qa.answer.clone()), score: best.score, qa: Some(qa), alternatives, timing_ms },
            times,
        ))
    }

    fn matched(&self, c: &ScoredCandidate) -> MatchedQa {
        let para = &self.data.corpus.paragraphs[c.paragraph];
        let qa = &self.data.ocean.pairs[c.paragraph][c.pair];
        MatchedQa {
            question: qa.question.clone(),
            answer: qa.answer.clone(),
            para_id: para.para_id.clone(),
            doc_id: para.doc_id.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest_reader;

    const CORPUS: &str = r#"{"doc_id":"sb50","title":"Super Bowl 50","para_id":"sb50-0","text":"Super Bowl 50 was an American football game. The Denver Broncos defeated the Carolina Panthers 24-10 to earn their third Super Bowl title.","qa_pairs":[{"question":"What was the winning score in the Super Bowl?","answer":"24-10"},{"question":"What was the final score of the Super Bowl?","answer":"24-10"},{"question":"Who did the Denver Broncos defeat in the Super Bowl?","answer":"Carolina Panthers"}]}
{"doc_id":"sb50","title":"Super Bowl 50","para_id":"sb50-1","text":"The game was played at Levi's Stadium in Santa Clara, California.","qa_pairs":[{"question":"Where was Super Bowl 50 played?","answer":"Levi's Stadium"}]}
{"doc_id":"other","title":"Other","para_id":"other-0","text":"Nothing relevant here at all.","qa_pairs":[]}"#;

    fn engine(config: EngineConfig) -> Engine {
        let (corpus, ocean) = ingest_reader(CORPUS.as_bytes(), "t").unwrap();
        Engine::new(build_index_data(corpus, ocean).unwrap(), config).unwrap()
    }

    #[test]
    fn paraphrase_matches_generated_question() {
        let e = engine(EngineConfig::default());
        let r = e.answer("What was the final score of Super Bowl 50?").unwrap();
        assert_eq!(r.answer.as_deref(), Some("24-10"));
        let qa = r.qa.unwrap();
        assert_eq!(qa.question, "What was the final score of the Super Bowl?");
        assert_eq!(qa.para_id, "sb50-0");
        // query {what,was,the,final,score,of,super,bowl,50} vs
        // {what,was,the,final,score,of,super,bowl}: 8 / (9 + 8)
        assert_eq!(r.score, 8.0 / 17.0);
    }

    #[test]
    fn verbatim_question_scores_half() {
        let e = engine(EngineConfig::default());
        let r = e.answer("Where was Super Bowl 50 played?").unwrap();
        assert_eq!(r.score, 0.5);
        assert_eq!(r.answer.as_deref(), Some("Levi's Stadium"));
    }

    #[test]
    fn no_answer_paths() {
        let e = engine(EngineConfig::default());
        assert_eq!(e.answer("").unwrap().answer, None);
        assert_eq!(e.answer("nothing relevant").unwrap().answer, None);
    }

    #[test]
    fn timing_can_be_suppressed() {
        let cfg = EngineConfig { report_timing: false, ..EngineConfig::default() };
        let e = engine(cfg);
        let a = e.answer("who did denver defeat").unwrap();
        assert_eq!(a.timing_ms, TimingMs::default());
        assert_eq!(a.to_json_line(), e.answer("who did denver defeat").unwrap().to_json_line());
    }

    #[test]
    fn alternatives_are_ranked() {
        let e = engine(EngineConfig { max_alternatives: 2, ..EngineConfig::default() });
        let r = e.answer("What was the score of the Super Bowl?").unwrap();
        assert_eq!(r.alternatives.len(), 2);
        assert!(r.score >= r.alternatives[0].score);
        assert!(r.alternatives[0].score >= r.alternatives[1].score);
        let full = e.rank_candidates("What was the score of the Super Bowl?").unwrap();
        assert_eq!(full.len(), 4);
        assert_eq!(full[0].score, r.score);
    }

    #[test]
    fn dedup_flag_removes_repeats() {
        let (corpus, mut ocean) = ingest_reader(CORPUS.as_bytes(), "t").unwrap();
        let dup = ocean.pairs[0][0].clone();
        ocean.pairs[0].push(dup);
        ocean.stats = crate::corpus::OceanStats::compute(&corpus, &ocean);
        let data = build_index_data(corpus, ocean).unwrap();
        let plain = Engine::new(data.clone(), EngineConfig::default()).unwrap();
        let dedup = Engine::new(data, EngineConfig { dedup_questions: true, ..Default::default() }).unwrap();
        assert_eq!(plain.ocean().pairs[0].len(), 4);
        assert_eq!(dedup.ocean().pairs[0].len(), 3);
        let q = "What was the winning score in the Super Bowl?";
        assert_eq!(plain.answer(q).unwrap().answer, dedup.answer(q).unwrap().answer);
    }

    #[test]
    fn document_counts_sum_paragraphs() {
        let (corpus, _) = ingest_reader(CORPUS.as_bytes(), "t").unwrap();
        let p: Vec<_> = corpus.paragraphs.iter().map(|p| tfidf::gram_counts(&p.text)).collect();
        let merged = tfidf::merge_counts(&p[..2]);
        let total: u32 = merged.values().sum();
        assert_eq!(total, p[0].values().sum::<u32>() + p[1].values().sum::<u32>());
    }
}
