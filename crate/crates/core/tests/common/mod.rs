//! Shared generators and brute-force oracles for integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use oceanq::beam::TableScorer;
use oceanq::corpus::ingest_reader;
use oceanq::engine::build_index_data;
use oceanq::index::IndexData;
use oceanq::span::{SpanCandidate, SpanLogits};
use oceanq::tfidf::SparseVector;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Core fixture path; also resolves when this module is shared with
/// another crate's tests.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SYLLABLES: [&str; 16] =
    ["ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "ba", "de", "fo", "gu", "ha", "ji", "pe", "zo"];
const FILLERS: [&str; 8] = ["the", "of", "and", "in", "was", "is", "a", "to"];

/// A fixed pseudo-word vocabulary.
pub fn vocabulary(size: usize) -> Vec<String> {
    (0..size)
        .map(|i| {
            let a = SYLLABLES[i % 16];
            let b = SYLLABLES[(i / 16) % 16];
            let c = SYLLABLES[(i / 256) % 16];
            format!("{a}{b}{c}")
        })
        .collect()
}

/// Skewed word choice so some terms are frequent and some rare.
fn pick<'a>(rng: &mut ChaCha8Rng, vocab: &'a [String]) -> &'a str {
    if rng.random_bool(0.2) {
        return FILLERS.choose(rng).unwrap();
    }
    let u: f64 = rng.random();
    &vocab[((u * u) * vocab.len() as f64) as usize]
}

pub fn sentence(rng: &mut ChaCha8Rng, vocab: &[String], len: usize) -> String {
    (0..len).map(|_| pick(rng, vocab)).collect::<Vec<_>>().join(" ")
}

/// JSONL for `docs` documents with 3..=7 paragraphs each.
pub fn synthetic_jsonl(seed: u64, docs: usize) -> String {
    let mut rng = rng(seed);
    let vocab = vocabulary(600);
    let mut out = String::new();
    for d in 0..docs {
        let paras = rng.random_range(3..=7);
        for p in 0..paras {
            let len = rng.random_range(15..60);
            let text = sentence(&mut rng, &vocab, len);
            let words: Vec<&str> = text.split(' ').collect();
            let pairs: Vec<serde_json::Value> = (0..rng.random_range(1..=4))
                .map(|_| {
                    let q: Vec<&str> = (0..rng.random_range(3..8)).map(|_| *words.choose(&mut rng).unwrap()).collect();
                    serde_json::json!({
                        "question": format!("what {}", q.join(" ")),
                        "answer": *words.choose(&mut rng).unwrap(),
                    })
                })
                .collect();
            let rec = serde_json::json!({
                "doc_id": format!("d{d:04}"),
                "title": format!("Doc {d}"),
                "para_id": format!("d{d:04}-p{p}"),
                "text": text,
                "qa_pairs": pairs,
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
    }
    out
}

pub fn synthetic_index(seed: u64, docs: usize) -> IndexData {
    let jsonl = synthetic_jsonl(seed, docs);
    let (corpus, ocean) = ingest_reader(jsonl.as_bytes(), "synthetic").unwrap();
    build_index_data(corpus, ocean).unwrap()
}

/// Queries mixing words from a random paragraph with random vocabulary.
pub fn synthetic_queries(data: &IndexData, seed: u64, count: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let vocab = vocabulary(600);
    (0..count)
        .map(|_| {
            let p = &data.corpus.paragraphs[rng.random_range(0..data.corpus.paragraphs.len())];
            let words: Vec<&str> = p.text.split(' ').collect();
            let mut q: Vec<String> =
                (0..rng.random_range(2..6)).map(|_| words.choose(&mut rng).unwrap().to_string()).collect();
            let extra = rng.random_range(0..3);
            q.push(sentence(&mut rng, &vocab, extra));
            format!("what {}?", q.join(" "))
        })
        .collect()
}

/// Dot product by lookup, summed in ascending query-bin order.
pub fn dot(query: &SparseVector, item: &SparseVector) -> f64 {
    let mut s = 0.0;
    for &(bin, w) in query.entries() {
        if let Some(v) = item.get(bin) {
            s += w * v;
        }
    }
    s
}

fn best_first(a: &(f64, String), b: &(f64, String)) -> Ordering {
    match b.0.partial_cmp(&a.0).unwrap() {
        Ordering::Equal => a.1.cmp(&b.1),
        o => o,
    }
}

/// Exhaustive two-step retrieval: every document scored, top `n`, then
/// every paragraph of those scored, top `m`. Returns (para_id, score).
pub fn oracle_two_step(data: &IndexData, question: &str, n: usize, m: usize) -> Vec<(f64, String)> {
    let qd = data.docs.embed_query(question);
    if qd.is_empty() {
        return Vec::new();
    }
    let mut docs: Vec<(f64, String)> =
        (0..data.docs.num_items()).map(|d| (dot(&qd, data.docs.vector(d)), data.docs.ids()[d].clone())).collect();
    docs.sort_by(best_first);
    docs.truncate(n);
    let keep: HashSet<&str> = docs.iter().map(|d| d.1.as_str()).collect();
    let qp = data.paras.embed_query(question);
    let mut paras: Vec<(f64, String)> = data
        .corpus
        .paragraphs
        .iter()
        .enumerate()
        .filter(|(_, p)| keep.contains(p.doc_id.as_str()))
        .map(|(i, p)| (dot(&qp, data.paras.vector(i)), p.para_id.clone()))
        .collect();
    paras.sort_by(best_first);
    paras.truncate(m);
    paras
}

/// Every paragraph scored directly, no document stage.
pub fn oracle_single_step(data: &IndexData, question: &str) -> Vec<(f64, String)> {
    let qp = data.paras.embed_query(question);
    if data.docs.embed_query(question).is_empty() {
        return Vec::new();
    }
    let mut paras: Vec<(f64, String)> = data
        .corpus
        .paragraphs
        .iter()
        .enumerate()
        .map(|(i, p)| (dot(&qp, data.paras.vector(i)), p.para_id.clone()))
        .collect();
    paras.sort_by(best_first);
    paras
}

/// |q ∩ c| / (|q| + |c|) by explicit set intersection.
pub fn oracle_match(q: &BTreeSet<String>, c: &BTreeSet<String>) -> f64 {
    let shared = q.iter().filter(|t| c.contains(*t)).count();
    if q.is_empty() && c.is_empty() {
        return 0.0;
    }
    shared as f64 / (q.len() + c.len()) as f64
}

pub fn random_token_set(rng: &mut ChaCha8Rng, alphabet: usize, max_len: usize) -> BTreeSet<String> {
    let n = rng.random_range(0..=max_len);
    (0..n).map(|_| format!("t{}", rng.random_range(0..alphabet))).collect()
}

/// Every valid span, sorted, first `k`.
pub fn oracle_spans(logits: &SpanLogits, k: usize, max_len: usize) -> Vec<SpanCandidate> {
    let n = logits.len();
    let mut all = Vec::new();
    for s in 0..n {
        for e in s..n {
            if e - s < max_len {
                all.push(SpanCandidate { start: s, end: e, score: logits.start()[s] + logits.end()[e] });
            }
        }
    }
    all.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap().then(a.start.cmp(&b.start)).then(a.end.cmp(&b.end)));
    all.truncate(k);
    all
}

/// Random logits on a quarter-integer grid so ties are common.
pub fn random_logits(rng: &mut ChaCha8Rng, max_n: usize) -> SpanLogits {
    let n = rng.random_range(0..=max_n);
    let mut draw = || (0..n).map(|_| rng.random_range(-24i32..=24) as f64 / 4.0).collect::<Vec<_>>();
    let start = draw();
    let end = draw();
    SpanLogits::new(start, end).unwrap()
}

pub const EOS: &str = "</s>";

/// A complete scorer table over a small alphabet. Depth-`depth`
/// prefixes only offer end-of-sequence, so every path terminates.
pub fn random_table(rng: &mut ChaCha8Rng, depth: usize) -> BTreeMap<String, BTreeMap<String, f64>> {
    let alphabet = ["a", "b", "c"];
    let mut table = BTreeMap::new();
    let mut frontier = vec![Vec::<String>::new()];
    while let Some(prefix) = frontier.pop() {
        let mut row = BTreeMap::new();
        if prefix.len() == depth {
            row.insert(EOS.to_string(), -(rng.random_range(0..8) as f64) / 4.0);
        } else {
            for t in alphabet {
                if rng.random_bool(0.8) {
                    row.insert(t.to_string(), -(rng.random_range(0..16) as f64) / 4.0);
                }
            }
            if row.is_empty() || rng.random_bool(0.3) {
                row.insert(EOS.to_string(), -(rng.random_range(0..16) as f64) / 4.0);
            }
            for t in row.keys().filter(|t| *t != EOS) {
                let mut p = prefix.clone();
                p.push(t.clone());
                frontier.push(p);
            }
        }
        table.insert(prefix.join(" "), row);
    }
    table
}

/// All terminated sequences of a table with their scores, best first.
pub fn exhaustive_sequences(scorer: &TableScorer) -> Vec<(Vec<String>, f64)> {
    fn walk(t: &TableScorer, prefix: Vec<String>, cum: f64, out: &mut Vec<(Vec<String>, f64)>) {
        for (tok, &s) in &t.table()[&prefix.join(" ")] {
            let mut p = prefix.clone();
            p.push(tok.clone());
            if tok == EOS {
                out.push((p, cum + s));
            } else {
                walk(t, p, cum + s, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(scorer, Vec::new(), 0.0, &mut out);
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}
