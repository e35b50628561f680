//! Hashed unigram+bigram TF-IDF vectors.
//!
//! Weights are `ln(1 + tf) * idf` with the smoothed, clamped
//! `idf = max(0, ln((N - df + 0.5) / (df + 0.5)))`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

/// Raw hashed gram counts for one item, keyed by bin.
pub type GramCounts = BTreeMap<u32, u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Document,
    Paragraph,
}

/// Sparse vector over hashed bins. Bins strictly increase and every
/// weight is positive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Build from `(bin, weight)` pairs. Zero weights are dropped; bins must
    /// be strictly increasing and weights finite and non-negative.
    pub fn from_sorted(entries: Vec<(u32, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidInput(format!("sparse bins not strictly increasing at {}", w[1].0)));
            }
        }
        if let Some(&(bin, w)) = entries.iter().find(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(format!("invalid weight {w} at bin {bin}")));
        }
        Ok(SparseVector { entries: entries.into_iter().filter(|&(_, w)| w > 0.0).collect() })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, bin: u32) -> Option<f64> {
        self.entries.binary_search_by_key(&bin, |&(b, _)| b).ok().map(|i| self.entries[i].1)
    }
}

/// Inner product over shared bins, accumulated in ascending bin order.
pub fn score(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&a.entries, &b.entries);
    let mut sum = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

/// Hashed unigram and bigram counts of `text`.
pub fn gram_counts(text: &str) -> GramCounts {
    let tokens = text::tokenize(text);
    let mut counts = GramCounts::new();
    for gram in text::ngrams(&tokens, 2) {
        *counts.entry(text::hash_gram(&gram).bin).or_insert(0) += 1;
    }
    counts
}

pub fn idf(num_items: u64, df: u64) -> f64 {
    let n = num_items as f64;
    let df = df as f64;
    ((n - df + 0.5) / (df + 0.5)).ln().max(0.0)
}

pub fn tf_weight(count: u32) -> f64 {
    (count as f64).ln_1p()
}

/// TF-IDF matrix for one granularity, plus the corpus statistics needed
/// to embed queries against it.
#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    level: Level,
    ids: Vec<String>,
    /// `(bin, item frequency)`, sorted by bin.
    doc_freq: Vec<(u32, u32)>,
    vectors: Vec<SparseVector>,
    df_lookup: HashMap<u32, u32>,
    postings: HashMap<u32, Vec<(u32, f64)>>,
}

impl PartialEq for TfIdfIndex {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self.ids == other.ids
            && self.doc_freq == other.doc_freq
            && self.vectors.len() == other.vectors.len()
            && self.vectors.iter().zip(&other.vectors).all(|(a, b)| {
                a.entries.len() == b.entries.len()
                    && a.entries.iter().zip(&b.entries).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits())
            })
    }
}

impl TfIdfIndex {
    /// Build an index over `(id, text)` items.
    pub fn build<S: AsRef<str> + Sync>(items: &[(S, S)], level: Level) -> Result<Self> {
        let ids: Vec<String> = items.iter().map(|(id, _)| id.as_ref().to_owned()).collect();
        let counts = count_all(items);
        Self::from_counts(ids, counts, level)
    }

    /// Build from precomputed gram counts, one entry per item.
    pub fn from_counts(ids: Vec<String>, counts: Vec<GramCounts>, level: Level) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if ids.len() != counts.len() {
            return Err(Error::InvalidInput("ids and counts differ in length".into()));
        }
        {
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
                return Err(Error::InvalidInput(format!("duplicate item id {dup:?}")));
            }
        }

        let mut df: BTreeMap<u32, u32> = BTreeMap::new();
        for c in &counts {
            for &bin in c.keys() {
                *df.entry(bin).or_insert(0) += 1;
            }
        }
        let num_items = ids.len() as u64;
        let vectors = counts
            .iter()
            .map(|c| {
                let entries = c
                    .iter()
                    .map(|(&bin, &tf)| (bin, tf_weight(tf) * idf(num_items, df[&bin] as u64)))
                    .filter(|&(_, w)| w > 0.0)
                    .collect();
                SparseVector { entries }
            })
            .collect();
        Ok(Self::assemble(level, ids, df.into_iter().collect(), vectors))
    }

    /// Reassemble a persisted index, checking its invariants.
    pub fn from_parts(
        level: Level,
        ids: Vec<String>,
        doc_freq: Vec<(u32, u32)>,
        vectors: Vec<SparseVector>,
    ) -> Result<Self> {
        if ids.len() != vectors.len() {
            return Err(Error::InvalidInput("ids and vectors differ in length".into()));
        }
        if doc_freq.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("doc_freq bins not sorted".into()));
        }
        let n = ids.len() as u32;
        if doc_freq.iter().any(|&(_, f)| f == 0 || f > n) {
            return Err(Error::InvalidInput("doc_freq out of range".into()));
        }
        let index = Self::assemble(level, ids, doc_freq, vectors);
        for v in &index.vectors {
            SparseVector::from_sorted(v.entries.clone())?;
            if let Some(&(bin, _)) = v.entries.iter().find(|(b, _)| !index.df_lookup.contains_key(b)) {
                return Err(Error::InvalidInput(format!("bin {bin} missing from doc_freq")));
            }
        }
        Ok(index)
    }

    fn assemble(level: Level, ids: Vec<String>, doc_freq: Vec<(u32, u32)>, vectors: Vec<SparseVector>) -> Self {
        let df_lookup = doc_freq.iter().copied().collect();
        let mut postings: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        for (item, v) in vectors.iter().enumerate() {
            for &(bin, w) in &v.entries {
                postings.entry(bin).or_default().push((item as u32, w));
            }
        }
        TfIdfIndex { level, ids, doc_freq, vectors, df_lookup, postings }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn num_items(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn doc_freq(&self) -> &[(u32, u32)] {
        &self.doc_freq
    }

    pub fn bin_doc_freq(&self, bin: u32) -> u32 {
        self.df_lookup.get(&bin).copied().unwrap_or(0)
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn vector(&self, item: usize) -> &SparseVector {
        &self.vectors[item]
    }

    /// TF-IDF vector of a query: term frequencies from the query itself,
    /// document frequencies from this index.
    pub fn embed_query(&self, question: &str) -> SparseVector {
        let n = self.num_items() as u64;
        let entries = gram_counts(question)
            .into_iter()
            .map(|(bin, tf)| (bin, tf_weight(tf) * idf(n, self.bin_doc_freq(bin) as u64)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        SparseVector { entries }
    }

    /// Score every item against `query` using the postings lists.
    /// Per-item sums accumulate in ascending query-bin order, matching
    /// [`score`] bit for bit.
    pub fn score_all(&self, query: &SparseVector) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_items()];
        for &(bin, qw) in &query.entries {
            if let Some(list) = self.postings.get(&bin) {
                for &(item, w) in list {
                    scores[item as usize] += qw * w;
                }
            }
        }
        scores
    }
}

#[cfg(feature = "parallel")]
fn count_all<S: AsRef<str> + Sync>(items: &[(S, S)]) -> Vec<GramCounts> {
    use rayon::prelude::*;
    items.par_iter().map(|(_, t)| gram_counts(t.as_ref())).collect()
}

#[cfg(not(feature = "parallel"))]
fn count_all<S: AsRef<str> + Sync>(items: &[(S, S)]) -> Vec<GramCounts> {
    items.iter().map(|(_, t)| gram_counts(t.as_ref())).collect()
}

/// Sum per-item counts into a single item (e.g. paragraphs into their
/// document). Grams never span the boundary between merged items.
pub fn merge_counts<'a>(parts: impl IntoIterator<Item = &'a GramCounts>) -> GramCounts {
    let mut total = GramCounts::new();
    for part in parts {
        for (&bin, &c) in part {
            *total.entry(bin).or_insert(0) += c;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bin(g: &str) -> u32 {
        text::hash_gram(g).bin
    }

    #[test]
    fn single_item_idf_clamps_to_zero() {
        let idx = TfIdfIndex::build(&[("a", "zebra")], Level::Paragraph).unwrap();
        assert_eq!(idf(1, 1), 0.0);
        assert!(idx.vector(0).is_empty());
        assert_eq!(idx.bin_doc_freq(bin("zebra")), 1);
    }

    #[test]
    fn two_items_idf_is_zero() {
        let idx = TfIdfIndex::build(&[("a", "zebra"), ("b", "lion")], Level::Paragraph).unwrap();
        assert_eq!(idf(2, 1), 0.0);
        assert!(idx.vector(0).is_empty());
        assert!(idx.vector(1).is_empty());
    }

    #[test]
    fn ten_items_weight() {
        let mut items = vec![("i0".to_string(), "zebra zebra".to_string())];
        for i in 1..10 {
            items.push((format!("i{i}"), format!("filler{i}")));
        }
        let idx = TfIdfIndex::build(&items, Level::Paragraph).unwrap();
        // ln(3) * ln(9.5 / 1.5)
        let expected = 3f64.ln() * (9.5f64 / 1.5).ln();
        let got = idx.vector(0).get(bin("zebra")).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 2.027_847_884_933_054).abs() < 1e-12);
    }

    #[test]
    fn query_idf_uses_smoothed_zero_df() {
        let items: Vec<_> = (0..4).map(|i| (format!("i{i}"), format!("word{i}"))).collect();
        let idx = TfIdfIndex::build(&items, Level::Paragraph).unwrap();
        let q = idx.embed_query("unseen");
        assert_eq!(q.get(bin("unseen")), Some(2f64.ln() * (4.5f64 / 0.5).ln()));
        assert!(idx.embed_query("").is_empty());
        assert!(idx.embed_query("the of and").is_empty());
    }

    #[test]
    fn rejects_empty_and_duplicate_items() {
        let none: [(&str, &str); 0] = [];
        assert!(matches!(TfIdfIndex::build(&none, Level::Document), Err(Error::EmptyCorpus)));
        assert!(TfIdfIndex::build(&[("a", "x"), ("a", "y")], Level::Document).is_err());
    }

    #[test]
    fn empty_text_gives_empty_vector() {
        let idx = TfIdfIndex::build(&[("a", ""), ("b", "x"), ("c", "y")], Level::Paragraph).unwrap();
        assert!(idx.vector(0).is_empty());
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::from_sorted(vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(SparseVector::from_sorted(vec![(1, -1.0)]).is_err());
        assert!(SparseVector::from_sorted(vec![(1, f64::NAN)]).is_err());
        let v = SparseVector::from_sorted(vec![(1, 0.0), (3, 2.0)]).unwrap();
        assert_eq!(v.entries(), &[(3, 2.0)]);
    }

    #[test]
    fn disjoint_and_self_scores() {
        let a = SparseVector::from_sorted(vec![(1, 2.0), (5, 1.0)]).unwrap();
        let b = SparseVector::from_sorted(vec![(2, 3.0)]).unwrap();
        assert_eq!(score(&a, &b), 0.0);
        assert_eq!(score(&a, &a), 5.0);
    }

    fn sparse() -> impl Strategy<Value = SparseVector> {
        proptest::collection::btree_map(0u32..64, 0.0f64..10.0, 0..20)
            .prop_map(|m| SparseVector::from_sorted(m.into_iter().collect()).unwrap())
    }

    proptest! {
        #[test]
        fn score_matches_dense_dot(a in sparse(), b in sparse()) {
            let mut da = [0.0f64; 64];
            let mut db = [0.0f64; 64];
            for &(i, w) in a.entries() { da[i as usize] = w; }
            for &(i, w) in b.entries() { db[i as usize] = w; }
            let dense: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
            prop_assert_eq!(score(&a, &b), dense);
            prop_assert_eq!(score(&a, &b), score(&b, &a));
            prop_assert!(score(&a, &b) >= 0.0);
        }

        #[test]
        fn merged_counts_equal_sum(texts in proptest::collection::vec("[a-e ]{0,30}", 1..5)) {
            let parts: Vec<GramCounts> = texts.iter().map(|t| gram_counts(t)).collect();
            let merged = merge_counts(&parts);
            let total: u32 = merged.values().sum();
            let expect: u32 = parts.iter().flat_map(|p| p.values()).sum();
            prop_assert_eq!(total, expect);
        }
    }
}
