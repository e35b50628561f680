//! Tokenization, n-gram extraction and feature hashing.
//!
//! Every indexing and matching path in the crate goes through these
//! functions, so they must stay byte-for-byte deterministic: a token or
//! bin computed at index-build time has to be reproduced exactly at query
//! time, on any platform.

use std::collections::HashSet;
use std::sync::OnceLock;

use unicode_normalization::UnicodeNormalization;

/// Number of hash bins for n-gram features (2^24).
pub const NUM_BINS: u32 = 1 << 24;

/// The bundled English stopword list.
pub const STOPWORDS_FILE: &str = include_str!("../data/stopwords.txt");

/// SHA-256 of `data/stopwords.txt`, as documented in the README.
pub const STOPWORDS_SHA256: &str = "189ef13ad716f6b602609724772f92cfd8a515db61b05032e8ee1cbc33ab05dd";

/// A normalized token: lowercase, NFC, a maximal run of alphanumerics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Lowercase and NFC-normalize `text`.
pub fn normalize(text: &str) -> String {
    // NFC first so composed lowercase forms are produced, then NFC again
    // because lowercasing can emit decomposed sequences.
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    lowered.nfc().collect()
}

/// Split `text` into normalized tokens. Every non-alphanumeric character
/// is a boundary, so punctuation never survives.
pub fn tokenize(text: &str) -> Vec<Token> {
    normalize(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| Token(s.to_owned()))
        .collect()
}

/// Parse a stopword file: one token per line, `#` starts a comment line,
/// blank lines ignored. Entries are normalized like tokens.
pub fn parse_stopwords(contents: &str) -> HashSet<String> {
    contents.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(normalize).collect()
}

pub fn stopwords() -> &'static HashSet<String> {
    static WORDS: OnceLock<HashSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| parse_stopwords(STOPWORDS_FILE))
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// All contiguous 1..=`max_n` grams of `tokens`, joined by a single space.
///
/// A gram is dropped if any of its tokens is a stopword. Grams are emitted
/// unigrams first, then bigrams, each in text order.
pub fn ngrams<T: AsRef<str>>(tokens: &[T], max_n: usize) -> Vec<String> {
    assert!((1..=2).contains(&max_n), "max_n must be 1 or 2, got {max_n}");
    let mut grams = Vec::with_capacity(tokens.len() * max_n);
    for n in 1..=max_n {
        for window in tokens.windows(n) {
            if window.iter().any(|t| is_stopword(t.as_ref())) {
                continue;
            }
            let gram = window.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
            grams.push(gram);
        }
    }
    grams
}

/// A gram mapped into the hashed feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashedFeature {
    pub bin: u32,
    pub arity: u8,
}

/// Hash a gram string into `[0, NUM_BINS)`.
pub fn hash_gram(gram: &str) -> HashedFeature {
    let arity = if gram.contains(' ') { 2 } else { 1 };
    HashedFeature { bin: murmur3_32(gram.as_bytes(), 0) % NUM_BINS, arity }
}

/// MurmurHash3, x86 32-bit variant.
pub fn murmur3_32(data: &[u8], seed: u32) -> u32 {
    const C1: u32 = 0xcc9e_2d51;
    const C2: u32 = 0x1b87_3593;

    let mut h = seed;
    let mut blocks = data.chunks_exact(4);
    for block in &mut blocks {
        let mut k = u32::from_le_bytes([block[0], block[1], block[2], block[3]]);
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
        h = h.rotate_left(13).wrapping_mul(5).wrapping_add(0xe654_6b64);
    }

    let tail = blocks.remainder();
    if !tail.is_empty() {
        let mut k = 0u32;
        for (i, &b) in tail.iter().enumerate() {
            k |= (b as u32) << (8 * i);
        }
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
    }

    h ^= data.len() as u32;
    fmix32(h)
}

fn fmix32(mut h: u32) -> u32 {
    h ^= h >> 16;
    h = h.wrapping_mul(0x85eb_ca6b);
    h ^= h >> 13;
    h = h.wrapping_mul(0xc2b2_ae35);
    h ^= h >> 16;
    h
}
