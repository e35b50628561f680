//! On-disk index directory.
//!
//! ```text
//! <dir>/
//!   manifest.json     format version, per-file SHA-256, corpus statistics
//!   corpus.bin        documents and paragraphs
//!   ocean.bin         QA pairs grouped by paragraph, plus statistics
//!   tfidf_doc.bin     document-level TF-IDF index
//!   tfidf_para.bin    paragraph-level TF-IDF index
//! ```
//!
//! Directories are published atomically: everything is written to a
//! sibling temp directory which is then renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{Kind, Reader, Writer, FORMAT_VERSION};
use crate::corpus::{Corpus, Document, GenScores, OceanStats, Paragraph, QaPair, QuestionOcean};
use crate::error::{Error, Result};
use crate::ranker::Indexes;
use crate::text::{NUM_BINS, STOPWORDS_SHA256};
use crate::tfidf::{Level, SparseVector, TfIdfIndex};

pub const MANIFEST: &str = "manifest.json";
pub const CORPUS_BIN: &str = "corpus.bin";
pub const OCEAN_BIN: &str = "ocean.bin";
pub const TFIDF_DOC_BIN: &str = "tfidf_doc.bin";
pub const TFIDF_PARA_BIN: &str = "tfidf_para.bin";

/// Every file an index directory contains.
pub const INDEX_FILES: [&str; 5] = [MANIFEST, CORPUS_BIN, OCEAN_BIN, TFIDF_DOC_BIN, TFIDF_PARA_BIN];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub num_bins: u32,
    pub stopwords_sha256: String,
    pub files: BTreeMap<String, FileEntry>,
    pub statistics: OceanStats,
}

/// Everything loaded from an index directory.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexData {
    pub corpus: Corpus,
    pub ocean: QuestionOcean,
    pub docs: TfIdfIndex,
    pub paras: TfIdfIndex,
}

impl IndexData {
    pub fn indexes(&self) -> Indexes<'_> {
        Indexes { corpus: &self.corpus, docs: &self.docs, paras: &self.paras }
    }
}

fn encode_corpus(corpus: &Corpus) -> Vec<u8> {
    let mut w = Writer::new();
    w.count(corpus.documents.len());
    for d in &corpus.documents {
        w.str(&d.doc_id);
        w.str(&d.title);
        w.count(d.paragraphs.len());
        for &p in &d.paragraphs {
            w.u64(p as u64);
        }
    }
    w.count(corpus.paragraphs.len());
    for p in &corpus.paragraphs {
        w.str(&p.para_id);
        w.str(&p.doc_id);
        w.str(&p.text);
    }
    w.finish(Kind::Corpus)
}

fn decode_corpus(bytes: &[u8]) -> Result<Corpus> {
    let mut r = Reader::open(CORPUS_BIN, bytes, Kind::Corpus)?;
    let n = r.count()?;
    let mut documents = Vec::with_capacity(n);
    for _ in 0..n {
        let doc_id = r.str()?;
        let title = r.str()?;
        let k = r.count()?;
        let mut paragraphs = Vec::with_capacity(k);
        for _ in 0..k {
            paragraphs.push(r.u64()? as usize);
        }
        documents.push(Document { doc_id, title, paragraphs });
    }
    let n = r.count()?;
    let mut paragraphs = Vec::with_capacity(n);
    for _ in 0..n {
        paragraphs.push(Paragraph { para_id: r.str()?, doc_id: r.str()?, text: r.str()? });
    }
    r.finish()?;
    Ok(Corpus { documents, paragraphs })
}

fn encode_stats(w: &mut Writer, s: &OceanStats) {
    w.u64(s.num_documents);
    w.u64(s.num_paragraphs);
    w.u64(s.num_pairs);
    w.f64(s.mean_paragraphs_per_doc);
    w.f64(s.mean_answers_per_paragraph);
    w.f64(s.mean_questions_per_answer);
}

fn decode_stats(r: &mut Reader<'_>) -> Result<OceanStats> {
    Ok(OceanStats {
        num_documents: r.u64()?,
        num_paragraphs: r.u64()?,
        num_pairs: r.u64()?,
        mean_paragraphs_per_doc: r.f64()?,
        mean_answers_per_paragraph: r.f64()?,
        mean_questions_per_answer: r.f64()?,
    })
}

const HAS_RAW: u8 = 1;
const HAS_SPAN: u8 = 2;
const HAS_SCORES: u8 = 4;

fn encode_ocean(ocean: &QuestionOcean) -> Vec<u8> {
    let mut w = Writer::new();
    encode_stats(&mut w, &ocean.stats);
    w.count(ocean.para_ids.len());
    for (para_id, group) in ocean.para_ids.iter().zip(&ocean.pairs) {
        w.str(para_id);
        w.count(group.len());
        for qa in group {
            let flags = (qa.raw_answer.is_some() as u8 * HAS_RAW)
                | (qa.answer_span.is_some() as u8 * HAS_SPAN)
                | (qa.gen_scores.is_some() as u8 * HAS_SCORES);
            w.u8(flags);
            w.str(&qa.question);
            w.str(&qa.answer);
            if let Some(raw) = &qa.raw_answer {
                w.str(raw);
            }
            if let Some((s, e)) = qa.answer_span {
                w.u32(s);
                w.u32(e);
            }
            if let Some(g) = &qa.gen_scores {
                w.opt_f64(g.qg_score);
                w.opt_f64(g.qqp_score);
                w.opt_f64(g.f1_score);
            }
        }
    }
    w.finish(Kind::Ocean)
}

fn decode_ocean(bytes: &[u8]) -> Result<QuestionOcean> {
    let mut r = Reader::open(OCEAN_BIN, bytes, Kind::Ocean)?;
    let stats = decode_stats(&mut r)?;
    let n = r.count()?;
    let mut para_ids = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        para_ids.push(r.str()?);
        let k = r.count()?;
        let mut group = Vec::with_capacity(k);
        for _ in 0..k {
            let flags = r.u8()?;
            if flags & !(HAS_RAW | HAS_SPAN | HAS_SCORES) != 0 {
                return Err(Error::Corrupt {
                    file: OCEAN_BIN.into(),
                    reason: format!("unknown pair flags {flags:#x}"),
                });
            }
            let question = r.str()?;
            let answer = r.str()?;
            let raw_answer = if flags & HAS_RAW != 0 { Some(r.str()?) } else { None };
            let answer_span = if flags & HAS_SPAN != 0 { Some((r.u32()?, r.u32()?)) } else { None };
            let gen_scores = if flags & HAS_SCORES != 0 {
                Some(GenScores { qg_score: r.opt_f64()?, qqp_score: r.opt_f64()?, f1_score: r.opt_f64()? })
            } else {
                None
            };
            group.push(QaPair { question, answer, raw_answer, answer_span, gen_scores });
        }
        pairs.push(group);
    }
    r.finish()?;
    Ok(QuestionOcean { para_ids, pairs, stats })
}

fn encode_tfidf(index: &TfIdfIndex) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(match index.level() {
        Level::Document => 0,
        Level::Paragraph => 1,
    });
    w.count(index.num_items());
    for id in index.ids() {
        w.str(id);
    }
    w.count(index.doc_freq().len());
    for &(bin, df) in index.doc_freq() {
        w.u32(bin);
        w.u32(df);
    }
    for v in index.vectors() {
        w.count(v.len());
        for &(bin, weight) in v.entries() {
            w.u32(bin);
            w.f64(weight);
        }
    }
    w.finish(match index.level() {
        Level::Document => Kind::TfIdfDoc,
        Level::Paragraph => Kind::TfIdfPara,
    })
}

fn decode_tfidf(file: &str, bytes: &[u8], level: Level) -> Result<TfIdfIndex> {
    let kind = match level {
        Level::Document => Kind::TfIdfDoc,
        Level::Paragraph => Kind::TfIdfPara,
    };
    let mut r = Reader::open(file, bytes, kind)?;
    let corrupt = |reason: String| Error::Corrupt { file: file.to_owned(), reason };
    let stored_level = match r.u8()? {
        0 => Level::Document,
        1 => Level::Paragraph,
        t => return Err(corrupt(format!("bad level tag {t}"))),
    };
    if stored_level != level {
        return Err(corrupt(format!("level {stored_level:?}, expected {level:?}")));
    }
    let n = r.count()?;
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        ids.push(r.str()?);
    }
    let k = r.count()?;
    let mut doc_freq = Vec::with_capacity(k);
    for _ in 0..k {
        doc_freq.push((r.u32()?, r.u32()?));
    }
    let mut vectors = Vec::with_capacity(n);
    for _ in 0..n {
        let k = r.count()?;
        let mut entries = Vec::with_capacity(k);
        for _ in 0..k {
            entries.push((r.u32()?, r.f64()?));
        }
        vectors.push(SparseVector::from_sorted(entries).map_err(|e| corrupt(e.to_string()))?);
    }
    r.finish()?;
    TfIdfIndex::from_parts(level, ids, doc_freq, vectors).map_err(|e| corrupt(e.to_string()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serialize every artifact. Output is a pure function of the input.
pub fn encode_all(data: &IndexData) -> (Manifest, Vec<(&'static str, Vec<u8>)>) {
    let files = vec![
        (CORPUS_BIN, encode_corpus(&data.corpus)),
        (OCEAN_BIN, encode_ocean(&data.ocean)),
        (TFIDF_DOC_BIN, encode_tfidf(&data.docs)),
        (TFIDF_PARA_BIN, encode_tfidf(&data.paras)),
    ];
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        num_bins: NUM_BINS,
        stopwords_sha256: STOPWORDS_SHA256.to_owned(),
        files: files
            .iter()
            .map(|(name, bytes)| (name.to_string(), FileEntry { sha256: sha256_hex(bytes), bytes: bytes.len() as u64 }))
            .collect(),
        statistics: data.ocean.stats.clone(),
    };
    (manifest, files)
}

fn temp_sibling(out: &Path, tag: &str) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "index".into());
    let nonce = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    out.with_file_name(format!(".{name}.{tag}-{}-{nonce}", std::process::id()))
}

/// Write `data` to `out`, atomically. An existing `out` is replaced only
/// when `force` is set.
pub fn persist(data: &IndexData, out: &Path, force: bool) -> Result<Manifest> {
    if out.exists() && !force {
        return Err(Error::IndexExists(out.to_path_buf()));
    }
    let (manifest, files) = encode_all(data);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = temp_sibling(out, "tmp");
    let result = (|| {
        fs::create_dir(&tmp).map_err(|e| Error::io(&tmp, e))?;
        for (name, bytes) in &files {
            let path = tmp.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        let path = tmp.join(MANIFEST);
        let json = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;

        if out.exists() {
            let old = temp_sibling(out, "old");
            fs::rename(out, &old).map_err(|e| Error::io(out, e))?;
            fs::rename(&tmp, out).map_err(|e| Error::io(out, e))?;
            fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
        } else {
            fs::rename(&tmp, out).map_err(|e| Error::io(out, e))?;
        }
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result.map(|_| manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    if !path.is_file() {
        return Err(Error::MissingIndex(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Corrupt { file: MANIFEST.into(), reason: e.to_string() })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            file: MANIFEST.into(),
            expected: FORMAT_VERSION,
            found: manifest.format_version,
        });
    }
    if manifest.num_bins != NUM_BINS || manifest.stopwords_sha256 != STOPWORDS_SHA256 {
        return Err(Error::Corrupt {
            file: MANIFEST.into(),
            reason: "index was built with a different feature space".into(),
        });
    }
    Ok(manifest)
}

/// Load and fully validate an index directory.
pub fn load(dir: &Path) -> Result<(Manifest, IndexData)> {
    let manifest = read_manifest(dir)?;
    let read = |name: &str| -> Result<Vec<u8>> {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingIndex(dir.to_path_buf()),
            _ => Error::io(&path, e),
        })?;
        let entry = manifest
            .files
            .get(name)
            .ok_or_else(|| Error::Corrupt { file: MANIFEST.into(), reason: format!("no entry for {name}") })?;
        if entry.bytes != bytes.len() as u64 || entry.sha256 != sha256_hex(&bytes) {
            return Err(Error::Corrupt { file: name.into(), reason: "checksum does not match manifest".into() });
        }
        Ok(bytes)
    };
    let corpus = decode_corpus(&read(CORPUS_BIN)?)?;
    let ocean = decode_ocean(&read(OCEAN_BIN)?)?;
    let docs = decode_tfidf(TFIDF_DOC_BIN, &read(TFIDF_DOC_BIN)?, Level::Document)?;
    let paras = decode_tfidf(TFIDF_PARA_BIN, &read(TFIDF_PARA_BIN)?, Level::Paragraph)?;

    corpus.validate()?;
    ocean.validate(&corpus)?;
    if manifest.statistics != ocean.stats {
        return Err(Error::Corrupt { file: MANIFEST.into(), reason: "statistics disagree with ocean.bin".into() });
    }
    let doc_ids: Vec<&String> = corpus.documents.iter().map(|d| &d.doc_id).collect();
    let para_ids: Vec<&String> = corpus.paragraphs.iter().map(|p| &p.para_id).collect();
    if docs.ids().iter().collect::<Vec<_>>() != doc_ids || paras.ids().iter().collect::<Vec<_>>() != para_ids {
        return Err(Error::Corrupt {
            file: TFIDF_DOC_BIN.into(),
            reason: "TF-IDF item ids do not match the corpus".into(),
        });
    }
    Ok((manifest, IndexData { corpus, ocean, docs, paras }))
}
