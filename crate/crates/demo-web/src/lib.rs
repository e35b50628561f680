//! Browser bindings: question lookup over a built-in sample pool, span
//! top-K, and standard vs diverse beam search. Every function takes and
//! returns JSON strings.

use std::sync::OnceLock;

use oceanq::beam::{self, BeamConfig, TableScorer};
use oceanq::corpus::ingest_reader;
use oceanq::engine::{build_index_data, Engine, EngineConfig};
use oceanq::span::{self, SpanLogits};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const SAMPLE_POOL: &str = include_str!("../../core/fixtures/ocean_fixture.jsonl");

fn engine() -> Result<&'static Engine, String> {
    static ENGINE: OnceLock<Result<Engine, String>> = OnceLock::new();
    ENGINE
        .get_or_init(|| {
            let (corpus, ocean) = ingest_reader(SAMPLE_POOL.as_bytes(), "sample pool").map_err(|e| e.to_string())?;
            let data = build_index_data(corpus, ocean).map_err(|e| e.to_string())?;
            // Timings are not available in the browser build.
            let config = EngineConfig { report_timing: false, ..EngineConfig::default() };
            Engine::new(data, config).map_err(|e| e.to_string())
        })
        .as_ref()
        .map_err(Clone::clone)
}

#[derive(Serialize)]
struct PoolSummary {
    documents: Vec<String>,
    paragraphs: usize,
    pairs: usize,
    examples: Vec<String>,
}

pub fn pool_summary_json() -> Result<String, String> {
    let e = engine()?;
    let summary = PoolSummary {
        documents: e.corpus().documents.iter().map(|d| d.title.clone()).collect(),
        paragraphs: e.corpus().paragraphs.len(),
        pairs: e.ocean().num_pairs(),
        examples: e.ocean().pairs.iter().filter_map(|g| g.first()).map(|qa| qa.question.clone()).collect(),
    };
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

pub fn answer_json(question: &str) -> Result<String, String> {
    Ok(engine()?.answer(question).map_err(|e| e.to_string())?.to_json_line())
}

#[derive(Deserialize)]
struct LogitsInput {
    start: Vec<f64>,
    end: Vec<f64>,
}

pub fn top_spans_json(logits: &str, k: usize, max_len: usize) -> Result<String, String> {
    let input: LogitsInput = serde_json::from_str(logits).map_err(|e| e.to_string())?;
    let logits = SpanLogits::new(input.start, input.end).map_err(|e| e.to_string())?;
    let spans = span::top_k_spans(&logits, k, max_len).map_err(|e| e.to_string())?;
    serde_json::to_string(&spans).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BeamComparison {
    standard: Vec<beam::Hypothesis>,
    diverse: Vec<beam::Hypothesis>,
}

pub fn compare_beams_json(table: &str, beam_size: usize, max_steps: usize, gamma: f64) -> Result<String, String> {
    let scorer = TableScorer::from_json(table).map_err(|e| e.to_string())?;
    let config = BeamConfig { beam_size, max_steps, eos: "</s>".into() };
    let standard = beam::beam_search(&scorer, "", &config).map_err(|e| e.to_string())?;
    let diverse = beam::diverse_beam_search(&scorer, "", &config, gamma).map_err(|e| e.to_string())?;
    serde_json::to_string(&BeamComparison { standard, diverse }).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = poolSummary)]
pub fn pool_summary() -> Result<String, JsError> {
    js(pool_summary_json())
}

#[wasm_bindgen]
pub fn answer(question: &str) -> Result<String, JsError> {
    js(answer_json(question))
}

#[wasm_bindgen(js_name = topSpans)]
pub fn top_spans(logits: &str, k: usize, max_len: usize) -> Result<String, JsError> {
    js(top_spans_json(logits, k, max_len))
}

#[wasm_bindgen(js_name = compareBeams)]
pub fn compare_beams(table: &str, beam_size: usize, max_steps: usize, gamma: f64) -> Result<String, JsError> {
    js(compare_beams_json(table, beam_size, max_steps, gamma))
}
