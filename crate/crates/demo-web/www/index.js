import init, { poolSummary, answer, topSpans, compareBeams } from "./pkg/oceanq_demo_web.js";

const $ = (id) => document.getElementById(id);

const TRACE = {
  "": { "a": -1.0, "b": -2.0 },
  "a": { "x": -0.25, "y": -0.5 },
  "b": { "z": -0.25, "w": -3.0 },
  "a x": { "</s>": 0.0 },
  "a y": { "</s>": 0.0 },
  "b z": { "</s>": 0.0 },
  "b w": { "</s>": 0.0 },
};

function esc(s) {
  return String(s).replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);
}

function guarded(target, fn) {
  try {
    fn();
  } catch (e) {
    $(target).innerHTML = `<p class="error">${esc(e.message ?? e)}</p>`;
  }
}

function table(head, rows) {
  const th = head.map((h) => `<th>${esc(h)}</th>`).join("");
  const tr = rows.map((r) => `<tr>${r.map((c) => `<td>${esc(c)}</td>`).join("")}</tr>`).join("");
  return `<table><thead><tr>${th}</tr></thead><tbody>${tr}</tbody></table>`;
}

function ask() {
  guarded("answer", () => {
    const r = JSON.parse(answer($("question").value));
    if (r.answer === null) {
      $("answer").innerHTML = `<p class="muted">No answer.</p>`;
      return;
    }
    const alts = r.alternatives.map((a) => [a.question, a.answer, a.score.toFixed(3)]);
    $("answer").innerHTML =
      `<p class="answer">${esc(r.answer)}</p>` +
      `<p>matched “${esc(r.qa.question)}” in ${esc(r.qa.para_id)}, score ${r.score.toFixed(3)}</p>` +
      (alts.length ? table(["alternative", "answer", "score"], alts) : "");
  });
}

function spans() {
  guarded("spanout", () => {
    const out = JSON.parse(topSpans($("logits").value, Number($("k").value), Number($("maxlen").value)));
    $("spanout").innerHTML = table(["start", "end", "score"], out.map((s) => [s.start, s.end, s.score.toFixed(4)]));
  });
}

function decode() {
  const render = (hyps) =>
    table(["tokens", "score", "sibling rank"], hyps.map((h) => [h.tokens.join(" "), h.cum_score.toFixed(3), h.sibling_rank]));
  guarded("standard", () => {
    const r = JSON.parse(
      compareBeams($("table").value, Number($("beam").value), Number($("steps").value), Number($("gamma").value)),
    );
    $("standard").innerHTML = render(r.standard);
    $("diverse").innerHTML = render(r.diverse);
  });
}

await init();
const pool = JSON.parse(poolSummary());
$("pool").textContent =
  `Sample pool: ${pool.pairs} question-answer pairs over ${pool.paragraphs} paragraphs (${pool.documents.join(", ")}).`;
$("table").value = JSON.stringify(TRACE, null, 1);
$("ask").onclick = ask;
$("question").onkeydown = (e) => e.key === "Enter" && ask();
$("spans").onclick = spans;
$("decode").onclick = decode;
ask();
spans();
decode();
