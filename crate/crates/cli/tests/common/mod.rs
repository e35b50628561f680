#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub const BIN: &str = env!("CARGO_BIN_EXE_oceanq");

pub fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

pub fn oceanq(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("OCEANQ_INDEX").output().expect("run oceanq")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Build the fixture index under `dir/name`.
pub fn build_fixture_index(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = oceanq(&[
        "build-index",
        "--corpus",
        core_fixture("ocean_fixture.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

/// A running `oceanq serve` process, killed on drop.
pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(index: &Path, extra: &[&str]) -> Server {
        let mut child = Command::new(BIN)
            .args(["serve", "--index", index.to_str().unwrap(), "--port", "0"])
            .args(extra)
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .expect("spawn server");
        let stderr = child.stderr.take().unwrap();
        let mut lines = BufReader::new(stderr).lines();
        let base = loop {
            let line = lines.next().expect("server exited before listening").unwrap();
            if let Some(addr) = line.strip_prefix("listening on ") {
                break addr.to_string();
            }
        };
        // Keep draining stderr so the server never blocks on a full pipe.
        std::thread::spawn(move || for _ in lines {});
        Server { child, base }
    }

    pub fn agent() -> ureq::Agent {
        ureq::Agent::config_builder().http_status_as_error(false).build().into()
    }

    pub fn post_query(&self, agent: &ureq::Agent, body: &str) -> (u16, String) {
        let mut resp =
            agent.post(&format!("{}/query", self.base)).header("content-type", "application/json").send(body).unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
    }

    pub fn ask(&self, agent: &ureq::Agent, question: &str) -> (u16, String) {
        self.post_query(agent, &serde_json::json!({ "question": question }).to_string())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// The fixture eval questions followed by the fixture pool questions,
/// `n` in total.
pub fn fixture_questions(n: usize) -> Vec<String> {
    let eval = std::fs::read_to_string(core_fixture("ocean_fixture_eval.jsonl")).unwrap();
    let pool = std::fs::read_to_string(core_fixture("ocean_fixture.jsonl")).unwrap();
    let mut qs: Vec<String> = eval
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["question"].as_str().unwrap().to_string())
        .collect();
    for l in pool.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        for qa in v["qa_pairs"].as_array().unwrap() {
            qs.push(qa["question"].as_str().unwrap().to_lowercase());
        }
    }
    qs.truncate(n);
    assert_eq!(qs.len(), n);
    qs
}
