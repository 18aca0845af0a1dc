#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::json;

pub const W: u32 = 1224;
pub const H: u32 = 1584;

pub fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

/// A scratch project: corpus, taxonomy, OCR dumps and a config file.
pub struct Project {
    pub dir: tempfile::TempDir,
    docs: Vec<(String, String, u32)>,
    pub extra_config: String,
}

impl Project {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        for sub in ["corpus", "ocr", "layout"] {
            std::fs::create_dir_all(dir.path().join(sub)).unwrap();
        }
        std::fs::copy(core_fixture("taxonomy_47.tsv"), dir.path().join("taxonomy.tsv")).unwrap();
        std::fs::copy(core_fixture("aliases.csv"), dir.path().join("aliases.csv")).unwrap();
        Project {
            dir,
            docs: Vec::new(),
            extra_config: String::new(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn write(&self, rel: &str, text: &str) -> PathBuf {
        let p = self.path(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(&p, text).unwrap();
        p
    }

    pub fn read(&self, rel: &str) -> String {
        std::fs::read_to_string(self.path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    /// Adds a document whose pages hold the given lines, one OCR LINE each.
    pub fn add_doc(&mut self, doc_id: &str, department: &str, pages: &[Vec<String>]) {
        let mut blocks = Vec::new();
        for (p, lines) in pages.iter().enumerate() {
            let page = p + 1;
            let ids: Vec<String> = (0..lines.len()).map(|i| format!("{doc_id}-{page}-{i}")).collect();
            blocks.push(json!({
                "Id": format!("{doc_id}-{page}"), "BlockType": "PAGE", "Page": page,
                "Geometry": {"BoundingBox": {"Left": 0.0, "Top": 0.0, "Width": 1.0, "Height": 1.0}},
                "Relationships": [{"Type": "CHILD", "Ids": ids}],
            }));
            for (i, text) in lines.iter().enumerate() {
                blocks.push(json!({
                    "Id": ids[i], "BlockType": "LINE", "Text": text, "Page": page, "Confidence": 99.0,
                    "Geometry": {"BoundingBox": {
                        "Left": 0.12, "Top": 0.08 + 0.8 * i as f64 / lines.len().max(1) as f64,
                        "Width": 0.7, "Height": 0.015,
                    }},
                }));
            }
        }
        self.write(&format!("ocr/{doc_id}.json"), &serde_json::to_string(&blocks).unwrap());
        self.write(&format!("layout/{doc_id}.txt"), "");
        self.write(&format!("corpus/{doc_id}.dims"), &format!("{W} {H}\n").repeat(pages.len()));
        self.docs.push((doc_id.into(), department.into(), pages.len() as u32));
    }

    /// Registers the shared three-page fixture, with real header, footer,
    /// figure, caption and equation regions, behind a one-line title page.
    pub fn add_fusion_doc(&mut self, doc_id: &str, department: &str) {
        let raw = std::fs::read_to_string(core_fixture("fusion_ocr.json")).unwrap();
        let mut blocks: Vec<serde_json::Value> = serde_json::from_str(&raw).unwrap();
        for b in &mut blocks {
            let page = b["Page"].as_u64().unwrap();
            b["Page"] = json!(page + 1);
        }
        blocks.insert(0, json!({
            "Id": "title-line", "BlockType": "LINE", "Text": "Carbon in Coastal Wetlands", "Page": 1,
            "Confidence": 99.0,
            "Geometry": {"BoundingBox": {"Left": 0.2, "Top": 0.3, "Width": 0.6, "Height": 0.03}},
        }));
        self.write(&format!("ocr/{doc_id}.json"), &serde_json::to_string(&blocks).unwrap());
        let layout: String = std::fs::read_to_string(core_fixture("fusion_layout.txt"))
            .unwrap()
            .lines()
            .map(|l| {
                let (page, rest) = l.split_once(' ').unwrap();
                format!("{} {rest}\n", page.parse::<u32>().unwrap() + 1)
            })
            .collect();
        self.write(&format!("layout/{doc_id}.txt"), &layout);
        self.write(&format!("corpus/{doc_id}.dims"), &format!("{W} {H}\n").repeat(4));
        self.docs.push((doc_id.into(), department.into(), 4));
    }

    pub fn config_path(&self) -> PathBuf {
        let mut corpus = String::from("doc_id,department,page_count\n");
        for (id, dept, n) in &self.docs {
            corpus.push_str(&format!("{id},\"{dept}\",{n}\n"));
        }
        self.write("corpus/corpus.csv", &corpus);
        let cfg = format!(
            "seed = 7\n[paths]\ncorpus = \"corpus/corpus.csv\"\ntaxonomy = \"taxonomy.tsv\"\n\
             aliases = \"aliases.csv\"\nocr_dir = \"ocr\"\nlayout_dir = \"layout\"\noutput_dir = \"out\"\n{}",
            self.extra_config
        );
        self.write("config.toml", &cfg)
    }

    pub fn run(&self, args: &[&str]) -> Output {
        let cfg = self.config_path();
        Command::new(env!("CARGO_BIN_EXE_etdchap"))
            .arg("--config")
            .arg(&cfg)
            .args(args)
            .output()
            .expect("binary runs")
    }

    pub fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed ({:?}):\n{}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }
}

/// Deterministic pseudo-random word stream.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn pick<'a>(&mut self, words: &[&'a str]) -> &'a str {
        words[(self.next() % words.len() as u64) as usize]
    }
}

pub const FILLER: &[&str] = &["the", "results", "study", "data", "analysis", "we", "show", "model", "approach", "of"];

pub fn sentence(rng: &mut Lcg, topic: &[&str]) -> String {
    (0..12)
        .map(|i| if i % 3 == 0 { rng.pick(FILLER) } else { rng.pick(topic) })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Front page, two chapters of two pages each, and a references page.
pub fn thesis_pages(rng: &mut Lcg, title: &str, topic: &[&str]) -> Vec<Vec<String>> {
    let body = |rng: &mut Lcg| (0..6).map(|_| sentence(rng, topic)).collect::<Vec<_>>();
    let mut p2 = vec!["Chapter 1".to_string(), "Introduction".to_string()];
    p2.extend(body(rng));
    let mut p4 = vec!["Chapter 2".to_string(), "Methods".to_string()];
    p4.extend(body(rng));
    vec![
        vec![title.to_string(), "A dissertation".to_string()],
        p2,
        body(rng),
        p4,
        body(rng),
        vec!["References".to_string(), "Smith J. A cited work. 2001.".to_string()],
    ]
}

/// Answers every POST with the same JSON body and counts requests.
pub struct HttpDouble {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl HttpDouble {
    pub fn start(body: serde_json::Value) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/generate", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&hits);
        let payload = body.to_string();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                let _ = reader.read_exact(&mut buf);
                counter.fetch_add(1, Ordering::SeqCst);
                let reply = format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    payload.len(),
                    payload
                );
                let _ = stream.write_all(reply.as_bytes());
            }
        });
        HttpDouble { url, hits }
    }
}

/// Every file under `root` except run logs, as (relative path, bytes).
pub fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            if rel == "logs" {
                continue;
            }
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
