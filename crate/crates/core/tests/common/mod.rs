#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde_json::Value;

/// What the mock server sends back for one request.
pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl Reply {
    pub fn json(body: Value) -> Self {
        Reply {
            status: 200,
            body: body.to_string(),
            delay: Duration::ZERO,
        }
    }

    pub fn status(status: u16) -> Self {
        Reply {
            status,
            body: "{}".into(),
            delay: Duration::ZERO,
        }
    }

    pub fn delayed(mut self, d: Duration) -> Self {
        self.delay = d;
        self
    }
}

pub struct MockServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    pub max_in_flight: Arc<AtomicUsize>,
}

/// Minimal HTTP/1.1 server on an ephemeral port. `handler` gets the path,
/// the parsed JSON body and the zero-based hit number.
pub fn serve<F>(handler: F) -> MockServer
where
    F: Fn(&str, &Value, usize) -> Reply + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let in_flight = Arc::new(AtomicUsize::new(0));
    let max_in_flight = Arc::new(AtomicUsize::new(0));
    let handler = Arc::new(handler);
    let (h, f, m) = (hits.clone(), in_flight.clone(), max_in_flight.clone());
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let (handler, hits, in_flight, max_in_flight) = (handler.clone(), h.clone(), f.clone(), m.clone());
            thread::spawn(move || {
                let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                max_in_flight.fetch_max(now, Ordering::SeqCst);
                let mut reader = BufReader::new(stream);
                let mut line = String::new();
                reader.read_line(&mut line).unwrap_or(0);
                let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
                let mut len = 0usize;
                loop {
                    let mut header = String::new();
                    if reader.read_line(&mut header).unwrap_or(0) == 0 || header.trim().is_empty() {
                        break;
                    }
                    if let Some((k, v)) = header.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            len = v.trim().parse().unwrap_or(0);
                        }
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).ok();
                let json: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
                let n = hits.fetch_add(1, Ordering::SeqCst);
                let reply = handler(&path, &json, n);
                thread::sleep(reply.delay);
                let mut stream = reader.into_inner();
                let _ = write!(
                    stream,
                    "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    reply.status,
                    reply.body.len(),
                    reply.body
                );
                let _ = stream.flush();
                in_flight.fetch_sub(1, Ordering::SeqCst);
            });
        }
    });
    MockServer {
        url,
        hits,
        max_in_flight,
    }
}

const SOURCES: [(&str, &str); 5] = [
    ("Officials said the bridge will close for repairs in June.", "repairs"),
    ("The company reported a loss for the third quarter.", "a loss"),
    ("Residents opposed the plan at a crowded hearing.", "opposed"),
    ("Scientists found traces of water in the samples.", "traces of water"),
    ("The mayor promised new housing near the station.", "new housing"),
];

const QUESTIONS: [&str; 5] = [
    "Why will the bridge close?",
    "How big was the loss?",
    "Why did residents oppose it?",
    "Where did the water come from?",
    "Which station is meant?",
];

/// Writes a synthetic corpus with `n` instances; every third is training
/// data and the rest test data.
pub fn write_corpus(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    let mut text = String::new();
    for i in 0..n {
        let (source, span) = SOURCES[i % SOURCES.len()];
        let start = source.find(span).unwrap();
        let record = serde_json::json!({
            "instance_id": format!("doc{i:03}-2"),
            "article_id": format!("doc{i:03}"),
            "sentence_index": 2,
            "context": if i % 7 == 0 { "" } else { "The announcement came late on Friday." },
            "source": source,
            "span_start": start,
            "span_end": start + span.len(),
            "question": QUESTIONS[(i * 3) % QUESTIONS.len()],
            "split": if i % 3 == 0 { "train" } else { "test" },
        });
        writeln!(text, "{record}").unwrap();
    }
    fs::write(&path, text).unwrap();
    path
}

/// All files in `dir` except the manifest, with their bytes.
pub fn bundle_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
