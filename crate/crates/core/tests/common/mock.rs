//! Minimal OpenAI-compatible `/embeddings` server on a loopback port.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

#[derive(Clone, Debug, Default)]
pub struct Behavior {
    pub dim: usize,
    /// Answer the first N requests with HTTP 500.
    pub fail_first: usize,
    /// Answer every request with this status.
    pub always_status: Option<u16>,
    /// Leave the last vector out of every response.
    pub drop_last: bool,
    /// Emit `data` in reverse index order.
    pub reverse: bool,
    /// Required bearer token.
    pub token: Option<String>,
    /// Words sharing a concept id get nearby vectors.
    pub concepts: HashMap<String, usize>,
}

pub struct MockServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    pub embedded: Arc<AtomicUsize>,
}

fn seeded(label: &str, value: &str) -> ChaCha8Rng {
    let mut h = DefaultHasher::new();
    label.hash(&mut h);
    value.hash(&mut h);
    ChaCha8Rng::seed_from_u64(h.finish())
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// Deterministic vector for `word`.
pub fn mock_vector(behavior: &Behavior, word: &str) -> Vec<f64> {
    let noise = gaussian(&mut seeded("word", word), behavior.dim);
    match behavior.concepts.get(word) {
        Some(c) => {
            let base = gaussian(&mut seeded("concept", &c.to_string()), behavior.dim);
            base.iter().zip(&noise).map(|(b, n)| b + 0.4 * n).collect()
        }
        None => noise,
    }
}

impl MockServer {
    pub fn start(behavior: Behavior) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let url = format!("http://{}/v1/embeddings", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let embedded = Arc::new(AtomicUsize::new(0));
        let (r, e) = (requests.clone(), embedded.clone());
        let behavior = Arc::new(behavior);
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (r, e, b) = (r.clone(), e.clone(), behavior.clone());
                std::thread::spawn(move || {
                    let _ = handle(stream, &b, &r, &e);
                });
            }
        });
        MockServer {
            url,
            requests,
            embedded,
        }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn embedded_count(&self) -> usize {
        self.embedded.load(Ordering::SeqCst)
    }
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

fn handle(
    mut stream: TcpStream,
    b: &Behavior,
    requests: &AtomicUsize,
    embedded: &AtomicUsize,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    let mut auth = None;
    let mut line = String::new();
    reader.read_line(&mut line)?;
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            break;
        }
        if let Some((k, v)) = trimmed.split_once(':') {
            match k.trim().to_ascii_lowercase().as_str() {
                "content-length" => length = v.trim().parse().unwrap_or(0),
                "authorization" => auth = Some(v.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    let n = requests.fetch_add(1, Ordering::SeqCst);

    if let Some(status) = b.always_status {
        return respond(&mut stream, status, r#"{"error":"configured failure"}"#);
    }
    if n < b.fail_first {
        return respond(&mut stream, 500, r#"{"error":"transient"}"#);
    }
    if let Some(token) = &b.token {
        if auth.as_deref() != Some(&format!("Bearer {token}")) {
            return respond(&mut stream, 401, r#"{"error":"unauthorized"}"#);
        }
    }
    let request: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(_) => return respond(&mut stream, 400, r#"{"error":"bad json"}"#),
    };
    let inputs: Vec<String> = request["input"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|s| s.as_str().map(String::from))
                .collect()
        })
        .unwrap_or_default();
    let mut data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .map(|(i, w)| json!({"object": "embedding", "index": i, "embedding": mock_vector(b, w)}))
        .collect();
    if b.drop_last {
        data.pop();
    }
    if b.reverse {
        data.reverse();
    }
    embedded.fetch_add(data.len(), Ordering::SeqCst);
    let out = json!({"object": "list", "model": request["model"], "data": data});
    respond(&mut stream, 200, &out.to_string())
}
