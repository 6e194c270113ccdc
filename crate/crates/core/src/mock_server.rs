//! In-process HTTP server speaking the scoring and translation protocols.
//! Used by tests and for offline runs of the remote code paths.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};
use tiny_http::{Header, Method, Request, Response, Server};

use crate::error::{Error, Result};
use crate::model::LanguageCode;
use crate::scorer::remote::{BatchRequest, BatchResponse, ScoreResponse};
use crate::scorer::{unit_hash, PromptTriple};
use crate::translate::{MockTranslationClient, TranslateRequest, TranslateResponse};

/// How the server answers scoring requests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    /// Deterministic score from a hash of the premise and hypothesis.
    Hash { seed: u64 },
    /// Every item gets this score, even when it lies outside [0, 1].
    Fixed(f64),
    /// 200 with a body that is not the documented schema.
    Malformed,
    /// Every request fails with this status.
    Status(u16),
    /// The first `failures` requests get a 503, later ones behave as `Hash`.
    FlakyThenHash { failures: usize, seed: u64 },
}

pub fn hash_score(seed: u64, triple: &PromptTriple) -> f64 {
    unit_hash("mock-server", seed, &triple.premise, &triple.hypothesis)
}

struct State {
    behavior: Mutex<Behavior>,
    requests: AtomicUsize,
}

pub struct MockServer {
    server: Arc<Server>,
    state: Arc<State>,
    url: String,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral localhost port and starts serving.
    pub fn start(behavior: Behavior) -> Result<Self> {
        let server = Server::http("127.0.0.1:0")
            .map_err(|e| Error::Config(format!("mock server bind failed: {e}")))?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| Error::Config("mock server has no IP address".into()))?;
        let server = Arc::new(server);
        let state = Arc::new(State {
            behavior: Mutex::new(behavior),
            requests: AtomicUsize::new(0),
        });
        let handle = {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            std::thread::spawn(move || {
                for req in server.incoming_requests() {
                    handle(&state, req);
                }
            })
        };
        Ok(MockServer {
            server,
            state,
            url: format!("http://127.0.0.1:{port}"),
            handle: Some(handle),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Requests received so far, including failed ones.
    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }

    pub fn set_behavior(&self, behavior: Behavior) {
        *self.state.behavior.lock().expect("behavior lock") = behavior;
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn respond(req: Request, status: u16, body: String) {
    let header = Header::from_bytes("content-type", "application/json").expect("static header");
    let _ = req.respond(
        Response::from_string(body)
            .with_status_code(status)
            .with_header(header),
    );
}

fn error_body(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

fn handle(state: &State, mut req: Request) {
    let n = state.requests.fetch_add(1, Ordering::SeqCst);
    let behavior = *state.behavior.lock().expect("behavior lock");
    let mut body = String::new();
    if req.as_reader().read_to_string(&mut body).is_err() {
        return respond(req, 400, error_body("unreadable body"));
    }
    let method = req.method().clone();
    let path = req.url().to_owned();

    if method == Method::Get && path == "/v1/health" {
        return respond(req, 200, json!({"status": "ok", "model": "mock"}).to_string());
    }
    if method != Method::Post {
        return respond(req, 405, error_body("method not allowed"));
    }
    if path == "/v1/translate" {
        return match serde_json::from_str::<TranslateRequest>(&body) {
            Ok(r) => match translate(&r) {
                Ok(text) => respond(req, 200, serde_json::to_string(&TranslateResponse { text }).expect("json")),
                Err(e) => respond(req, 400, error_body(e)),
            },
            Err(e) => respond(req, 400, error_body(e)),
        };
    }

    let seed = match behavior {
        Behavior::Status(code) => return respond(req, code, error_body("configured failure")),
        Behavior::Malformed => return respond(req, 200, "{\"scor\": \"high\"".into()),
        Behavior::FlakyThenHash { failures, .. } if n < failures => {
            return respond(req, 503, error_body("temporarily unavailable"))
        }
        Behavior::FlakyThenHash { seed, .. } | Behavior::Hash { seed } => Some(seed),
        Behavior::Fixed(_) => None,
    };
    let score = |t: &PromptTriple| match (behavior, seed) {
        (Behavior::Fixed(v), _) => v,
        (_, Some(s)) => hash_score(s, t),
        _ => unreachable!("fixed or seeded"),
    };
    match path.as_str() {
        "/v1/score" => match serde_json::from_str::<PromptTriple>(&body) {
            Ok(t) => respond(req, 200, serde_json::to_string(&ScoreResponse { score: score(&t) }).expect("json")),
            Err(e) => respond(req, 400, error_body(e)),
        },
        "/v1/score_batch" => match serde_json::from_str::<BatchRequest>(&body) {
            Ok(b) => {
                let scores = b.items.iter().map(score).collect();
                respond(req, 200, serde_json::to_string(&BatchResponse { scores }).expect("json"))
            }
            Err(e) => respond(req, 400, error_body(e)),
        },
        _ => respond(req, 404, error_body(format!("no route {path}"))),
    }
}

fn translate(r: &TranslateRequest) -> Result<String> {
    let target = LanguageCode::new(&r.target)?;
    let source = r.source.as_deref().map(LanguageCode::new).transpose()?;
    if source.as_ref() == Some(&target) {
        return Ok(r.text.clone());
    }
    Ok(format!("{}{}", MockTranslationClient::marker(source.as_ref(), &target), r.text))
}

/// Parses a JSON value as a health response, for conformance checks.
pub fn is_health_ok(v: &Value) -> bool {
    v.get("status").and_then(Value::as_str) == Some("ok") && v.get("model").is_some_and(Value::is_string)
}
