//! Scripted chat-completion endpoint for tests and offline runs.
//!
//! Serves `POST /chat/completions` on a local port with a reply chosen by a
//! [`Script`], an optional fixed delay and an optional forced status.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

#[derive(Clone)]
pub enum Script {
    /// The same completion for every request.
    Fixed(String),
    /// Replies with the prompt itself.
    Echo,
    /// Exact prompt lookup with a fallback reply.
    ByPrompt { replies: HashMap<String, String>, fallback: String },
    /// Arbitrary function of the prompt.
    Func(Arc<dyn Fn(&str) -> String + Send + Sync>),
}

impl Script {
    fn reply(&self, prompt: &str) -> String {
        match self {
            Script::Fixed(s) => s.clone(),
            Script::Echo => prompt.to_string(),
            Script::ByPrompt { replies, fallback } => replies.get(prompt).unwrap_or(fallback).clone(),
            Script::Func(f) => f(prompt),
        }
    }
}

#[derive(Clone)]
pub struct MockConfig {
    pub script: Script,
    pub delay: Duration,
    /// Non-2xx status returned instead of a completion.
    pub status: Option<u16>,
    pub error_body: String,
    /// Reported `usage.completion_tokens`; whitespace word count when unset.
    pub completion_tokens: Option<u64>,
    /// Fail request k (1-based, arrival order) with HTTP 500 when k is a multiple.
    pub fail_every: Option<usize>,
    /// Send `content: null`.
    pub empty: bool,
}

impl MockConfig {
    pub fn new(script: Script) -> Self {
        MockConfig {
            script,
            delay: Duration::ZERO,
            status: None,
            error_body: "mock failure".into(),
            completion_tokens: None,
            fail_every: None,
            empty: false,
        }
    }

    pub fn fixed(reply: impl Into<String>) -> Self {
        MockConfig::new(Script::Fixed(reply.into()))
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_status(mut self, status: u16, body: impl Into<String>) -> Self {
        self.status = Some(status);
        self.error_body = body.into();
        self
    }

    pub fn with_completion_tokens(mut self, n: u64) -> Self {
        self.completion_tokens = Some(n);
        self
    }

    pub fn with_fail_every(mut self, k: usize) -> Self {
        self.fail_every = Some(k);
        self
    }

    pub fn with_empty_completion(mut self) -> Self {
        self.empty = true;
        self
    }
}

/// What the mock saw in one request.
#[derive(Debug, Clone, PartialEq)]
pub struct SeenRequest {
    pub body: Value,
    pub authorization: Option<String>,
}

struct Shared {
    config: MockConfig,
    count: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    seen: Mutex<Vec<SeenRequest>>,
}

pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral localhost port and starts serving on the current runtime.
    pub async fn start(config: MockConfig) -> std::io::Result<MockServer> {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            config,
            count: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            seen: Mutex::new(Vec::new()),
        });
        let app = Router::new().route("/chat/completions", post(handle)).with_state(shared.clone());
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(MockServer { addr, shared, shutdown: Some(tx), task: Some(task) })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.shared.count.load(Ordering::SeqCst)
    }

    /// Highest number of requests that were being served at once.
    pub fn max_in_flight(&self) -> usize {
        self.shared.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn seen(&self) -> Vec<SeenRequest> {
        self.shared.seen.lock().unwrap().clone()
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

async fn handle(State(shared): State<Arc<Shared>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let k = shared.count.fetch_add(1, Ordering::SeqCst) + 1;
    let now = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    shared.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let authorization = headers.get("authorization").and_then(|v| v.to_str().ok()).map(str::to_string);
    shared.seen.lock().unwrap().push(SeenRequest { body: body.clone(), authorization });

    let cfg = &shared.config;
    if !cfg.delay.is_zero() {
        tokio::time::sleep(cfg.delay).await;
    }
    shared.in_flight.fetch_sub(1, Ordering::SeqCst);

    let forced = cfg.status.or(cfg.fail_every.filter(|&n| n > 0 && k % n == 0).map(|_| 500));
    if let Some(status) = forced {
        let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        return (code, cfg.error_body.clone()).into_response();
    }
    let prompt = body["messages"][0]["content"].as_str().unwrap_or_default();
    let reply = cfg.script.reply(prompt);
    let tokens = cfg.completion_tokens.unwrap_or(reply.split_whitespace().count() as u64);
    let content = if cfg.empty { Value::Null } else { Value::String(reply) };
    Json(json!({
        "id": format!("mock-{k}"),
        "object": "chat.completion",
        "model": body["model"],
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
        "usage": {"completion_tokens": tokens},
    }))
    .into_response()
}
