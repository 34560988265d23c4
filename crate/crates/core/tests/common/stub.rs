//! Local chat-completions stand-in serving scripted statuses.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Default)]
struct Shared {
    calls: AtomicUsize,
    script: Mutex<VecDeque<(u16, String)>>,
    auth_headers: Mutex<Vec<Option<String>>>,
}

/// Server handle; the server lives until the test process exits.
pub struct Stub {
    pub addr: SocketAddr,
    shared: Arc<Shared>,
}

/// Default reply when the script is empty: "1" iff the query line has `exang: 1`.
fn default_reply(prompt: &str) -> String {
    let query = prompt.lines().rev().find(|l| l.starts_with("<Inputs>: ")).unwrap_or("");
    let positive = query.contains("exang: 1,") || query.contains("exang: 1.0,");
    format!("The answer is {}.", u8::from(positive))
}

pub fn completion_body(content: &str) -> String {
    json!({ "choices": [{ "index": 0, "message": { "role": "assistant", "content": content } }] }).to_string()
}

async fn handle(State(shared): State<Arc<Shared>>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, String) {
    shared.calls.fetch_add(1, Ordering::SeqCst);
    let auth = headers.get("authorization").and_then(|v| v.to_str().ok()).map(str::to_string);
    shared.auth_headers.lock().unwrap().push(auth);
    if let Some((status, text)) = shared.script.lock().unwrap().pop_front() {
        return (StatusCode::from_u16(status).unwrap(), text);
    }
    let prompt = body["messages"].as_array().and_then(|m| m.last()).and_then(|m| m["content"].as_str()).unwrap_or("");
    (StatusCode::OK, completion_body(&default_reply(prompt)))
}

impl Stub {
    pub fn start() -> Stub {
        let shared = Arc::new(Shared::default());
        let app = Router::new().route("/v1/chat/completions", post(handle)).with_state(shared.clone());
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, app).await.unwrap();
            });
        });
        Stub { addr: rx.recv().unwrap(), shared }
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Queues `(status, body)` replies served before the default behaviour.
    pub fn script(&self, replies: impl IntoIterator<Item = (u16, String)>) {
        self.shared.script.lock().unwrap().extend(replies);
    }

    pub fn calls(&self) -> usize {
        self.shared.calls.load(Ordering::SeqCst)
    }

    pub fn auth_headers(&self) -> Vec<Option<String>> {
        self.shared.auth_headers.lock().unwrap().clone()
    }
}
