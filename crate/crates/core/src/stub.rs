//! Minimal in-process HTTP servers standing in for chat and forecasting
//! endpoints in tests, examples, and offline demos.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

use crate::models::PluginRequest;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubResponse {
    pub status: u16,
    pub body: String,
}

impl StubResponse {
    pub fn json(status: u16, body: &Value) -> Self {
        Self {
            status,
            body: body.to_string(),
        }
    }
}

/// A request as the stub saw it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub method: String,
    pub url: String,
    pub body: String,
}

type Handler = dyn Fn(&RecordedRequest) -> StubResponse + Send + Sync;

/// Serves `handler` on an ephemeral localhost port until dropped.
pub struct StubServer {
    addr: SocketAddr,
    server: Arc<Server>,
    worker: Option<JoinHandle<()>>,
    log: Arc<Mutex<Vec<RecordedRequest>>>,
}

impl StubServer {
    pub fn start<F>(handler: F) -> std::io::Result<Self>
    where
        F: Fn(&RecordedRequest) -> StubResponse + Send + Sync + 'static,
    {
        Self::bind("127.0.0.1:0", Box::new(handler))
    }

    pub fn bind(addr: &str, handler: Box<Handler>) -> std::io::Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("stub must listen on an IP address"))?;
        let log = Arc::new(Mutex::new(Vec::new()));
        let worker = {
            let server = Arc::clone(&server);
            let log = Arc::clone(&log);
            std::thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let mut body = String::new();
                    let _ = request.as_reader().read_to_string(&mut body);
                    let recorded = RecordedRequest {
                        method: request.method().to_string(),
                        url: request.url().to_string(),
                        body,
                    };
                    let reply = handler(&recorded);
                    log.lock().expect("log lock").push(recorded);
                    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
                    let response = Response::from_string(reply.body)
                        .with_status_code(reply.status)
                        .with_header(header);
                    let _ = request.respond(response);
                }
            })
        };
        Ok(Self {
            addr,
            server,
            worker: Some(worker),
            log,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL such as `http://127.0.0.1:38211`.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.log.lock().expect("log lock").clone()
    }

    /// Blocks until the server stops.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

/// Chat-completions body carrying `content`, with usage only when given.
pub fn chat_body(content: &str, completion_tokens: Option<u64>) -> Value {
    let mut body = json!({
        "id": "stub",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    });
    if let Some(n) = completion_tokens {
        body["usage"] = json!({"completion_tokens": n});
    }
    body
}

/// Replays `script` one reply per request; past the end the last reply repeats.
pub fn replay_chat(script: Vec<String>, completion_tokens: Option<u64>) -> std::io::Result<StubServer> {
    let next = AtomicUsize::new(0);
    StubServer::start(move |_| {
        let i = next.fetch_add(1, Ordering::SeqCst).min(script.len().saturating_sub(1));
        let content = script.get(i).map_or("", String::as_str);
        StubResponse::json(200, &chat_body(content, completion_tokens))
    })
}

/// Answers every request with `status` and a short JSON error.
pub fn fixed_status(status: u16) -> std::io::Result<StubServer> {
    StubServer::start(move |_| StubResponse::json(status, &json!({"error": format!("stub status {status}")})))
}

/// Plugin endpoint whose forecast continues the last history row by `delta` per step.
pub fn echo_forecast(delta: f64) -> std::io::Result<StubServer> {
    StubServer::start(move |req| {
        let parsed: Result<PluginRequest, _> = serde_json::from_str(&req.body);
        let Ok(r) = parsed else {
            return StubResponse::json(400, &json!({"error": "body is not a plugin request"}));
        };
        let Some(last) = r.history.last() else {
            return StubResponse::json(400, &json!({"error": "empty history"}));
        };
        let forecast: Vec<Vec<f64>> = (1..=r.horizon)
            .map(|h| last.iter().map(|v| v + delta * h as f64).collect())
            .collect();
        StubResponse::json(200, &json!({"forecast": forecast, "model_name": "echo"}))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replays_in_order() {
        let stub = replay_chat(vec!["a".into(), "b".into()], Some(7)).unwrap();
        let get = || -> Value {
            ureq::post(&stub.url())
                .send_string("{}")
                .unwrap()
                .into_json()
                .unwrap()
        };
        assert_eq!(get()["choices"][0]["message"]["content"], "a");
        assert_eq!(get()["choices"][0]["message"]["content"], "b");
        let third = get();
        assert_eq!(third["choices"][0]["message"]["content"], "b");
        assert_eq!(third["usage"]["completion_tokens"], 7);
        assert_eq!(stub.requests().len(), 3);
    }

    #[test]
    fn status_stub() {
        let stub = fixed_status(503).unwrap();
        match ureq::get(&stub.url()).call() {
            Err(ureq::Error::Status(code, _)) => assert_eq!(code, 503),
            other => panic!("{other:?}"),
        }
    }
}
