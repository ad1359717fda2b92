//! In-process classifier service speaking the `/classify` + `/health` protocol.
#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use classtalk_core::inference::{label_count, ClassifierRequest, ClassifierResponse, CLASSIFIER_FEATURES};

type Handler = dyn Fn(usize, &ClassifierRequest) -> Reply + Send + Sync;

pub enum Reply {
    Ok(ClassifierResponse),
    Status(u16, String),
}

pub struct MockClassifier {
    pub url: String,
    pub requests: Arc<Mutex<Vec<ClassifierRequest>>>,
    server: Arc<tiny_http::Server>,
    thread: Option<JoinHandle<()>>,
}

/// Deterministic label from the text: word count modulo the label count.
pub fn label_for(feature: &str, text: &str) -> (i64, f64) {
    let n = label_count(feature).unwrap_or(2);
    let words = text.split_whitespace().count() as i64;
    let label = words % n;
    (label, 0.5 + (label as f64) / (2.0 * n as f64))
}

pub fn answer(req: &ClassifierRequest) -> ClassifierResponse {
    let (labels, scores) = req.items.iter().map(|i| label_for(&req.feature, &i.text)).unzip();
    ClassifierResponse {
        labels,
        scores,
        model_id: format!("mock-{}", req.feature),
    }
}

impl MockClassifier {
    /// Answers every request with [`answer`].
    pub fn start() -> Self {
        Self::with_handler(|_, req| Reply::Ok(answer(req)))
    }

    /// `handler` gets the 0-based index of the `/classify` call.
    pub fn with_handler(handler: impl Fn(usize, &ClassifierRequest) -> Reply + Send + Sync + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
        let url = format!("http://{}", server.server_addr().to_ip().expect("tcp address"));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let calls = Arc::new(AtomicUsize::new(0));
        let thread = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let (status, body) = match request.url() {
                        "/health" => {
                            let features: Vec<&str> = CLASSIFIER_FEATURES.iter().map(|(f, _)| *f).collect();
                            (200, serde_json::json!({"ok": true, "features": features}).to_string())
                        }
                        "/classify" => {
                            let mut raw = String::new();
                            let _ = request.as_reader().read_to_string(&mut raw);
                            match serde_json::from_str::<ClassifierRequest>(&raw) {
                                Ok(req) => {
                                    let n = calls.fetch_add(1, Ordering::SeqCst);
                                    requests.lock().unwrap().push(req.clone());
                                    match handler(n, &req) {
                                        Reply::Ok(resp) => (200, serde_json::to_string(&resp).unwrap()),
                                        Reply::Status(s, b) => (s, b),
                                    }
                                }
                                Err(e) => (400, e.to_string()),
                            }
                        }
                        _ => (404, "not found".into()),
                    };
                    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                    let response = tiny_http::Response::from_string(body)
                        .with_status_code(status)
                        .with_header(header);
                    let _ = request.respond(response);
                }
            })
        };
        MockClassifier {
            url,
            requests,
            server,
            thread: Some(thread),
        }
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        self.requests.lock().unwrap().iter().map(|r| r.items.len()).collect()
    }

    pub fn call_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

impl Drop for MockClassifier {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
