use std::thread::sleep;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    label_count, ClassifierItem, ClassifierRequest, ClassifierResponse, Health, InferenceError, LabelQuery,
    LabelSource, Limits, Prediction,
};

/// Client for a classifier service.
#[derive(Debug, Clone)]
pub struct HttpClassifier {
    endpoint: String,
    limits: Limits,
    agent: ureq::Agent,
}

enum Attempt<T> {
    Done(T),
    Retry(InferenceError),
    Fail(InferenceError),
}

impl HttpClassifier {
    /// `endpoint` is the service base URL, e.g. `http://127.0.0.1:8700`.
    pub fn new(endpoint: impl Into<String>, limits: Limits) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(limits.timeout).build();
        HttpClassifier {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            limits,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.endpoint)
    }

    fn attempt<T: DeserializeOwned>(&self, result: Result<ureq::Response, ureq::Error>, feature: &str) -> Attempt<T> {
        match result {
            Ok(resp) => match resp.into_json::<T>() {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Fail(InferenceError::protocol(
                    feature,
                    format!("malformed response body: {e}"),
                )),
            },
            Err(ureq::Error::Status(status, resp)) => {
                let err = InferenceError::Status {
                    endpoint: self.endpoint.clone(),
                    status,
                    body: resp.into_string().unwrap_or_default(),
                };
                if status == 429 || status >= 500 {
                    Attempt::Retry(err)
                } else {
                    Attempt::Fail(err)
                }
            }
            Err(ureq::Error::Transport(t)) => Attempt::Retry(InferenceError::Transport {
                endpoint: self.endpoint.clone(),
                message: t.to_string(),
            }),
        }
    }

    fn with_retries<T: DeserializeOwned>(
        &self,
        feature: &str,
        call: impl Fn() -> Result<ureq::Response, ureq::Error>,
    ) -> Result<T, InferenceError> {
        let mut delay = self.limits.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(call(), feature) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) if attempt >= self.limits.retries => return Err(e),
                Attempt::Retry(e) => {
                    log::debug!("retrying after {delay:?}: {e}");
                    attempt += 1;
                    sleep(delay);
                    delay *= 2;
                }
            }
        }
    }

    fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        feature: &str,
        body: &B,
    ) -> Result<T, InferenceError> {
        let url = self.url(path);
        self.with_retries(feature, || self.agent.post(&url).send_json(body))
    }

    pub fn health(&self) -> Result<Health, InferenceError> {
        let url = self.url("/health");
        self.with_retries("health", || self.agent.get(&url).call())
    }

    /// Sends `request` in chunks of at most `max_batch` items, in order, and
    /// concatenates the validated responses.
    pub fn classify_batch(&self, request: &ClassifierRequest) -> Result<ClassifierResponse, InferenceError> {
        let feature = request.feature.as_str();
        if label_count(feature).is_none() {
            return Err(InferenceError::UnknownFeature(feature.into()));
        }
        if request.items.is_empty() {
            return Err(InferenceError::EmptyRequest(feature.into()));
        }
        let mut out = ClassifierResponse {
            labels: Vec::with_capacity(request.items.len()),
            scores: Vec::with_capacity(request.items.len()),
            model_id: String::new(),
        };
        for chunk in request.items.chunks(self.limits.max_batch.max(1)) {
            let part = ClassifierRequest {
                feature: feature.to_string(),
                items: chunk.to_vec(),
            };
            let resp: ClassifierResponse = self.post("/classify", feature, &part)?;
            resp.validate(&part)?;
            if out.model_id.is_empty() {
                out.model_id = resp.model_id;
            }
            out.labels.extend(resp.labels);
            out.scores.extend(resp.scores);
        }
        Ok(out)
    }
}

/// One-shot form of [`HttpClassifier::classify_batch`].
pub fn classify_batch(
    endpoint: &str,
    request: &ClassifierRequest,
    limits: Limits,
) -> Result<ClassifierResponse, InferenceError> {
    HttpClassifier::new(endpoint, limits).classify_batch(request)
}

pub fn health_check(endpoint: &str, limits: Limits) -> Result<Health, InferenceError> {
    HttpClassifier::new(endpoint, limits).health()
}

impl LabelSource for HttpClassifier {
    fn inventory(&self) -> Result<Vec<String>, InferenceError> {
        Ok(self.health()?.features)
    }

    fn classify(&self, feature: &str, queries: &[LabelQuery<'_>]) -> Result<Vec<Prediction>, InferenceError> {
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        let request = ClassifierRequest {
            feature: feature.to_string(),
            items: queries
                .iter()
                .map(|q| ClassifierItem {
                    text: q.text.to_string(),
                    context: q.context.map(str::to_string),
                })
                .collect(),
        };
        let resp = self.classify_batch(&request)?;
        Ok(resp
            .labels
            .into_iter()
            .zip(resp.scores)
            .map(|(label, score)| Prediction { label, score })
            .collect())
    }
}
