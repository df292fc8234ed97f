//! Answer generation over assembled prompts.
//!
//! A [`GenerationBackend`] turns a grounded prompt into answer text that may
//! cite evidence lines inline as `[T1]`-style markers. Two backends ship:
//! a deterministic rule-driven mock for tests, demos, and benchmarks, and an
//! HTTP client for a real model endpoint. Cited tags are validated against
//! the prompt's citation map before an answer is accepted; an answer citing
//! a tag the prompt never offered is rejected, not repaired.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verbalize::Prompt;

/// Fixed abstention text returned when no rule fires or no evidence exists.
pub const ABSTAIN_ANSWER: &str = "Insufficient KG evidence.";

/// Environment variable holding the bearer token for [`HttpBackend`].
pub const API_KEY_ENV: &str = "KGRAG_API_KEY";

/// Sleep before each retry of a rate-limited or transport-failed request.
/// One retry per entry; other failures are surfaced immediately.
pub const RETRY_BACKOFF_MS: [u64; 3] = [500, 1000, 2000];

#[derive(Debug, Error)]
pub enum GenError {
    #[error("answer cites unresolved tag [{0}]")]
    UnresolvedTag(String),
    #[error("generation endpoint returned status {0}")]
    BadStatus(u16),
    #[error("generation request failed: {0}")]
    Transport(String),
    #[error("generation response malformed: {0}")]
    BadResponse(String),
    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Raw generation output. `latency_ms` is filled by [`timed_generate`] and
/// omitted from serialized answers when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latency_ms: Option<u64>,
}

impl Answer {
    pub fn abstain() -> Self {
        Answer {
            text: ABSTAIN_ANSWER.to_string(),
            latency_ms: None,
        }
    }

    pub fn is_abstention(&self) -> bool {
        self.text == ABSTAIN_ANSWER
    }
}

/// Anything that can turn a prompt into answer text.
pub trait GenerationBackend: Send + Sync {
    fn generate(&self, prompt: &Prompt) -> Result<Answer, GenError>;
}

/// Run a backend and stamp wall-clock latency onto the answer.
pub fn timed_generate(
    backend: &dyn GenerationBackend,
    prompt: &Prompt,
) -> Result<Answer, GenError> {
    let start = Instant::now();
    let mut answer = backend.generate(prompt)?;
    answer.latency_ms = Some(start.elapsed().as_millis() as u64);
    Ok(answer)
}

/// Citation tags appearing in answer text, in order of first appearance.
pub fn extract_tags(text: &str) -> Vec<String> {
    let mut tags = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            if let Some(close) = text[i..].find(']') {
                let inner = &text[i + 1..i + close];
                if inner.len() > 1
                    && inner.starts_with('T')
                    && inner[1..].bytes().all(|b| b.is_ascii_digit())
                {
                    if !tags.iter().any(|t| t == inner) {
                        tags.push(inner.to_string());
                    }
                    i += close + 1;
                    continue;
                }
            }
        }
        i += 1;
    }
    tags
}

/// Check that every tag cited by the answer resolves in the prompt, and
/// return the cited tags in order of first appearance. An unresolved tag is
/// an integrity failure: the answer referenced evidence that was never
/// offered.
pub fn validate_citations(text: &str, prompt: &Prompt) -> Result<Vec<String>, GenError> {
    let tags = extract_tags(text);
    for tag in &tags {
        if prompt.resolve(tag).is_none() {
            return Err(GenError::UnresolvedTag(tag.clone()));
        }
    }
    Ok(tags)
}

/// One deterministic generation rule. A rule fires when its activation
/// substring appears in the rendered prompt and every `require_evidence`
/// needle matches at least one evidence sentence; otherwise the backend
/// falls through to the next rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    pub when_prompt_contains: String,
    pub answer: String,
    #[serde(default)]
    pub require_evidence: Vec<String>,
    /// Append the tags of the matched evidence lines after the answer.
    #[serde(default = "default_true")]
    pub cite_matched: bool,
    #[serde(default)]
    pub explanation: Option<String>,
}

fn default_true() -> bool {
    true
}

/// Rule-driven deterministic backend. Rules are evaluated in order; the
/// first rule that fires wins, and a prompt no rule covers gets the fixed
/// abstention answer. Identical prompts always produce identical answers.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    rules: Vec<MockRule>,
}

impl MockBackend {
    pub fn new(rules: Vec<MockRule>) -> Self {
        MockBackend { rules }
    }

    pub fn from_json(text: &str) -> Result<Self, GenError> {
        let rules: Vec<MockRule> = serde_json::from_str(text).map_err(|e| GenError::Parse {
            what: "mock generation rules".to_string(),
            message: e.to_string(),
        })?;
        Ok(MockBackend { rules })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GenError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl GenerationBackend for MockBackend {
    fn generate(&self, prompt: &Prompt) -> Result<Answer, GenError> {
        if !prompt.has_evidence() {
            return Ok(Answer::abstain());
        }
        'rules: for rule in &self.rules {
            if !prompt.rendered.contains(&rule.when_prompt_contains) {
                continue;
            }
            let mut cited: Vec<&str> = Vec::new();
            for needle in &rule.require_evidence {
                let hit = prompt
                    .evidence_lines
                    .iter()
                    .find(|(_, sentence)| sentence.contains(needle));
                match hit {
                    Some((tag, _)) => {
                        if !cited.contains(&tag.as_str()) {
                            cited.push(tag);
                        }
                    }
                    None => continue 'rules,
                }
            }
            let mut text = rule.answer.clone();
            if rule.cite_matched && !cited.is_empty() {
                text.push(' ');
                for tag in &cited {
                    text.push_str(&format!("[{tag}]"));
                }
            }
            if let Some(explanation) = &rule.explanation {
                text.push('\n');
                text.push_str(explanation);
            }
            return Ok(Answer {
                text,
                latency_ms: None,
            });
        }
        Ok(Answer::abstain())
    }
}

/// Request body sent to a generation endpoint.
#[derive(Debug, Serialize)]
pub struct HttpGenRequest<'a> {
    pub prompt: &'a str,
}

/// Response body expected from a generation endpoint.
#[derive(Debug, Deserialize)]
pub struct HttpGenResponse {
    pub text: String,
}

/// Blocking HTTP client backend. Sends the rendered prompt as JSON and
/// expects `{"text": "..."}` back. A bearer token is read from the
/// `KGRAG_API_KEY` environment variable at construction when present.
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>) -> Result<Self, GenError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(30))
            .build()
            .map_err(|e| GenError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            client,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl HttpBackend {
    fn attempt(&self, prompt: &Prompt) -> Result<Answer, GenError> {
        let mut request = self
            .client
            .post(&self.endpoint)
            .json(&HttpGenRequest {
                prompt: &prompt.rendered,
            });
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| GenError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(GenError::BadStatus(status.as_u16()));
        }
        let body: HttpGenResponse = response
            .json()
            .map_err(|e| GenError::BadResponse(e.to_string()))?;
        Ok(Answer {
            text: body.text,
            latency_ms: None,
        })
    }
}

fn retryable(error: &GenError) -> bool {
    matches!(error, GenError::Transport(_) | GenError::BadStatus(429))
}

impl GenerationBackend for HttpBackend {
    fn generate(&self, prompt: &Prompt) -> Result<Answer, GenError> {
        let mut last = self.attempt(prompt);
        for backoff_ms in RETRY_BACKOFF_MS {
            match &last {
                Ok(_) => return last,
                Err(e) if retryable(e) => {
                    std::thread::sleep(std::time::Duration::from_millis(backoff_ms));
                    last = self.attempt(prompt);
                }
                Err(_) => return last,
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Literal, Node, Provenance, SourceFamily, Triple};
    use crate::verbalize::{build_prompt, TemplateSet};
    use chrono::{DateTime, Utc};

    fn when() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2025-04-12T00:00:00Z")
            .unwrap()
            .with_timezone(&Utc)
    }

    fn prov() -> Provenance {
        Provenance {
            doc_uri: "doc://gen-tests".to_string(),
            paragraph: 0,
            source_family: SourceFamily::Spec,
            revision_date: when(),
        }
    }

    fn templates() -> TemplateSet {
        TemplateSet::from_json(include_str!("../data/templates.json")).unwrap()
    }

    fn fig_prompt() -> Prompt {
        let suitable = Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::Entity("URLLC".to_string()),
            prov(),
            when(),
        );
        let latency = Triple::extracted(
            "SliceProfile",
            "max_latency",
            Node::Literal(Literal::DurationMs(50)),
            prov(),
            when(),
        );
        build_prompt(
            &[&suitable, &latency],
            "Which SST should I configure for URLLC with under 50 ms latency?",
            &templates(),
        )
        .unwrap()
    }

    fn fig_rule() -> MockRule {
        MockRule {
            when_prompt_contains: "under 50 ms latency".to_string(),
            answer: "Configure the slice as SST Type 2 (URLLC).".to_string(),
            require_evidence: vec![
                "is suitable for URLLC applications".to_string(),
                "maximum latency of 50 ms".to_string(),
            ],
            cite_matched: true,
            explanation: Some(
                "This satisfies the 50 ms latency requirement defined in the slice profile."
                    .to_string(),
            ),
        }
    }

    #[test]
    fn abstains_on_empty_evidence() {
        let prompt = build_prompt(&[], "Anything at all?", &templates()).unwrap();
        let backend = MockBackend::new(vec![fig_rule()]);
        let answer = backend.generate(&prompt).unwrap();
        assert_eq!(answer.text, ABSTAIN_ANSWER);
        assert!(answer.is_abstention());
    }

    #[test]
    fn rule_fires_and_cites_matched_evidence_lines() {
        let backend = MockBackend::new(vec![fig_rule()]);
        let answer = backend.generate(&fig_prompt()).unwrap();
        assert_eq!(
            answer.text,
            "Configure the slice as SST Type 2 (URLLC). [T1][T2]\n\
             This satisfies the 50 ms latency requirement defined in the slice profile."
        );
        let tags = validate_citations(&answer.text, &fig_prompt()).unwrap();
        assert_eq!(tags, vec!["T1", "T2"]);
    }

    #[test]
    fn rule_falls_through_when_required_evidence_is_missing() {
        let fallback = MockRule {
            when_prompt_contains: "under 50 ms latency".to_string(),
            answer: "No suitability fact is on record.".to_string(),
            require_evidence: vec![],
            cite_matched: true,
            explanation: None,
        };
        let mut first = fig_rule();
        first
            .require_evidence
            .push("something the prompt never says".to_string());
        let backend = MockBackend::new(vec![first, fallback]);
        let answer = backend.generate(&fig_prompt()).unwrap();
        assert_eq!(answer.text, "No suitability fact is on record.");
    }

    #[test]
    fn generation_is_deterministic_per_prompt() {
        let backend = MockBackend::new(vec![fig_rule()]);
        let a = backend.generate(&fig_prompt()).unwrap();
        let b = backend.generate(&fig_prompt()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tag_extraction_orders_and_dedupes() {
        let text = "See [T2] and [T1], then [T2] again; [not-a-tag] [T] [T12b] stay out.";
        assert_eq!(extract_tags(text), vec!["T2", "T1"]);
        assert_eq!(extract_tags("no tags here"), Vec::<String>::new());
        assert_eq!(extract_tags("[T10]"), vec!["T10"]);
    }

    #[test]
    fn citing_an_unoffered_tag_is_rejected() {
        let prompt = fig_prompt();
        let err = validate_citations("Looks fine. [T9]", &prompt).unwrap_err();
        match err {
            GenError::UnresolvedTag(tag) => assert_eq!(tag, "T9"),
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(
            validate_citations("Grounded. [T1]", &prompt).unwrap(),
            vec!["T1"]
        );
    }

    #[test]
    fn mock_rules_parse_from_json_with_defaults() {
        let backend = MockBackend::from_json(
            r#"[{"when_prompt_contains": "x", "answer": "y"}]"#,
        )
        .unwrap();
        assert_eq!(backend.len(), 1);
        assert!(backend.rules[0].cite_matched);
        assert!(backend.rules[0].require_evidence.is_empty());
        assert!(MockBackend::from_json("not json").is_err());
    }

    #[test]
    fn http_backend_round_trips_against_local_server() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            for (i, stream) in listener.incoming().take(2).enumerate() {
                let mut stream = stream.unwrap();
                let mut buf = [0u8; 4096];
                let _ = stream.read(&mut buf);
                let reply = if i == 0 {
                    let body = r#"{"text": "Configured. [T1]"}"#;
                    format!(
                        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                        body.len(),
                        body
                    )
                } else {
                    "HTTP/1.1 503 Service Unavailable\r\ncontent-length: 0\r\n\r\n".to_string()
                };
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });

        let backend = HttpBackend::new(format!("http://{addr}/generate")).unwrap();
        let answer = backend.generate(&fig_prompt()).unwrap();
        assert_eq!(answer.text, "Configured. [T1]");

        let err = backend.generate(&fig_prompt()).unwrap_err();
        assert!(matches!(err, GenError::BadStatus(503)));
        handle.join().unwrap();
    }

    #[test]
    fn rate_limited_request_is_retried() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            for (i, stream) in listener.incoming().take(2).enumerate() {
                let mut stream = stream.unwrap();
                let mut buf = [0u8; 4096];
                let _ = stream.read(&mut buf);
                let reply = if i == 0 {
                    "HTTP/1.1 429 Too Many Requests\r\ncontent-length: 0\r\n\r\n".to_string()
                } else {
                    let body = r#"{"text": "Recovered."}"#;
                    format!(
                        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                        body.len(),
                        body
                    )
                };
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });

        let backend = HttpBackend::new(format!("http://{addr}/generate")).unwrap();
        let answer = backend.generate(&fig_prompt()).unwrap();
        assert_eq!(answer.text, "Recovered.");
        handle.join().unwrap();
    }

    #[test]
    fn timed_generation_records_latency() {
        let backend = MockBackend::new(vec![fig_rule()]);
        let answer = timed_generate(&backend, &fig_prompt()).unwrap();
        assert!(answer.latency_ms.is_some());
        let json = serde_json::to_string(&Answer {
            text: "x".to_string(),
            latency_ms: None,
        })
        .unwrap();
        assert!(!json.contains("latency_ms"));
    }
}
