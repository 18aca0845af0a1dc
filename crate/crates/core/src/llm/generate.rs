use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{LlmError, TokenBucket};
use crate::backend::{BackendError, HttpEndpoint, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub repeats: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 0.001,
            max_new_tokens: 256,
            repeats: 1,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(LlmError::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.repeats == 0 {
            return Err(LlmError::Config("repeats must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(LlmError::Config("max_new_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
}

pub trait GenerationBackend: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, request: &GenerationRequest) -> Result<String, BackendError>;
}

#[derive(Deserialize)]
struct GenerationReply {
    text: String,
}

#[derive(Debug, Clone)]
pub struct HttpGenerationBackend {
    pub endpoint: HttpEndpoint,
    pub model_id: String,
    pub limiter: Option<Arc<TokenBucket>>,
}

impl GenerationBackend for HttpGenerationBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        if let Some(limiter) = &self.limiter {
            limiter.acquire();
        }
        let reply: GenerationReply = self.endpoint.post_json(request)?;
        Ok(reply.text)
    }
}

/// One raw completion with request/response times in Unix milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub repeat: u32,
    pub model_id: String,
    pub requested_at_ms: u64,
    pub responded_at_ms: u64,
    pub response: String,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Sends `prompt` `cfg.repeats` times. Responses are kept verbatim; an empty
/// completion is an error.
pub fn generate(
    backend: &dyn GenerationBackend,
    prompt: &str,
    cfg: &GenerationConfig,
    retry: &RetryPolicy,
) -> Result<Vec<GenerationRecord>, LlmError> {
    cfg.validate()?;
    let request = GenerationRequest {
        prompt: prompt.to_string(),
        temperature: cfg.temperature,
        max_new_tokens: cfg.max_new_tokens,
    };
    (0..cfg.repeats)
        .map(|repeat| {
            let requested_at_ms = now_ms();
            let response = retry.run(|| backend.complete(&request))?;
            let responded_at_ms = now_ms();
            log::info!(
                "generation model={} repeat={repeat} prompt_chars={} response_chars={} requested_at_ms={requested_at_ms} responded_at_ms={responded_at_ms}",
                backend.model_id(),
                prompt.chars().count(),
                response.chars().count()
            );
            if response.trim().is_empty() {
                return Err(LlmError::Backend(BackendError::Empty));
            }
            Ok(GenerationRecord {
                repeat,
                model_id: backend.model_id().to_string(),
                requested_at_ms,
                responded_at_ms,
                response,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Canned {
        replies: Mutex<Vec<Result<String, BackendError>>>,
    }

    impl Canned {
        fn new(replies: Vec<Result<String, BackendError>>) -> Self {
            Canned {
                replies: Mutex::new(replies.into_iter().rev().collect()),
            }
        }
    }

    impl GenerationBackend for Canned {
        fn model_id(&self) -> &str {
            "canned"
        }

        fn complete(&self, _: &GenerationRequest) -> Result<String, BackendError> {
            self.replies.lock().unwrap().pop().expect("unexpected call")
        }
    }

    fn cfg(repeats: u32) -> GenerationConfig {
        GenerationConfig {
            repeats,
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn repeats_recorded_verbatim() {
        let backend = Canned::new(vec![
            Ok(" Physics\n".into()),
            Ok("Chemistry ".into()),
            Ok("Physics".into()),
        ]);
        let out = generate(&backend, "p", &cfg(3), &RetryPolicy::none()).unwrap();
        let texts: Vec<&str> = out.iter().map(|r| r.response.as_str()).collect();
        assert_eq!(texts, [" Physics\n", "Chemistry ", "Physics"]);
        assert!(out.iter().all(|r| r.responded_at_ms >= r.requested_at_ms));
        assert_eq!(out[2].repeat, 2);
    }

    #[test]
    fn transport_errors_retried_then_reported() {
        let backend = Canned::new(vec![
            Err(BackendError::Transport("reset".into())),
            Ok("Physics".into()),
        ]);
        let retry = RetryPolicy {
            max_attempts: 2,
            initial_backoff_ms: 0,
        };
        assert_eq!(generate(&backend, "p", &cfg(1), &retry).unwrap()[0].response, "Physics");

        let backend = Canned::new(vec![
            Err(BackendError::Transport("a".into())),
            Err(BackendError::Transport("b".into())),
        ]);
        let err = generate(&backend, "p", &cfg(1), &retry).unwrap_err();
        assert!(matches!(err, LlmError::Backend(BackendError::Transport(_))));
    }

    #[test]
    fn empty_completion_is_error() {
        let backend = Canned::new(vec![Ok("  \n".into())]);
        assert!(matches!(
            generate(&backend, "p", &cfg(1), &RetryPolicy::none()),
            Err(LlmError::Backend(BackendError::Empty))
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = GenerationConfig::default();
        assert_eq!(c.temperature, 0.001);
        c.temperature = 0.0;
        assert!(c.validate().is_err());
        let c = cfg(0);
        assert!(c.validate().is_err());
    }
}
