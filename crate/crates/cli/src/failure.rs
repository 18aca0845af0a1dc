use std::fmt;

use etdchap::backend::BackendError;
use etdchap::classify::ClassifyError;
use etdchap::llm::LlmError;

/// Process exit classes. Anything untagged counts as a validation failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Validation = 1,
    Config = 2,
    Backend = 3,
}

#[derive(Debug)]
pub struct Tagged {
    pub failure: Failure,
    pub message: String,
    source: Option<anyhow::Error>,
}

impl fmt::Display for Tagged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Tagged {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        self.source.as_ref().map(|e| e.as_ref())
    }
}

pub fn fail(failure: Failure, message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Tagged {
        failure,
        message: message.into(),
        source: None,
    })
}

pub trait TagExt<T> {
    fn tag(self, failure: Failure, message: impl Into<String>) -> anyhow::Result<T>;
}

impl<T, E> TagExt<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn tag(self, failure: Failure, message: impl Into<String>) -> anyhow::Result<T> {
        self.map_err(|e| {
            anyhow::Error::new(Tagged {
                failure,
                message: message.into(),
                source: Some(e.into()),
            })
        })
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(t) = cause.downcast_ref::<Tagged>() {
            return t.failure as u8;
        }
        let backend = cause.is::<BackendError>()
            || matches!(cause.downcast_ref::<LlmError>(), Some(LlmError::Backend(_)))
            || matches!(
                cause.downcast_ref::<ClassifyError>(),
                Some(ClassifyError::Backend(_) | ClassifyError::Contract(_))
            );
        if backend {
            return Failure::Backend as u8;
        }
    }
    Failure::Validation as u8
}
