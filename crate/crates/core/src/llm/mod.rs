//! Conversation-level analysis through a chat-completion service.

mod client;
mod format;

use serde::{Deserialize, Serialize};

use crate::corpus::Transcript;

pub use client::{ChatClient, HttpChatClient, DEFAULT_API_KEY_ENV};
pub use format::{
    format_lines, format_transcript, truncate_lines, truncate_to_budget, Budget, FormatOptions, TRUNCATION_MARKER,
};

pub const TRANSCRIPT_PLACEHOLDER: &str = "{transcript}";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("prompt template: {0}")]
    Template(String),
    #[error("line format: {0}")]
    Format(String),
    #[error("character budget {max_chars} is smaller than the truncation marker ({marker} chars)")]
    Budget { max_chars: usize, marker: usize },
    #[error("no API key: environment variable `{0}` is not set")]
    MissingCredentials(String),
    #[error("chat service unreachable at {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("chat service returned HTTP {status}: {message}")]
    Status { status: u16, message: String },
    #[error("unexpected chat service response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    /// `summarize`, `suggestions`, or a user-chosen name.
    pub name: String,
    pub system_text: String,
    pub user_template: String,
}

const SYSTEM_TEXT: &str =
    "You are an experienced instructional coach who reads transcripts of classroom and tutoring sessions.";

const SUMMARIZE: &str = "Below is a transcript of a lesson. Each line gives the speaker and what they said.\n\nSummarize the conversation in one short paragraph: the topic, how the discussion developed, and who did most of the talking.\n\nTranscript:\n{transcript}";

const SUGGESTIONS: &str = "Below is a transcript of a lesson. Each line gives the speaker and what they said.\n\nGive the teacher three concrete suggestions for eliciting more student reasoning in a similar lesson. Refer to specific lines of the transcript where you can.\n\nTranscript:\n{transcript}";

impl PromptTemplate {
    pub fn summarize() -> Self {
        PromptTemplate {
            name: "summarize".into(),
            system_text: SYSTEM_TEXT.into(),
            user_template: SUMMARIZE.into(),
        }
    }

    pub fn suggestions() -> Self {
        PromptTemplate {
            name: "suggestions".into(),
            system_text: SYSTEM_TEXT.into(),
            user_template: SUGGESTIONS.into(),
        }
    }

    pub fn custom(system_text: impl Into<String>, user_template: impl Into<String>) -> Result<Self, LlmError> {
        let t = PromptTemplate {
            name: "custom".into(),
            system_text: system_text.into(),
            user_template: user_template.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "summarize" => Some(Self::summarize()),
            "suggestions" => Some(Self::suggestions()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        match self.user_template.matches(TRANSCRIPT_PLACEHOLDER).count() {
            1 => Ok(()),
            n => Err(LlmError::Template(format!(
                "user template must contain {TRANSCRIPT_PLACEHOLDER} exactly once, found {n}"
            ))),
        }
    }

    /// Characters the template adds around the transcript.
    pub fn overhead_chars(&self) -> usize {
        self.system_text.chars().count() + self.user_template.chars().count() - TRANSCRIPT_PLACEHOLDER.chars().count()
    }

    pub fn fill(&self, transcript_text: &str) -> Result<String, LlmError> {
        self.validate()?;
        let (head, tail) = self
            .user_template
            .split_once(TRANSCRIPT_PLACEHOLDER)
            .expect("validated above");
        Ok(format!("{head}{transcript_text}{tail}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Character budget for the whole prompt, template included.
    pub budget: Budget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptOutput {
    pub text: String,
    pub truncated_input: bool,
}

/// Formats and, if needed, truncates the transcript so the filled prompt fits
/// the budget, then sends a single chat request.
pub fn run_prompt(
    template: &PromptTemplate,
    transcript: &Transcript,
    options: &FormatOptions,
    client: &dyn ChatClient,
    params: &ChatParams,
) -> Result<PromptOutput, LlmError> {
    template.validate()?;
    let available = Budget {
        max_chars: params.budget.max_chars.saturating_sub(template.overhead_chars()),
    };
    let (body, truncated_input) = truncate_to_budget(transcript, options, available)?;
    let request = ChatRequest {
        model: params.model_id.clone(),
        messages: vec![
            ChatMessage {
                role: "system".into(),
                content: template.system_text.clone(),
            },
            ChatMessage {
                role: "user".into(),
                content: template.fill(&body)?,
            },
        ],
        temperature: params.temperature,
        max_tokens: params.max_output_tokens,
    };
    let text = client.complete(&request)?;
    Ok(PromptOutput { text, truncated_input })
}
