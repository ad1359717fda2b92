use super::LlmError;
use crate::corpus::{Transcript, Utterance};

/// Appended on its own line when lines are dropped.
pub const TRUNCATION_MARKER: &str = "[transcript trimmed]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatOptions {
    /// Prefix each line with its 0-based row index, as `"{n}. "`.
    pub include_line_numbers: bool,
    /// Placeholders: `{line_number}`, `{speaker}`, `{text}`.
    pub line_format: String,
}

impl Default for FormatOptions {
    fn default() -> Self {
        FormatOptions {
            include_line_numbers: false,
            line_format: "{speaker}: {text}".into(),
        }
    }
}

impl FormatOptions {
    pub fn numbered() -> Self {
        FormatOptions {
            include_line_numbers: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let names = placeholders(&self.line_format)?;
        for required in ["speaker", "text"] {
            if !names.iter().any(|n| n == required) {
                return Err(LlmError::Format(format!("line format must contain {{{required}}}")));
            }
        }
        Ok(())
    }
}

fn placeholders(template: &str) -> Result<Vec<String>, LlmError> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| LlmError::Format(format!("unclosed `{{` in `{template}`")))?;
        let name = &after[..close];
        if !matches!(name, "line_number" | "speaker" | "text") {
            return Err(LlmError::Format(format!("unknown placeholder `{{{name}}}`")));
        }
        names.push(name.to_string());
        rest = &after[close + 1..];
    }
    Ok(names)
}

/// Single pass, so braces inside the utterance text are left alone.
fn fill_line(options: &FormatOptions, u: &Utterance) -> String {
    let text = u.text.replace(['\r', '\n'], " ");
    let mut out = String::new();
    if options.include_line_numbers {
        out.push_str(&format!("{}. ", u.row_index));
    }
    let mut rest = options.line_format.as_str();
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').unwrap_or(after.len());
        match &after[..close] {
            "line_number" => out.push_str(&u.row_index.to_string()),
            "speaker" => out.push_str(&u.speaker),
            "text" => out.push_str(&text),
            other => {
                out.push('{');
                out.push_str(other);
                out.push('}');
            }
        }
        rest = after.get(close + 1..).unwrap_or("");
    }
    out.push_str(rest);
    out
}

pub fn format_lines(transcript: &Transcript, options: &FormatOptions) -> Result<Vec<String>, LlmError> {
    options.validate()?;
    Ok(transcript.utterances().iter().map(|u| fill_line(options, u)).collect())
}

/// One line per utterance, joined by `\n` with no trailing newline.
pub fn format_transcript(transcript: &Transcript, options: &FormatOptions) -> Result<String, LlmError> {
    Ok(format_lines(transcript, options)?.join("\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Measured in Unicode scalar values.
    pub max_chars: usize,
}

impl Budget {
    pub const DEFAULT_CHARS_PER_TOKEN: f64 = 4.0;

    /// Character budget for a context window after reserving output tokens.
    pub fn from_tokens(context_tokens: usize, reserved_tokens: usize, chars_per_token: f64) -> Self {
        let tokens = context_tokens.saturating_sub(reserved_tokens);
        Budget {
            max_chars: (tokens as f64 * chars_per_token).floor().max(0.0) as usize,
        }
    }
}

/// Keeps the longest prefix of whole lines that fits. Every kept line is
/// followed by a newline when the marker is appended; otherwise lines are
/// joined as in [`format_transcript`].
pub fn truncate_lines(lines: &[String], budget: Budget) -> Result<(String, bool), LlmError> {
    let marker = TRUNCATION_MARKER.chars().count();
    if budget.max_chars < marker {
        return Err(LlmError::Budget {
            max_chars: budget.max_chars,
            marker,
        });
    }
    let lens: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
    let full = lens.iter().sum::<usize>() + lens.len().saturating_sub(1);
    if full <= budget.max_chars {
        return Ok((lines.join("\n"), false));
    }
    let mut used = marker;
    let mut out = String::new();
    for (line, len) in lines.iter().zip(&lens) {
        if used + len + 1 > budget.max_chars {
            break;
        }
        used += len + 1;
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(TRUNCATION_MARKER);
    Ok((out, true))
}

pub fn truncate_to_budget(
    transcript: &Transcript,
    options: &FormatOptions,
    budget: Budget,
) -> Result<(String, bool), LlmError> {
    truncate_lines(&format_lines(transcript, options)?, budget)
}
