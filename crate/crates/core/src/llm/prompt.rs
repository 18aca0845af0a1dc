use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::corpus::LabelSet;

/// Token estimate used for prompt budgeting.
pub const CHARS_PER_TOKEN: usize = 4;

pub const SINGLE_LABEL_DIRECTIVE: &str = "Respond with exactly one label from the list.";
pub const TWO_LEVEL_DIRECTIVE: &str =
    "Respond with exactly two lines:\nCategory: <broad discipline>\nSubcategory: <narrower discipline>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
    Instruction,
}

const BUILTIN: &[(&str, PromptMode, &str)] = &[
    ("zero_shot_v1", PromptMode::ZeroShot, include_str!("../../templates/zero_shot_v1.txt")),
    ("few_shot_v1", PromptMode::FewShot, include_str!("../../templates/few_shot_v1.txt")),
    ("instruction_v1", PromptMode::Instruction, include_str!("../../templates/instruction_v1.txt")),
    ("two_level_v1", PromptMode::ZeroShot, include_str!("../../templates/two_level_v1.txt")),
];

const PLACEHOLDERS: &[&str] = &["labels", "examples", "text", "directive"];

/// A versioned prompt template with `{{labels}}`, `{{examples}}`,
/// `{{directive}}` and `{{text}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: String,
    mode: PromptMode,
    body: String,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, mode: PromptMode, body: impl Into<String>) -> Result<Self, LlmError> {
        let t = PromptTemplate {
            id: id.into(),
            mode,
            body: body.into(),
        };
        let err = |message: String| LlmError::Template {
            id: t.id.clone(),
            message,
        };
        for piece in split_template(&t.body) {
            if let Piece::Slot(name) = piece {
                if !PLACEHOLDERS.contains(&name) {
                    return Err(err(format!("unknown placeholder {{{{{name}}}}}")));
                }
            }
        }
        for required in ["labels", "text"] {
            if !t.has_slot(required) {
                return Err(err(format!("missing {{{{{required}}}}}")));
            }
        }
        if mode == PromptMode::FewShot && !t.has_slot("examples") {
            return Err(err("few-shot template needs {{examples}}".into()));
        }
        Ok(t)
    }

    pub fn builtin(id: &str) -> Result<Self, LlmError> {
        let (id, mode, body) = BUILTIN
            .iter()
            .find(|(name, _, _)| *name == id)
            .ok_or_else(|| LlmError::UnknownTemplate(id.to_string()))?;
        PromptTemplate::new(*id, *mode, *body)
    }

    pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(id, _, _)| *id)
    }

    /// Loads a custom template; the id is the file stem.
    pub fn load(path: impl AsRef<Path>, mode: PromptMode) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| LlmError::Template {
            id: path.display().to_string(),
            message: e.to_string(),
        })?;
        let id = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        PromptTemplate::new(id, mode, body)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> PromptMode {
        self.mode
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    fn has_slot(&self, name: &str) -> bool {
        split_template(&self.body).any(|p| p == Piece::Slot(name))
    }

    /// Single-pass substitution; placeholder-like text inside values is left
    /// alone.
    fn fill(&self, labels: &str, examples: &str, directive: &str, text: &str) -> String {
        let mut out = String::with_capacity(self.body.len() + labels.len() + examples.len() + text.len());
        for piece in split_template(&self.body) {
            out.push_str(match piece {
                Piece::Literal(s) => s,
                Piece::Slot("labels") => labels,
                Piece::Slot("examples") => examples,
                Piece::Slot("directive") => directive,
                Piece::Slot(_) => text,
            });
        }
        out
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Piece<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

fn split_template(body: &str) -> impl Iterator<Item = Piece<'_>> {
    let mut rest = body;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        if let Some(inner) = rest.strip_prefix("{{") {
            if let Some(end) = inner.find("}}") {
                let name = &inner[..end];
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                    rest = &inner[end + 2..];
                    return Some(Piece::Slot(name));
                }
            }
            let (lit, tail) = rest.split_at(2);
            rest = tail;
            return Some(Piece::Literal(lit));
        }
        let cut = rest.find("{{").unwrap_or(rest.len());
        let (lit, tail) = rest.split_at(cut);
        rest = tail;
        Some(Piece::Literal(lit))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptExample {
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub template: PromptTemplate,
    pub label_inventory: Arc<LabelSet>,
    pub examples: Vec<PromptExample>,
    pub max_context_tokens: usize,
    pub response_format_directive: String,
}

impl PromptSpec {
    pub fn new(template: PromptTemplate, label_inventory: Arc<LabelSet>) -> Self {
        PromptSpec {
            template,
            label_inventory,
            examples: Vec::new(),
            max_context_tokens: 4096,
            response_format_directive: SINGLE_LABEL_DIRECTIVE.to_string(),
        }
    }

    pub fn mode(&self) -> PromptMode {
        self.template.mode()
    }

    pub fn budget_chars(&self) -> usize {
        self.max_context_tokens.saturating_mul(CHARS_PER_TOKEN)
    }
}

fn examples_block(examples: &[PromptExample]) -> String {
    examples
        .iter()
        .map(|e| format!("Text: {}\nLabel: {}\n", e.text.trim(), e.label))
        .collect::<Vec<_>>()
        .join("\n")
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn truncate_chars(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Renders the prompt for one chapter. Examples that do not fit the budget
/// are dropped from the end of the list; the chapter text is then cut from
/// its end until the prompt fits `max_context_tokens * CHARS_PER_TOKEN`
/// characters.
pub fn render_prompt(spec: &PromptSpec, chapter_text: &str) -> Result<String, LlmError> {
    if chapter_text.trim().is_empty() {
        return Err(LlmError::EmptyText);
    }
    if spec.label_inventory.is_empty() {
        return Err(LlmError::Spec("label inventory is empty".into()));
    }
    let mode = spec.mode();
    if mode == PromptMode::FewShot && spec.examples.is_empty() {
        return Err(LlmError::Spec("few-shot prompt needs at least one example".into()));
    }
    let budget = spec.budget_chars();
    let labels = spec.label_inventory.as_slice().join("\n");
    let directive = spec.response_format_directive.as_str();
    let template = &spec.template;

    let bare = char_len(&template.fill(&labels, "", directive, ""));
    if bare >= budget {
        return Err(LlmError::UnsatisfiableBudget(format!(
            "template and label inventory need {bare} characters, budget is {budget}"
        )));
    }

    let mut examples: &[PromptExample] = match mode {
        PromptMode::ZeroShot => &[],
        PromptMode::FewShot | PromptMode::Instruction => &spec.examples,
    };
    let mut block = examples_block(examples);
    while !examples.is_empty() && char_len(&template.fill(&labels, &block, directive, "")) >= budget {
        examples = &examples[..examples.len() - 1];
        block = examples_block(examples);
    }
    if mode == PromptMode::FewShot && examples.is_empty() {
        return Err(LlmError::UnsatisfiableBudget(
            "no few-shot example fits the context budget".into(),
        ));
    }
    if examples.len() < spec.examples.len() && mode != PromptMode::ZeroShot {
        log::debug!(
            "dropped {} of {} prompt examples to fit the budget",
            spec.examples.len() - examples.len(),
            spec.examples.len()
        );
    }

    let fixed = char_len(&template.fill(&labels, &block, directive, ""));
    let text = truncate_chars(chapter_text, budget - fixed);
    Ok(template.fill(&labels, &block, directive, text))
}

/// A prompt/response pair in instruction format, one line of a tuning file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub template_id: String,
    pub prompt: String,
    pub response: String,
}

pub fn instruction_record(
    spec: &PromptSpec,
    chapter_text: &str,
    label: &str,
) -> Result<InstructionRecord, LlmError> {
    if spec.label_inventory.index_of(label).is_none() {
        return Err(LlmError::Spec(format!("label '{label}' is not in the inventory")));
    }
    Ok(InstructionRecord {
        template_id: spec.template.id().to_string(),
        prompt: render_prompt(spec, chapter_text)?,
        response: label.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inventory(names: &[&str]) -> Arc<LabelSet> {
        Arc::new(LabelSet::new(names.iter().copied()).unwrap())
    }

    fn spec(id: &str) -> PromptSpec {
        PromptSpec::new(
            PromptTemplate::builtin(id).unwrap(),
            inventory(&["Physics", "Chemistry", "Linguistics"]),
        )
    }

    #[test]
    fn zero_shot_lists_each_label_once() {
        let p = render_prompt(&spec("zero_shot_v1"), "Quantum dots and lasers.").unwrap();
        for l in ["Physics", "Chemistry", "Linguistics"] {
            assert_eq!(p.matches(l).count(), 1, "{p}");
        }
        assert!(p.contains(SINGLE_LABEL_DIRECTIVE));
        assert!(p.contains("Quantum dots and lasers."));
        let labels_at = p.find("Physics").unwrap();
        assert!(labels_at < p.find(SINGLE_LABEL_DIRECTIVE).unwrap());
        assert!(p.find(SINGLE_LABEL_DIRECTIVE).unwrap() < p.find("Quantum").unwrap());
    }

    #[test]
    fn builtins_are_valid() {
        for id in PromptTemplate::builtin_ids() {
            PromptTemplate::builtin(id).unwrap();
        }
        assert!(matches!(PromptTemplate::builtin("nope"), Err(LlmError::UnknownTemplate(_))));
    }

    #[test]
    fn template_validation() {
        assert!(PromptTemplate::new("t", PromptMode::ZeroShot, "{{labels}} {{text}}").is_ok());
        assert!(PromptTemplate::new("t", PromptMode::ZeroShot, "{{labels}}").is_err());
        assert!(PromptTemplate::new("t", PromptMode::ZeroShot, "{{labels}} {{text}} {{bogus}}").is_err());
        assert!(PromptTemplate::new("t", PromptMode::FewShot, "{{labels}} {{text}}").is_err());
    }

    #[test]
    fn few_shot_needs_examples() {
        let s = spec("few_shot_v1");
        assert!(matches!(render_prompt(&s, "text"), Err(LlmError::Spec(_))));
    }

    #[test]
    fn few_shot_drops_trailing_examples() {
        let mut s = spec("few_shot_v1");
        s.examples = vec![
            PromptExample { text: "short one".into(), label: "Physics".into() },
            PromptExample { text: "x".repeat(500), label: "Chemistry".into() },
        ];
        s.max_context_tokens = 100;
        let p = render_prompt(&s, "chapter").unwrap();
        assert!(p.contains("short one"));
        assert!(!p.contains("xxxx"));
        assert!(p.chars().count() <= 400);
    }

    #[test]
    fn long_text_truncated_from_end() {
        let s = spec("zero_shot_v1");
        let text: String = (0..10_000).map(|i| format!("w{i} ")).collect();
        let p = render_prompt(&s, &text).unwrap();
        assert!(p.chars().count() <= 16_384);
        assert!(p.chars().count() >= 16_384 - 1);
        assert!(p.contains("w0 w1 w2"));
        assert!(!p.contains("w9999"));
    }

    #[test]
    fn inventory_over_budget() {
        let mut s = spec("zero_shot_v1");
        s.max_context_tokens = 10;
        assert!(matches!(
            render_prompt(&s, "text"),
            Err(LlmError::UnsatisfiableBudget(_))
        ));
        assert!(matches!(render_prompt(&spec("zero_shot_v1"), "  \n"), Err(LlmError::EmptyText)));
    }

    #[test]
    fn placeholder_text_in_chapter_is_literal() {
        let p = render_prompt(&spec("zero_shot_v1"), "see {{labels}} here").unwrap();
        assert!(p.contains("see {{labels}} here"));
        assert_eq!(p.matches("Physics").count(), 1);
    }

    #[test]
    fn deterministic() {
        let mut s = spec("instruction_v1");
        s.examples = vec![PromptExample { text: "atoms".into(), label: "Physics".into() }];
        assert_eq!(render_prompt(&s, "abc").unwrap(), render_prompt(&s, "abc").unwrap());
        assert!(render_prompt(&s, "abc").unwrap().starts_with("[INST]"));
        let rec = instruction_record(&s, "abc", "Physics").unwrap();
        assert_eq!(rec.response, "Physics");
        assert!(instruction_record(&s, "abc", "Art").is_err());
    }

    #[test]
    fn multibyte_truncation() {
        let mut s = PromptSpec::new(
            PromptTemplate::new("t", PromptMode::ZeroShot, "{{labels}}|{{text}}").unwrap(),
            inventory(&["A"]),
        );
        s.max_context_tokens = 2;
        let p = render_prompt(&s, "ééééééééé").unwrap();
        assert_eq!(p, "A|éééééé");
    }
}
