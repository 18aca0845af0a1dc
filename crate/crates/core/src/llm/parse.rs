use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{LlmError, TwoLevelLabel};
use crate::corpus::LabelSet;

/// Outcome of reading a single-label answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum SingleLabel {
    Canonical(String),
    FreeText(String),
}

static LABEL_PREFIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:(?:sub[\s-]?)?category|label|answer|classification|discipline|subject)\s*:\s*")
        .expect("valid regex")
});
static BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[-*•>]+|\d+[.)])\s+").expect("valid regex"));
static QUOTED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#""([^"\n]+)"|“([^”\n]+)”|``([^'\n]+)''"#).expect("valid regex")
});
static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(sub[\s-]?category|category)\s*\**\s*:").expect("valid regex")
});
// a bullet or bar left between an inline value and the next marker
static TRAILING_SEPARATOR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\s+[-–*•|>]+\s*$").expect("valid regex"));
static BOILERPLATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:sure|certainly|okay|ok|of course|here is|here's|here are)\b").expect("valid regex")
});

const TRIM: &[char] = &[
    '"', '\'', '“', '”', '‘', '’', '`', '*', '_', '.', ',', ';', ':', '!', '?',
];

fn trim_value(s: &str) -> &str {
    let mut s = s.trim();
    loop {
        let t = s.trim_matches(TRIM).trim();
        if t.len() == s.len() {
            return t;
        }
        s = t;
    }
}

fn clean_line(line: &str) -> String {
    let mut s = trim_value(line).to_string();
    loop {
        let next = BULLET.replace(&s, "");
        let next = LABEL_PREFIX.replace(&next, "");
        let next = trim_value(&next).to_string();
        if next == s {
            return s;
        }
        s = next;
    }
}

fn quoted_phrases(raw: &str) -> impl Iterator<Item = &str> {
    QUOTED.captures_iter(raw).filter_map(|c| {
        let m = c.get(1).or_else(|| c.get(2)).or_else(|| c.get(3))?;
        let v = trim_value(m.as_str());
        (!v.is_empty()).then_some(v)
    })
}

fn is_boilerplate(line: &str, cleaned: &str) -> bool {
    let t = line.trim();
    cleaned.is_empty() || t.ends_with(':') || BOILERPLATE.is_match(t)
}

/// Reads a single-label answer. A line (or quoted phrase) matching a
/// canonical label, ignoring case and spacing, wins; otherwise the first
/// substantive line is returned as free text for normalization.
pub fn parse_single_label(raw: &str, label_set: &LabelSet) -> Result<SingleLabel, LlmError> {
    if raw.trim().is_empty() {
        return Err(LlmError::Parse {
            message: "empty response".into(),
            raw: raw.to_string(),
        });
    }
    let canonical = |text: &str| {
        label_set
            .find_normalized(text)
            .map(|i| SingleLabel::Canonical(label_set.as_slice()[i].clone()))
    };
    for line in raw.lines() {
        if let Some(found) = canonical(&clean_line(line)) {
            return Ok(found);
        }
    }
    if let Some(found) = quoted_phrases(raw).find_map(canonical) {
        return Ok(found);
    }
    for line in raw.lines() {
        let cleaned = clean_line(line);
        if is_boilerplate(line, &cleaned) {
            continue;
        }
        let text = quoted_phrases(line)
            .next()
            .map_or(cleaned.clone(), str::to_string);
        return Ok(SingleLabel::FreeText(text));
    }
    quoted_phrases(raw)
        .next()
        .map(|q| SingleLabel::FreeText(q.to_string()))
        .ok_or_else(|| LlmError::Parse {
            message: "no label-like content".into(),
            raw: raw.to_string(),
        })
}

/// Reads a two-level answer. `Category:` and `Subcategory:` markers are
/// matched case-insensitively; each value runs to the end of its line or the
/// next marker. Without markers the first quoted phrase is taken as the
/// category.
pub fn parse_two_level(raw: &str) -> Result<TwoLevelLabel, LlmError> {
    let mut category: Option<String> = None;
    let mut subcategory: Option<String> = None;
    for line in raw.lines() {
        let markers: Vec<_> = MARKER
            .captures_iter(line)
            .filter(|c| {
                let start = c.get(0).expect("match").start();
                !line[..start].chars().next_back().is_some_and(char::is_alphabetic)
            })
            .map(|c| {
                let whole = c.get(0).expect("match");
                let is_sub = c[1].to_ascii_lowercase().starts_with("sub");
                (is_sub, whole.start(), whole.end())
            })
            .collect();
        for (k, &(is_sub, _, end)) in markers.iter().enumerate() {
            let stop = markers.get(k + 1).map_or(line.len(), |m| m.1);
            let segment = TRAILING_SEPARATOR.replace(&line[end..stop], "");
            let value = trim_value(&segment);
            if value.is_empty() {
                continue;
            }
            let slot = if is_sub { &mut subcategory } else { &mut category };
            if slot.is_none() {
                *slot = Some(value.to_string());
            }
        }
    }
    if let Some(category) = category {
        return Ok(TwoLevelLabel::new(category, subcategory.unwrap_or_default()));
    }
    match quoted_phrases(raw).next() {
        Some(q) => Ok(TwoLevelLabel::new(q, "")),
        None => Err(LlmError::Parse {
            message: "no category marker or quoted category".into(),
            raw: raw.to_string(),
        }),
    }
}
