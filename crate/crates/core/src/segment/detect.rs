use std::sync::LazyLock;

use regex::Regex;

use super::{segments_from_detection, SegmentError, SegmentManifest};

/// Number of leading nonempty lines of a page searched for headings.
pub const HEADING_WINDOW: usize = 5;

static CHAPTER_WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^chapter\s+([0-9]{1,3}|[ivxl]+)(?:$|[\s.:\-])").expect("valid regex")
});
static ROMAN: LazyLock<Regex> = LazyLock::new(|| {
    // I..XXXIX; also rules out words like "did" or "mix"
    Regex::new(r"(?i)^x{0,3}(ix|iv|v?i{0,3})$").expect("valid regex")
});
static BARE_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[0-9]{1,2}\.?$").expect("valid regex"));
static NUMBERED_TITLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[0-9]{1,2}\.\s+(.+)$").expect("valid regex"));

fn leading_lines(page: &str) -> Vec<&str> {
    page.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .take(HEADING_WINDOW)
        .collect()
}

/// Heading-like line: starts with an uppercase letter, at most 12 words, no
/// terminal period, and every word of four or more letters capitalized.
fn is_title_line(line: &str) -> bool {
    let line = line.trim();
    if !line.chars().next().is_some_and(char::is_uppercase) || line.ends_with('.') {
        return false;
    }
    let words: Vec<&str> = line.split_whitespace().collect();
    words.len() <= 12
        && words.iter().all(|w| {
            let letters = w.chars().filter(|c| c.is_alphabetic()).count();
            letters < 4 || w.chars().find(|c| c.is_alphabetic()).is_some_and(char::is_uppercase)
        })
}

fn is_chapter_heading(lines: &[&str]) -> bool {
    lines.iter().enumerate().any(|(i, line)| {
        if let Some(c) = CHAPTER_WORD.captures(line) {
            let token = &c[1];
            return token.chars().all(|ch| ch.is_ascii_digit()) || ROMAN.is_match(token);
        }
        if BARE_NUMBER.is_match(line) {
            return lines.get(i + 1).is_some_and(|next| is_title_line(next));
        }
        NUMBERED_TITLE
            .captures(line)
            .is_some_and(|c| is_title_line(&c[1]))
    })
}

/// 1-based indices of pages that open with a chapter heading. Page 1 is
/// never reported.
pub fn detect_chapter_starts<S: AsRef<str>>(pages: &[S]) -> Vec<u32> {
    pages
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, page)| is_chapter_heading(&leading_lines(page.as_ref())))
        .map(|(i, _)| i as u32 + 1)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BackMatter {
    pub references: Option<u32>,
    pub appendix: Option<u32>,
}

fn is_references_heading(line: &str) -> bool {
    line.eq_ignore_ascii_case("references") || line.eq_ignore_ascii_case("bibliography")
}

fn is_appendix_heading(line: &str) -> bool {
    line.get(..8).is_some_and(|p| p.eq_ignore_ascii_case("appendix"))
}

/// First references page after `after`, then the first appendix page after
/// both `after` and the references start.
pub fn detect_back_matter<S: AsRef<str>>(pages: &[S], after: u32) -> BackMatter {
    let find = |from: u32, pred: fn(&str) -> bool| -> Option<u32> {
        pages
            .iter()
            .enumerate()
            .skip(from as usize)
            .find(|(_, page)| leading_lines(page.as_ref()).into_iter().any(pred))
            .map(|(i, _)| i as u32 + 1)
    };
    let references = find(after, is_references_heading);
    let appendix = find(references.unwrap_or(after).max(after), is_appendix_heading);
    BackMatter {
        references,
        appendix,
    }
}

/// Advisory manifest from headings alone. Chapter starts at or after the
/// first back-matter page are discarded.
pub fn detect_manifest<S: AsRef<str>>(doc_id: &str, pages: &[S]) -> Result<SegmentManifest, SegmentError> {
    let mut starts = detect_chapter_starts(pages);
    let after = starts.first().copied().unwrap_or(1);
    let back = detect_back_matter(pages, after);
    if let Some(cut) = back.references.or(back.appendix) {
        starts.retain(|&s| s < cut);
    }
    segments_from_detection(doc_id, &starts, pages.len() as u32, back.references, back.appendix)
}
