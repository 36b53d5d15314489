//! Rule-based sentence segmentation.
//!
//! A sentence ends at a run of `.`, `?` or `!` (optionally followed by
//! closing quotes or brackets) that is followed by whitespace or the end of
//! the text. A lone period closing a known abbreviation or a single-letter
//! initial never ends a sentence.

use alloc::string::String;
use alloc::vec::Vec;

/// Abbreviations (lowercase, with their trailing period) that never end a
/// sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sen.", "rep.", "gov.", "gen.", "lt.", "col.", "sgt.", "capt.", "adm.",
    "maj.", "cmdr.", "pres.", "atty.", "supt.", "rev.", "hon.", "st.", "jr.", "sr.", "mt.", "ft.", "vs.", "inc.",
    "corp.", "co.", "ltd.", "dept.", "est.", "approx.", "jan.", "feb.", "aug.", "sept.", "sep.", "oct.", "nov.",
    "dec.", "u.s.", "u.k.", "u.n.", "d.c.", "e.g.", "i.e.", "a.m.", "p.m.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201C}' | '\u{2018}')
}

/// True when `token` (the word ending in a period) is an abbreviation or an
/// initial such as `J.` or `U.S.`.
pub fn is_abbreviation(token: &str) -> bool {
    let token = token.trim_start_matches(is_opening);
    let lower: String = token.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    // Letter-period sequences: "J.", "U.S.", "D.C."
    let mut chars = token.chars();
    let mut pairs = 0;
    loop {
        match (chars.next(), chars.next()) {
            (Some(l), Some('.')) if l.is_alphabetic() => pairs += 1,
            (None, _) => return pairs > 0,
            _ => return false,
        }
    }
}

/// Byte spans of the sentences in `text`. Spans are ordered, disjoint,
/// trimmed and non-empty.
pub fn segment_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && is_terminal(chars[j].1) {
            j += 1;
        }
        let terminal_run = j - i;
        while j < chars.len() && is_closing(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
        let at_boundary = j == chars.len() || chars[j].1.is_whitespace();
        if at_boundary && !(terminal_run == 1 && c == '.' && ends_with_abbreviation(text, start, pos)) {
            push_trimmed(text, start, end, &mut spans);
            start = end;
        }
        i = j;
    }
    push_trimmed(text, start, text.len(), &mut spans);
    spans
}

/// Checks the word that ends with the period at byte `period`.
fn ends_with_abbreviation(text: &str, sentence_start: usize, period: usize) -> bool {
    let before = &text[sentence_start..period];
    let word_start = before.rfind(char::is_whitespace).map_or(sentence_start, |p| {
        sentence_start + p + before[p..].chars().next().map_or(1, char::len_utf8)
    });
    is_abbreviation(&text[word_start..=period])
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        spans.push((start + lead, end - trail));
    }
}
