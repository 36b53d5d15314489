//! Entity classes that are never news topics: clock times, quantities,
//! money, percentages, cardinal and ordinal numbers, calendar names and
//! compass directions.

use alloc::vec::Vec;

use regex::Regex;

const MONEY: &str = r"\$\s?\d[\d,]*(?:\.\d+)?(?:\s+(?:thousand|million|billion|trillion))?|\b\d[\d,]*(?:\.\d+)?(?:\s+(?:thousand|million|billion|trillion))?\s+(?:dollars|cents|bucks)\b";
const CLOCK: &str = r"\b\d{1,2}(?::\d{2})?\s*(?:[ap]\.m\.|[ap]m\b)|\b\d{1,2}:\d{2}\b|\b\d{1,2}\s+o'clock\b";
const PERCENT: &str = r"\b\d[\d,]*(?:\.\d+)?\s*(?:%|percent\b|per\s+cent\b)";
const NUMERAL: &str = r"\b\d[\d,]*(?:\.\d+)?(?:st|nd|rd|th|s)?(?:\s+(?:hundred|thousand|million|billion|trillion))?\b";

/// Lowercase words that, alone or combined, form an excluded expression.
pub const EXCLUDED_WORDS: &[&str] = &[
    // calendar
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
    "today",
    "tonight",
    "tomorrow",
    "yesterday",
    "noon",
    "midnight",
    "morning",
    "evening",
    "afternoon",
    "am",
    "pm",
    "a.m.",
    "p.m.",
    "o'clock",
    "et",
    "pt",
    "est",
    "pst",
    "edt",
    // compass
    "north",
    "south",
    "east",
    "west",
    "northeast",
    "northwest",
    "southeast",
    "southwest",
    "northern",
    "southern",
    "eastern",
    "western",
    "northeastern",
    "northwestern",
    "southeastern",
    "southwestern",
    // cardinal and ordinal words
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
    "thirty",
    "forty",
    "fifty",
    "sixty",
    "seventy",
    "eighty",
    "ninety",
    "hundred",
    "thousand",
    "million",
    "billion",
    "trillion",
    "dozen",
    "first",
    "second",
    "third",
    "fourth",
    "fifth",
    "sixth",
    "seventh",
    "eighth",
    "ninth",
    "tenth",
    "half",
    "quarter",
    // units
    "percent",
    "%",
    "dollars",
    "dollar",
    "cents",
    "bucks",
];

/// Compiled exclusion patterns.
#[derive(Debug, Clone)]
pub struct ExclusionFilter {
    spans: Regex,
    whole: Regex,
}

impl Default for ExclusionFilter {
    fn default() -> Self {
        Self::new()
    }
}

impl ExclusionFilter {
    pub fn new() -> Self {
        let alternation = alloc::format!("{MONEY}|{CLOCK}|{PERCENT}|{NUMERAL}");
        ExclusionFilter {
            spans: Regex::new(&alloc::format!("(?i){alternation}")).expect("static pattern"),
            whole: Regex::new(&alloc::format!("(?i)^(?:{alternation})$")).expect("static pattern"),
        }
    }

    /// Byte spans of numeric, clock, money and percentage expressions.
    pub fn find_spans(&self, sentence: &str) -> Vec<(usize, usize)> {
        self.spans.find_iter(sentence).map(|m| (m.start(), m.end())).collect()
    }

    /// True when `text` as a whole belongs to an excluded class.
    pub fn is_excluded(&self, text: &str) -> bool {
        let text = text.trim();
        if self.whole.is_match(text) {
            return true;
        }
        let mut words = 0;
        for raw in text.split(|c: char| c.is_whitespace() || c == '-') {
            let word = raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '%');
            if word.is_empty() {
                continue;
            }
            words += 1;
            let lower = word.to_lowercase();
            let lower = lower.trim_end_matches("'s").trim_end_matches("\u{2019}s");
            let numeric = lower.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.');
            if !(numeric || EXCLUDED_WORDS.contains(&lower) || self.whole.is_match(lower)) {
                return false;
            }
        }
        // Punctuation-only or empty strings carry no topic either.
        words > 0 || !text.chars().any(char::is_alphabetic)
    }
}
