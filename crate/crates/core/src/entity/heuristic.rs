//! Capitalization-based named-entity recognizer.
//!
//! An entity is a maximal run of capitalized tokens. A sentence-initial
//! token only counts when the same token appears capitalized mid-sentence
//! somewhere else in the transcript. Function words break runs, leading
//! titles ("President", "Sen.") are dropped and mark the rest as a person,
//! and lowercase `of`/`for` may join two capitalized parts
//! ("Department of Justice").

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::exclusion::ExclusionFilter;
use super::{DocumentContext, EntityLabel, EntityRecognizer, RecognizerError, TaggedSpan};
use crate::ingest::is_abbreviation;

const FUNCTION_WORDS: &[&str] = &[
    "i", "i'm", "i've", "i'll", "i'd", "a", "an", "the", "and", "but", "or", "nor", "if", "so", "yet", "we", "he",
    "she", "they", "it", "its", "it's", "this", "that", "these", "those", "you", "your", "our", "my", "his", "her",
    "their", "in", "on", "at", "of", "for", "to", "with", "as", "by", "from", "ok", "okay", "yes", "no", "well", "oh",
    "now", "then", "there", "here", "what", "when", "where", "why", "how", "who", "let", "let's", "thank", "thanks",
    "good", "hello", "hi", "dear", "please", "all", "not",
];

const TITLES: &[&str] = &[
    "president",
    "vice",
    "senator",
    "sen.",
    "representative",
    "rep.",
    "congressman",
    "congresswoman",
    "governor",
    "gov.",
    "mayor",
    "mr.",
    "mrs.",
    "ms.",
    "dr.",
    "prof.",
    "professor",
    "speaker",
    "secretary",
    "judge",
    "general",
    "gen.",
    "admiral",
    "former",
    "candidate",
    "leader",
    "chairman",
    "chairwoman",
    "director",
    "attorney",
    "pres.",
    "lt.",
    "col.",
    "sgt.",
    "capt.",
];

const CONNECTORS: &[&str] = &["of", "for"];

const ORG_CUES: &[&str] = &[
    "house",
    "senate",
    "congress",
    "party",
    "department",
    "committee",
    "administration",
    "court",
    "agency",
    "bureau",
    "council",
    "association",
    "company",
    "corporation",
    "inc.",
    "university",
    "news",
    "times",
    "post",
    "network",
    "democrats",
    "republicans",
    "campaign",
    "foundation",
    "institute",
    "commission",
    "organization",
    "service",
    "office",
    "ministry",
    "union",
    "fed",
    "reserve",
    "pentagon",
];

const PLACE_CUES: &[&str] = &[
    "city",
    "county",
    "state",
    "states",
    "island",
    "islands",
    "river",
    "street",
    "valley",
    "beach",
    "america",
    "china",
    "russia",
    "iran",
    "israel",
    "ukraine",
    "mexico",
    "canada",
    "europe",
    "asia",
    "africa",
    "york",
    "california",
    "texas",
    "florida",
    "washington",
    "korea",
    "japan",
    "india",
];

#[derive(Debug, Clone)]
struct Token {
    start: usize,
    end: usize,
    /// Punctuation after the token ends a run.
    hard_break: bool,
}

fn tokenize(sentence: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut offset = 0;
    for raw in sentence.split(' ') {
        let raw_start = offset;
        offset += raw.len() + 1;
        let lead = raw.len() - raw.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '$').len();
        let body = &raw[lead..];
        if body.is_empty() {
            continue;
        }
        let kept = if is_abbreviation(body) {
            body
        } else {
            body.trim_end_matches(|c: char| !c.is_alphanumeric() && c != '%')
        };
        if kept.is_empty() {
            continue;
        }
        out.push(Token {
            start: raw_start + lead,
            end: raw_start + lead + kept.len(),
            hard_break: kept.len() < body.len(),
        });
    }
    out
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

fn strip_possessive(word: &str) -> &str {
    word.strip_suffix("'s")
        .or_else(|| word.strip_suffix("\u{2019}s"))
        .unwrap_or(word)
}

fn lower(word: &str) -> String {
    word.to_lowercase()
}

/// Bundled recognizer that needs no external model.
#[derive(Debug, Clone, Default)]
pub struct HeuristicRecognizer {
    exclusions: ExclusionFilter,
}

impl HeuristicRecognizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Capitalized non-initial tokens of one sentence, used to build the
    /// document context.
    pub fn mid_sentence_capitalized(sentence: &str) -> impl Iterator<Item = String> + '_ {
        tokenize(sentence)
            .into_iter()
            .skip(1)
            .map(move |t| strip_possessive(&sentence[t.start..t.end]).to_string())
            .filter(|w| is_capitalized(w))
    }

    fn label_for(words: &[&str], had_title: bool) -> EntityLabel {
        let last = lower(strip_possessive(words[words.len() - 1]));
        let acronym = words.len() == 1
            && words[0].chars().filter(|c| c.is_alphabetic()).count() >= 2
            && words[0].chars().all(|c| !c.is_alphabetic() || c.is_uppercase());
        let org_word = words
            .iter()
            .any(|w| ORG_CUES.contains(&lower(strip_possessive(w)).as_str()));
        if acronym || org_word || ORG_CUES.contains(&last.as_str()) {
            EntityLabel::Org
        } else if words
            .iter()
            .any(|w| PLACE_CUES.contains(&lower(strip_possessive(w)).as_str()))
        {
            EntityLabel::Place
        } else if had_title || (2..=3).contains(&words.len()) {
            EntityLabel::Person
        } else {
            EntityLabel::Other
        }
    }

    fn emit_run(&self, sentence: &str, tokens: &[Token], run: &[usize], out: &mut Vec<TaggedSpan>) {
        // Trailing connectors never end an entity.
        let mut run = run;
        while let Some(&last) = run.last() {
            let word = lower(&sentence[tokens[last].start..tokens[last].end]);
            if CONNECTORS.contains(&word.as_str()) {
                run = &run[..run.len() - 1];
            } else {
                break;
            }
        }
        let mut first = 0;
        while first < run.len() {
            let word = lower(&sentence[tokens[run[first]].start..tokens[run[first]].end]);
            if TITLES.contains(&word.as_str()) {
                first += 1;
            } else {
                break;
            }
        }
        let had_title = first > 0;
        let run = &run[first..];
        if run.is_empty() {
            return;
        }
        let start = tokens[run[0]].start;
        let end = tokens[run[run.len() - 1]].end;
        let text = &sentence[start..end];
        let words: Vec<&str> = run.iter().map(|&i| &sentence[tokens[i].start..tokens[i].end]).collect();
        let label = if self.exclusions.is_excluded(text) {
            EntityLabel::Excluded
        } else {
            Self::label_for(&words, had_title)
        };
        out.push(TaggedSpan {
            text: text.to_string(),
            label,
            start,
            end,
        });
    }
}

impl EntityRecognizer for HeuristicRecognizer {
    fn tag_sentence(&self, sentence: &str, context: &DocumentContext) -> Result<Vec<TaggedSpan>, RecognizerError> {
        let excluded = self.exclusions.find_spans(sentence);
        let mut out: Vec<TaggedSpan> = excluded
            .iter()
            .map(|&(s, e)| TaggedSpan {
                text: sentence[s..e].to_string(),
                label: EntityLabel::Excluded,
                start: s,
                end: e,
            })
            .collect();

        let tokens = tokenize(sentence);
        let overlaps_excluded = |t: &Token| excluded.iter().any(|&(s, e)| t.start < e && s < t.end);
        let mut run: Vec<usize> = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            let word = &sentence[tok.start..tok.end];
            let lw = lower(word);
            let joins = CONNECTORS.contains(&lw.as_str())
                && !run.is_empty()
                && tokens
                    .get(i + 1)
                    .is_some_and(|n| is_capitalized(&sentence[n.start..n.end]));
            let admitted = !overlaps_excluded(tok)
                && (joins
                    || (is_capitalized(word)
                        && !FUNCTION_WORDS.contains(&lw.as_str())
                        && (i > 0
                            || TITLES.contains(&lw.as_str())
                            || context.is_mid_sentence_capitalized(strip_possessive(word)))));
            if admitted {
                run.push(i);
            } else if !run.is_empty() {
                self.emit_run(sentence, &tokens, &run, &mut out);
                run.clear();
            }
            let possessive = strip_possessive(word).len() < word.len();
            if admitted && (tok.hard_break || possessive) {
                self.emit_run(sentence, &tokens, &run, &mut out);
                run.clear();
            }
        }
        if !run.is_empty() {
            self.emit_run(sentence, &tokens, &run, &mut out);
        }
        out.sort_by_key(|s| (s.start, s.end));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tag(sentence: &str) -> Vec<(String, EntityLabel)> {
        HeuristicRecognizer::new()
            .tag_sentence(sentence, &DocumentContext::default())
            .unwrap()
            .into_iter()
            .map(|s| (s.text, s.label))
            .collect()
    }

    #[test]
    fn titles_numbers_and_times() {
        assert_eq!(
            tag("President Trump spoke at 9 PM about 50 percent unemployment."),
            vec![
                ("Trump".to_string(), EntityLabel::Person),
                ("9 PM".to_string(), EntityLabel::Excluded),
                ("50 percent".to_string(), EntityLabel::Excluded),
            ]
        );
    }

    #[test]
    fn no_capitalized_tokens() {
        assert!(tag("we talked about the economy all night.").is_empty());
        assert!(tag("Tonight we talked about the economy.").is_empty());
    }

    #[test]
    fn multiword_runs_and_connectors() {
        assert_eq!(
            tag("We visited New York City and the Department of Justice, then Biden."),
            vec![
                ("New York City".to_string(), EntityLabel::Place),
                ("Department of Justice".to_string(), EntityLabel::Org),
                ("Biden".to_string(), EntityLabel::Other),
            ]
        );
    }

    #[test]
    fn punctuation_and_possessives_break_runs() {
        let got = tag("we saw Pelosi, Schumer and Trump's team at CDC.");
        let texts: Vec<&str> = got.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(texts, vec!["Pelosi", "Schumer", "Trump's", "CDC"]);
        assert_eq!(got[3].1, EntityLabel::Org);
    }

    #[test]
    fn sentence_initial_token_needs_mid_sentence_evidence() {
        let r = HeuristicRecognizer::new();
        let mut ctx = DocumentContext::default();
        assert!(r.tag_sentence("Biden spoke.", &ctx).unwrap().is_empty());
        ctx.observe("yesterday we heard from Biden.");
        let got = r.tag_sentence("Biden spoke.", &ctx).unwrap();
        assert_eq!(got[0].text, "Biden");
    }

    #[test]
    fn month_run_is_excluded() {
        assert_eq!(
            tag("we met in April again."),
            vec![("April".to_string(), EntityLabel::Excluded)]
        );
    }
}
