use std::collections::{BTreeMap, BTreeSet};

use super::ParseError;
use crate::kr::Signature;

/// Controlled vocabulary for one dialect of questions and answers.
///
/// Text format, one entry per line, `#` starts a comment:
///
/// ```text
/// picked -> pick                      lemma: surface word to canonical word
/// blue cube => blue_block             synonym: canonical phrase to domain token
/// np ob1: object ob1                  noun phrase used when rendering a constant
/// option pronoun                      dialect switch
/// template answer.why_not: Because {clauses}
/// ```
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VocabTable {
    pub lemmas: BTreeMap<String, String>,
    /// Phrase (space separated canonical words) to domain token.
    pub synonyms: BTreeMap<String, String>,
    pub noun_phrases: BTreeMap<String, String>,
    pub templates: BTreeMap<String, String>,
    pub options: BTreeSet<String>,
}

/// Words the query grammars understand besides domain tokens.
pub const GRAMMAR_WORDS: &[&str] = &[
    "why",
    "do",
    "not",
    "believe",
    "describe",
    "plan",
    "step",
    "first",
    "initial",
    "state",
    "be",
    "on",
    "below",
    "above",
    "front",
    "stable",
    "unstable",
    "occluded",
    "hold",
    "have",
    "small_base",
    "in_hand",
    "table",
];

const BUNDLED: &[(&str, &str)] = &[
    ("analyzer", include_str!("../../data/vocab/analyzer.vocab")),
    ("exec", include_str!("../../data/vocab/exec.vocab")),
    ("intro", include_str!("../../data/vocab/intro.vocab")),
];

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, column: 1, message: message.into() }
}

impl VocabTable {
    pub fn parse(text: &str) -> Result<VocabTable, ParseError> {
        let mut v = VocabTable::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("template ") {
                let (key, body) = rest.split_once(':').ok_or_else(|| syntax(n, "expected `template <key>: <text>`"))?;
                v.templates.insert(key.trim().to_string(), body.trim().to_string());
            } else if let Some(rest) = line.strip_prefix("np ") {
                let (tok, body) = rest.split_once(':').ok_or_else(|| syntax(n, "expected `np <token>: <text>`"))?;
                v.noun_phrases.insert(tok.trim().to_string(), body.trim().to_string());
            } else if let Some(rest) = line.strip_prefix("option ") {
                v.options.insert(rest.trim().to_string());
            } else if let Some((a, b)) = line.split_once("=>") {
                let phrase = a.split_whitespace().collect::<Vec<_>>().join(" ");
                let tok = b.trim();
                if phrase.is_empty() || tok.is_empty() || tok.contains(char::is_whitespace) {
                    return Err(syntax(n, "expected `<phrase> => <token>`"));
                }
                v.synonyms.insert(phrase, tok.to_string());
            } else if let Some((a, b)) = line.split_once("->") {
                let (a, b) = (a.trim(), b.trim());
                if a.is_empty() || b.is_empty() || a.contains(' ') || b.contains(' ') {
                    return Err(syntax(n, "expected `<word> -> <lemma>`"));
                }
                v.lemmas.insert(a.to_string(), b.to_string());
            } else {
                return Err(syntax(n, format!("unrecognized entry `{line}`")));
            }
        }
        Ok(v)
    }

    /// One of the bundled dialects: `analyzer`, `exec` or `intro`.
    pub fn bundled(name: &str) -> Option<VocabTable> {
        BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| VocabTable::parse(t).expect("bundled vocabulary parses"))
    }

    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    pub fn has_option(&self, o: &str) -> bool {
        self.options.contains(o)
    }

    /// Checks that every synonym and noun-phrase token names something the
    /// signature or the grammar knows.
    pub fn check(&self, sig: &Signature) -> Result<(), ParseError> {
        let known = |t: &str| GRAMMAR_WORDS.contains(&t) || sig.sort_of(t).is_some() || sig.schema(t).is_some();
        for tok in self.synonyms.values().chain(self.noun_phrases.keys()) {
            if !known(tok) {
                return Err(ParseError::UnknownObject(tok.clone()));
            }
        }
        Ok(())
    }

    pub fn lemma<'a>(&'a self, w: &'a str) -> &'a str {
        self.lemmas.get(w).map(|s| s.as_str()).unwrap_or(w)
    }

    /// Noun phrase for a constant, with its article. Identifiers such as
    /// `ob2` read "object ob2".
    pub fn noun_phrase(&self, c: &str) -> String {
        if let Some(np) = self.noun_phrases.get(c) {
            return np.clone();
        }
        let t = c.trim_end_matches(|ch: char| ch.is_ascii_digit());
        if t.len() < c.len() && !t.contains('_') {
            format!("object {c}")
        } else {
            format!("the {}", bare(c))
        }
    }
}

/// A constant's words without an article: `white_block` reads "white block".
pub fn bare(c: &str) -> String {
    c.replace('_', " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_entry_kind() {
        let v = VocabTable::parse(
            "# comment\npicked -> pick\nblue  cube => blue_block\nnp ob1: object ob1\noption pronoun\ntemplate answer.none: I cannot explain that.\n",
        )
        .unwrap();
        assert_eq!(v.lemma("picked"), "pick");
        assert_eq!(v.lemma("pig"), "pig");
        assert_eq!(v.synonyms["blue cube"], "blue_block");
        assert_eq!(v.noun_phrase("ob1"), "object ob1");
        assert!(v.has_option("pronoun"));
        assert_eq!(v.templates["answer.none"], "I cannot explain that.");
    }

    #[test]
    fn rejects_garbage() {
        let e = VocabTable::parse("ok -> fine\nthis line means nothing\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 2, .. }));
    }

    #[test]
    fn default_noun_phrases() {
        let v = VocabTable::default();
        assert_eq!(v.noun_phrase("tennis_ball"), "the tennis ball");
        assert_eq!(v.noun_phrase("pitcher"), "the pitcher");
        assert_eq!(v.noun_phrase("table"), "the table");
        assert_eq!(v.noun_phrase("ob2"), "object ob2");
    }

    #[test]
    fn bundled_dialects_check_against_the_domain() {
        let d = crate::ra_domain().with_objects([("object", "blue_block"), ("object", "yellow_ball")]);
        for n in VocabTable::bundled_names() {
            let v = VocabTable::bundled(n).unwrap();
            v.check(&d.signature).unwrap();
            assert!(v.templates.contains_key("answer.none"), "{n}");
        }
    }
}
