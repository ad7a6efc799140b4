use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::vocab::{bare, VocabTable, GRAMMAR_WORDS};
use super::ParseError;
use crate::kr::{Action, Literal, Signature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QueryKind {
    DescribePlan,
    WhyAction,
    WhyNotAction,
    WhyBelief,
}

impl QueryKind {
    /// Template namespace of the kind.
    pub fn key(self) -> &'static str {
        match self {
            QueryKind::DescribePlan => "describe",
            QueryKind::WhyAction => "why_action",
            QueryKind::WhyNotAction => "why_not",
            QueryKind::WhyBelief => "why_belief",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub kind: QueryKind,
    pub action: Option<Action>,
    pub belief: Option<Literal>,
    pub step: Option<usize>,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        let mut parts = Vec::new();
        if let Some(a) = &self.action {
            parts.push(a.to_string());
        }
        if let Some(b) = &self.belief {
            parts.push(b.to_string());
        }
        if let Some(s) = self.step {
            parts.push(s.to_string());
        }
        if !parts.is_empty() {
            write!(f, "({})", parts.join(", "))?;
        }
        Ok(())
    }
}

/// The accepted question shapes, for error messages.
pub const GRAMMARS: &[&str] = &[
    "describe the plan",
    "why did you <action> [at step N]",
    "why did you not <action> [at step N]",
    "why did you believe <object> was <relation> <object> [at step N]",
];

const FILLER: &[&str] =
    &["the", "a", "an", "you", "i", "that", "to", "please", "time", "want", "at", "in", "of", "object"];

const NUMBERS: &[&str] = &[
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
];

fn words(text: &str, vocab: &VocabTable) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .map(|w| vocab.lemma(w).to_string())
        .collect()
}

/// Replaces the longest known phrases by their tokens.
fn tokens(ws: &[String], phrases: &BTreeMap<String, String>) -> Vec<String> {
    let longest = phrases.keys().map(|p| p.split(' ').count()).max().unwrap_or(1);
    let mut out = Vec::new();
    let mut i = 0;
    while i < ws.len() {
        let hit = (1..=longest.min(ws.len() - i)).rev().find_map(|n| {
            let p = ws[i..i + n].join(" ");
            phrases.get(&p).map(|t| (n, t.clone()))
        });
        match hit {
            Some((n, t)) => {
                out.push(t);
                i += n;
            }
            None => {
                out.push(ws[i].clone());
                i += 1;
            }
        }
    }
    out
}

struct Cursor<'a> {
    toks: Vec<String>,
    at: usize,
    sig: &'a Signature,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.at).map(|s| s.as_str())
    }

    fn eat(&mut self, w: &str) -> bool {
        if self.peek() == Some(w) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn is_entity(&self, t: &str) -> bool {
        self.sig.member(t, "location")
    }

    /// An object (or location) mention. Unknown words up to the next
    /// grammar word are reported as one unknown name.
    fn entity(&mut self, loc: bool) -> Result<String, ParseError> {
        let Some(t) = self.peek().map(str::to_string) else {
            return Err(ParseError::UnrecognizedQuery("expected an object".into()));
        };
        if self.is_entity(&t) && (loc || self.sig.member(&t, "object")) {
            self.at += 1;
            return Ok(t);
        }
        let mut name = Vec::new();
        while let Some(w) = self.peek() {
            if GRAMMAR_WORDS.contains(&w) || self.sig.schema(w).is_some() || w.chars().all(|c| c.is_ascii_digit()) {
                break;
            }
            name.push(w.to_string());
            self.at += 1;
        }
        if name.is_empty() {
            Err(ParseError::UnrecognizedQuery(format!("expected an object, found `{t}`")))
        } else {
            Err(ParseError::UnknownObject(name.join(" ")))
        }
    }

    fn robot(&self) -> Result<String, ParseError> {
        self.sig
            .constants_of("robot")
            .ok()
            .and_then(|s| s.into_iter().next())
            .ok_or_else(|| ParseError::UnrecognizedQuery("domain has no robot".into()))
    }

    fn action(&mut self) -> Result<Action, ParseError> {
        let r = self.robot()?;
        match self.peek() {
            Some("pickup") => {
                self.at += 1;
                let o = self.entity(false)?;
                Ok(Action::new("pickup", &[&r, &o]))
            }
            Some("putdown") => {
                self.at += 1;
                let o = self.entity(false)?;
                if !self.eat("on") {
                    return Err(ParseError::UnrecognizedQuery("expected `on <location>`".into()));
                }
                let l = self.entity(true)?;
                Ok(Action::new("putdown", &[&r, &o, &l]))
            }
            other => Err(ParseError::UnrecognizedQuery(format!("expected an action, found {other:?}"))),
        }
    }

    fn belief(&mut self) -> Result<Literal, ParseError> {
        if self.eat("hold") {
            let o = self.entity(false)?;
            return Ok(Literal::fluent("in_hand", &[&self.robot()?, &o], true));
        }
        let o = self.entity(false)?;
        if self.eat("have") {
            self.eat("small_base");
            return Ok(Literal::fluent("small_base", &[&o], true));
        }
        if !self.eat("be") {
            return Err(ParseError::UnrecognizedQuery("expected `was`".into()));
        }
        let positive = !self.eat("not");
        let rel = self.peek().map(str::to_string).unwrap_or_default();
        self.at += 1;
        Ok(match rel.as_str() {
            "on" | "below" | "above" | "front" => {
                let l = self.entity(true)?;
                Literal::fluent("obj_rel", &[&rel, &o, &l], positive)
            }
            "stable" => Literal::fluent("stable", &[&o], positive),
            "unstable" => Literal::fluent("stable", &[&o], !positive),
            "occluded" => Literal::fluent("occluded", &[&o], positive),
            "in_hand" => Literal::fluent("in_hand", &[&self.robot()?, &o], positive),
            _ => return Err(ParseError::UnrecognizedQuery(format!("unknown relation `{rel}`"))),
        })
    }

    fn number(&mut self) -> Option<usize> {
        let t = self.peek()?;
        let n = t.parse().ok().or_else(|| NUMBERS.iter().position(|w| *w == t))?;
        self.at += 1;
        Some(n)
    }

    fn step(&mut self) -> Result<Option<usize>, ParseError> {
        if self.eat("step") {
            return self.number().map(Some).ok_or_else(|| ParseError::UnrecognizedQuery("expected a step".into()));
        }
        if self.eat("first") || (self.eat("initial") && self.eat("state")) {
            return Ok(Some(0));
        }
        Ok(None)
    }
}

/// Classifies a question and resolves its object mentions.
///
/// The text is lowercased, stripped of punctuation, normalized with the
/// lemma map and then the synonym map (object names of the signature are
/// implicit synonyms), and matched against the grammars in [`GRAMMARS`].
pub fn parse_query(text: &str, vocab: &VocabTable, sig: &Signature) -> Result<Query, ParseError> {
    let mut phrases = vocab.synonyms.clone();
    if let Ok(cs) = sig.constants_of("location") {
        for c in cs {
            phrases.entry(bare(&c)).or_insert_with(|| c.clone());
        }
    }
    let toks: Vec<String> =
        tokens(&words(text, vocab), &phrases).into_iter().filter(|t| !FILLER.contains(&t.as_str())).collect();
    let unrecognized = || ParseError::UnrecognizedQuery(text.trim().to_string());
    let mut c = Cursor { toks, at: 0, sig };
    if c.toks.iter().any(|t| t == "describe") && c.toks.iter().any(|t| t == "plan") {
        return Ok(Query { kind: QueryKind::DescribePlan, action: None, belief: None, step: None });
    }
    if !c.eat("why") {
        return Err(unrecognized());
    }
    c.eat("do");
    let q = if c.eat("not") {
        let a = c.action()?;
        Query { kind: QueryKind::WhyNotAction, action: Some(a), belief: None, step: c.step()? }
    } else if c.eat("believe") {
        let b = c.belief()?;
        Query { kind: QueryKind::WhyBelief, action: None, belief: Some(b), step: c.step()? }
    } else {
        let a = c.action()?;
        Query { kind: QueryKind::WhyAction, action: Some(a), belief: None, step: c.step()? }
    };
    if c.at != c.toks.len() {
        return Err(unrecognized());
    }
    Ok(q)
}
