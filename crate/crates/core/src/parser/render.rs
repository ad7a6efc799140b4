use serde::{Deserialize, Serialize};

use super::query::QueryKind;
use super::vocab::{bare, VocabTable};
use super::ParseError;
use crate::kr::{Action, LitKind, Literal};

/// One unit of an answer, rendered to one clause (or, for plan
/// descriptions, one sentence).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clause {
    /// A literal that held.
    Lit(Literal),
    /// A later action the robot had to perform.
    Needed(Action),
    /// A performed action, in the past tense.
    Did(Action),
    /// A literal read from the observation at `step`.
    Observed { lit: Literal, step: usize },
    /// An action whose effect holds from `step` on.
    Happened { action: Action, step: usize },
    /// An object with no connection to the goal.
    Unrelated(String),
    /// The action served the goal directly.
    Direct(Action),
    /// A legal action the plan had no use for.
    Unneeded(Action),
    /// A literal assumed by default in the initial state.
    Assumed(Literal),
}

impl From<Literal> for Clause {
    fn from(l: Literal) -> Self {
        match Action::from_literal(&l) {
            Some(a) => Clause::Needed(a),
            None => Clause::Lit(l),
        }
    }
}

const STEP_WORDS: &[&str] =
    &["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve"];

fn step_word(s: usize) -> String {
    STEP_WORDS.get(s).map(|w| w.to_string()).unwrap_or_else(|| s.to_string())
}

/// "A", "A, and B", "A, B, and C".
pub fn join_clauses(cs: &[String]) -> String {
    match cs {
        [] => String::new(),
        [a] => a.clone(),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Renderer<'a> {
    vocab: &'a VocabTable,
    ctx: &'static str,
}

impl Renderer<'_> {
    fn template(&self, keys: &[String]) -> Result<&str, ParseError> {
        keys.iter()
            .find_map(|k| self.vocab.templates.get(k))
            .map(|s| s.as_str())
            .ok_or_else(|| ParseError::MissingTemplate(keys.first().cloned().unwrap_or_default()))
    }

    /// Candidate keys for `prefix.pred`, most specific first: with an
    /// argument value and the query context, with the value, with the
    /// context, bare.
    fn keys(&self, prefix: &str, pred: &str, args: &[String]) -> Vec<String> {
        let base = format!("{prefix}.{pred}");
        let mut ks = Vec::new();
        for a in args {
            ks.push(format!("{base}.{a}.{}", self.ctx));
            ks.push(format!("{base}.{a}"));
        }
        ks.push(format!("{base}.{}", self.ctx));
        ks.push(base);
        ks
    }

    fn fill(&self, t: &str, args: &[String], extra: &[(&str, String)]) -> String {
        let mut out = String::new();
        let mut rest = t;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let Some(close) = rest[open..].find('}') else { break };
            let slot = &rest[open + 1..open + close];
            let (name, form) = slot.split_once(':').unwrap_or((slot, ""));
            let val = if let Ok(i) = name.parse::<usize>() {
                args.get(i).map(|a| if form == "bare" { bare(a) } else { self.vocab.noun_phrase(a) })
            } else {
                extra.iter().find(|(k, _)| *k == name).map(|(_, v)| v.clone())
            };
            out.push_str(&val.unwrap_or_else(|| format!("{{{slot}}}")));
            rest = &rest[open + close + 1..];
        }
        out.push_str(rest);
        out
    }

    fn literal(&self, prefix: &str, l: &Literal) -> Result<String, ParseError> {
        let args: Vec<String> = l.args.iter().map(|t| t.name().to_string()).collect();
        let pred = if l.positive { l.pred.clone() } else { format!("-{}", l.pred) };
        let mut keys = self.keys(prefix, &pred, &args);
        keys.push(format!("{prefix}.any"));
        let t = self.template(&keys)?;
        Ok(self.fill(t, &args, &[("text", l.to_string())]))
    }

    fn action(&self, prefix: &str, a: &Action) -> Result<String, ParseError> {
        let t = self.template(&self.keys(prefix, &a.name, &[]))?;
        Ok(self.fill(t, &a.args, &[]))
    }

    fn clause(&self, c: &Clause, prev: Option<&Clause>) -> Result<String, ParseError> {
        let steps = |s: usize| [("step", s.to_string()), ("step_word", step_word(s))];
        Ok(match c {
            Clause::Lit(l) => {
                let text = self.literal("lit", l)?;
                match (prev, self.vocab.has_option("pronoun")) {
                    (Some(Clause::Needed(a)), true) => {
                        let np = a.object().map(|o| self.vocab.noun_phrase(o)).unwrap_or_default();
                        match text.strip_prefix(&np) {
                            Some(rest) if !np.is_empty() && rest.starts_with(' ') => format!("it{rest}"),
                            _ => text,
                        }
                    }
                    _ => text,
                }
            }
            Clause::Needed(a) => {
                let act = self.action("act", a)?;
                self.fill(self.template(&self.keys("clause", "needed", &[]))?, &[], &[("act", act)])
            }
            Clause::Did(a) => self.action("did", a)?,
            Clause::Observed { lit, step } => {
                let mut extra = steps(*step).to_vec();
                extra.push(("lit", self.literal("obs", lit)?));
                self.fill(self.template(&self.keys("clause", "observed", &[]))?, &[], &extra)
            }
            Clause::Happened { action, step } => {
                let mut extra = steps(*step).to_vec();
                extra.push(("did", self.action("did", action)?));
                self.fill(self.template(&self.keys("clause", "happened", &[]))?, &[], &extra)
            }
            Clause::Unrelated(o) => {
                self.fill(self.template(&self.keys("clause", "unrelated", &[]))?, std::slice::from_ref(o), &[])
            }
            Clause::Direct(a) | Clause::Unneeded(a) => {
                let which = if matches!(c, Clause::Direct(_)) { "direct" } else { "unneeded" };
                let act = self.action("act", a)?;
                self.fill(self.template(&self.keys("clause", which, &[]))?, &[], &[("act", act)])
            }
            Clause::Assumed(l) => {
                let lit = self.literal("obs", l)?;
                self.fill(self.template(&self.keys("clause", "assumed", &[]))?, &[], &[("lit", lit)])
            }
        })
    }
}

/// Renders answer clauses with the dialect's templates.
///
/// Plan descriptions are one sentence per action. Other answers join their
/// clauses with ", and" inside the `answer.<kind>` template. An empty answer
/// renders as `answer.empty_plan` or `answer.none`.
pub fn render_clauses(items: &[Clause], kind: QueryKind, vocab: &VocabTable) -> Result<String, ParseError> {
    let r = Renderer { vocab, ctx: kind.key() };
    if items.is_empty() {
        let key = if kind == QueryKind::DescribePlan { "answer.empty_plan" } else { "answer.none" };
        return r.template(&[key.to_string()]).map(str::to_string);
    }
    let texts = items
        .iter()
        .enumerate()
        .map(|(i, c)| r.clause(c, i.checked_sub(1).map(|j| &items[j])))
        .collect::<Result<Vec<_>, _>>()?;
    let key = format!("answer.{}", kind.key());
    let wrapper = r.template(std::slice::from_ref(&key))?;
    let body = if kind == QueryKind::DescribePlan {
        texts.iter().map(|t| format!("{}.", capitalize(t))).collect::<Vec<_>>().join(" ")
    } else {
        join_clauses(&texts)
    };
    Ok(capitalize(&r.fill(wrapper, &[], &[("clauses", body)])))
}

/// An action in the infinitive ("pick up the mug").
pub fn render_action(a: &Action, vocab: &VocabTable) -> Result<String, ParseError> {
    Renderer { vocab, ctx: "question" }.action("act", a)
}

/// A literal as a clause in the context of `kind`.
pub fn render_literal(l: &Literal, kind: QueryKind, vocab: &VocabTable) -> Result<String, ParseError> {
    Renderer { vocab, ctx: kind.key() }.literal("lit", l)
}

/// Renders a list of ground literals: action literals become "had to"
/// clauses (or past-tense sentences in a plan description), the rest become
/// literal clauses.
pub fn render(answer_literals: &[Literal], kind: QueryKind, vocab: &VocabTable) -> Result<String, ParseError> {
    let items: Vec<Clause> = answer_literals
        .iter()
        .map(|l| match (kind, Action::from_literal(l)) {
            (QueryKind::DescribePlan, Some(a)) => Clause::Did(a),
            _ if l.kind == LitKind::Action => Clause::from(l.clone()),
            _ => Clause::Lit(l.clone()),
        })
        .collect();
    render_clauses(&items, kind, vocab)
}
