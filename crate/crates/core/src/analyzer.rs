//! Answers to explanatory questions about a plan and its execution, mined
//! from the belief trajectory, the axioms, and proof trees.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kr::{unify, Action, AxiomKind, DomainDescription, History, LitKind, Literal};
use crate::parser::{render_clauses, Clause, ParseError, Query, QueryKind, VocabTable};
use crate::reasoner::{BeliefTrajectory, ReasonError, Reasoner};
use crate::tracer::{body_support, trace, Justification, ProofNode, TraceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzeError {
    #[error("{action} did not occur at step {step}")]
    NotInPlan { action: Action, step: usize },
    #[error("{action} was executed at step {step}")]
    ActionWasExecuted { action: Action, step: usize },
    #[error("{belief} was not believed at step {step}")]
    UnknownBelief { belief: Literal, step: usize },
    #[error("{0:?} query without its action or belief")]
    Incomplete(QueryKind),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Render(#[from] ParseError),
    #[error(transparent)]
    Reason(#[from] ReasonError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub kind: QueryKind,
    /// Relevant ground literals with the step each held at, in answer order.
    pub literals: Vec<(Literal, usize)>,
    pub axioms_used: Vec<String>,
    pub clauses: Vec<Clause>,
    pub text: String,
}

/// Question answering over one execution: the knowledge used, the belief
/// trajectory, the goal, and the vocabulary dialect for rendering.
pub struct Analyzer<'a> {
    pub domain: &'a DomainDescription,
    pub traj: &'a BeliefTrajectory,
    pub goal: &'a [Literal],
    pub vocab: &'a VocabTable,
}

fn finish(
    kind: QueryKind,
    clauses: Vec<Clause>,
    literals: Vec<(Literal, usize)>,
    axioms_used: Vec<String>,
    vocab: &VocabTable,
) -> Result<Answer, AnalyzeError> {
    let text = render_clauses(&clauses, kind, vocab)?;
    Ok(Answer { kind, literals, axioms_used, clauses, text })
}

fn push_unique(v: &mut Vec<String>, id: &str) {
    if !v.iter().any(|x| x == id) {
        v.push(id.to_string());
    }
}

impl<'a> Analyzer<'a> {
    pub fn new(
        domain: &'a DomainDescription,
        traj: &'a BeliefTrajectory,
        goal: &'a [Literal],
        vocab: &'a VocabTable,
    ) -> Self {
        Analyzer { domain, traj, goal, vocab }
    }

    fn occurrences(&self) -> Vec<(Action, usize)> {
        let mut occ = self.traj.occurrences.clone();
        occ.sort_by_key(|(_, s)| *s);
        occ
    }

    pub fn describe_plan(&self) -> Result<Answer, AnalyzeError> {
        let occ = self.occurrences();
        let lits = occ.iter().map(|(a, s)| (a.to_literal(), *s)).collect();
        let clauses = occ.into_iter().map(|(a, _)| Clause::Did(a)).collect();
        finish(QueryKind::DescribePlan, clauses, lits, Vec::new(), self.vocab)
    }

    /// Ground bodies of the executability conditions of `action` that held
    /// at `step`, by axiom id.
    fn firing(&self, action: &Action, step: usize) -> Vec<(String, Vec<(Literal, bool)>)> {
        let neg = action.to_literal().complement();
        let mut out = Vec::new();
        let mut conds: Vec<_> = self.domain.of_kind(AxiomKind::ExecutabilityCondition).collect();
        conds.sort_by(|a, b| a.id.cmp(&b.id));
        for ax in conds {
            let Some(b) = unify(&ax.head, &neg) else { continue };
            for g in body_support(self.domain, self.traj, ax, b, step) {
                let body = ax.body.iter().filter(|x| !x.lit.is_builtin()).map(|x| (x.lit.apply(&g), x.naf)).collect();
                out.push((ax.id.clone(), body));
            }
        }
        out
    }

    /// Why `action` was executed at `step`: for each later action, the
    /// conditions that would have blocked it at `step` and stopped holding
    /// right after.
    pub fn why_action(&self, action: &Action, step: usize) -> Result<Answer, AnalyzeError> {
        if !self.traj.occurred(action, step) {
            return Err(AnalyzeError::NotInPlan { action: action.clone(), step });
        }
        let mut clauses = Vec::new();
        let mut lits = Vec::new();
        let mut used = Vec::new();
        for (later, j) in self.occurrences().into_iter().filter(|(_, j)| *j > step) {
            for (id, body) in self.firing(&later, step) {
                for (l, naf) in body {
                    if naf || l.kind == LitKind::Action {
                        continue;
                    }
                    if self.traj.holds(&l, step) && !self.traj.holds(&l, step + 1) {
                        clauses.push(Clause::Needed(later.clone()));
                        clauses.push(Clause::Lit(l.clone()));
                        lits.push((later.to_literal(), j));
                        lits.push((l, step));
                        push_unique(&mut used, &id);
                    }
                }
            }
        }
        if clauses.is_empty() {
            clauses.push(Clause::Direct(action.clone()));
            lits.push((action.to_literal(), step));
        }
        finish(QueryKind::WhyAction, clauses, lits, used, self.vocab)
    }

    /// The step a why-not question without one refers to: where the same
    /// kind of action on the same object was done instead, else where the
    /// object was handled, else the start.
    pub fn resolve_why_not_step(&self, action: &Action) -> usize {
        let occ = self.occurrences();
        let obj = action.object();
        occ.iter()
            .find(|(a, _)| a.name == action.name && a.object() == obj)
            .or_else(|| occ.iter().find(|(a, _)| a.args.iter().skip(1).any(|x| Some(x.as_str()) == obj)))
            .map(|(_, s)| *s)
            .unwrap_or(0)
    }

    /// Follows state constraints with a single condition down to the
    /// literal they rest on.
    fn ground_reason(&self, l: &Literal, step: usize) -> Result<(ProofNode, Vec<String>), AnalyzeError> {
        let tree = trace(self.domain, self.traj, l, step)?;
        let mut node = tree.root;
        let mut used = Vec::new();
        loop {
            let next = match node.branches.first() {
                Some(b) if b.children.len() == 1 => match &b.just {
                    Justification::Axiom { id, .. }
                        if self.domain.axiom(id).is_some_and(|a| a.kind == AxiomKind::StateConstraint) =>
                    {
                        push_unique(&mut used, id);
                        b.children[0].clone()
                    }
                    _ => break,
                },
                _ => break,
            };
            node = next;
        }
        Ok((node, used))
    }

    /// Why `action` was not executed: the executability conditions that
    /// held at the step (those mentioning the action's objects when any
    /// do), or else whether the object mattered to the goal at all.
    pub fn why_not_action(&self, action: &Action, step: Option<usize>) -> Result<Answer, AnalyzeError> {
        let step = step.unwrap_or_else(|| self.resolve_why_not_step(action));
        if self.traj.occurred(action, step) {
            return Err(AnalyzeError::ActionWasExecuted { action: action.clone(), step });
        }
        let objects: Vec<&str> = action.args.iter().skip(1).map(|s| s.as_str()).collect();
        let firing = self.firing(action, step);
        let mentions = |body: &[(Literal, bool)]| body.iter().any(|(l, _)| l.constants().any(|c| objects.contains(&c)));
        let relevant: Vec<_> = if firing.iter().any(|(_, b)| mentions(b)) {
            firing.into_iter().filter(|(_, b)| mentions(b)).collect()
        } else {
            firing
        };
        let mut clauses = Vec::new();
        let mut lits = Vec::new();
        let mut used = Vec::new();
        for (id, body) in relevant {
            push_unique(&mut used, &id);
            for (l, naf) in body {
                if naf {
                    let n = l.complement();
                    clauses.push(Clause::Lit(n.clone()));
                    lits.push((n, step));
                    continue;
                }
                let (node, via) = self.ground_reason(&l, step)?;
                for v in via {
                    push_unique(&mut used, &v);
                }
                let observed = node.belief.kind == LitKind::Fluent;
                match node.branches.first().map(|b| &b.just) {
                    Some(Justification::Observed(j)) if observed => {
                        clauses.push(Clause::Observed { lit: node.belief.clone(), step: *j });
                        lits.push((node.belief, *j));
                    }
                    _ => {
                        clauses.push(Clause::Lit(node.belief.clone()));
                        lits.push((node.belief, node.step));
                    }
                }
            }
        }
        if clauses.is_empty() {
            let mentioned = |o: &str| {
                self.traj.occurrences.iter().any(|(a, _)| a.args.iter().any(|x| x == o))
                    || self.goal.iter().any(|g| g.constants().any(|c| c == o))
            };
            match objects.iter().find(|o| **o != "table" && !mentioned(o)) {
                Some(o) => clauses.push(Clause::Unrelated(o.to_string())),
                None => {
                    clauses.push(Clause::Unneeded(action.clone()));
                    lits.push((action.to_literal().complement(), step));
                }
            }
        }
        finish(QueryKind::WhyNotAction, clauses, lits, used, self.vocab)
    }

    /// Step a belief question without one refers to: the last step the
    /// belief held.
    pub fn resolve_belief_step(&self, belief: &Literal) -> Option<usize> {
        (0..=self.traj.last_step()).rev().find(|&i| self.traj.holds(belief, i))
    }

    /// Why `belief` was held at `step`: the first proof path, followed
    /// through single supports down to an observation, an action, or the
    /// conditions of the axiom that derived it.
    pub fn why_belief(&self, belief: &Literal, step: Option<usize>) -> Result<Answer, AnalyzeError> {
        let unknown = |step| AnalyzeError::UnknownBelief { belief: belief.clone(), step };
        let step = match step {
            Some(s) => s,
            None => self.resolve_belief_step(belief).ok_or_else(|| unknown(self.traj.last_step()))?,
        };
        if step > self.traj.last_step() {
            return Err(TraceError::StepOutOfRange { step, last: self.traj.last_step() }.into());
        }
        if !self.traj.holds(belief, step) {
            return Err(unknown(step));
        }
        let tree = trace(self.domain, self.traj, belief, step)?;
        let mut node = &tree.root;
        let mut used = Vec::new();
        let mut clauses = Vec::new();
        let mut lits = Vec::new();
        while let Some(b) = node.branches.first() {
            match &b.just {
                Justification::Observed(j) => {
                    clauses.push(Clause::Observed { lit: belief.clone(), step: *j });
                    lits.push((node.belief.clone(), *j));
                    break;
                }
                Justification::Happened(j) => {
                    if let Some(a) = Action::from_literal(&node.belief) {
                        clauses.push(Clause::Happened { action: a, step: j + 1 });
                        lits.push((node.belief.clone(), *j));
                    }
                    break;
                }
                Justification::Default(id) => {
                    push_unique(&mut used, id);
                    clauses.push(Clause::Assumed(node.belief.clone()));
                    lits.push((node.belief.clone(), node.step));
                    break;
                }
                Justification::Absent | Justification::Unsupported => break,
                Justification::Inertia { .. } => node = &b.children[0],
                Justification::Axiom { id, .. } => {
                    push_unique(&mut used, id);
                    if b.children.len() == 1 {
                        node = &b.children[0];
                        continue;
                    }
                    for c in &b.children {
                        match (Action::from_literal(&c.belief), c.branches.first().map(|x| &x.just)) {
                            (Some(a), _) => clauses.push(Clause::Happened { action: a, step: c.step + 1 }),
                            (None, Some(Justification::Absent)) => clauses.push(Clause::Lit(c.belief.complement())),
                            _ => clauses.push(Clause::Lit(c.belief.clone())),
                        }
                        lits.push((c.belief.clone(), c.step));
                    }
                    break;
                }
            }
        }
        finish(QueryKind::WhyBelief, clauses, lits, used, self.vocab)
    }

    pub fn answer(&self, q: &Query) -> Result<Answer, AnalyzeError> {
        let missing = || AnalyzeError::Incomplete(q.kind);
        match q.kind {
            QueryKind::DescribePlan => self.describe_plan(),
            QueryKind::WhyAction => {
                let a = q.action.as_ref().ok_or_else(missing)?;
                let step = match q.step {
                    Some(s) => s,
                    None => self
                        .occurrences()
                        .into_iter()
                        .find(|(x, _)| x == a)
                        .map(|(_, s)| s)
                        .ok_or_else(|| AnalyzeError::NotInPlan { action: a.clone(), step: 0 })?,
                };
                self.why_action(a, step)
            }
            QueryKind::WhyNotAction => self.why_not_action(q.action.as_ref().ok_or_else(missing)?, q.step),
            QueryKind::WhyBelief => self.why_belief(q.belief.as_ref().ok_or_else(missing)?, q.step),
        }
    }
}

/// Answers `q` with the complete knowledge base `full`: the trajectory is
/// recomputed from the same history before the same procedures run.
pub fn oracle_answer(
    q: &Query,
    full: &DomainDescription,
    history: &History,
    goal: &[Literal],
    vocab: &VocabTable,
) -> Result<Answer, AnalyzeError> {
    let traj = Reasoner::new(full)?.trajectory(history)?;
    Analyzer::new(full, &traj, goal, vocab).answer(q)
}

/// `Q:`/`A:` transcript lines.
pub fn transcript<'s>(pairs: impl IntoIterator<Item = (&'s str, &'s str)>) -> String {
    let mut s = String::new();
    for (q, a) in pairs {
        let _ = writeln!(s, "Q: {q}");
        let _ = writeln!(s, "A: {a}");
    }
    s
}

/// Parses a transcript back into (question, answer) pairs.
pub fn parse_transcript(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut q: Option<String> = None;
    for line in text.lines() {
        if let Some(x) = line.strip_prefix("Q: ") {
            q = Some(x.to_string());
        } else if let (Some(x), Some(qq)) = (line.strip_prefix("A: "), q.take()) {
            out.push((qq, x.to_string()));
        }
    }
    out
}

#[cfg(test)]
mod tests;
