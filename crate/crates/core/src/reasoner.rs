//! Transition semantics: constraint closure, executability, the successor
//! function, initial-state completion with default retraction, trajectory
//! construction, and minimal-length planning.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::{compl, GroundProgram, Lit, LitSet};
use crate::kr::{
    Action, Axiom, AxiomKind, BodyLit, DomainDescription, History, KrError, LitKind, Literal, Signature, State,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReasonError {
    #[error("inconsistent: {0} and its complement")]
    Inconsistent(Literal),
    #[error("{action} is not executable at step {step}")]
    NotExecutable { action: Action, step: usize, blockers: Vec<Blocker> },
    #[error("no plan within {0} steps")]
    NoPlanWithinHorizon(usize),
    #[error("literal {0} is outside the ground program")]
    UnknownLiteral(String),
    #[error(transparent)]
    Kr(#[from] KrError),
}

/// A firing executability condition and its satisfied body.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Blocker {
    pub axiom: String,
    pub body: Vec<BodyLit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub observed: Literal,
    pub predicted: Literal,
    pub step: usize,
}

/// Per-step beliefs over a horizon, with the actions that occurred and the
/// observations absorbed along the way.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BeliefTrajectory {
    pub states: Vec<State>,
    pub occurrences: Vec<(Action, usize)>,
    pub reality_violations: Vec<Violation>,
    pub observations: Vec<(Literal, usize)>,
    /// Default instances applied at step 0, with the default's id.
    pub applied_defaults: Vec<(Literal, String)>,
    pub retracted_defaults: BTreeSet<Literal>,
}

impl BeliefTrajectory {
    pub fn state(&self, i: usize) -> Option<&State> {
        self.states.get(i)
    }

    pub fn holds(&self, l: &Literal, i: usize) -> bool {
        self.states.get(i).is_some_and(|s| s.contains(l))
    }

    pub fn occurred(&self, a: &Action, i: usize) -> bool {
        self.occurrences.iter().any(|(x, s)| x == a && *s == i)
    }

    pub fn action_at(&self, i: usize) -> Option<&Action> {
        self.occurrences.iter().find(|(_, s)| *s == i).map(|(a, _)| a)
    }

    pub fn is_observed(&self, l: &Literal, i: usize) -> bool {
        self.observations.iter().any(|(o, s)| *s == i && o == l)
    }

    pub fn last_step(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    Optimal,
    SubOptimal,
    Incorrect,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanResult {
    pub plan: Vec<Action>,
    pub length: usize,
    pub defaults_retracted: usize,
    pub status: Option<PlanStatus>,
}

/// Minimal plans found by [`Reasoner::plan_set`]; `total` counts every
/// minimal plan even when enumeration stopped at the cap.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanSet {
    pub plans: Vec<PlanResult>,
    pub total: u64,
    pub expanded: usize,
}

/// Plans of every length up to a horizon, split by whether a second
/// model (the judge) also allows each of their actions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCounts {
    /// Index is plan length: (plans the judge allows, plans it rejects).
    pub by_length: Vec<(u64, u64)>,
    /// Distinct (step, state) nodes expanded.
    pub expanded: usize,
    /// Set when the search stopped at [`COUNT_CAP`]; counts are then lower
    /// bounds.
    pub truncated: bool,
}

/// Upper bound on nodes expanded by [`Reasoner::count_plans`].
pub const COUNT_CAP: usize = 100_000;

impl PlanCounts {
    pub fn total(&self) -> u64 {
        self.by_length.iter().map(|(a, b)| a.saturating_add(*b)).fold(0, u64::saturating_add)
    }

    pub fn shortest(&self) -> Option<usize> {
        self.by_length.iter().position(|(a, b)| a + b > 0)
    }
}

/// Upper bound on enumerated minimal plans.
pub const PLAN_CAP: usize = 10_000;
/// Upper bound on distinct states visited by one search.
pub const STATE_CAP: usize = 400_000;

/// Initial state, defaults applied (with their ids), and defaults retracted.
type InitialSet = (LitSet, Vec<(Literal, String)>, BTreeSet<Literal>);

/// The reasoner for one domain over a fixed set of constants.
#[derive(Clone, Debug)]
pub struct Reasoner {
    pub domain: DomainDescription,
    pub prog: GroundProgram,
}

impl Reasoner {
    pub fn new(domain: &DomainDescription) -> Result<Self, ReasonError> {
        Ok(Reasoner { domain: domain.clone(), prog: GroundProgram::new(domain)? })
    }

    pub fn signature(&self) -> &Signature {
        &self.domain.signature
    }

    pub fn encode(&self, lits: impl IntoIterator<Item = Literal>) -> Result<LitSet, ReasonError> {
        self.prog.to_set(lits).map_err(|l| ReasonError::UnknownLiteral(l.to_string()))
    }

    pub fn encode_state(&self, s: &State) -> Result<LitSet, ReasonError> {
        self.encode(s.lits.iter().cloned())
    }

    pub fn decode(&self, step: usize, s: &LitSet) -> State {
        State::new(step, self.prog.to_literals(s))
    }

    fn action_id(&self, a: &Action) -> Result<u32, ReasonError> {
        self.prog.action_id(a).ok_or_else(|| ReasonError::UnknownLiteral(a.to_string()))
    }

    fn inconsistent(&self, atom: u32) -> ReasonError {
        ReasonError::Inconsistent(self.prog.atoms[atom as usize].clone())
    }

    /// Least fixpoint of the state constraints over `lits`.
    pub fn closure(&self, lits: impl IntoIterator<Item = Literal>) -> Result<State, ReasonError> {
        let mut s = self.encode(lits)?;
        self.prog.close(&mut s);
        if let Some(&a) = s.clashes().first() {
            return Err(self.inconsistent(a));
        }
        Ok(self.decode(0, &s))
    }

    fn blockers_of(&self, a: u32, s: &LitSet) -> Vec<Blocker> {
        let mut out: Vec<Blocker> = self
            .prog
            .blockers(a, s)
            .map(|r| Blocker {
                axiom: self.prog.axioms[r.axiom as usize].id.clone(),
                body: r
                    .pos
                    .iter()
                    .map(|&l| BodyLit::pos(self.prog.literal(l)))
                    .chain(r.naf.iter().map(|&l| BodyLit::not(self.prog.literal(l))))
                    .collect(),
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Executability of `action` in `state`, with every firing condition.
    pub fn legal(&self, action: &Action, state: &State) -> Result<(bool, Vec<Blocker>), ReasonError> {
        let a = self.action_id(action)?;
        let s = self.encode_state(state)?;
        let b = self.blockers_of(a, &s);
        Ok((b.is_empty(), b))
    }

    /// Successor state under `action`.
    pub fn step(&self, state: &State, action: &Action) -> Result<State, ReasonError> {
        let a = self.action_id(action)?;
        let s = self.encode_state(state)?;
        match self.prog.step(&s, a) {
            Ok(Some(t)) => Ok(self.decode(state.step + 1, &t)),
            Ok(None) => Err(ReasonError::NotExecutable {
                action: action.clone(),
                step: state.step,
                blockers: self.blockers_of(a, &s),
            }),
            Err(atom) => Err(self.inconsistent(atom)),
        }
    }

    /// Ground actions executable in `state`, in lexicographic order.
    pub fn legal_actions(&self, state: &State) -> Result<Vec<Action>, ReasonError> {
        let s = self.encode_state(state)?;
        Ok((0..self.prog.actions.len() as u32)
            .filter(|&a| self.prog.is_legal(a, &s))
            .map(|a| self.prog.actions[a as usize].clone())
            .collect())
    }

    /// Closes `observed` into `prev`: observations act like direct effects,
    /// inertial literals of `prev` persist unless contradicted.
    pub fn absorb(&self, prev: &State, observed: &[Literal]) -> Result<State, ReasonError> {
        let e = self.encode(observed.iter().cloned())?;
        if let Some(&a) = e.clashes().first() {
            return Err(self.inconsistent(a));
        }
        let p = self.encode_state(prev)?;
        self.prog.settle(&e, &p).map(|t| self.decode(prev.step, &t)).map_err(|a| self.inconsistent(a))
    }

    fn initial_set(&self, obs: &[Literal], defaults: Option<&[Axiom]>) -> Result<InitialSet, ReasonError> {
        let mut cur = self.encode(obs.iter().cloned())?;
        self.prog.close(&mut cur);
        if let Some(&a) = cur.clashes().first() {
            return Err(self.inconsistent(a));
        }
        let mut applied = Vec::new();
        let mut retracted = BTreeSet::new();
        let ids: Option<BTreeSet<&str>> = defaults.map(|ds| ds.iter().map(|d| d.id.as_str()).collect());
        for r in &self.prog.defaults {
            let id = &self.prog.default_axioms[r.axiom as usize].id;
            if ids.as_ref().is_some_and(|ids| !ids.contains(id.as_str())) {
                continue;
            }
            if !r.holds(&cur) || cur.has(r.head) {
                continue;
            }
            let head = self.prog.literal(r.head);
            if cur.has(compl(r.head)) {
                retracted.insert(head);
                continue;
            }
            let mut next = cur.clone();
            next.insert(r.head);
            self.prog.close(&mut next);
            if next.clashes().is_empty() {
                cur = next;
                applied.push((head, id.clone()));
            } else {
                retracted.insert(head);
            }
        }
        Ok((cur, applied, retracted))
    }

    /// Step-0 beliefs: closed observations plus every default instance that
    /// does not clash with them.
    pub fn initial_state(&self, history: &History) -> Result<State, ReasonError> {
        let obs: Vec<Literal> = history.observed_at(0).cloned().collect();
        let defaults = (!history.defaults.is_empty()).then_some(history.defaults.as_slice());
        let (s, _, _) = self.initial_set(&obs, defaults)?;
        Ok(self.decode(0, &s))
    }

    /// Folds the history's actions over the initial state, absorbing the
    /// observations of each step.
    pub fn trajectory(&self, history: &History) -> Result<BeliefTrajectory, ReasonError> {
        let obs0: Vec<Literal> = history.observed_at(0).cloned().collect();
        let defaults = (!history.defaults.is_empty()).then_some(history.defaults.as_slice());
        let (s0, applied, retracted) = self.initial_set(&obs0, defaults)?;
        let last_obs = history.observations.iter().map(|(_, s)| *s).max().unwrap_or(0);
        let last_act = history.happened.iter().map(|(_, s)| s + 1).max().unwrap_or(0);
        let horizon = last_obs.max(last_act);

        let mut t = BeliefTrajectory {
            states: Vec::with_capacity(horizon + 1),
            occurrences: history.happened.clone(),
            reality_violations: Vec::new(),
            observations: history.observations.clone(),
            applied_defaults: applied,
            retracted_defaults: retracted,
        };
        let mut cur = s0;
        for i in 0..=horizon {
            if i > 0 {
                let obs: Vec<Literal> = history.observed_at(i).cloned().collect();
                if !obs.is_empty() {
                    let e = self.encode(obs.iter().cloned())?;
                    for l in e.iter() {
                        if cur.has(compl(l)) {
                            t.reality_violations.push(Violation {
                                observed: self.prog.literal(l),
                                predicted: self.prog.literal(compl(l)),
                                step: i,
                            });
                        }
                    }
                    cur = self.prog.settle(&e, &cur).map_err(|a| self.inconsistent(a))?;
                }
            }
            t.states.push(self.decode(i, &cur));
            if let Some((a, _)) = history.happened.iter().find(|(_, s)| *s == i) {
                let id = self.action_id(a)?;
                cur = match self.prog.step(&cur, id) {
                    Ok(Some(n)) => n,
                    Ok(None) => {
                        return Err(ReasonError::NotExecutable {
                            action: a.clone(),
                            step: i,
                            blockers: self.blockers_of(id, &cur),
                        })
                    }
                    Err(atom) => return Err(self.inconsistent(atom)),
                };
            } else if i < horizon {
                let e = self.prog.empty_set();
                cur = self.prog.settle(&e, &cur).map_err(|a| self.inconsistent(a))?;
            }
        }
        Ok(t)
    }

    /// Every minimal plan (up to [`PLAN_CAP`]) in lexicographic order.
    pub fn plan(&self, initial: &State, goal: &[Literal], max_steps: usize) -> Result<Vec<PlanResult>, ReasonError> {
        self.plan_set(initial, goal, max_steps).map(|p| p.plans)
    }

    /// Breadth-first search by layers; the layered predecessor graph is then
    /// walked forward in action order so the first plan is the
    /// lexicographically least.
    pub fn plan_set(&self, initial: &State, goal: &[Literal], max_steps: usize) -> Result<PlanSet, ReasonError> {
        let init = self.encode_state(initial)?;
        let goal_ids: Vec<Lit> = goal
            .iter()
            .map(|g| self.prog.lit_id(g).ok_or_else(|| ReasonError::UnknownLiteral(g.to_string())))
            .collect::<Result<_, _>>()?;
        let is_goal = |s: &LitSet| goal_ids.iter().all(|&g| s.has(g));
        // the search does not see the history; callers fill in retractions
        let retracted = 0;
        if is_goal(&init) {
            return Ok(PlanSet {
                plans: vec![PlanResult { plan: Vec::new(), length: 0, defaults_retracted: retracted, status: None }],
                total: 1,
                expanded: 1,
            });
        }
        let mut states: Vec<LitSet> = vec![init.clone()];
        let mut depth: Vec<usize> = vec![0];
        let mut index: HashMap<LitSet, u32> = HashMap::new();
        index.insert(init, 0);
        // edges into each state from the previous layer
        let mut preds: Vec<Vec<(u32, u32)>> = vec![Vec::new()];
        let mut layer: Vec<u32> = vec![0];
        let n_actions = self.prog.actions.len() as u32;
        for k in 1..=max_steps {
            let mut next = Vec::new();
            for &sid in &layer {
                for a in 0..n_actions {
                    let succ = match self.prog.step(&states[sid as usize], a) {
                        Ok(Some(t)) => t,
                        _ => continue,
                    };
                    match index.get(&succ) {
                        Some(&t) => {
                            if depth[t as usize] == k {
                                preds[t as usize].push((sid, a));
                            }
                        }
                        None => {
                            let t = states.len() as u32;
                            index.insert(succ.clone(), t);
                            states.push(succ);
                            depth.push(k);
                            preds.push(vec![(sid, a)]);
                            next.push(t);
                        }
                    }
                }
            }
            let goals: Vec<u32> = next.iter().copied().filter(|&t| is_goal(&states[t as usize])).collect();
            if !goals.is_empty() {
                return Ok(self.collect_plans(&states, &preds, &goals, k, retracted));
            }
            if next.is_empty() || states.len() > STATE_CAP {
                break;
            }
            layer = next;
        }
        Err(ReasonError::NoPlanWithinHorizon(max_steps))
    }

    /// Counts action sequences of length at most `horizon` that reach the
    /// goal for the first time at their last step. An action counts as
    /// allowed by `judge` when it is legal in the judge's model of the same
    /// state; a plan is allowed when all of its actions are.
    pub fn count_plans(
        &self,
        initial: &State,
        goal: &[Literal],
        horizon: usize,
        judge: &Reasoner,
    ) -> Result<PlanCounts, ReasonError> {
        let init = self.encode_state(initial)?;
        let goal_ids: Vec<Lit> = goal
            .iter()
            .map(|g| self.prog.lit_id(g).ok_or_else(|| ReasonError::UnknownLiteral(g.to_string())))
            .collect::<Result<_, _>>()?;
        let is_goal = |s: &LitSet| goal_ids.iter().all(|&g| s.has(g));
        let mut counts = PlanCounts { by_length: vec![(0, 0); horizon + 1], expanded: 0, truncated: false };
        if is_goal(&init) {
            counts.by_length[0].0 = 1;
            return Ok(counts);
        }
        let n_actions = self.prog.actions.len() as u32;
        // same ground atoms and actions: the judge can read our encoding
        let shared = judge.prog.atoms == self.prog.atoms && judge.prog.actions == self.prog.actions;
        let mut judged: HashMap<LitSet, Vec<bool>> = HashMap::new();
        // layers keep first-reached order so a truncated count is reproducible
        let mut layer: Vec<(LitSet, (u64, u64))> = vec![(init, (1, 0))];
        for k in 1..=horizon {
            let mut next: Vec<(LitSet, (u64, u64))> = Vec::new();
            let mut at: HashMap<LitSet, usize> = HashMap::new();
            for (s, (ok, bad)) in &layer {
                if counts.expanded >= COUNT_CAP {
                    counts.truncated = true;
                    return Ok(counts);
                }
                counts.expanded += 1;
                if !judged.contains_key(s) {
                    let v = if shared {
                        (0..n_actions).map(|a| judge.prog.is_legal(a, s)).collect()
                    } else {
                        let allowed: BTreeSet<Action> = judge.legal_actions(&self.decode(0, s))?.into_iter().collect();
                        self.prog.actions.iter().map(|a| allowed.contains(a)).collect()
                    };
                    judged.insert(s.clone(), v);
                }
                let allowed = &judged[s];
                for a in 0..n_actions {
                    let t = match self.prog.step(s, a) {
                        Ok(Some(t)) => t,
                        _ => continue,
                    };
                    let (add_ok, add_bad) =
                        if allowed[a as usize] { (*ok, *bad) } else { (0, ok.saturating_add(*bad)) };
                    if is_goal(&t) {
                        let e = &mut counts.by_length[k];
                        e.0 = e.0.saturating_add(add_ok);
                        e.1 = e.1.saturating_add(add_bad);
                    } else if k < horizon {
                        let i = *at.entry(t.clone()).or_insert_with(|| {
                            next.push((t, (0, 0)));
                            next.len() - 1
                        });
                        let e = &mut next[i].1;
                        e.0 = e.0.saturating_add(add_ok);
                        e.1 = e.1.saturating_add(add_bad);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        Ok(counts)
    }

    fn collect_plans(
        &self,
        states: &[LitSet],
        preds: &[Vec<(u32, u32)>],
        goals: &[u32],
        k: usize,
        retracted: usize,
    ) -> PlanSet {
        // forward edges restricted to states that reach a goal
        let mut succ: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
        let mut paths: HashMap<u32, u64> = HashMap::new();
        let mut frontier: Vec<u32> = goals.to_vec();
        for &g in goals {
            paths.insert(g, 1);
        }
        for _ in 0..k {
            let mut prev: BTreeSet<u32> = BTreeSet::new();
            for &t in &frontier {
                let n = paths[&t];
                for &(s, a) in &preds[t as usize] {
                    succ.entry(s).or_default().push((a, t));
                    *paths.entry(s).or_insert(0) += n;
                    prev.insert(s);
                }
            }
            frontier = prev.into_iter().collect();
        }
        let total = paths.get(&0).copied().unwrap_or(0);
        for v in succ.values_mut() {
            v.sort();
        }
        let mut plans = Vec::new();
        let mut stack: Vec<Action> = Vec::new();
        fn walk(
            s: u32,
            goals: &[u32],
            succ: &HashMap<u32, Vec<(u32, u32)>>,
            prog: &GroundProgram,
            stack: &mut Vec<Action>,
            out: &mut Vec<Vec<Action>>,
        ) {
            if out.len() >= PLAN_CAP {
                return;
            }
            if goals.contains(&s) && !succ.contains_key(&s) {
                out.push(stack.clone());
                return;
            }
            if let Some(es) = succ.get(&s) {
                for &(a, t) in es {
                    stack.push(prog.actions[a as usize].clone());
                    walk(t, goals, succ, prog, stack, out);
                    stack.pop();
                }
            }
        }
        walk(0, goals, &succ, &self.prog, &mut stack, &mut plans);
        let _ = states;
        PlanSet {
            plans: plans
                .into_iter()
                .map(|p| PlanResult { length: p.len(), plan: p, defaults_retracted: retracted, status: None })
                .collect(),
            total,
            expanded: preds.len(),
        }
    }

    /// Ids of axioms with a ground instance that fires in `state` (for
    /// causal laws: under `action`).
    pub fn firing(&self, state: &State, action: Option<&Action>) -> Result<BTreeSet<String>, ReasonError> {
        let s = self.encode_state(state)?;
        let mut ix: BTreeSet<u32> = BTreeSet::new();
        for r in &self.prog.constraints {
            if r.holds(&s) {
                ix.insert(r.axiom);
            }
        }
        for rules in &self.prog.exec {
            for r in rules {
                if r.holds(&s) {
                    ix.insert(r.axiom);
                }
            }
        }
        if let Some(a) = action {
            let a = self.action_id(a)?;
            for r in &self.prog.causal[a as usize] {
                if r.holds(&s) {
                    ix.insert(r.axiom);
                }
            }
        }
        Ok(ix.into_iter().map(|i| self.prog.axioms[i as usize].id.clone()).collect())
    }

    /// Defaults rules as stored in the ground program, for inspection.
    pub fn default_instances(&self) -> Vec<Literal> {
        self.prog.defaults.iter().map(|r| self.prog.literal(r.head)).collect()
    }

    pub fn is_inertial(&self, l: &Literal) -> bool {
        self.prog.lit_id(l).is_some_and(|id| self.prog.is_inertial_lit(id))
    }
}

/// Closure of `literals` under `constraints` over the signature's constants.
pub fn closure(
    sig: &Signature,
    literals: impl IntoIterator<Item = Literal>,
    constraints: &[Axiom],
) -> Result<State, ReasonError> {
    let d = DomainDescription {
        signature: sig.clone(),
        axioms: constraints.iter().filter(|a| a.kind == AxiomKind::StateConstraint).cloned().collect(),
        defaults: Vec::new(),
    };
    Reasoner::new(&d)?.closure(literals)
}

impl fmt::Display for PlanResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.plan.is_empty() {
            return f.write_str("empty plan");
        }
        for (i, a) in self.plan.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "occurs({a}, {i})")?;
        }
        Ok(())
    }
}

/// Positive static literals of a state.
pub fn statics(state: &State) -> impl Iterator<Item = &Literal> {
    state.lits.iter().filter(|l| l.kind == LitKind::Static)
}
