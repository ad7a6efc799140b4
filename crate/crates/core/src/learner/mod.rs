//! Learning missing causal laws and executability conditions from
//! mismatches between predicted and observed action outcomes.
//!
//! The pipeline: detect a discrepancy, simulate the action in many random
//! scenes to collect lifted samples, induce a decision tree, turn pure and
//! well-supported branches into candidate axioms, validate them on held-out
//! samples, keep those found in enough cycles, and merge away
//! over-specifications.

mod merge;
mod run;
pub(crate) mod tree;

pub use merge::{alpha_match, canonical_key, confidence, covers, decay_strengths, validate_and_merge, Ensemble};
pub use run::{learn_constraints, learn_for, run_learning, ConstraintExample, LearningRun};
pub use tree::{extract_candidates, induce_tree, DecisionTree, Node};

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kr::{Action, Axiom, Bindings, DomainDescription, LitKind, Literal, Signature, State, Term};
use crate::reasoner::{ReasonError, Reasoner};
use crate::world::{gen_profile_scene, NoiseModel, Outcome, Profile, World, WorldError};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("could not collect {wanted} samples (got {got})")]
    WorldExhausted { wanted: usize, got: usize },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Reason(#[from] ReasonError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub purity_min: f64,
    pub support_min: usize,
    pub validation_min: f64,
    pub cycles_required: usize,
    pub cycles_total: usize,
    pub lambda: f64,
    pub prune_threshold: f64,
    pub depth_max: usize,
    pub n_samples: usize,
    pub holdout: f64,
    pub tree_cap: usize,
    pub quiescence: usize,
    /// Hard stop on executed actions per run.
    pub max_actions: usize,
    /// Sort whose constants are lifted to variables.
    pub lift_sort: String,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            purity_min: 0.95,
            support_min: 5,
            validation_min: 0.9,
            cycles_required: 3,
            cycles_total: 5,
            lambda: 0.9,
            prune_threshold: 0.5,
            depth_max: 4,
            n_samples: 100,
            holdout: 0.3,
            tree_cap: 25,
            quiescence: 50,
            max_actions: 600,
            lift_sort: "object".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    Exec,
    Causal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiscrepancyKind {
    MissingExecutability,
    MissingCausalLaw,
}

/// Evidence for missing knowledge after executing an action in `before`.
///
/// Expected changes (`expected \ before`) that were not observed point to a
/// missing executability condition; a negative literal only counts as
/// unobserved when its complement was seen. Observed changes
/// (`observed \ before`) that were not expected point to a missing causal
/// law. Only inertial fluent literals count, since everything else is
/// recomputed each step.
pub fn classify_discrepancy(
    before: &State,
    expected: &State,
    observed: &State,
    inertial: impl Fn(&Literal) -> bool,
) -> Vec<(DiscrepancyKind, Literal)> {
    let mut out = Vec::new();
    for l in expected.fluents() {
        // a negative literal counts as unobserved only when its complement was seen
        let missing = !observed.contains(l) && (l.positive || observed.contains(&l.complement()));
        if inertial(l) && !before.contains(l) && missing {
            out.push((DiscrepancyKind::MissingExecutability, l.clone()));
        }
    }
    for l in observed.fluents() {
        if inertial(l) && !before.contains(l) && !expected.contains(l) {
            out.push((DiscrepancyKind::MissingCausalLaw, l.clone()));
        }
    }
    out
}

/// Variable naming for one action instance: robot arguments become `R1..`,
/// the others `O1..`, by position.
#[derive(Clone, Debug, PartialEq)]
pub struct Lifting {
    pub action: Literal,
    pub bindings: Bindings,
    inverse: BTreeMap<String, String>,
}

impl Lifting {
    pub fn new(sig: &Signature, a: &Action) -> Self {
        let schema = sig.actions.iter().find(|s| s.name == a.name);
        let mut inverse: BTreeMap<String, String> = BTreeMap::new();
        let mut bindings = Bindings::new();
        let (mut r, mut o) = (0, 0);
        let mut args = Vec::new();
        for (i, c) in a.args.iter().enumerate() {
            let var = match inverse.get(c) {
                Some(v) => v.clone(),
                None => {
                    let robot = schema.is_some_and(|s| s.args.get(i).is_some_and(|x| x == "robot"));
                    let v = if robot {
                        r += 1;
                        format!("R{r}")
                    } else {
                        o += 1;
                        format!("O{o}")
                    };
                    inverse.insert(c.clone(), v.clone());
                    bindings.insert(v.clone(), c.clone());
                    v
                }
            };
            args.push(Term::v(&var));
        }
        Lifting { action: Literal::new(LitKind::Action, &a.name, args, true), bindings, inverse }
    }

    /// Lifts a ground literal sharing at least one constant with the
    /// action; other constants of `lift_sort` become literal-local `V1..`.
    pub fn lift(&self, sig: &Signature, l: &Literal, lift_sort: &str) -> Option<Literal> {
        if !l.constants().any(|c| self.inverse.contains_key(c)) {
            return None;
        }
        let mut local: Vec<String> = Vec::new();
        let args = l
            .args
            .iter()
            .map(|t| {
                let c = t.name();
                if let Some(v) = self.inverse.get(c) {
                    Term::v(v)
                } else if sig.member(c, lift_sort) {
                    let k = match local.iter().position(|x| x == c) {
                        Some(k) => k,
                        None => {
                            local.push(c.to_string());
                            local.len() - 1
                        }
                    };
                    Term::v(&format!("V{}", k + 1))
                } else {
                    t.clone()
                }
            })
            .collect();
        Some(Literal { args, ..l.clone() })
    }
}

/// Renames literal-local `V` variables so that their numbering restarts at
/// 1 in order of appearance.
pub fn normalize_local(l: &Literal) -> Literal {
    let mut seen: Vec<String> = Vec::new();
    let args = l
        .args
        .iter()
        .map(|t| match t {
            Term::Var { name, .. } if is_local(name) => {
                let k = match seen.iter().position(|x| x == name) {
                    Some(k) => k,
                    None => {
                        seen.push(name.clone());
                        seen.len() - 1
                    }
                };
                Term::v(&format!("V{}", k + 1))
            }
            Term::Var { name, .. } => Term::v(name),
            c => c.clone(),
        })
        .collect();
    Literal { args, ..l.clone() }
}

pub fn is_local(var: &str) -> bool {
    var.starts_with('V')
}

/// Every fluent or static literal of `state` mentioning a constant of
/// `action`, lifted, with its ground form.
pub fn relevant_literals(sig: &Signature, state: &State, action: &Action, lift_sort: &str) -> Vec<(Literal, Literal)> {
    let lifting = Lifting::new(sig, action);
    state
        .lits
        .iter()
        .filter(|l| matches!(l.kind, LitKind::Fluent | LitKind::Static))
        .filter_map(|l| lifting.lift(sig, l, lift_sort).map(|x| (x, l.clone())))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Exec mode: whether an expected change went missing.
    Exec(bool),
    /// Causal mode: unexpected lifted effects (empty for none).
    Causal(BTreeSet<Literal>),
}

impl Label {
    pub fn contains(&self, l: &Literal) -> bool {
        match self {
            Label::Exec(_) => false,
            Label::Causal(s) => s.contains(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub features: BTreeSet<Literal>,
    /// Each lifted feature occurrence with the ground literal it came from.
    pub grounding: Vec<(Literal, Literal)>,
    pub action: Literal,
    pub bindings: Bindings,
    pub label: Label,
}

impl TrainingSample {
    pub fn has(&self, f: &Literal) -> bool {
        self.features.contains(f)
    }
}

/// Where samples come from: the agent's current knowledge and the world.
#[derive(Clone, Debug)]
pub struct SampleSource<'a> {
    pub agent: &'a DomainDescription,
    pub truth: &'a DomainDescription,
    pub profile: Profile,
    pub noise: NoiseModel,
}

struct Trial {
    before: State,
    expected: State,
    observed: State,
    action: Action,
    changed: bool,
    sig: Signature,
}

fn one_trial(src: &SampleSource, action_name: &str, lift_sort: &str, seed: u64) -> Result<Option<Trial>, LearnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = gen_profile_scene(rng.gen(), src.profile);
    let names: Vec<String> = scene.objects.iter().map(|o| o.id.clone()).collect();
    let mut world = World::new(scene, src.truth, src.noise, rng.gen())?;
    let agent = Reasoner::new(&world.scene.domain(src.agent))?;
    let action = match action_name {
        "pickup" => Action::new("pickup", &["rob1", names.choose(&mut rng).unwrap()]),
        "putdown" => {
            let clear: Vec<&String> = names
                .iter()
                .filter(|o| world.truth.legal(&Action::new("pickup", &["rob1", o]), &world.state).is_ok_and(|x| x.0))
                .collect();
            let Some(held) = clear.choose(&mut rng).map(|s| s.to_string()) else { return Ok(None) };
            if world.execute(&Action::new("pickup", &["rob1", &held]))? == Outcome::Failed {
                return Ok(None);
            }
            let mut targets: Vec<&str> = names.iter().map(|s| s.as_str()).filter(|o| *o != held).collect();
            targets.push("table");
            let to = targets.choose(&mut rng).unwrap().to_string();
            Action::new("putdown", &["rob1", &held, &to])
        }
        other => {
            // generic: any ground action of that name
            let all: Vec<Action> = agent.prog.actions.iter().filter(|a| a.name == other).cloned().collect();
            match all.choose(&mut rng) {
                Some(a) => a.clone(),
                None => return Ok(None),
            }
        }
    };
    let obs = world.observe();
    let history = crate::kr::History {
        observations: obs.into_iter().map(|l| (l, 0)).collect(),
        defaults: src.agent.defaults.clone(),
        ..Default::default()
    };
    let before = match agent.initial_state(&history) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    let expected = match agent.step(&before, &action) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    if world.execute(&action)? == Outcome::Failed {
        return Ok(None);
    }
    let observed = match agent.closure(world.observe()) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    let lifting = Lifting::new(agent.signature(), &action);
    let changed = observed.fluents().any(|l| {
        agent.is_inertial(l) && !before.contains(l) && lifting.lift(agent.signature(), l, lift_sort).is_some()
    });
    Ok(Some(Trial { before, expected, observed, action, changed, sig: agent.signature().clone() }))
}

fn sample_of(t: &Trial, mode: Mode, lift_sort: &str) -> TrainingSample {
    let sig = &t.sig;
    let lifting = Lifting::new(sig, &t.action);
    let grounding = relevant_literals(sig, &t.before, &t.action, lift_sort);
    let disc = classify_discrepancy(&t.before, &t.expected, &t.observed, |l| sig.is_inertial(l));
    let label = match mode {
        Mode::Exec => Label::Exec(
            disc.iter()
                .any(|(k, l)| *k == DiscrepancyKind::MissingExecutability && lifting.lift(sig, l, lift_sort).is_some()),
        ),
        Mode::Causal => Label::Causal(
            disc.iter()
                .filter(|(k, _)| *k == DiscrepancyKind::MissingCausalLaw)
                .filter_map(|(_, l)| lifting.lift(sig, l, lift_sort))
                .collect(),
        ),
    };
    TrainingSample {
        features: grounding.iter().map(|(l, _)| l.clone()).collect(),
        grounding,
        action: lifting.action.clone(),
        bindings: lifting.bindings.clone(),
        label,
    }
}

fn trial_seed(seed: u64, i: usize, attempt: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((i as u64) << 20) ^ attempt as u64
}

/// Simulates `action_name` in `n` random scenes and labels each run.
///
/// Trials the agent believes impossible, manipulation failures, and (in
/// causal mode) executions that visibly changed nothing are skipped and
/// retried with a fresh scene.
pub fn collect_samples(
    src: &SampleSource,
    action_name: &str,
    mode: Mode,
    n: usize,
    lift_sort: &str,
    seed: u64,
) -> Result<Vec<TrainingSample>, LearnError> {
    const ATTEMPTS: usize = 40;
    let per_index = |i: usize| -> Result<Option<TrainingSample>, LearnError> {
        for attempt in 0..ATTEMPTS {
            let Some(t) = one_trial(src, action_name, lift_sort, trial_seed(seed, i, attempt))? else { continue };
            if mode == Mode::Causal && !t.changed {
                continue;
            }
            return Ok(Some(sample_of(&t, mode, lift_sort)));
        }
        Ok(None)
    };
    let results = crate::par::par_map((0..n).collect(), per_index);
    let mut out = Vec::with_capacity(n);
    for r in results {
        if let Some(s) = r? {
            out.push(s);
        }
    }
    if out.len() < n {
        return Err(LearnError::WorldExhausted { wanted: n, got: out.len() });
    }
    Ok(out)
}

/// A candidate axiom with its leaf statistics and holdout score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateAxiom {
    pub axiom: Axiom,
    pub purity: f64,
    pub support: usize,
    pub validation: f64,
}

#[cfg(test)]
mod tests;
