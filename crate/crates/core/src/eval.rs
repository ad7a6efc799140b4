//! Experiments over the simulated tabletop: axiom learning (H1), planning
//! with and without learned axioms (H2), and explanation quality against
//! an oracle with complete knowledge (H4).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::{oracle_answer, transcript, Analyzer, Answer};
use crate::kr::{Action, Axiom, AxiomKind, DomainDescription, History, Literal};
use crate::learner::{alpha_match, run_learning, LearnError, LearnerConfig};
use crate::par::par_map;
use crate::parser::{render_action, render_literal, Query, QueryKind, VocabTable};
use crate::reasoner::{PlanStatus, ReasonError, Reasoner};
use crate::world::{gen_profile_scene, in_hand_lit, rel_lit, NoiseModel, Profile, Scene};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Reason(#[from] ReasonError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_configs: usize,
    pub goals_per_config: usize,
    pub questions_per_plan: usize,
    /// Axioms withheld from the learning agent.
    pub hidden_axiom_ids: Vec<String>,
    pub h1_runs: usize,
    /// Relation noise while learning.
    pub relation_noise: f64,
    pub manipulation_failure: f64,
    pub seed: u64,
    pub max_steps: usize,
    pub profiles: Vec<Profile>,
    /// Experiments to run, from `h1`, `h2`, `h4`.
    pub only: Vec<String>,
    /// Extra steps beyond the shortest true plan within which H2 counts
    /// plans.
    pub h2_slack: usize,
    pub learner: LearnerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_configs: 20,
            goals_per_config: 5,
            questions_per_plan: 4,
            hidden_axiom_ids: ["c1", "c2", "e1", "e4", "e5"].map(String::from).to_vec(),
            h1_runs: 20,
            relation_noise: 0.02,
            manipulation_failure: 0.0,
            seed: 1,
            max_steps: 10,
            profiles: vec![Profile::Real, Profile::Simulated],
            only: ["h1", "h2", "h4"].map(String::from).to_vec(),
            h2_slack: 1,
            learner: LearnerConfig::default(),
        }
    }
}

fn profile_name(p: Profile) -> &'static str {
    match p {
        Profile::Real => "real",
        Profile::Simulated => "simulated",
    }
}

impl ExperimentConfig {
    /// Reads `key = value` lines over the defaults. `learner.<field>` sets a
    /// learner threshold; list values are comma separated.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut c = ExperimentConfig::default();
        let mut learner = serde_json::to_value(&c.learner).expect("learner config serializes");
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| EvalError::Config { line: i + 1, message: m };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("`{v}` is not a number")));
            let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("`{v}` is not a count")));
            let list =
                |v: &str| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect::<Vec<_>>();
            match k {
                "n_configs" => c.n_configs = int(v)?,
                "goals_per_config" => c.goals_per_config = int(v)?,
                "questions_per_plan" => c.questions_per_plan = int(v)?,
                "hidden_axiom_ids" => c.hidden_axiom_ids = list(v),
                "h1_runs" => c.h1_runs = int(v)?,
                "relation_noise" => c.relation_noise = num(v)?,
                "manipulation_failure" => c.manipulation_failure = num(v)?,
                "seed" => c.seed = v.parse().map_err(|_| err(format!("bad seed `{v}`")))?,
                "max_steps" => c.max_steps = int(v)?,
                "h2_slack" => c.h2_slack = int(v)?,
                "only" => c.only = list(v),
                "profiles" => {
                    c.profiles = list(v)
                        .iter()
                        .map(|p| match p.as_str() {
                            "real" => Ok(Profile::Real),
                            "simulated" => Ok(Profile::Simulated),
                            _ => Err(err(format!("unknown profile `{p}`"))),
                        })
                        .collect::<Result<_, _>>()?
                }
                _ => match k.strip_prefix("learner.") {
                    Some(field) if learner.get(field).is_some() => {
                        let val = v
                            .parse::<u64>()
                            .map(serde_json::Value::from)
                            .or_else(|_| v.parse::<f64>().map(serde_json::Value::from))
                            .unwrap_or_else(|_| serde_json::Value::from(v));
                        learner[field] = val;
                    }
                    _ => return Err(err(format!("unknown key `{k}`"))),
                },
            }
        }
        c.learner =
            serde_json::from_value(learner).map_err(|e| EvalError::Config { line: 0, message: e.to_string() })?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::Config { line: 0, message: m.to_string() });
        if self.n_configs == 0 || self.goals_per_config == 0 || self.questions_per_plan == 0 || self.h1_runs == 0 {
            return bad("counts must be positive");
        }
        let truth = crate::ra_domain();
        if let Some(id) = self.hidden_axiom_ids.iter().find(|id| truth.axiom(id).is_none()) {
            return bad(&format!("hidden axiom `{id}` is not in the ground truth"));
        }
        if let Some(o) = self.only.iter().find(|o| !matches!(o.as_str(), "h1" | "h2" | "h4")) {
            return bad(&format!("unknown experiment `{o}`"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_configs = {}", self.n_configs);
        let _ = writeln!(s, "goals_per_config = {}", self.goals_per_config);
        let _ = writeln!(s, "questions_per_plan = {}", self.questions_per_plan);
        let _ = writeln!(s, "hidden_axiom_ids = {}", self.hidden_axiom_ids.join(", "));
        let _ = writeln!(s, "h1_runs = {}", self.h1_runs);
        let _ = writeln!(s, "relation_noise = {}", self.relation_noise);
        let _ = writeln!(s, "manipulation_failure = {}", self.manipulation_failure);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ =
            writeln!(s, "profiles = {}", self.profiles.iter().map(|p| profile_name(*p)).collect::<Vec<_>>().join(", "));
        let _ = writeln!(s, "only = {}", self.only.join(", "));
        let _ = writeln!(s, "h2_slack = {}", self.h2_slack);
        if let serde_json::Value::Object(m) = serde_json::to_value(&self.learner).expect("learner config serializes") {
            for (k, v) in m {
                let v = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
                let _ = writeln!(s, "learner.{k} = {v}");
            }
        }
        s
    }

    fn runs(&self, e: &str) -> bool {
        self.only.iter().any(|o| o == e)
    }

    fn noise(&self) -> NoiseModel {
        NoiseModel {
            relation_error_rate: self.relation_noise,
            manipulation_failure_rate: self.manipulation_failure,
            constraint_label_error: 0.0,
        }
    }
}

/// Deterministic seed for one part of an experiment.
fn derive(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for p in parts {
        h = (h ^ p).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchMode {
    /// Equal up to variable renaming and body order.
    Strict,
    /// The target's body may be a proper subset of the learned body.
    Relaxed,
}

fn matches(target: &Axiom, learned: &Axiom, mode: MatchMode) -> bool {
    alpha_match(target, learned, mode == MatchMode::Relaxed)
}

/// Precision (learned axioms matching some target) and recall (targets
/// matched by some learned axiom). An empty learned set scores (0, 0).
pub fn score_axioms(learned: &[Axiom], targets: &[Axiom], mode: MatchMode) -> (f64, f64) {
    if learned.is_empty() {
        return (0.0, 0.0);
    }
    let good = learned.iter().filter(|l| targets.iter().any(|t| matches(t, l, mode))).count();
    let found = targets.iter().filter(|t| learned.iter().any(|l| matches(t, l, mode))).count();
    let recall = if targets.is_empty() { 1.0 } else { found as f64 / targets.len() as f64 };
    (good as f64 / learned.len() as f64, recall)
}

/// Precision and recall of `got` against `want`, as multisets. An empty
/// answer scores (1, 1) against an empty reference and (0, 0) otherwise.
pub fn score_literals<T: Ord + Clone>(got: &[T], want: &[T]) -> (f64, f64) {
    if got.is_empty() {
        return if want.is_empty() { (1.0, 1.0) } else { (0.0, 0.0) };
    }
    let mut pool: BTreeMap<&T, usize> = BTreeMap::new();
    for w in want {
        *pool.entry(w).or_insert(0) += 1;
    }
    let mut hit = 0;
    for g in got {
        if let Some(n) = pool.get_mut(g) {
            if *n > 0 {
                *n -= 1;
                hit += 1;
            }
        }
    }
    let r = if want.is_empty() { 1.0 } else { hit as f64 / want.len() as f64 };
    (hit as f64 / got.len() as f64, r)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Run {
    pub run: usize,
    pub seed: u64,
    pub learned: Vec<String>,
    pub strict: (f64, f64),
    pub relaxed: (f64, f64),
    pub actions: usize,
    pub episodes: usize,
    pub trees: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub runs: Vec<H1Run>,
    /// Mean (precision, recall) over runs.
    pub strict: (f64, f64),
    pub relaxed: (f64, f64),
    /// Axioms learned in the first run, used by the later experiments.
    #[serde(skip)]
    pub first_learned: Vec<Axiom>,
}

/// Learning runs from the ground truth with the hidden axioms removed,
/// scored against the hidden axioms.
pub fn run_h1(cfg: &ExperimentConfig) -> Result<H1Report, EvalError> {
    let truth = crate::ra_domain();
    let hidden: Vec<&str> = cfg.hidden_axiom_ids.iter().map(|s| s.as_str()).collect();
    let targets: Vec<Axiom> = hidden.iter().filter_map(|id| truth.axiom(id).cloned()).collect();
    let seeds: Vec<(usize, u64)> = (0..cfg.h1_runs).map(|k| (k, derive(cfg.seed, &[1, k as u64]))).collect();
    let results = par_map(seeds, |(k, seed)| -> Result<(H1Run, Vec<Axiom>), LearnError> {
        let run = if hidden.is_empty() {
            Default::default()
        } else {
            run_learning(&truth, &hidden, &cfg.learner, cfg.noise(), seed)?
        };
        let learned: Vec<Axiom> = run.learned.iter().map(|l| l.axiom.clone()).collect();
        Ok((
            H1Run {
                run: k,
                seed,
                learned: learned.iter().map(|a| a.to_string()).collect(),
                strict: score_axioms(&learned, &targets, MatchMode::Strict),
                relaxed: score_axioms(&learned, &targets, MatchMode::Relaxed),
                actions: run.actions,
                episodes: run.episodes,
                trees: run.trees,
            },
            learned,
        ))
    });
    let mut rep = H1Report::default();
    for r in results {
        let (run, learned) = r?;
        if rep.runs.is_empty() {
            rep.first_learned = learned;
        }
        rep.runs.push(run);
    }
    rep.strict = (mean(rep.runs.iter().map(|r| r.strict.0)), mean(rep.runs.iter().map(|r| r.strict.1)));
    rep.relaxed = (mean(rep.runs.iter().map(|r| r.relaxed.0)), mean(rep.runs.iter().map(|r| r.relaxed.1)));
    Ok(rep)
}

/// One (scene, goal) pair shared by both arms of a paired trial.
#[derive(Clone, Debug)]
pub struct Trial {
    pub profile: Profile,
    pub config: usize,
    pub goal_index: usize,
    pub seed: u64,
    pub scene: Scene,
    pub goal: Vec<Literal>,
    /// Length of the shortest plan under complete knowledge.
    pub optimal_length: usize,
}

fn random_goal(scene: &Scene, rng: &mut impl Rng) -> Vec<Literal> {
    let names: Vec<&str> = scene.names();
    let a = *names.choose(rng).expect("scenes have objects");
    let roll: f64 = rng.gen();
    if roll < 0.3 {
        vec![in_hand_lit(a, true)]
    } else {
        let mut targets: Vec<&str> = names.iter().copied().filter(|b| *b != a).collect();
        targets.push("table");
        vec![rel_lit("on", a, targets.choose(rng).expect("at least the table"))]
    }
}

/// Scenes and goals for `profile`: `n_configs` scenes, each with
/// `goals_per_config` goals reachable under complete knowledge in one or
/// more steps.
pub fn make_trials(cfg: &ExperimentConfig, profile: Profile) -> Result<Vec<Trial>, EvalError> {
    let truth = crate::ra_domain();
    let pidx = match profile {
        Profile::Real => 0,
        Profile::Simulated => 1,
    };
    let configs: Vec<usize> = (0..cfg.n_configs).collect();
    let per = par_map(configs, |c| -> Result<Vec<Trial>, EvalError> {
        let scene = gen_profile_scene(derive(cfg.seed, &[2, pidx, c as u64]), profile);
        let r = Reasoner::new(&scene.domain(&truth))?;
        let s0 = r.initial_state(&scene.history(&truth))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, &[3, pidx, c as u64]));
        let mut out = Vec::new();
        let mut attempts = 0;
        while out.len() < cfg.goals_per_config && attempts < 50 * cfg.goals_per_config {
            attempts += 1;
            let goal = random_goal(&scene, &mut rng);
            if out.iter().any(|t: &Trial| t.goal == goal) {
                continue;
            }
            let Ok(ps) = r.plan_set(&s0, &goal, cfg.max_steps) else { continue };
            let len = ps.plans.first().map(|p| p.length).unwrap_or(0);
            if len == 0 {
                continue;
            }
            out.push(Trial {
                profile,
                config: c,
                goal_index: out.len(),
                seed: derive(cfg.seed, &[4, pidx, c as u64, out.len() as u64]),
                scene: scene.clone(),
                goal,
                optimal_length: len,
            });
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for p in per {
        all.extend(p?);
    }
    Ok(all)
}

/// The agent's knowledge in each arm: without is the ground truth minus
/// the hidden executability conditions; with adds the learned
/// executability conditions back.
pub fn arms(cfg: &ExperimentConfig, learned: &[Axiom]) -> Result<(DomainDescription, DomainDescription), EvalError> {
    let truth = crate::ra_domain();
    let hidden: Vec<&str> = cfg
        .hidden_axiom_ids
        .iter()
        .map(|s| s.as_str())
        .filter(|id| truth.axiom(id).is_some_and(|a| a.kind == AxiomKind::ExecutabilityCondition))
        .collect();
    let without = truth.without(&hidden);
    let with = without
        .with_axioms(learned.iter().filter(|a| a.kind == AxiomKind::ExecutabilityCondition).cloned())
        .map_err(ReasonError::from)?;
    Ok((without, with))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub found: bool,
    /// Length of the agent's chosen (first minimal) plan.
    pub length: usize,
    /// Whether the chosen plan works in the true world.
    pub chosen: Option<PlanStatus>,
    /// Plans within the trial's horizon.
    pub plans: u64,
    pub expanded: usize,
    pub micros: u128,
    pub optimal: u64,
    pub sub_optimal: u64,
    pub incorrect: u64,
}

impl ArmResult {
    fn classified(&self) -> u64 {
        self.optimal + self.sub_optimal + self.incorrect
    }
}

/// Checks a plan against ground truth from the true initial state.
pub fn judge_plan(
    truth: &Reasoner,
    scene: &Scene,
    goal: &[Literal],
    plan: &[Action],
    optimal_length: usize,
) -> PlanStatus {
    let mut s = scene.true_literals.clone();
    for a in plan {
        match truth.legal(a, &s) {
            Ok((true, _)) => {}
            _ => return PlanStatus::Incorrect,
        }
        match truth.step(&s, a) {
            Ok(t) => s = t,
            Err(_) => return PlanStatus::Incorrect,
        }
    }
    if !goal.iter().all(|g| s.contains(g)) {
        PlanStatus::Incorrect
    } else if plan.len() > optimal_length {
        PlanStatus::SubOptimal
    } else {
        PlanStatus::Optimal
    }
}

/// Plans the agent can produce for the trial: every action sequence up to
/// `optimal_length + h2_slack` steps reaching the goal in the agent's model,
/// classified against ground truth.
fn plan_arm(agent: &DomainDescription, t: &Trial, cfg: &ExperimentConfig) -> Result<ArmResult, EvalError> {
    let truth = Reasoner::new(&t.scene.domain(&crate::ra_domain()))?;
    let r = Reasoner::new(&t.scene.domain(agent))?;
    let s0 = r.initial_state(&t.scene.history(agent))?;
    let clock = Instant::now();
    let first = r.plan_set(&s0, &t.goal, cfg.max_steps).ok().and_then(|ps| ps.plans.into_iter().next());
    let counts = r.count_plans(&s0, &t.goal, t.optimal_length + cfg.h2_slack, &truth)?;
    let micros = clock.elapsed().as_micros();
    let mut res = ArmResult { found: first.is_some(), micros, expanded: counts.expanded, ..Default::default() };
    if let Some(p) = first {
        res.length = p.length;
        res.chosen = Some(judge_plan(&truth, &t.scene, &t.goal, &p.plan, t.optimal_length));
    }
    for (len, (ok, bad)) in counts.by_length.iter().enumerate() {
        if len <= t.optimal_length {
            res.optimal += ok;
        } else {
            res.sub_optimal += ok;
        }
        res.incorrect += bad;
    }
    res.plans = counts.total();
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2Trial {
    pub profile: Profile,
    pub config: usize,
    pub goal: Vec<String>,
    pub optimal_length: usize,
    pub without: ArmResult,
    pub with: ArmResult,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct H2Summary {
    pub trials: usize,
    /// Mean per-trial with/without ratios.
    pub steps_ratio: f64,
    pub plans_ratio: f64,
    pub expanded_ratio: f64,
    pub time_ratio: f64,
    /// Mean per-trial fractions of (optimal, sub-optimal, incorrect) plans.
    pub without: (f64, f64, f64),
    pub with: (f64, f64, f64),
}

fn fractions(arms: &[&ArmResult]) -> (f64, f64, f64) {
    let ok: Vec<&&ArmResult> = arms.iter().filter(|a| a.classified() > 0).collect();
    let f = |sel: fn(&ArmResult) -> u64| mean(ok.iter().map(|a| sel(a) as f64 / a.classified() as f64));
    (f(|a| a.optimal), f(|a| a.sub_optimal), f(|a| a.incorrect))
}

pub fn summarize_h2(trials: &[H2Trial]) -> H2Summary {
    let both: Vec<&H2Trial> = trials.iter().filter(|t| t.with.found && t.without.found).collect();
    let ratio = |f: fn(&ArmResult) -> f64| {
        mean(both.iter().filter(|t| f(&t.without) > 0.0).map(|t| f(&t.with) / f(&t.without)))
    };
    H2Summary {
        trials: trials.len(),
        steps_ratio: ratio(|a| a.length as f64),
        plans_ratio: ratio(|a| a.plans as f64),
        expanded_ratio: ratio(|a| a.expanded as f64),
        time_ratio: ratio(|a| a.micros.max(1) as f64),
        without: fractions(&trials.iter().map(|t| &t.without).collect::<Vec<_>>()),
        with: fractions(&trials.iter().map(|t| &t.with).collect::<Vec<_>>()),
    }
}

/// Paired planning trials with and without the learned axioms.
pub fn run_h2(cfg: &ExperimentConfig, trials: &[Trial], learned: &[Axiom]) -> Result<Vec<H2Trial>, EvalError> {
    let (without, with) = arms(cfg, learned)?;
    par_map(trials.iter().collect(), |t: &Trial| -> Result<H2Trial, EvalError> {
        Ok(H2Trial {
            profile: t.profile,
            config: t.config,
            goal: t.goal.iter().map(|g| g.to_string()).collect(),
            optimal_length: t.optimal_length,
            without: plan_arm(&without, t, cfg)?,
            with: plan_arm(&with, t, cfg)?,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H4Question {
    pub profile: Profile,
    pub config: usize,
    pub goal_index: usize,
    pub arm: String,
    pub kind: QueryKind,
    pub question: String,
    pub agent: String,
    pub oracle: String,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct H4Summary {
    /// (kind, arm) to mean (precision, recall).
    pub cells: BTreeMap<(QueryKind, String), (f64, f64)>,
    pub questions: usize,
}

pub fn summarize_h4(qs: &[H4Question]) -> H4Summary {
    let mut groups: BTreeMap<(QueryKind, String), Vec<&H4Question>> = BTreeMap::new();
    for q in qs {
        groups.entry((q.kind, q.arm.clone())).or_default().push(q);
    }
    H4Summary {
        cells: groups
            .into_iter()
            .map(|(k, v)| (k, (mean(v.iter().map(|q| q.precision)), mean(v.iter().map(|q| q.recall)))))
            .collect(),
        questions: qs.len(),
    }
}

/// A plan executed in belief: the history of observing the initial scene
/// and doing `plan`.
fn executed(scene: &Scene, domain: &DomainDescription, plan: &[Action]) -> History {
    let mut h = scene.history(domain);
    h.happened = plan.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    h
}

fn question_text(q: &Query, vocab: &VocabTable) -> String {
    let step = q.step.map(|s| format!(" at step {s}")).unwrap_or_default();
    let act = |a: &Action| render_action(a, vocab).unwrap_or_else(|_| a.to_string());
    match q.kind {
        QueryKind::DescribePlan => "Please describe the plan.".into(),
        QueryKind::WhyAction => format!("Why did you {}{step}?", act(q.action.as_ref().expect("action query"))),
        QueryKind::WhyNotAction => format!("Why did you not {}{step}?", act(q.action.as_ref().expect("action query"))),
        QueryKind::WhyBelief => {
            let b = q.belief.as_ref().expect("belief query");
            let text = render_literal(b, QueryKind::WhyBelief, vocab).unwrap_or_else(|_| b.to_string());
            format!("Why did you believe that {text}{step}?")
        }
    }
}

/// The action with one argument other than the robot replaced by another
/// constant of a fitting sort.
fn perturb(a: &Action, scene: &Scene, rng: &mut impl Rng) -> Action {
    let mut b = a.clone();
    let slots: Vec<usize> = (1..a.args.len()).collect();
    let Some(&k) = slots.choose(rng) else { return b };
    let mut pool: Vec<String> = scene.names().iter().map(|s| s.to_string()).collect();
    if k == 2 {
        pool.push("table".into());
    }
    pool.retain(|c| *c != a.args[k]);
    if let Some(c) = pool.choose(rng) {
        b.args[k] = c.clone();
    }
    b
}

struct Side<'a> {
    domain: DomainDescription,
    history: History,
    traj: crate::reasoner::BeliefTrajectory,
    goal: &'a [Literal],
}

impl Side<'_> {
    fn ask(&self, q: &Query, vocab: &VocabTable) -> Option<Answer> {
        Analyzer::new(&self.domain, &self.traj, self.goal, vocab).answer(q).ok()
    }
}

fn side<'a>(agent: &DomainDescription, t: &'a Trial, cfg: &ExperimentConfig) -> Result<Option<Side<'a>>, EvalError> {
    let domain = t.scene.domain(agent);
    let r = Reasoner::new(&domain)?;
    let s0 = r.initial_state(&t.scene.history(&domain))?;
    let Ok(ps) = r.plan_set(&s0, &t.goal, cfg.max_steps) else { return Ok(None) };
    let plan = ps.plans.first().map(|p| p.plan.clone()).unwrap_or_default();
    let history = executed(&t.scene, &domain, &plan);
    let Ok(traj) = r.trajectory(&history) else { return Ok(None) };
    Ok(Some(Side { domain, history, traj, goal: &t.goal }))
}

fn h4_trial(
    t: &Trial,
    arm: &str,
    agent: &DomainDescription,
    cfg: &ExperimentConfig,
    vocab: &VocabTable,
) -> Result<Vec<H4Question>, EvalError> {
    let truth = crate::ra_domain();
    let Some(oracle) = side(&truth, t, cfg)? else { return Ok(Vec::new()) };
    let mine = side(agent, t, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
    let mut queries = vec![Query { kind: QueryKind::DescribePlan, action: None, belief: None, step: None }];
    let occ = mine.as_ref().map(|m| m.traj.occurrences.clone()).unwrap_or_default();
    if let Some((a, i)) = occ.choose(&mut rng).cloned() {
        queries.push(Query { kind: QueryKind::WhyAction, action: Some(a.clone()), belief: None, step: Some(i) });
        let b = perturb(&a, &t.scene, &mut rng);
        queries.push(Query { kind: QueryKind::WhyNotAction, action: Some(b), belief: None, step: Some(i) });
    }
    let mut out = Vec::new();
    let mut answers: Vec<(Option<Answer>, Option<Answer>)> = Vec::new();
    let record = |q: &Query, agent_ans: Option<Answer>, oracle_ans: Option<Answer>, out: &mut Vec<H4Question>| {
        let lits = |a: &Option<Answer>| a.as_ref().map(|a| a.literals.clone()).unwrap_or_default();
        let (p, r) = score_literals(&lits(&agent_ans), &lits(&oracle_ans));
        let text =
            |a: &Option<Answer>| a.as_ref().map(|a| a.text.clone()).unwrap_or_else(|| "I cannot explain that.".into());
        out.push(H4Question {
            profile: t.profile,
            config: t.config,
            goal_index: t.goal_index,
            arm: arm.to_string(),
            kind: q.kind,
            question: question_text(q, vocab),
            agent: text(&agent_ans),
            oracle: text(&oracle_ans),
            precision: p,
            recall: r,
        });
        (agent_ans, oracle_ans)
    };
    for q in queries.iter().take(cfg.questions_per_plan) {
        let a = mine.as_ref().and_then(|m| m.ask(q, vocab));
        let o = oracle.ask(q, vocab);
        answers.push(record(q, a, o, &mut out));
    }
    if cfg.questions_per_plan >= 4 {
        // a belief behind the previous answers: the first condition of the
        // why-not answer, else of the why-action answer;
        let pick = |a: &Option<Answer>| {
            a.as_ref().and_then(|a| a.literals.iter().find(|(l, _)| l.kind != crate::kr::LitKind::Action).cloned())
        };
        // failing that, the goal at the end of the oracle's plan
        let belief = answers
            .iter()
            .rev()
            .find_map(|(a, o)| pick(o).or_else(|| pick(a)))
            .or_else(|| t.goal.first().map(|g| (g.clone(), oracle.traj.last_step())));
        if let Some((l, s)) = belief {
            let q = Query { kind: QueryKind::WhyBelief, action: None, belief: Some(l), step: Some(s) };
            let a = mine.as_ref().and_then(|m| m.ask(&q, vocab));
            let o = oracle_answer(&q, &oracle.domain, &oracle.history, &t.goal, vocab).ok();
            record(&q, a, o, &mut out);
        }
    }
    Ok(out)
}

/// Four questions per plan, answered with and without the learned axioms
/// and scored against the oracle.
pub fn run_h4(cfg: &ExperimentConfig, trials: &[Trial], learned: &[Axiom]) -> Result<Vec<H4Question>, EvalError> {
    let truth = crate::ra_domain();
    let hidden: Vec<&str> = cfg.hidden_axiom_ids.iter().map(|s| s.as_str()).collect();
    let without = truth.without(&hidden);
    let with = without.with_axioms(learned.iter().cloned()).map_err(ReasonError::from)?;
    let vocab = VocabTable::bundled("analyzer").expect("bundled vocabulary");
    let per = par_map(trials.iter().collect(), |t: &Trial| -> Result<Vec<H4Question>, EvalError> {
        let mut qs = h4_trial(t, "without", &without, cfg, &vocab)?;
        qs.extend(h4_trial(t, "with", &with, cfg, &vocab)?);
        Ok(qs)
    });
    let mut out = Vec::new();
    for p in per {
        out.extend(p?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct EvalReport {
    pub config: Option<ExperimentConfig>,
    pub h1: Option<H1Report>,
    pub h2: Vec<H2Trial>,
    pub h4: Vec<H4Question>,
}

/// Runs the configured experiments. The first H1 run (or, without H1, one
/// learning run) supplies the learned axioms for H2 and H4.
pub fn run_all(cfg: &ExperimentConfig) -> Result<EvalReport, EvalError> {
    let mut rep = EvalReport { config: Some(cfg.clone()), ..Default::default() };
    if cfg.runs("h1") {
        rep.h1 = Some(run_h1(cfg)?);
    }
    if !(cfg.runs("h2") || cfg.runs("h4")) {
        return Ok(rep);
    }
    let learned = match &rep.h1 {
        Some(h1) => h1.first_learned.clone(),
        None => {
            let one = ExperimentConfig { h1_runs: 1, ..cfg.clone() };
            run_h1(&one)?.first_learned
        }
    };
    for &p in &cfg.profiles {
        let trials = make_trials(cfg, p)?;
        if cfg.runs("h2") {
            rep.h2.extend(run_h2(cfg, &trials, &learned)?);
        }
        if cfg.runs("h4") {
            rep.h4.extend(run_h4(cfg, &trials, &learned)?);
        }
    }
    Ok(rep)
}

type Column = fn(&H2Summary) -> f64;

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

const KINDS: [(QueryKind, &str); 4] = [
    (QueryKind::DescribePlan, "Plan description"),
    (QueryKind::WhyAction, "Why X?"),
    (QueryKind::WhyNotAction, "Why not X?"),
    (QueryKind::WhyBelief, "Belief"),
];

/// The five result tables as (file name, CSV text).
pub fn tables(rep: &EvalReport) -> Vec<(String, String)> {
    let mut t1 = String::from("missing_axioms,precision,recall\n");
    if let Some(h1) = &rep.h1 {
        let _ = writeln!(t1, "Strict,{},{}", f4(h1.strict.0), f4(h1.strict.1));
        let _ = writeln!(t1, "Relaxed,{},{}", f4(h1.relaxed.0), f4(h1.relaxed.1));
    }
    let by_profile = |p: Profile| rep.h2.iter().filter(|t| t.profile == p).cloned().collect::<Vec<_>>();
    let (real, sim) = (by_profile(Profile::Real), by_profile(Profile::Simulated));
    let sums = [(!real.is_empty()).then(|| summarize_h2(&real)), (!sim.is_empty()).then(|| summarize_h2(&sim))];
    let cell = |s: &Option<H2Summary>, f: fn(&H2Summary) -> f64| s.as_ref().map(|s| f4(f(s))).unwrap_or_default();
    let mut t2 = String::from("measure,real,simulated\n");
    let mut t3 = String::from("plans,real_without,real_with,simulated_without,simulated_with\n");
    if sums.iter().any(|s| s.is_some()) {
        let rows: [(&str, Column); 3] = [
            ("Number of steps", |s| s.steps_ratio),
            ("Number of plans", |s| s.plans_ratio),
            ("Planning effort (states)", |s| s.expanded_ratio),
        ];
        for (name, f) in rows {
            let _ = writeln!(t2, "{name},{},{}", cell(&sums[0], f), cell(&sums[1], f));
        }
        let rows: [(&str, Column, Column); 3] = [
            ("Optimal", |s| s.without.0, |s| s.with.0),
            ("Sub-optimal", |s| s.without.1, |s| s.with.1),
            ("Incorrect", |s| s.without.2, |s| s.with.2),
        ];
        for (name, wo, w) in rows {
            let _ = writeln!(
                t3,
                "{name},{},{},{},{}",
                cell(&sums[0], wo),
                cell(&sums[0], w),
                cell(&sums[1], wo),
                cell(&sums[1], w)
            );
        }
    }
    let h4_table = |p: Profile| {
        let mut t = String::from("query_type,precision_without,precision_with,recall_without,recall_with\n");
        let qs: Vec<H4Question> = rep.h4.iter().filter(|q| q.profile == p).cloned().collect();
        if qs.is_empty() {
            return t;
        }
        let s = summarize_h4(&qs);
        let get = |k: QueryKind, arm: &str| s.cells.get(&(k, arm.to_string())).copied();
        for (k, name) in KINDS {
            let (wo, w) = (get(k, "without"), get(k, "with"));
            let c = |x: Option<(f64, f64)>, i: usize| x.map(|v| f4(if i == 0 { v.0 } else { v.1 })).unwrap_or_default();
            let _ = writeln!(t, "{name},{},{},{},{}", c(wo, 0), c(w, 0), c(wo, 1), c(w, 1));
        }
        t
    };
    vec![
        ("table1.csv".into(), t1),
        ("table2.csv".into(), t2),
        ("table3.csv".into(), t3),
        ("table4.csv".into(), h4_table(Profile::Real)),
        ("table5.csv".into(), h4_table(Profile::Simulated)),
    ]
}

fn jsonl<T: Serialize>(xs: &[T]) -> String {
    xs.iter().map(|x| serde_json::to_string(x).expect("record serializes") + "\n").collect()
}

/// Writes the CSV tables, the raw per-run logs, the question transcript,
/// and the configuration into `dir`.
pub fn emit_tables(rep: &EvalReport, dir: &Path) -> Result<Vec<String>, EvalError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: &str| -> Result<(), EvalError> {
        std::fs::write(dir.join(name), text)?;
        written.push(name.to_string());
        Ok(())
    };
    let ran = |e: &str| rep.config.as_ref().is_none_or(|c| c.runs(e));
    for (name, text) in tables(rep) {
        let from = match name.as_str() {
            "table1.csv" => "h1",
            "table2.csv" | "table3.csv" => "h2",
            _ => "h4",
        };
        if ran(from) {
            put(&name, &text)?;
        }
    }
    if let Some(h1) = &rep.h1 {
        put("h1.jsonl", &jsonl(&h1.runs))?;
    }
    if !rep.h2.is_empty() {
        put("h2.jsonl", &jsonl(&rep.h2))?;
    }
    if !rep.h4.is_empty() {
        put("h4.jsonl", &jsonl(&rep.h4))?;
        let pairs: Vec<(&str, &str)> =
            rep.h4.iter().filter(|q| q.arm == "with").map(|q| (q.question.as_str(), q.agent.as_str())).collect();
        put("transcript.txt", &transcript(pairs))?;
    }
    if let Some(c) = &rep.config {
        put("config.txt", &c.to_text())?;
    }
    Ok(written)
}
