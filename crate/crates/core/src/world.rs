//! Ground-truth tabletop simulator. The world executes actions under the
//! complete axiom set, reports noisy observations, and labels scenes for
//! stability and occlusion.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kr::{Action, DomainDescription, History, LitKind, Literal, State};
use crate::reasoner::{ReasonError, Reasoner};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("scene file: {0}")]
    SceneFormat(String),
    #[error(transparent)]
    Reason(#[from] ReasonError),
    #[error("could not produce {wanted} valid scenes")]
    WorldExhausted { wanted: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub shape: &'static str,
    pub size: &'static str,
    pub surface: &'static str,
    pub color: &'static str,
}

const fn entry(
    name: &'static str,
    shape: &'static str,
    size: &'static str,
    surface: &'static str,
    color: &'static str,
) -> CatalogEntry {
    CatalogEntry { name, shape, size, surface, color }
}

pub const CATALOG: &[CatalogEntry] = &[
    entry("red_block", "cube", "medium", "flat", "red"),
    entry("blue_block", "cube", "medium", "flat", "blue"),
    entry("green_block", "cube", "small", "flat", "green"),
    entry("white_block", "cube", "medium", "flat", "white"),
    entry("orange_block", "cube", "big", "flat", "orange"),
    entry("yellow_block", "cube", "small", "flat", "yellow"),
    entry("green_can", "cylinder", "small", "flat", "green"),
    entry("red_can", "cylinder", "medium", "flat", "red"),
    entry("crackers_box", "box", "big", "flat", "red"),
    entry("pitcher", "pitcher", "big", "flat", "blue"),
    entry("pot", "pot", "big", "irregular", "gray"),
    entry("pig", "toy", "medium", "irregular", "pink"),
    entry("capsicum", "vegetable", "small", "irregular", "red"),
    entry("tennis_ball", "sphere", "small", "irregular", "yellow"),
    entry("yellow_ball", "sphere", "small", "irregular", "yellow"),
    entry("apple", "fruit", "small", "irregular", "red"),
    entry("orange", "fruit", "small", "irregular", "orange"),
    entry("duck", "toy", "small", "irregular", "yellow"),
    entry("mustard_bottle", "bottle", "medium", "irregular", "yellow"),
    entry("mug", "mug", "small", "irregular", "white"),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub shape: String,
    pub size: String,
    pub surface: String,
    pub color: String,
}

impl From<&CatalogEntry> for SceneObject {
    fn from(e: &CatalogEntry) -> Self {
        SceneObject {
            id: e.name.into(),
            shape: e.shape.into(),
            size: e.size.into(),
            surface: e.surface.into(),
            color: e.color.into(),
        }
    }
}

/// `rel(a, b)`: `on` means a rests on b, `front` means a stands in front of b.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub rel: String,
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub relations: Vec<Relation>,
    /// Objects held at the start, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_hand: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Bottom-to-top chains of stacked objects.
    #[serde(skip)]
    pub stacks: Vec<Vec<String>>,
    #[serde(skip)]
    pub true_literals: State,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub relation_error_rate: f64,
    pub manipulation_failure_rate: f64,
    pub constraint_label_error: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel =
        NoiseModel { relation_error_rate: 0.0, manipulation_failure_rate: 0.0, constraint_label_error: 0.0 };

    pub fn relations(rate: f64) -> Self {
        NoiseModel { relation_error_rate: rate, ..Self::NONE }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for r in [self.relation_error_rate, self.manipulation_failure_rate, self.constraint_label_error] {
            if !(0.0..=1.0).contains(&r) {
                return Err(WorldError::InvalidCounts(format!("rate {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::NONE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// 5-7 objects.
    Real,
    /// 7-9 objects, 3-5 of them stacked.
    Simulated,
}

impl Profile {
    pub fn counts(self, rng: &mut impl Rng) -> (usize, usize) {
        match self {
            Profile::Real => {
                let n = rng.gen_range(5..=7);
                (n, rng.gen_range(2..=4))
            }
            Profile::Simulated => (rng.gen_range(7..=9), rng.gen_range(3..=5)),
        }
    }
}

pub fn rel_lit(rel: &str, a: &str, b: &str) -> Literal {
    Literal::fluent("obj_rel", &[rel, a, b], true)
}

pub fn in_hand_lit(o: &str, positive: bool) -> Literal {
    Literal::fluent("in_hand", &["rob1", o], positive)
}

impl Scene {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn names(&self) -> Vec<&str> {
        self.objects.iter().map(|o| o.id.as_str()).collect()
    }

    /// `base` extended with this scene's object constants.
    pub fn domain(&self, base: &DomainDescription) -> DomainDescription {
        base.with_objects(self.objects.iter().map(|o| ("object", o.id.as_str())))
    }

    pub fn facts(&self) -> Vec<Literal> {
        let mut out = Vec::new();
        for o in &self.objects {
            out.push(Literal::fact("obj_size", &[&o.id, &o.size]));
            out.push(Literal::fact("obj_surface", &[&o.id, &o.surface]));
        }
        out
    }

    /// Attributes, relations, and the hand as literals (not closed).
    pub fn base_literals(&self) -> Vec<Literal> {
        let mut out = self.facts();
        for r in &self.relations {
            out.push(rel_lit(&r.rel, &r.a, &r.b));
        }
        if let Some(h) = &self.in_hand {
            out.push(in_hand_lit(h, true));
        }
        out
    }

    /// Recomputes stacks and the closed true state under `truth`.
    pub fn close(&mut self, truth: &Reasoner) -> Result<(), WorldError> {
        self.true_literals = truth.closure(self.base_literals())?;
        self.stacks = stacks_of(&self.relations);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Scene, WorldError> {
        let mut s: Scene = serde_json::from_str(text).map_err(|e| WorldError::SceneFormat(e.to_string()))?;
        let truth = Reasoner::new(&s.domain(&crate::ra_domain()))?;
        s.close(&truth)?;
        Ok(s)
    }

    /// Step-0 history of a noise-free observation of this scene.
    pub fn history(&self, defaults: &DomainDescription) -> History {
        let obs = observe(&self.true_literals, &NoiseModel::NONE, &mut ChaCha8Rng::seed_from_u64(0));
        History {
            observations: obs.into_iter().map(|l| (l, 0)).collect(),
            defaults: defaults.defaults.clone(),
            ..Default::default()
        }
    }
}

fn stacks_of(relations: &[Relation]) -> Vec<Vec<String>> {
    let on: BTreeMap<&str, &str> =
        relations.iter().filter(|r| r.rel == "on").map(|r| (r.a.as_str(), r.b.as_str())).collect();
    let mut bottoms: Vec<&str> = on
        .iter()
        .filter(|(_, b)| **b != "table" && !on.get(*b).is_some_and(|x| *x != "table"))
        .map(|(_, b)| *b)
        .collect();
    bottoms.sort();
    bottoms.dedup();
    let mut out = Vec::new();
    for b in bottoms {
        let mut chain = vec![b.to_string()];
        let mut cur = b;
        while let Some((a, _)) = on.iter().find(|(_, x)| **x == cur) {
            if chain.iter().any(|c| c == a) {
                break;
            }
            chain.push(a.to_string());
            cur = a;
        }
        out.push(chain);
    }
    out
}

/// Random scene: `n_stacked` objects arranged in one or two stacks (only
/// flat objects support others), the rest on the table, occasionally one
/// object in front of another.
pub fn gen_scene(seed: u64, n_objects: usize, n_stacked: usize) -> Result<Scene, WorldError> {
    if n_stacked > n_objects || n_objects > CATALOG.len() || n_stacked == 1 {
        return Err(WorldError::InvalidCounts(format!("{n_stacked} stacked of {n_objects}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = if n_stacked >= 4 && rng.gen_bool(0.5) {
        let a = rng.gen_range(2..=n_stacked - 2);
        vec![a, n_stacked - a]
    } else if n_stacked == 0 {
        Vec::new()
    } else {
        vec![n_stacked]
    };
    let supports: usize = sizes.iter().map(|s| s - 1).sum();
    let mut flat: Vec<&CatalogEntry> = CATALOG.iter().filter(|e| e.surface == "flat").collect();
    if supports > flat.len() {
        return Err(WorldError::InvalidCounts("not enough flat objects".into()));
    }
    flat.shuffle(&mut rng);
    let mut chosen: Vec<&CatalogEntry> = flat[..supports].to_vec();
    let mut rest: Vec<&CatalogEntry> = CATALOG.iter().filter(|e| !chosen.iter().any(|c| c.name == e.name)).collect();
    rest.shuffle(&mut rng);
    chosen.extend(rest.into_iter().take(n_objects - supports));

    let mut relations = Vec::new();
    let mut on_table: Vec<&str> = Vec::new();
    let (support_objs, others) = chosen.split_at(supports);
    let mut support_iter = support_objs.iter();
    let mut other_iter = others.iter();
    for size in &sizes {
        let mut chain: Vec<&str> = (0..size - 1).map(|_| support_iter.next().unwrap().name).collect();
        chain.push(other_iter.next().unwrap().name);
        on_table.push(chain[0]);
        relations.push(Relation { rel: "on".into(), a: chain[0].into(), b: "table".into() });
        for w in chain.windows(2) {
            relations.push(Relation { rel: "on".into(), a: w[1].into(), b: w[0].into() });
        }
    }
    for e in other_iter {
        on_table.push(e.name);
        relations.push(Relation { rel: "on".into(), a: e.name.into(), b: "table".into() });
    }
    if on_table.len() >= 2 && rng.gen_bool(0.3) {
        let pair: Vec<&&str> = on_table.choose_multiple(&mut rng, 2).collect();
        relations.push(Relation { rel: "front".into(), a: pair[0].to_string(), b: pair[1].to_string() });
    }
    relations.sort();
    let mut objects: Vec<SceneObject> = chosen.iter().map(|e| SceneObject::from(*e)).collect();
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    let mut scene =
        Scene { objects, relations, in_hand: None, seed, stacks: Vec::new(), true_literals: State::default() };
    let truth = Reasoner::new(&scene.domain(&crate::ra_domain()))?;
    scene.close(&truth)?;
    Ok(scene)
}

pub fn gen_profile_scene(seed: u64, profile: Profile) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5ce7e);
    let (n, k) = profile.counts(&mut rng);
    gen_scene(seed, n, k).expect("profile counts are valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Executed(State),
    Failed,
}

/// Executes `action` under the complete axioms. An action that is not
/// executable has no effect; a manipulation failure leaves the state as is
/// and is reported as such.
pub fn execute_true(
    truth: &Reasoner,
    state: &State,
    action: &Action,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Result<Outcome, WorldError> {
    if noise.manipulation_failure_rate > 0.0 && rng.gen_bool(noise.manipulation_failure_rate) {
        return Ok(Outcome::Failed);
    }
    let (ok, _) = truth.legal(action, state)?;
    if !ok {
        let mut s = state.clone();
        s.step += 1;
        return Ok(Outcome::Executed(s));
    }
    Ok(Outcome::Executed(truth.step(state, action)?))
}

/// What the robot perceives: `on`/`front` relations (each independently
/// dropped or relabeled with probability `relation_error_rate`), the hand
/// exactly, and object attributes exactly.
pub fn observe(state: &State, noise: &NoiseModel, rng: &mut impl Rng) -> Vec<Literal> {
    let mut out = Vec::new();
    for l in &state.lits {
        match (l.kind, l.pred.as_str()) {
            (LitKind::Static, _) => out.push(l.clone()),
            (LitKind::Fluent, "in_hand") => out.push(l.clone()),
            (LitKind::Fluent, "obj_rel") if l.positive => {
                let rel = l.key().unwrap_or_default();
                if rel != "on" && rel != "front" {
                    continue;
                }
                if noise.relation_error_rate > 0.0 && rng.gen_bool(noise.relation_error_rate) {
                    if rng.gen_bool(0.5) {
                        let mut swapped = l.clone();
                        let other = if rel == "on" { "front" } else { "on" };
                        swapped.args[0] = crate::kr::Term::c(other);
                        out.push(swapped);
                    }
                } else {
                    out.push(l.clone());
                }
            }
            _ => {}
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneLabels {
    /// Per stack (bottom-to-top chains, then single objects), true if stable.
    pub stable: Vec<bool>,
    pub occluded: BTreeMap<String, bool>,
}

/// Ground-truth stability and occlusion labels.
pub fn label_scene(scene: &Scene) -> SceneLabels {
    let obj = |id: &str| scene.object(id);
    let mut stable = Vec::new();
    for chain in &scene.stacks {
        let ok = chain.windows(2).all(|w| {
            let (below, above) = (obj(&w[0]), obj(&w[1]));
            match (below, above) {
                (Some(b), Some(a)) => b.surface != "irregular" && !(b.size == "small" && a.size == "big"),
                _ => true,
            }
        });
        stable.push(ok);
    }
    let mut occluded = BTreeMap::new();
    for o in &scene.objects {
        let blocked = scene.relations.iter().any(|r| r.rel == "front" && r.b == o.id);
        occluded.insert(o.id.clone(), blocked);
    }
    SceneLabels { stable, occluded }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Observe { step: usize, literals: Vec<String> },
    Act { step: usize, action: String },
    Result { step: usize, outcome: String },
}

/// A scene being acted on: true state, noise, and an event log.
#[derive(Clone, Debug)]
pub struct World {
    pub truth: Reasoner,
    pub scene: Scene,
    pub state: State,
    pub noise: NoiseModel,
    pub log: Vec<Event>,
    rng: ChaCha8Rng,
}

impl World {
    pub fn new(
        scene: Scene,
        truth_domain: &DomainDescription,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self, WorldError> {
        noise.validate()?;
        let truth = Reasoner::new(&scene.domain(truth_domain))?;
        let state = scene.true_literals.clone();
        Ok(World { truth, scene, state, noise, log: Vec::new(), rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn observe(&mut self) -> Vec<Literal> {
        let obs = observe(&self.state, &self.noise, &mut self.rng);
        self.log.push(Event::Observe { step: self.state.step, literals: obs.iter().map(|l| l.to_string()).collect() });
        obs
    }

    pub fn execute(&mut self, action: &Action) -> Result<Outcome, WorldError> {
        let step = self.state.step;
        self.log.push(Event::Act { step, action: action.to_string() });
        let out = execute_true(&self.truth, &self.state, action, &self.noise, &mut self.rng)?;
        match &out {
            Outcome::Executed(s) => {
                self.state = s.clone();
                self.log.push(Event::Result { step, outcome: "executed".into() });
            }
            Outcome::Failed => self.log.push(Event::Result { step, outcome: "failed".into() }),
        }
        Ok(out)
    }

    pub fn log_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.log {
            s.push_str(&serde_json::to_string(e).expect("event serializes"));
            s.push('\n');
        }
        s
    }
}
