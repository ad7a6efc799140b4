use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{induce_tree, DecisionTree, Node};
use super::{
    alpha_match, classify_discrepancy, collect_samples, confidence, decay_strengths, extract_candidates,
    validate_and_merge, DiscrepancyKind, Ensemble, Label, LearnError, LearnerConfig, Lifting, Mode, SampleSource,
    TrainingSample,
};
use crate::kr::{
    Action, Axiom, AxiomKind, BodyLit, DomainDescription, History, LearnedAxiom, LitKind, Literal, Signature, State,
    Term,
};
use crate::reasoner::Reasoner;
use crate::world::{gen_profile_scene, in_hand_lit, rel_lit, NoiseModel, Outcome, Profile, World};

/// Runs the cycles of one learning episode for `action_name` and returns
/// the promoted axioms and the trees that were induced.
pub fn learn_for(
    src: &SampleSource,
    action_name: &str,
    mode: Mode,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<(Vec<LearnedAxiom>, Vec<DecisionTree>), LearnError> {
    let mut ens = Ensemble::new(src.agent.axioms.clone());
    let mut trees = Vec::new();
    let mut promoted = Vec::new();
    for c in 0..cfg.cycles_total {
        let samples =
            collect_samples(src, action_name, mode, cfg.n_samples, &cfg.lift_sort, seed.wrapping_add(c as u64 * 7919))?;
        let cut = ((1.0 - cfg.holdout) * samples.len() as f64).round() as usize;
        let (train, hold) = samples.split_at(cut);
        let tree = induce_tree(train, mode, cfg.depth_max);
        let cands = extract_candidates(&tree, cfg);
        promoted = validate_and_merge(&cands, hold, &mut ens, cfg);
        trees.push(tree);
    }
    Ok((promoted, trees))
}

/// Summary of a full learning run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LearningRun {
    pub learned: Vec<LearnedAxiom>,
    pub trees: usize,
    pub actions: usize,
    pub episodes: usize,
    /// Each learning trigger: step counter, action name, mode.
    pub triggers: Vec<(usize, String, Mode)>,
    pub log: Vec<String>,
}

fn random_goal(names: &[String], rng: &mut ChaCha8Rng) -> Vec<Literal> {
    let a = names.choose(rng).unwrap();
    if rng.gen_bool(0.4) {
        return vec![in_hand_lit(a, true)];
    }
    let mut targets: Vec<&str> = names.iter().map(|s| s.as_str()).filter(|b| *b != a).collect();
    targets.push("table");
    vec![rel_lit("on", a, targets.choose(rng).unwrap())]
}

/// The agent starts from `truth` without `hidden`, acts in random scenes,
/// and learns whenever what it sees contradicts what it expected. Stops
/// once no discrepancy has appeared for `quiescence` actions, the tree
/// budget is spent, or `max_actions` actions have been executed.
pub fn run_learning(
    truth: &DomainDescription,
    hidden: &[&str],
    cfg: &LearnerConfig,
    noise: NoiseModel,
    seed: u64,
) -> Result<LearningRun, LearnError> {
    let base = truth.without(hidden);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = LearningRun::default();
    let mut quiet = 0;
    let mut next_id = 1;
    let max_episodes = cfg.max_actions * 4;
    while run.actions < cfg.max_actions && quiet < cfg.quiescence && run.episodes < max_episodes {
        if run.trees + cfg.cycles_total > cfg.tree_cap {
            break;
        }
        run.episodes += 1;
        let agent_domain =
            base.with_axioms(run.learned.iter().map(|l| l.axiom.clone())).expect("learned axioms were validated");
        let scene = gen_profile_scene(rng.gen(), Profile::Simulated);
        let names: Vec<String> = scene.objects.iter().map(|o| o.id.clone()).collect();
        let mut world = World::new(scene, truth, noise, rng.gen())?;
        let agent = Reasoner::new(&world.scene.domain(&agent_domain))?;
        let history = History {
            observations: world.observe().into_iter().map(|l| (l, 0)).collect(),
            defaults: agent_domain.defaults.clone(),
            ..Default::default()
        };
        let Ok(mut belief) = agent.initial_state(&history) else { continue };
        let goal = random_goal(&names, &mut rng);
        let mut queue: Vec<Action> = match agent.plan(&belief, &goal, 6) {
            Ok(p) if !p.is_empty() => p[0].plan.clone(),
            _ => Vec::new(),
        };
        if queue.is_empty() {
            // nothing to aim for: explore a few believed-legal actions
            let mut s = belief.clone();
            for _ in 0..3 {
                let Ok(legal) = agent.legal_actions(&s) else { break };
                let Some(a) = legal.choose(&mut rng).cloned() else { break };
                let Ok(next) = agent.step(&s, &a) else { break };
                queue.push(a);
                s = next;
            }
        }
        let mut used = BTreeSet::new();
        let mut trigger: Option<(Action, Mode)> = None;
        for a in queue {
            if let Ok(f) = agent.firing(&belief, Some(&a)) {
                used.extend(f);
            }
            let Ok(expected) = agent.step(&belief, &a) else { break };
            run.actions += 1;
            if world.execute(&a)? == Outcome::Failed {
                break;
            }
            let obs = world.observe();
            let Ok(observed) = agent.closure(obs.clone()) else { break };
            let sig = agent.signature();
            let lifting = Lifting::new(sig, &a);
            let relevant = |d: &Vec<(DiscrepancyKind, Literal)>| -> BTreeSet<(DiscrepancyKind, Literal)> {
                d.iter().filter(|(_, l)| lifting.lift(sig, l, &cfg.lift_sort).is_some()).cloned().collect()
            };
            let mut disc = relevant(&classify_discrepancy(&belief, &expected, &observed, |l| sig.is_inertial(l)));
            if !disc.is_empty() {
                // a second look filters out one-off perception errors
                let again = agent.closure(world.observe());
                let second = again
                    .map(|o| relevant(&classify_discrepancy(&belief, &expected, &o, |l| sig.is_inertial(l))))
                    .unwrap_or_default();
                disc = disc.intersection(&second).cloned().collect();
            }
            if disc.is_empty() {
                quiet += 1;
                belief = agent.absorb(&expected, &obs).unwrap_or(observed);
                if run.actions >= cfg.max_actions || quiet >= cfg.quiescence {
                    break;
                }
                continue;
            }
            quiet = 0;
            let mode = if disc.iter().any(|(k, _)| *k == DiscrepancyKind::MissingCausalLaw) {
                Mode::Causal
            } else {
                Mode::Exec
            };
            trigger = Some((a, mode));
            break;
        }
        let old = std::mem::take(&mut run.learned);
        run.learned = decay_strengths(old, &used, cfg);
        let Some((a, mode)) = trigger else { continue };
        run.triggers.push((run.actions, a.name.clone(), mode));
        let src = SampleSource { agent: &agent_domain, truth, profile: Profile::Simulated, noise };
        let (promoted, trees) = learn_for(&src, &a.name, mode, cfg, rng.gen())?;
        run.trees += trees.len();
        run.log.push(format!("{} {:?} after {} actions: {} axioms", a, mode, run.actions, promoted.len()));
        for mut p in promoted {
            if run.learned.iter().any(|l| alpha_match(&l.axiom, &p.axiom, true)) {
                continue;
            }
            run.learned.retain(|l| !alpha_match(&p.axiom, &l.axiom, true));
            p.axiom.id = format!("{}{}", if p.axiom.kind == AxiomKind::CausalLaw { "lc" } else { "lx" }, next_id);
            next_id += 1;
            let resolved = agent_domain.signature.resolve_axiom(&p.axiom);
            if let Ok(ax) = resolved {
                run.log.push(format!("  learned {ax}"));
                p.axiom = ax;
                run.learned.push(p);
            }
        }
    }
    Ok(run)
}

/// A labeled (focus, partner) pair from a scene, for constraint learning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintExample {
    pub state: State,
    pub focus: String,
    pub partner: String,
    pub label: bool,
}

impl ConstraintExample {
    /// Every pair satisfying `context` in `state`, labeled by whether
    /// `head` holds for it. `context` and `head` use `O1` for the focus and
    /// `O2` for the partner.
    pub fn from_state(state: &State, context: &Literal, head: &Literal) -> Vec<ConstraintExample> {
        let objects: BTreeSet<&str> = state
            .lits
            .iter()
            .filter(|l| l.pred == "obj_size")
            .filter_map(|l| l.args.first().and_then(|t| t.as_const()))
            .collect();
        let mut out = Vec::new();
        for &f in &objects {
            for &p in &objects {
                if f == p {
                    continue;
                }
                let b: BTreeMap<String, String> =
                    [("O1".to_string(), f.to_string()), ("O2".to_string(), p.to_string())].into();
                if state.contains(&context.apply(&b)) {
                    out.push(ConstraintExample {
                        state: state.clone(),
                        focus: f.into(),
                        partner: p.into(),
                        label: state.contains(&head.apply(&b)),
                    });
                }
            }
        }
        out
    }

    fn sample(&self, sig: &Signature) -> TrainingSample {
        let lift = |c: &str| -> Option<Term> {
            if c == self.focus {
                Some(Term::v("O1"))
            } else if c == self.partner {
                Some(Term::v("O2"))
            } else {
                None
            }
        };
        let mut grounding = Vec::new();
        for l in &self.state.lits {
            // attributes and relations only; defined fluents are what is being learned
            let keep = l.kind == LitKind::Static
                || (l.kind == LitKind::Fluent && sig.schema(&l.pred).is_some_and(|(_, s)| s.inertial));
            if !keep {
                continue;
            }
            let mut hit = false;
            let mut ok = true;
            let args: Vec<Term> = l
                .args
                .iter()
                .map(|t| {
                    let c = t.name();
                    match lift(c) {
                        Some(v) => {
                            hit = true;
                            v
                        }
                        None => {
                            if self.state.lits.iter().any(|x| x.pred == "obj_size" && x.args[0].name() == c) {
                                ok = false;
                            }
                            t.clone()
                        }
                    }
                })
                .collect();
            if hit && ok {
                grounding.push((Literal { args, ..l.clone() }, l.clone()));
            }
        }
        TrainingSample {
            features: grounding.iter().map(|(l, _)| l.clone()).collect(),
            grounding,
            action: Literal::fact("none", &[]),
            bindings: [("O1".to_string(), self.focus.clone()), ("O2".to_string(), self.partner.clone())].into(),
            label: Label::Exec(self.label),
        }
    }
}

/// Learns state constraints with head `head` from labeled pairs. Every
/// learned body starts with `context`, the relation that made the pair.
pub fn learn_constraints(
    sig: &Signature,
    examples: &[ConstraintExample],
    head: &Literal,
    context: &Literal,
    cfg: &LearnerConfig,
) -> Vec<LearnedAxiom> {
    let samples: Vec<TrainingSample> = examples.iter().map(|e| e.sample(sig)).collect();
    let cut = ((1.0 - cfg.holdout) * samples.len() as f64).round() as usize;
    let (train, hold) = samples.split_at(cut);
    let tree = induce_tree(train, Mode::Exec, cfg.depth_max);
    let mut out: Vec<LearnedAxiom> = Vec::new();
    for (path, leaf) in tree.paths() {
        let Node::Leaf { counts, n } = leaf else { continue };
        let yes = counts.get(&Label::Exec(true)).copied().unwrap_or(0);
        if *n == 0 || (yes as f64) / (*n as f64) < cfg.purity_min || yes < cfg.support_min {
            continue;
        }
        let mut body = vec![BodyLit::pos(context.clone())];
        body.extend(path.iter().filter(|(_, p)| *p).map(|(l, _)| BodyLit::pos(l.clone())));
        let ax =
            Axiom { id: format!("ls{}", out.len() + 1), kind: AxiomKind::StateConstraint, head: head.clone(), body };
        let as_exec = Axiom { kind: AxiomKind::ExecutabilityCondition, ..ax.clone() };
        let (v, covered) = confidence(&as_exec, hold);
        if covered > 0 && v < cfg.validation_min {
            continue;
        }
        out.push(LearnedAxiom::fresh(ax, yes));
    }
    out
}
