use super::*;
use crate::kr::{AxiomKind, BodyLit, LearnedAxiom};
use crate::parser::parse_domain;
use crate::world::{gen_profile_scene, in_hand_lit, rel_lit, Relation, Scene, SceneObject, CATALOG};

fn ra() -> DomainDescription {
    crate::ra_domain()
}

fn state(lits: Vec<Literal>) -> State {
    State::new(0, lits)
}

fn axiom(src: &str) -> Axiom {
    let d = ra();
    let text = format!(
        "{}\n{src}\n",
        crate::parser::serialize_domain(&DomainDescription { axioms: vec![], defaults: vec![], ..d })
    );
    parse_domain(&text).unwrap().axioms.pop().unwrap()
}

fn fixed_scene(objs: &[&str], on: &[(&str, &str)]) -> Scene {
    let objects = objs.iter().map(|n| SceneObject::from(CATALOG.iter().find(|e| e.name == *n).unwrap())).collect();
    let relations = on.iter().map(|(a, b)| Relation { rel: "on".into(), a: a.to_string(), b: b.to_string() }).collect();
    let mut s = Scene { objects, relations, in_hand: None, seed: 0, stacks: vec![], true_literals: State::default() };
    let truth = Reasoner::new(&s.domain(&ra())).unwrap();
    s.close(&truth).unwrap();
    s
}

#[test]
fn missing_effect_is_executability_evidence() {
    let before = state(vec![]);
    let expected = state(vec![in_hand_lit("o1", true)]);
    let observed = state(vec![in_hand_lit("o1", false)]);
    let d = classify_discrepancy(&before, &expected, &observed, |_| true);
    assert!(d.contains(&(DiscrepancyKind::MissingExecutability, in_hand_lit("o1", true))));
}

#[test]
fn unexpected_effect_is_causal_evidence() {
    // holding o1, the robot puts down o2; o1 is unexpectedly no longer held
    let before = state(vec![in_hand_lit("o1", true)]);
    let expected = state(vec![in_hand_lit("o1", true), rel_lit("on", "o2", "table")]);
    let observed = state(vec![in_hand_lit("o1", false), rel_lit("on", "o2", "table")]);
    let d = classify_discrepancy(&before, &expected, &observed, |_| true);
    assert_eq!(d, vec![(DiscrepancyKind::MissingCausalLaw, in_hand_lit("o1", false))]);
}

#[test]
fn agreement_is_no_evidence() {
    let s = state(vec![in_hand_lit("o1", true)]);
    assert!(classify_discrepancy(&state(vec![]), &s, &s, |_| true).is_empty());
}

fn with_objects(objs: &[&str]) -> Signature {
    ra().with_objects(objs.iter().map(|o| ("object", *o))).signature
}

#[test]
fn lifting_replaces_action_constants() {
    let sig = with_objects(&["ob1", "ob2"]);
    let s = state(vec![rel_lit("below", "ob1", "ob2"), Literal::fact("obj_size", &["ob2", "big"])]);
    let a = Action::new("pickup", &["rob1", "ob1"]);
    let rel = relevant_literals(&sig, &s, &a, "object");
    assert_eq!(rel.len(), 1);
    assert_eq!(rel[0].0.to_string(), "obj_rel(below, O1, V1)");
    assert_eq!(Lifting::new(&sig, &a).action.to_string(), "pickup(R1, O1)");
}

#[test]
fn unrelated_state_lifts_to_nothing() {
    let sig = with_objects(&["ob1", "ob2", "ob3"]);
    let s = state(vec![rel_lit("on", "ob2", "ob3")]);
    assert!(relevant_literals(&sig, &s, &Action::new("pickup", &["rob1", "ob1"]), "object").is_empty());
}

#[test]
fn lifting_round_trips() {
    let scene = gen_profile_scene(11, Profile::Simulated);
    let sig = scene.domain(&ra()).signature;
    let names = scene.names();
    let a = Action::new("putdown", &["rob1", names[0], names[1]]);
    let lifting = Lifting::new(&sig, &a);
    let rel = relevant_literals(&sig, &scene.true_literals, &a, "object");
    assert!(!rel.is_empty());
    for (lifted, ground) in &rel {
        // substituting action bindings, then the literal's own locals, gives back the ground literal
        let mut b = lifting.bindings.clone();
        for (t, g) in lifted.args.iter().zip(&ground.args) {
            if let Term::Var { name, .. } = t {
                let prev = b.insert(name.clone(), g.name().to_string());
                if !is_local(name) {
                    assert_eq!(prev.as_deref(), Some(g.name()), "action variable {name} rebound");
                }
            }
        }
        assert_eq!(&lifted.apply(&b), ground);
        assert!(lifted.vars().iter().any(|v| !is_local(v)));
    }
}

fn census_source() -> (DomainDescription, DomainDescription) {
    (ra().without(&["e1"]), ra())
}

fn pickup_samples(n: usize, seed: u64) -> Vec<TrainingSample> {
    let (agent, truth) = census_source();
    let src = SampleSource { agent: &agent, truth: &truth, profile: Profile::Simulated, noise: NoiseModel::NONE };
    collect_samples(&src, "pickup", Mode::Exec, n, "object", seed).unwrap()
}

fn below_feature() -> Literal {
    Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("below"), Term::v("O1"), Term::v("V1")], true)
}

#[test]
fn buried_targets_are_labeled_inconsistent() {
    let samples = pickup_samples(200, 3);
    for s in &samples {
        assert_eq!(s.label, Label::Exec(s.has(&below_feature())));
    }
    assert!(samples.iter().any(|s| s.label == Label::Exec(true)));
    assert!(samples.iter().any(|s| s.label == Label::Exec(false)));
}

#[test]
fn zero_samples_is_empty() {
    assert!(pickup_samples(0, 1).is_empty());
}

/// Fraction of (scene, uniformly chosen object) draws where something
/// rests on the object, counted straight from the generator.
fn buried_fraction(scenes: u64) -> f64 {
    let mut total = 0.0;
    for seed in 0..scenes {
        let s = gen_profile_scene(seed * 31 + 7, Profile::Simulated);
        let buried = s.objects.iter().filter(|o| s.relations.iter().any(|r| r.rel == "on" && r.b == o.id)).count();
        total += buried as f64 / s.objects.len() as f64;
    }
    total / scenes as f64
}

#[test]
fn label_mix_matches_generator_census() {
    let samples = pickup_samples(500, 17);
    let observed = samples.iter().filter(|s| s.label == Label::Exec(true)).count() as f64 / 500.0;
    let expected = buried_fraction(4000);
    assert!((observed - expected).abs() <= 0.05, "observed {observed}, census {expected}");
}

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

#[test]
fn first_split_is_the_below_condition() {
    let samples = pickup_samples(300, 5);
    let tree = induce_tree(&samples, Mode::Exec, 4);
    let Node::Split { feature, present, absent } = &tree.root else { panic!("no split") };
    assert_eq!(feature, &below_feature());
    assert!(matches!(**present, Node::Leaf { .. }));
    assert!(matches!(**absent, Node::Leaf { .. }));
    // a perfectly separating feature gains the full label entropy
    let p = samples.iter().filter(|s| s.label == Label::Exec(true)).count() as f64 / samples.len() as f64;
    let refs: Vec<&TrainingSample> = samples.iter().collect();
    assert!((tree::gain(&refs, feature) - h2(p)).abs() < 1e-9);
}

fn toy(features: &[&str], label: bool) -> TrainingSample {
    TrainingSample {
        features: features.iter().map(|f| Literal::new(LitKind::Fluent, f, vec![Term::v("O1")], true)).collect(),
        grounding: vec![],
        action: Literal::new(LitKind::Action, "pickup", vec![Term::v("R1"), Term::v("O1")], true),
        bindings: Bindings::new(),
        label: Label::Exec(label),
    }
}

#[test]
fn separable_dataset_gives_depth_one() {
    let data: Vec<_> = (0..10).map(|i| toy(if i % 2 == 0 { &["f"] } else { &["g"] }, i % 2 == 0)).collect();
    let t = induce_tree(&data, Mode::Exec, 4);
    assert_eq!(t.depth(), 1);
    for (_, leaf) in t.paths() {
        let Node::Leaf { counts, .. } = leaf else { unreachable!() };
        assert_eq!(counts.len(), 1);
    }
}

#[test]
fn single_label_gives_single_leaf() {
    let data: Vec<_> = (0..6).map(|i| toy(if i % 2 == 0 { &["f"] } else { &[] }, true)).collect();
    assert_eq!(induce_tree(&data, Mode::Exec, 4).depth(), 0);
}

#[test]
fn leaf_supports_sum_to_dataset_size() {
    let samples = pickup_samples(120, 9);
    let t = induce_tree(&samples, Mode::Exec, 4);
    let total: usize = t.paths().iter().map(|(_, l)| if let Node::Leaf { n, .. } = l { *n } else { 0 }).sum();
    assert_eq!(total, samples.len());
    for (path, _) in t.paths() {
        let feats: BTreeSet<_> = path.iter().map(|(f, _)| f).collect();
        assert_eq!(feats.len(), path.len());
    }
}

#[test]
fn below_leaf_becomes_the_executability_condition() {
    let samples = pickup_samples(200, 21);
    let tree = induce_tree(&samples, Mode::Exec, 4);
    let cands = extract_candidates(&tree, &LearnerConfig::default());
    assert_eq!(cands.len(), 1);
    assert_eq!(cands[0].axiom.kind, AxiomKind::ExecutabilityCondition);
    assert_eq!(cands[0].purity, 1.0);
    assert!(alpha_match(&cands[0].axiom, ra().axiom("e1").unwrap(), false), "{}", cands[0].axiom);
}

#[test]
fn thin_leaves_are_not_extracted() {
    let mut data: Vec<_> = (0..2).map(|_| toy(&["f"], true)).collect();
    data.extend((0..10).map(|_| toy(&[], false)));
    let t = induce_tree(&data, Mode::Exec, 4);
    assert!(extract_candidates(&t, &LearnerConfig::default()).is_empty());
    let relaxed = LearnerConfig { support_min: 2, ..Default::default() };
    assert_eq!(extract_candidates(&t, &relaxed).len(), 1);
}

#[test]
fn putdown_tree_yields_the_on_effect() {
    let agent = ra().without(&["c1", "c2"]);
    let truth = ra();
    let src = SampleSource { agent: &agent, truth: &truth, profile: Profile::Simulated, noise: NoiseModel::NONE };
    let samples = collect_samples(&src, "putdown", Mode::Causal, 150, "object", 4).unwrap();
    let tree = induce_tree(&samples, Mode::Causal, 4);
    let cands = extract_candidates(&tree, &LearnerConfig::default());
    let on = Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("on"), Term::v("O1"), Term::v("O2")], true);
    assert!(cands.iter().any(|c| c.axiom.kind == AxiomKind::CausalLaw && c.axiom.head == on));
    assert!(cands.iter().any(|c| alpha_match(&c.axiom, ra().axiom("c2").unwrap(), false)));
}

fn putdown_lit() -> Literal {
    Literal::new(LitKind::Action, "putdown", vec![Term::v("R1"), Term::v("O1"), Term::v("O2")], true)
}

fn causal_sample(features: Vec<Literal>, effect: bool) -> TrainingSample {
    let on = Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("on"), Term::v("O1"), Term::v("O2")], true);
    TrainingSample {
        features: features.into_iter().collect(),
        grounding: vec![],
        action: putdown_lit(),
        bindings: Bindings::new(),
        label: Label::Causal(if effect { [on].into() } else { BTreeSet::new() }),
    }
}

#[test]
fn over_specified_causal_law_is_generalized() {
    // putdown causes on(O1, O2) if -in_hand(R1, V1): the extra condition
    // is irrelevant to whether the effect appears
    let not_held = Literal::new(LitKind::Fluent, "in_hand", vec![Term::v("R1"), Term::v("V1")], false);
    let on = Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("on"), Term::v("O1"), Term::v("O2")], true);
    let specific = Axiom {
        id: String::new(),
        kind: AxiomKind::CausalLaw,
        head: on.clone(),
        body: vec![BodyLit::pos(putdown_lit()), BodyLit::pos(not_held.clone())],
    };
    let holdout: Vec<_> =
        (0..30).map(|i| causal_sample(if i % 3 == 0 { vec![] } else { vec![not_held.clone()] }, true)).collect();
    let cfg = LearnerConfig { cycles_required: 1, ..Default::default() };
    let cand = CandidateAxiom { axiom: specific, purity: 1.0, support: 20, validation: 0.0 };
    let out = validate_and_merge(&[cand], &holdout, &mut Ensemble::default(), &cfg);
    assert_eq!(out.len(), 1);
    assert!(alpha_match(&out[0].axiom, ra().axiom("c1").unwrap(), false), "{}", out[0].axiom);
}

#[test]
fn one_cycle_of_five_is_not_enough() {
    let e1 = Axiom { id: String::new(), ..ra().axiom("e1").unwrap().clone() };
    let blocked = Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("below"), Term::v("O"), Term::v("O2")], true);
    let holdout: Vec<_> = (0..10)
        .map(|i| TrainingSample {
            features: if i < 5 { [normalize_local(&blocked)].into() } else { BTreeSet::new() },
            label: Label::Exec(i < 5),
            ..toy(&[], false)
        })
        .collect();
    let cand = CandidateAxiom { axiom: e1, purity: 1.0, support: 5, validation: 0.0 };
    let cfg = LearnerConfig::default();
    let mut ens = Ensemble::default();
    assert!(validate_and_merge(std::slice::from_ref(&cand), &holdout, &mut ens, &cfg).is_empty());
    for _ in 0..4 {
        validate_and_merge(&[], &holdout, &mut ens, &cfg);
    }
    assert_eq!(ens.cycles_run, 5);
    assert_eq!(ens.entries.values().next().unwrap().cycles, 1);
}

#[test]
fn general_candidate_subsumes_specific_one() {
    let surf = axiom("impossible putdown(R, O, L) if obj_surface(L, irregular)");
    let spec = axiom("impossible putdown(R, O, L) if obj_surface(L, irregular), obj_size(L, small)");
    let f1 = Literal::new(LitKind::Static, "obj_surface", vec![Term::v("L"), Term::c("irregular")], true);
    let f2 = Literal::new(LitKind::Static, "obj_size", vec![Term::v("L"), Term::c("small")], true);
    let holdout: Vec<_> = (0..20)
        .map(|i| TrainingSample {
            features: match i % 4 {
                0 => [f1.clone(), f2.clone()].into(),
                1 => [f1.clone()].into(),
                2 => [f2.clone()].into(),
                _ => BTreeSet::new(),
            },
            label: Label::Exec(i % 4 < 2),
            ..toy(&[], false)
        })
        .collect();
    assert_eq!(confidence(&surf, &holdout).0, confidence(&spec, &holdout).0);
    let cfg = LearnerConfig { cycles_required: 1, ..Default::default() };
    let c = |a: &Axiom| CandidateAxiom { axiom: a.clone(), purity: 1.0, support: 5, validation: 0.0 };
    let out = validate_and_merge(&[c(&surf), c(&spec)], &holdout, &mut Ensemble::default(), &cfg);
    assert_eq!(out.len(), 1);
    assert!(alpha_match(&out[0].axiom, &surf, false));
}

fn learned(id: &str) -> LearnedAxiom {
    LearnedAxiom::fresh(Axiom { id: id.into(), ..ra().axiom("e1").unwrap().clone() }, 10)
}

#[test]
fn unused_axiom_is_pruned_after_seven_episodes() {
    let cfg = LearnerConfig::default();
    let mut xs = vec![learned("a")];
    for k in 1..=7 {
        xs = decay_strengths(xs, &BTreeSet::new(), &cfg);
        if k < 7 {
            assert_eq!(xs.len(), 1, "pruned early at {k}");
            assert!((xs[0].strength - 0.9f64.powi(k)).abs() < 1e-12);
        }
    }
    assert!(xs.is_empty());
}

#[test]
fn used_axiom_stays_at_full_strength() {
    let cfg = LearnerConfig::default();
    let used: BTreeSet<String> = ["a".to_string()].into();
    let mut xs = vec![learned("a")];
    assert_eq!(xs[0].strength, 1.0);
    for _ in 0..50 {
        xs = decay_strengths(xs, &used, &cfg);
    }
    assert_eq!(xs[0].strength, 1.0);
}

type Layout<'a> = (&'a [&'a str], &'a [(&'a str, &'a str)]);

fn stacked_scenes() -> Vec<Scene> {
    let layouts: &[Layout] = &[
        (&["red_block", "tennis_ball", "pot"], &[("pot", "table"), ("red_block", "pot"), ("tennis_ball", "table")]),
        (&["blue_block", "mug", "pig"], &[("mug", "table"), ("blue_block", "mug"), ("pig", "table")]),
        (
            &["white_block", "green_can", "red_can"],
            &[("white_block", "table"), ("green_can", "white_block"), ("red_can", "green_can")],
        ),
        (
            &["pitcher", "green_block", "apple"],
            &[("green_block", "table"), ("pitcher", "green_block"), ("apple", "table")],
        ),
        (
            &["orange_block", "yellow_block", "duck"],
            &[("yellow_block", "table"), ("orange_block", "yellow_block"), ("duck", "orange_block")],
        ),
        (
            &["crackers_box", "red_block", "orange"],
            &[("red_block", "table"), ("crackers_box", "red_block"), ("orange", "table")],
        ),
        (
            &["red_can", "capsicum", "blue_block"],
            &[("capsicum", "table"), ("red_can", "capsicum"), ("blue_block", "table")],
        ),
        (
            &["green_can", "mustard_bottle", "pitcher"],
            &[("mustard_bottle", "table"), ("green_can", "mustard_bottle"), ("pitcher", "table")],
        ),
        (
            &["white_block", "blue_block", "red_block"],
            &[("white_block", "table"), ("blue_block", "white_block"), ("red_block", "blue_block")],
        ),
        (
            &["pitcher", "crackers_box", "green_can"],
            &[("pitcher", "table"), ("crackers_box", "pitcher"), ("green_can", "crackers_box")],
        ),
        (
            &["orange_block", "red_can", "mug"],
            &[("orange_block", "table"), ("red_can", "orange_block"), ("mug", "red_can")],
        ),
        (
            &["red_block", "yellow_block", "pig"],
            &[("red_block", "table"), ("yellow_block", "red_block"), ("pig", "yellow_block")],
        ),
        (
            &["blue_block", "white_block", "tennis_ball"],
            &[("blue_block", "table"), ("white_block", "blue_block"), ("tennis_ball", "white_block")],
        ),
        (
            &["pot", "green_block", "yellow_ball"],
            &[("green_block", "table"), ("pot", "green_block"), ("yellow_ball", "pot")],
        ),
    ];
    let mut out = Vec::new();
    for _ in 0..3 {
        for (objs, on) in layouts {
            out.push(fixed_scene(objs, on));
        }
    }
    out
}

fn sig_all() -> Signature {
    with_objects(&CATALOG.iter().map(|e| e.name).collect::<Vec<_>>())
}

fn v(n: &str) -> Term {
    Term::v(n)
}

#[test]
fn irregular_support_instability_is_learned() {
    let context = Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("on"), v("O1"), v("O2")], true);
    let head = Literal::new(LitKind::Fluent, "stable", vec![v("O1")], false);
    let ex: Vec<_> = stacked_scenes()
        .iter()
        .flat_map(|s| ConstraintExample::from_state(&s.true_literals, &context, &head))
        .collect();
    let cfg = LearnerConfig { holdout: 0.0, support_min: 3, ..Default::default() };
    let out = learn_constraints(&sig_all(), &ex, &head, &context, &cfg);
    let s8 = ra().axiom("s8").unwrap().clone();
    assert!(
        out.iter().any(|l| alpha_match(&l.axiom, &s8, false)),
        "{:?}",
        out.iter().map(|l| l.axiom.to_string()).collect::<Vec<_>>()
    );
}

#[test]
fn small_base_rule_is_learned() {
    let context = Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("below"), v("O2"), v("O1")], true);
    let head = Literal::new(LitKind::Fluent, "small_base", vec![v("O1")], true);
    let ex: Vec<_> = stacked_scenes()
        .iter()
        .flat_map(|s| ConstraintExample::from_state(&s.true_literals, &context, &head))
        .collect();
    let cfg = LearnerConfig { holdout: 0.0, support_min: 3, ..Default::default() };
    let out = learn_constraints(&sig_all(), &ex, &head, &context, &cfg);
    let s6 = ra().axiom("s6").unwrap().clone();
    assert!(
        out.iter().any(|l| alpha_match(&l.axiom, &s6, false)),
        "{:?}",
        out.iter().map(|l| l.axiom.to_string()).collect::<Vec<_>>()
    );
}

#[test]
fn all_stable_data_gives_no_constraint() {
    let s = fixed_scene(
        &["white_block", "blue_block", "red_block"],
        &[("white_block", "table"), ("blue_block", "white_block"), ("red_block", "blue_block")],
    );
    let context = Literal::new(LitKind::Fluent, "obj_rel", vec![Term::c("on"), v("O1"), v("O2")], true);
    let head = Literal::new(LitKind::Fluent, "stable", vec![v("O1")], false);
    let ex: Vec<_> = (0..10).flat_map(|_| ConstraintExample::from_state(&s.true_literals, &context, &head)).collect();
    assert!(ex.iter().all(|e| !e.label));
    assert!(learn_constraints(&sig_all(), &ex, &head, &context, &LearnerConfig::default()).is_empty());
}
