use super::*;
use crate::parser::{parse_goal, parse_query};

struct Run {
    domain: DomainDescription,
    history: History,
    traj: BeliefTrajectory,
    goal: Vec<Literal>,
}

/// Plans for `goal` in a bundled scene and executes the first plan in
/// belief, observing only the initial state.
fn run(scene: &str, goal: &str) -> Run {
    let scene = crate::bundled_scene(scene).unwrap();
    let domain = scene.domain(&crate::ra_domain());
    let r = Reasoner::new(&domain).unwrap();
    let mut history = scene.history(&domain);
    let goal = parse_goal(goal, &domain.signature).unwrap();
    let s0 = r.initial_state(&history).unwrap();
    let plan = r.plan(&s0, &goal, 10).unwrap().remove(0).plan;
    history.happened = plan.into_iter().enumerate().map(|(i, a)| (a, i)).collect();
    let traj = r.trajectory(&history).unwrap();
    Run { domain, history, traj, goal }
}

impl Run {
    fn ask(&self, dialect: &str, q: &str) -> String {
        let v = VocabTable::bundled(dialect).unwrap();
        let query = parse_query(q, &v, &self.domain.signature).unwrap();
        Analyzer::new(&self.domain, &self.traj, &self.goal, &v)
            .answer(&query)
            .map(|a| a.text)
            .unwrap_or_else(|e| e.to_string())
    }
}

fn tower() -> Run {
    run("tower", "goal obj_rel(on, pitcher, red_block)")
}

#[test]
fn tower_plan_description() {
    assert_eq!(
        tower().ask("exec", "Please describe the plan."),
        "I picked up the green can. I put the green can on the table. I picked up the white block. \
         I put the white block on the green can. I picked up the pitcher. I put the pitcher on the red block."
    );
}

#[test]
fn tower_why_action() {
    assert_eq!(
        tower().ask("exec", "Why did you pick up the green can at step 0?"),
        "Because I had to pick up the white block, and it was below the green can."
    );
}

#[test]
fn tower_why_not_without_step() {
    assert_eq!(
        tower().ask("exec", "Why did you not put white block on the mug?"),
        "Because the mug has irregular surface."
    );
}

#[test]
fn tower_why_belief_observed() {
    assert_eq!(
        tower().ask("exec", "Why did you believe that the white block was below the green can in the initial state?"),
        "Because I observed the white block below the green can at step zero."
    );
}

#[test]
fn blocked_pickup_renders_the_observation() {
    assert_eq!(
        tower().ask("exec", "Why did you not pick white block at step 0?"),
        "Because I observed the green can on the white block at step 0."
    );
}

#[test]
fn blocked_pickup_after_the_plan() {
    let t = tower();
    assert_eq!(
        t.ask("exec", "Why did you not pick up green can at step 5?"),
        "Because white block was on the green can."
    );
    assert_eq!(
        t.ask("exec", "Why did you believe the white block was on the green can?"),
        "Because I put the white block on the green can at step 4."
    );
}

#[test]
fn toys_analyzer_items() {
    let t = run("toys", "goal in_hand(rob1, orange_block)");
    assert_eq!(
        t.ask("analyzer", "Why did you pick up the blue block at time step 0?"),
        "I had to pick up the orange block, and the orange block was below the blue block"
    );
    assert_eq!(
        t.ask("analyzer", "Why did you not put the blue cube on the tennis ball at time step 1?"),
        "Because the tennis ball has an irregular surface"
    );
}

#[test]
fn small_base_instability() {
    let t = run("small_base", "goal in_hand(rob1, ob1)");
    assert_eq!(
        t.ask("analyzer", "Why did you believe ob1 was unstable at step 0?"),
        "Because object ob2 is below object ob1, ob2 is small, and ob1 is big"
    );
}

#[test]
fn opening_dialogue() {
    let t = run("toys", "goal obj_rel(on, yellow_ball, orange_block)");
    assert_eq!(
        t.ask("intro", "Why do you want to pick up the blue block first?"),
        "I have to put the ball on the orange block, and the blue block is on the orange block"
    );
    assert_eq!(t.ask("intro", "Why did you not pick up the pig?"), "Because the pig is not related to the goal");
}

#[test]
fn errors_and_fallbacks() {
    let t = tower();
    let v = VocabTable::bundled("exec").unwrap();
    let a = Analyzer::new(&t.domain, &t.traj, &t.goal, &v);
    let gc = Action::new("pickup", &["rob1", "green_can"]);
    assert!(matches!(a.why_not_action(&gc, Some(0)), Err(AnalyzeError::ActionWasExecuted { .. })));
    assert!(matches!(a.why_action(&gc, 1), Err(AnalyzeError::NotInPlan { .. })));
    let never = Literal::fluent("obj_rel", &["on", "mug", "pitcher"], true);
    assert!(matches!(a.why_belief(&never, Some(0)), Err(AnalyzeError::UnknownBelief { .. })));
    // the last action has no later action to enable
    let last = Action::new("putdown", &["rob1", "pitcher", "red_block"]);
    assert_eq!(a.why_action(&last, 5).unwrap().clauses, vec![Clause::Direct(last.clone())]);
}

#[test]
fn empty_plan_is_trivial() {
    let t = run("tower", "goal obj_rel(on, red_block, table)");
    assert!(t.traj.occurrences.is_empty());
    assert_eq!(t.ask("exec", "describe the plan"), "The goal was already satisfied.");
    let v = VocabTable::bundled("exec").unwrap();
    let q = parse_query("describe the plan", &v, &t.domain.signature).unwrap();
    let o = oracle_answer(&q, &t.domain, &t.history, &t.goal, &v).unwrap();
    assert_eq!(o.text, "The goal was already satisfied.");
}

#[test]
fn oracle_agrees_with_complete_agent() {
    let t = tower();
    let v = VocabTable::bundled("exec").unwrap();
    let a = Analyzer::new(&t.domain, &t.traj, &t.goal, &v);
    for q in [
        "Please describe the plan.",
        "Why did you pick up the green can at step 0?",
        "Why did you not put white block on the mug?",
        "Why did you believe the white block was on the green can?",
    ] {
        let q = parse_query(q, &v, &t.domain.signature).unwrap();
        assert_eq!(a.answer(&q).unwrap(), oracle_answer(&q, &t.domain, &t.history, &t.goal, &v).unwrap());
    }
}

#[test]
fn missing_causal_law_loses_the_explanation() {
    let t = tower();
    let v = VocabTable::bundled("exec").unwrap();
    let weak = t.domain.without(&["c1"]);
    let traj = Reasoner::new(&weak).unwrap().trajectory(&t.history).unwrap();
    let q = parse_query("Why did you believe the white block was on the green can at step 6?", &v, &t.domain.signature)
        .unwrap();
    let agent = Analyzer::new(&weak, &traj, &t.goal, &v).answer(&q);
    let oracle = oracle_answer(&q, &t.domain, &t.history, &t.goal, &v).unwrap();
    assert!(!oracle.literals.is_empty());
    assert!(agent.map(|a| a.literals != oracle.literals).unwrap_or(true));
}

#[test]
fn answer_literals_hold_at_their_steps() {
    let t = tower();
    let v = VocabTable::bundled("exec").unwrap();
    let a = Analyzer::new(&t.domain, &t.traj, &t.goal, &v);
    for (act, s) in &t.traj.occurrences {
        for (l, i) in a.why_action(act, *s).unwrap().literals {
            match Action::from_literal(&l) {
                Some(x) => assert!(t.traj.occurred(&x, i)),
                None => assert!(t.traj.holds(&l, i), "{l}@{i}"),
            }
        }
    }
}

#[test]
fn transcript_round_trip() {
    let text = transcript([("Why?", "Because."), ("And?", "So.")]);
    assert_eq!(text, "Q: Why?\nA: Because.\nQ: And?\nA: So.\n");
    assert_eq!(parse_transcript(&text), vec![("Why?".into(), "Because.".into()), ("And?".into(), "So.".into())]);
}
