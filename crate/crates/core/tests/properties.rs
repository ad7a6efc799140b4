mod common;

use proptest::prelude::*;
use xplain::kr::{ground_axiom, unify, Action, Bindings, LitKind, Literal, Term};
use xplain::learner::{is_local, relevant_literals, Lifting};
use xplain::world::{gen_profile_scene, Profile};

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::c),
        prop::sample::select(vec!["X", "Y", "Z"]).prop_map(Term::v),
    ]
}

fn pattern() -> impl Strategy<Value = Literal> {
    (prop::collection::vec(term(), 1..4), any::<bool>())
        .prop_map(|(args, positive)| Literal::new(LitKind::Fluent, "p", args, positive))
}

fn ground_lit() -> impl Strategy<Value = Literal> {
    (prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 1..4), any::<bool>())
        .prop_map(|(args, positive)| Literal::fluent("p", &args, positive))
}

proptest! {
    #[test]
    fn unifiers_are_sound(p in pattern(), g in ground_lit()) {
        if let Some(b) = unify(&p, &g) {
            prop_assert_eq!(p.apply(&b), g);
        }
    }

    #[test]
    fn instances_always_unify(
        p in pattern(),
        vals in prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 3),
    ) {
        let b: Bindings = ["X", "Y", "Z"].iter().zip(&vals).map(|(v, c)| (v.to_string(), c.to_string())).collect();
        let g = p.apply(&b);
        let u = unify(&p, &g).expect("an instance unifies with its pattern");
        prop_assert_eq!(p.apply(&u), g);
    }

    #[test]
    fn grounding_size_matches_enumeration(n in 1usize..5) {
        let objs: Vec<String> = (0..n).map(|i| format!("ob{i}")).collect();
        let d = xplain::ra_domain().with_objects(objs.iter().map(|o| ("object", o.as_str())));
        for ax in &d.axioms {
            let reference = common::ground(&d.signature, ax).len();
            prop_assert_eq!(ground_axiom(ax, &d.signature).unwrap().len(), reference, "{}", ax.id);
        }
    }

    #[test]
    fn lifting_round_trips(seed in 0u64..200, i in 0usize..8, j in 0usize..8, put in any::<bool>()) {
        let scene = gen_profile_scene(seed, Profile::Simulated);
        let sig = scene.domain(&xplain::ra_domain()).signature;
        let names = scene.names();
        let o = names[i % names.len()];
        let a = if put {
            let l = if j % 3 == 0 { "table" } else { names[j % names.len()] };
            Action::new("putdown", &["rob1", o, l])
        } else {
            Action::new("pickup", &["rob1", o])
        };
        let lifting = Lifting::new(&sig, &a);
        prop_assert_eq!(Action::from_literal(&lifting.action.apply(&lifting.bindings)), Some(a.clone()));
        for (lifted, ground) in relevant_literals(&sig, &scene.true_literals, &a, "object") {
            let mut b = lifting.bindings.clone();
            for (t, g) in lifted.args.iter().zip(&ground.args) {
                if let Term::Var { name, .. } = t {
                    let prev = b.insert(name.clone(), g.name().to_string());
                    if !is_local(name) {
                        prop_assert_eq!(prev.as_deref(), Some(g.name()));
                    }
                }
            }
            prop_assert_eq!(lifted.apply(&b), ground);
        }
    }
}
