mod common;

#[test]
fn plans_are_minimal_and_complete() {
    let (solvable, bad) = common::check_planner();
    assert!(bad.is_empty(), "{}", bad.join("\n"));
    assert!(solvable >= 20, "only {solvable} solvable pairs");
}
