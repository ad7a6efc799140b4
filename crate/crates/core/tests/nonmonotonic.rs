mod common;

#[test]
fn contradicting_an_assumption_shrinks_what_follows_from_it() {
    let bad = common::nonmonotonic_suite(10);
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}
