//! Every example must run to completion.

#[allow(dead_code)]
#[path = "../examples/lie_brackets.rs"]
mod lie_brackets;

#[allow(dead_code)]
#[path = "../examples/privileged_coordinates.rs"]
mod privileged_coordinates;

#[allow(dead_code)]
#[path = "../examples/nilpotent_approximation.rs"]
mod nilpotent_approximation;

#[allow(dead_code)]
#[path = "../examples/bracket_motion.rs"]
mod bracket_motion;

#[allow(dead_code)]
#[path = "../examples/compare_models.rs"]
mod compare_models;

#[allow(dead_code)]
#[path = "../examples/expression_dsl.rs"]
mod expression_dsl;

#[test]
fn lie_brackets_runs() {
    lie_brackets::run_example().unwrap();
}

#[test]
fn privileged_coordinates_runs() {
    privileged_coordinates::run_example().unwrap();
}

#[test]
fn nilpotent_approximation_runs() {
    nilpotent_approximation::run_example().unwrap();
}

#[test]
fn bracket_motion_runs() {
    bracket_motion::run_example().unwrap();
}

#[test]
fn compare_models_runs() {
    let dir = tempfile::tempdir().unwrap();
    compare_models::run_example_in(dir.path()).unwrap();
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0);
}

#[test]
fn expression_dsl_runs() {
    expression_dsl::run_example().unwrap();
}
