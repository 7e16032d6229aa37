mod common;

use common::{gradient_gate, GradientCase, FD_TOLERANCE};

#[test]
fn every_term_matches_central_differences() {
    for (term, worst) in gradient_gate(0..20) {
        assert!(worst <= FD_TOLERANCE, "{term}: worst relative error {worst:e}");
    }
}

#[test]
fn gradients_vanish_where_terms_are_switched_off() {
    let case = GradientCase::new(3, 3, 8);
    let mut config = common::term_configs().remove(0).1;
    config.alpha = 0.0;
    let (value, grads) = case.evaluate(&case.points, &config);
    assert_eq!(value, 0.0);
    assert!(grads.iter().flatten().all(|g| g.norm() == 0.0));
}
