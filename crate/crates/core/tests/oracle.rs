mod common;

use common::{check_against_oracle, enumerate, fixtures, Fixture};

#[test]
fn randomized_fixtures_match_enumeration() {
    for (k, fx) in fixtures(2024, 40).iter().enumerate() {
        if let Err(e) = check_against_oracle(fx, 1e-10) {
            panic!("fixture {k} {fx:?}: {e}");
        }
    }
}

#[test]
fn largest_fixture_shape() {
    // every split of a depth-3 tree holds data, three states, two points each
    let fx = Fixture {
        data: vec![0.05, 0.2, 0.3, 0.55, 0.7, 0.95],
        depth: 3,
        states: 3,
        quad: 2,
        beta: 0.7,
        log10_lo: -1.0,
        log10_hi: 2.0,
        cell_mass: vec![0.125; 8],
        piecewise: None,
    };
    check_against_oracle(&fx, 1e-10).unwrap();
}

#[test]
fn oracle_sanity() {
    // one point: the marginal is the prior mean density, 1 on the unit interval
    let fx = Fixture {
        data: vec![0.3],
        depth: 3,
        states: 2,
        quad: 2,
        beta: 0.0,
        log10_lo: 0.0,
        log10_hi: 1.0,
        cell_mass: vec![0.125; 8],
        piecewise: None,
    };
    assert!(enumerate(&fx, &fx.data).log_marginal.abs() < 1e-14);
    assert_eq!(enumerate(&fx, &[]).log_marginal, 0.0);
}
