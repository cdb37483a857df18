use std::time::Instant;

use nalgebra::DMatrix;
use psfourier::hyperbolic::ModelParams;
use psfourier::schottky::{
    build_loxodromic, symmetric_group, word_count, Ball, Letter, SchottkyGenerator, SchottkyGroup, Word, WordIter,
};
use psfourier::Error;

fn reference() -> SchottkyGroup {
    symmetric_group(1, 2, 2.0).unwrap().validated().unwrap()
}

#[test]
fn build_loxodromic_standard_axis_is_the_flow() {
    let p = ModelParams::with_dim(2).unwrap();
    let att = psfourier::BoundaryPoint::infinity(2);
    let rep = p.chart_to_boundary(&[0.0, 0.0]).unwrap();
    let g = build_loxodromic(&p, &att, &rep, 1.3, &DMatrix::identity(2, 2)).unwrap();
    assert!(g.max_abs_diff(&p.geodesic_flow(1.3)) < 1e-14);
}

#[test]
fn build_loxodromic_fixes_endpoints() {
    let p = ModelParams::with_dim(2).unwrap();
    let att = p.chart_to_boundary(&[0.3, -1.2]).unwrap();
    let rep = p.chart_to_boundary(&[2.0, 0.5]).unwrap();
    let m = psfourier::hyperbolic::rotation2(0.7);
    let g = build_loxodromic(&p, &att, &rep, 0.9, &m).unwrap();
    assert!((g.spectral_radius() - 0.9f64.exp()).abs() < 1e-9);
    assert!(g.act_boundary(&att).approx_eq(&att, 1e-9));
    assert!(g.act_boundary(&rep).approx_eq(&rep, 1e-9));
    assert!(g.invariant_residual() < 1e-20);
    assert!(matches!(
        build_loxodromic(&p, &att, &att, 1.0, &m),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn word_counts_match_closed_form() {
    for k in 1..=3 {
        for n in 0..=8 {
            assert_eq!(WordIter::new(k, n).count() as u64, word_count(k, n), "k={k} n={n}");
        }
    }
    assert_eq!(word_count(2, 2), 17);
    for w in WordIter::new(3, 4) {
        for pair in w.letters().windows(2) {
            assert_ne!(pair[1], pair[0].inverse());
        }
    }
}

#[test]
fn reference_group_passes_ping_pong() {
    let g = symmetric_group(1, 2, 2.0).unwrap();
    let r = g.verify_ping_pong();
    assert!(r.passed, "{r:?}");
    assert!(r.worst_margin > 0.0);
    assert!(g.zariski_heuristic());
}

#[test]
fn higher_dimensional_symmetric_groups_validate() {
    for (d, k) in [(2, 2), (2, 3), (3, 4)] {
        let g = symmetric_group(d, k, 2.5).unwrap();
        let r = g.verify_ping_pong();
        assert!(r.passed, "d={d} k={k}: {r:?}");
    }
}

#[test]
fn cyclic_group_passes() {
    let g = symmetric_group(1, 1, 2.0).unwrap().validated().unwrap();
    let s = g.limit_set_sample(3).unwrap();
    assert_eq!(s.points.len(), 2);
    let a = g.letter_attracting(Letter::new(0, false));
    let r = g.letter_attracting(Letter::new(0, true));
    assert!((s.points[0][0] - a[0]).abs() < 1e-9);
    assert!((s.points[1][0] - r[0]).abs() < 1e-9);
}

#[test]
fn overlapping_balls_are_rejected_with_names() {
    let g = symmetric_group(1, 2, 2.0).unwrap();
    let mut gens = g.gens().to_vec();
    gens[1].ball_plus = Ball::new(gens[0].ball_plus.center.clone(), 0.5).unwrap();
    match SchottkyGroup::new(*g.params(), gens) {
        Err(Error::Configuration(msg)) => {
            assert!(msg.contains("ball_plus(0)") && msg.contains("ball_plus(1)"), "{msg}")
        }
        other => panic!("expected configuration error, got {other:?}"),
    }
}

#[test]
fn failed_inclusion_reports_witness() {
    let g = symmetric_group(1, 2, 2.0).unwrap();
    let mut gens = g.gens().to_vec();
    // shrink the attracting ball so the image of the complement sticks out
    let b = &gens[0].ball_plus;
    gens[0] = SchottkyGenerator::new(
        gens[0].elem.clone(),
        Ball::new(b.center.clone(), b.radius * 0.2).unwrap(),
        gens[0].ball_minus.clone(),
        1e-9,
    )
    .unwrap();
    let bad = SchottkyGroup::new(*g.params(), gens).unwrap();
    let r = bad.verify_ping_pong();
    assert!(!r.passed);
    assert!(r.generators[0].witness.is_some());
    assert!(bad.validated().is_err());
}

#[test]
fn word_to_element_basics() {
    let g = reference();
    let p = g.params();
    assert_eq!(g.word_to_element(&Word::empty()), p.identity());
    let w = Word::new(vec![
        Letter::new(0, false),
        Letter::new(1, false),
        Letter::new(1, false),
        Letter::new(0, true),
        Letter::new(1, true),
    ])
    .unwrap();
    let a = g.word_to_element(&w);
    let ainv = g.word_to_element(&w.inverse());
    assert!(a.compose(&ainv).max_abs_diff(&p.identity()) < 1e-9);
    let (u, v) = w.letters().split_at(2);
    let left = g.word_to_element(&Word::new(u.to_vec()).unwrap());
    let right = g.word_to_element(&Word::new(v.to_vec()).unwrap());
    assert!(left.compose(&right).max_abs_diff(&a) < 1e-9 * a.matrix().amax());
}

#[test]
fn limit_points_nest_in_ping_pong_balls() {
    let g = reference();
    let s1 = g.limit_set_sample(1).unwrap();
    assert_eq!(s1.points.len(), 4);
    for (p, w) in s1.points.iter().zip(&s1.words) {
        assert!(g.letter_ball(w.letters()[0]).contains(p));
    }
    for depth in 1..=6 {
        let next = g.limit_set_sample(depth + 1).unwrap();
        for (p, w) in next.points.iter().zip(&next.words) {
            let prefix = Word::new(w.letters()[..depth].to_vec()).unwrap();
            let ball = g.word_ball(&prefix).unwrap();
            assert!(ball.contains(p), "depth {depth} word {w}");
        }
    }
}

#[test]
fn unvalidated_group_refuses_sampling() {
    let g = symmetric_group(1, 2, 2.0).unwrap();
    assert_eq!(g.limit_set_sample(2).unwrap_err(), Error::NotValidated);
}

#[test]
fn orbit_is_discrete() {
    let g = reference();
    let o = g.params().basepoint();
    let m = g.discreteness_witness(8, &o);
    assert!(m > 10.0 * g.params().tol, "{m}");
}

#[test]
fn long_words_keep_the_invariant() {
    let g = reference();
    let t = Instant::now();
    let r = g.max_invariant_residual(12);
    assert!(r <= 1e-9, "residual {r:.3e}");
    eprintln!("length-12 residual {r:.3e} in {:?}", t.elapsed());
}
