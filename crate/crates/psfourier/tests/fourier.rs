use num_complex::Complex64;
use proptest::prelude::*;
use psfourier::fourier::{
    decay_scan, default_directions, exceptional_set_measure, fourier_transform, grid_values, l2_average,
    transform_line, transform_many, FrequencySpec, RadiusLadder, SampleMode,
};
use psfourier::measure::{synthetic, AtomicMeasure};
use psfourier::Error;

const PI: f64 = std::f64::consts::PI;

fn discrete_sinc(n: usize, xi: f64) -> Complex64 {
    let phase = Complex64::from_polar(1.0, PI * xi);
    if xi == 0.0 {
        return phase;
    }
    phase * ((PI * xi).sin() / (n as f64 * (PI * xi / n as f64).sin()))
}

fn shell_spec(d: usize, r0: f64, count: usize) -> FrequencySpec {
    let ladder = RadiusLadder {
        r0,
        ratio: 2f64.sqrt(),
        count,
    };
    FrequencySpec::new(
        SampleMode::Shell { radial_samples: 32 },
        default_directions(d),
        ladder,
        0.0,
    )
    .unwrap()
}

#[test]
fn segment_matches_sinc() {
    let mu = synthetic::uniform_segment(1000);
    for xi in [0.0, 0.25, 1.0, 3.7, 10.5, 57.3, 100.0] {
        let got = fourier_transform(&mu, &[xi]);
        assert!((got - discrete_sinc(1000, xi)).norm() < 1e-12, "xi={xi}");
        let cont = if xi == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, PI * xi) * ((PI * xi).sin() / (PI * xi))
        };
        assert!((got - cont).norm() < 1e-3, "xi={xi}");
    }
}

#[test]
fn line_evaluation_matches_sinc() {
    let mu = synthetic::uniform_segment(1000);
    let vals = transform_line(&mu, &[0.0], &[0.05], 4000);
    for (k, v) in vals.iter().enumerate() {
        assert!((v - discrete_sinc(1000, 0.05 * k as f64)).norm() < 1e-11, "k={k}");
    }
}

#[test]
fn segment_decays_at_rate_one() {
    let mu = synthetic::uniform_segment(1000);
    let rep = decay_scan(&mu, &shell_spec(1, 4.0, 15)).unwrap();
    assert!((rep.cap - 500.0).abs() < 1e-6);
    assert_eq!(rep.capped_shells, 1);
    let kappa = rep.kappa.unwrap();
    assert!((kappa - 1.0).abs() < 0.15, "kappa {kappa}");
}

#[test]
fn point_mass_does_not_decay() {
    let mu = AtomicMeasure::point_mass(&[0.3]);
    let rep = decay_scan(&mu, &shell_spec(1, 4.0, 15)).unwrap();
    assert!(rep.cap.is_infinite());
    assert!(rep.kappa.unwrap().abs() < 1e-12);
    for (_, m) in &rep.shell_max {
        assert!((m - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ray_and_grid_modes() {
    let mu = synthetic::uniform_segment(400);
    let ladder = RadiusLadder {
        r0: 2.0,
        ratio: 1.5,
        count: 10,
    };
    let ray = FrequencySpec::new(SampleMode::Ray, default_directions(1), ladder, 0.0).unwrap();
    let rep = decay_scan(&mu, &ray).unwrap();
    assert_eq!(rep.samples.len(), 2 * rep.shell_max.len());
    let grid = FrequencySpec::new(SampleMode::Grid, default_directions(1), ladder, 0.01).unwrap();
    let rep = decay_scan(&mu, &grid).unwrap();
    for s in &rep.samples {
        let r = s.radius();
        assert!(r >= 2.0 && r < 2.0 * 1.5f64.powi(rep.shell_max.len() as i32) + 1e-9);
    }
    assert!(rep.kappa.unwrap() > 0.5);
}

#[test]
fn too_few_shells_rejected() {
    let mu = synthetic::uniform_segment(100);
    let ladder = RadiusLadder {
        r0: 2.0,
        ratio: 2.0,
        count: 5,
    };
    let spec = FrequencySpec::new(SampleMode::Ray, default_directions(1), ladder, 0.0).unwrap();
    assert!(matches!(decay_scan(&mu, &spec), Err(Error::Validation(_))));
    // only the first few shells fit under 0.5 / eta = 50
    let spec = shell_spec(1, 16.0, 12);
    assert!(matches!(decay_scan(&mu, &spec), Err(Error::InsufficientResolution(_))));
}

#[test]
fn bad_specs_rejected() {
    let ladder = RadiusLadder {
        r0: 1.0,
        ratio: 1.0,
        count: 10,
    };
    assert!(FrequencySpec::new(SampleMode::Ray, default_directions(1), ladder, 0.0).is_err());
    let ladder = RadiusLadder {
        r0: 1.0,
        ratio: 2.0,
        count: 10,
    };
    assert!(FrequencySpec::new(SampleMode::Ray, vec![vec![0.5]], ladder, 0.0).is_err());
    assert!(FrequencySpec::new(SampleMode::Grid, default_directions(1), ladder, 0.0).is_err());
}

#[test]
fn default_directions_are_unit() {
    for d in 1..=5 {
        let dirs = default_directions(d);
        assert!(dirs.len() >= 2);
        for u in &dirs {
            assert_eq!(u.len(), d);
            assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn segment_l2_average_matches_integral() {
    // int_{-R}^{R} sinc^2 -> 1 for the unit segment
    let mu = synthetic::uniform_segment(1000);
    let a = l2_average(&mu, 200.0, 0.01).unwrap();
    assert!(!a.coarse);
    assert!((a.estimate - 1.0).abs() < 0.01, "{}", a.estimate);
    assert!(l2_average(&mu, 10.0, 0.5).is_err());
    let coarse = l2_average(&synthetic::uniform_segment(10).translated(&[0.0]), 10.0, 0.25).unwrap();
    assert!(!coarse.coarse);
    let wide = AtomicMeasure::new(1, vec![0.0, 10.0], vec![0.5, 0.5]).unwrap();
    assert!(l2_average(&wide, 10.0, 0.25).unwrap().coarse);
}

#[test]
fn two_dimensional_grid_uses_full_lattice() {
    let mu = AtomicMeasure::point_mass(&[0.2, 0.7]);
    let g = grid_values(&mu, 1.0, 0.25).unwrap();
    // lattice points of (Z/4)^2 inside the unit disk
    let count = g.values.len();
    let mut expect = 0;
    for i in -4i32..=4 {
        for j in -4i32..=4 {
            if (i * i + j * j) as f64 <= 16.0 {
                expect += 1;
            }
        }
    }
    assert_eq!(count, expect);
    assert!((g.l2_within(1.0) - expect as f64 / 16.0).abs() < 1e-12);
}

#[test]
fn exceptional_set_of_segment_is_small() {
    let mu = synthetic::uniform_segment(1000);
    let e = exceptional_set_measure(&mu, 64.0, 0.5, 0.01).unwrap();
    // |sinc| > 1/8 only near the origin
    assert!(e.lebesgue < 6.0, "{}", e.lebesgue);
    assert!(e.fraction < 0.05);
    assert!(exceptional_set_measure(&mu, 64.0, 1.5, 0.01).is_err());
    assert!(exceptional_set_measure(&mu, 2.0, 0.5, 0.01).is_err());
}

#[test]
fn batch_matches_single() {
    let mu = synthetic::uniform_square(500, 3);
    let freqs: Vec<Vec<f64>> = (0..40).map(|k| vec![k as f64 * 0.7, 3.0 - k as f64]).collect();
    let batch = transform_many(&mu, &freqs);
    for (f, b) in freqs.iter().zip(&batch) {
        assert_eq!(fourier_transform(&mu, f), *b);
    }
}

fn arb_measure() -> impl Strategy<Value = AtomicMeasure> {
    (1usize..=3).prop_flat_map(|d| {
        prop::collection::vec((prop::collection::vec(-2.0f64..2.0, d), 0.01f64..1.0), 1..40).prop_map(move |atoms| {
            let rows: Vec<Vec<f64>> = atoms.iter().map(|a| a.0.clone()).collect();
            let w: Vec<f64> = atoms.iter().map(|a| a.1).collect();
            AtomicMeasure::from_rows(d, &rows, w).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn transform_is_bounded_and_hermitian(mu in arb_measure(), seed in prop::collection::vec(-50.0f64..50.0, 3)) {
        let d = mu.d();
        let xi = &seed[..d];
        let z = fourier_transform(&mu, xi);
        prop_assert!(z.norm() <= 1.0 + 1e-12);
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        let w = fourier_transform(&mu, &neg);
        prop_assert!((w - z.conj()).norm() < 1e-12);
        let zero = fourier_transform(&mu, &vec![0.0; d]);
        prop_assert!((zero - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn translation_multiplies_by_phase(mu in arb_measure(), seed in prop::collection::vec(-20.0f64..20.0, 6)) {
        let d = mu.d();
        let xi = &seed[..d];
        let shift: Vec<f64> = seed[3..3 + d].iter().map(|s| s / 10.0).collect();
        let moved = mu.translated(&shift);
        let phase: f64 = xi.iter().zip(&shift).map(|(a, b)| a * b).sum();
        let expect = fourier_transform(&mu, xi) * Complex64::from_polar(1.0, 2.0 * PI * phase);
        prop_assert!((fourier_transform(&moved, xi) - expect).norm() < 1e-10);
    }

    #[test]
    fn line_matches_direct(mu in arb_measure(), seed in prop::collection::vec(-5.0f64..5.0, 6), n in 1usize..200) {
        let d = mu.d();
        let start = &seed[..d];
        let step = &seed[3..3 + d];
        let line = transform_line(&mu, start, step, n);
        for (k, z) in line.iter().enumerate() {
            let xi: Vec<f64> = start.iter().zip(step).map(|(a, b)| a + k as f64 * b).collect();
            prop_assert!((z - fourier_transform(&mu, &xi)).norm() < 1e-11);
        }
    }
}
