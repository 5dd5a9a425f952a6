use fracshape_toy::*;
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = ChargeConfig> {
    (1usize..=3, 2usize..=5, 0.05f64..0.95)
        .prop_flat_map(|(n, d, s)| {
            (
                Just(n),
                Just(s),
                prop::collection::vec(0.0f64..1.0, n * d),
                prop::collection::vec(-1.0f64..1.0, d),
            )
        })
        .prop_filter_map("well separated, nonzero masses", |(n, s, x, m)| {
            if m.iter().map(|v| v * v).sum::<f64>() < 1e-3 {
                return None;
            }
            let c = ChargeConfig::normalized(n, s, x, m).ok()?;
            (c.min_distance() > 0.2).then_some(c)
        })
}

fn shifted(c: &ChargeConfig, k: usize, t: f64) -> ChargeConfig {
    let mut x = c.positions().to_vec();
    x[k] += t;
    c.moved(x).unwrap()
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |a, b| a.max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn gradient_matches_central_differences(c in config_strategy()) {
        let g = gradient(&c);
        let step = 1e-6;
        let fd: Vec<f64> = (0..g.len())
            .map(|k| (energy(&shifted(&c, k, step)) - energy(&shifted(&c, k, -step))) / (2.0 * step))
            .collect();
        let scale = max_abs(g.iter().copied()).max(1e-300);
        let err = max_abs(g.iter().zip(&fd).map(|(a, b)| a - b));
        prop_assert!(err / scale <= 1e-6, "relative error {}", err / scale);
    }

    #[test]
    fn hessian_matches_differences_of_gradient(c in config_strategy()) {
        let h = hessian(&c);
        let step = 1e-4;
        let dim = c.positions().len();
        let scale = max_abs(h.iter().copied()).max(1e-300);
        for k in 0..dim {
            let gp = gradient(&shifted(&c, k, step));
            let gm = gradient(&shifted(&c, k, -step));
            for r in 0..dim {
                let fd = (gp[r] - gm[r]) / (2.0 * step);
                prop_assert!((fd - h[(r, k)]).abs() / scale <= 1e-5);
            }
        }
    }

    #[test]
    fn euler_identity(c in config_strategy()) {
        let e = energy(&c);
        let r = euler_residual(&c);
        prop_assert!(r.abs() <= 1e-9 * e.abs().max(1e-12), "residual {r} for E = {e}");
    }

    #[test]
    fn hessian_symmetric_with_translation_null_space(c in config_strategy()) {
        let h = hessian(&c);
        let n = c.n();
        let d = c.len();
        let scale = h.norm();
        prop_assert!((&h - h.transpose()).norm() <= 1e-12 * scale);
        for k in 0..n {
            let t = nalgebra::DVector::from_fn(n * d, |i, _| if i % n == k { 1.0 } else { 0.0 });
            prop_assert!((&h * t).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn rigid_motion_and_scaling(c in config_strategy(), shift in -3.0f64..3.0, angle in 0.0f64..6.3) {
        let e = energy(&c);
        let n = c.n();
        let moved: Vec<f64> = c.positions().iter().map(|x| x + shift).collect();
        prop_assert!((energy(&c.moved(moved).unwrap()) - e).abs() <= 1e-12 * e.abs().max(1.0));
        if n >= 2 {
            let mut rotated = c.positions().to_vec();
            for i in 0..c.len() {
                let (x, y) = (rotated[i * n], rotated[i * n + 1]);
                rotated[i * n] = angle.cos() * x - angle.sin() * y;
                rotated[i * n + 1] = angle.sin() * x + angle.cos() * y;
            }
            prop_assert!((energy(&c.moved(rotated).unwrap()) - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
        let scaled: Vec<f64> = c.positions().iter().map(|x| 2.0 * x).collect();
        let expected = 2f64.powf(-c.p()) * e;
        prop_assert!((energy(&c.moved(scaled).unwrap()) - expected).abs() <= 1e-12 * e.abs());
    }

    #[test]
    fn gradient_sums_to_zero(c in config_strategy()) {
        let g = gradient(&c);
        let n = c.n();
        for k in 0..n {
            let sum: f64 = g.iter().skip(k).step_by(n).sum();
            prop_assert!(sum.abs() <= 1e-12 * max_abs(g.iter().copied()).max(1.0));
        }
    }
}

#[test]
fn pair_trace_vanishes_only_for_harmonic_exponent() {
    let z = [0.3, -0.4, 1.2];
    let r = 1.3;
    for n in 1..=3usize {
        for p in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let h = pair_hessian(1.0, p, &z[..n]);
            let rn: f64 = z[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((h.trace() - pair_trace(n, p, rn)).abs() < 1e-12);
            let harmonic = (p - (n as f64 - 2.0)).abs() < 1e-15;
            assert_eq!(pair_trace(n, p, r).abs() < 1e-14, harmonic, "n = {n}, p = {p}");
        }
    }
}

#[test]
fn stationary_triple_leaves_stationarity_under_noise() {
    use rand::Rng;
    for n in [1usize, 2] {
        let c = collinear_stationary(n, 0.5).unwrap();
        let mut rng = fracshape_toy::dynamics::trial_rng(11, n);
        let noisy: Vec<f64> = c.positions().iter().map(|x| x + 1e-3 * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        let run = descend(&c.moved(noisy).unwrap(), 10_000, StepRule::default()).unwrap();
        assert_ne!(run.report.classification, Classification::StationaryStable);
    }
}

#[test]
fn two_charge_sweep_has_no_stable_configuration() {
    for (n, s) in [(1, 0.5), (2, 0.3), (3, 0.8)] {
        let summary = conjecture_sweep(SweepParams { d: 2, n, s, trials: 200, seed: 5, max_steps: 10_000 }).unwrap();
        assert_eq!(summary.counts["stationary-stable"], 0);
        assert_eq!(summary.counts.values().sum::<usize>(), 200);
        assert!(summary.stable_finds.is_empty());
    }
}

#[test]
fn sweeps_are_reproducible() {
    let params = SweepParams { d: 3, n: 2, s: 0.5, trials: 16, seed: 99, max_steps: 2_000 };
    assert_eq!(conjecture_sweep(params).unwrap(), conjecture_sweep(params).unwrap());
}
