mod common;

use common::adaptive_simpson;
use mmhp_core::diagnostics::{compensators, exp1_quantile, integrated_abs_error, ks_exp1, qq_points};
use mmhp_core::hawkes::hawkes_intensity;
use mmhp_core::rng::stream;
use mmhp_core::simulate::{simulate_mmhp, StopRule};
use mmhp_core::{Generator, HawkesParams, LatentTrajectory, MmhpParams, State};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::Exp1;

fn theta() -> MmhpParams {
    MmhpParams::new(
        0.1,
        HawkesParams::new(0.6, 0.8, 1.2).unwrap(),
        0.5,
        Generator::new(0.1, 0.2).unwrap(),
    )
    .unwrap()
}

/// Modulated intensity integrated piecewise between all breakpoints.
fn quadrature_total(th: &MmhpParams, events: &[f64], traj: &LatentTrajectory, a: f64, b: f64) -> f64 {
    let mut cuts: Vec<f64> = events.iter().chain(traj.jumps()).copied().filter(|&t| t > a && t < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let f = |u: f64| match traj.state_at(u) {
        State::Inactive => th.lambda0(),
        State::Active => hawkes_intensity(th.hawkes(), events, u),
    };
    cuts.windows(2)
        .map(|w| {
            // integrate just inside each piece, where the integrand is smooth
            let eps = 1e-12 * w[1].max(1.0);
            adaptive_simpson(&f, w[0] + eps, w[1] - eps, 1e-14) + 2.0 * eps * f(0.5 * (w[0] + w[1]))
        })
        .sum()
}

#[test]
fn compensators_match_quadrature_on_mixed_paths() {
    let th = theta();
    for r in 0..5 {
        let sim = simulate_mmhp(&th, StopRule::Count(60), &mut stream(61, r)).unwrap();
        let ev = sim.events.times();
        let c = compensators(&th, &sim.events, &sim.trajectory).unwrap();
        assert_eq!(c.len(), ev.len());
        let mut prev = 0.0;
        for (k, &t) in ev.iter().enumerate() {
            let want = quadrature_total(&th, ev, &sim.trajectory, prev, t);
            assert!((c[k] - want).abs() <= 1e-8 * want.max(1e-6), "{r}/{k}: {} vs {want}", c[k]);
            prev = t;
        }
        let total = quadrature_total(&th, ev, &sim.trajectory, 0.0, *ev.last().unwrap());
        let sum: f64 = c.iter().sum();
        assert!((sum - total).abs() <= 1e-10 * total.max(1.0) + 1e-9, "{sum} vs {total}");
        assert!(c.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn ks_calibration_under_the_null() {
    let rejections = (0..200)
        .filter(|&r| {
            let mut rng = stream(62, r);
            let x: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            ks_exp1(&x).unwrap().p_value < 0.05
        })
        .count();
    let rate = rejections as f64 / 200.0;
    assert!((0.02..=0.09).contains(&rate), "{rate}");
}

/// Largest QQ deviation over the middle 90% of points.
fn qq_worst(c: &[f64]) -> f64 {
    let q = qq_points(c).unwrap();
    let n = q.len();
    q[n / 20..n - n / 20].iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn qq_of_true_compensators_is_near_the_diagonal() {
    // the 95% order statistic alone has sd ~0.3 at n = 200, so the bound is
    // checked as a rate over seeded runs
    let th = theta();
    let mut worst: Vec<f64> = (0..50)
        .map(|r| {
            let sim = simulate_mmhp(&th, StopRule::Count(200), &mut stream(63, r)).unwrap();
            qq_worst(&compensators(&th, &sim.events, &sim.trajectory).unwrap())
        })
        .collect();
    worst.sort_by(f64::total_cmp);
    let within = worst.iter().filter(|w| **w <= 0.5).count();
    assert!(within >= 40, "{within}/50");
    assert!(worst[25] <= 0.4, "median {}", worst[25]);
    let exact: Vec<f64> = (0..50).map(|i| exp1_quantile((i as f64 + 0.5) / 50.0)).collect();
    assert!(qq_points(&exact).unwrap().iter().all(|(a, b)| (a - b).abs() <= 1e-12));
}

#[test]
fn time_rescaling_with_the_truth() {
    let th = theta();
    let passes = (0..50)
        .filter(|&r| {
            let sim = simulate_mmhp(&th, StopRule::Count(100), &mut stream(64, r)).unwrap();
            ks_exp1(&compensators(&th, &sim.events, &sim.trajectory).unwrap()).unwrap().p_value > 0.05
        })
        .count();
    assert!(passes >= 45, "{passes}/50");
}

fn path() -> impl Strategy<Value = LatentTrajectory> {
    (any::<bool>(), prop::collection::vec(0.001f64..0.999, 0..10)).prop_map(|(one, mut u)| {
        u.sort_by(f64::total_cmp);
        u.dedup();
        let initial = if one { State::Active } else { State::Inactive };
        LatentTrajectory::new(initial, u.iter().map(|x| x * 10.0).collect(), 10.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iae_matches_riemann_sum(a in path(), b in path()) {
        let exact = integrated_abs_error(&a, &b).unwrap();
        let t: f64 = 10.0;
        let step = 1e-4 * t;
        let n = (t / step).round() as usize;
        let riemann: f64 = (0..n)
            .map(|i| (i as f64 + 0.5) * step)
            .filter(|&u| a.state_at(u) != b.state_at(u))
            .count() as f64 * step;
        prop_assert!((exact - riemann).abs() <= 1e-3 * t, "{exact} vs {riemann}");
        prop_assert_eq!(exact, integrated_abs_error(&b, &a).unwrap());
        prop_assert!((0.0..=t).contains(&exact));
    }
}

#[test]
fn iae_against_constant_estimate() {
    let truth = LatentTrajectory::new(State::Active, vec![2.0, 5.0, 7.5], 10.0).unwrap();
    let zero = LatentTrajectory::new(State::Inactive, vec![], 10.0).unwrap();
    assert!((integrated_abs_error(&truth, &zero).unwrap() - 4.5).abs() < 1e-12);
    let other = LatentTrajectory::new(State::Inactive, vec![], 9.0).unwrap();
    assert!(integrated_abs_error(&truth, &other).is_err());
}

