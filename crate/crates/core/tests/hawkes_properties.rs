mod common;

use common::{adaptive_simpson, rel_err};
use mmhp_core::hawkes::{fit_baseline, hawkes_compensator, hawkes_intensity, hawkes_loglik, BaselineFit, BaselineModel};
use mmhp_core::rng::stream;
use mmhp_core::simulate::{simulate_fixed_trajectory, MmhpParams};
use mmhp_core::{EventSequence, Generator, HawkesParams, LatentTrajectory, State};
use proptest::prelude::*;

fn hawkes() -> impl Strategy<Value = HawkesParams> {
    (0.1f64..3.0, 0.0f64..2.0, 0.2f64..4.0).prop_map(|(l, a, b)| HawkesParams::new(l, a, b).unwrap())
}

fn history() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 0..12).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

/// Events of a Hawkes process on `[0, T]` (an always-active chain).
fn simulate_hawkes(p: HawkesParams, horizon: f64, seed: u64) -> EventSequence {
    let theta = MmhpParams::new(p.lambda1() * 0.5, p, 0.5, Generator::new(1.0, 1.0).unwrap()).unwrap();
    let traj = LatentTrajectory::new(State::Active, vec![], horizon).unwrap();
    simulate_fixed_trajectory(&theta, &traj, &mut stream(seed, 0)).unwrap().0
}

/// Integral of the intensity with the kernel discontinuities as breakpoints.
fn quadrature_compensator(p: &HawkesParams, hist: &[f64], a: f64, b: f64) -> f64 {
    let mut cuts = vec![a];
    cuts.extend(hist.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    let f = |u: f64| hawkes_intensity(p, hist, u);
    cuts.windows(2)
        // evaluate strictly inside each piece so the left event is counted
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let eps = 1e-13 * hi.max(1.0);
            adaptive_simpson(&f, lo + eps, hi, 1e-13) + eps * f(lo + eps)
        })
        .sum()
}

proptest! {
    #[test]
    fn compensator_matches_quadrature(p in hawkes(), hist in history(), a in 0.0f64..8.0, w in 0.0f64..4.0) {
        let b = a + w;
        let exact = hawkes_compensator(&p, &hist, a, b).unwrap();
        let quad = quadrature_compensator(&p, &hist, a, b);
        prop_assert!((exact - quad).abs() <= 1e-8 * exact.max(1e-3), "{exact} vs {quad}");
    }

    #[test]
    fn compensator_is_additive_and_monotone(p in hawkes(), hist in history(), a in 0.0f64..5.0, x in 0.0f64..3.0, y in 0.0f64..3.0) {
        let (b, c) = (a + x, a + x + y);
        let ac = hawkes_compensator(&p, &hist, a, c).unwrap();
        let ab = hawkes_compensator(&p, &hist, a, b).unwrap();
        let bc = hawkes_compensator(&p, &hist, b, c).unwrap();
        prop_assert!((ac - ab - bc).abs() <= 1e-10 * ac.max(1.0));
        prop_assert!(ab <= ac + 1e-15);
    }

    #[test]
    fn intensity_jumps_by_alpha(p in hawkes(), hist in history()) {
        for &t in &hist {
            let h = 1e-10;
            let jump = hawkes_intensity(&p, &hist, t + h) - hawkes_intensity(&p, &hist, t);
            prop_assert!((jump - p.alpha()).abs() <= 1e-9 * (1.0 + p.alpha()), "{jump}");
        }
    }

    #[test]
    fn loglik_matches_direct_evaluation(p in hawkes(), hist in history(), extra in 0.0f64..3.0) {
        let horizon = hist.last().copied().unwrap_or(1.0) + extra;
        let seq = EventSequence::new(hist.clone(), horizon).unwrap();
        let direct: f64 = hist.iter().map(|&t| hawkes_intensity(&p, &hist, t).ln()).sum::<f64>()
            - quadrature_compensator(&p, &hist, 0.0, horizon);
        let ll = hawkes_loglik(&p, &seq);
        prop_assert!(rel_err(ll, direct) <= 1e-8 || (ll - direct).abs() <= 1e-10, "{ll} vs {direct}");
    }
}

#[test]
fn recursive_intensity_form() {
    let p = HawkesParams::new(0.5, 0.8, 1.0).unwrap();
    let hist = [1.0, 1.5];
    // A(1) = 0, A(2) = e^{-0.5}(1 + 0); lambda(2) = l + a e^{-0.5}(1 + A(2))
    let a2 = (-0.5f64).exp();
    let want = 0.5 + 0.8 * (-0.5f64).exp() * (1.0 + a2);
    assert!(rel_err(hawkes_intensity(&p, &hist, 2.0), want) <= 1e-12);
}

#[test]
fn poisson_data_gives_weak_excitation() {
    let p = HawkesParams::new(1.0, 0.0, 1.0).unwrap();
    let seq = simulate_hawkes(p, 300.0, 21);
    let pois = fit_baseline(BaselineModel::Poisson, &seq).unwrap();
    let fit = fit_baseline(BaselineModel::Hawkes, &seq).unwrap();
    let h = fit.as_hawkes();
    assert!(h.branching_ratio() < 0.15, "{h:?}");
    assert!(fit.loglik() >= pois.loglik() - 1e-6);
    assert!(fit.loglik() - pois.loglik() < 2.0, "{} vs {}", fit.loglik(), pois.loglik());
}

#[test]
fn hawkes_mle_within_three_standard_errors() {
    let truth = HawkesParams::new(0.5, 0.8, 1.0).unwrap();
    // stationary rate 2.5, so T = 200 gives M near 500
    let seq = simulate_hawkes(truth, 200.0, 22);
    assert!((350..700).contains(&seq.len()), "{}", seq.len());
    let BaselineFit::Hawkes { params, .. } = fit_baseline(BaselineModel::Hawkes, &seq).unwrap() else {
        panic!("expected a Hawkes fit")
    };
    let x = [params.lambda1(), params.alpha(), params.beta()];
    let ll = |v: [f64; 3]| hawkes_loglik(&HawkesParams::new(v[0], v[1], v[2]).unwrap(), &seq);
    // observed information by central second differences
    let mut info = [[0.0; 3]; 3];
    let h = [1e-4 * x[0], 1e-4 * x[1], 1e-4 * x[2]];
    for i in 0..3 {
        for j in 0..3 {
            let at = |si: f64, sj: f64| {
                let mut v = x;
                v[i] += si * h[i];
                v[j] += sj * h[j];
                ll(v)
            };
            info[i][j] = -(at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
        }
    }
    let cov = invert3(info);
    let want = [truth.lambda1(), truth.alpha(), truth.beta()];
    for k in 0..3 {
        let se = cov[k][k].sqrt();
        assert!(se.is_finite() && se > 0.0);
        assert!((x[k] - want[k]).abs() < 3.0 * se, "param {k}: {} vs {} (se {se})", x[k], want[k]);
    }
}

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

#[test]
fn baseline_errors_and_closed_forms() {
    let seq = EventSequence::new((1..=10).map(|i| i as f64 * 0.5).collect(), 5.0).unwrap();
    match fit_baseline(BaselineModel::Poisson, &seq).unwrap() {
        BaselineFit::Poisson { rate, .. } => assert_eq!(rate, 2.0),
        other => panic!("{other:?}"),
    }
    let one = EventSequence::new(vec![1.0], 2.0).unwrap();
    assert!(fit_baseline(BaselineModel::Hawkes, &one).is_err());
    let none = EventSequence::new(vec![], 2.0).unwrap();
    assert!(fit_baseline(BaselineModel::Poisson, &none).is_err());
    let p = HawkesParams::new(0.5, 0.3, 2.0).unwrap();
    assert_eq!(hawkes_loglik(&p, &EventSequence::new(vec![], 3.0).unwrap()), -1.5);
}
