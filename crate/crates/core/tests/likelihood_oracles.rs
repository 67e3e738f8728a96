mod common;

use common::{adaptive_simpson, params, rel_err, sequence_strategy, theta_strategy};
use mmhp_core::likelihood::{mu_state_prob, ApproxLikelihood};
use mmhp_core::rng::stream;
use mmhp_core::simulate::{simulate_mmhp, StopRule};
use mmhp_core::{EventSequence, Generator, HawkesParams, MmhpParams, State};
use proptest::prelude::*;

/// Direct (probability-domain) forward pass for the MMPP case, using the
/// closed form of the bridge occupation integral
/// `int_0^h P_{a,z}(s) P_{z,b}(h - s) ds`.
fn mmpp_forward(theta: &MmhpParams, seq: &EventSequence) -> f64 {
    let (q0, q1) = (theta.generator().q0(), theta.generator().q1());
    let k = q0 + q1;
    let pi = [q1 / k, q0 / k];
    let rate = [theta.lambda0(), theta.lambda1()];
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let p = |i: usize, j: usize, t: f64| pi[j] + (delta(i, j) - pi[j]) * (-k * t).exp();
    let occ = |a: usize, z: usize, b: usize, h: f64| {
        let c1 = delta(a, z) - pi[z];
        let c2 = delta(z, b) - pi[b];
        let e = (-k * h).exp();
        pi[z] * pi[b] * h + (pi[b] * c1 + pi[z] * c2) * (1.0 - e) / k + c1 * c2 * h * e
    };
    let weight = |a: usize, b: usize, h: f64| {
        let pab = p(a, b, h);
        let integral = (rate[0] * occ(a, 0, b, h) + rate[1] * occ(a, 1, b, h)) / pab;
        pab * (-integral).exp()
    };
    let mut f = [theta.delta0(), 1.0 - theta.delta0()];
    let mut log_scale = 0.0;
    let mut prev = 0.0;
    for &t in seq.times() {
        let h = t - prev;
        let next: Vec<f64> = (0..2)
            .map(|b| (0..2).map(|a| f[a] * weight(a, b, h) * rate[b]).sum())
            .collect();
        let s = next[0] + next[1];
        log_scale += s.ln();
        f = [next[0] / s, next[1] / s];
        prev = t;
    }
    let h = seq.horizon() - prev;
    let tail = if h > 0.0 {
        (0..2)
            .map(|a| f[a] * (0..2).map(|b| weight(a, b, h)).sum::<f64>())
            .sum::<f64>()
    } else {
        1.0
    };
    log_scale + tail.ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn forward_matches_enumeration(theta in theta_strategy(), seq in sequence_strategy(8)) {
        let lik = ApproxLikelihood::default();
        let f = lik.forward_loglik(&theta, &seq).unwrap();
        let b = lik.brute_force_loglik(&theta, &seq).unwrap();
        prop_assert!(rel_err(f, b) <= 1e-10, "{} vs {}", f, b);
    }

    #[test]
    fn mmpp_forward_matches_direct_oracle(theta in theta_strategy(), seq in sequence_strategy(30)) {
        let theta = theta.without_excitation();
        let f = ApproxLikelihood::default().forward_loglik(&theta, &seq).unwrap();
        let o = mmpp_forward(&theta, &seq);
        prop_assert!(rel_err(f, o) <= 1e-8, "{} vs {}", f, o);
    }

    #[test]
    fn mmpp_is_invariant_to_beta(theta in theta_strategy(), seq in sequence_strategy(20), beta in 0.1f64..10.0) {
        let a = theta.without_excitation();
        let mut v = a.to_array();
        v[3] = beta;
        let b = params(v);
        let lik = ApproxLikelihood::default();
        let (x, y) = (lik.forward_loglik(&a, &seq).unwrap(), lik.forward_loglik(&b, &seq).unwrap());
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn mu_normalized(q0 in 0.01f64..5.0, q1 in 0.01f64..5.0, dt in 0.01f64..20.0, frac in 0.0f64..=1.0,
                     zp in 0usize..2, zn in 0usize..2) {
        let g = Generator::new(q0, q1).unwrap();
        let mu = mu_state_prob(&g, State::from_index(zp), State::from_index(zn), dt, frac * dt).unwrap();
        prop_assert!((mu[0] + mu[1] - 1.0).abs() <= 1e-12);
        prop_assert!(mu.iter().all(|&m| (0.0..=1.0 + 1e-12).contains(&m)));
    }

    #[test]
    fn likelihood_is_smooth_in_each_parameter(theta in theta_strategy(), seq in sequence_strategy(15)) {
        let lik = ApproxLikelihood::default();
        let f0 = lik.forward_loglik(&theta, &seq).unwrap();
        let v = theta.to_array();
        for k in 0..7 {
            let h = 1e-6;
            let mut up = v;
            let mut dn = v;
            up[k] += h;
            dn[k] -= h;
            let fu = lik.forward_loglik(&params(up), &seq).unwrap();
            let fd = lik.forward_loglik(&params(dn), &seq).unwrap();
            // first differences are O(h * gradient); second differences O(h^2)
            prop_assert!((fu - f0).abs() < 1e-3 && (fd - f0).abs() < 1e-3);
            prop_assert!((fu - 2.0 * f0 + fd).abs() < 1e-7 * (1.0 + f0.abs()), "param {}", k);
        }
    }
}

#[test]
fn bridge_matches_sampled_bridges() {
    // chain from 1 at time 0, kept when in 0 at time 2; state at time 1
    let g = Generator::new(0.3, 0.7).unwrap();
    let mut rng = stream(99, 0);
    let (mut kept, mut in1) = (0u64, 0u64);
    for _ in 0..1_000_000 {
        let traj = mmhp_core::ctmc::sample_ctmc(0.0, &g, 2.0, &mut rng).unwrap();
        if traj.final_state() == State::Inactive {
            kept += 1;
            if traj.state_at(1.0) == State::Active {
                in1 += 1;
            }
        }
    }
    let p_hat = in1 as f64 / kept as f64;
    let se = (p_hat * (1.0 - p_hat) / kept as f64).sqrt();
    let mu = mu_state_prob(&g, State::Active, State::Inactive, 2.0, 1.0).unwrap();
    assert!((mu[1] - p_hat).abs() < 3.0 * se, "{} vs {p_hat} (se {se})", mu[1]);
}

#[test]
fn fast_mixing_limit() {
    let theta = MmhpParams::new(
        0.4,
        HawkesParams::new(1.3, 0.9, 1.7).unwrap(),
        0.5,
        Generator::new(4e5, 6e5).unwrap(),
    )
    .unwrap();
    let lik = ApproxLikelihood::default();
    let (exc, dt) = (2.5, 1.8);
    let got = lik.bridge_integrals(&theta, exc, dt);
    let pi = theta.generator().stationary();
    let hawkes = 1.3 * dt + 0.9 * exc * (1.0 - (-1.7 * dt).exp()) / 1.7;
    let limit = pi[0] * 0.4 * dt + pi[1] * hawkes;
    for row in got {
        for v in row {
            assert!(rel_err(v, limit) <= 1e-4, "{v} vs {limit}");
        }
    }
}

#[test]
fn quadrature_refinement_on_bursty_data() {
    let coarse = ApproxLikelihood::with_nodes(16).unwrap();
    let fine = ApproxLikelihood::with_nodes(256).unwrap();
    for r in 0..50 {
        let theta = MmhpParams::new(
            0.05 + 0.01 * (r % 5) as f64,
            HawkesParams::new(0.6, 1.2 + 0.05 * (r % 7) as f64, 1.5 + 0.1 * (r % 4) as f64).unwrap(),
            0.5,
            Generator::new(0.05, 0.15).unwrap(),
        )
        .unwrap();
        let sim = simulate_mmhp(&theta, StopRule::Count(60), &mut stream(300, r)).unwrap();
        let a = coarse.forward_loglik(&theta, &sim.events).unwrap();
        let b = fine.forward_loglik(&theta, &sim.events).unwrap();
        assert!(rel_err(a, b) <= 1e-6, "replicate {r}: {a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bridge_integrals_match_adaptive_simpson(
        theta in theta_strategy(), exc in 0.0f64..5.0, dt in 0.01f64..60.0,
    ) {
        let got = ApproxLikelihood::default().bridge_integrals(&theta, exc, dt);
        let g = *theta.generator();
        for zp in 0..2 {
            for zn in 0..2 {
                let (a, b) = (State::from_index(zp), State::from_index(zn));
                let f = |s: f64| {
                    let mu = mu_state_prob(&g, a, b, dt, s).unwrap();
                    let hawkes = theta.lambda1() + theta.alpha() * exc * (-theta.beta() * s).exp();
                    theta.lambda0() * mu[0] + hawkes * mu[1]
                };
                let want = adaptive_simpson(&f, 0.0, dt, 1e-12);
                prop_assert!(rel_err(got[zp][zn], want) <= 1e-8, "{zp}{zn}: {} vs {want}", got[zp][zn]);
            }
        }
    }
}

#[test]
fn frozen_chain_empty_sequence() {
    let theta = MmhpParams::new(
        0.3,
        HawkesParams::new(0.9, 0.5, 1.0).unwrap(),
        0.6,
        Generator::new(1e-14, 1e-14).unwrap(),
    )
    .unwrap();
    let seq = EventSequence::new(vec![], 3.0).unwrap();
    let v = ApproxLikelihood::default().forward_loglik(&theta, &seq).unwrap();
    let expected = (0.6 * (-0.9f64).exp() + 0.4 * (-2.7f64).exp()).ln();
    assert!(rel_err(v, expected) < 1e-10);
}

#[test]
fn jittered_ties_give_finite_likelihood() {
    let seq = mmhp_core::event_data::read_single("time\n1.0\n1.0\n2.5\n".as_bytes(), Some(4.0)).unwrap();
    assert_eq!(seq.times()[1], 1.0 + 4e-9);
    let theta = params([0.2, 1.0, 0.6, 1.2, 0.5, 0.3, 0.4]);
    let v = ApproxLikelihood::default().forward_loglik(&theta, &seq).unwrap();
    assert!(v.is_finite());
}

#[test]
fn thirteen_events_are_refused() {
    let times: Vec<f64> = (1..=13).map(|i| i as f64 * 0.5).collect();
    let seq = EventSequence::new(times, 7.0).unwrap();
    let theta = params([0.2, 1.0, 0.6, 1.2, 0.5, 0.3, 0.4]);
    assert!(ApproxLikelihood::default().brute_force_loglik(&theta, &seq).is_err());
}
