use mmhp_core::ctmc::{ctmc_loglik, sample_ctmc, transition_matrix};
use mmhp_core::rng::stream;
use mmhp_core::{Generator, LatentTrajectory, State};
use proptest::prelude::*;

fn mat(g: &Generator, t: f64) -> [[f64; 2]; 2] {
    transition_matrix(g, t).unwrap().entries()
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn rates() -> impl Strategy<Value = Generator> {
    (-4.0f64..3.0, -4.0f64..3.0).prop_map(|(a, b)| Generator::new(a.exp(), b.exp()).unwrap())
}

proptest! {
    #[test]
    fn chapman_kolmogorov(g in rates(), t in 0.0f64..20.0, s in 0.0f64..20.0) {
        let lhs = mat(&g, t + s);
        let rhs = mul(mat(&g, t), mat(&g, s));
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((lhs[i][j] - rhs[i][j]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn rows_are_distributions(g in rates()) {
        for &t in &[0.0, 0.1, 1.0, 10.0, 100.0] {
            for row in mat(&g, t) {
                prop_assert!((row[0] + row[1] - 1.0).abs() <= 1e-12);
                prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            }
        }
    }

    #[test]
    fn forward_equation(g in (-2.0f64..1.5, -2.0f64..1.5).prop_map(|(a, b)| Generator::new(a.exp(), b.exp()).unwrap()),
                        t in 0.01f64..10.0) {
        let h = 1e-5;
        let (up, dn) = (mat(&g, t + h), mat(&g, t - h));
        let rhs = mul(mat(&g, t), g.matrix());
        for i in 0..2 {
            for j in 0..2 {
                let fd = (up[i][j] - dn[i][j]) / (2.0 * h);
                prop_assert!((fd - rhs[i][j]).abs() <= 1e-6, "{fd} vs {}", rhs[i][j]);
            }
        }
    }
}

#[test]
fn huge_rates_reach_stationarity_without_nan() {
    let g = Generator::new(3e200, 1e200).unwrap();
    let p = mat(&g, 50.0);
    assert!(p.iter().flatten().all(|v| v.is_finite()));
    assert!((p[0][1] - 0.75).abs() < 1e-12 && (p[1][1] - 0.75).abs() < 1e-12);
}

#[test]
fn sampled_transition_frequency() {
    let g = Generator::new(0.3, 0.7).unwrap();
    let mut rng = stream(11, 0);
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| sample_ctmc(0.0, &g, 1.0 + 1e-9, &mut rng).unwrap().state_at(1.0) == State::Active)
        .count();
    let p_hat = hits as f64 / n as f64;
    let p = transition_matrix(&g, 1.0).unwrap().get(State::Active, State::Active);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((p_hat - p).abs() < 3.0 * se, "{p_hat} vs {p}");
}

#[test]
fn path_density_matches_binned_frequency() {
    // Z(0) = 1, a single jump inside [u, u + h), then no jump up to T
    let g = Generator::new(0.3, 0.7).unwrap();
    let (u, h, horizon) = (0.8, 0.05, 2.0);
    let mid = LatentTrajectory::new(State::Active, vec![u + h / 2.0], horizon).unwrap();
    let density = ctmc_loglik(&mid, 0.5, &g).unwrap().exp();
    let mut rng = stream(12, 0);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| {
            let tr = sample_ctmc(0.5, &g, horizon, &mut rng).unwrap();
            tr.initial() == State::Active && tr.jumps().len() == 1 && (u..u + h).contains(&tr.jumps()[0])
        })
        .count();
    let estimate = hits as f64 / n as f64 / h;
    assert!((estimate / density - 1.0).abs() < 0.1, "{estimate} vs {density}");
}

#[test]
fn vanishing_rates_do_not_jump() {
    let g = Generator::new(1e-12, 1e-12).unwrap();
    let mut rng = stream(13, 0);
    assert!((0..1000).all(|_| sample_ctmc(0.5, &g, 10.0, &mut rng).unwrap().jumps().is_empty()));
    assert!((0..100).all(|_| sample_ctmc(1.0, &g, 10.0, &mut rng).unwrap().initial() == State::Inactive));
}
