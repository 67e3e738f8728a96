#![allow(dead_code)]

use mmhp_core::{EventSequence, Generator, HawkesParams, MmhpParams};
use proptest::prelude::*;

pub fn params(v: [f64; 7]) -> MmhpParams {
    MmhpParams::from_array(v).unwrap()
}

/// Random identified parameters in a moderate range.
pub fn theta_strategy() -> impl Strategy<Value = MmhpParams> {
    (
        0.5f64..3.0,
        0.05f64..0.9,
        0.05f64..2.0,
        0.5f64..3.0,
        0.05f64..0.95,
        -3.0f64..1.0,
        -3.0f64..1.0,
    )
        .prop_map(|(l1, frac, a, b, d0, lq0, lq1)| {
            MmhpParams::new(
                l1 * frac,
                HawkesParams::new(l1, a, b).unwrap(),
                d0,
                Generator::new(lq0.exp(), lq1.exp()).unwrap(),
            )
            .unwrap()
        })
}

/// Up to `max_m` sorted events on `(0, T]`, with or without a tail.
pub fn sequence_strategy(max_m: usize) -> impl Strategy<Value = EventSequence> {
    (1.0f64..10.0, prop::collection::vec(0.001f64..1.0, 0..=max_m), any::<bool>()).prop_map(
        |(horizon, mut u, tail)| {
            u.sort_by(f64::total_cmp);
            u.dedup();
            let times: Vec<f64> = u.iter().map(|x| x * horizon).collect();
            let h = match (tail, times.last()) {
                (false, Some(&last)) => last,
                _ => horizon,
            };
            EventSequence::new(times, h).unwrap()
        },
    )
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
