use std::io::Write;

use mmhp_core::event_data::{load_events, read_pairs, read_single, write_pairs, write_single, EventData, EventFormat};
use mmhp_core::EventSequence;
use proptest::prelude::*;

fn sequence() -> impl Strategy<Value = EventSequence> {
    (prop::collection::vec(1e-6f64..1e4, 0..50), 0.0f64..10.0).prop_map(|(mut v, extra)| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        let horizon = v.last().copied().unwrap_or(1.0) + extra;
        EventSequence::new(v, horizon).unwrap()
    })
}

proptest! {
    #[test]
    fn single_round_trip_is_bit_identical(seq in sequence()) {
        let mut buf = Vec::new();
        write_single(&seq, &mut buf).unwrap();
        let back = read_single(buf.as_slice(), Some(seq.horizon())).unwrap();
        prop_assert_eq!(back.times().len(), seq.times().len());
        for (a, b) in back.times().iter().zip(seq.times()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back.horizon(), seq.horizon());
    }

    #[test]
    fn pairs_round_trip(a in sequence(), b in sequence()) {
        prop_assume!(!a.is_empty() && !b.is_empty());
        let pairs = vec![
            mmhp_core::PairEventData { actor: "m1".into(), recipient: "m2".into(), windows: vec![("1".into(), a.with_horizon(a.last_time()).unwrap())] },
            mmhp_core::PairEventData { actor: "m2".into(), recipient: "m1".into(), windows: vec![("1".into(), b.with_horizon(b.last_time()).unwrap())] },
        ];
        let mut buf = Vec::new();
        write_pairs(&pairs, &mut buf).unwrap();
        let back = read_pairs(buf.as_slice(), None).unwrap();
        prop_assert_eq!(back, pairs);
    }

    #[test]
    fn gaps_sum_to_last_event(seq in sequence()) {
        let gaps = seq.interevent_times();
        prop_assert_eq!(gaps.len(), seq.len());
        prop_assert!(gaps.iter().all(|g| *g > 0.0));
        if let Some(&last) = seq.times().last() {
            let s: f64 = gaps.iter().sum();
            prop_assert!((s - last).abs() <= 1e-12 * last);
        }
    }
}

#[test]
fn parsing_examples() {
    let seq = read_single("time\n0.5\n1.2\n3.0\n".as_bytes(), Some(4.0)).unwrap();
    assert_eq!(seq.times(), &[0.5, 1.2, 3.0]);
    assert_eq!(seq.horizon(), 4.0);
    for (g, want) in seq.interevent_times().iter().zip([0.5, 0.7, 1.8]) {
        assert!((g - want).abs() < 1e-12);
    }
    let empty = read_single("time\n".as_bytes(), Some(10.0)).unwrap();
    assert!(empty.is_empty() && empty.horizon() == 10.0);
    let one = EventSequence::new(vec![2.0], 2.0).unwrap();
    assert_eq!(one.interevent_times(), vec![2.0]);
    let defaulted = read_single("time\n1\n2\n".as_bytes(), None).unwrap();
    assert_eq!(defaulted.horizon(), 2.0);
}

#[test]
fn malformed_rows_name_their_line() {
    let err = read_single("time\n1.0\nabc\n".as_bytes(), None).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    assert!(read_single("time\n1.0\n-2\n".as_bytes(), None).is_err());
    assert!(read_single("time\n1.0\ninf\n".as_bytes(), None).is_err());
    assert!(read_single("when\n1.0\n".as_bytes(), None).is_err());
    assert!(read_pairs("actor,recipient,window,time\na,a,1,1.0\n".as_bytes(), None).is_err());
}

#[test]
fn loads_from_files() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, "actor,recipient,window,time\na,b,1,0.5\na,b,1,2.0\nb,a,2,1.0\n").unwrap();
    let EventData::Pairs(pairs) = load_events(f.path(), EventFormat::Pairs, None, None).unwrap() else {
        panic!("expected pairs")
    };
    assert_eq!(pairs.len(), 2);
    assert_eq!(pairs[0].actor, "a");
    assert_eq!(pairs[0].windows[0].1.times(), &[0.5, 2.0]);
    assert_eq!(pairs[0].windows[0].1.horizon(), 2.0);
    assert!(load_events(std::path::Path::new("/nonexistent/x.csv"), EventFormat::Single, None, None).is_err());
}
