//! Event-time data: single sequences and per-directed-pair collections.
//!
//! Times are measured from the start of the observation window (`t_0 = 0`).
//! The horizon `T` may lie beyond the last event, leaving an event-free tail.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative jitter applied to repeated timestamps.
pub const TIE_JITTER: f64 = 1e-9;

/// Ordered event times on `(0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    times: Vec<f64>,
    horizon: f64,
}

impl EventSequence {
    /// Builds a sequence from strictly increasing times in `(0, horizon]`.
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::validation(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        for (i, &t) in times.iter().enumerate() {
            check_time(t, i)?;
            if i > 0 && t <= times[i - 1] {
                return Err(Error::validation(format!(
                    "event times must be strictly increasing (index {i}: {} then {t})",
                    times[i - 1]
                )));
            }
        }
        if let Some(&last) = times.last() {
            if last > horizon {
                return Err(Error::validation(format!(
                    "last event time {last} exceeds horizon {horizon}"
                )));
            }
        }
        Ok(Self { times, horizon })
    }

    /// Sorts raw times and separates ties by `TIE_JITTER * T`.
    ///
    /// With no horizon the last event time is used. Returns the number of
    /// jittered events alongside the sequence.
    pub fn from_raw(mut times: Vec<f64>, horizon: Option<f64>) -> Result<(Self, usize)> {
        for (i, &t) in times.iter().enumerate() {
            check_time(t, i)?;
        }
        times.sort_by(f64::total_cmp);
        let mut horizon = match horizon {
            Some(h) => h,
            None => match times.last() {
                Some(&t) => t,
                None => {
                    return Err(Error::validation(
                        "an empty sequence needs an explicit horizon",
                    ))
                }
            },
        };
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::validation(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let eps = TIE_JITTER * horizon;
        let mut jittered = 0;
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                times[i] = times[i - 1] + eps;
                jittered += 1;
            }
        }
        if jittered > 0 {
            log::warn!("{jittered} tied event time(s) jittered by {eps:e}");
        }
        if let Some(&last) = times.last() {
            if last > horizon {
                if jittered > 0 && last - horizon <= eps * (jittered + 1) as f64 {
                    horizon = last;
                } else {
                    return Err(Error::validation(format!(
                        "last event time {last} exceeds horizon {horizon}"
                    )));
                }
            }
        }
        Ok((Self { times, horizon }, jittered))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of events `M`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last event time, or 0 for an empty sequence.
    pub fn last_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Gaps `t_m - t_{m-1}` with `t_0 = 0`.
    pub fn interevent_times(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.times
            .iter()
            .map(|&t| {
                let gap = t - prev;
                prev = t;
                gap
            })
            .collect()
    }

    /// Length of the event-free tail `(t_M, T]`.
    pub fn tail(&self) -> f64 {
        self.horizon - self.last_time()
    }

    /// Sequence with the same events and a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.times.clone(), horizon)
    }
}

fn check_time(t: f64, index: usize) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::validation(format!(
            "non-finite event time at index {index}"
        )));
    }
    if t <= 0.0 {
        return Err(Error::validation(format!(
            "event times must be positive (index {index}: {t})"
        )));
    }
    Ok(())
}

/// Identifies one observation window of one directed pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowKey {
    pub actor: String,
    pub recipient: String,
    pub window: String,
}

/// Events from `actor` to `recipient`, one sequence per observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEventData {
    pub actor: String,
    pub recipient: String,
    pub windows: Vec<(String, EventSequence)>,
}

impl PairEventData {
    pub fn total_events(&self) -> usize {
        self.windows.iter().map(|(_, s)| s.len()).sum()
    }

    pub fn key(&self, window: &str) -> WindowKey {
        WindowKey {
            actor: self.actor.clone(),
            recipient: self.recipient.clone(),
            window: window.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    Single,
    Pairs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventData {
    Single(EventSequence),
    Pairs(Vec<PairEventData>),
}

/// Reads an events CSV in either layout.
///
/// `horizon` applies to single sequences; pair windows end at their last
/// event unless `window_horizons` names them.
pub fn load_events(
    path: &Path,
    format: EventFormat,
    horizon: Option<f64>,
    window_horizons: Option<&HashMap<String, f64>>,
) -> Result<EventData> {
    let file = File::open(path)?;
    match format {
        EventFormat::Single => Ok(EventData::Single(read_single(file, horizon)?)),
        EventFormat::Pairs => Ok(EventData::Pairs(read_pairs(file, window_horizons)?)),
    }
}

#[derive(Deserialize)]
struct SingleRow {
    time: String,
}

/// Parses the one-column `time` layout.
pub fn read_single<R: Read>(reader: R, horizon: Option<f64>) -> Result<EventSequence> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_headers(&mut rdr, &["time"])?;
    let mut times = Vec::new();
    for row in rdr.deserialize::<SingleRow>() {
        let row = row?;
        times.push(parse_time(&row.time, times.len() + 2)?);
    }
    Ok(EventSequence::from_raw(times, horizon)?.0)
}

#[derive(Deserialize)]
struct PairRow {
    actor: String,
    recipient: String,
    window: String,
    time: String,
}

/// Parses the `actor,recipient,window,time` layout.
pub fn read_pairs<R: Read>(
    reader: R,
    window_horizons: Option<&HashMap<String, f64>>,
) -> Result<Vec<PairEventData>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_headers(&mut rdr, &["actor", "recipient", "window", "time"])?;
    let mut grouped: BTreeMap<(String, String), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<PairRow>().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.actor == row.recipient {
            return Err(Error::Parse {
                line,
                message: format!("self-interaction for '{}'", row.actor),
            });
        }
        let t = parse_time(&row.time, line)?;
        grouped
            .entry((row.actor, row.recipient))
            .or_default()
            .entry(row.window)
            .or_default()
            .push(t);
    }
    let mut pairs = Vec::with_capacity(grouped.len());
    for ((actor, recipient), windows) in grouped {
        let mut seqs = Vec::with_capacity(windows.len());
        for (window, times) in windows {
            let horizon = window_horizons.and_then(|h| h.get(&window).copied());
            let (seq, _) = EventSequence::from_raw(times, horizon)?;
            seqs.push((window, seq));
        }
        pairs.push(PairEventData {
            actor,
            recipient,
            windows: seqs,
        });
    }
    Ok(pairs)
}

fn check_headers<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers()?;
    for name in expected {
        if !headers.iter().any(|h| h == *name) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing column '{name}'"),
            });
        }
    }
    Ok(())
}

fn parse_time(raw: &str, line: usize) -> Result<f64> {
    let t: f64 = raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid time '{raw}'"),
    })?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::validation(format!(
            "line {line}: time must be finite and non-negative, got {raw}"
        )));
    }
    Ok(t)
}

/// Writes the single layout. `f64` display is the shortest exact
/// representation, so reading back yields the same bits.
pub fn write_single<W: Write>(seq: &EventSequence, mut writer: W) -> Result<()> {
    writeln!(writer, "time")?;
    for t in seq.times() {
        writeln!(writer, "{t}")?;
    }
    Ok(())
}

pub fn write_pairs<W: Write>(pairs: &[PairEventData], mut writer: W) -> Result<()> {
    writeln!(writer, "actor,recipient,window,time")?;
    for pair in pairs {
        for (window, seq) in &pair.windows {
            for t in seq.times() {
                writeln!(writer, "{},{},{},{t}", pair.actor, pair.recipient, window)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_column() {
        let seq = read_single("time\n0.5\n1.2\n3.0\n".as_bytes(), Some(4.0)).unwrap();
        assert_eq!(seq.times(), &[0.5, 1.2, 3.0]);
        assert_eq!(seq.horizon(), 4.0);
    }

    #[test]
    fn empty_file_with_horizon() {
        let seq = read_single("time\n".as_bytes(), Some(10.0)).unwrap();
        assert!(seq.is_empty());
        assert_eq!(seq.horizon(), 10.0);
        assert!(read_single("time\n".as_bytes(), None).is_err());
    }

    #[test]
    fn ties_are_jittered() {
        let (seq, n) = EventSequence::from_raw(vec![1.0, 1.0], Some(4.0)).unwrap();
        assert_eq!(n, 1);
        assert_eq!(seq.times()[1], 1.0 + 1e-9 * 4.0);
    }

    #[test]
    fn tie_at_horizon_extends_it() {
        let (seq, _) = EventSequence::from_raw(vec![2.0, 2.0], None).unwrap();
        assert!(seq.horizon() > 2.0);
        assert!(seq.times()[1] <= seq.horizon());
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let seq = read_single("time\n3.0\n0.5\n1.2\n".as_bytes(), None).unwrap();
        assert_eq!(seq.times(), &[0.5, 1.2, 3.0]);
        assert_eq!(seq.horizon(), 3.0);
    }

    #[test]
    fn malformed_row_reports_line() {
        match read_single("time\n0.5\nabc\n".as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_and_nonfinite_times_rejected() {
        assert!(matches!(
            read_single("time\n-1.0\n".as_bytes(), None),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            read_single("time\nNaN\n".as_bytes(), None),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            read_single("time\ninf\n".as_bytes(), None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn missing_header_is_parse_error() {
        assert!(matches!(
            read_single("0.5\n1.0\n".as_bytes(), None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn interevent_gaps() {
        let seq = EventSequence::new(vec![0.5, 1.2, 3.0], 4.0).unwrap();
        let gaps = seq.interevent_times();
        assert!((gaps[0] - 0.5).abs() < 1e-15);
        assert!((gaps[1] - 0.7).abs() < 1e-15);
        assert!((gaps[2] - 1.8).abs() < 1e-15);
        assert!(EventSequence::new(vec![], 1.0)
            .unwrap()
            .interevent_times()
            .is_empty());
        assert_eq!(
            EventSequence::new(vec![2.0], 2.0).unwrap().interevent_times(),
            vec![2.0]
        );
    }

    #[test]
    fn pairs_are_grouped_by_window() {
        let csv = "actor,recipient,window,time\na,b,1,0.5\na,b,2,0.7\nb,a,1,0.2\na,b,1,0.1\n";
        let pairs = read_pairs(csv.as_bytes(), None).unwrap();
        assert_eq!(pairs.len(), 2);
        let ab = &pairs[0];
        assert_eq!((ab.actor.as_str(), ab.recipient.as_str()), ("a", "b"));
        assert_eq!(ab.windows.len(), 2);
        assert_eq!(ab.windows[0].1.times(), &[0.1, 0.5]);
        assert_eq!(ab.total_events(), 3);
    }

    #[test]
    fn pair_window_horizons_apply() {
        let csv = "actor,recipient,window,time\na,b,w1,0.5\n";
        let h: HashMap<String, f64> = [("w1".to_string(), 2.0)].into();
        let pairs = read_pairs(csv.as_bytes(), Some(&h)).unwrap();
        assert_eq!(pairs[0].windows[0].1.horizon(), 2.0);
    }
}
