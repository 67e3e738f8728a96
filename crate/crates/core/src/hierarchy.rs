//! Win/loss matrices and linearity metrics of dominance hierarchies.
//!
//! Every event of a directed pair `actor -> recipient` counts as one win of
//! the actor. Matrices can be restricted to events decoded in one latent
//! state. Dyads with no contests, and (for transitivity) tied dyads, are
//! left out of the metrics.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ctmc::State;
use crate::event_data::{PairEventData, WindowKey};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinLossMatrix {
    ids: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl WinLossMatrix {
    pub fn zeros(ids: Vec<String>) -> Self {
        let n = ids.len();
        Self {
            ids,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(ids: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = ids.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::validation("win/loss matrix must be square and match its ids"));
        }
        if (0..n).any(|i| counts[i][i] != 0) {
            return Err(Error::validation("win/loss matrix must have a zero diagonal"));
        }
        if ids.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::validation("individual ids must be unique"));
        }
        Ok(Self { ids, counts })
    }

    /// A matrix with ids `"0".."n-1"`.
    pub fn from_rows(counts: Vec<Vec<u64>>) -> Result<Self> {
        let ids = (0..counts.len()).map(|i| i.to_string()).collect();
        Self::from_counts(ids, counts)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Rows and columns reordered so that new index `a` is old `order[a]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.len())?;
        Ok(Self {
            ids: order.iter().map(|&i| self.ids[i].clone()).collect(),
            counts: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
        })
    }

    /// CSV with a leading `id` column; entry `(row, col)` = wins of row over col.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.ids.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.ids.iter().zip(&self.counts) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::validation(format!(
            "ranking has {} entries for {n} individuals",
            order.len()
        )));
    }
    for &i in order {
        if i >= n || seen[i] {
            return Err(Error::validation("ranking is not a permutation"));
        }
        seen[i] = true;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFilter {
    All,
    Active,
    Inactive,
}

impl StateFilter {
    fn keeps(self, z: State) -> bool {
        match self {
            StateFilter::All => true,
            StateFilter::Active => z == State::Active,
            StateFilter::Inactive => z == State::Inactive,
        }
    }
}

/// Decoded event-time states per pair window; entry `m` is the state at
/// event `m` (`m = 0` being `t_0 = 0`), so a window with `M` events maps to
/// `M + 1` states.
pub type DecodedStates = HashMap<WindowKey, Vec<State>>;

/// Counts wins (events) per directed pair, restricted by `filter`.
///
/// Individuals are all actors and recipients, sorted by id.
pub fn winloss_matrix(
    pairs: &[PairEventData],
    filter: StateFilter,
    decoded: Option<&DecodedStates>,
) -> Result<WinLossMatrix> {
    let ids: Vec<String> = pairs
        .iter()
        .flat_map(|p| [p.actor.clone(), p.recipient.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut w = WinLossMatrix::zeros(ids);
    for pair in pairs {
        if pair.actor == pair.recipient {
            return Err(Error::validation(format!("self-directed pair {}", pair.actor)));
        }
        let i = w.index_of(&pair.actor).expect("collected");
        let j = w.index_of(&pair.recipient).expect("collected");
        for (window, seq) in &pair.windows {
            if seq.is_empty() {
                continue;
            }
            let count = if filter == StateFilter::All {
                seq.len() as u64
            } else {
                let key = pair.key(window);
                let states = decoded.and_then(|d| d.get(&key)).ok_or_else(|| {
                    Error::validation(format!(
                        "no decoded states for pair {}->{} window {}",
                        pair.actor, pair.recipient, window
                    ))
                })?;
                if states.len() != seq.len() + 1 {
                    return Err(Error::validation(format!(
                        "decoded states for pair {}->{} window {} have {} entries, expected {}",
                        pair.actor,
                        pair.recipient,
                        window,
                        states.len(),
                        seq.len() + 1
                    )));
                }
                states[1..].iter().filter(|&&z| filter.keeps(z)).count() as u64
            };
            w.counts[i][j] += count;
        }
    }
    Ok(w)
}

/// Share of contests won by the dyad's dominant member beyond those won
/// by the subordinate, pooled over dyads with at least one contest.
pub fn directional_consistency(w: &WinLossMatrix) -> Result<f64> {
    let (mut diff, mut total) = (0u64, 0u64);
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let (a, b) = (w.get(i, j), w.get(j, i));
            diff += a.abs_diff(b);
            total += a + b;
        }
    }
    if total == 0 {
        return Err(Error::domain("directional consistency is undefined without contests"));
    }
    Ok(diff as f64 / total as f64)
}

/// `Some(true)` if `i` dominates `j`, `None` for a tie or no contests.
fn orientation(w: &WinLossMatrix, i: usize, j: usize) -> Option<bool> {
    use std::cmp::Ordering::*;
    match w.get(i, j).cmp(&w.get(j, i)) {
        Greater => Some(true),
        Less => Some(false),
        Equal => None,
    }
}

/// Fraction of fully oriented triads that are transitive.
pub fn triangle_transitivity(w: &WinLossMatrix) -> Result<f64> {
    let n = w.len();
    let (mut oriented, mut transitive) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let Some(ij) = orientation(w, i, j) else { continue };
            for k in j + 1..n {
                let (Some(jk), Some(ik)) = (orientation(w, j, k), orientation(w, i, k)) else {
                    continue;
                };
                oriented += 1;
                // a 3-cycle is i>j>k>i or its reverse
                let cyclic = ij == jk && ik != ij;
                if !cyclic {
                    transitive += 1;
                }
            }
        }
    }
    if oriented == 0 {
        return Err(Error::domain("triangle transitivity is undefined without an oriented triad"));
    }
    Ok(transitive as f64 / oriented as f64)
}

/// Number of dyads in which the lower-ranked member won more contests.
/// `ranking[0]` is the most dominant individual.
pub fn ranking_inconsistency(w: &WinLossMatrix, ranking: &[usize]) -> Result<u64> {
    let r = w.permuted(ranking)?;
    let mut count = 0;
    for a in 0..r.len() {
        for b in 0..a {
            if r.get(a, b) > r.get(b, a) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Ranking given as ids, most dominant first.
pub fn ranking_indices(w: &WinLossMatrix, ranking: &[String]) -> Result<Vec<usize>> {
    let order = ranking
        .iter()
        .map(|id| {
            w.index_of(id)
                .ok_or_else(|| Error::validation(format!("ranking names unknown individual {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    check_permutation(&order, w.len())?;
    Ok(order)
}

/// Metrics of one matrix; `None` where a metric is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyMetrics {
    pub directional_consistency: Option<f64>,
    pub triangle_transitivity: Option<f64>,
    pub ranking_inconsistency: Option<u64>,
    pub contests: u64,
}

pub fn metrics(w: &WinLossMatrix, ranking: Option<&[usize]>) -> Result<HierarchyMetrics> {
    Ok(HierarchyMetrics {
        directional_consistency: directional_consistency(w).ok(),
        triangle_transitivity: triangle_transitivity(w).ok(),
        ranking_inconsistency: match ranking {
            Some(r) => Some(ranking_inconsistency(w, r)?),
            None => None,
        },
        contests: w.total(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::EventSequence;

    #[test]
    fn dc_examples() {
        let one_sided = WinLossMatrix::from_rows(vec![vec![0, 3, 1], vec![0, 0, 2], vec![0, 0, 0]]).unwrap();
        assert_eq!(directional_consistency(&one_sided).unwrap(), 1.0);
        let split = WinLossMatrix::from_rows(vec![vec![0, 2], vec![2, 0]]).unwrap();
        assert_eq!(directional_consistency(&split).unwrap(), 0.0);
        let mixed = WinLossMatrix::from_rows(vec![vec![0, 3, 2], vec![1, 0, 1], vec![0, 1, 0]]).unwrap();
        assert_eq!(directional_consistency(&mixed).unwrap(), 0.5);
        let zero = WinLossMatrix::from_rows(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(directional_consistency(&zero).is_err());
    }

    #[test]
    fn transitivity_examples() {
        let linear = WinLossMatrix::from_rows(vec![vec![0, 1, 1], vec![0, 0, 1], vec![0, 0, 0]]).unwrap();
        assert_eq!(triangle_transitivity(&linear).unwrap(), 1.0);
        let cycle = WinLossMatrix::from_rows(vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        assert_eq!(triangle_transitivity(&cycle).unwrap(), 0.0);
        let tied = WinLossMatrix::from_rows(vec![vec![0, 1, 1], vec![1, 0, 1], vec![0, 0, 0]]).unwrap();
        assert!(triangle_transitivity(&tied).is_err());
    }

    #[test]
    fn ranking_examples() {
        let linear = WinLossMatrix::from_rows(vec![vec![0, 2, 1], vec![0, 0, 4], vec![0, 0, 0]]).unwrap();
        assert_eq!(ranking_inconsistency(&linear, &[0, 1, 2]).unwrap(), 0);
        assert_eq!(ranking_inconsistency(&linear, &[2, 1, 0]).unwrap(), 3);
        assert!(ranking_inconsistency(&linear, &[0, 0, 1]).is_err());
        assert!(ranking_inconsistency(&linear, &[0, 1]).is_err());
    }

    #[test]
    fn filters_partition_all() {
        let seq = EventSequence::new(vec![1.0, 2.0, 3.0], 4.0).unwrap();
        let pairs = vec![PairEventData {
            actor: "a".into(),
            recipient: "b".into(),
            windows: vec![("w1".into(), seq)],
        }];
        let all = winloss_matrix(&pairs, StateFilter::All, None).unwrap();
        assert_eq!(all.get(0, 1), 3);
        assert!(winloss_matrix(&pairs, StateFilter::Active, None).is_err());
        let mut decoded = DecodedStates::new();
        decoded.insert(
            pairs[0].key("w1"),
            vec![State::Inactive, State::Active, State::Inactive, State::Active],
        );
        let act = winloss_matrix(&pairs, StateFilter::Active, Some(&decoded)).unwrap();
        let inact = winloss_matrix(&pairs, StateFilter::Inactive, Some(&decoded)).unwrap();
        assert_eq!(act.get(0, 1), 2);
        assert_eq!(inact.get(0, 1), 1);
    }
}
