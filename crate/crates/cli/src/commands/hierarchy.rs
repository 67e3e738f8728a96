use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mmhp_core::event_data::{read_pairs, WindowKey};
use mmhp_core::hierarchy::{metrics, ranking_indices, winloss_matrix, DecodedStates, HierarchyMetrics, StateFilter};
use mmhp_core::{PairEventData, State};
use serde::{Deserialize, Serialize};

use super::decode::{decode_sequence, Theta};
use super::fit::fit;
use crate::config::{FitConfig, HierarchyConfig, StateSource};
use crate::io::{create, derive_seed, ensure_dir, open, read_json, write_json, write_with};
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Pair events CSV with `actor,recipient,window,time` columns.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Ranking CSV with an `id` column, most dominant first.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// Event-time states CSV (`actor,recipient,window,m,state`), e.g. the
    /// decoded_states.csv of an earlier run.
    #[arg(long, conflicts_with = "config")]
    pub decoded: Option<PathBuf>,
    /// JSON config naming how to decode states and the window horizons.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for winloss_*.csv and metrics.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateRow {
    actor: String,
    recipient: String,
    window: String,
    m: usize,
    state: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyReport {
    pub all: HierarchyMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active: Option<HierarchyMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inactive: Option<HierarchyMetrics>,
}

/// Decodes event-time states of every non-empty pair window.
pub fn decode_pairs(pairs: &[PairEventData], source: &StateSource, cfg: &HierarchyConfig) -> CliResult<DecodedStates> {
    let mut out = DecodedStates::new();
    for (p, pair) in pairs.iter().enumerate() {
        let windows: Vec<_> = pair.windows.iter().filter(|(_, s)| !s.is_empty()).collect();
        if windows.is_empty() {
            continue;
        }
        let draws = match source {
            StateSource::Params { .. } => None,
            StateSource::Fit { seed, prior, chains, iters } => {
                let data: Vec<_> = windows.iter().map(|(_, s)| s.clone()).collect();
                let fc = FitConfig {
                    seed: derive_seed(*seed, 2, p as u64),
                    prior: *prior,
                    model: None,
                    chains: *chains,
                    iters: *iters,
                    quadrature_nodes: cfg.decode.quadrature_nodes,
                    taylor_form: cfg.decode.taylor_form,
                };
                Some(fit(&data, &fc)?.0)
            }
        };
        for (window, seq) in windows {
            let theta = match (source, &draws) {
                (StateSource::Params { params }, _) => Theta::Fixed(params),
                (_, Some(d)) => Theta::Posterior(d),
                _ => unreachable!("fitted above"),
            };
            let decoded = decode_sequence(seq, theta, &cfg.decode)?;
            out.insert(pair.key(window), decoded.event_states().into_iter().map(|(_, z)| z).collect());
        }
    }
    Ok(out)
}

pub fn read_decoded(path: &Path) -> CliResult<DecodedStates> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut grouped: BTreeMap<WindowKey, Vec<(usize, State)>> = BTreeMap::new();
    for row in rdr.deserialize::<StateRow>() {
        let row = row.map_err(mmhp_core::Error::from)?;
        let z = match row.state {
            0 => State::Inactive,
            1 => State::Active,
            s => return Err(CliError::usage(format!("{}: state must be 0 or 1, got {s}", path.display()))),
        };
        let key = WindowKey {
            actor: row.actor,
            recipient: row.recipient,
            window: row.window,
        };
        grouped.entry(key).or_default().push((row.m, z));
    }
    let mut out = DecodedStates::new();
    for (key, mut rows) in grouped {
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
            return Err(CliError::usage(format!(
                "{}: states of {}->{} window {} must cover m = 0, 1, ... without gaps",
                path.display(),
                key.actor,
                key.recipient,
                key.window
            )));
        }
        out.insert(key, rows.into_iter().map(|r| r.1).collect());
    }
    Ok(out)
}

fn write_decoded(path: &Path, states: &DecodedStates) -> CliResult<()> {
    let sorted: BTreeMap<_, _> = states.iter().collect();
    let mut w = csv::Writer::from_writer(create(path)?);
    for (key, zs) in sorted {
        for (m, z) in zs.iter().enumerate() {
            w.serialize(StateRow {
                actor: key.actor.clone(),
                recipient: key.recipient.clone(),
                window: key.window.clone(),
                m,
                state: z.index() as u8,
            })
            .map_err(mmhp_core::Error::from)?;
        }
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn read_ranking(path: &Path) -> CliResult<Vec<String>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let ids = rdr
        .deserialize::<Row>()
        .map(|r| r.map(|r| r.id))
        .collect::<Result<Vec<_>, _>>()
        .map_err(mmhp_core::Error::from)?;
    Ok(ids)
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg: HierarchyConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => HierarchyConfig::default(),
    };
    let pairs = read_pairs(open(&args.pairs)?, cfg.window_horizons.as_ref())?;
    let states = match (&args.decoded, &cfg.states) {
        (Some(path), _) => Some(read_decoded(path)?),
        (None, Some(source)) => Some(decode_pairs(&pairs, source, &cfg)?),
        (None, None) => None,
    };

    ensure_dir(&args.out)?;
    let all = winloss_matrix(&pairs, StateFilter::All, None)?;
    let ranking = match &args.ranking {
        Some(p) => Some(ranking_indices(&all, &read_ranking(p)?)?),
        None => None,
    };
    let summarize = |filter: StateFilter, name: &str| -> CliResult<HierarchyMetrics> {
        let w = winloss_matrix(&pairs, filter, states.as_ref())?;
        write_with(&args.out.join(format!("winloss_{name}.csv")), |out| w.write_csv(out))?;
        Ok(metrics(&w, ranking.as_deref())?)
    };
    let report = HierarchyReport {
        all: summarize(StateFilter::All, "all")?,
        active: states.as_ref().map(|_| summarize(StateFilter::Active, "active")).transpose()?,
        inactive: states.as_ref().map(|_| summarize(StateFilter::Inactive, "inactive")).transpose()?,
    };
    if let (Some(s), None) = (&states, &args.decoded) {
        write_decoded(&args.out.join("decoded_states.csv"), s)?;
    }
    write_json(&args.out.join("metrics.json"), &report)
}
