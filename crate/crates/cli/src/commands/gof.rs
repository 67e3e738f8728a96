use std::io::Write;
use std::path::{Path, PathBuf};

use mmhp_core::diagnostics::{compensators, exp1_quantile, ks_exp1, qq_envelope, qq_points, KsResult};
use mmhp_core::{EventSequence, LatentTrajectory, MmhpParams};

use crate::io::{create, ensure_dir, read_draws, read_events, read_params, read_path_file, write_json, PathFile};
use crate::svg::{Chart, Series};
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("theta").required(true).args(["draws", "params"])))]
pub struct Args {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Posterior draws CSV; compensators use the posterior mean.
    #[arg(long)]
    pub draws: Option<PathBuf>,
    /// Fixed parameters as JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Latent path: a decoded trajectory.csv or a true truth.csv.
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Add a 95% pointwise QQ band from this many posterior draws.
    #[arg(long, requires = "draws")]
    pub envelope: Option<usize>,
    /// Also write qq.svg, ks.svg and trajectory.svg.
    #[arg(long)]
    pub svg: bool,
    /// Output directory for compensators.csv, qq.csv and ks.json.
    #[arg(long)]
    pub out: PathBuf,
}

/// Rescaled inter-event times under `theta` and `path`, with their KS test.
pub fn rescale(theta: &MmhpParams, seq: &EventSequence, path: &LatentTrajectory) -> CliResult<(Vec<f64>, KsResult)> {
    let c = compensators(theta, seq, path)?;
    let ks = ks_exp1(&c)?;
    Ok((c, ks))
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    };
    writeln!(w, "{header}").map_err(io)?;
    for row in rows {
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_svg(path: &Path, chart: &Chart) -> CliResult<()> {
    std::fs::write(path, chart.render()).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn run(args: &Args) -> CliResult<()> {
    let seq = read_events(&args.events, args.horizon)?;
    let draws = args.draws.as_deref().map(read_draws).transpose()?;
    let theta = match (&draws, &args.params) {
        (Some(d), _) => d.mean_params()?,
        (None, Some(p)) => read_params(p)?,
        (None, None) => unreachable!("clap requires one of --draws and --params"),
    };
    let file = read_path_file(&args.trajectory, &seq)?;
    let path = file.latent()?;
    let (comp, ks) = rescale(&theta, &seq, &path)?;
    let qq = qq_points(&comp)?;
    let band = match (args.envelope, &draws) {
        (Some(n), Some(d)) => {
            let sets = d
                .thinned(n)?
                .iter()
                .map(|p| compensators(p, &seq, &path))
                .collect::<mmhp_core::Result<Vec<_>>>()?;
            Some(qq_envelope(&sets, 0.95)?)
        }
        _ => None,
    };

    ensure_dir(&args.out)?;
    write_rows(
        &args.out.join("compensators.csv"),
        "m,compensator",
        comp.iter().enumerate().map(|(m, c)| format!("{},{c:e}", m + 1)),
    )?;
    match &band {
        Some(b) => write_rows(
            &args.out.join("qq.csv"),
            "theoretical,empirical,lower,upper",
            qq.iter().zip(b).map(|((t, e), (_, lo, hi))| format!("{t:e},{e:e},{lo:e},{hi:e}")),
        )?,
        None => write_rows(
            &args.out.join("qq.csv"),
            "theoretical,empirical",
            qq.iter().map(|(t, e)| format!("{t:e},{e:e}")),
        )?,
    }
    write_json(&args.out.join("ks.json"), &ks)?;

    if args.svg {
        let top = qq.last().map_or(1.0, |p| p.0.max(p.1));
        let mut series = vec![Series::Line {
            points: vec![(0.0, 0.0), (top, top)],
            color: "gray",
        }];
        if let Some(b) = &band {
            series.push(Series::Line { points: b.iter().map(|&(t, lo, _)| (t, lo)).collect(), color: "steelblue" });
            series.push(Series::Line { points: b.iter().map(|&(t, _, hi)| (t, hi)).collect(), color: "steelblue" });
        }
        series.push(Series::Dots { points: qq.clone(), color: "black" });
        write_svg(
            &args.out.join("qq.svg"),
            &Chart {
                title: "Rescaled inter-event times".into(),
                x_label: "Exp(1) quantile".into(),
                y_label: "compensator".into(),
                series,
            },
        )?;

        let mut sorted = comp.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let upper = exp1_quantile(1.0 - 0.5 / n).max(*sorted.last().unwrap_or(&1.0));
        let grid: Vec<(f64, f64)> = (0..=100).map(|i| upper * i as f64 / 100.0).map(|x| (x, -(-x).exp_m1())).collect();
        let mut ecdf = vec![(0.0, 0.0)];
        ecdf.extend(sorted.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / n)));
        write_svg(
            &args.out.join("ks.svg"),
            &Chart {
                title: format!("KS D = {:.3}, p = {:.3}", ks.d, ks.p_value),
                x_label: "compensator".into(),
                y_label: "CDF".into(),
                series: vec![
                    Series::Line { points: grid, color: "gray" },
                    Series::Steps { points: ecdf, end: upper, color: "black" },
                ],
            },
        )?;

        let mut series = Vec::new();
        if let PathFile::Decoded(d) = &file {
            series.push(Series::Line {
                points: d.times().iter().copied().zip(d.freq_state1().iter().copied()).collect(),
                color: "steelblue",
            });
        }
        let steps: Vec<(f64, f64)> = path.segments().iter().map(|&(a, _, z)| (a, z.index() as f64)).collect();
        series.push(Series::Steps { points: steps, end: path.horizon(), color: "black" });
        series.push(Series::Dots { points: seq.times().iter().map(|&t| (t, -0.05)).collect(), color: "firebrick" });
        write_svg(
            &args.out.join("trajectory.svg"),
            &Chart {
                title: "Latent state".into(),
                x_label: "time".into(),
                y_label: "state".into(),
                series,
            },
        )?;
    }
    Ok(())
}
