//! File plumbing shared by the subcommands.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mmhp_core::event_data::read_single;
use mmhp_core::params::ParamsRecord;
use mmhp_core::rng::substream;
use mmhp_core::{DecodedTrajectory, EventSequence, LatentTrajectory, MmhpParams, PosteriorDraws};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{CliError, CliResult};

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open(path)?).map_err(|source| CliError::Config {
        path: path.display().to_string(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| CliError::Config {
        path: path.display().to_string(),
        source,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

/// Writes through a core writer function and flushes.
pub fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> mmhp_core::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Paths in a config file are taken relative to the file's directory.
pub fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

pub fn read_events(path: &Path, horizon: Option<f64>) -> CliResult<EventSequence> {
    Ok(read_single(open(path)?, horizon)?)
}

pub fn read_params(path: &Path) -> CliResult<MmhpParams> {
    let rec: ParamsRecord = read_json(path)?;
    Ok(MmhpParams::try_from(rec)?)
}

pub fn read_draws(path: &Path) -> CliResult<PosteriorDraws> {
    Ok(PosteriorDraws::read_csv(open(path)?)?)
}

/// A latent path file: either a true path (`u,state`) or a decoded grid
/// (`t,state,freq_state1`), told apart by the header.
pub enum PathFile {
    Truth(LatentTrajectory),
    Decoded(DecodedTrajectory),
}

impl PathFile {
    pub fn latent(&self) -> CliResult<LatentTrajectory> {
        match self {
            PathFile::Truth(t) => Ok(t.clone()),
            PathFile::Decoded(d) => Ok(d.to_latent()?),
        }
    }
}

pub fn read_path_file(path: &Path, events: &EventSequence) -> CliResult<PathFile> {
    let mut header = String::new();
    open(path)?.read_line(&mut header).map_err(|e| io_err(path, e))?;
    if header.trim_end().starts_with("u,state") {
        Ok(PathFile::Truth(LatentTrajectory::read_csv(open(path)?, events.horizon())?))
    } else {
        Ok(PathFile::Decoded(DecodedTrajectory::read_csv(open(path)?, events)?))
    }
}

/// Independent child seed for `(label, index)` under `seed`.
pub fn derive_seed(seed: u64, label: u64, index: u64) -> u64 {
    substream(seed, label, index).random()
}
