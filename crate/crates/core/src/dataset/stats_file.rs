//! Per-episode statistics file: `episode_id,movement_code,frames,seconds`,
//! one row per movement present, ordered by code.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::annotation::{movement_durations, EpisodeAnnotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub episode_id: String,
    pub movement_code: u8,
    pub frames: u64,
    pub seconds: f64,
}

pub fn episode_stats_rows(a: &EpisodeAnnotation) -> Vec<StatsRow> {
    let d = movement_durations(a);
    d.present()
        .map(|m| StatsRow {
            episode_id: a.episode_id.clone(),
            movement_code: m.code(),
            frames: d.frames(m),
            seconds: d.seconds(m),
        })
        .collect()
}

pub fn write_stats_csv<W: std::io::Write>(rows: &[StatsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    // Header is written explicitly so that empty episodes still get one.
    w.write_record(["episode_id", "movement_code", "frames", "seconds"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.episode_id.clone(),
            r.movement_code.to_string(),
            r.frames.to_string(),
            r.seconds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Source(e.to_string()))
}

pub fn stats_csv_string(a: &EpisodeAnnotation) -> String {
    let mut buf = Vec::new();
    write_stats_csv(&episode_stats_rows(a), &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn save_stats_csv(a: &EpisodeAnnotation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, stats_csv_string(a)).map_err(|e| Error::io(path, e))
}

pub fn read_stats_csv<R: std::io::Read>(input: R) -> Result<Vec<StatsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["episode_id", "movement_code", "frames", "seconds"] {
        return Err(Error::Validation(format!("unexpected statistics header {headers:?}")));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    let (line, column) = e
        .position()
        .map(|p| (p.line() as usize, 0))
        .unwrap_or((0, 0));
    Error::Parse {
        line,
        column,
        message: e.to_string(),
    }
}
