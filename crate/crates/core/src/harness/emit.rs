use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::run::{RunSummary, SlotRecord};
use super::sweep::SweepRow;
use crate::error::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

/// A type with a fixed CSV column layout.
pub trait Tabular: Serialize {
    fn header() -> &'static [&'static str];
    fn row(&self) -> Vec<String>;
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn residuals(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

impl Tabular for SlotRecord {
    fn header() -> &'static [&'static str] {
        &[
            "slot",
            "device_id",
            "policy",
            "mode",
            "phi",
            "time_s",
            "energy_j",
            "wset",
            "backlog",
            "feasible",
            "seed",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.slot.to_string(),
            self.device_id.to_string(),
            self.policy.clone(),
            self.mode.as_str().to_string(),
            num(self.phi),
            num(self.time_s),
            num(self.energy_j),
            num(self.wset),
            num(self.backlog),
            self.feasible.to_string(),
            self.seed.to_string(),
        ]
    }
}

impl Tabular for RunSummary {
    fn header() -> &'static [&'static str] {
        &[
            "policy",
            "seed",
            "time_avg_wset",
            "constraint_residual",
            "infeasible_fraction",
            "wall_time_s",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.policy.clone(),
            self.seed.to_string(),
            num(self.time_avg_wset),
            residuals(&self.constraint_residual),
            num(self.infeasible_fraction),
            num(self.wall_time_s),
        ]
    }
}

impl Tabular for SweepRow {
    fn header() -> &'static [&'static str] {
        &[
            "parameter",
            "value",
            "policy",
            "seed",
            "time_avg_wset",
            "constraint_residual",
            "infeasible_fraction",
            "wall_time_s",
        ]
    }

    fn row(&self) -> Vec<String> {
        let mut row = vec![self.parameter.clone(), num(self.value)];
        row.extend(self.summary.row());
        row
    }
}

/// Write rows as CSV (header row, minimal RFC-4180 quoting, LF line
/// endings) or as one JSON object per line.
pub fn write_rows<T: Tabular, W: Write>(rows: &[T], out: W, format: Format) -> Result<(), IoError> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .quote_style(csv::QuoteStyle::Necessary)
                .from_writer(out);
            w.write_record(T::header())?;
            for r in rows {
                w.write_record(r.row())?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Format::Jsonl => {
            let mut out = BufWriter::new(out);
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n").map_err(serde_json::Error::io)?;
            }
            out.flush().map_err(serde_json::Error::io)?;
        }
    }
    Ok(())
}

/// Write `rows` to `path`, replacing any existing file.
pub fn emit<T: Tabular>(rows: &[T], path: &Path, format: Format) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    write_rows(rows, BufWriter::new(file), format).map_err(|e| match e {
        IoError::Csv(c) if c.is_io_error() => IoError::Write {
            path: path.to_path_buf(),
            source: match c.into_kind() {
                csv::ErrorKind::Io(io) => io,
                _ => unreachable!(),
            },
        },
        other => other,
    })
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse slot records written by [`emit`].
pub fn read_records(path: &Path, format: Format) -> Result<Vec<SlotRecord>, IoError> {
    let file = open(path)?;
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(file);
            r.deserialize()
                .map(|row| row.map_err(IoError::from))
                .collect()
        }
        Format::Jsonl => read_jsonl(file, path),
    }
}

/// Parse run summaries written by [`emit`].
pub fn read_summaries(path: &Path, format: Format) -> Result<Vec<RunSummary>, IoError> {
    let file = open(path)?;
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(file);
            let mut out = Vec::new();
            for row in r.records() {
                let row = row?;
                let field = |i: usize| row.get(i).unwrap_or_default();
                let parse = |i: usize| -> Result<f64, IoError> {
                    field(i)
                        .parse()
                        .map_err(|_| IoError::Checkpoint(format!("bad number {:?}", field(i))))
                };
                let residual = if field(3).is_empty() {
                    Vec::new()
                } else {
                    field(3)
                        .split(';')
                        .map(|x| {
                            x.parse()
                                .map_err(|_| IoError::Checkpoint(format!("bad number {x:?}")))
                        })
                        .collect::<Result<_, _>>()?
                };
                out.push(RunSummary {
                    policy: field(0).to_string(),
                    seed: field(1)
                        .parse()
                        .map_err(|_| IoError::Checkpoint(format!("bad seed {:?}", field(1))))?,
                    time_avg_wset: parse(2)?,
                    constraint_residual: residual,
                    infeasible_fraction: parse(4)?,
                    wall_time_s: parse(5)?,
                });
            }
            Ok(out)
        }
        Format::Jsonl => read_jsonl(file, path),
    }
}

fn read_jsonl<T: DeserializeOwned>(file: File, path: &Path) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| IoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        if !line.is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;

    fn record(policy: &str) -> SlotRecord {
        SlotRecord {
            slot: 3,
            device_id: 1,
            policy: policy.to_string(),
            mode: Mode::Qpu,
            phi: 0.1 + 0.2,
            time_s: 1e-7,
            energy_j: 12345.678,
            wset: 1.0 / 3.0,
            backlog: 0.0,
            feasible: false,
            seed: u64::MAX,
        }
    }

    #[test]
    fn empty_stream_is_header_only() {
        let mut buf = Vec::new();
        write_rows::<SlotRecord, _>(&[], &mut buf, Format::Csv).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "slot,device_id,policy,mode,phi,time_s,energy_j,wset,backlog,feasible,seed\n"
        );
    }

    #[test]
    fn commas_are_quoted_and_lines_end_in_lf() {
        let mut buf = Vec::new();
        write_rows(
            &[record("a,b"), record("say \"hi\"")],
            &mut buf,
            Format::Csv,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(",\"a,b\","));
        assert!(text.contains(",\"say \"\"hi\"\"\","));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![record("x"), record("y,z")];
        for format in [Format::Csv, Format::Jsonl] {
            let p = dir.path().join(format!("r.{}", format.extension()));
            emit(&rows, &p, format).unwrap();
            assert_eq!(read_records(&p, format).unwrap(), rows);
        }
        let summaries = vec![RunSummary {
            policy: "dqn".into(),
            seed: 9,
            time_avg_wset: 0.1 + 0.2,
            constraint_residual: vec![-0.25, 1e-300, 0.7],
            infeasible_fraction: 0.0,
            wall_time_s: 0.0,
        }];
        for format in [Format::Csv, Format::Jsonl] {
            let p = dir.path().join(format!("s.{}", format.extension()));
            emit(&summaries, &p, format).unwrap();
            assert_eq!(read_summaries(&p, format).unwrap(), summaries);
        }
    }

    #[test]
    fn unwritable_destination_is_an_error() {
        let err =
            emit::<SlotRecord>(&[], Path::new("/nonexistent-dir/x.csv"), Format::Csv).unwrap_err();
        assert!(matches!(err, IoError::Write { .. }));
    }
}
