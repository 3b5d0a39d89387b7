//! JSONL and CSV trajectory files.
//!
//! JSONL: one record per line, `{"id": "...", "states": [[x, y, ...], ...]}`.
//! CSV: long format with header `id,t,c0,c1,...`, one row per state.
//! Dataset metadata (observation parameters, generator seed) lives in a
//! sidecar `<file>.meta.json`; without it, default observation parameters
//! are used.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetMeta, ObservationSpec};
use crate::error::{Error, Result};
use crate::stl::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Ok(Format::Jsonl),
            Some("csv") => Ok(Format::Csv),
            _ => Err(Error::invalid(format!(
                "cannot infer format of {} (expected .jsonl or .csv)",
                path.display()
            ))),
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::invalid(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    id: String,
    states: Vec<Vec<f64>>,
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn save(dataset: &Dataset, path: &Path, format: Format) -> Result<()> {
    let mut out = String::new();
    match format {
        Format::Jsonl => {
            for x in dataset.trajectories() {
                let rec = JsonRecord {
                    id: x.id().to_owned(),
                    states: x.to_states(),
                };
                out.push_str(&serde_json::to_string(&rec)?);
                out.push('\n');
            }
        }
        Format::Csv => {
            out.push_str("id,t");
            for c in 0..dataset.meta().dim {
                let _ = write!(out, ",c{c}");
            }
            out.push('\n');
            for x in dataset.trajectories() {
                if x.id().contains([',', '"', '\n']) {
                    return Err(Error::invalid(format!("id {:?} cannot be written to csv", x.id())));
                }
                for (t, s) in x.states().enumerate() {
                    let _ = write!(out, "{},{t}", x.id());
                    for v in s {
                        let _ = write!(out, ",{v}");
                    }
                    out.push('\n');
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let meta = serde_json::to_string_pretty(dataset.meta())?;
    let mp = meta_path(path);
    fs::write(&mp, meta + "\n").map_err(|e| Error::io(mp, e))
}

/// Loads a dataset, taking observation parameters from the sidecar file.
pub fn load(path: &Path, format: Format) -> Result<Dataset> {
    load_with(path, format, None)
}

/// Loads a dataset, using `fallback` for observation parameters only when
/// there is no sidecar file.
pub fn load_or(path: &Path, format: Format, fallback: ObservationSpec) -> Result<Dataset> {
    if meta_path(path).exists() {
        load_with(path, format, None)
    } else {
        load_with(path, format, Some(fallback))
    }
}

/// Loads a dataset; `spec` overrides the sidecar observation parameters.
pub fn load_with(path: &Path, format: Format, spec: Option<ObservationSpec>) -> Result<Dataset> {
    let mp = meta_path(path);
    let meta: Option<DatasetMeta> = if mp.exists() {
        let text = fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
        Some(serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: format!("{}: {e}", mp.display()),
        })?)
    } else {
        None
    };
    let trajectories = match format {
        Format::Jsonl => read_jsonl(path)?,
        Format::Csv => read_csv(path, meta.as_ref().map(|m| m.dim))?,
    };
    if let Some(m) = &meta {
        if let Some(x) = trajectories
            .iter()
            .find(|x| x.len() != m.t_len || x.dim() != m.dim)
        {
            return Err(Error::Schema(format!(
                "trajectory {} is {}x{} but metadata declares {}x{}",
                x.id(),
                x.len(),
                x.dim(),
                m.t_len,
                m.dim
            )));
        }
    }
    let spec = spec
        .or(meta.as_ref().map(|m| m.observation))
        .unwrap_or_default();
    Dataset::new(trajectories, spec, meta.and_then(|m| m.generator_seed))
}

fn read_jsonl(path: &Path) -> Result<Vec<Trajectory>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let x = Trajectory::new(rec.id, rec.states).map_err(|e| Error::Schema(format!("line {}: {e}", i + 1)))?;
        check_uniform(&out, &x, i + 1)?;
        out.push(x);
    }
    if out.is_empty() {
        return Err(Error::Schema(format!("{} contains no trajectories", path.display())));
    }
    Ok(out)
}

fn check_uniform(prev: &[Trajectory], x: &Trajectory, line: usize) -> Result<()> {
    if let Some(first) = prev.first() {
        if first.len() != x.len() || first.dim() != x.dim() {
            return Err(Error::Schema(format!(
                "line {line}: trajectory {} is {}x{}, earlier trajectories are {}x{}",
                x.id(),
                x.len(),
                x.dim(),
                first.len(),
                first.dim()
            )));
        }
    }
    Ok(())
}

fn read_csv(path: &Path, declared_dim: Option<usize>) -> Result<Vec<Trajectory>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "t" {
        return Err(Error::Schema(format!(
            "csv header must start with id,t and at least one coordinate column, got {cols:?}"
        )));
    }
    let dim = cols.len() - 2;
    for (k, c) in cols[2..].iter().enumerate() {
        if *c != format!("c{k}") {
            return Err(Error::Schema(format!("csv column {} is {c:?}, expected c{k}", k + 2)));
        }
    }
    if let Some(d) = declared_dim {
        if d != dim {
            return Err(Error::Schema(format!(
                "csv has {dim} coordinate columns but metadata declares {d}"
            )));
        }
    }

    let mut out: Vec<Trajectory> = Vec::new();
    let mut current: Option<(String, Vec<f64>, usize)> = None;
    let finish = |cur: Option<(String, Vec<f64>, usize)>, out: &mut Vec<Trajectory>, line: usize| -> Result<()> {
        if let Some((id, data, _)) = cur {
            let x = Trajectory::from_flat(id, dim, data).map_err(|e| Error::Schema(e.to_string()))?;
            if out.iter().any(|p| p.id() == x.id()) {
                return Err(Error::Schema(format!("line {line}: rows of {} are not contiguous", x.id())));
            }
            check_uniform(out, &x, line)?;
            out.push(x);
        }
        Ok(())
    };
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let id = rec[0].to_owned();
        let t: usize = rec[1].trim().parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad time index {:?}: {e}", &rec[1]),
        })?;
        let mut values = Vec::with_capacity(dim);
        for k in 0..dim {
            let v: f64 = rec[k + 2].trim().parse().map_err(|e| Error::Parse {
                line,
                msg: format!("bad value {:?} in c{k}: {e}", &rec[k + 2]),
            })?;
            values.push(v);
        }
        let same = matches!(&current, Some((cid, _, _)) if *cid == id);
        if !same {
            finish(current.take(), &mut out, line)?;
            current = Some((id, Vec::new(), 0));
        }
        let (cid, data, next_t) = current.as_mut().unwrap();
        if t != *next_t {
            return Err(Error::Schema(format!(
                "line {line}: trajectory {cid} has t={t}, expected {next_t}"
            )));
        }
        data.extend(values);
        *next_t += 1;
    }
    finish(current.take(), &mut out, 0)?;
    if out.is_empty() {
        return Err(Error::Schema(format!("{} contains no trajectories", path.display())));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            line,
            msg: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate, GeneratorConfig};

    fn small() -> Dataset {
        generate(&GeneratorConfig {
            n_trajectories: 12,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let d = small();
        for (name, fmt) in [("d.jsonl", Format::Jsonl), ("d.csv", Format::Csv)] {
            let p = dir.path().join(name);
            save(&d, &p, fmt).unwrap();
            assert_eq!(load(&p, fmt).unwrap(), d, "{name}");
        }
        let text = fs::read_to_string(dir.path().join("d.jsonl")).unwrap();
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn csv_missing_coordinate_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "id,t,c1\na,0,1.0\n").unwrap();
        assert!(matches!(load(&p, Format::Csv), Err(Error::Schema(_))));
        fs::write(&p, "id,t\na,0\n").unwrap();
        assert!(matches!(load(&p, Format::Csv), Err(Error::Schema(_))));
        // declared two dimensions, file has one
        let d = small();
        save(&d, &p, Format::Csv).unwrap();
        let text: String = fs::read_to_string(&p)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_owned() + "\n")
            .collect();
        fs::write(&p, text).unwrap();
        assert!(matches!(load(&p, Format::Csv), Err(Error::Schema(_))));
    }

    #[test]
    fn jsonl_differing_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        fs::write(
            &p,
            "{\"id\":\"a\",\"states\":[[0,0],[1,1]]}\n{\"id\":\"b\",\"states\":[[0,0],[1,1]]}\n{\"id\":\"c\",\"states\":[[0,0],[1,1],[2,2]]}\n",
        )
        .unwrap();
        assert!(matches!(load(&p, Format::Jsonl), Err(Error::Schema(_))));
    }

    #[test]
    fn malformed_record_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        fs::write(&p, "{\"id\":\"a\",\"states\":[[0,0],[1,1]]}\n{\"id\":\"b\",\"states\":[[0,0],[1,\n").unwrap();
        match load(&p, Format::Jsonl) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let p = dir.path().join("x.csv");
        fs::write(&p, "id,t,c0\na,0,1.0\na,1,oops\n").unwrap();
        match load(&p, Format::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn external_file_without_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "id,t,c0,c1\na,0,0,0\na,1,1,1\nb,0,2,2\nb,1,3,3\n").unwrap();
        let d = load(&p, Format::Csv).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.meta().observation, ObservationSpec::default());
        assert_eq!(d.meta().t_obs, 1);
    }
}
