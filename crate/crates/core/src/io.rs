//! CSV file formats.
//!
//! * FRF: header `frequency_hz,real,imag`
//! * impulse response: `# sample_rate_hz=<fs>` then header `k,value`
//! * pole set: optional `# key=value` provenance lines, header `re,im`, one pair per line
//! * weights: `index,value`; error history: `k,e_k`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::adaptive::IdentificationRun;
use crate::bank::{PoleSet, WeightVector};
use crate::error::{Error, Result};
use crate::prony::{ScreenedPoles, TrainingEnsemble};
use crate::signal::{FrequencyResponse, ImpulseResponse};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("{}:{}", path.display(), line + 1),
        message: message.into(),
    }
}

/// Numeric rows of a CSV, skipping blank lines, `#` comments and the header.
fn numeric_rows(path: &Path, text: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if values.len() != columns {
                    return Err(parse_err(path, i, format!("expected {columns} columns, found {}", values.len())));
                }
                rows.push(values);
            }
            Err(_) if !header_seen && rows.is_empty() => header_seen = true,
            Err(e) => return Err(parse_err(path, i, e.to_string())),
        }
    }
    Ok(rows)
}

/// `# key=value` comment lines.
fn comment_fields(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn write_frf(path: &Path, frf: &FrequencyResponse) -> Result<()> {
    let mut out = String::from("frequency_hz,real,imag\n");
    for (f, v) in frf.frequencies_hz().iter().zip(frf.values()) {
        writeln!(out, "{f},{},{}", v.re, v.im).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_frf(path: &Path) -> Result<FrequencyResponse> {
    let text = fs::read_to_string(path)?;
    let rows = numeric_rows(path, &text, 3)?;
    FrequencyResponse::new(
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| Complex64::new(r[1], r[2])).collect(),
    )
}

pub fn format_impulse_response(ir: &ImpulseResponse) -> String {
    let mut out = format!("# sample_rate_hz={}\nk,value\n", ir.sample_rate_hz());
    for (k, v) in ir.samples().iter().enumerate() {
        writeln!(out, "{k},{v}").unwrap();
    }
    out
}

pub fn write_impulse_response(path: &Path, ir: &ImpulseResponse) -> Result<()> {
    fs::write(path, format_impulse_response(ir))?;
    Ok(())
}

pub fn read_impulse_response(path: &Path) -> Result<ImpulseResponse> {
    let text = fs::read_to_string(path)?;
    let rate = comment_fields(&text)
        .into_iter()
        .find(|(k, _)| k == "sample_rate_hz")
        .ok_or_else(|| parse_err(path, 0, "missing `# sample_rate_hz=` header"))?
        .1
        .parse::<f64>()
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    let rows = numeric_rows(path, &text, 2)?;
    for (i, r) in rows.iter().enumerate() {
        if r[0] != i as f64 {
            return Err(parse_err(path, i, format!("sample index {} out of sequence", r[0])));
        }
    }
    ImpulseResponse::new(rows.iter().map(|r| r[1]).collect(), rate)
}

/// Reads every `.csv` impulse response in `dir`, sorted by file name.
pub fn read_ensemble_dir(dir: &Path) -> Result<(Vec<PathBuf>, TrainingEnsemble)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    let responses = paths
        .iter()
        .map(|p| read_impulse_response(p))
        .collect::<Result<Vec<_>>>()?;
    Ok((paths, TrainingEnsemble::new(responses)?))
}

/// Writes `ir_00.csv`, `ir_01.csv`, ... into `dir`.
pub fn write_ensemble_dir(dir: &Path, ensemble: &TrainingEnsemble) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    ensemble
        .responses()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = dir.join(format!("ir_{i:02}.csv"));
            write_impulse_response(&p, r).map(|_| p)
        })
        .collect()
}

pub fn format_poles(poles: &PoleSet, provenance: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in provenance {
        writeln!(out, "# {k}={v}").unwrap();
    }
    out.push_str("re,im\n");
    for p in poles.poles() {
        writeln!(out, "{},{}", p.re, p.im).unwrap();
    }
    out
}

pub fn format_screened_poles(s: &ScreenedPoles) -> String {
    format_poles(
        &s.poles,
        &[
            ("order", s.order.to_string()),
            ("retries", s.retries.to_string()),
            ("residual", s.residual.to_string()),
        ],
    )
}

pub fn write_poles(path: &Path, poles: &PoleSet, provenance: &[(&str, String)]) -> Result<()> {
    fs::write(path, format_poles(poles, provenance))?;
    Ok(())
}

pub fn read_poles(path: &Path) -> Result<PoleSet> {
    let text = fs::read_to_string(path)?;
    let rows = numeric_rows(path, &text, 2)?;
    PoleSet::from_poles(&rows.iter().map(|r| Complex64::new(r[0], r[1])).collect::<Vec<_>>())
}

pub fn format_weights(w: &WeightVector) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in w.as_slice().iter().enumerate() {
        writeln!(out, "{i},{v}").unwrap();
    }
    out
}

pub fn read_weights(path: &Path) -> Result<WeightVector> {
    let text = fs::read_to_string(path)?;
    WeightVector::new(numeric_rows(path, &text, 2)?.iter().map(|r| r[1]).collect())
}

pub fn format_error_history(errors: &[f64]) -> String {
    let mut out = String::from("k,e_k\n");
    for (k, e) in errors.iter().enumerate() {
        writeln!(out, "{k},{e}").unwrap();
    }
    out
}

/// Writes `weights.csv` and `error_history.csv` for a run.
pub fn write_run(dir: &Path, run: &IdentificationRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("weights.csv"), format_weights(&run.converged_weights))?;
    fs::write(dir.join("error_history.csv"), format_error_history(&run.error_history))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn impulse_response_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        let ir = ImpulseResponse::new(vec![0.0, 1.5, -2.25e-7, 3.0], 500.0).unwrap();
        write_impulse_response(&p, &ir).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# sample_rate_hz=500\nk,value\n0,0\n1,1.5\n"));
        assert_eq!(read_impulse_response(&p).unwrap(), ir);
    }

    #[test]
    fn missing_rate_header_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        fs::write(&p, "k,value\n0,1\n").unwrap();
        assert!(matches!(read_impulse_response(&p), Err(Error::Parse { .. })));
        fs::write(&p, "# sample_rate_hz=10\nk,value\n0,1\n2,1\n").unwrap();
        assert!(read_impulse_response(&p).is_err());
    }

    #[test]
    fn frf_round_trip_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let frf = FrequencyResponse::new(
            vec![0.0, 0.5, 1.0],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.25, -0.5), Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        write_frf(&p, &frf).unwrap();
        assert_eq!(read_frf(&p).unwrap(), frf);
        fs::write(&p, "frequency_hz,real,imag\n0,1\n").unwrap();
        assert!(read_frf(&p).is_err());
        fs::write(&p, "frequency_hz,real,imag\n0,1,0\n1,x,0\n").unwrap();
        assert!(read_frf(&p).is_err());
    }

    #[test]
    fn poles_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("poles.csv");
        let set = PoleSet::from_poles(&[Complex64::new(0.5, 0.25), Complex64::new(-0.1, 0.9)]).unwrap();
        write_poles(&p, &set, &[("order", "12".into())]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# order=12\nre,im\n"));
        assert_eq!(read_poles(&p).unwrap(), set);
        fs::write(&p, "re,im\n1.5,0.2\n").unwrap();
        assert!(matches!(read_poles(&p), Err(Error::UnstablePole { index: 0, .. })));
    }

    #[test]
    fn ensemble_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let e = TrainingEnsemble::new(vec![
            ImpulseResponse::new(vec![1.0, 2.0], 100.0).unwrap(),
            ImpulseResponse::new(vec![3.0], 100.0).unwrap(),
        ])
        .unwrap();
        write_ensemble_dir(dir.path(), &e).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let (paths, back) = read_ensemble_dir(dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(back.responses(), e.responses());
    }

    proptest! {
        #[test]
        fn weights_round_trip(w in prop::collection::vec(-1e6f64..1e6, 1..20)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("w.csv");
            let w = WeightVector::new(w).unwrap();
            fs::write(&p, format_weights(&w)).unwrap();
            prop_assert_eq!(read_weights(&p).unwrap(), w);
        }
    }
}
