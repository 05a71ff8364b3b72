//! Deterministic CSV and log writers for experiment results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::curves::{format_error_curves, format_histogram};
use super::{EnsembleReport, ExperimentConfig, MonteCarloReport, SdofReport};
use crate::error::Result;
use crate::io::{format_impulse_response, format_screened_poles, format_weights};
use crate::signal::FrequencyResponse;

fn format_frf_pair(truth: &FrequencyResponse, model: &FrequencyResponse) -> String {
    let mut out = String::from("frequency_hz,truth_re,truth_im,model_re,model_im\n");
    for ((f, a), b) in truth.frequencies_hz().iter().zip(truth.values()).zip(model.values()) {
        writeln!(out, "{f},{},{},{},{}", a.re, a.im, b.re, b.im).unwrap();
    }
    out
}

fn config_lines(cfg: &ExperimentConfig) -> String {
    format!("config={cfg:?}\n")
}

pub fn write_sdof_report(dir: &Path, cfg: &ExperimentConfig, r: &SdofReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("error_curve.csv"), format_error_curves(&r.curves))?;
    fs::write(dir.join("poles.csv"), format_screened_poles(&r.poles))?;
    let mut log = config_lines(cfg);
    for p in &r.training {
        writeln!(log, "training f0_hz={} theta={}", p.f0_hz(), p.theta()).unwrap();
    }
    for ov in &r.overlays {
        let case = &ov.case;
        fs::write(dir.join(format!("weights_{case}.csv")), format_weights(&ov.weights))?;
        fs::write(dir.join(format!("truth_ir_{case}.csv")), format_impulse_response(&ov.truth))?;
        fs::write(dir.join(format!("model_ir_{case}.csv")), format_impulse_response(&ov.model))?;
        fs::write(dir.join(format!("frf_{case}.csv")), format_frf_pair(&ov.truth_frf, &ov.model_frf))?;
        writeln!(log, "overlay case={case} order={} error={}", ov.order, ov.error).unwrap();
    }
    for c in &r.curves {
        if let (Some(o), Some(s)) = (c.orders.last(), c.stats.last()) {
            writeln!(log, "{} {} order={o} error={}", c.kind, c.case, s.mean).unwrap();
        }
    }
    fs::write(dir.join("run.log"), log)?;
    Ok(())
}

pub fn write_monte_carlo_report(dir: &Path, cfg: &ExperimentConfig, r: &MonteCarloReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("error_curve.csv"), format_error_curves(&r.curves))?;
    let mut log = config_lines(cfg);
    for (case, h) in &r.histograms {
        fs::write(dir.join(format!("histogram_{case}.csv")), format_histogram(h))?;
    }
    writeln!(log, "trials={} failures={}", r.trials, r.failures.len()).unwrap();
    for (t, e) in &r.failures {
        writeln!(log, "failed trial={t} reason={e}").unwrap();
    }
    fs::write(dir.join("run.log"), log)?;
    Ok(())
}

pub fn write_ensemble_report(dir: &Path, cfg: &ExperimentConfig, r: &EnsembleReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("error_curve.csv"), format_error_curves(&[r.kautz.clone(), r.fir.clone()]))?;
    fs::write(dir.join("histogram.csv"), format_histogram(&r.histogram))?;
    let mut subsets = String::from("subset,training,pole_order,order,error\n");
    for (i, s) in r.subsets.iter().enumerate() {
        let idx = s.training.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ");
        for (o, e) in r.kautz.orders.iter().zip(&s.errors) {
            writeln!(subsets, "{i},{idx},{},{o},{e}", s.pole_order).unwrap();
        }
    }
    fs::write(dir.join("subsets.csv"), subsets)?;
    let mut log = config_lines(cfg);
    writeln!(
        log,
        "test_index={} subsets={} failures={}",
        r.test_index,
        r.subsets.len(),
        r.failures.len()
    )
    .unwrap();
    for (idx, e) in &r.failures {
        writeln!(log, "failed subset={idx:?} reason={e}").unwrap();
    }
    fs::write(dir.join("run.log"), log)?;
    Ok(())
}
