//! Result files of a run:
//!
//! * `trace.csv`: `k, loss, g_x, g_nu, consensus_gap` and, when the trace
//!   stores vectors, `x_i` and `nu_i` columns;
//! * `regret.csv`: `n, R_f, R_f/n, R_c, R_c/n, R_f_x, R_f_x/n` (the `R_f`
//!   columns are present only when the comparator was computed);
//! * `checkpoints.csv`: indices at `x` and `nu` at evenly spaced steps;
//! * `summary.txt`: `key = value` lines;
//! * `config.toml`: the fully resolved configuration;
//! * `params.csv`: final `x` and `nu`, one row each;
//! * `regret.svg`, `perf.svg`.
//!
//! Everything except the timing lines of `summary.txt` is a deterministic
//! function of the configuration.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::runner::{Checkpoint, RunResult};
use super::svg::{thin, Chart, Series};
use crate::error::{Error, Result};
use crate::model::write_params_csv;
use crate::regret::PerfIndices;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(Error::from)
}

pub fn write_trace(path: &Path, result: &RunResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    let records = result.trace.records();
    let dim = records.first().and_then(|r| r.x.as_ref()).map_or(0, |x| x.len());
    let mut header = vec!["k".to_string(), "loss".into(), "g_x".into(), "g_nu".into(), "consensus_gap".into()];
    header.extend((0..dim).map(|i| format!("x_{i}")));
    header.extend((0..dim).map(|i| format!("nu_{i}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.k.to_string(),
            r.loss.to_string(),
            r.g_x.to_string(),
            r.g_nu.to_string(),
            r.consensus_gap.to_string(),
        ];
        for v in [&r.x, &r.nu].into_iter().flatten() {
            row.extend(v.iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_regret(path: &Path, result: &RunResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    let r_c = crate::regret::constraint_regret_series(&result.trace);
    match &result.regret {
        Some(rep) => {
            w.write_record(["n", "R_f", "R_f/n", "R_c", "R_c/n", "R_f_x", "R_f_x/n"])?;
            for (i, ((rf, rc), rfx)) in rep.series.r_f.iter().zip(&rep.series.r_c).zip(&rep.r_f_x).enumerate() {
                let n = (i + 1) as f64;
                w.write_record([
                    (i + 1).to_string(),
                    rf.to_string(),
                    (rf / n).to_string(),
                    rc.to_string(),
                    (rc / n).to_string(),
                    rfx.to_string(),
                    (rfx / n).to_string(),
                ])?;
            }
        }
        None => {
            w.write_record(["n", "R_c", "R_c/n"])?;
            for (i, rc) in r_c.iter().enumerate() {
                w.write_record([(i + 1).to_string(), rc.to_string(), (rc / (i + 1) as f64).to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_checkpoints(path: &Path, checkpoints: &[Checkpoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "n", "loss_x", "mse_x", "reg_x", "cv_x", "sparsity_x", "loss_nu", "mse_nu", "reg_nu", "cv_nu", "sparsity_nu",
    ])?;
    for c in checkpoints {
        let mut row = vec![c.n.to_string()];
        for p in [&c.at_x, &c.at_nu] {
            row.extend([p.loss, p.mse, p.reg, p.cv, p.sparsity].map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn perf_lines(out: &mut String, suffix: &str, p: &PerfIndices) {
    for (key, v) in [("loss", p.loss), ("mse", p.mse), ("reg", p.reg), ("cv", p.cv), ("sparsity", p.sparsity)] {
        out.push_str(&format!("{key}_{suffix} = {v}\n"));
    }
}

pub fn summary_text(result: &RunResult) -> String {
    let cfg = &result.config;
    let mut out = String::new();
    out.push_str(&format!("experiment = {}\n", cfg.experiment));
    out.push_str(&format!("filter = {}\n", cfg.filter));
    out.push_str(&format!("steps = {}\n", result.trace.len()));
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out.push_str(&format!("wall_time_s = {:.6}\n", result.filter_time.as_secs_f64()));
    out.push_str(&format!("mean_step_time_us = {:.3}\n", 1e6 * result.filter_time.as_secs_f64() / result.trace.len().max(1) as f64));
    perf_lines(&mut out, "x", &result.at_x);
    perf_lines(&mut out, "nu", &result.at_nu);
    out.push_str(&format!("max_cv_nu = {}\n", result.max_cv_nu));
    out.push_str(&format!("R_c = {}\n", crate::regret::constraint_regret(&result.trace)));
    if let Some(rep) = &result.regret {
        let n = result.trace.len() as f64;
        out.push_str(&format!("R_f = {}\n", rep.series.final_r_f()));
        out.push_str(&format!("R_f/N = {}\n", rep.series.final_r_f() / n));
        out.push_str(&format!("R_f_x = {}\n", rep.r_f_x.last().copied().unwrap_or(0.0)));
        out.push_str(&format!("R_c/N = {}\n", rep.series.final_r_c() / n));
        out.push_str(&format!("comparator_objective = {}\n", rep.comparator_objective));
        out.push_str(&format!("comparator_tolerance_met = {}\n", rep.tolerance_met));
        out.push_str(&format!("regret_approximate = {}\n", rep.approximate));
    }
    out
}

fn series_of(values: &[f64], per_n: bool) -> Vec<(f64, f64)> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let n = (i + 1) as f64;
            (n, if per_n { v / n } else { *v })
        })
        .collect()
}

pub fn regret_chart(result: &RunResult) -> String {
    let r_c = crate::regret::constraint_regret_series(&result.trace);
    let mut series = vec![Series { label: "R_c(n)/n", points: thin(&series_of(&r_c, true), 500) }];
    if let Some(rep) = &result.regret {
        series.insert(0, Series { label: "R_f(n)/n", points: thin(&series_of(&rep.series.r_f, true), 500) });
    }
    Chart {
        title: "sample regret",
        x_label: "n",
        log_y: result.config.output.log_scale,
        series,
    }
    .render()
}

pub fn perf_chart(result: &RunResult) -> String {
    let pick = |f: fn(&Checkpoint) -> f64| result.checkpoints.iter().map(|c| (c.n as f64, f(c))).collect::<Vec<_>>();
    Chart {
        title: "performance indices",
        x_label: "n",
        log_y: true,
        series: vec![
            Series { label: "Loss(nu)", points: pick(|c| c.at_nu.loss) },
            Series { label: "Mse(nu)", points: pick(|c| c.at_nu.mse) },
            Series { label: "Reg(nu)", points: pick(|c| c.at_nu.reg) },
            Series { label: "Mse(x)", points: pick(|c| c.at_x.mse) },
            Series { label: "Cv(x)", points: pick(|c| c.at_x.cv) },
        ],
    }
    .render()
}

/// Writes all result files into `dir`, creating it if needed. Returns the
/// paths written.
pub fn write_all(dir: &Path, result: &RunResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = |name: &str| dir.join(name);
    let mut written = Vec::new();

    write_trace(&path("trace.csv"), result)?;
    write_regret(&path("regret.csv"), result)?;
    write_checkpoints(&path("checkpoints.csv"), &result.checkpoints)?;
    written.extend(["trace.csv", "regret.csv", "checkpoints.csv"].map(path));

    let text_files = [
        ("summary.txt", summary_text(result)),
        ("config.toml", result.config.to_toml_string()?),
        ("regret.svg", regret_chart(result)),
        ("perf.svg", perf_chart(result)),
    ];
    for (name, text) in text_files {
        let p = path(name);
        let mut f = create(&p)?;
        f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }

    let p = path("params.csv");
    write_params_csv(File::create(&p).map_err(|e| Error::io(&p, e))?, &[&result.final_x, &result.final_nu])?;
    written.push(p);
    Ok(written)
}
