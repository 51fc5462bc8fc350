//! Repeated runs over seeds and filters, summarized as mean (standard
//! deviation).

use std::fmt::Write;

use super::config::{ExperimentConfig, Filter};
use super::runner::{self, RunResult};
use crate::error::Result;
use crate::regret::PerfIndices;

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub filter: Filter,
    pub at_x: PerfIndices,
    pub at_nu: PerfIndices,
    pub time_s: f64,
    /// `R_f(N)/N`, when the comparator was computed.
    pub sample_regret: Option<f64>,
}

impl SeedRun {
    fn from_result(result: &RunResult) -> Self {
        SeedRun {
            seed: result.config.seed,
            filter: result.config.filter,
            at_x: result.at_x,
            at_nu: result.at_nu,
            time_s: result.filter_time.as_secs_f64(),
            sample_regret: result
                .regret
                .as_ref()
                .map(|r| r.series.final_r_f() / result.trace.len() as f64),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub runs: Vec<SeedRun>,
}

/// Runs `base` for every filter and seed. The dataset of a seed is shared
/// by all filters.
pub fn sweep(base: &ExperimentConfig, seeds: &[u64], filters: &[Filter]) -> Result<Sweep> {
    let mut out = Sweep::default();
    for &seed in seeds {
        let mut cfg = base.clone();
        cfg.seed = seed;
        let data = runner::dataset(&cfg)?;
        for &filter in filters {
            let mut run_cfg = cfg.clone();
            run_cfg.filter = filter;
            let mut result = runner::run_online(&run_cfg, &data)?;
            if run_cfg.hindsight.enabled {
                let sol = runner::comparator(&run_cfg, &data, &runner::warm_starts(&result))?;
                result.regret = Some(runner::report(&run_cfg, &result.trace, &sol)?);
            }
            out.runs.push(SeedRun::from_result(&result));
        }
    }
    Ok(out)
}

/// Which estimate a table row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimate {
    X,
    Nu,
}

impl Sweep {
    pub fn filters(&self) -> Vec<Filter> {
        let mut out: Vec<Filter> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.filter) {
                out.push(r.filter);
            }
        }
        out
    }

    pub fn values(&self, filter: Filter, f: impl Fn(&SeedRun) -> f64) -> Vec<f64> {
        self.runs.iter().filter(|r| r.filter == filter).map(f).collect()
    }

    pub fn table(&self, at: Estimate) -> String {
        let pick = move |r: &SeedRun| match at {
            Estimate::X => r.at_x,
            Estimate::Nu => r.at_nu,
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22} {:>22} {:>22} {:>18} {:>22} {:>18}",
            "", "Loss", "Mse", "sparsity [%]", "Cv", "time [s]"
        );
        for filter in self.filters() {
            let cell = |values: Vec<f64>, scale: f64| {
                let (m, s) = mean_std(&values);
                format!("{:.4e} ({:.2e})", m * scale, s * scale)
            };
            let pct = |values: Vec<f64>| {
                let (m, s) = mean_std(&values);
                format!("{:.1} ({:.1})", 100.0 * m, 100.0 * s)
            };
            let _ = writeln!(
                out,
                "{:<22} {:>22} {:>22} {:>18} {:>22} {:>18}",
                filter.label(),
                cell(self.values(filter, |r| pick(r).loss), 1.0),
                cell(self.values(filter, |r| pick(r).mse), 1.0),
                pct(self.values(filter, |r| pick(r).sparsity)),
                cell(self.values(filter, |r| pick(r).cv), 1.0),
                {
                    let (m, s) = mean_std(&self.values(filter, |r| r.time_s));
                    format!("{m:.3} ({s:.3})")
                },
            );
        }
        out
    }

    /// One row per run.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "seed", "filter", "loss_x", "mse_x", "cv_x", "sparsity_x", "loss_nu", "mse_nu", "cv_nu", "sparsity_nu", "R_f/N",
        ])?;
        for r in &self.runs {
            let mut row = vec![r.seed.to_string(), r.filter.to_string()];
            for p in [&r.at_x, &r.at_nu] {
                row.extend([p.loss, p.mse, p.cv, p.sparsity].map(|v| v.to_string()));
            }
            row.push(r.sample_regret.map_or(String::new(), |v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| crate::error::Error::io(path, e))
    }
}
