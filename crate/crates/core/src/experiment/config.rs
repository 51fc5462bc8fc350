//! Experiment configuration, read from and written to TOML.
//!
//! ```toml
//! experiment = "static_l1"
//! steps = 20000
//! seed = 0
//! filter = "ekf_admm"
//! noise_sigma = 0.01
//! output_dir = "results"
//!
//! [model]
//! kind = "mlp"
//! n_in = 2
//! hidden = [8, 8]
//! n_out = 1
//!
//! [reg]
//! kind = "l1"
//! lambda = 1e-4
//!
//! [hyper]
//! rho = 1e-3
//! n_a = 1
//! q_scale = 1e-4
//! r_scale = 1.0
//! p0_scale = 100.0
//! ```
//!
//! Missing tables and keys take the defaults of [`Hyper`], [`HindsightConfig`]
//! and [`OutputConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::prox::RegSpec;

/// Which data generator feeds the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Experiment {
    Lasso,
    StaticL1,
    StaticBounds,
    SwitchingL0,
    /// Data chosen by the model: regression data for a linear model,
    /// static-system data for a network.
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Lasso,
        Experiment::StaticL1,
        Experiment::StaticBounds,
        Experiment::SwitchingL0,
        Experiment::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Lasso => "lasso",
            Experiment::StaticL1 => "static_l1",
            Experiment::StaticBounds => "static_bounds",
            Experiment::SwitchingL0 => "switching_l0",
            Experiment::Custom => "custom",
        }
    }
}

fn names<T: Copy>(all: &[T], name: impl Fn(T) -> &'static str) -> String {
    all.iter().map(|v| name(*v)).collect::<Vec<_>>().join(", ")
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key = s.replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| format!("unknown experiment `{s}`, expected one of {}", names(&Experiment::ALL, Experiment::name)))
    }
}

impl TryFrom<String> for Experiment {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Experiment> for String {
    fn from(e: Experiment) -> String {
        e.name().to_string()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Filter {
    /// Fast EKF-ADMM with constant `rho`.
    EkfAdmm,
    /// Fast EKF-ADMM with `rho_k = 10^(k/N - 2) lambda`.
    EkfAdmmTv,
    /// One ADMM iteration per step, covariance frozen after `k_n` steps.
    FrozenAdmm,
    /// Frozen variant with `k_n = 0` and `P = baseline_p I`.
    OnlineAdmmBaseline,
    /// Plain EKF whose estimate is projected on the box after each correction.
    EkfClip,
    /// Plain EKF, regularizer ignored.
    PlainEkf,
}

impl Filter {
    pub const ALL: [Filter; 6] = [
        Filter::EkfAdmm,
        Filter::EkfAdmmTv,
        Filter::FrozenAdmm,
        Filter::OnlineAdmmBaseline,
        Filter::EkfClip,
        Filter::PlainEkf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Filter::EkfAdmm => "ekf_admm",
            Filter::EkfAdmmTv => "ekf_admm_tv",
            Filter::FrozenAdmm => "frozen_admm",
            Filter::OnlineAdmmBaseline => "online_admm",
            Filter::EkfClip => "ekf_clip",
            Filter::PlainEkf => "plain_ekf",
        }
    }

    /// Display label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Filter::EkfAdmm => "EKF-ADMM",
            Filter::EkfAdmmTv => "EKF-ADMMtv",
            Filter::FrozenAdmm => "EKF-ADMM (frozen P)",
            Filter::OnlineAdmmBaseline => "online-ADMM",
            Filter::EkfClip => "EKF-CLIP",
            Filter::PlainEkf => "EKF",
        }
    }
}

impl FromStr for Filter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key = s.replace('-', "_");
        Filter::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| format!("unknown filter `{s}`, expected one of {}", names(&Filter::ALL, Filter::name)))
    }
}

impl TryFrom<String> for Filter {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Filter> for String {
    fn from(f: Filter) -> String {
        f.name().to_string()
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub rho: f64,
    pub n_a: usize,
    pub eta: f64,
    pub k_n: usize,
    /// Forgetting factor, `P <- P / alpha_forget` before each time update.
    pub alpha_forget: f64,
    pub q_scale: f64,
    pub r_scale: f64,
    pub p0_scale: f64,
    /// Constant covariance scale of the online-ADMM baseline.
    pub baseline_p: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            rho: 1.0,
            n_a: 1,
            eta: 1.0,
            k_n: 0,
            alpha_forget: 1.0,
            q_scale: 1e-4,
            r_scale: 1.0,
            p0_scale: 100.0,
            baseline_p: 1e-2,
        }
    }
}

/// Batch comparator used for the objective regret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HindsightConfig {
    pub enabled: bool,
    pub max_iter: usize,
    /// Gradient-mapping tolerance per sample and per unit loss weight.
    pub tol: f64,
}

impl Default for HindsightConfig {
    fn default() -> Self {
        HindsightConfig {
            enabled: true,
            max_iter: 300,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Number of evenly spaced steps at which Loss/Mse/Reg/Cv are evaluated
    /// on the whole dataset.
    pub checkpoints: usize,
    /// Store `x_k` and `nu_k` in the trace. `None` means: only when `n_x <= 16`.
    pub trace_vectors: Option<bool>,
    /// Logarithmic y axis on the regret plot.
    pub log_scale: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            checkpoints: 20,
            trace_vectors: None,
            log_scale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub steps: usize,
    pub seed: u64,
    pub filter: Filter,
    pub noise_sigma: f64,
    /// Network inputs are uniform on `[-a, a]²`.
    #[serde(default = "unit")]
    pub input_half_width: f64,
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    pub reg: RegSpec,
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default)]
    pub hindsight: HindsightConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn unit() -> f64 {
    1.0
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must be positive and finite")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        if self.experiment == Experiment::SwitchingL0 && self.steps < 3 {
            return Err(Error::config("steps", "switching data needs at least 3 steps"));
        }
        let h = &self.hyper;
        positive("hyper.rho", h.rho)?;
        positive("hyper.eta", h.eta)?;
        positive("hyper.q_scale", h.q_scale)?;
        positive("hyper.r_scale", h.r_scale)?;
        positive("hyper.p0_scale", h.p0_scale)?;
        positive("hyper.baseline_p", h.baseline_p)?;
        if h.n_a == 0 {
            return Err(Error::config("hyper.n_a", "must be at least 1"));
        }
        if !(h.alpha_forget > 0.0 && h.alpha_forget <= 1.0) {
            return Err(Error::config("hyper.alpha_forget", format!("{} not in (0, 1]", h.alpha_forget)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma", "must be >= 0"));
        }
        positive("hindsight.tol", self.hindsight.tol)?;
        positive("input_half_width", self.input_half_width)?;
        self.model.validate().map_err(|e| Error::config("model", e.to_string()))?;
        self.reg
            .validate(self.model.param_count())
            .map_err(|e| Error::config("reg", e.to_string()))?;

        let linear = matches!(self.model, ModelSpec::LinearTv { .. });
        let wants_linear = match self.experiment {
            Experiment::Lasso => Some(true),
            Experiment::Custom => None,
            _ => Some(false),
        };
        if wants_linear.is_some_and(|w| w != linear) {
            return Err(Error::config("model", format!("model kind does not fit experiment {}", self.experiment)));
        }
        if let ModelSpec::Mlp(m) = &self.model {
            if m.n_in != 2 || m.n_out != 1 {
                return Err(Error::config("model", "network data needs n_in = 2 and n_out = 1"));
            }
        }
        if self.filter == Filter::EkfAdmmTv && self.reg.lambda().is_none() {
            return Err(Error::config("filter", "ekf_admm_tv needs an l1 or l0 regularizer for its rho schedule"));
        }
        if self.filter == Filter::EkfClip && !matches!(self.reg, RegSpec::Box { .. }) {
            return Err(Error::config("filter", "ekf_clip needs a box regularizer"));
        }
        Ok(())
    }

    /// Loss weight `1 / r_scale` in `f_k(x) = ½ ||y - h(x)||²_{R^{-1}}`.
    pub fn loss_weight(&self) -> f64 {
        1.0 / self.hyper.r_scale
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(toml_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }
}

/// Names the offending key when the parser can locate it.
fn toml_error(e: toml::de::Error) -> Error {
    let message = e.message().to_string();
    let field = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("missing field") || message.starts_with("unknown field"))
        .map(str::to_string);
    let field = field.unwrap_or_else(|| {
        if message.contains("experiment") {
            "experiment".into()
        } else if message.contains("filter") {
            "filter".into()
        } else {
            "config".into()
        }
    });
    Error::config(field, message)
}
