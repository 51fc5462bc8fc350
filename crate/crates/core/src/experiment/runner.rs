//! Streams a dataset once through the selected filter.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use super::config::{Experiment, ExperimentConfig, Filter};
use super::data::{self, Dataset};
use crate::ekf::{FilterState, Predicted};
use crate::ekf_admm::{self, AdmmState, FrozenConfig, Scaled, Unscaled};
use crate::error::Result;
use crate::linalg::{self, Covariance};
use crate::model::{self, ModelSpec};
use crate::prox::{self, RegSpec};
use crate::regret::{self, GVariant, HindsightSolution, PerfIndices, RegretSeries, SegmentSolution, SolverOptions, StepRecord, Trace};

/// Generates the dataset of a configuration.
pub fn dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let network = data::NetworkData {
        noise_sigma: cfg.noise_sigma,
        input_half_width: cfg.input_half_width,
    };
    match (&cfg.experiment, &cfg.model) {
        (Experiment::SwitchingL0, _) => data::gen_switching_with(cfg.seed, cfg.steps, network),
        (_, ModelSpec::LinearTv { n_x, n_y }) => data::gen_lasso(cfg.seed, cfg.steps, *n_x, *n_y, cfg.noise_sigma),
        (_, ModelSpec::Mlp(_)) => data::gen_static_with(cfg.seed, cfg.steps, network),
    }
}

/// Initial parameters: zero for a linear model, Xavier for a network.
pub fn initial_params(cfg: &ExperimentConfig) -> Result<DVector<f64>> {
    match &cfg.model {
        ModelSpec::LinearTv { n_x, .. } => Ok(DVector::zeros(*n_x)),
        spec @ ModelSpec::Mlp(_) => Ok(model::mlp_init(spec, cfg.seed)?.into_inner()),
    }
}

enum Engine {
    Admm {
        filter: FilterState<Predicted>,
        admm: AdmmState<Scaled>,
        rho_lambda: Option<f64>,
    },
    Frozen {
        filter: FilterState<Predicted>,
        admm: AdmmState<Unscaled>,
        cfg: FrozenConfig,
    },
    Ekf {
        filter: FilterState<Predicted>,
        clip: bool,
    },
}

impl Engine {
    fn new(cfg: &ExperimentConfig, x0: &DVector<f64>) -> Result<Engine> {
        let n = x0.len();
        let h = &cfg.hyper;
        let p0 = |scale: f64| FilterState::new(x0.clone(), DMatrix::identity(n, n) * scale);
        Ok(match cfg.filter {
            Filter::EkfAdmm | Filter::EkfAdmmTv => {
                let rho_lambda = (cfg.filter == Filter::EkfAdmmTv).then(|| cfg.reg.lambda().unwrap_or(1.0));
                let rho = rho_lambda.map_or(h.rho, |l| ekf_admm::rho_tv(0, cfg.steps, l));
                Engine::Admm {
                    filter: p0(h.p0_scale)?,
                    admm: AdmmState::<Scaled>::new(x0, rho, h.n_a)?,
                    rho_lambda,
                }
            }
            Filter::FrozenAdmm => Engine::Frozen {
                filter: p0(h.p0_scale)?,
                admm: AdmmState::<Unscaled>::new(x0, h.rho)?,
                cfg: FrozenConfig::new(h.eta, h.rho, h.k_n)?,
            },
            Filter::OnlineAdmmBaseline => Engine::Frozen {
                filter: p0(h.baseline_p)?,
                admm: AdmmState::<Unscaled>::new(x0, h.rho)?,
                cfg: FrozenConfig::new(h.eta, h.rho, 0)?,
            },
            Filter::EkfClip | Filter::PlainEkf => Engine::Ekf {
                filter: p0(h.p0_scale)?,
                clip: cfg.filter == Filter::EkfClip,
            },
        })
    }

    fn xhat(&self) -> &DVector<f64> {
        match self {
            Engine::Admm { filter, .. } | Engine::Frozen { filter, .. } | Engine::Ekf { filter, .. } => filter.xhat(),
        }
    }

    /// Consensus copy; the estimate itself for the plain filters.
    fn nu(&self) -> &DVector<f64> {
        match self {
            Engine::Admm { admm, .. } => &admm.nu,
            Engine::Frozen { admm, .. } => &admm.nu,
            Engine::Ekf { filter, .. } => filter.xhat(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        self,
        k: usize,
        steps: usize,
        c: &DMatrix<f64>,
        y: &DVector<f64>,
        r: &Covariance,
        q: &Covariance,
        alpha: f64,
        reg: &RegSpec,
    ) -> Result<Engine> {
        Ok(match self {
            Engine::Admm { filter, mut admm, rho_lambda } => {
                if let Some(lambda) = rho_lambda {
                    admm.set_rho(ekf_admm::rho_tv(k, steps, lambda))?;
                }
                let out = ekf_admm::correct_fast(filter, admm, c, r, y, reg)?;
                Engine::Admm {
                    filter: out.filter.forget(alpha)?.predict(q)?,
                    admm: out.admm,
                    rho_lambda,
                }
            }
            Engine::Frozen { filter, admm, cfg } => {
                let out = ekf_admm::step_frozen(filter, admm, &cfg, c, r, q, y, reg, k)?;
                Engine::Frozen {
                    filter: out.filter,
                    admm: out.admm,
                    cfg,
                }
            }
            Engine::Ekf { filter, clip } => {
                let mut corrected = filter.correct(c, r, y)?;
                if clip {
                    if let RegSpec::Box { lo, hi } = reg {
                        let x = prox::project_box(corrected.xhat(), lo, hi)?;
                        corrected = corrected.with_estimate(x)?;
                    }
                }
                Engine::Ekf {
                    filter: corrected.forget(alpha)?.predict(q)?,
                    clip,
                }
            }
        })
    }
}

/// Quality indices at a step of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Number of samples consumed.
    pub n: usize,
    pub at_x: PerfIndices,
    pub at_nu: PerfIndices,
}

/// Objective and constraint regret of a run against its batch comparator.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub comparator_objective: f64,
    /// Whether every batch solve met its tolerance.
    pub tolerance_met: bool,
    /// The comparator is only a stationary point (non-convex problem).
    pub approximate: bool,
    /// `R_f` with `g(nu_k)` and `R_c`.
    pub series: RegretSeries,
    /// `R_f` with `g(x_k)`.
    pub r_f_x: Vec<f64>,
}

impl RegretReport {
    pub fn compute(trace: &Trace, comparator: &[f64], objective: f64, tolerance_met: bool, approximate: bool) -> Result<Self> {
        Ok(RegretReport {
            comparator_objective: objective,
            tolerance_met,
            approximate,
            series: regret::regret_series(trace, comparator, GVariant::Nu)?,
            r_f_x: regret::objective_regret_series(trace, comparator, GVariant::X)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub trace: Trace,
    pub final_x: DVector<f64>,
    pub final_nu: DVector<f64>,
    pub at_x: PerfIndices,
    pub at_nu: PerfIndices,
    pub checkpoints: Vec<Checkpoint>,
    /// Largest box violation of `nu_k` over the run (0 for other regularizers).
    pub max_cv_nu: f64,
    /// `x_{k|k-1}` at the end of every data segment.
    pub segment_estimates: Vec<DVector<f64>>,
    pub regret: Option<RegretReport>,
    /// Time spent in the filter steps.
    pub filter_time: Duration,
}

fn should_store_vectors(cfg: &ExperimentConfig) -> bool {
    cfg.output.trace_vectors.unwrap_or(cfg.model.param_count() <= 16)
}

fn checkpoint_steps(n: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=count).map(|i| (i * n).div_ceil(count).max(1)).collect();
    out.dedup();
    out
}

/// Runs the filter over `data` without computing the batch comparator.
pub fn run_online(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunResult> {
    cfg.validate()?;
    let spec = &cfg.model;
    let reg = &cfg.reg;
    let weight = cfg.loss_weight();
    let n_x = spec.param_count();
    let r = Covariance::scaled_identity(cfg.hyper.r_scale);
    let q = Covariance::scaled_identity(cfg.hyper.q_scale);
    let store = should_store_vectors(cfg);
    let n = data.len();
    let checkpoints_at = checkpoint_steps(n, cfg.output.checkpoints);

    let mut engine = Engine::new(cfg, &initial_params(cfg)?)?;
    let mut trace = Trace::with_capacity(n);
    let mut checkpoints = Vec::with_capacity(checkpoints_at.len());
    let mut next_checkpoint = checkpoints_at.iter().peekable();
    let mut segment_estimates = Vec::new();
    let mut next_segment = data.segments.iter().skip(1).peekable();
    let mut max_cv_nu = 0.0f64;
    let mut filter_time = Duration::ZERO;

    for (k, sample) in data.samples.iter().enumerate() {
        let started = Instant::now();
        let x_k = engine.xhat().clone();
        let nu_k = engine.nu().clone();
        let lin = model::linearize(spec, &x_k, sample)?;
        let loss = 0.5 * weight * (&sample.y - &lin.output).norm_squared();
        let target = lin.target(&sample.y, &x_k)?;
        engine = engine.step(k, n, &lin.jacobian, &target, &r, &q, cfg.hyper.alpha_forget, reg)?;
        let wall_time = started.elapsed();
        filter_time += wall_time;

        max_cv_nu = max_cv_nu.max(prox::box_violation(reg, engine.nu()));
        let record = StepRecord {
            k,
            loss,
            g_x: prox::reg_value(reg, &x_k),
            g_nu: prox::reg_value(reg, &nu_k),
            consensus_gap: linalg::dist_sq(engine.xhat(), &nu_k),
            x: store.then(|| x_k.clone()),
            nu: store.then(|| nu_k.clone()),
            wall_time,
        };
        trace.push(record)?;

        if next_segment.peek().is_some_and(|b| **b == k + 1) {
            next_segment.next();
            segment_estimates.push(engine.xhat().clone());
        }
        if next_checkpoint.peek().is_some_and(|c| **c == k + 1) {
            next_checkpoint.next();
            checkpoints.push(Checkpoint {
                n: k + 1,
                at_x: regret::perf_indices(engine.xhat(), &data.samples, spec, reg, weight)?,
                at_nu: regret::perf_indices(engine.nu(), &data.samples, spec, reg, weight)?,
            });
        }
    }

    let final_x = engine.xhat().clone();
    let final_nu = engine.nu().clone();
    debug_assert_eq!(final_x.len(), n_x);
    Ok(RunResult {
        config: cfg.clone(),
        at_x: regret::perf_indices(&final_x, &data.samples, spec, reg, weight)?,
        at_nu: regret::perf_indices(&final_nu, &data.samples, spec, reg, weight)?,
        trace,
        final_x,
        final_nu,
        checkpoints,
        max_cv_nu,
        segment_estimates,
        regret: None,
        filter_time,
    })
}

/// Batch comparator of a dataset: one solution per constant segment,
/// warm-started from `starts`.
pub fn comparator(cfg: &ExperimentConfig, data: &Dataset, starts: &[DVector<f64>]) -> Result<SegmentSolution> {
    let weight = cfg.loss_weight();
    let opts = SolverOptions {
        tol: cfg.hindsight.tol * weight * data.len() as f64,
        max_iter: cfg.hindsight.max_iter,
        ..SolverOptions::default()
    };
    regret::segment_hindsight(&data.samples, &data.segments, &cfg.model, &cfg.reg, weight, starts, &opts)
}

/// Starting points for [`comparator`]: the online estimates at the segment
/// ends.
pub fn warm_starts(result: &RunResult) -> Vec<DVector<f64>> {
    result.segment_estimates.clone()
}

/// Runs the filter and, when enabled, the regret against the batch
/// comparator.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    let data = dataset(cfg)?;
    let mut result = run_online(cfg, &data)?;
    if cfg.hindsight.enabled {
        let sol = comparator(cfg, &data, &warm_starts(&result))?;
        result.regret = Some(report(cfg, &result.trace, &sol)?);
    }
    Ok(result)
}

pub fn report(cfg: &ExperimentConfig, trace: &Trace, sol: &SegmentSolution) -> Result<RegretReport> {
    let tolerance_met = sol.segments.iter().all(|s: &HindsightSolution| s.tolerance_met);
    let approximate = !cfg.reg.is_convex() || matches!(cfg.model, ModelSpec::Mlp(_));
    RegretReport::compute(trace, &sol.per_step, sol.objective, tolerance_met, approximate)
}
