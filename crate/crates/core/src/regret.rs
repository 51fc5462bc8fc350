//! Regret functionals, hindsight comparators and performance indices.
//!
//! The running objective regret after `n` steps is
//!
//! ```text
//! R_f(n) = sum_{k<n} (f_k(x_k) + g(.)) - sum_{k<n} comparator_k
//! ```
//!
//! where `comparator_k` is the per-step loss of the hindsight solution that
//! covers step `k` (a single point, or one point per segment), and the
//! regularizer is evaluated at `nu_k` or at `x_k` depending on
//! [`GVariant`]. The constraint regret is `R_c(n) = sum_{k<n} ||x_{k+1} - nu_k||²`.

use std::time::Duration;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::model::{linearize, model_eval, ModelSpec, Sample};
use crate::prox::{self, ExtReal, RegSpec};

/// One step of an online run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    /// `f_k(x_k)` at the estimate available before `y_k` was seen.
    pub loss: f64,
    /// `g(x_k)`
    pub g_x: ExtReal,
    /// `g(nu_k)`
    pub g_nu: ExtReal,
    /// `||x_{k+1} - nu_k||²`
    pub consensus_gap: f64,
    /// `x_k`, kept only when the trace records vectors.
    pub x: Option<DVector<f64>>,
    /// `nu_k`, kept only when the trace records vectors.
    pub nu: Option<DVector<f64>>,
    pub wall_time: Duration,
}

/// Per-step records of a run, contiguous in `k` from 0.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    records: Vec<StepRecord>,
    dim: Option<usize>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Trace {
            records: Vec::with_capacity(n),
            dim: None,
        }
    }

    /// Appends a record; `k` must be the next index and vector lengths
    /// must not change along the trace.
    pub fn push(&mut self, record: StepRecord) -> Result<()> {
        if record.k != self.records.len() {
            return Err(Error::invalid(
                "trace",
                format!("expected step {}, got {}", self.records.len(), record.k),
            ));
        }
        for v in [&record.x, &record.nu].into_iter().flatten() {
            match self.dim {
                None => self.dim = Some(v.len()),
                Some(d) => check_dim("trace vectors", d, v.len())?,
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_wall_time(&self) -> Duration {
        self.records.iter().map(|r| r.wall_time).sum()
    }
}

/// Where the regularizer is evaluated in the objective regret.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GVariant {
    /// `g(nu_k)`, the consensus copy.
    Nu,
    /// `g(x_k)`, the filter estimate.
    X,
}

impl GVariant {
    fn pick(self, r: &StepRecord) -> ExtReal {
        match self {
            GVariant::Nu => r.g_nu,
            GVariant::X => r.g_x,
        }
    }
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Running regret series, indexed by `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub r_f: Vec<f64>,
    pub r_c: Vec<f64>,
}

impl RegretSeries {
    /// `R(n) / n`.
    pub fn sample(series: &[f64]) -> Vec<f64> {
        series.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).collect()
    }

    pub fn final_r_f(&self) -> f64 {
        self.r_f.last().copied().unwrap_or(0.0)
    }

    pub fn final_r_c(&self) -> f64 {
        self.r_c.last().copied().unwrap_or(0.0)
    }
}

fn online_term(r: &StepRecord, variant: GVariant) -> f64 {
    r.loss + variant.pick(r).to_f64()
}

/// Running `R_f(n)` against a per-step comparator, accumulated
/// incrementally.
pub fn objective_regret_series(trace: &Trace, comparator: &[f64], variant: GVariant) -> Result<Vec<f64>> {
    check_dim("comparator losses", trace.len(), comparator.len())?;
    let mut acc = Neumaier::default();
    let mut infinite = false;
    Ok(trace
        .records()
        .iter()
        .zip(comparator)
        .map(|(r, c)| {
            let term = online_term(r, variant);
            infinite |= term.is_infinite();
            if infinite {
                f64::INFINITY
            } else {
                acc.add(term - c);
                acc.value()
            }
        })
        .collect())
}

/// `R_f(N)` against a hindsight objective computed on the same data.
pub fn objective_regret(trace: &Trace, hindsight_objective: f64, variant: GVariant) -> f64 {
    let mut acc = Neumaier::default();
    for r in trace.records() {
        let term = online_term(r, variant);
        if term.is_infinite() {
            return f64::INFINITY;
        }
        acc.add(term);
    }
    acc.value() - hindsight_objective
}

/// Running `R_c(n)`.
pub fn constraint_regret_series(trace: &Trace) -> Vec<f64> {
    let mut acc = Neumaier::default();
    trace
        .records()
        .iter()
        .map(|r| {
            acc.add(r.consensus_gap);
            acc.value()
        })
        .collect()
}

/// `R_c(N)`.
pub fn constraint_regret(trace: &Trace) -> f64 {
    constraint_regret_series(trace).last().copied().unwrap_or(0.0)
}

pub fn regret_series(trace: &Trace, comparator: &[f64], variant: GVariant) -> Result<RegretSeries> {
    Ok(RegretSeries {
        r_f: objective_regret_series(trace, comparator, variant)?,
        r_c: constraint_regret_series(trace),
    })
}

/// `f_k(x) = ½ weight ||y_k - h_k(x)||²`.
pub fn sample_loss(model: &ModelSpec, x: &DVector<f64>, sample: &Sample, weight: f64) -> Result<f64> {
    let r = &sample.y - model_eval(model, x, sample)?;
    Ok(0.5 * weight * r.norm_squared())
}

/// The smooth part `F(x) = sum_k f_k(x)` of a batch problem.
#[derive(Debug, Clone, Copy)]
pub struct BatchLoss<'a> {
    pub model: &'a ModelSpec,
    pub samples: &'a [Sample],
    pub weight: f64,
}

impl BatchLoss<'_> {
    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let mut acc = Neumaier::default();
        for s in self.samples {
            acc.add(sample_loss(self.model, x, s, self.weight)?);
        }
        Ok(acc.value())
    }

    pub fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let mut acc = Neumaier::default();
        let mut grad = DVector::zeros(x.len());
        for s in self.samples {
            let lin = linearize(self.model, x, s)?;
            let r = &s.y - &lin.output;
            acc.add(0.5 * self.weight * r.norm_squared());
            grad.gemv_tr(-self.weight, &lin.jacobian, &r, 1.0);
        }
        Ok((acc.value(), grad))
    }

    /// Per-step losses `f_k(x) + g(x)`.
    pub fn per_step(&self, x: &DVector<f64>, reg: &RegSpec) -> Result<Vec<f64>> {
        let g = prox::reg_value(reg, x).to_f64();
        self.samples
            .iter()
            .map(|s| Ok(sample_loss(self.model, x, s, self.weight)? + g))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the gradient-mapping norm `||x - x+|| / t` falls to this.
    pub tol: f64,
    pub max_iter: usize,
    /// First trial step length.
    pub initial_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 10_000,
            initial_step: 1.0,
        }
    }
}

/// A batch minimizer of `sum_k (f_k(x) + g(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HindsightSolution {
    pub x_star: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub tolerance_met: bool,
    /// Objective after every accepted iteration, starting with the initial point.
    pub history: Vec<f64>,
}

const SUFFICIENT_DECREASE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 200;

/// Full-batch proximal gradient with backtracking on
/// `Phi(x) = F(x) + N g(x)`, `N = samples.len()`. For `L0` the result is a
/// stationary point, not a global minimizer.
pub fn hindsight_prox_grad(
    samples: &[Sample],
    model: &ModelSpec,
    reg: &RegSpec,
    weight: f64,
    x0: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<HindsightSolution> {
    if samples.is_empty() {
        return Err(Error::invalid("dataset", "hindsight needs at least one sample"));
    }
    check_dim("hindsight start", model.param_count(), x0.len())?;
    reg.validate(x0.len())?;
    let loss = BatchLoss { model, samples, weight };
    let batch_reg = reg.scaled(samples.len() as f64);
    let phi = |x: &DVector<f64>, smooth: f64| smooth + prox::reg_value(&batch_reg, x).to_f64();

    // a start outside the box is replaced by its projection
    let mut x = match reg {
        RegSpec::Box { lo, hi } => prox::project_box(x0, lo, hi)?,
        _ => x0.clone(),
    };
    let (mut f, mut grad) = loss.value_and_gradient(&x)?;
    let mut obj = phi(&x, f);
    if !obj.is_finite() {
        return Err(Error::NonFinite("hindsight objective"));
    }
    let mut history = vec![obj];
    let mut t = opts.initial_step;
    let mut iterations = 0;
    let mut tolerance_met = false;

    while iterations < opts.max_iter {
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = prox::prox_apply(&batch_reg, &(&x - &grad * t), 1.0 / t)?;
            let d = &candidate - &x;
            let d2 = d.norm_squared();
            if d2 == 0.0 {
                accepted = Some((candidate, f, obj, 0.0));
                break;
            }
            let f_new = loss.value(&candidate)?;
            let obj_new = phi(&candidate, f_new);
            if obj_new.is_finite() && obj_new <= obj - SUFFICIENT_DECREASE / (2.0 * t) * d2 {
                accepted = Some((candidate, f_new, obj_new, d2));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, _, obj_new, d2)) = accepted else {
            // no decrease at any resolvable step length: x is stationary to
            // machine precision
            tolerance_met = true;
            break;
        };
        iterations += 1;
        let mapping_norm = d2.sqrt() / t;
        x = x_new;
        obj = obj_new;
        history.push(obj);
        if mapping_norm <= opts.tol {
            tolerance_met = true;
            break;
        }
        (f, grad) = loss.value_and_gradient(&x)?;
        t *= 2.0;
    }

    Ok(HindsightSolution {
        x_star: x,
        objective: obj,
        iterations,
        tolerance_met,
        history,
    })
}

/// Comparator made of one hindsight solution per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSolution {
    pub objective: f64,
    /// Per-step comparator losses, `f_k(z_i) + g(z_i)` for `k` in segment `i`.
    pub per_step: Vec<f64>,
    pub segments: Vec<HindsightSolution>,
}

/// Independent hindsight solutions on `[b_0, b_1), [b_1, b_2), ...`.
/// `boundaries` must start at 0, end at `samples.len()` and be strictly
/// increasing. `starts` holds one initial point per segment.
pub fn segment_hindsight(
    samples: &[Sample],
    boundaries: &[usize],
    model: &ModelSpec,
    reg: &RegSpec,
    weight: f64,
    starts: &[DVector<f64>],
    opts: &SolverOptions,
) -> Result<SegmentSolution> {
    if boundaries.len() < 2 || boundaries[0] != 0 || *boundaries.last().unwrap() != samples.len() {
        return Err(Error::invalid(
            "boundaries",
            format!("must run from 0 to {}", samples.len()),
        ));
    }
    check_dim("segment starts", boundaries.len() - 1, starts.len())?;
    let mut per_step = Vec::with_capacity(samples.len());
    let mut segments = Vec::with_capacity(starts.len());
    let mut total = Neumaier::default();
    for (pair, start) in boundaries.windows(2).zip(starts) {
        if pair[1] <= pair[0] {
            return Err(Error::invalid("boundaries", format!("empty segment [{}, {})", pair[0], pair[1])));
        }
        let part = &samples[pair[0]..pair[1]];
        let sol = hindsight_prox_grad(part, model, reg, weight, start, opts)?;
        let losses = BatchLoss { model, samples: part, weight }.per_step(&sol.x_star, reg)?;
        total.add(sol.objective);
        per_step.extend(losses);
        segments.push(sol);
    }
    Ok(SegmentSolution {
        objective: total.value(),
        per_step,
        segments,
    })
}

/// Quality indices of a parameter vector on a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfIndices {
    /// `(1/N) sum_k (f_k(x) + g(x))`
    pub loss: f64,
    /// `(1/N) sum_k f_k(x)`
    pub mse: f64,
    /// `g(x)`, the average of a constant
    pub reg: f64,
    /// `||x - Π_C(x)||²` for box regularizers, 0 otherwise
    pub cv: f64,
    /// Fraction of exactly-zero entries.
    pub sparsity: f64,
}

pub fn perf_indices(
    x: &DVector<f64>,
    samples: &[Sample],
    model: &ModelSpec,
    reg: &RegSpec,
    weight: f64,
) -> Result<PerfIndices> {
    if samples.is_empty() {
        return Err(Error::invalid("dataset", "performance indices need at least one sample"));
    }
    let mse = BatchLoss { model, samples, weight }.value(x)? / samples.len() as f64;
    let g = prox::reg_value(reg, x).to_f64();
    Ok(PerfIndices {
        loss: mse + g,
        mse,
        reg: g,
        cv: prox::box_violation(reg, x),
        sparsity: sparsity(x),
    })
}

pub fn sparsity(x: &DVector<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().filter(|v| **v == 0.0).count() as f64 / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Regressor;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(k: usize, loss: f64, g: f64, gap: f64) -> StepRecord {
        StepRecord {
            k,
            loss,
            g_x: ExtReal::Finite(g),
            g_nu: ExtReal::Finite(g),
            consensus_gap: gap,
            x: None,
            nu: None,
            wall_time: Duration::ZERO,
        }
    }

    fn linear_data(rng: &mut ChaCha8Rng, n_steps: usize, n_x: usize, n_y: usize) -> (ModelSpec, Vec<Sample>) {
        let truth = DVector::from_fn(n_x, |_, _| rng.random_range(-1.0..1.0));
        let samples = (0..n_steps)
            .map(|k| {
                let c = DMatrix::from_fn(n_y, n_x, |_, _| rng.random_range(-1.0..1.0));
                let y = &c * &truth + DVector::from_fn(n_y, |_, _| rng.random_range(-0.1..0.1));
                Sample { k, input: Regressor::Matrix(c), y }
            })
            .collect();
        (ModelSpec::LinearTv { n_x, n_y }, samples)
    }

    #[test]
    fn trace_rejects_gaps_and_dimension_changes() {
        let mut t = Trace::new();
        t.push(record(0, 1.0, 0.0, 0.0)).unwrap();
        assert!(t.push(record(2, 1.0, 0.0, 0.0)).is_err());
        let mut r = record(1, 1.0, 0.0, 0.0);
        r.x = Some(DVector::zeros(2));
        t.push(r).unwrap();
        let mut r = record(2, 1.0, 0.0, 0.0);
        r.nu = Some(DVector::zeros(3));
        assert!(t.push(r).is_err());
    }

    #[test]
    fn online_equal_to_comparator_has_no_regret() {
        let mut t = Trace::new();
        for k in 0..10 {
            t.push(record(k, 0.5, 0.25, 0.0)).unwrap();
        }
        let series = objective_regret_series(&t, &[0.75; 10], GVariant::Nu).unwrap();
        assert!(series.iter().all(|v| *v == 0.0));
        assert_eq!(objective_regret(&t, 7.5, GVariant::X), 0.0);
    }

    #[test]
    fn constraint_regret_examples() {
        let mut t = Trace::new();
        t.push(record(0, 0.0, 0.0, 25.0)).unwrap();
        assert_eq!(constraint_regret(&t), 25.0);
        let mut zero = Trace::new();
        for k in 0..5 {
            zero.push(record(k, 1.0, 0.0, 0.0)).unwrap();
        }
        assert_eq!(constraint_regret(&zero), 0.0);
    }

    #[test]
    fn infeasible_x_gives_infinite_regret() {
        let mut t = Trace::new();
        let mut r = record(0, 1.0, 0.0, 0.0);
        r.g_x = ExtReal::PosInfinity;
        t.push(r).unwrap();
        t.push(record(1, 1.0, 0.0, 0.0)).unwrap();
        let series = objective_regret_series(&t, &[0.0, 0.0], GVariant::X).unwrap();
        assert!(series.iter().all(|v| v.is_infinite()));
        let by_nu = objective_regret_series(&t, &[0.0, 0.0], GVariant::Nu).unwrap();
        assert_eq!(by_nu, vec![1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn incremental_regret_matches_recomputation(
            losses in proptest::collection::vec((0.0..10.0f64, 0.0..1.0f64, 0.0..10.0f64), 1..300)
        ) {
            let mut t = Trace::new();
            let mut comparator = Vec::new();
            for (k, (l, g, c)) in losses.iter().enumerate() {
                t.push(record(k, *l, *g, 0.0)).unwrap();
                comparator.push(*c);
            }
            let series = objective_regret_series(&t, &comparator, GVariant::Nu).unwrap();
            for n in [1, losses.len() / 2 + 1, losses.len()] {
                let direct: f64 = losses[..n].iter().map(|(l, g, c)| l + g - c).sum();
                let scale = losses[..n].iter().map(|(l, g, c)| l + g + c).sum::<f64>().max(1.0);
                prop_assert!((series[n - 1] - direct).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn unregularized_hindsight_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (model, samples) = linear_data(&mut rng, 60, 4, 2);
        let mut h = DMatrix::zeros(4, 4);
        let mut b = DVector::zeros(4);
        for s in &samples {
            let Regressor::Matrix(c) = &s.input else { unreachable!() };
            h += c.transpose() * c;
            b += c.transpose() * &s.y;
        }
        let want = h.cholesky().unwrap().solve(&b);
        let opts = SolverOptions { tol: 1e-10, ..Default::default() };
        let sol = hindsight_prox_grad(&samples, &model, &RegSpec::None, 1.0, &DVector::zeros(4), &opts).unwrap();
        assert!(sol.tolerance_met);
        assert!((&sol.x_star - &want).amax() <= 1e-8 * want.amax());
    }

    #[test]
    fn huge_lambda_gives_zero_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (model, samples) = linear_data(&mut rng, 30, 3, 2);
        let mut corr = DVector::zeros(3);
        for s in &samples {
            let Regressor::Matrix(c) = &s.input else { unreachable!() };
            corr += c.transpose() * &s.y;
        }
        let lambda = corr.amax();
        let sol = hindsight_prox_grad(&samples, &model, &RegSpec::L1 { lambda }, 1.0, &DVector::zeros(3), &SolverOptions::default()).unwrap();
        assert!(sol.x_star.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = ModelSpec::mlp(2, vec![4], 1).unwrap();
        let samples: Vec<Sample> = (0..80)
            .map(|k| {
                let z = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
                let y = DVector::from_element(1, z[0] * z[1]);
                Sample { k, input: Regressor::Features(z), y }
            })
            .collect();
        let x0 = crate::model::mlp_init(&model, 1).unwrap().into_inner();
        for reg in [RegSpec::L1 { lambda: 1e-3 }, RegSpec::L0 { lambda: 1e-4 }, RegSpec::symmetric_box(0.3)] {
            let opts = SolverOptions { max_iter: 200, ..Default::default() };
            let sol = hindsight_prox_grad(&samples, &model, &reg, 1.0, &x0, &opts).unwrap();
            assert!(sol.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn segment_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (model, samples) = linear_data(&mut rng, 30, 3, 2);
        let reg = RegSpec::L1 { lambda: 0.01 };
        let opts = SolverOptions { tol: 1e-10, ..Default::default() };
        let x0 = DVector::zeros(3);
        let whole = hindsight_prox_grad(&samples, &model, &reg, 1.0, &x0, &opts).unwrap();
        let one = segment_hindsight(&samples, &[0, 30], &model, &reg, 1.0, std::slice::from_ref(&x0), &opts).unwrap();
        assert!((one.objective - whole.objective).abs() <= 1e-12 * whole.objective);
        let three = segment_hindsight(&samples, &[0, 10, 20, 30], &model, &reg, 1.0, &vec![x0.clone(); 3], &opts).unwrap();
        assert!(three.objective <= whole.objective + 1e-9);
        assert!((three.per_step.iter().sum::<f64>() - three.objective).abs() < 1e-9);

        let block: Vec<Sample> = samples[..10].to_vec();
        let repeated: Vec<Sample> = (0..30).map(|k| Sample { k, ..block[k % 10].clone() }).collect();
        let single = hindsight_prox_grad(&block, &model, &reg, 1.0, &x0, &opts).unwrap();
        let tripled = segment_hindsight(&repeated, &[0, 10, 20, 30], &model, &reg, 1.0, &vec![x0.clone(); 3], &opts).unwrap();
        assert!((tripled.objective - 3.0 * single.objective).abs() <= 1e-12 * tripled.objective);

        assert!(segment_hindsight(&samples, &[0, 10, 10, 30], &model, &reg, 1.0, &vec![x0.clone(); 3], &opts).is_err());
        assert!(segment_hindsight(&samples, &[0, 20], &model, &reg, 1.0, &[x0], &opts).is_err());
    }

    #[test]
    fn perf_index_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (model, samples) = linear_data(&mut rng, 10, 3, 1);
        let x = DVector::from_row_slice(&[0.1, 0.0, -0.2]);
        let none = perf_indices(&x, &samples, &model, &RegSpec::None, 1.0).unwrap();
        assert_eq!((none.loss, none.reg, none.cv), (none.mse, 0.0, 0.0));
        let boxed = perf_indices(&x, &samples, &model, &RegSpec::symmetric_box(0.5), 1.0).unwrap();
        assert_eq!(boxed.cv, 0.0);
        let outside = perf_indices(&(x * 10.0), &samples, &model, &RegSpec::symmetric_box(0.5), 1.0).unwrap();
        assert!((outside.cv - (0.5 * 0.5 + 1.5 * 1.5)).abs() < 1e-12);

        let mut v = DVector::from_element(105, 1.0);
        v.rows_mut(0, 50).fill(0.0);
        assert!((sparsity(&v) - 50.0 / 105.0).abs() < 1e-15);
        assert_eq!(format!("{:.1}", 100.0 * sparsity(&v)), "47.6");
    }
}
