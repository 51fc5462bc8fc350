//! Parametric measurement models `y = h(k, z; x)`.
//!
//! Two families are supported: a linear time-varying map `y = C_k x`, where
//! every sample carries its own `C_k`, and a fully connected network with
//! `tanh` hidden layers and a linear output layer.
//!
//! Network parameters are stored layer by layer from input to output. For
//! each layer the weight matrix comes first, row-major with shape
//! `fan_out x fan_in`, followed by the `fan_out` biases.

use std::io::{Read, Write};
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{self, Stream};

/// Shape of a fully connected `tanh` network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub n_in: usize,
    pub hidden: Vec<usize>,
    pub n_out: usize,
}

impl MlpSpec {
    pub fn new(n_in: usize, hidden: Vec<usize>, n_out: usize) -> Result<Self> {
        let spec = MlpSpec { n_in, hidden, n_out };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 || self.n_out == 0 || self.hidden.contains(&0) {
            return Err(Error::invalid("mlp layer widths", "all widths must be >= 1"));
        }
        Ok(())
    }

    /// Widths of every layer, input first.
    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.n_in);
        w.extend_from_slice(&self.hidden);
        w.push(self.n_out);
        w
    }

    fn layers(&self) -> Vec<Layer> {
        let widths = self.widths();
        let mut offset = 0;
        widths
            .windows(2)
            .map(|pair| {
                let layer = Layer {
                    fan_in: pair[0],
                    fan_out: pair[1],
                    offset,
                };
                offset += layer.len();
                layer
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl Layer {
    fn len(&self) -> usize {
        self.fan_out * (self.fan_in + 1)
    }

    fn weight(&self, params: &[f64], out: usize, inp: usize) -> f64 {
        params[self.offset + out * self.fan_in + inp]
    }

    fn weight_index(&self, out: usize, inp: usize) -> usize {
        self.offset + out * self.fan_in + inp
    }

    fn bias_index(&self, out: usize) -> usize {
        self.offset + self.fan_out * self.fan_in + out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `y_k = C_k x` with `C_k` supplied by each sample.
    LinearTv { n_x: usize, n_y: usize },
    Mlp(MlpSpec),
}

impl ModelSpec {
    pub fn mlp(n_in: usize, hidden: Vec<usize>, n_out: usize) -> Result<Self> {
        Ok(ModelSpec::Mlp(MlpSpec::new(n_in, hidden, n_out)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::LinearTv { n_x, .. } if *n_x == 0 => {
                Err(Error::invalid("n_x", "linear model needs at least one parameter"))
            }
            ModelSpec::LinearTv { .. } => Ok(()),
            ModelSpec::Mlp(m) => m.validate(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ModelSpec::LinearTv { n_x, .. } => *n_x,
            ModelSpec::Mlp(m) => m.param_count(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            ModelSpec::LinearTv { n_y, .. } => *n_y,
            ModelSpec::Mlp(m) => m.n_out,
        }
    }
}

/// A model parameter vector laid out as documented at module level.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(DVector<f64>);

impl ParamVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(ParamVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        ParamVector(DVector::zeros(n))
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<ParamVector> for DVector<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

/// Writes one parameter vector per CSV row, one value per column, no header.
pub fn write_params_csv<W: Write>(writer: W, rows: &[&DVector<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(writer);
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<params>", e))?;
    Ok(())
}

pub fn read_params_csv<R: Read>(reader: R) -> Result<Vec<ParamVector>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid("parameter csv", format!("`{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(ParamVector::new(DVector::from_vec(values))?);
    }
    Ok(out)
}

/// Regressor carried by a sample: features `z` for a network, or the
/// measurement matrix `C_k` for a linear time-varying model.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    Features(DVector<f64>),
    Matrix(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub k: usize,
    pub input: Regressor,
    pub y: DVector<f64>,
}

/// Xavier-uniform initialization: weights uniform in
/// `±sqrt(6 / (fan_in + fan_out))`, biases zero.
pub fn mlp_init(spec: &ModelSpec, seed: u64) -> Result<ParamVector> {
    let ModelSpec::Mlp(mlp) = spec else {
        return Err(Error::invalid("model", "Xavier initialization requires an MLP"));
    };
    mlp.validate()?;
    let mut rng = rng::stream(seed, Stream::Init);
    let mut x = DVector::zeros(mlp.param_count());
    for layer in mlp.layers() {
        let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        for o in 0..layer.fan_out {
            for i in 0..layer.fan_in {
                x[layer.weight_index(o, i)] = rng.random_range(-bound..=bound);
            }
        }
    }
    Ok(ParamVector(x))
}

fn check_inputs(spec: &ModelSpec, params: &DVector<f64>, sample: &Sample) -> Result<()> {
    check_dim("model parameters", spec.param_count(), params.len())?;
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model parameters"));
    }
    match (spec, &sample.input) {
        (ModelSpec::LinearTv { n_x, n_y }, Regressor::Matrix(c)) => {
            check_dim("C_k rows", *n_y, c.nrows())?;
            check_dim("C_k columns", *n_x, c.ncols())?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("C_k"));
            }
        }
        (ModelSpec::Mlp(m), Regressor::Features(z)) => {
            check_dim("regressor z", m.n_in, z.len())?;
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("regressor z"));
            }
        }
        _ => return Err(Error::invalid("sample", "regressor kind does not match the model")),
    }
    Ok(())
}

/// Hidden activations of every layer, input included (`acts[0] = z`), and
/// the network output.
fn forward(mlp: &MlpSpec, params: &[f64], z: &DVector<f64>) -> (Vec<Vec<f64>>, DVector<f64>) {
    let layers = mlp.layers();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    acts.push(z.iter().copied().collect());
    let last = layers.len() - 1;
    let mut out = DVector::zeros(mlp.n_out);
    for (l, layer) in layers.iter().enumerate() {
        let a = &acts[l];
        let pre: Vec<f64> = (0..layer.fan_out)
            .map(|o| {
                let row = &params[layer.offset + o * layer.fan_in..][..layer.fan_in];
                row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>() + params[layer.bias_index(o)]
            })
            .collect();
        if l == last {
            out = DVector::from_vec(pre);
        } else {
            acts.push(pre.into_iter().map(f64::tanh).collect());
        }
    }
    (acts, out)
}

fn backprop(mlp: &MlpSpec, params: &[f64], acts: &[Vec<f64>], jac: &mut DMatrix<f64>) {
    let layers = mlp.layers();
    for j in 0..mlp.n_out {
        // sensitivity of output j w.r.t. the pre-activations of the current layer
        let mut delta = vec![0.0; mlp.n_out];
        delta[j] = 1.0;
        for (l, layer) in layers.iter().enumerate().rev() {
            let a = &acts[l];
            for o in 0..layer.fan_out {
                let d = delta[o];
                for i in 0..layer.fan_in {
                    jac[(j, layer.weight_index(o, i))] = d * a[i];
                }
                jac[(j, layer.bias_index(o))] = d;
            }
            if l > 0 {
                delta = (0..layer.fan_in)
                    .map(|i| {
                        let back: f64 = (0..layer.fan_out)
                            .map(|o| layer.weight(params, o, i) * delta[o])
                            .sum();
                        back * (1.0 - a[i] * a[i])
                    })
                    .collect();
            }
        }
    }
}

/// `h_k(x)`.
pub fn model_eval(spec: &ModelSpec, params: &DVector<f64>, sample: &Sample) -> Result<DVector<f64>> {
    check_inputs(spec, params, sample)?;
    Ok(match (spec, &sample.input) {
        (ModelSpec::LinearTv { .. }, Regressor::Matrix(c)) => c * params,
        (ModelSpec::Mlp(m), Regressor::Features(z)) => forward(m, params.as_slice(), z).1,
        _ => unreachable!("checked by check_inputs"),
    })
}

/// Analytic Jacobian `dh_k/dx`, shape `n_y x n_x`.
pub fn model_jacobian(spec: &ModelSpec, params: &DVector<f64>, sample: &Sample) -> Result<DMatrix<f64>> {
    Ok(linearize(spec, params, sample)?.jacobian)
}

/// A model linearized around `xbar`.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// `h_k(xbar)`
    pub output: DVector<f64>,
    /// `C_k`
    pub jacobian: DMatrix<f64>,
}

impl Linearization {
    /// `y - h_k(xbar) + C_k xbar`, the measurement of the equivalent linear model.
    pub fn target(&self, y: &DVector<f64>, xbar: &DVector<f64>) -> Result<DVector<f64>> {
        linearized_target(y, &self.output, &self.jacobian, xbar)
    }
}

/// Output and Jacobian in one forward/backward pass.
pub fn linearize(spec: &ModelSpec, params: &DVector<f64>, sample: &Sample) -> Result<Linearization> {
    check_inputs(spec, params, sample)?;
    match (spec, &sample.input) {
        (ModelSpec::LinearTv { .. }, Regressor::Matrix(c)) => Ok(Linearization {
            output: c * params,
            jacobian: c.clone(),
        }),
        (ModelSpec::Mlp(m), Regressor::Features(z)) => {
            let (acts, output) = forward(m, params.as_slice(), z);
            let mut jacobian = DMatrix::zeros(m.n_out, m.param_count());
            backprop(m, params.as_slice(), &acts, &mut jacobian);
            Ok(Linearization { output, jacobian })
        }
        _ => unreachable!("checked by check_inputs"),
    }
}

pub fn linearized_target(
    y_nl: &DVector<f64>,
    h_at_xbar: &DVector<f64>,
    c: &DMatrix<f64>,
    xbar: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim("linearized target: h", y_nl.len(), h_at_xbar.len())?;
    check_dim("linearized target: C rows", y_nl.len(), c.nrows())?;
    check_dim("linearized target: C columns", xbar.len(), c.ncols())?;
    Ok(y_nl - h_at_xbar + c * xbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_net() -> ModelSpec {
        ModelSpec::mlp(2, vec![8, 8], 1).unwrap()
    }

    fn features(z: &[f64]) -> Sample {
        Sample {
            k: 0,
            input: Regressor::Features(DVector::from_row_slice(z)),
            y: DVector::zeros(1),
        }
    }

    // Independent forward pass: explicit matrices rebuilt from the documented layout.
    fn oracle_forward(widths: &[usize], x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let mut a = z.clone();
        let mut off = 0;
        for (l, pair) in widths.windows(2).enumerate() {
            let (fi, fo) = (pair[0], pair[1]);
            let w = DMatrix::from_row_slice(fo, fi, &x.as_slice()[off..off + fi * fo]);
            off += fi * fo;
            let b = DVector::from_row_slice(&x.as_slice()[off..off + fo]);
            off += fo;
            let pre = w * a + b;
            a = if l + 2 == widths.len() { pre } else { pre.map(f64::tanh) };
        }
        a
    }

    #[test]
    fn reference_network_has_105_parameters() {
        assert_eq!(reference_net().param_count(), 105);
        assert_eq!(mlp_init(&reference_net(), 0).unwrap().len(), 105);
    }

    #[test]
    fn tiny_network_has_4_parameters() {
        let spec = ModelSpec::mlp(1, vec![1], 1).unwrap();
        assert_eq!(mlp_init(&spec, 11).unwrap().len(), 4);
    }

    #[test]
    fn init_is_deterministic_and_within_xavier_bounds() {
        let spec = reference_net();
        let a = mlp_init(&spec, 5).unwrap();
        assert_eq!(a, mlp_init(&spec, 5).unwrap());
        assert_ne!(a, mlp_init(&spec, 6).unwrap());
        let ModelSpec::Mlp(m) = &spec else { unreachable!() };
        for layer in m.layers() {
            let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for o in 0..layer.fan_out {
                assert_eq!(a[layer.bias_index(o)], 0.0);
                for i in 0..layer.fan_in {
                    assert!(a[layer.weight_index(o, i)].abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn init_rejects_linear_model() {
        assert!(mlp_init(&ModelSpec::LinearTv { n_x: 2, n_y: 1 }, 0).is_err());
    }

    #[test]
    fn zero_width_layer_rejected() {
        assert!(ModelSpec::mlp(2, vec![8, 0], 1).is_err());
    }

    #[test]
    fn linear_eval_and_jacobian() {
        let spec = ModelSpec::LinearTv { n_x: 2, n_y: 2 };
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let sample = Sample {
            k: 0,
            input: Regressor::Matrix(c.clone()),
            y: DVector::zeros(2),
        };
        let x = DVector::from_row_slice(&[3.0, 4.0]);
        assert_eq!(model_eval(&spec, &x, &sample).unwrap(), DVector::from_row_slice(&[3.0, 8.0]));
        assert_eq!(model_jacobian(&spec, &x, &sample).unwrap(), c);
    }

    #[test]
    fn zero_params_give_zero_output() {
        let spec = reference_net();
        let out = model_eval(&spec, &DVector::zeros(105), &features(&[0.3, -0.8])).unwrap();
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn forward_matches_layer_by_layer_oracle() {
        let spec = ModelSpec::mlp(3, vec![4, 5], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = DVector::from_fn(spec.param_count(), |_, _| rng.random_range(-1.0..1.0));
            let z = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let sample = Sample { k: 0, input: Regressor::Features(z.clone()), y: DVector::zeros(2) };
            let got = model_eval(&spec, &x, &sample).unwrap();
            let want = oracle_forward(&[3, 4, 5, 2], &x, &z);
            assert!((got - want).amax() < 1e-14);
        }
    }

    #[test]
    fn jacobian_with_zeroed_output_weights() {
        let spec = reference_net();
        let mut x = mlp_init(&spec, 3).unwrap().into_inner();
        // output layer weights occupy 96..104, bias is 104
        for i in 96..104 {
            x[i] = 0.0;
        }
        let sample = features(&[0.4, -0.2]);
        let jac = model_jacobian(&spec, &x, &sample).unwrap();
        assert_eq!(jac[(0, 104)], 1.0);
        // every parameter upstream of the zeroed output weights has no effect
        for i in 0..96 {
            assert_eq!(jac[(0, i)], 0.0, "column {i}");
        }
        let h = 1e-6;
        for i in 0..105 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (model_eval(&spec, &xp, &sample).unwrap()[0] - model_eval(&spec, &xm, &sample).unwrap()[0]) / (2.0 * h);
            assert!((fd - jac[(0, i)]).abs() < 1e-8, "column {i}");
        }
    }

    #[test]
    fn linearized_target_examples() {
        let c = DMatrix::from_row_slice(1, 1, &[2.0]);
        let t = linearized_target(
            &DVector::from_row_slice(&[1.0]),
            &DVector::from_row_slice(&[0.5]),
            &c,
            &DVector::from_row_slice(&[1.0]),
        )
        .unwrap();
        assert_eq!(t[0], 2.5);

        // linear model: the correction terms cancel
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.5]);
        let xbar = DVector::from_row_slice(&[0.3, -0.7]);
        let y = DVector::from_row_slice(&[1.5, 2.5]);
        let t = linearized_target(&y, &(&c * &xbar), &c, &xbar).unwrap();
        assert!((t - y).amax() < 1e-15);
    }

    #[test]
    fn innovation_identity_for_network() {
        let spec = reference_net();
        let x = mlp_init(&spec, 8).unwrap().into_inner();
        let sample = Sample { y: DVector::from_row_slice(&[0.25]), ..features(&[0.1, 0.9]) };
        let lin = linearize(&spec, &x, &sample).unwrap();
        let innovation = lin.target(&sample.y, &x).unwrap() - &lin.jacobian * &x;
        let direct = &sample.y - model_eval(&spec, &x, &sample).unwrap();
        assert!((innovation - direct).amax() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let spec = reference_net();
        assert!(model_eval(&spec, &DVector::zeros(104), &features(&[0.0, 0.0])).is_err());
        assert!(model_eval(&spec, &DVector::zeros(105), &features(&[0.0])).is_err());
        assert!(model_eval(&spec, &DVector::zeros(105), &features(&[f64::NAN, 0.0])).is_err());
        let lin = Sample { k: 0, input: Regressor::Matrix(DMatrix::zeros(1, 105)), y: DVector::zeros(1) };
        assert!(model_eval(&spec, &DVector::zeros(105), &lin).is_err());
    }

    #[test]
    fn params_csv_roundtrip() {
        let a = mlp_init(&reference_net(), 2).unwrap();
        let mut buf = Vec::new();
        write_params_csv(&mut buf, &[&a]).unwrap();
        let back = read_params_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![a]);
    }
}
