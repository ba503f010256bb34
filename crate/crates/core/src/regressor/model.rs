use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use super::softplus;
use crate::error::{Result, XvaError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Head {
    Mean,
    VarEs { alpha: f64 },
}

impl Head {
    pub fn outputs(&self) -> usize {
        match self {
            Head::Mean => 1,
            Head::VarEs { .. } => 2,
        }
    }
}

/// Network parameters in standardised coordinates.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Params {
    /// `weights[l]` has shape (fan_in, fan_out).
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    /// Input-to-output linear map, shape (d, outputs).
    pub skip: Option<Array2<f64>>,
}

impl Params {
    pub fn zeros_like(&self) -> Params {
        Params {
            weights: self.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: self.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            skip: self.skip.as_ref().map(|s| Array2::zeros(s.raw_dim())),
        }
    }

    /// Momentum step: `v = mu v - lr g`, then `p += v`.
    pub fn momentum_step(&mut self, velocity: &mut Params, grads: &Params, lr: f64, mu: f64) {
        let step = |p: &mut f64, v: &mut f64, g: &f64| {
            *v = mu * *v - lr * g;
            *p += *v;
        };
        for ((p, v), g) in self.weights.iter_mut().zip(velocity.weights.iter_mut()).zip(&grads.weights) {
            Zip::from(p).and(v).and(g).for_each(step);
        }
        for ((p, v), g) in self.biases.iter_mut().zip(velocity.biases.iter_mut()).zip(&grads.biases) {
            Zip::from(p).and(v).and(g).for_each(step);
        }
        if let (Some(p), Some(v), Some(g)) = (&mut self.skip, &mut velocity.skip, &grads.skip) {
            Zip::from(p).and(v).and(g).for_each(step);
        }
    }

    /// Hidden activations (input first) and raw outputs.
    pub fn forward(&self, z: &Array2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let last = self.weights.len() - 1;
        let mut acts = vec![z.clone()];
        for l in 0..last {
            let mut a = acts[l].dot(&self.weights[l]);
            a += &self.biases[l];
            a.mapv_inplace(tanh);
            acts.push(a);
        }
        let mut out = acts[last].dot(&self.weights[last]);
        out += &self.biases[last];
        if let Some(s) = &self.skip {
            out += &z.dot(s);
        }
        (acts, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    pub(crate) head: Head,
    pub(crate) params: Params,
    pub(crate) x_mean: Vec<f64>,
    pub(crate) x_scale: Vec<f64>,
    pub(crate) y_mean: f64,
    pub(crate) y_scale: f64,
}

impl RegressorModel {
    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.x_mean.len()
    }

    /// Layer sizes from input to output.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.params.weights.iter().map(|w| w.ncols()));
        s
    }

    pub(crate) fn standardize(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(XvaError::DimensionMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        Ok(standardize_with(x, &self.x_mean, &self.x_scale))
    }

    pub(crate) fn destandardize(&self, raw: &Array2<f64>) -> Array2<f64> {
        let (m, sc) = (self.y_mean, self.y_scale);
        match self.head {
            Head::Mean => raw.mapv(|o| m + sc * o),
            Head::VarEs { .. } => {
                let mut out = Array2::zeros(raw.raw_dim());
                for (mut dst, src) in out.axis_iter_mut(Axis(0)).zip(raw.axis_iter(Axis(0))) {
                    dst[0] = m + sc * src[0];
                    dst[1] = m + sc * (src[0] + softplus(src[1]));
                }
                out
            }
        }
    }

    /// Raw-scale outputs, one row per sample: the conditional mean, or the
    /// (VaR, ES) pair.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = self.standardize(x)?;
        let (_, raw) = self.params.forward(&z);
        Ok(self.destandardize(&raw))
    }

    pub fn predict_mean(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.predict(x)?.column(0).to_vec())
    }

    pub fn predict_var_es(&self, x: ArrayView2<f64>) -> Result<super::VarEs> {
        if self.head == Head::Mean {
            return Err(XvaError::Unsupported("VaR/ES prediction from a mean model".into()));
        }
        let p = self.predict(x)?;
        Ok(super::VarEs { var: p.column(0).to_vec(), es: p.column(1).to_vec() })
    }
}

pub(crate) fn standardize_with(x: ArrayView2<f64>, mean: &[f64], scale: &[f64]) -> Array2<f64> {
    let mut z = x.to_owned();
    for (j, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
        let (m, s) = (mean[j], scale[j]);
        col.mapv_inplace(|v| (v - m) / s);
    }
    z
}

/// Hyperbolic tangent via a single exponential; saturates exactly for large |x|.
#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    if x.abs() > 20.0 {
        return x.signum();
    }
    let e = (2.0 * x).exp();
    1.0 - 2.0 / (e + 1.0)
}
