use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::config::{LossKind, NetConfig};
use super::model::{standardize_with, Head, Params, RegressorModel};
use super::{sigmoid, softplus, softplus_inv};
use crate::error::{check_finite, Result, XvaError};
use crate::rng::{keyed, Domain};
use crate::stats;

/// A trained model together with its in-sample outputs.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: RegressorModel,
    /// `model.predict` on the training features.
    pub fitted: Array2<f64>,
    /// Training loss (standardised units) before each parameter update.
    pub loss_history: Vec<f64>,
}

pub fn train_mean(x: ArrayView2<f64>, y: &[f64], cfg: &NetConfig) -> Result<RegressorModel> {
    Ok(fit_mean(x, y, cfg)?.model)
}

pub fn train_var_es(x: ArrayView2<f64>, y: &[f64], alpha: f64, cfg: &NetConfig) -> Result<RegressorModel> {
    Ok(fit_var_es(x, y, alpha, cfg)?.model)
}

pub fn fit_mean(x: ArrayView2<f64>, y: &[f64], cfg: &NetConfig) -> Result<Fit> {
    if cfg.loss != LossKind::Mse {
        return Err(XvaError::InvalidNetConfig("mean regression needs the squared-error loss".into()));
    }
    fit(x, y, Head::Mean, cfg)
}

pub fn fit_var_es(x: ArrayView2<f64>, y: &[f64], alpha: f64, cfg: &NetConfig) -> Result<Fit> {
    let cfg = cfg.clone().with_loss(LossKind::JointVarEs(alpha));
    fit(x, y, Head::VarEs { alpha }, &cfg)
}

fn column_moments(x: ArrayView2<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut mean = Vec::with_capacity(x.ncols());
    let mut scale = Vec::with_capacity(x.ncols());
    for col in x.axis_iter(Axis(1)) {
        let v = col.to_vec();
        let m = stats::mean(&v);
        let s = (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64).sqrt();
        mean.push(m);
        scale.push(if s > 1e-12 * (1.0 + m.abs()) { s } else { 1.0 });
    }
    (mean, scale)
}

fn init_params(d: usize, head: Head, cfg: &NetConfig, out_bias: &[f64]) -> Params {
    let mut rng = keyed(cfg.seed, Domain::NetInit, d as u64, head.outputs() as u64);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    let mut fan_in = d;
    for _ in 0..cfg.hidden_layers {
        let bound = (3.0 / fan_in as f64).sqrt();
        weights.push(Array2::from_shape_fn((fan_in, cfg.width), |_| rng.random_range(-bound..bound)));
        biases.push(Array1::zeros(cfg.width));
        fan_in = cfg.width;
    }
    weights.push(Array2::zeros((fan_in, head.outputs())));
    biases.push(Array1::from(out_bias.to_vec()));
    let skip = cfg.linear_skip.then(|| Array2::zeros((d, head.outputs())));
    Params { weights, biases, skip }
}

/// Loss and its gradient with respect to the raw outputs.
fn loss_grad(head: Head, out: &Array2<f64>, t: &[f64], grad: &mut Array2<f64>) -> f64 {
    let n = t.len() as f64;
    let mut total = 0.0;
    match head {
        Head::Mean => {
            for (i, &ti) in t.iter().enumerate() {
                let e = out[[i, 0]] - ti;
                total += e * e;
                grad[[i, 0]] = 2.0 * e / n;
            }
        }
        Head::VarEs { alpha } => {
            let u = 1.0 / (1.0 - alpha);
            for (i, &ti) in t.iter().enumerate() {
                let (q, r) = (out[[i, 0]], out[[i, 1]]);
                let s = q + softplus(r);
                let gd = sigmoid(-s);
                let g = -softplus(-s);
                let g2 = -sigmoid(s) * gd;
                let above = ti > q;
                let h = q + if above { u * (ti - q) } else { 0.0 };
                total += (1.0 + gd) * h + g - gd * s;
                let ds = g2 * (h - s);
                let dq_direct = (1.0 + gd) * (1.0 - if above { u } else { 0.0 });
                grad[[i, 0]] = (dq_direct + ds) / n;
                grad[[i, 1]] = ds * sigmoid(r) / n;
            }
        }
    }
    total / n
}

fn loss_only(head: Head, params: &Params, z: &Array2<f64>, t: &[f64]) -> f64 {
    let (_, out) = params.forward(z);
    let mut g = Array2::zeros(out.raw_dim());
    loss_grad(head, &out, t, &mut g)
}

fn backward(params: &Params, acts: &[Array2<f64>], d_out: &Array2<f64>, grads: &mut Params) {
    let last = params.weights.len() - 1;
    grads.weights[last] = acts[last].t().dot(d_out);
    grads.biases[last] = d_out.sum_axis(Axis(0));
    if let Some(gs) = &mut grads.skip {
        *gs = acts[0].t().dot(d_out);
    }
    let mut delta = d_out.dot(&params.weights[last].t());
    for l in (0..last).rev() {
        // acts[l + 1] is the tanh output of layer l
        delta.zip_mut_with(&acts[l + 1], |d, a| *d *= 1.0 - a * a);
        grads.weights[l] = acts[l].t().dot(&delta);
        grads.biases[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            delta = delta.dot(&params.weights[l].t());
        }
    }
}

fn fit(x: ArrayView2<f64>, y: &[f64], head: Head, cfg: &NetConfig) -> Result<Fit> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(XvaError::Empty("training samples"));
    }
    if y.len() != n {
        return Err(XvaError::DimensionMismatch { expected: n, got: y.len() });
    }
    if let Some(bad) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(XvaError::NonFinite { stage: "regression inputs".into(), detail: format!("{bad}") });
    }
    let d = x.ncols();
    let (x_mean, x_scale) = column_moments(x);
    let z = standardize_with(x, &x_mean, &x_scale);
    let y_mean = stats::mean(y);
    let y_sd = (y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64).sqrt();
    let constant = y_sd <= 1e-12 * (1.0 + y_mean.abs());
    let y_scale = if constant { 1.0 } else { y_sd };
    let t: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();

    let out_bias = match head {
        Head::Mean => vec![0.0],
        // a degenerate label law has ES = VaR, reached only in the softplus limit
        Head::VarEs { .. } if constant => vec![0.0, f64::NEG_INFINITY],
        Head::VarEs { alpha } => {
            let (q, s) = stats::var_es(&t, alpha);
            vec![q, softplus_inv((s - q).max(1e-8))]
        }
    };
    let mut params = init_params(d, head, cfg, &out_bias);
    let mut loss_history = Vec::new();

    if !constant {
        let (n_train, n_val) = match cfg.early_stopping {
            Some(es) => {
                let v = (es.validation_fraction * n as f64).floor() as usize;
                if v == 0 || v == n { (n, 0) } else { (n - v, v) }
            }
            None => (n, 0),
        };
        let z_train = z.slice(ndarray::s![..n_train, ..]).to_owned();
        let z_val = z.slice(ndarray::s![n_train.., ..]).to_owned();
        let (t_train, t_val) = t.split_at(n_train);
        let mut velocity = params.zeros_like();
        let mut grads = params.zeros_like();
        let mut d_out = Array2::zeros((n_train, head.outputs()));
        let mut best: Option<(f64, Params)> = None;
        let mut stale = 0;
        for it in 0..cfg.iterations {
            let (acts, out) = params.forward(&z_train);
            let loss = check_finite("regressor training", loss_grad(head, &out, t_train, &mut d_out))
                .map_err(|e| match e {
                    XvaError::NonFinite { stage, detail } => XvaError::NonFinite { stage, detail: format!("{detail} at iteration {it}") },
                    other => other,
                })?;
            loss_history.push(loss);
            if n_val > 0 {
                let val = loss_only(head, &params, &z_val, t_val);
                match &best {
                    Some((b, _)) if val >= *b => {
                        stale += 1;
                        if stale >= cfg.early_stopping.map_or(usize::MAX, |e| e.patience) {
                            break;
                        }
                    }
                    _ => {
                        best = Some((val, params.clone()));
                        stale = 0;
                    }
                }
            }
            backward(&params, &acts, &d_out, &mut grads);
            params.momentum_step(&mut velocity, &grads, cfg.learning_rate, cfg.momentum);
        }
        if let Some((_, p)) = best {
            params = p;
        }
        if head == Head::Mean {
            // centre the in-sample residual so the fitted mean equals the label mean
            let (_, out) = params.forward(&z);
            let shift = t.iter().zip(out.column(0)).map(|(a, b)| a - b).sum::<f64>() / n as f64;
            params.biases.last_mut().expect("output layer")[0] += shift;
        }
    }

    let model = RegressorModel { head, params, x_mean, x_scale, y_mean, y_scale };
    let fitted = model.predict(x)?;
    if let Some(bad) = fitted.iter().find(|v| !v.is_finite()) {
        return Err(XvaError::NonFinite { stage: "regressor output".into(), detail: format!("{bad}") });
    }
    Ok(Fit { model, fitted, loss_history })
}
