//! Plain-text model dump.
//!
//! Layout, one item per line:
//!
//! ```text
//! xva-regressor 1
//! head mean | head var_es <alpha>
//! sizes <d> <h_1> ... <outputs>
//! skip 0|1
//! x_mean <d values>
//! x_scale <d values>
//! y <mean> <scale>
//! ```
//!
//! followed, for each layer, by its weight matrix in row-major order (one row
//! of `fan_out` values per input) and then its bias row; the optional skip
//! matrix comes last, also row-major.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{Head, Params, RegressorModel};
use crate::error::{Result, XvaError};

fn row(out: &mut String, vals: impl IntoIterator<Item = f64>) {
    let v: Vec<String> = vals.into_iter().map(|x| format!("{x:?}")).collect();
    out.push_str(&v.join(" "));
    out.push('\n');
}

impl RegressorModel {
    pub fn to_text(&self) -> String {
        let mut s = String::from("xva-regressor 1\n");
        match self.head {
            Head::Mean => s.push_str("head mean\n"),
            Head::VarEs { alpha } => writeln!(s, "head var_es {alpha:?}").unwrap(),
        }
        let sizes: Vec<String> = self.layer_sizes().iter().map(|v| v.to_string()).collect();
        writeln!(s, "sizes {}", sizes.join(" ")).unwrap();
        writeln!(s, "skip {}", u8::from(self.params.skip.is_some())).unwrap();
        s.push_str("x_mean ");
        row(&mut s, self.x_mean.iter().copied());
        s.push_str("x_scale ");
        row(&mut s, self.x_scale.iter().copied());
        s.push_str("y ");
        row(&mut s, [self.y_mean, self.y_scale]);
        for (w, b) in self.params.weights.iter().zip(&self.params.biases) {
            for r in w.rows() {
                row(&mut s, r.iter().copied());
            }
            row(&mut s, b.iter().copied());
        }
        if let Some(k) = &self.params.skip {
            for r in k.rows() {
                row(&mut s, r.iter().copied());
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| XvaError::ModelFormat(m.to_string());
        let mut lines = text.lines();
        let mut next = || lines.next().ok_or_else(|| bad("truncated model file"));
        let floats = |l: &str| -> Result<Vec<f64>> {
            l.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad number {t:?}")))).collect()
        };
        let tagged = |l: &'_ str, tag: &str| -> Result<String> {
            l.strip_prefix(tag).map(|r| r.trim().to_string()).ok_or_else(|| bad(&format!("expected {tag:?}")))
        };
        if next()?.trim() != "xva-regressor 1" {
            return Err(bad("unknown header"));
        }
        let head_line = tagged(next()?, "head")?;
        let head = match head_line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["mean"] => Head::Mean,
            ["var_es", a] => Head::VarEs { alpha: a.parse().map_err(|_| bad("bad alpha"))? },
            _ => return Err(bad("unknown head")),
        };
        let sizes: Vec<usize> = tagged(next()?, "sizes")?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad size")))
            .collect::<Result<_>>()?;
        if sizes.len() < 2 || sizes.last() != Some(&head.outputs()) || sizes.contains(&0) {
            return Err(bad("inconsistent layer sizes"));
        }
        let skip = match tagged(next()?, "skip")?.as_str() {
            "0" => false,
            "1" => true,
            _ => return Err(bad("bad skip flag")),
        };
        let d = sizes[0];
        let x_mean = floats(&tagged(next()?, "x_mean")?)?;
        let x_scale = floats(&tagged(next()?, "x_scale")?)?;
        let y = floats(&tagged(next()?, "y")?)?;
        if x_mean.len() != d || x_scale.len() != d || y.len() != 2 {
            return Err(bad("standardisation length mismatch"));
        }
        let mut matrix = |rows: usize, cols: usize| -> Result<Array2<f64>> {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let r = floats(next()?)?;
                if r.len() != cols {
                    return Err(bad("row length mismatch"));
                }
                data.extend(r);
            }
            Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
        };
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            weights.push(matrix(w[0], w[1])?);
            biases.push(Array1::from(matrix(1, w[1])?.row(0).to_vec()));
        }
        let skip = if skip { Some(matrix(d, head.outputs())?) } else { None };
        Ok(RegressorModel { head, params: Params { weights, biases, skip }, x_mean, x_scale, y_mean: y[0], y_scale: y[1] })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
