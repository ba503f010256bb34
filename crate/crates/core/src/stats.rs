//! Sample statistics shared by the static and dynamic engines.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (0 for fewer than two samples).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn stdev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Lower empirical quantile: the smallest sample `y` with `F(y) >= p`.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = rank(v.len(), p);
    v[k]
}

// zero-based index of the lower p-quantile among n equally weighted samples
fn rank(n: usize, p: f64) -> usize {
    let k = (p * n as f64 - 1e-9).ceil().max(1.0) as usize;
    k.min(n) - 1
}

/// Value-at-risk and expected shortfall at level `alpha` of equally weighted
/// loss samples.
///
/// VaR is the lower `alpha`-quantile and ES = VaR + E[(Y - VaR)^+] / (1 - alpha),
/// which averages the worst `(1 - alpha)` tail mass with a fractional weight on
/// the boundary sample.
pub fn var_es(xs: &[f64], alpha: f64) -> (f64, f64) {
    assert!(!xs.is_empty());
    let q = quantile(xs, alpha);
    let tail: f64 = xs.iter().map(|y| (y - q).max(0.0)).sum::<f64>() / xs.len() as f64;
    (q, q + tail / (1.0 - alpha))
}

/// Weighted version of [`var_es`]; weights need not be normalised.
pub fn weighted_var_es(xs: &[f64], ws: &[f64], alpha: f64) -> (f64, f64) {
    assert_eq!(xs.len(), ws.len());
    let total: f64 = ws.iter().sum();
    assert!(total > 0.0, "weights must have positive mass");
    let mut idx: Vec<usize> = (0..xs.len()).filter(|&i| ws[i] > 0.0).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let target = alpha * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut q = xs[*idx.last().unwrap()];
    for &i in &idx {
        acc += ws[i];
        if acc >= target {
            q = xs[i];
            break;
        }
    }
    let tail: f64 = idx.iter().map(|&i| ws[i] * (xs[i] - q).max(0.0)).sum::<f64>() / total;
    (q, q + tail / (1.0 - alpha))
}

/// Summary used for profile bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub mean: f64,
    pub p05: f64,
    pub p95: f64,
    pub stdev: f64,
    pub n: usize,
}

pub fn band(xs: &[f64]) -> Band {
    if xs.is_empty() {
        return Band { mean: 0.0, p05: 0.0, p95: 0.0, stdev: 0.0, n: 0 };
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Band {
        mean: mean(xs),
        p05: v[rank(v.len(), 0.05)],
        p95: v[rank(v.len(), 0.95)],
        stdev: stdev(xs),
        n: xs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_es_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let (q, s) = var_es(&xs, 0.975);
        assert_eq!(q, 975.0);
        // mean of 976..=1000
        assert!((s - 988.0).abs() < 1e-9);
    }

    #[test]
    fn fractional_boundary_weight() {
        // 10 samples at alpha 0.95: tail mass 0.5 sample
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let (q, s) = var_es(&xs, 0.95);
        assert_eq!(q, 10.0);
        assert!((s - 10.0).abs() < 1e-12);
        let (q, s) = var_es(&xs, 0.85);
        assert_eq!(q, 9.0);
        // tail mass 1.5 samples: (10 + 0.5 * 9) / 1.5
        assert!((s - (10.0 + 4.5) / 1.5).abs() < 1e-12);
    }

    #[test]
    fn weighted_matches_unweighted() {
        let xs: Vec<f64> = (0..37).map(|i| ((i * 17) % 37) as f64 - 11.0).collect();
        let ws = vec![0.3; xs.len()];
        for alpha in [0.5, 0.9, 0.975] {
            let a = var_es(&xs, alpha);
            let b = weighted_var_es(&xs, &ws, alpha);
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn band_brackets_mean_of_symmetric_sample() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let b = band(&xs);
        assert_eq!(b.p05, 5.0);
        assert_eq!(b.p95, 95.0);
        assert_eq!(b.mean, 50.0);
    }
}
