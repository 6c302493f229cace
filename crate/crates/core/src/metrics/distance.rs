//! Earth mover's distance between 1-D histograms and the squared maximum
//! mean discrepancy between two sets of descriptors.

use crate::error::{GlnError, Result};

/// First Wasserstein distance on ordered bins of width 1.
///
/// The shorter histogram is padded with zeros.
pub fn emd_1d(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let (mut cp, mut cq, mut total) = (0.0, 0.0, 0.0);
    for i in 0..len {
        cp += p.get(i).copied().unwrap_or(0.0);
        cq += q.get(i).copied().unwrap_or(0.0);
        total += (cp - cq).abs();
    }
    total
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub fn gaussian_kernel(distance: f64, sigma: f64) -> f64 {
    (-distance * distance / (2.0 * sigma * sigma)).exp()
}

/// Biased estimate of MMD² under `exp(-d²/2σ²)`.
///
/// The cross term is summed in sorted order, so swapping the sets gives the
/// identical value whenever `distance` is symmetric.
pub fn mmd_squared<T: ?Sized, D: AsRef<T>>(
    xs: &[D],
    ys: &[D],
    distance: impl Fn(&T, &T) -> f64,
    sigma: f64,
) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(GlnError::Config("MMD needs two nonempty sets".into()));
    }
    if !(sigma > 0.0) {
        return Err(GlnError::Config(format!("kernel bandwidth {sigma} must be positive")));
    }
    let k = |a: &D, b: &D| gaussian_kernel(distance(a.as_ref(), b.as_ref()), sigma);
    let within = |set: &[D]| {
        let mut values: Vec<f64> = set.iter().flat_map(|a| set.iter().map(move |b| (a, b))).map(|(a, b)| k(a, b)).collect();
        values.sort_by(f64::total_cmp);
        values.iter().sum::<f64>() / values.len() as f64
    };
    let mut cross: Vec<f64> = xs.iter().flat_map(|a| ys.iter().map(move |b| (a, b))).map(|(a, b)| k(a, b)).collect();
    cross.sort_by(f64::total_cmp);
    let kxy = cross.iter().sum::<f64>() / cross.len() as f64;
    Ok((within(xs) + within(ys) - 2.0 * kxy).max(0.0))
}
