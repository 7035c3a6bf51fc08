//! Savitzky-Golay smoothing of spectra: coefficient generation,
//! Hz-to-bin window conversion, and application with truncated-window
//! edge refits.

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

/// Central-point least-squares polynomial smoothing kernel.
#[derive(Debug, Clone)]
pub struct SgKernel {
    pub half_width: usize,
    pub order: usize,
    /// 2 * half_width + 1 weights, symmetric, summing to 1.
    pub weights: Vec<f64>,
}

/// Solve the small symmetric system G z = rhs by Gaussian elimination
/// with partial pivoting. G is (p+1) x (p+1).
fn solve(mut g: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()))
            .unwrap();
        g.swap(col, pivot);
        rhs.swap(col, pivot);
        let diag = g[col][col];
        for row in col + 1..n {
            let factor = g[row][col] / diag;
            for k in col..n {
                let v = g[col][k];
                g[row][k] -= factor * v;
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= g[row][k] * z[k];
        }
        z[row] = acc / g[row][row];
    }
    z
}

/// Least-squares weights for evaluating an order-`order` polynomial fit
/// over integer offsets `offsets` at offset 0. `offsets` need not be
/// symmetric (edge refits pass truncated ranges).
fn fit_weights(offsets: &[i64], order: usize) -> Vec<f64> {
    let p = order + 1;
    // Normal matrix G_{ab} = sum_j j^(a+b); rhs = e_0 picks the fitted
    // value at offset 0.
    let mut g = vec![vec![0.0; p]; p];
    for &j in offsets {
        let mut pow = vec![1.0; 2 * p - 1];
        for m in 1..2 * p - 1 {
            pow[m] = pow[m - 1] * j as f64;
        }
        for a in 0..p {
            for b in 0..p {
                g[a][b] += pow[a + b];
            }
        }
    }
    let mut rhs = vec![0.0; p];
    rhs[0] = 1.0;
    let z = solve(g, rhs);
    offsets
        .iter()
        .map(|&j| {
            let mut pow = 1.0;
            let mut acc = 0.0;
            for zm in &z {
                acc += zm * pow;
                pow *= j as f64;
            }
            acc
        })
        .collect()
}

/// Central-point Savitzky-Golay convolution weights.
pub fn savgol_coeffs(window_len: usize, order: usize) -> Result<SgKernel> {
    if window_len < 3 || window_len % 2 == 0 {
        return Err(Error::BadSgWindow(window_len));
    }
    if order >= window_len {
        return Err(Error::BadSgOrder {
            order,
            window: window_len,
        });
    }
    let m = window_len / 2;
    let offsets: Vec<i64> = (-(m as i64)..=m as i64).collect();
    let weights = fit_weights(&offsets, order);
    Ok(SgKernel {
        half_width: m,
        order,
        weights,
    })
}

/// Convert a smoothing window in Hz to an odd bin count on the
/// spectrum's uniform grid: round(window_hz / df), forced odd by
/// rounding up, clipped to [3, largest odd <= len]. Returns the bin
/// count and a flag set when the requested window was below one bin.
pub fn hz_to_bins(window_hz: f64, spectrum: &Spectrum) -> Result<(usize, bool)> {
    let len = spectrum.frequencies.len();
    if len < 3 {
        return Err(Error::InsufficientData(
            "spectrum needs at least 3 bins for smoothing".into(),
        ));
    }
    let df = spectrum.grid_step();
    if df <= 0.0 {
        return Err(Error::InvalidParam("non-increasing frequency grid".into()));
    }
    let raw = (window_hz / df).round() as i64;
    let mut bins = raw.max(0) as usize;
    if bins % 2 == 0 {
        bins += 1;
    }
    let mut warned = false;
    if bins < 3 {
        bins = 3;
        warned = true;
    }
    let max_odd = len - (1 - len % 2);
    if bins > max_odd {
        bins = max_odd;
    }
    Ok((bins, warned))
}

/// Apply Savitzky-Golay smoothing with the window given in Hz. Edge bins
/// are re-fit over the truncated window rather than padded or mirrored.
pub fn smooth_spectrum(spec: &Spectrum, window_hz: f64, order: usize) -> Result<Spectrum> {
    if spec.smoothed {
        return Err(Error::AlreadySmoothed);
    }
    let (window_len, _warned) = hz_to_bins(window_hz, spec)?;
    let kernel = savgol_coeffs(window_len, order.min(window_len - 1))?;
    let m = kernel.half_width;
    let n = spec.values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(m);
        let hi = (i + m + 1).min(n);
        let v = if hi - lo == 2 * m + 1 {
            kernel
                .weights
                .iter()
                .zip(&spec.values[lo..hi])
                .map(|(w, v)| w * v)
                .sum()
        } else {
            let offsets: Vec<i64> = (lo..hi).map(|j| j as i64 - i as i64).collect();
            let w = fit_weights(&offsets, kernel.order.min(hi - lo - 1));
            w.iter()
                .zip(&spec.values[lo..hi])
                .map(|(w, v)| w * v)
                .sum()
        };
        out.push(v);
    }
    Ok(Spectrum {
        frequencies: spec.frequencies.clone(),
        values: out,
        kind: spec.kind,
        smoothed: true,
    })
}
