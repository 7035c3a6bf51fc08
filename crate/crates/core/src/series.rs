//! Return/trend decomposition: price returns, three-regime moving
//! average, detrending, rolling standard deviation, and standard-score
//! normalization.

use crate::error::{Error, Result};
use crate::ingest::TickSeries;
use crate::window::WindowLen;

/// Price differences of a level series.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub parent_label: String,
    /// Base index of the differencing (1 for the lag-1 convention).
    pub t0: usize,
}

/// Moving-average trend of a level series.
#[derive(Debug, Clone)]
pub struct TrendSeries {
    pub values: Vec<f64>,
    pub window_used: WindowLen,
}

#[derive(Debug, Clone)]
pub struct DetrendedSeries {
    pub values: Vec<f64>,
    pub window_used: WindowLen,
}

/// Rolling (windowed) population standard deviation.
#[derive(Debug, Clone)]
pub struct SigmaSeries {
    pub values: Vec<f64>,
    pub window_used: WindowLen,
}

#[derive(Debug, Clone)]
pub struct NormalizedSeries {
    pub values: Vec<f64>,
    pub delta1: WindowLen,
    pub delta2: WindowLen,
    /// Indices where the rolling sigma fell below the floor and the
    /// floor was used instead.
    pub floored: Vec<usize>,
}

/// Running sums kept as unevaluated (hi, lo) pairs so that windowed sums
/// formed by differencing stay accurate to ~1e-15 relative even when the
/// prefix magnitude dwarfs the window sum.
#[derive(Clone, Copy, Default)]
struct TwoFloat {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl TwoFloat {
    #[inline]
    fn add(self, x: f64) -> TwoFloat {
        let (s, e) = two_sum(self.hi, x);
        TwoFloat { hi: s, lo: self.lo + e }
    }
}

struct PrefixSums {
    cum: Vec<TwoFloat>,
}

impl PrefixSums {
    fn new(x: impl Iterator<Item = f64>, n: usize) -> Self {
        let mut cum = Vec::with_capacity(n + 1);
        let mut acc = TwoFloat::default();
        cum.push(acc);
        for v in x {
            acc = acc.add(v);
            cum.push(acc);
        }
        PrefixSums { cum }
    }

    /// Sum over the half-open range [a, b).
    #[inline]
    fn range(&self, a: usize, b: usize) -> f64 {
        let lo = self.cum[a];
        let hi = self.cum[b];
        (hi.hi - lo.hi) + (hi.lo - lo.lo)
    }
}

/// Window bounds for the three-regime moving window at 0-based index `i`:
/// the centered range clipped to the series, which coincides with the
/// truncated edge summation bounds.
#[inline]
pub(crate) fn window_bounds(i: usize, n: usize, w: usize) -> (usize, usize) {
    let lo = i.saturating_sub((w - 1) / 2);
    let hi = (i + w / 2 + 1).min(n);
    (lo, hi)
}

/// Price return per the index-difference definition: values[t] =
/// I(t0+t) - I(t0), with 1-based t0 and t = 1..N-t0.
pub fn price_return(series: &TickSeries, t0: usize) -> Result<ReturnSeries> {
    let n = series.len();
    if t0 < 1 || t0 > n {
        return Err(Error::IndexOutOfRange(t0));
    }
    let base = series.values[t0 - 1];
    let values = series.values[t0..].iter().map(|v| v - base).collect();
    Ok(ReturnSeries {
        values,
        parent_label: series.label.clone(),
        t0,
    })
}

/// Lag-1 differenced returns x(t) = I(t) - I(t-1), the pipeline default.
pub fn lag1_returns(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|p| p[1] - p[0]).collect()
}

/// Three-regime moving average over a window of `w` samples. Interior
/// samples use the centered window of exactly `w` samples; edges use the
/// same index bounds truncated to the series and normalized by the exact
/// count of included samples.
pub fn moving_average(values: &[f64], w: WindowLen) -> Result<TrendSeries> {
    let n = values.len();
    let w = w.samples;
    if w < 1 || w > n {
        return Err(Error::WindowOutOfRange { w, n });
    }
    let prefix = PrefixSums::new(values.iter().copied(), n);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = window_bounds(i, n, w);
        out.push(prefix.range(lo, hi) / (hi - lo) as f64);
    }
    Ok(TrendSeries {
        values: out,
        window_used: WindowLen { samples: w },
    })
}

/// Elementwise subtraction of a trend.
pub fn detrend(values: &[f64], trend: &TrendSeries) -> Result<DetrendedSeries> {
    if values.len() != trend.values.len() {
        return Err(Error::LengthMismatch(values.len(), trend.values.len()));
    }
    Ok(DetrendedSeries {
        values: values
            .iter()
            .zip(&trend.values)
            .map(|(v, t)| v - t)
            .collect(),
        window_used: trend.window_used,
    })
}

/// Rolling population standard deviation over the same three-regime
/// windowing as the moving average.
pub fn rolling_std(x: &[f64], w: WindowLen) -> Result<SigmaSeries> {
    let n = x.len();
    let w = w.samples;
    if w < 2 || w > n {
        return Err(Error::WindowOutOfRange { w, n });
    }
    let sums = PrefixSums::new(x.iter().copied(), n);
    let sq = PrefixSums::new(x.iter().map(|v| v * v), n);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = window_bounds(i, n, w);
        let count = (hi - lo) as f64;
        let mean = sums.range(lo, hi) / count;
        let var = sq.range(lo, hi) / count - mean * mean;
        out.push(var.max(0.0).sqrt());
    }
    Ok(SigmaSeries {
        values: out,
        window_used: WindowLen { samples: w },
    })
}

/// Relative floor applied to the rolling sigma before division, scaled by
/// the global standard deviation of the input.
pub const SIGMA_FLOOR_REL: f64 = 1e-12;

pub fn global_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Standard-score normalization values[t] = x[t] / max(sigma[t], floor).
/// Floored positions are reported in the result's side list.
pub fn standard_score(x: &DetrendedSeries, sigma: &SigmaSeries) -> Result<NormalizedSeries> {
    if x.values.len() != sigma.values.len() {
        return Err(Error::LengthMismatch(x.values.len(), sigma.values.len()));
    }
    let floor = SIGMA_FLOOR_REL * global_std(&x.values);
    let mut floored = Vec::new();
    let mut values = Vec::with_capacity(x.values.len());
    for (i, (&v, &s)) in x.values.iter().zip(&sigma.values).enumerate() {
        if s < floor {
            floored.push(i);
            values.push(v / floor.max(f64::MIN_POSITIVE));
        } else {
            values.push(v / s);
        }
    }
    Ok(NormalizedSeries {
        values,
        delta1: x.window_used,
        delta2: sigma.window_used,
        floored,
    })
}
