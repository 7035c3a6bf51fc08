//! Stationarity testing: compare the smoothed ensemble PSD against the
//! smoothed, rescaled Fourier transform of the ensemble autocorrelation,
//! produce a verdict, and scan normalization windows.

use crate::error::{Error, Result};
use crate::ingest::TickSeries;
use crate::series::{
    detrend, lag1_returns, moving_average, rolling_std, standard_score, DetrendedSeries,
};
use crate::smoothing::smooth_spectrum;
use crate::spectral::{
    ensemble_average, ft_autocorr, EnsemblePlan, EnsembleResult, EnsembleStatistic, Spectrum,
};
use crate::window::{SampleClock, WindowLen, WindowSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Decision threshold on the spectral distance. Calibrated against the
/// seeded synthetic families: well below the smallest distance the
/// variance-switch family produces at a failing normalization window,
/// and an order of magnitude above the iid-Gaussian noise floor.
pub const DEFAULT_THRESHOLD: f64 = 1.5e-3;

/// Default smoothing window in Hz.
pub const DEFAULT_SMOOTH_HZ: f64 = 3.97e-5;

/// Default ensemble segment length in samples.
pub const DEFAULT_SEGMENT_LEN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MedianLogRatio,
    MeanPctDiff,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::MedianLogRatio => "median_log_ratio",
            Metric::MeanPctDiff => "mean_pct_diff",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestConfig {
    pub delta1: WindowSpec,
    pub delta2: WindowSpec,
    pub ensemble_len: usize,
    pub smooth_hz: f64,
    pub smooth_order: usize,
    /// Frequency band [f_lo, f_hi] in Hz over which the distance is
    /// evaluated. `None` selects the default band: everything except the
    /// lowest 5 bins (detrending leakage) and the top 10% of bins.
    pub band: Option<(f64, f64)>,
    pub metric: Metric,
    pub threshold: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            delta1: "1week".parse().unwrap(),
            delta2: "60min".parse().unwrap(),
            ensemble_len: DEFAULT_SEGMENT_LEN,
            smooth_hz: DEFAULT_SMOOTH_HZ,
            smooth_order: 1,
            band: None,
            metric: Metric::MedianLogRatio,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "threshold must be > 0, got {}",
                self.threshold
            )));
        }
        if self.smooth_hz <= 0.0 {
            return Err(Error::InvalidParam("smooth_hz must be > 0".into()));
        }
        if self.ensemble_len < 2 {
            return Err(Error::InvalidParam("ensemble_len must be >= 2".into()));
        }
        if let Some((lo, hi)) = self.band {
            if !(lo < hi) {
                return Err(Error::InvalidParam(format!(
                    "band f_lo {lo} must be below f_hi {hi}"
                )));
            }
        }
        Ok(())
    }
}

/// The compared smoothed pair with per-bin discrepancies.
#[derive(Debug, Clone)]
pub struct WkComparison {
    pub psd_smoothed: Spectrum,
    pub ftac_smoothed: Spectrum,
    pub pointwise: Vec<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub sigma_floor_hits: usize,
    pub segments_used: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub stationary: bool,
    pub distance: f64,
    pub threshold: f64,
    pub delta1: WindowLen,
    pub delta2: WindowLen,
    pub config: TestConfig,
    pub diagnostics: Diagnostics,
    pub comparison: WkComparison,
    pub label: String,
    /// Band actually used, in Hz.
    pub band_used: (f64, f64),
}

/// Flat serialization record for verdict JSONL output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub label: String,
    pub delta1: String,
    pub delta1_samples: usize,
    pub delta2: String,
    pub delta2_samples: usize,
    pub metric: String,
    pub distance: f64,
    pub threshold: f64,
    pub stationary: bool,
    pub n_samples: usize,
    pub band_hz: (f64, f64),
    pub segments_used: usize,
    pub sigma_floor_hits: usize,
}

impl Verdict {
    pub fn record(&self) -> VerdictRecord {
        VerdictRecord {
            label: self.label.clone(),
            delta1: self.config.delta1.to_string(),
            delta1_samples: self.delta1.samples,
            delta2: self.config.delta2.to_string(),
            delta2_samples: self.delta2.samples,
            metric: self.config.metric.as_str().to_string(),
            distance: self.distance,
            threshold: self.threshold,
            stationary: self.stationary,
            n_samples: self.diagnostics.n_samples,
            band_hz: self.band_used,
            segments_used: self.diagnostics.segments_used,
            sigma_floor_hits: self.diagnostics.sigma_floor_hits,
        }
    }
}

/// Per-bin |a_i - b_i| / |a_i|. Zero-denominator bins are excluded and
/// their indices reported.
pub fn percentage_difference(a: &Spectrum, b: &Spectrum) -> Result<(Vec<f64>, Vec<usize>)> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let mut values = Vec::with_capacity(a.values.len());
    let mut excluded = Vec::new();
    for (i, (&x, &y)) in a.values.iter().zip(&b.values).enumerate() {
        if x == 0.0 {
            excluded.push(i);
            values.push(f64::NAN);
        } else {
            values.push((x - y).abs() / x.abs());
        }
    }
    Ok((values, excluded))
}

fn band_indices(spec: &Spectrum, band: Option<(f64, f64)>) -> (usize, usize, (f64, f64)) {
    let n = spec.frequencies.len();
    match band {
        Some((lo, hi)) => {
            let i0 = spec.frequencies.partition_point(|&f| f < lo);
            let i1 = spec.frequencies.partition_point(|&f| f <= hi);
            (i0, i1, (lo, hi))
        }
        None => {
            let i0 = 5.min(n);
            let i1 = (n as f64 * 0.9).floor() as usize;
            let f_lo = spec.frequencies.get(i0).copied().unwrap_or(0.0);
            let f_hi = spec
                .frequencies
                .get(i1.saturating_sub(1))
                .copied()
                .unwrap_or(0.0);
            (i0, i1, (f_lo, f_hi))
        }
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Scalar discrepancy between two smoothed spectra over a band.
pub fn wk_distance(
    psd: &Spectrum,
    ftac: &Spectrum,
    band: Option<(f64, f64)>,
    metric: Metric,
) -> Result<f64> {
    if !psd.same_grid(ftac) {
        return Err(Error::GridMismatch);
    }
    let (i0, i1, _) = band_indices(psd, band);
    let mut usable = Vec::new();
    match metric {
        Metric::MedianLogRatio => {
            for k in i0..i1 {
                let (p, q) = (psd.values[k], ftac.values[k]);
                if p > 0.0 && q > 0.0 {
                    usable.push((p / q).log10().abs());
                }
            }
        }
        Metric::MeanPctDiff => {
            for k in i0..i1 {
                let (p, q) = (psd.values[k], ftac.values[k]);
                if p != 0.0 {
                    usable.push((p - q).abs() / p.abs());
                }
            }
        }
    }
    if usable.len() < 8 {
        return Err(Error::BandTooNarrow {
            got: usable.len(),
            min: 8,
        });
    }
    Ok(match metric {
        Metric::MedianLogRatio => median(&mut usable),
        Metric::MeanPctDiff => usable.iter().sum::<f64>() / usable.len() as f64,
    })
}

/// Detrended lag-1 returns of a level series: the part of the pipeline
/// that depends only on delta1. Shared across window scans.
pub struct DetrendedReturns {
    pub values: Vec<f64>,
    pub delta1: WindowLen,
    pub step_seconds: f64,
    pub clock: SampleClock,
    pub label: String,
}

pub fn detrended_returns(series: &TickSeries, cfg: &TestConfig) -> Result<DetrendedReturns> {
    let n = series.len();
    let w1 = cfg
        .delta1
        .to_samples(series.step_seconds, series.clock);
    let w1 = WindowLen {
        samples: w1.samples.min(n),
    };
    let trend = moving_average(&series.values, w1)?;
    let det = detrend(&series.values, &trend)?;
    let returns = lag1_returns(&det.values);
    if returns.len() < 4 {
        return Err(Error::InsufficientData(
            "fewer than 4 return samples".into(),
        ));
    }
    Ok(DetrendedReturns {
        values: returns,
        delta1: w1,
        step_seconds: series.step_seconds,
        clock: series.clock,
        label: series.label.clone(),
    })
}

/// Run normalization onward for one delta2 and produce a verdict.
pub fn evaluate_window(base: &DetrendedReturns, cfg: &TestConfig) -> Result<Verdict> {
    cfg.validate()?;
    let n = base.values.len();
    let w2 = cfg.delta2.to_samples(base.step_seconds, base.clock);
    let w2 = WindowLen {
        samples: w2.samples.clamp(2, n),
    };
    let sigma = rolling_std(&base.values, w2)?;
    let det = DetrendedSeries {
        values: base.values.clone(),
        window_used: base.delta1,
    };
    let z = standard_score(&det, &sigma)?;

    let l_s = cfg.ensemble_len.min(z.values.len());
    if l_s < 16 {
        return Err(Error::InsufficientData(format!(
            "ensemble segment length {l_s} too short"
        )));
    }
    let plan = EnsemblePlan {
        segment_len: l_s,
        drop_remainder: true,
    };
    let psd_avg = match ensemble_average(
        &z.values,
        &plan,
        EnsembleStatistic::Psd,
        base.step_seconds,
    )? {
        EnsembleResult::Psd(s) => s,
        _ => unreachable!(),
    };
    let acf_avg = match ensemble_average(
        &z.values,
        &plan,
        EnsembleStatistic::Acf { s_max: l_s - 1 },
        base.step_seconds,
    )? {
        EnsembleResult::Acf(a) => a,
        _ => unreachable!(),
    };
    let mut ftac = ft_autocorr(&acf_avg, acf_avg.sigma2, l_s, base.step_seconds)?;
    // The PSD is stored one-sided with the two-sided power folded; apply
    // the same fold to the transformed autocorrelation so the two curves
    // live on one scale over the interior band.
    for v in ftac.values.iter_mut() {
        *v *= 2.0;
    }

    let psd_s = smooth_spectrum(&psd_avg, cfg.smooth_hz, cfg.smooth_order)?;
    let ftac_s = smooth_spectrum(&ftac, cfg.smooth_hz, cfg.smooth_order)?;
    let distance = wk_distance(&psd_s, &ftac_s, cfg.band, cfg.metric)?;
    let (pointwise, _) = percentage_difference(&psd_s, &ftac_s)?;
    let (_, _, band_used) = band_indices(&psd_s, cfg.band);

    let segments_used = z.values.len() / l_s;
    Ok(Verdict {
        stationary: distance < cfg.threshold,
        distance,
        threshold: cfg.threshold,
        delta1: base.delta1,
        delta2: w2,
        config: cfg.clone(),
        diagnostics: Diagnostics {
            sigma_floor_hits: z.floored.len(),
            segments_used,
            n_samples: n,
        },
        comparison: WkComparison {
            psd_smoothed: psd_s,
            ftac_smoothed: ftac_s,
            pointwise,
            distance,
        },
        label: base.label.clone(),
        band_used,
    })
}

/// Full pipeline: detrend, difference, normalize, estimate both spectra,
/// smooth, compare.
pub fn test_stationarity(series: &TickSeries, cfg: &TestConfig) -> Result<Verdict> {
    let base = detrended_returns(series, cfg)?;
    evaluate_window(&base, cfg)
}

/// One verdict per delta2 candidate, all other config fixed. The
/// detrended series is computed once and shared.
pub fn scan_windows(
    series: &TickSeries,
    cfg_base: &TestConfig,
    delta2_list: &[WindowSpec],
) -> Result<Vec<Verdict>> {
    if delta2_list.is_empty() {
        return Err(Error::InvalidParam("empty delta2 list".into()));
    }
    let base = detrended_returns(series, cfg_base)?;
    delta2_list
        .par_iter()
        .map(|d2| {
            let cfg = TestConfig {
                delta2: *d2,
                ..cfg_base.clone()
            };
            evaluate_window(&base, &cfg)
        })
        .collect()
}

/// Largest candidate window (candidates sorted descending) whose verdict
/// is stationary, or `None` when every candidate fails.
pub fn max_stationary_window(
    series: &TickSeries,
    cfg_base: &TestConfig,
    candidates: &[WindowSpec],
) -> Result<Option<WindowLen>> {
    let base = detrended_returns(series, cfg_base)?;
    let resolved: Vec<usize> = candidates
        .iter()
        .map(|c| c.to_samples(series.step_seconds, series.clock).samples)
        .collect();
    if resolved.windows(2).any(|p| p[0] < p[1]) {
        return Err(Error::InvalidParam(
            "candidates must be sorted descending".into(),
        ));
    }
    for d2 in candidates {
        let cfg = TestConfig {
            delta2: *d2,
            ..cfg_base.clone()
        };
        let verdict = evaluate_window(&base, &cfg)?;
        if verdict.stationary {
            return Ok(Some(verdict.delta2));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectrumKind;
    use approx::assert_relative_eq;

    fn spectrum(values: Vec<f64>, kind: SpectrumKind) -> Spectrum {
        Spectrum {
            frequencies: (0..values.len()).map(|k| k as f64 * 1e-5).collect(),
            values,
            kind,
            smoothed: true,
        }
    }

    #[test]
    fn pct_diff_identical_is_zero() {
        let a = spectrum(vec![2.0; 32], SpectrumKind::Psd);
        let b = spectrum(vec![2.0; 32], SpectrumKind::FtAcf);
        let (d, excluded) = percentage_difference(&a, &b).unwrap();
        assert!(excluded.is_empty());
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pct_diff_hand_value_and_zero_denominator() {
        let mut av = vec![2.0; 32];
        av[3] = 0.0;
        let a = spectrum(av, SpectrumKind::Psd);
        let b = spectrum(vec![1.0; 32], SpectrumKind::FtAcf);
        let (d, excluded) = percentage_difference(&a, &b).unwrap();
        assert_eq!(d[0], 0.5);
        assert_eq!(excluded, vec![3]);
    }

    #[test]
    fn pct_diff_invariant_under_common_rescale() {
        let a = spectrum((1..33).map(|v| v as f64).collect(), SpectrumKind::Psd);
        let b = spectrum((1..33).map(|v| v as f64 * 0.7).collect(), SpectrumKind::FtAcf);
        let scaled_a = spectrum(a.values.iter().map(|v| v * 5.0).collect(), SpectrumKind::Psd);
        let scaled_b = spectrum(b.values.iter().map(|v| v * 5.0).collect(), SpectrumKind::FtAcf);
        let (d1, _) = percentage_difference(&a, &b).unwrap();
        let (d2, _) = percentage_difference(&scaled_a, &scaled_b).unwrap();
        for (u, v) in d1.iter().zip(&d2) {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn pct_diff_grid_mismatch() {
        let a = spectrum(vec![1.0; 32], SpectrumKind::Psd);
        let b = spectrum(vec![1.0; 16], SpectrumKind::FtAcf);
        assert!(matches!(
            percentage_difference(&a, &b),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn distance_identical_is_zero() {
        let a = spectrum(vec![3.0; 64], SpectrumKind::Psd);
        let b = spectrum(vec![3.0; 64], SpectrumKind::FtAcf);
        for metric in [Metric::MedianLogRatio, Metric::MeanPctDiff] {
            assert_eq!(wk_distance(&a, &b, None, metric).unwrap(), 0.0);
        }
    }

    #[test]
    fn distance_factor_two_is_log10_two() {
        let a = spectrum(vec![2.0; 64], SpectrumKind::Psd);
        let b = spectrum(vec![1.0; 64], SpectrumKind::FtAcf);
        let d = wk_distance(&a, &b, None, Metric::MedianLogRatio).unwrap();
        assert_relative_eq!(d, 2f64.log10(), epsilon = 1e-12);
    }

    #[test]
    fn median_log_ratio_symmetric() {
        let a = spectrum((1..65).map(|v| v as f64).collect(), SpectrumKind::Psd);
        let b = spectrum((1..65).map(|v| (v as f64).sqrt()).collect(), SpectrumKind::FtAcf);
        let d1 = wk_distance(&a, &b, None, Metric::MedianLogRatio).unwrap();
        let d2 = wk_distance(&b, &a, None, Metric::MedianLogRatio).unwrap();
        assert_relative_eq!(d1, d2, epsilon = 1e-12);
    }

    #[test]
    fn distance_scale_invariant() {
        let a = spectrum((1..65).map(|v| v as f64).collect(), SpectrumKind::Psd);
        let b = spectrum((1..65).map(|v| v as f64 * 1.3).collect(), SpectrumKind::FtAcf);
        let c = 42.0;
        let ac = spectrum(a.values.iter().map(|v| c * v).collect(), SpectrumKind::Psd);
        let bc = spectrum(b.values.iter().map(|v| c * v).collect(), SpectrumKind::FtAcf);
        for metric in [Metric::MedianLogRatio, Metric::MeanPctDiff] {
            let d1 = wk_distance(&a, &b, None, metric).unwrap();
            let d2 = wk_distance(&ac, &bc, None, metric).unwrap();
            assert_relative_eq!(d1, d2, epsilon = 1e-12);
        }
    }

    #[test]
    fn too_few_usable_bins_is_error() {
        let a = spectrum(vec![1.0; 10], SpectrumKind::Psd);
        let b = spectrum(vec![1.0; 10], SpectrumKind::FtAcf);
        assert!(matches!(
            wk_distance(&a, &b, None, Metric::MedianLogRatio),
            Err(Error::BandTooNarrow { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = TestConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.threshold = -1.0;
        assert!(cfg.validate().is_err());
        cfg = TestConfig {
            band: Some((2.0, 1.0)),
            ..TestConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scan_rejects_empty_list() {
        let series = crate::ingest::TickSeries::from_values(vec![1.0; 64], "t");
        assert!(scan_windows(&series, &TestConfig::default(), &[]).is_err());
    }
}
