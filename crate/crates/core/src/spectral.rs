//! Sample autocorrelation, discrete Fourier transform, power spectral
//! density, the rescaled transform of the autocorrelation, and
//! segment-averaged (ensemble) versions of these.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Sample autocorrelation with the variance normalization used.
#[derive(Debug, Clone)]
pub struct Acf {
    /// values[s] = C(s) for s = 0..=s_max; values[0] is exactly 1.
    pub values: Vec<f64>,
    pub sigma2: f64,
    pub mu: f64,
}

impl Acf {
    pub fn s_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// Two-sided complex spectrum under the unitary 1/sqrt(T) convention.
#[derive(Debug, Clone)]
pub struct ComplexSpectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    Psd,
    FtAcf,
}

impl SpectrumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumKind::Psd => "psd",
            SpectrumKind::FtAcf => "ft_acf",
        }
    }
}

/// Frequency-indexed real-valued curve, raw or smoothed.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
    pub smoothed: bool,
}

impl Spectrum {
    pub fn grid_step(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }

    pub fn same_grid(&self, other: &Spectrum) -> bool {
        self.frequencies.len() == other.frequencies.len()
            && self
                .frequencies
                .iter()
                .zip(&other.frequencies)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(*b).max(1e-300))
    }
}

/// Segmenting plan for ensemble averaging.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsemblePlan {
    pub segment_len: usize,
    pub drop_remainder: bool,
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn population_variance(x: &[f64]) -> (f64, f64) {
    let mu = mean(x);
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64;
    (mu, var)
}

thread_local! {
    static PLANNER: std::cell::RefCell<FftPlanner<f64>> =
        std::cell::RefCell::new(FftPlanner::new());
}

fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len())).process(buf);
}

fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len())).process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Biased (divide-by-N) sample autocorrelation up to lag `s_max`, with
/// the full-series mean and population variance in the normalization.
/// Computed via FFT; identical to the direct double sum.
pub fn autocorrelation(x: &[f64], s_max: usize) -> Result<Acf> {
    let n = x.len();
    if s_max >= n {
        return Err(Error::LagOutOfRange { s_max, n });
    }
    let (mu, sigma2) = population_variance(x);
    if sigma2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = Vec::with_capacity(m);
    buf.extend(x.iter().map(|v| Complex64::new(v - mu, 0.0)));
    buf.resize(m, Complex64::new(0.0, 0.0));
    fft_forward(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    fft_inverse(&mut buf);
    let scale = 1.0 / (n as f64 * sigma2);
    let mut values = Vec::with_capacity(s_max + 1);
    values.push(1.0);
    for s in 1..=s_max {
        values.push(buf[s].re * scale);
    }
    Ok(Acf { values, sigma2, mu })
}

/// Discrete Fourier transform under the unitary 1/sqrt(T) convention,
/// with frequencies in Hz at f_k = k / (N * step_seconds).
pub fn dft(x: &[f64], step_seconds: f64) -> Result<ComplexSpectrum> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData("dft needs at least 2 samples".into()));
    }
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_forward(&mut buf);
    let norm = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= norm;
    }
    let df = 1.0 / (n as f64 * step_seconds);
    Ok(ComplexSpectrum {
        frequencies: (0..n).map(|k| k as f64 * df).collect(),
        values: buf,
    })
}

/// One-sided power spectral density |x^(f)|^2 over k = 0..floor(N/2),
/// with interior bins carrying the folded two-sided power.
pub fn psd(x: &[f64], step_seconds: f64) -> Result<Spectrum> {
    let spec = dft(x, step_seconds)?;
    Ok(fold_one_sided(&spec))
}

fn fold_one_sided(spec: &ComplexSpectrum) -> Spectrum {
    let n = spec.values.len();
    let half = n / 2;
    let mut values = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let p = spec.values[k].norm_sqr();
        // Double every bin with a distinct mirror partner: 0 < k < n/2,
        // plus k = n/2 itself when n is odd.
        let doubled = k > 0 && (2 * k) != n;
        values.push(if doubled { 2.0 * p } else { p });
    }
    Spectrum {
        frequencies: spec.frequencies[..=half].to_vec(),
        values,
        kind: SpectrumKind::Psd,
        smoothed: false,
    }
}

/// Rescaled Fourier transform of a one-sided autocorrelation:
/// S(f_k) = sigma2 * (1 + 2 * Re sum_{s=1}^{s_max} C(s) e^{-2 pi i k s / n}),
/// on the same one-sided frequency grid as `psd` for a length-`n`
/// segment. The additive sigma2 is the lag-0 term, so white noise maps
/// to a flat spectrum at sigma2.
pub fn ft_autocorr(acf: &Acf, sigma2: f64, n: usize, step_seconds: f64) -> Result<Spectrum> {
    if acf.s_max() >= n {
        return Err(Error::LagOutOfRange {
            s_max: acf.s_max(),
            n,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (s, &c) in acf.values.iter().enumerate().skip(1) {
        buf[s] = Complex64::new(c, 0.0);
    }
    fft_forward(&mut buf);
    let df = 1.0 / (n as f64 * step_seconds);
    let half = n / 2;
    Ok(Spectrum {
        frequencies: (0..=half).map(|k| k as f64 * df).collect(),
        values: (0..=half)
            .map(|k| sigma2 * (1.0 + 2.0 * buf[k].re))
            .collect(),
        kind: SpectrumKind::FtAcf,
        smoothed: false,
    })
}

pub enum EnsembleStatistic {
    Acf { s_max: usize },
    Psd,
}

pub enum EnsembleResult {
    Acf(Acf),
    Psd(Spectrum),
}

/// Cut `x` into consecutive non-overlapping segments of `plan.segment_len`
/// samples, compute the requested statistic per segment, and average
/// arithmetically across segments. Remainder samples are dropped for PSD
/// (grid mismatch); for the ACF a final short segment is kept only when
/// `drop_remainder` is false and the lag range still fits.
pub fn ensemble_average(
    x: &[f64],
    plan: &EnsemblePlan,
    which: EnsembleStatistic,
    step_seconds: f64,
) -> Result<EnsembleResult> {
    let n = x.len();
    let l_s = plan.segment_len;
    if l_s < 2 || l_s > n {
        return Err(Error::SegmentOutOfRange { l_s, n });
    }
    let n_seg = n / l_s;
    let segments: Vec<&[f64]> = (0..n_seg).map(|i| &x[i * l_s..(i + 1) * l_s]).collect();
    match which {
        EnsembleStatistic::Psd => {
            let spectra: Vec<Spectrum> = segments
                .par_iter()
                .map(|seg| psd(seg, step_seconds))
                .collect::<Result<_>>()?;
            let mut avg = spectra[0].clone();
            for spec in &spectra[1..] {
                for (a, v) in avg.values.iter_mut().zip(&spec.values) {
                    *a += v;
                }
            }
            let inv = 1.0 / n_seg as f64;
            for a in avg.values.iter_mut() {
                *a *= inv;
            }
            Ok(EnsembleResult::Psd(avg))
        }
        EnsembleStatistic::Acf { s_max } => {
            let mut all: Vec<&[f64]> = segments;
            if !plan.drop_remainder {
                let rest = &x[n_seg * l_s..];
                if rest.len() > s_max && rest.len() >= 2 {
                    all.push(rest);
                }
            }
            let acfs: Vec<Acf> = all
                .par_iter()
                .map(|seg| autocorrelation(seg, s_max))
                .collect::<Result<_>>()?;
            let count = acfs.len() as f64;
            let mut values = vec![0.0; s_max + 1];
            let mut sigma2 = 0.0;
            let mut mu = 0.0;
            for acf in &acfs {
                for (a, v) in values.iter_mut().zip(&acf.values) {
                    *a += v;
                }
                sigma2 += acf.sigma2;
                mu += acf.mu;
            }
            for a in values.iter_mut() {
                *a /= count;
            }
            values[0] = 1.0;
            Ok(EnsembleResult::Acf(Acf {
                values,
                sigma2: sigma2 / count,
                mu: mu / count,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn randn(rng: &mut ChaCha8Rng) -> f64 {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    #[test]
    fn acf_lag_zero_is_one() {
        let x = [0.3, -1.2, 4.5, 0.0, 2.2];
        let acf = autocorrelation(&x, 3).unwrap();
        assert_eq!(acf.values[0], 1.0);
    }

    #[test]
    fn acf_alternating_hand_value() {
        let acf = autocorrelation(&[1.0, -1.0, 1.0, -1.0], 1).unwrap();
        assert_relative_eq!(acf.values[1], -0.75, max_relative = 1e-12);
    }

    #[test]
    fn acf_matches_direct_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..257).map(|_| randn(&mut rng)).collect();
        let acf = autocorrelation(&x, 40).unwrap();
        let (mu, sigma2) = population_variance(&x);
        for s in 1..=40usize {
            let direct: f64 = (0..x.len() - s)
                .map(|t| (x[t] - mu) * (x[t + s] - mu))
                .sum::<f64>()
                / (x.len() as f64 * sigma2);
            assert_relative_eq!(acf.values[s], direct, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn acf_white_noise_confidence_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let x: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
        let acf = autocorrelation(&x, 100).unwrap();
        // With 100 lags a lone 3-sigma excursion is expected noise; demand
        // every lag inside 4 sigma and all but a couple inside 3 sigma.
        let sigma = 1.0 / (n as f64).sqrt();
        let mut outside3 = 0;
        for s in 1..=100 {
            let c = acf.values[s].abs();
            assert!(c < 4.0 * sigma, "lag {s}: {c} outside 4-sigma band");
            if c >= 3.0 * sigma {
                outside3 += 1;
            }
        }
        assert!(outside3 <= 2, "{outside3} lags outside the 3-sigma band");
    }

    #[test]
    fn acf_symmetric_under_reversal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..128).map(|_| randn(&mut rng)).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        let a = autocorrelation(&x, 30).unwrap();
        let b = autocorrelation(&rev, 30).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(u, v, max_relative = 1e-9, epsilon = 1e-11);
        }
    }

    #[test]
    fn acf_rejects_zero_variance() {
        assert!(matches!(
            autocorrelation(&[3.0; 16], 4),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn dft_of_zero_is_zero() {
        let spec = dft(&[0.0; 32], 60.0).unwrap();
        for v in spec.values {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn dft_cosine_closed_form() {
        let n = 256;
        let k0 = 12;
        let x: Vec<f64> = (0..n)
            .map(|t| (TAU * k0 as f64 * t as f64 / n as f64).cos())
            .collect();
        let spec = dft(&x, 60.0).unwrap();
        for (k, v) in spec.values.iter().enumerate() {
            let p = v.norm_sqr();
            if k == k0 || k == n - k0 {
                assert_relative_eq!(p, n as f64 / 4.0, max_relative = 1e-10);
            } else {
                assert!(p < 1e-10, "leak at bin {k}: {p}");
            }
        }
    }

    #[test]
    fn dft_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..1024).map(|_| randn(&mut rng)).collect();
        let spec = dft(&x, 60.0).unwrap();
        let lhs: f64 = spec.values.iter().map(|v| v.norm_sqr()).sum();
        let rhs: f64 = x.iter().map(|v| v * v).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn dft_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100;
        let x: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
        let (a, b) = (1.7, -0.3);
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let sx = dft(&x, 60.0).unwrap();
        let sy = dft(&y, 60.0).unwrap();
        let sm = dft(&mixed, 60.0).unwrap();
        for k in 0..n {
            let expect = a * sx.values[k] + b * sy.values[k];
            assert!((sm.values[k] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn psd_of_zero_is_zero() {
        let spec = psd(&[0.0; 16], 60.0).unwrap();
        assert!(spec.values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn psd_cosine_one_sided_peak() {
        let n = 256;
        let k0 = 12;
        let x: Vec<f64> = (0..n)
            .map(|t| (TAU * k0 as f64 * t as f64 / n as f64).cos())
            .collect();
        let spec = psd(&x, 60.0).unwrap();
        assert_relative_eq!(spec.values[k0], n as f64 / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn psd_folded_parseval() {
        for n in [64usize, 65, 1024] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let x: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
            let spec = psd(&x, 60.0).unwrap();
            let lhs: f64 = spec.values.iter().sum();
            let rhs: f64 = x.iter().map(|v| v * v).sum();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        }
    }

    #[test]
    fn psd_invariant_under_circular_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 128;
        let x: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
        let mut rotated = x.clone();
        rotated.rotate_left(17);
        let a = psd(&x, 60.0).unwrap();
        let b = psd(&rotated, 60.0).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(u, v, max_relative = 1e-9, epsilon = 1e-10);
        }
    }

    #[test]
    fn ft_autocorr_of_delta_is_flat_sigma2() {
        // White-noise limit C(s) = delta_{s0}.
        let acf = Acf {
            values: {
                let mut v = vec![0.0; 32];
                v[0] = 1.0;
                v
            },
            sigma2: 2.5,
            mu: 0.0,
        };
        let spec = ft_autocorr(&acf, 2.5, 64, 60.0).unwrap();
        for v in spec.values {
            assert_relative_eq!(v, 2.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn circular_wiener_khinchin_identity() {
        // DFT of the full circular autocovariance equals |x^(f)|^2,
        // checked against a brute-force double sum.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 64;
        let x: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
        let mu = mean(&x);
        let xc: Vec<f64> = x.iter().map(|v| v - mu).collect();
        // Brute-force circular autocovariance.
        let gamma: Vec<f64> = (0..n)
            .map(|s| (0..n).map(|t| xc[t] * xc[(t + s) % n]).sum::<f64>() / n as f64)
            .collect();
        let spec = dft(&xc, 60.0).unwrap();
        for k in 0..n {
            let ft_gamma: f64 = (0..n)
                .map(|s| gamma[s] * (TAU * k as f64 * s as f64 / n as f64).cos())
                .sum();
            let p = spec.values[k].norm_sqr();
            assert_relative_eq!(ft_gamma, p, max_relative = 1e-10, epsilon = 1e-10);
        }
    }

    #[test]
    fn ensemble_of_one_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<f64> = (0..256).map(|_| randn(&mut rng)).collect();
        let plan = EnsemblePlan {
            segment_len: x.len(),
            drop_remainder: true,
        };
        match ensemble_average(&x, &plan, EnsembleStatistic::Psd, 60.0).unwrap() {
            EnsembleResult::Psd(avg) => {
                let direct = psd(&x, 60.0).unwrap();
                for (a, b) in avg.values.iter().zip(&direct.values) {
                    assert_relative_eq!(a, b, max_relative = 1e-12);
                }
            }
            _ => unreachable!(),
        }
        match ensemble_average(&x, &plan, EnsembleStatistic::Acf { s_max: 50 }, 60.0).unwrap() {
            EnsembleResult::Acf(avg) => {
                let direct = autocorrelation(&x, 50).unwrap();
                for (a, b) in avg.values.iter().zip(&direct.values) {
                    assert_relative_eq!(a, b, max_relative = 1e-10, epsilon = 1e-12);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn ensemble_averaging_reduces_psd_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n_seg = 32;
        let l_s = 4096;
        let x: Vec<f64> = (0..n_seg * l_s).map(|_| randn(&mut rng)).collect();
        let plan = EnsemblePlan {
            segment_len: l_s,
            drop_remainder: true,
        };
        let avg = match ensemble_average(&x, &plan, EnsembleStatistic::Psd, 60.0).unwrap() {
            EnsembleResult::Psd(s) => s,
            _ => unreachable!(),
        };
        let single = psd(&x[..l_s], 60.0).unwrap();
        let bin_var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|u| (u - m) * (u - m)).sum::<f64>() / v.len() as f64
        };
        // Interior bins: white-noise PSD is flat, so bin scatter is
        // estimator variance.
        let v_avg = bin_var(&avg.values[1..l_s / 2]);
        let v_one = bin_var(&single.values[1..l_s / 2]);
        let ratio = v_avg / v_one;
        assert!(
            (ratio - 1.0 / n_seg as f64).abs() < 1.5 / n_seg as f64,
            "variance ratio {ratio}, expected about {}",
            1.0 / n_seg as f64
        );
    }

    #[test]
    fn ensemble_rejects_oversized_segment() {
        let plan = EnsemblePlan {
            segment_len: 100,
            drop_remainder: true,
        };
        assert!(matches!(
            ensemble_average(&[0.0; 10], &plan, EnsembleStatistic::Psd, 60.0),
            Err(Error::SegmentOutOfRange { .. })
        ));
    }
}
