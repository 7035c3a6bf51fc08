//! Seeded synthetic series generators used for calibration and oracle
//! tests.

use crate::error::{Error, Result};
use crate::ingest::TickSeries;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Largest length for which exact-covariance fBm synthesis is offered.
pub const FBM_MAX_LEN: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeneratorKind {
    GaussianIid { sigma: f64 },
    Ar1 { phi: f64, sigma: f64 },
    RandomWalk { sigma: f64 },
    Fbm { hurst: f64 },
    QGaussian { q: f64, scale: f64 },
    VarianceSwitch { switch_at: usize, sigma1: f64, sigma2: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
    /// Stream index for reproducible parallel generation.
    pub stream: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        GeneratorSpec {
            kind,
            n,
            seed,
            stream: 0,
        }
    }
}

fn rng_for(spec: &GeneratorSpec) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);
    rng
}

fn randn(rng: &mut impl RngCore) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// q-deformed logarithm: ln_q(x) = (x^(1-q) - 1) / (1 - q).
fn ln_q(x: f64, q: f64) -> f64 {
    if (q - 1.0).abs() < 1e-12 {
        x.ln()
    } else {
        (x.powf(1.0 - q) - 1.0) / (1.0 - q)
    }
}

/// Draw `n` q-Gaussian samples via the generalized Box-Muller transform.
/// Requires 1 < q < 3.
pub fn qgaussian_sample(q: f64, scale: f64, seed: u64, n: usize) -> Result<Vec<f64>> {
    if !(1.0 < q && q < 3.0) {
        return Err(Error::InvalidParam(format!("q must be in (1, 3), got {q}")));
    }
    if scale <= 0.0 {
        return Err(Error::InvalidParam(format!("scale must be > 0, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_prime = (1.0 + q) / (3.0 - q);
    Ok((0..n)
        .map(|_| {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen();
            scale * (-2.0 * ln_q(u1, q_prime)).sqrt() * (TAU * u2).cos()
        })
        .collect())
}

/// Moments of a q-Gaussian of order `order` exist only for
/// q < (order + 3) / (order + 1); kurtosis needs q < 7/5.
pub fn qgaussian_moment_exists(q: f64, order: u32) -> bool {
    q < (order as f64 + 3.0) / (order as f64 + 1.0)
}

/// Sample kurtosis when it exists for the given shape, else `None`
/// (heavy-tail flag: the population moment diverges).
pub fn qgaussian_sample_kurtosis(q: f64, sample: &[f64]) -> Option<f64> {
    if !qgaussian_moment_exists(q, 4) {
        return None;
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let m2 = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = sample.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Some(m4 / (m2 * m2))
}

/// Autocovariance of fractional Gaussian noise at lag `k` for Hurst `h`.
fn fgn_autocov(k: usize, h: f64) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(2.0 * h) - 2.0 * k.powf(2.0 * h) + (k - 1.0).abs().powf(2.0 * h))
}

/// Exact-covariance fractional Gaussian noise by circulant embedding
/// (Dietrich-Newsam), with a direct Cholesky fallback at small n if the
/// embedding is not non-negative definite.
fn fgn_sample(n: usize, h: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let m = (2 * (n - 1)).max(2).next_power_of_two();
    let mut row = vec![0.0; m];
    for k in 0..=m / 2 {
        row[k] = fgn_autocov(k, h);
    }
    for k in m / 2 + 1..m {
        row[k] = row[m - k];
    }
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let eigs: Vec<f64> = buf.iter().map(|v| v.re).collect();
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eig = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min_eig < -1e-8 * max_eig {
        return fgn_sample_cholesky(n, h, rng);
    }
    let mut noise: Vec<Complex64> = (0..m)
        .map(|_| Complex64::new(randn(rng), randn(rng)))
        .collect();
    for (z, &e) in noise.iter_mut().zip(&eigs) {
        *z *= (e.max(0.0) / m as f64).sqrt();
    }
    planner.plan_fft_forward(m).process(&mut noise);
    Ok(noise[..n].iter().map(|z| z.re).collect())
}

fn fgn_sample_cholesky(n: usize, h: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if n > 2048 {
        return Err(Error::InvalidParam(format!(
            "circulant embedding failed and n = {n} is too large for the dense fallback"
        )));
    }
    // Lower-triangular Cholesky of the Toeplitz covariance.
    let cov = |i: usize, j: usize| fgn_autocov(i.abs_diff(j), h);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = cov(i, j);
            for k in 0..j {
                acc -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = acc.max(0.0).sqrt();
            } else {
                l[i][j] = if l[j][j] > 0.0 { acc / l[j][j] } else { 0.0 };
            }
        }
    }
    let z: Vec<f64> = (0..n).map(|_| randn(rng)).collect();
    Ok((0..n)
        .map(|i| (0..=i).map(|k| l[i][k] * z[k]).sum())
        .collect())
}

fn validate(spec: &GeneratorSpec) -> Result<()> {
    if spec.n < 2 {
        return Err(Error::InvalidParam(format!("n must be >= 2, got {}", spec.n)));
    }
    match spec.kind {
        GeneratorKind::GaussianIid { sigma }
        | GeneratorKind::RandomWalk { sigma }
        | GeneratorKind::Ar1 { sigma, .. } => {
            if sigma <= 0.0 {
                return Err(Error::InvalidParam(format!("sigma must be > 0, got {sigma}")));
            }
            if let GeneratorKind::Ar1 { phi, .. } = spec.kind {
                if phi.abs() >= 1.0 {
                    return Err(Error::InvalidParam(format!("|phi| must be < 1, got {phi}")));
                }
            }
            Ok(())
        }
        GeneratorKind::Fbm { hurst } => {
            if !(0.0 < hurst && hurst < 1.0) {
                return Err(Error::InvalidParam(format!("hurst must be in (0, 1), got {hurst}")));
            }
            if spec.n > FBM_MAX_LEN {
                return Err(Error::InvalidParam(format!(
                    "fbm n = {} above exact-method limit {FBM_MAX_LEN}",
                    spec.n
                )));
            }
            Ok(())
        }
        GeneratorKind::QGaussian { q, scale } => {
            if !(1.0 < q && q < 3.0) {
                return Err(Error::InvalidParam(format!("q must be in (1, 3), got {q}")));
            }
            if scale <= 0.0 {
                return Err(Error::InvalidParam(format!("scale must be > 0, got {scale}")));
            }
            Ok(())
        }
        GeneratorKind::VarianceSwitch { switch_at, sigma1, sigma2 } => {
            if sigma1 <= 0.0 || sigma2 <= 0.0 {
                return Err(Error::InvalidParam("sigmas must be > 0".into()));
            }
            if switch_at == 0 || switch_at >= spec.n {
                return Err(Error::InvalidParam(format!(
                    "switch point {switch_at} outside (0, {})",
                    spec.n
                )));
            }
            Ok(())
        }
    }
}

/// Generate a seeded synthetic series, offset to positive "price" levels.
pub fn generate(spec: &GeneratorSpec) -> Result<TickSeries> {
    validate(spec)?;
    let mut rng = rng_for(spec);
    let n = spec.n;
    let (mut values, label) = match spec.kind {
        GeneratorKind::GaussianIid { sigma } => (
            (0..n).map(|_| sigma * randn(&mut rng)).collect::<Vec<f64>>(),
            format!("gaussian_iid(sigma={sigma})"),
        ),
        GeneratorKind::Ar1 { phi, sigma } => {
            let mut x = Vec::with_capacity(n);
            let mut prev = 0.0;
            for _ in 0..n {
                prev = phi * prev + sigma * randn(&mut rng);
                x.push(prev);
            }
            (x, format!("ar1(phi={phi},sigma={sigma})"))
        }
        GeneratorKind::RandomWalk { sigma } => {
            let mut x = Vec::with_capacity(n);
            let mut acc = 0.0;
            for _ in 0..n {
                acc += sigma * randn(&mut rng);
                x.push(acc);
            }
            (x, format!("random_walk(sigma={sigma})"))
        }
        GeneratorKind::Fbm { hurst } => {
            let fgn = fgn_sample(n, hurst, &mut rng)?;
            let mut x = Vec::with_capacity(n);
            let mut acc = 0.0;
            for inc in fgn {
                acc += inc;
                x.push(acc);
            }
            (x, format!("fbm(H={hurst})"))
        }
        GeneratorKind::QGaussian { q, scale } => {
            let q_prime = (1.0 + q) / (3.0 - q);
            let x = (0..n)
                .map(|_| {
                    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = rng.gen();
                    scale * (-2.0 * ln_q(u1, q_prime)).sqrt() * (TAU * u2).cos()
                })
                .collect();
            (x, format!("qgaussian(q={q},scale={scale})"))
        }
        GeneratorKind::VarianceSwitch { switch_at, sigma1, sigma2 } => {
            let x = (0..n)
                .map(|i| {
                    let s = if i < switch_at { sigma1 } else { sigma2 };
                    s * randn(&mut rng)
                })
                .collect();
            (
                x,
                format!("variance_switch(at={switch_at},s1={sigma1},s2={sigma2})"),
            )
        }
    };
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 1.0 {
        let offset = 1.0 - min;
        for v in values.iter_mut() {
            *v += offset;
        }
    }
    Ok(TickSeries::from_values(values, label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::autocorrelation;

    #[test]
    fn seeded_generation_is_deterministic() {
        let spec = GeneratorSpec::new(GeneratorKind::GaussianIid { sigma: 1.0 }, 1000, 42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.values, b.values);
        let other = GeneratorSpec { stream: 1, ..spec };
        let c = generate(&other).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn prices_are_positive() {
        for kind in [
            GeneratorKind::GaussianIid { sigma: 3.0 },
            GeneratorKind::RandomWalk { sigma: 1.0 },
            GeneratorKind::Fbm { hurst: 0.7 },
        ] {
            let spec = GeneratorSpec::new(kind, 4096, 5);
            let series = generate(&spec).unwrap();
            assert!(series.values.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn ar1_lag_one_autocorrelation() {
        let spec = GeneratorSpec::new(GeneratorKind::Ar1 { phi: 0.6, sigma: 1.0 }, 100_000, 9);
        let series = generate(&spec).unwrap();
        let acf = autocorrelation(&series.values, 1).unwrap();
        assert!(
            (acf.values[1] - 0.6).abs() < 0.02,
            "C(1) = {}, expected 0.6 +/- 0.02",
            acf.values[1]
        );
    }

    #[test]
    fn brownian_fbm_has_iid_increments() {
        // H = 0.5 is ordinary Brownian motion; increments pass the
        // white-noise confidence band.
        let spec = GeneratorSpec::new(GeneratorKind::Fbm { hurst: 0.5 }, 1 << 14, 3);
        let series = generate(&spec).unwrap();
        let inc: Vec<f64> = series.values.windows(2).map(|p| p[1] - p[0]).collect();
        let acf = autocorrelation(&inc, 50).unwrap();
        let band = 3.0 / (inc.len() as f64).sqrt();
        for s in 1..=50 {
            assert!(acf.values[s].abs() < band, "lag {s}: {}", acf.values[s]);
        }
    }

    #[test]
    fn qgaussian_near_limit_matches_normal() {
        // Two-sample Kolmogorov-Smirnov distance between q -> 1+ draws
        // and a seeded normal sample.
        let n = 100_000;
        let q_sample = qgaussian_sample(1.001, 1.0, 7, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let normal: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
        let mut a = q_sample.clone();
        let mut b = normal.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max((i as f64 / n as f64 - j as f64 / n as f64).abs());
        }
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn qgaussian_heavy_tail_flag() {
        let sample = qgaussian_sample(2.0, 1.0, 11, 10_000).unwrap();
        assert_eq!(qgaussian_sample_kurtosis(2.0, &sample), None);
        assert!(qgaussian_moment_exists(1.2, 4));
        assert!(!qgaussian_moment_exists(1.5, 4));
    }

    #[test]
    fn qgaussian_symmetric() {
        let n = 100_000;
        let sample = qgaussian_sample(1.5, 1.0, 13, n).unwrap();
        let mean = sample.iter().sum::<f64>() / n as f64;
        let std = {
            let m2 = sample.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            m2.sqrt()
        };
        assert!(
            mean.abs() < 4.0 * std / (n as f64).sqrt(),
            "mean {mean} too far from 0"
        );
    }

    #[test]
    fn qgaussian_rejects_out_of_range() {
        assert!(qgaussian_sample(0.9, 1.0, 1, 10).is_err());
        assert!(qgaussian_sample(3.0, 1.0, 1, 10).is_err());
    }

    #[test]
    fn variance_switch_changes_spread() {
        let spec = GeneratorSpec::new(
            GeneratorKind::VarianceSwitch { switch_at: 5000, sigma1: 1.0, sigma2: 3.0 },
            10_000,
            21,
        );
        let series = generate(&spec).unwrap();
        let var = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
        };
        let ratio = var(&series.values[5000..]) / var(&series.values[..5000]);
        assert!((ratio - 9.0).abs() < 1.5, "variance ratio {ratio}");
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate(&GeneratorSpec::new(GeneratorKind::Fbm { hurst: 1.5 }, 100, 1)).is_err());
        assert!(generate(&GeneratorSpec::new(
            GeneratorKind::Fbm { hurst: 0.5 },
            FBM_MAX_LEN + 1,
            1
        ))
        .is_err());
        assert!(generate(&GeneratorSpec::new(
            GeneratorKind::VarianceSwitch { switch_at: 0, sigma1: 1.0, sigma2: 2.0 },
            100,
            1
        ))
        .is_err());
    }
}
