//! Stationarity testing for uniformly sampled time series via the
//! Wiener-Khinchin identity: after detrending and rolling normalization,
//! the ensemble power spectral density of a wide-sense stationary series
//! should match the rescaled Fourier transform of its autocorrelation.

pub mod error;
pub mod ingest;
pub mod series;
pub mod smoothing;
pub mod spectral;
pub mod synth;
pub mod window;
pub mod wktest;

pub use error::{Error, Result};
pub use ingest::{CsvSchema, GapPolicy, RawTickTable, TickSeries, TimeFormat};
pub use series::{
    detrend, global_std, lag1_returns, moving_average, price_return, rolling_std, standard_score,
    DetrendedSeries, NormalizedSeries, ReturnSeries, SigmaSeries, TrendSeries,
};
pub use smoothing::{hz_to_bins, savgol_coeffs, smooth_spectrum, SgKernel};
pub use spectral::{
    autocorrelation, dft, ensemble_average, ft_autocorr, psd, Acf, EnsemblePlan, EnsembleResult,
    EnsembleStatistic, Spectrum, SpectrumKind,
};
pub use synth::{generate, qgaussian_sample, GeneratorKind, GeneratorSpec};
pub use window::{SampleClock, WallUnit, WindowLen, WindowSpec};
pub use wktest::{
    max_stationary_window, scan_windows, test_stationarity, wk_distance, Metric, TestConfig,
    Verdict, VerdictRecord, DEFAULT_SEGMENT_LEN, DEFAULT_SMOOTH_HZ, DEFAULT_THRESHOLD,
};
