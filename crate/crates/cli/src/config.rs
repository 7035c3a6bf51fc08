//! TOML config loading and flag-over-file resolution.

use serde::Deserialize;
use wkstat::wktest::{Metric, TestConfig};
use wkstat::window::WindowSpec;

/// Keys mirroring TestConfig. Unknown keys are a hard error so typos
/// cannot silently fall back to defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub delta1: Option<String>,
    pub delta2: Option<String>,
    pub ensemble_len: Option<usize>,
    pub smooth_hz: Option<f64>,
    pub smooth_order: Option<usize>,
    pub band_lo: Option<f64>,
    pub band_hi: Option<f64>,
    pub metric: Option<String>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// Segment-scale runs: one-week detrending window.
    Segment,
    /// Full-history runs: one-year detrending window.
    Full,
}

/// Flag values as captured by clap; `None` means "not given".
#[derive(Debug, Default, clap::Args)]
pub struct ConfigFlags {
    /// TOML config file; command-line flags override its values
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Preset for the detrending window default
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Detrending window, e.g. 1week, 1year, 4096
    #[arg(long)]
    pub delta1: Option<String>,
    /// Ensemble segment length in samples
    #[arg(long)]
    pub ensemble_len: Option<usize>,
    /// Smoothing window in Hz
    #[arg(long)]
    pub smooth_hz: Option<f64>,
    /// Smoothing polynomial order
    #[arg(long)]
    pub smooth_order: Option<usize>,
    /// Lower edge of the comparison band in Hz
    #[arg(long)]
    pub band_lo: Option<f64>,
    /// Upper edge of the comparison band in Hz
    #[arg(long)]
    pub band_hi: Option<f64>,
    /// Distance metric: median_log_ratio or mean_pct_diff
    #[arg(long)]
    pub metric: Option<String>,
    /// Stationarity threshold on the distance
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
}

pub fn parse_metric(s: &str) -> Result<Metric, String> {
    match s {
        "median_log_ratio" => Ok(Metric::MedianLogRatio),
        "mean_pct_diff" => Ok(Metric::MeanPctDiff),
        other => Err(format!(
            "unknown metric '{other}' (expected median_log_ratio or mean_pct_diff)"
        )),
    }
}

fn parse_window(s: &str, key: &str) -> Result<WindowSpec, String> {
    s.parse::<WindowSpec>()
        .map_err(|e| format!("bad {key} '{s}': {e}"))
}

/// Defaults, then config file, then flags; validated at the end.
/// `delta2_flag` lives on the subcommands because `scan` takes a list.
pub fn resolve_with_delta2(
    flags: &ConfigFlags,
    delta2_flag: Option<&str>,
) -> Result<TestConfig, String> {
    let mut cfg = resolve(flags)?;
    if let Some(s) = delta2_flag {
        cfg.delta2 = parse_window(s, "delta2")?;
        cfg.validate().map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

pub fn resolve(flags: &ConfigFlags) -> Result<TestConfig, String> {
    let mut cfg = TestConfig::default();
    if flags.profile == Some(Profile::Full) {
        cfg.delta1 = parse_window("1year", "delta1")?;
    }

    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| format!("malformed config {}: {e}", path.display()))?;
        apply_file(&mut cfg, &file)?;
    }
    apply_flags(&mut cfg, flags)?;

    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn apply_file(cfg: &mut TestConfig, file: &FileConfig) -> Result<(), String> {
    if let Some(s) = &file.delta1 {
        cfg.delta1 = parse_window(s, "delta1")?;
    }
    if let Some(s) = &file.delta2 {
        cfg.delta2 = parse_window(s, "delta2")?;
    }
    if let Some(v) = file.ensemble_len {
        cfg.ensemble_len = v;
    }
    if let Some(v) = file.smooth_hz {
        cfg.smooth_hz = v;
    }
    if let Some(v) = file.smooth_order {
        cfg.smooth_order = v;
    }
    if let Some(m) = &file.metric {
        cfg.metric = parse_metric(m)?;
    }
    if let Some(v) = file.threshold {
        cfg.threshold = v;
    }
    set_band(cfg, file.band_lo, file.band_hi)?;
    Ok(())
}

fn apply_flags(cfg: &mut TestConfig, flags: &ConfigFlags) -> Result<(), String> {
    if let Some(s) = &flags.delta1 {
        cfg.delta1 = parse_window(s, "delta1")?;
    }
    if let Some(v) = flags.ensemble_len {
        cfg.ensemble_len = v;
    }
    if let Some(v) = flags.smooth_hz {
        cfg.smooth_hz = v;
    }
    if let Some(v) = flags.smooth_order {
        cfg.smooth_order = v;
    }
    if let Some(m) = &flags.metric {
        cfg.metric = parse_metric(m)?;
    }
    if let Some(v) = flags.threshold {
        cfg.threshold = v;
    }
    set_band(cfg, flags.band_lo, flags.band_hi)?;
    Ok(())
}

fn set_band(cfg: &mut TestConfig, lo: Option<f64>, hi: Option<f64>) -> Result<(), String> {
    match (lo, hi) {
        (Some(lo), Some(hi)) => {
            cfg.band = Some((lo, hi));
            Ok(())
        }
        (None, None) => Ok(()),
        (Some(lo), None) => match cfg.band {
            Some((_, hi)) => {
                cfg.band = Some((lo, hi));
                Ok(())
            }
            None => Err("band_lo given without band_hi".into()),
        },
        (None, Some(hi)) => match cfg.band {
            Some((lo, _)) => {
                cfg.band = Some((lo, hi));
                Ok(())
            }
            None => Err("band_hi given without band_lo".into()),
        },
    }
}
