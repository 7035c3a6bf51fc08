//! wkstat: stationarity testing for uniformly sampled series via the
//! Wiener-Khinchin identity.

mod config;
mod manifest;
mod report;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Parser, Subcommand};
use config::ConfigFlags;
use manifest::RunManifest;
use std::path::{Path, PathBuf};
use std::time::Instant;
use wkstat::ingest::{load_csv, slice_by_dates, to_tick_series, CsvSchema, GapPolicy, TimeFormat};
use wkstat::synth::{generate, GeneratorKind, GeneratorSpec};
use wkstat::window::WindowSpec;
use wkstat::wktest::{scan_windows, test_stationarity, TestConfig, Verdict};
use wkstat::TickSeries;

#[derive(Parser)]
#[command(name = "wkstat", version, about = "Wiener-Khinchin stationarity testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Include wall-clock timestamps in manifests
    #[arg(long, global = true)]
    timestamps: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum GapPolicyArg {
    /// Drop gaps and concatenate observed samples
    Compact,
    /// Fill every missing minute with the last observed price
    ForwardFill,
    /// Refuse series with missing minutes
    Error,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum TimeFormatArg {
    Iso8601,
    EpochSeconds,
    EpochMillis,
}

#[derive(Debug, clap::Args)]
struct InputFlags {
    /// Input CSV with a time column and a price column
    #[arg(long)]
    input: PathBuf,
    /// Label for outputs; defaults to the input file stem
    #[arg(long)]
    label: Option<String>,
    #[arg(long, value_enum, default_value = "compact")]
    gap_policy: GapPolicyArg,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "price")]
    price_col: String,
    #[arg(long, value_enum, default_value = "iso8601")]
    time_format: TimeFormatArg,
    /// Keep only samples at or after this date (YYYY-MM-DD or RFC 3339)
    #[arg(long)]
    start_date: Option<String>,
    /// Keep only samples at or before this date (inclusive)
    #[arg(long)]
    end_date: Option<String>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SynthKind {
    GaussianIid,
    Ar1,
    RandomWalk,
    Fbm,
    Qgaussian,
    VarianceSwitch,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a raw tick CSV onto the uniform minute grid
    Ingest {
        #[command(flatten)]
        input: InputFlags,
        /// Output CSV path (time,price)
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a seeded synthetic series in the standard CSV format
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stream index for reproducible parallel batches
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// AR(1) coefficient
        #[arg(long, default_value_t = 0.6)]
        phi: f64,
        /// Hurst exponent for fbm
        #[arg(long, default_value_t = 0.5)]
        hurst: f64,
        /// q-Gaussian shape, 1 < q < 3
        #[arg(long, default_value_t = 1.5)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Switch point for variance_switch; defaults to n/2
        #[arg(long)]
        switch_at: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        sigma1: f64,
        #[arg(long, default_value_t = 3.0)]
        sigma2: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the detrended level series (moving-average trend removed)
    Detrend {
        #[command(flatten)]
        input: InputFlags,
        #[command(flatten)]
        cfg: ConfigFlags,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the normalized return series (standard score)
    Normalize {
        #[command(flatten)]
        input: InputFlags,
        #[command(flatten)]
        cfg: ConfigFlags,
        /// Normalization window, e.g. 60min, 10min, 512
        #[arg(long)]
        delta2: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the stationarity test and emit verdict + spectra artifacts
    Test {
        #[command(flatten)]
        input: InputFlags,
        #[command(flatten)]
        cfg: ConfigFlags,
        /// Normalization window, e.g. 60min, 10min, 512
        #[arg(long)]
        delta2: Option<String>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the test across a list of normalization windows
    Scan {
        #[command(flatten)]
        input: InputFlags,
        #[command(flatten)]
        cfg: ConfigFlags,
        /// Comma-separated windows, largest first, e.g. 60min,40min,20min,10min
        #[arg(long, value_delimiter = ',', required = true)]
        delta2: Vec<String>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Render paired-spectrum SVG plots from previously emitted CSVs
    Report {
        /// Directory holding *_spectra.csv and verdict JSONL files
        #[arg(long)]
        from: PathBuf,
        /// Where to write SVGs; defaults to the source directory
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl From<wkstat::Error> for CliError {
    fn from(e: wkstat::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version output are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}

fn parse_date(s: &str, end_of_day: bool) -> Result<DateTime<Utc>, CliError> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    let date: NaiveDate = s
        .parse()
        .map_err(|_| usage(format!("bad date '{s}' (YYYY-MM-DD or RFC 3339)")))?;
    let time = if end_of_day {
        date.and_hms_opt(23, 59, 59).unwrap()
    } else {
        date.and_hms_opt(0, 0, 0).unwrap()
    };
    Ok(DateTime::from_naive_utc_and_offset(time, Utc))
}

fn load_series(flags: &InputFlags) -> Result<TickSeries, CliError> {
    let schema = CsvSchema {
        time_col: flags.time_col.clone(),
        price_col: flags.price_col.clone(),
        time_format: match flags.time_format {
            TimeFormatArg::Iso8601 => TimeFormat::Iso8601,
            TimeFormatArg::EpochSeconds => TimeFormat::EpochSeconds,
            TimeFormatArg::EpochMillis => TimeFormat::EpochMillis,
        },
    };
    let label = flags
        .label
        .clone()
        .or_else(|| {
            flags
                .input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "series".to_string());
    let table = load_csv(&flags.input, &schema)?;
    let policy = match flags.gap_policy {
        GapPolicyArg::Compact => GapPolicy::Compact,
        GapPolicyArg::ForwardFill => GapPolicy::ForwardFill,
        GapPolicyArg::Error => GapPolicy::Error,
    };
    let mut series = to_tick_series(&table, policy, &label)?;
    if flags.start_date.is_some() || flags.end_date.is_some() {
        let start = match &flags.start_date {
            Some(s) => parse_date(s, false)?,
            None => series.timestamp(0),
        };
        let end = match &flags.end_date {
            Some(s) => parse_date(s, true)?,
            None => series.timestamp(series.len() - 1),
        };
        series = slice_by_dates(&series, start, end)?;
    }
    Ok(series)
}

/// Shortest round-trip float formatting keeps reruns byte-identical.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn write_value_csv(
    path: &Path,
    series: &TickSeries,
    index_offset: usize,
    values: &[f64],
    value_col: &str,
) -> Result<(), CliError> {
    let mut out = String::with_capacity(values.len() * 32);
    out.push_str(&format!("time,{value_col}\n"));
    for (i, v) in values.iter().enumerate() {
        let t = series.timestamp(i + index_offset);
        out.push_str(&format!(
            "{},{}\n",
            t.format("%Y-%m-%dT%H:%M:%SZ"),
            fmt_f64(*v)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn config_echo(cfg: &TestConfig) -> serde_json::Value {
    serde_json::json!({
        "delta1": cfg.delta1.to_string(),
        "delta2": cfg.delta2.to_string(),
        "ensemble_len": cfg.ensemble_len,
        "smooth_hz": cfg.smooth_hz,
        "smooth_order": cfg.smooth_order,
        "band": cfg.band,
        "metric": cfg.metric.as_str(),
        "threshold": cfg.threshold,
    })
}

fn write_spectra_csv(path: &Path, verdict: &Verdict) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("frequency_hz,value,kind,smoothed\n");
    for spec in [&verdict.comparison.psd_smoothed, &verdict.comparison.ftac_smoothed] {
        for (f, v) in spec.frequencies.iter().zip(&spec.values) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(*f),
                fmt_f64(*v),
                spec.kind.as_str(),
                spec.smoothed
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn append_verdict_jsonl(lines: &mut String, verdict: &Verdict) {
    let record = verdict.record();
    lines.push_str(&serde_json::to_string(&record).expect("verdict serializes"));
    lines.push('\n');
}

fn run(cli: Cli) -> Result<(), CliError> {
    let argv: Vec<String> = std::env::args().collect();
    let t0 = Instant::now();
    match cli.command {
        Command::Ingest { input, output } => {
            let series = load_series(&input)?;
            write_value_csv(&output, &series, 0, &series.values, "price")?;
            eprintln!(
                "ingested {} samples ({} clock) -> {}",
                series.len(),
                series.clock.name(),
                output.display()
            );
            Ok(())
        }
        Command::Synth {
            kind,
            n,
            seed,
            stream,
            sigma,
            phi,
            hurst,
            q,
            scale,
            switch_at,
            sigma1,
            sigma2,
            output,
        } => {
            let kind = match kind {
                SynthKind::GaussianIid => GeneratorKind::GaussianIid { sigma },
                SynthKind::Ar1 => GeneratorKind::Ar1 { phi, sigma },
                SynthKind::RandomWalk => GeneratorKind::RandomWalk { sigma },
                SynthKind::Fbm => GeneratorKind::Fbm { hurst },
                SynthKind::Qgaussian => GeneratorKind::QGaussian { q, scale },
                SynthKind::VarianceSwitch => GeneratorKind::VarianceSwitch {
                    switch_at: switch_at.unwrap_or(n / 2),
                    sigma1,
                    sigma2,
                },
            };
            let spec = GeneratorSpec { kind, n, seed, stream };
            let series = generate(&spec).map_err(|e| usage(e.to_string()))?;
            write_value_csv(&output, &series, 0, &series.values, "price")?;
            eprintln!("wrote {} samples -> {}", series.len(), output.display());
            Ok(())
        }
        Command::Detrend { input, cfg, output } => {
            let cfg = config::resolve(&cfg).map_err(usage)?;
            let series = load_series(&input)?;
            let w1 = cfg.delta1.to_samples(series.step_seconds, series.clock);
            let w1 = wkstat::window::WindowLen {
                samples: w1.samples.min(series.len()),
            };
            let trend = wkstat::moving_average(&series.values, w1)?;
            let detrended = wkstat::detrend(&series.values, &trend)?;
            write_value_csv(&output, &series, 0, &detrended.values, "value")?;
            eprintln!(
                "detrended with window {} samples -> {}",
                w1.samples,
                output.display()
            );
            Ok(())
        }
        Command::Normalize { input, cfg, delta2, output } => {
            let cfg = config::resolve_with_delta2(&cfg, delta2.as_deref()).map_err(usage)?;
            let series = load_series(&input)?;
            let base = wkstat::wktest::detrended_returns(&series, &cfg)?;
            let w2 = cfg.delta2.to_samples(base.step_seconds, base.clock);
            let w2 = wkstat::window::WindowLen {
                samples: w2.samples.clamp(2, base.values.len()),
            };
            let sigma = wkstat::rolling_std(&base.values, w2)?;
            let detrended = wkstat::DetrendedSeries {
                values: base.values.clone(),
                window_used: w2,
            };
            let scored = wkstat::standard_score(&detrended, &sigma)?;
            // Returns start at the second original sample.
            write_value_csv(&output, &series, 1, &scored.values, "value")?;
            eprintln!(
                "normalized with window {} samples -> {}",
                w2.samples,
                output.display()
            );
            Ok(())
        }
        Command::Test { input, cfg, delta2, out_dir } => {
            let cfg = config::resolve_with_delta2(&cfg, delta2.as_deref()).map_err(usage)?;
            let series = load_series(&input)?;
            std::fs::create_dir_all(&out_dir)?;
            let verdict = test_stationarity(&series, &cfg)?;

            let mut jsonl = String::new();
            append_verdict_jsonl(&mut jsonl, &verdict);
            let verdict_path = out_dir.join("verdict.jsonl");
            std::fs::write(&verdict_path, &jsonl)?;
            let spectra_path = out_dir.join(format!("{}_spectra.csv", sanitize(&verdict.label)));
            write_spectra_csv(&spectra_path, &verdict)?;

            let mut manifest = RunManifest::new(argv, config_echo(&cfg), &out_dir);
            manifest.add_input(&input.input)?;
            manifest.add_output(&verdict_path)?;
            manifest.add_output(&spectra_path)?;
            manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
            if cli.timestamps {
                manifest.finished_at = Some(Utc::now().to_rfc3339());
            }
            manifest.write(&out_dir)?;

            println!(
                "{}: distance {:.6e} threshold {:.6e} -> {}",
                verdict.label,
                verdict.distance,
                verdict.threshold,
                if verdict.stationary { "stationary" } else { "non-stationary" }
            );
            Ok(())
        }
        Command::Scan { input, cfg, delta2, out_dir } => {
            let cfg = config::resolve(&cfg).map_err(usage)?;
            let windows: Vec<WindowSpec> = delta2
                .iter()
                .map(|s| {
                    s.parse::<WindowSpec>()
                        .map_err(|e| usage(format!("bad delta2 '{s}': {e}")))
                })
                .collect::<Result<_, _>>()?;
            let series = load_series(&input)?;
            std::fs::create_dir_all(&out_dir)?;
            let verdicts = scan_windows(&series, &cfg, &windows)?;

            let mut jsonl = String::new();
            let mut manifest = RunManifest::new(argv, config_echo(&cfg), &out_dir);
            manifest.add_input(&input.input)?;
            for verdict in &verdicts {
                append_verdict_jsonl(&mut jsonl, verdict);
                let spectra_path = out_dir.join(format!(
                    "{}_{}_spectra.csv",
                    sanitize(&verdict.label),
                    sanitize(&verdict.config.delta2.to_string())
                ));
                write_spectra_csv(&spectra_path, verdict)?;
                manifest.add_output(&spectra_path)?;
                println!(
                    "{} delta2={}: distance {:.6e} -> {}",
                    verdict.label,
                    verdict.config.delta2,
                    verdict.distance,
                    if verdict.stationary { "stationary" } else { "non-stationary" }
                );
            }
            let verdict_path = out_dir.join("verdicts.jsonl");
            std::fs::write(&verdict_path, &jsonl)?;
            manifest.add_output(&verdict_path)?;
            manifest.wall_clock_secs = t0.elapsed().as_secs_f64();
            if cli.timestamps {
                manifest.finished_at = Some(Utc::now().to_rfc3339());
            }
            manifest.write(&out_dir)?;
            Ok(())
        }
        Command::Report { from, out_dir } => {
            let out_dir = out_dir.unwrap_or_else(|| from.clone());
            std::fs::create_dir_all(&out_dir)?;
            let annotations = load_annotations(&from)?;
            let mut rendered = 0usize;
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&from)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .map(|n| n.to_string_lossy().ends_with("_spectra.csv"))
                        .unwrap_or(false)
                })
                .collect();
            entries.sort();
            for path in entries {
                let stem = path
                    .file_name()
                    .unwrap()
                    .to_string_lossy()
                    .trim_end_matches("_spectra.csv")
                    .to_string();
                let curves = report::read_spectra_csv(&path).map_err(CliError::Data)?;
                let note = annotations.iter().find(|a| a.0 == stem).map(|a| &a.1);
                let svg = report::render_svg(&curves, note, &stem);
                let svg_path = out_dir.join(format!("{stem}.svg"));
                std::fs::write(&svg_path, svg)?;
                rendered += 1;
                eprintln!("rendered {}", svg_path.display());
            }
            if rendered == 0 {
                return Err(CliError::Data(format!(
                    "no *_spectra.csv files found in {}",
                    from.display()
                )));
            }
            Ok(())
        }
    }
}

/// Verdict annotations keyed by the spectra file stem they describe.
fn load_annotations(dir: &Path) -> Result<Vec<(String, report::Annotation)>, CliError> {
    let mut notes = Vec::new();
    for name in ["verdict.jsonl", "verdicts.jsonl"] {
        let path = dir.join(name);
        let Ok(text) = std::fs::read_to_string(&path) else {
            continue;
        };
        let many = name == "verdicts.jsonl";
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let record: wkstat::VerdictRecord = serde_json::from_str(line)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let stem = if many {
                format!("{}_{}", sanitize(&record.label), sanitize(&record.delta2))
            } else {
                sanitize(&record.label)
            };
            notes.push((
                stem,
                report::Annotation {
                    label: record.label,
                    distance: record.distance,
                    threshold: record.threshold,
                    stationary: record.stationary,
                },
            ));
        }
    }
    Ok(notes)
}
