//! Loading raw timestamped price data and turning it into uniformly
//! indexed series.

use crate::error::{Error, Result};
use crate::window::SampleClock;
use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Ordered (timestamp, price) rows as read from disk, before indexing.
#[derive(Debug, Clone)]
pub struct RawTickTable {
    pub rows: Vec<(DateTime<Utc>, f64)>,
}

/// A uniformly indexed price level series.
#[derive(Debug, Clone)]
pub struct TickSeries {
    pub values: Vec<f64>,
    pub start: DateTime<Utc>,
    /// Sampling interval in seconds (60 by default).
    pub step_seconds: f64,
    /// Original timestamp of each sample, kept when gaps were compacted.
    pub origin_map: Option<Vec<DateTime<Utc>>>,
    pub label: String,
    pub clock: SampleClock,
}

impl TickSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Original timestamp of sample `i`.
    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        match &self.origin_map {
            Some(map) => map[i],
            None => self.start + chrono::Duration::seconds((self.step_seconds * i as f64) as i64),
        }
    }

    /// Plain in-memory constructor for synthetic or test data.
    pub fn from_values(values: Vec<f64>, label: impl Into<String>) -> Self {
        TickSeries {
            values,
            start: Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap(),
            step_seconds: 60.0,
            origin_map: None,
            label: label.into(),
            clock: SampleClock::Continuous,
        }
    }
}

/// How to resolve calendar gaps when building the contiguous index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapPolicy {
    /// Renumber present minutes contiguously, keeping the original
    /// timestamps in `origin_map`. Default.
    Compact,
    /// Insert every missing calendar minute carrying the last observed
    /// price.
    ForwardFill,
    /// Any missing minute is an error.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeFormat {
    Iso8601,
    EpochSeconds,
    EpochMillis,
}

/// Column spec for CSV input. The header row is required.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub time_col: String,
    pub price_col: String,
    pub time_format: TimeFormat,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            time_col: "time".into(),
            price_col: "price".into(),
            time_format: TimeFormat::Iso8601,
        }
    }
}

fn parse_timestamp(raw: &str, format: TimeFormat, row: usize) -> Result<DateTime<Utc>> {
    let err = |msg: String| Error::Parse { row, msg };
    match format {
        TimeFormat::Iso8601 => {
            if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
                return Ok(ts.with_timezone(&Utc));
            }
            for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
                if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
                    return Ok(Utc.from_utc_datetime(&naive));
                }
            }
            Err(err(format!("unparseable ISO-8601 timestamp {raw:?}")))
        }
        TimeFormat::EpochSeconds => {
            let secs: i64 = raw
                .trim()
                .parse()
                .map_err(|_| err(format!("unparseable epoch seconds {raw:?}")))?;
            Utc.timestamp_opt(secs, 0)
                .single()
                .ok_or_else(|| err(format!("epoch seconds {raw} out of range")))
        }
        TimeFormat::EpochMillis => {
            let ms: i64 = raw
                .trim()
                .parse()
                .map_err(|_| err(format!("unparseable epoch milliseconds {raw:?}")))?;
            Utc.timestamp_millis_opt(ms)
                .single()
                .ok_or_else(|| err(format!("epoch milliseconds {ms} out of range")))
        }
    }
}

/// Load a CSV file into a `RawTickTable`.
///
/// Rows are sorted ascending by timestamp; duplicate timestamps and
/// non-positive prices are hard errors. Row numbers in errors are
/// 1-based data rows (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawTickTable> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            msg: e.to_string(),
        })?
        .clone();
    let time_idx = headers
        .iter()
        .position(|h| h == schema.time_col)
        .ok_or_else(|| Error::Parse {
            row: 0,
            msg: format!("missing column {:?}", schema.time_col),
        })?;
    let price_idx = headers
        .iter()
        .position(|h| h == schema.price_col)
        .ok_or_else(|| Error::Parse {
            row: 0,
            msg: format!("missing column {:?}", schema.price_col),
        })?;

    let mut rows: Vec<(DateTime<Utc>, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        let raw_time = record.get(time_idx).ok_or_else(|| Error::Parse {
            row,
            msg: "missing time field".into(),
        })?;
        let raw_price = record.get(price_idx).ok_or_else(|| Error::Parse {
            row,
            msg: "missing price field".into(),
        })?;
        let ts = parse_timestamp(raw_time, schema.time_format, row)?;
        let price: f64 = raw_price.trim().parse().map_err(|_| Error::Parse {
            row,
            msg: format!("unparseable price {raw_price:?}"),
        })?;
        if !price.is_finite() || price <= 0.0 {
            return Err(Error::NonPositivePrice { row, price });
        }
        rows.push((ts, price));
    }

    rows.sort_by_key(|(ts, _)| *ts);
    for (i, pair) in rows.windows(2).enumerate() {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DuplicateTimestamp {
                row: i + 2,
                ts: pair[1].0.to_rfc3339(),
            });
        }
    }
    Ok(RawTickTable { rows })
}

/// Build a contiguous `TickSeries` from a raw table under a gap policy.
pub fn to_tick_series(table: &RawTickTable, policy: GapPolicy, label: &str) -> Result<TickSeries> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let step = chrono::Duration::seconds(60);
    let start = table.rows[0].0;
    match policy {
        GapPolicy::Compact => {
            let values: Vec<f64> = table.rows.iter().map(|(_, p)| *p).collect();
            let origin: Vec<DateTime<Utc>> = table.rows.iter().map(|(ts, _)| *ts).collect();
            let gap_fraction = {
                let span = table.rows[table.rows.len() - 1].0 - start;
                let calendar_minutes = span.num_minutes().max(0) as f64 + 1.0;
                1.0 - values.len() as f64 / calendar_minutes
            };
            // Regular calendar gaps (exchange hours) imply trading-minute
            // window conversion; a near-complete minute grid stays 24/7.
            let clock = if gap_fraction > 0.10 {
                SampleClock::Trading
            } else {
                SampleClock::Continuous
            };
            Ok(TickSeries {
                values,
                start,
                step_seconds: 60.0,
                origin_map: Some(origin),
                label: label.to_string(),
                clock,
            })
        }
        GapPolicy::ForwardFill => {
            let mut values = Vec::new();
            let mut cursor = start;
            let mut last = table.rows[0].1;
            let mut iter = table.rows.iter().peekable();
            let end = table.rows[table.rows.len() - 1].0;
            while cursor <= end {
                if let Some((ts, p)) = iter.peek() {
                    if *ts == cursor {
                        last = *p;
                        iter.next();
                    }
                }
                values.push(last);
                cursor += step;
            }
            Ok(TickSeries {
                values,
                start,
                step_seconds: 60.0,
                origin_map: None,
                label: label.to_string(),
                clock: SampleClock::Continuous,
            })
        }
        GapPolicy::Error => {
            let mut expected = start;
            for (ts, _) in &table.rows {
                if *ts != expected {
                    return Err(Error::Gap(expected.to_rfc3339()));
                }
                expected += step;
            }
            let values: Vec<f64> = table.rows.iter().map(|(_, p)| *p).collect();
            Ok(TickSeries {
                values,
                start,
                step_seconds: 60.0,
                origin_map: None,
                label: label.to_string(),
                clock: SampleClock::Continuous,
            })
        }
    }
}

/// Keep exactly the samples whose original timestamps lie in
/// `[start, end]`, renumbered from the first kept sample.
pub fn slice_by_dates(
    series: &TickSeries,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Result<TickSeries> {
    if start >= end {
        return Err(Error::InvalidParam(format!(
            "slice start {start} not before end {end}"
        )));
    }
    let n = series.len();
    let mut lo = n;
    let mut hi = 0usize;
    for i in 0..n {
        let ts = series.timestamp(i);
        if ts >= start && ts <= end {
            if lo == n {
                lo = i;
            }
            hi = i + 1;
        }
    }
    if lo >= hi {
        return Err(Error::EmptySlice);
    }
    Ok(TickSeries {
        values: series.values[lo..hi].to_vec(),
        start: series.timestamp(lo),
        step_seconds: series.step_seconds,
        origin_map: series
            .origin_map
            .as_ref()
            .map(|m| m[lo..hi].to_vec()),
        label: series.label.clone(),
        clock: series.clock,
    })
}
