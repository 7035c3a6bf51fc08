//! Window lengths in samples or wall-clock units.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// How calendar durations map onto sample counts for a series.
///
/// 24/7 series (e.g. crypto) convert a week to 7*1440 minutes; compacted
/// exchange series count trading minutes only (390-minute days, 5-day
/// weeks, 21-day months, 252-day years).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleClock {
    Continuous,
    Trading,
}

impl SampleClock {
    pub fn name(&self) -> &'static str {
        match self {
            SampleClock::Continuous => "continuous",
            SampleClock::Trading => "trading",
        }
    }

    fn minutes(&self, unit: WallUnit) -> f64 {
        match self {
            SampleClock::Continuous => match unit {
                WallUnit::Minute => 1.0,
                WallUnit::Hour => 60.0,
                WallUnit::Day => 1440.0,
                WallUnit::Week => 7.0 * 1440.0,
                WallUnit::Month => 365.0 * 1440.0 / 12.0,
                WallUnit::Year => 365.0 * 1440.0,
            },
            SampleClock::Trading => match unit {
                WallUnit::Minute => 1.0,
                WallUnit::Hour => 60.0,
                WallUnit::Day => 390.0,
                WallUnit::Week => 5.0 * 390.0,
                WallUnit::Month => 21.0 * 390.0,
                WallUnit::Year => 252.0 * 390.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WallUnit {
    Minute,
    Hour,
    Day,
    Week,
    Month,
    Year,
}

/// A window length, either directly in samples or as a wall-clock
/// duration to be resolved against a series' step and clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowSpec {
    Samples(usize),
    Wall { amount: f64, unit: WallUnit },
}

/// A resolved window length in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowLen {
    pub samples: usize,
}

impl WindowSpec {
    pub fn minutes(amount: f64) -> Self {
        WindowSpec::Wall {
            amount,
            unit: WallUnit::Minute,
        }
    }

    /// Resolve to a sample count for a series with the given step (seconds)
    /// and clock. Clamped below at 1 sample.
    pub fn to_samples(&self, step_seconds: f64, clock: SampleClock) -> WindowLen {
        match *self {
            WindowSpec::Samples(n) => WindowLen { samples: n.max(1) },
            WindowSpec::Wall { amount, unit } => {
                let minutes = amount * clock.minutes(unit);
                let samples = (minutes * 60.0 / step_seconds).round() as usize;
                WindowLen {
                    samples: samples.max(1),
                }
            }
        }
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowSpec::Samples(n) => write!(f, "{n}"),
            WindowSpec::Wall { amount, unit } => {
                let u = match unit {
                    WallUnit::Minute => "min",
                    WallUnit::Hour => "hour",
                    WallUnit::Day => "day",
                    WallUnit::Week => "week",
                    WallUnit::Month => "month",
                    WallUnit::Year => "year",
                };
                if amount.fract() == 0.0 {
                    write!(f, "{}{}", *amount as i64, u)
                } else {
                    write!(f, "{amount}{u}")
                }
            }
        }
    }
}

impl FromStr for WindowSpec {
    type Err = Error;

    /// Accepts bare sample counts ("4096") or durations ("60min",
    /// "1week", "12months", "1year").
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(n) = s.parse::<usize>() {
            return Ok(WindowSpec::Samples(n));
        }
        let split = s
            .find(|c: char| c.is_alphabetic())
            .ok_or_else(|| Error::BadWindowSpec(s.to_string()))?;
        let (num, unit) = s.split_at(split);
        let amount: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::BadWindowSpec(s.to_string()))?;
        if amount <= 0.0 {
            return Err(Error::BadWindowSpec(s.to_string()));
        }
        let unit = match unit.trim().trim_end_matches('s') {
            "min" | "minute" | "m" => WallUnit::Minute,
            "hour" | "h" | "hr" => WallUnit::Hour,
            "day" | "d" => WallUnit::Day,
            "week" | "w" | "wk" => WallUnit::Week,
            "month" | "mo" => WallUnit::Month,
            "year" | "y" | "yr" => WallUnit::Year,
            _ => return Err(Error::BadWindowSpec(s.to_string())),
        };
        Ok(WindowSpec::Wall { amount, unit })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_samples_and_durations() {
        assert_eq!("4096".parse::<WindowSpec>().unwrap(), WindowSpec::Samples(4096));
        let w: WindowSpec = "60min".parse().unwrap();
        assert_eq!(w.to_samples(60.0, SampleClock::Continuous).samples, 60);
        let w: WindowSpec = "1week".parse().unwrap();
        assert_eq!(w.to_samples(60.0, SampleClock::Continuous).samples, 7 * 1440);
        assert_eq!(w.to_samples(60.0, SampleClock::Trading).samples, 5 * 390);
        let w: WindowSpec = "12months".parse().unwrap();
        assert_eq!(w.to_samples(60.0, SampleClock::Continuous).samples, 365 * 1440);
    }

    #[test]
    fn one_year_equals_twelve_months() {
        let y: WindowSpec = "1year".parse().unwrap();
        let m: WindowSpec = "12months".parse().unwrap();
        for clock in [SampleClock::Continuous, SampleClock::Trading] {
            assert_eq!(y.to_samples(60.0, clock), m.to_samples(60.0, clock));
        }
    }

    #[test]
    fn rejects_junk() {
        assert!("".parse::<WindowSpec>().is_err());
        assert!("60fort".parse::<WindowSpec>().is_err());
        assert!("-5min".parse::<WindowSpec>().is_err());
    }
}
