use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("duplicate timestamp at row {row}: {ts}")]
    DuplicateTimestamp { row: usize, ts: String },
    #[error("non-positive price {price} at row {row}")]
    NonPositivePrice { row: usize, price: f64 },
    #[error("timestamps not strictly increasing at row {row}")]
    OutOfOrder { row: usize },
    #[error("empty tick table")]
    EmptyTable,
    #[error("gap in minute grid: first missing minute is {0}")]
    Gap(String),
    #[error("date slice selects no samples")]
    EmptySlice,
    #[error("window length {w} out of range for series of length {n}")]
    WindowOutOfRange { w: usize, n: usize },
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero-variance input")]
    ZeroVariance,
    #[error("lag count {s_max} must be below series length {n}")]
    LagOutOfRange { s_max: usize, n: usize },
    #[error("segment length {l_s} invalid for series of length {n}")]
    SegmentOutOfRange { l_s: usize, n: usize },
    #[error("savitzky-golay window must be odd and >= 3, got {0}")]
    BadSgWindow(usize),
    #[error("savitzky-golay order {order} must be below window {window}")]
    BadSgOrder { order: usize, window: usize },
    #[error("frequency grids do not match")]
    GridMismatch,
    #[error("only {got} usable bins in band, need at least {min}")]
    BandTooNarrow { got: usize, min: usize },
    #[error("spectrum is already smoothed")]
    AlreadySmoothed,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("cannot parse window spec {0:?}")]
    BadWindowSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
