use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid polyline: {0}")]
    InvalidPolyline(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("measurements out of order: {from} s -> {to} s")]
    Ordering { from: f64, to: f64 },
    #[error("unknown source id `{0}`")]
    UnknownSource(String),
    #[error("invalid measurement: {0}")]
    Data(String),
    #[error("distance {distance} m outside (0, {max_range}] m")]
    OutOfRange { distance: f64, max_range: f64 },
    #[error("rank-deficient cubic fit: {distinct} distinct distances, need at least 4")]
    RankDeficient { distinct: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
}
