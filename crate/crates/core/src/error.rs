use crate::model::Tier;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{tier} tier is unstable: offered load {load_mbps} Mb/s, service rate {rate_mbps} Mb/s")]
    Unstable { tier: Tier, load_mbps: f64, rate_mbps: f64 },

    #[error("service-time moments are undefined for a tier with no arrivals")]
    UndefinedMoments,

    #[error("instance too large for the brute-force oracle: {0}")]
    TooLarge(String),

    #[error("no feasible point found after {starts} starts")]
    Infeasible { starts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("config write error: {0}")]
    TomlSer(#[from] toml::ser::Error),
}
