//! Unit conventions.
//!
//! Sizes are carried in megabytes, service rates in megabits per second,
//! arrival rates in requests per second, latency internally in seconds and
//! reported in milliseconds. Prefixes are decimal (1 GB = 1000 MB,
//! 1 Gb/s = 1000 Mb/s).

pub const MEGABITS_PER_MB: f64 = 8.0;
pub const MB_PER_GB: f64 = 1000.0;
pub const MBPS_PER_GBPS: f64 = 1000.0;
pub const BYTES_PER_MB: f64 = 1.0e6;
pub const MS_PER_S: f64 = 1000.0;

#[inline]
pub fn mb_to_megabits(mb: f64) -> f64 {
    mb * MEGABITS_PER_MB
}

#[inline]
pub fn gb_to_mb(gb: f64) -> f64 {
    gb * MB_PER_GB
}

#[inline]
pub fn mb_to_gb(mb: f64) -> f64 {
    mb / MB_PER_GB
}

#[inline]
pub fn gbps_to_mbps(gbps: f64) -> f64 {
    gbps * MBPS_PER_GBPS
}

#[inline]
pub fn mbps_to_gbps(mbps: f64) -> f64 {
    mbps / MBPS_PER_GBPS
}

#[inline]
pub fn mb_to_bytes(mb: f64) -> f64 {
    mb * BYTES_PER_MB
}

#[inline]
pub fn ms_to_s(ms: f64) -> f64 {
    ms / MS_PER_S
}

#[inline]
pub fn s_to_ms(s: f64) -> f64 {
    s * MS_PER_S
}

/// Storage prices are quoted per GB; the model works per MB.
#[inline]
pub fn cents_per_gb_to_per_mb(cents: f64) -> f64 {
    cents / MB_PER_GB
}

#[inline]
pub fn cents_per_mb_to_per_gb(cents: f64) -> f64 {
    cents * MB_PER_GB
}
