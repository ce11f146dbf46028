//! Simulated time. The engine counts integer picoseconds so that event
//! ordering and busy-time sums are exact; configuration speaks nanoseconds.

/// Picoseconds since the start of a run.
pub type Ps = u64;

pub const PS_PER_NS: u64 = 1000;

/// Rounds a nanosecond quantity to the nearest picosecond.
pub fn ns_to_ps(ns: f64) -> Ps {
    debug_assert!(ns >= 0.0 && ns.is_finite());
    (ns * PS_PER_NS as f64).round() as Ps
}

pub fn ps_to_ns(ps: Ps) -> f64 {
    ps as f64 / PS_PER_NS as f64
}

/// Time to move `bytes` at `bytes_per_ns`, rounded up to whole picoseconds.
pub fn transfer_ps(bytes: u64, bytes_per_ns: f64) -> Ps {
    (bytes as f64 * PS_PER_NS as f64 / bytes_per_ns).ceil() as Ps
}
