//! Simulation and estimation toolkit for series-parallel compensated
//! wireless power transfer links.
//!
//! The crate pairs three views of the same circuit:
//!
//! * [`phasor`] — closed-form sinusoidal steady state,
//! * [`dq`] — the rotating-frame first-order dynamic model,
//! * [`oracle`] — brute-force time-domain integration of the physical
//!   circuit, used as ground truth for both,
//!
//! plus the sampled-signal chain ([`transforms`]) and the transmitter-side
//! mutual-inductance identification pipeline ([`identify`]). The
//! [`scenario`] module drives the four experiment types behind the
//! `wpt-dq` CLI.
//!
//! Sweeps and grids run data-parallel via rayon when the default `parallel`
//! feature is enabled; disabling it falls back to sequential evaluation
//! with identical results.

pub mod dq;
pub mod error;
pub mod identify;
pub mod oracle;
pub mod params;
pub mod phasor;
pub mod scenario;
mod solver;
pub mod trace;
pub mod transforms;

pub use error::{Error, Result};
pub use params::{DriveSpec, OperatingPoint, SystemParams, Waveform};

/// Map a slice in order, in parallel when the `parallel` feature is on.
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential counterpart of [`map_ordered`], kept for benchmarking the
/// parallel speedup.
pub fn map_ordered_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
