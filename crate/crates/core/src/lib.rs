//! Statistical and circuit models of parallel-wire, cascade-switching
//! single-photon detectors.
//!
//! - [`trigger`]: exact trigger probabilities and closed forms.
//! - [`mc`]: seeded, thread-count-independent Monte Carlo simulation.
//! - [`fitter`]: efficiency and dark-probability fits to count curves.
//! - [`scanmap`]: spot-scan response maps over a pixel layout.
//! - [`cascade`]: RL-network current redistribution and cascade latency.
//! - [`cli`]: the `cascadesim` command line.
//!
//! ```
//! use cascadesim::trigger::{trigger_probability, DetectorModel};
//!
//! let model = DetectorModel::new(2, 2, 1.59e-4, 0.0, 1e6)?;
//! let rate = trigger_probability(&model, 2, 8000)?.rate;
//! assert!((rate - 2.2e5).abs() < 5e3);
//! # Ok::<(), cascadesim::error::ModelError>(())
//! ```

pub mod cascade;
pub mod cli;
pub mod error;
pub mod fitter;
pub mod mc;
pub mod numeric;
pub mod optimize;
pub mod scanmap;
pub mod trigger;

pub use error::ModelError;

/// The guide's chapters, compiled so their examples stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/trigger-model.md")]
    mod trigger_model {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/scan-maps.md")]
    mod scan_maps {}
    #[doc = include_str!("../../../book/src/cascade-circuit.md")]
    mod cascade_circuit {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
