//! Resource estimation and design-space exploration for a distributed
//! nanophotonic quantum multicomputer running surface-code error correction.
//!
//! The pipeline runs from physical yield and optical loss, through
//! entanglement purification costs and lattice refresh timing, to the
//! execution time of Shor's algorithm on the resulting logical machine.
//!
//! ```
//! use qmc_estimator::{full_report, ArchitectureConfig};
//!
//! let cfg = ArchitectureConfig::baseline()
//!     .with_overrides(&["p_lat=4.9e5", "capacity=119836"])
//!     .unwrap();
//! let report = full_report(&cfg).unwrap();
//! assert!((report.timing.t_lat_s - 49e-6).abs() < 1e-15);
//! ```

pub mod arch;
pub mod config;
pub mod error;
pub mod explore;
pub mod lattice;
pub mod magic;
pub mod purification;
pub mod report;
pub mod shor;

pub use config::ArchitectureConfig;
pub use error::{Error, Result};
pub use report::{full_report, ResourceReport};
