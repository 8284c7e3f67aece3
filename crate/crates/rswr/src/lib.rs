//! Relative Schwarz waveform relaxation (RSWR) for the 1-D wave equation.
//!
//! The domain is split into overlapping subdomains. Each window, every
//! subdomain *predicts* forward speculatively with a provisional zero-flux
//! guess at its interfaces, *exchanges* the predicted overlap fields and
//! boundary fluxes with its neighbours, *selects* how many of the predicted
//! steps both sides of each overlap agree on, reduces those votes to one
//! conservative global span, and finally *updates*: recommits exactly that
//! many steps using the neighbour's flux. Finite wave speed bounds how fast
//! interface error can travel, so the agreed prefix is trustworthy and the
//! protocol never iterates within a window.
//!
//! Crate layout:
//!
//! * [`pde`] — grid, leapfrog scheme, boundary closures, window solver.
//! * [`decomposition`] — overlapping partition of the grid.
//! * [`engine`] — the window operations (predict, select, cap, reduce,
//!   update, plan growth, stitch).
//! * [`runtime`] — bulk-synchronous workers over single-threaded or
//!   thread-per-worker transports; [`runtime::run_rswr`] is the entry point.
//! * [`oracle`] — monolithic reference solve and error reports.
//! * [`config`] / [`csvio`] / [`experiment`] — run configuration, exact CSV
//!   I/O, and the end-to-end experiment that writes the output files.
//!
//! The `examples/` directory exercises each capability end to end; start
//! with `two_subdomain_pulse`.

pub mod config;
pub mod csvio;
pub mod decomposition;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod pde;
pub mod runtime;

pub use config::{apply_preset, load_config, Preset, RswrConfig, RunMode};
pub use error::{Result, RswrError};
pub use experiment::{run_experiment, ExperimentArtifacts};
pub use oracle::solve_monolithic;
pub use runtime::{run_rswr, RswrOutput, RunReport};
