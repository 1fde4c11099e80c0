//! Experiment drivers: exponent sweeps, the `g_λ` condition probe,
//! equidistribution checks and the full verification suite.

pub mod equidist;
pub mod fit;
pub mod probe;
pub mod sweep;
pub mod verify;

pub use equidist::{equidistribution_check, EquidistReport, EquidistRow};
pub use fit::{fit_power_law, FitReport, DEFAULT_DROP_BELOW};
pub use probe::{condition_probe_alpha, ProbeConfig, ProbeReport};
pub use sweep::{run_sweep, Grid, SweepConfig, SweepFunction, SweepMode, SweepReport, SweepRow};
pub use verify::{verify_all, verify_all_with, CheckResult, VerifyOptions, VerifySummary};
