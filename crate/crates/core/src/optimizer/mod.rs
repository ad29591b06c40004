//! Free-boundary descent and the regularity diagnostics measured on its output.

pub mod descent;
pub mod diagnostics;
pub mod levelset;
pub mod minimality;

pub use descent::{evaluate, optimize, optimize_with_state, Mode, OptRecord, OptTrace, OptimizeConfig, Snapshot};
pub use diagnostics::{diagnostics, DiagnosticsOptions, DiagnosticsReport, ScaleRow};
pub use minimality::{minimality_probe, Direction};
