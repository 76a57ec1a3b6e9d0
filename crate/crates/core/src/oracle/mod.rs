//! Executable ideal voting functionality, a valid-trace generator and a
//! differential runner comparing the real stack against the ideal model.

mod differential;
mod ideal;
mod trace;

pub use differential::{differential_run, Observation, RealStack, Verdict};
pub use ideal::{IdealElection, IdealEvent, IdealInput, IdealState};
pub use trace::{read_trace, trace_gen, write_trace, TraceBounds, TraceCommand, Verb};
