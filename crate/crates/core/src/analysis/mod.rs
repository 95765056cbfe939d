//! Variant function, matching extraction, containment monitoring and the
//! simulation loop that produces the traces they inspect.

pub mod containment;
pub mod matching;
pub mod potential;
pub mod simulation;

pub use containment::{containment_monitor, ContainmentVerdict, ContainmentViolation, ViolationCause};
pub use matching::{extract_matching, is_maximal_matching, marriage_subset, Edge};
pub use potential::{potential, Potential};
pub use simulation::{run_instance, run_simulation, RunOptions, RunSummary};
