//! Simulator, analysis toolkit and bounded model checker for a
//! strictly-stabilizing maximal matching protocol under Byzantine faults.
//!
//! Nodes run three guarded rules over a preference pointer and a memory of
//! their last abandoned proposal. Byzantine nodes rewrite their own state
//! arbitrarily; honest nodes at distance more than two from every Byzantine
//! node are guaranteed to stabilize and then never change their output.

pub mod adversary;
pub mod analysis;
pub mod modelcheck;
pub mod protocol;
pub mod scenario;
pub mod schedulers;
pub mod topology;
pub mod trace;

pub use adversary::{Adversary, AdversaryStrategy};
pub use analysis::{Potential, RunSummary};
pub use protocol::{Configuration, NodeState, Predicate, Protocol, Rule};
pub use scenario::{Instance, Scenario};
pub use schedulers::{DaemonPolicy, DaemonSpec};
pub use topology::{NodeId, NodeSet, Port, Topology};
pub use trace::{Trace, TraceEvent};
