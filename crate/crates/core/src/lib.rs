//! Time-slotted simulator and schedulers for hybrid mobile edge and quantum
//! computing offloading.
//!
//! * [`model`]: per-slot time, energy and quantum success models;
//! * [`lyapunov`]: virtual queues and the exact drift-plus-penalty solver;
//! * [`environment`]: seeded mobility, channels and task arrivals;
//! * [`policy`]: baselines, the Lyapunov policy and the DQN mode selector;
//! * [`harness`]: configuration, runs, sweeps and output files.

pub mod environment;
pub mod error;
pub mod harness;
pub mod lyapunov;
pub mod model;
pub mod policy;
pub mod units;

pub use error::{ConfigError, IoError, ModelError};
pub use harness::{ExperimentConfig, RunSummary, SlotRecord};
pub use lyapunov::{DppConfig, SlotInput, SlotSolution, VirtualQueueState};
pub use model::{
    ChannelState, CostBreakdown, Decision, DeviceProfile, Mode, QecParams, QuantumHardwareParams,
    TaskSpec,
};
pub use policy::{Policy, PolicyContext, PolicyKind};
