//! Process-mining toolkit: event-log ingestion and pre-processing, Petri-net
//! discovery and replay, decay-function feature extraction, and model/prediction
//! quality metrics.
//!
//! The pipeline mirrors a healthcare-style outcome-prediction workflow:
//!
//! ```text
//! CSV > EventLog > concat (merge concurrent pairs, drop self-loops)
//!     > discovery (DFG > gateways > Petri net)
//!     > decay replay (timed state samples)
//!     > predictor (branched MLP) + metrics (F-measure, AUC/DeLong, Wilcoxon)
//! ```

pub mod concat;
pub mod discovery;
pub mod dream;
pub mod event_log;
pub mod metrics;
pub mod petri;
pub mod predictor;
pub mod relations;
pub mod testkit;

pub use concat::{ConcatError, ConcatPlan};
pub use discovery::{DiscoveryConfig, DiscoveryError, GatewayGraph};
pub use dream::{DecayState, DreamError, TimedStateSample};
pub use event_log::{EventInstance, EventLog, EventLogError, Trace};
pub use metrics::{AucReport, MetricsError, ModelQuality};
pub use petri::{Marking, PetriNet, PetriNetBuilder, PetriError, ReplayResult};
pub use predictor::{MlpConfig, MlpModel, PredictorError};
pub use relations::{ConcurrentPair, DirectlyFollowsGraph, RelationsError};

/// Reserved label emitted as the prediction target after a trace's final event.
pub const END_LABEL: &str = "\u{27E8}END\u{27E9}";

/// Shipped default thresholds: concatenation probability cut-off, discovery
/// concurrency threshold, and discovery frequency-filter threshold.
pub mod defaults {
    /// Concatenation threshold p*.
    pub const P_STAR: f64 = 0.7;
    /// Discovery concurrency threshold.
    pub const ETA: f64 = 0.4;
    /// Discovery frequency-filter threshold.
    pub const EPSILON: f64 = 0.1;
}
