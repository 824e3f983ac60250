//! Model-quality metrics (alignment-based fitness and precision, F-measure,
//! size/CFC/structuredness) and prediction-quality statistics (AUC, DeLong
//! confidence intervals, Wilcoxon signed-rank test).

mod alignment;
mod complexity;
mod stats;

pub use alignment::{
    align_trace, fitness, fitness_detailed, precision, precision_detailed, Alignment,
    AlignmentOptions, FitnessReport, Move, PrecisionReport,
};
pub use complexity::{complexity, Complexity};
pub use stats::{
    auc, delong_ci, wilcoxon_exact_p, wilcoxon_normal_p, wilcoxon_signed_rank, AucReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("alignment search exceeded the state budget ({0} states)")]
    SearchBudgetExceeded(usize),
    #[error("scores must contain at least one positive and one negative label")]
    DegenerateLabels,
    #[error("scores and labels differ in length: {0} vs {1}")]
    MismatchedLengths(usize, usize),
    #[error("fewer than {min} non-zero paired differences ({found})")]
    TooFewPairs { min: usize, found: usize },
}

/// The six model-quality numbers reported per net/log pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelQuality {
    pub fitness: f64,
    pub precision: f64,
    pub f_measure: f64,
    /// Nodes plus arcs.
    pub size: usize,
    pub cfc: usize,
    /// Count of splits without a matching join of the same type.
    pub structuredness: usize,
}

/// Harmonic mean of fitness and precision; 0 when both are 0.
pub fn f_measure(fitness: f64, precision: f64) -> f64 {
    if fitness + precision == 0.0 {
        0.0
    } else {
        2.0 * fitness * precision / (fitness + precision)
    }
}

/// Fitness, precision, F-measure, and complexity in one pass, with flags for
/// any per-trace fallback to token replay.
pub fn model_quality(
    net: &crate::petri::PetriNet,
    log: &crate::event_log::EventLog,
    opts: &AlignmentOptions,
) -> (ModelQuality, QualityFlags) {
    let fit = fitness_detailed(net, log, opts);
    let prec = precision_detailed(net, log, opts);
    let cx = complexity(net);
    (
        ModelQuality {
            fitness: fit.value,
            precision: prec.value,
            f_measure: f_measure(fit.value, prec.value),
            size: cx.size,
            cfc: cx.cfc,
            structuredness: cx.structuredness,
        },
        QualityFlags {
            fitness_fallback_traces: fit.fallback_traces,
            precision_skipped_traces: prec.skipped_traces,
        },
    )
}

/// Degraded-path markers surfaced in evaluation reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityFlags {
    /// Traces whose alignment blew the budget and fell back to token replay.
    pub fitness_fallback_traces: usize,
    /// Traces precision had to skip for the same reason.
    pub precision_skipped_traces: usize,
}
