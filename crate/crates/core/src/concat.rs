//! Concatenation pre-processing: merge strongly concurrent label pairs into
//! composite events and collapse immediate label repetitions.
//!
//! A pair (a, b) is merged when both directed follow probabilities exceed the
//! threshold p*. Pairs are applied in descending score order; a label joins at
//! most one merged pair. Adjacent occurrences of a merged pair become one
//! composite event `a+b` (lexicographically smaller label first) carrying the
//! earlier timestamp; leftover lone occurrences are renamed to the composite;
//! finally immediate repetitions of any label collapse to their first event.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use thiserror::Error;

use crate::event_log::{EventInstance, EventLog, Trace};
use crate::relations::{ConcurrentPair, DirectlyFollowsGraph};

#[derive(Debug, Error)]
pub enum ConcatError {
    #[error("plan references labels absent from the log: {0:?}")]
    PlanLogMismatch(Vec<String>),
}

/// Which pairs to merge and how merged labels are renamed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatPlan {
    /// Threshold the pairs were selected with.
    pub threshold: f64,
    /// All valid pairs (both directed probabilities above the threshold),
    /// sorted by score descending, ties broken lexicographically.
    pub ordered_pairs: Vec<ConcurrentPair>,
    /// Original label -> composite label, for the greedily selected pairs.
    pub rename_map: BTreeMap<String, String>,
}

/// Composite label for a merged pair: smaller label first.
pub fn composite_label(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}+{b}")
    } else {
        format!("{b}+{a}")
    }
}

impl ConcatPlan {
    /// Merged pairs in application order, reconstructed from the greedy
    /// selection over `ordered_pairs`.
    pub fn merged_pairs(&self) -> Vec<(String, String)> {
        let mut used: BTreeSet<&str> = BTreeSet::new();
        let mut selected = Vec::new();
        for pair in &self.ordered_pairs {
            if used.contains(pair.first.as_str()) || used.contains(pair.second.as_str()) {
                continue;
            }
            used.insert(&pair.first);
            used.insert(&pair.second);
            selected.push((pair.first.clone(), pair.second.clone()));
        }
        selected
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_pairs.is_empty()
    }

    /// Audit record: pairs with scores and merge status, the rename map, and
    /// the tie-break rule standing in for the re-position step.
    pub fn to_json(&self) -> serde_json::Value {
        let merged: BTreeSet<(String, String)> = self.merged_pairs().into_iter().collect();
        let pairs: Vec<_> = self
            .ordered_pairs
            .iter()
            .map(|p| {
                json!({
                    "first": p.first,
                    "second": p.second,
                    "score": p.score,
                    "merged": merged.contains(&(p.first.clone(), p.second.clone())),
                })
            })
            .collect();
        json!({
            "threshold": self.threshold,
            "pairs": pairs,
            "rename_map": self.rename_map,
            "tie_break": "lexicographic",
        })
    }
}

/// Select the pairs to merge: concurrent pairs whose two directed follow
/// probabilities both exceed `p_star`, sorted by summed probability.
pub fn plan_concatenation(log: &EventLog, p_star: f64) -> ConcatPlan {
    let dfg = DirectlyFollowsGraph::from_log(log);
    let mut valid: Vec<ConcurrentPair> = dfg
        .concurrent_pairs()
        .into_iter()
        .filter(|pair| {
            let p_fwd = dfg.follow_probability(&pair.first, &pair.second).expect("pair labels in dfg");
            let p_bwd = dfg.follow_probability(&pair.second, &pair.first).expect("pair labels in dfg");
            p_fwd > p_star && p_bwd > p_star
        })
        .collect();
    valid.sort_by(|x, y| {
        y.score
            .partial_cmp(&x.score)
            .expect("scores are finite")
            .then_with(|| (&x.first, &x.second).cmp(&(&y.first, &y.second)))
    });
    let mut rename_map = BTreeMap::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for pair in &valid {
        if used.contains(&pair.first) || used.contains(&pair.second) {
            continue;
        }
        let composite = composite_label(&pair.first, &pair.second);
        rename_map.insert(pair.first.clone(), composite.clone());
        rename_map.insert(pair.second.clone(), composite);
        used.insert(pair.first.clone());
        used.insert(pair.second.clone());
    }
    ConcatPlan {
        threshold: p_star,
        ordered_pairs: valid,
        rename_map,
    }
}

fn merge_adjacent(events: &[EventInstance], a: &str, b: &str) -> Vec<EventInstance> {
    let composite = composite_label(a, b);
    let mut out: Vec<EventInstance> = Vec::with_capacity(events.len());
    let mut i = 0;
    while i < events.len() {
        if i + 1 < events.len() {
            let (x, y) = (&events[i].label, &events[i + 1].label);
            if (x == a && y == b) || (x == b && y == a) {
                // The earlier timestamp is the first of the two (trace sorted).
                let mut merged = events[i].clone();
                merged.label = composite.clone();
                merged.timestamp = events[i].timestamp.min(events[i + 1].timestamp);
                out.push(merged);
                i += 2;
                continue;
            }
        }
        out.push(events[i].clone());
        i += 1;
    }
    out
}

fn collapse_immediate_repeats(events: Vec<EventInstance>) -> Vec<EventInstance> {
    let mut out: Vec<EventInstance> = Vec::with_capacity(events.len());
    for event in events {
        if out.last().map(|e| &e.label) == Some(&event.label) {
            continue;
        }
        out.push(event);
    }
    out
}

/// Rewrite the log per the plan. Empty plans still collapse immediate
/// repetitions of the same label.
pub fn apply_concatenation(log: &EventLog, plan: &ConcatPlan) -> Result<EventLog, ConcatError> {
    let missing: Vec<String> = plan
        .ordered_pairs
        .iter()
        .flat_map(|p| [p.first.clone(), p.second.clone()])
        .filter(|l| !log.label_universe.contains(l))
        .collect();
    if !missing.is_empty() {
        return Err(ConcatError::PlanLogMismatch(missing));
    }

    let merged = plan.merged_pairs();
    let traces = log
        .traces
        .iter()
        .map(|trace| {
            let mut events = trace.events.clone();
            for (a, b) in &merged {
                events = merge_adjacent(&events, a, b);
            }
            for event in &mut events {
                if let Some(composite) = plan.rename_map.get(&event.label) {
                    event.label = composite.clone();
                }
            }
            Trace {
                case_id: trace.case_id.clone(),
                events: collapse_immediate_repeats(events),
            }
        })
        .collect();
    EventLog::new(traces).map_err(|_| unreachable!("case ids unchanged"))
}

/// Plan and apply in one step.
pub fn preprocess(log: &EventLog, p_star: f64) -> Result<EventLog, ConcatError> {
    apply_concatenation(log, &plan_concatenation(log, p_star))
}
