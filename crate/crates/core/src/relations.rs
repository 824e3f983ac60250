//! Directly-follows statistics: label-pair counts, follow probabilities,
//! concurrency and self-loop detection.
//!
//! Counts aggregate over the whole log. The follow probability of `a -> b` is
//! conditioned on occurrences of `a` in non-final trace positions, so the
//! probabilities out of each label sum to 1 (or 0 for trace-final-only labels).

use std::collections::BTreeSet;

use serde_json::json;
use thiserror::Error;

use crate::event_log::EventLog;

#[derive(Debug, Error)]
pub enum RelationsError {
    #[error("label {0:?} is not in the graph")]
    UnknownLabel(String),
}

/// An unordered label pair observed in both directly-follows directions.
/// `first < second` lexicographically; `score` is the sum of the two directed
/// follow probabilities, in (0, 2].
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrentPair {
    pub first: String,
    pub second: String,
    pub score: f64,
}

/// Directly-follows counts over a log: `count(a, b)` is the number of
/// positions where `b` immediately follows `a`, summed over all traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectlyFollowsGraph {
    labels: Vec<String>,
    follow: Vec<Vec<u64>>,
    out_total: Vec<u64>,
    start_count: Vec<u64>,
    end_count: Vec<u64>,
}

impl DirectlyFollowsGraph {
    /// Fold a log into its DFG. An empty log yields an empty graph.
    pub fn from_log(log: &EventLog) -> Self {
        let labels: Vec<String> = log.label_universe.iter().cloned().collect();
        let n = labels.len();
        let index = |label: &str| labels.binary_search_by(|l| l.as_str().cmp(label)).expect("label in universe");
        let mut follow = vec![vec![0u64; n]; n];
        let mut out_total = vec![0u64; n];
        let mut start_count = vec![0u64; n];
        let mut end_count = vec![0u64; n];
        for trace in &log.traces {
            if let Some(first) = trace.events.first() {
                start_count[index(&first.label)] += 1;
            }
            if let Some(last) = trace.events.last() {
                end_count[index(&last.label)] += 1;
            }
            for pair in trace.events.windows(2) {
                let a = index(&pair[0].label);
                let b = index(&pair[1].label);
                follow[a][b] += 1;
                out_total[a] += 1;
            }
        }
        DirectlyFollowsGraph {
            labels,
            follow,
            out_total,
            start_count,
            end_count,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn count(&self, a: &str, b: &str) -> u64 {
        match (self.label_index(a), self.label_index(b)) {
            (Some(i), Some(j)) => self.follow[i][j],
            _ => 0,
        }
    }

    pub fn count_by_index(&self, a: usize, b: usize) -> u64 {
        self.follow[a][b]
    }

    pub fn out_total(&self, a: usize) -> u64 {
        self.out_total[a]
    }

    pub fn start_count(&self, a: usize) -> u64 {
        self.start_count[a]
    }

    pub fn end_count(&self, a: usize) -> u64 {
        self.end_count[a]
    }

    /// P(b immediately after a) = count(a,b) / occurrences of `a` in non-final
    /// positions; 0 when `a` never has a successor.
    pub fn follow_probability(&self, a: &str, b: &str) -> Result<f64, RelationsError> {
        let i = self
            .label_index(a)
            .ok_or_else(|| RelationsError::UnknownLabel(a.to_owned()))?;
        let j = match self.label_index(b) {
            Some(j) => j,
            None => return Ok(0.0),
        };
        Ok(self.probability_by_index(i, j))
    }

    pub fn probability_by_index(&self, a: usize, b: usize) -> f64 {
        if self.out_total[a] == 0 {
            0.0
        } else {
            self.follow[a][b] as f64 / self.out_total[a] as f64
        }
    }

    /// Unordered pairs with both directed counts positive, scored by the sum
    /// of their directed probabilities. Sorted lexicographically.
    pub fn concurrent_pairs(&self) -> Vec<ConcurrentPair> {
        let n = self.labels.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.follow[i][j] > 0 && self.follow[j][i] > 0 {
                    pairs.push(ConcurrentPair {
                        first: self.labels[i].clone(),
                        second: self.labels[j].clone(),
                        score: self.probability_by_index(i, j) + self.probability_by_index(j, i),
                    });
                }
            }
        }
        pairs
    }

    /// Labels that directly follow themselves somewhere in the log.
    pub fn self_loop_labels(&self) -> BTreeSet<String> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(i, _)| self.follow[*i][*i] > 0)
            .map(|(_, l)| l.clone())
            .collect()
    }

    /// Copy with the directed edge a -> b removed; `out_total` shrinks by the
    /// removed count so the per-source invariant keeps holding.
    pub(crate) fn without_edge(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        out.out_total[a] -= out.follow[a][b];
        out.follow[a][b] = 0;
        out
    }

    pub fn edge_count(&self) -> usize {
        self.follow
            .iter()
            .flat_map(|row| row.iter())
            .filter(|&&c| c > 0)
            .count()
    }

    /// Adjacency-object JSON: edge counts, start/end counts per label.
    pub fn to_json(&self) -> serde_json::Value {
        let mut edges = serde_json::Map::new();
        for (i, a) in self.labels.iter().enumerate() {
            let mut row = serde_json::Map::new();
            for (j, b) in self.labels.iter().enumerate() {
                if self.follow[i][j] > 0 {
                    row.insert(b.clone(), json!(self.follow[i][j]));
                }
            }
            if !row.is_empty() {
                edges.insert(a.clone(), serde_json::Value::Object(row));
            }
        }
        let counts = |v: &[u64]| {
            self.labels
                .iter()
                .zip(v)
                .filter(|(_, &c)| c > 0)
                .map(|(l, &c)| (l.clone(), json!(c)))
                .collect::<serde_json::Map<_, _>>()
        };
        json!({
            "labels": self.labels,
            "edges": edges,
            "start": counts(&self.start_count),
            "end": counts(&self.end_count),
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dfg {\n  rankdir=LR;\n  start [shape=circle];\n  end [shape=doublecircle];\n");
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(&format!("  n{i} [shape=box, label=\"{l}\"];\n"));
        }
        for (i, _) in self.labels.iter().enumerate() {
            if self.start_count[i] > 0 {
                out.push_str(&format!("  start -> n{i} [label=\"{}\"];\n", self.start_count[i]));
            }
            for (j, _) in self.labels.iter().enumerate() {
                if self.follow[i][j] > 0 {
                    out.push_str(&format!("  n{i} -> n{j} [label=\"{}\"];\n", self.follow[i][j]));
                }
            }
            if self.end_count[i] > 0 {
                out.push_str(&format!("  n{i} -> end [label=\"{}\"];\n", self.end_count[i]));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{EventInstance, Trace};

    fn log_of(traces: &[&[&str]]) -> EventLog {
        EventLog::new(
            traces
                .iter()
                .enumerate()
                .map(|(i, labels)| Trace {
                    case_id: format!("c{i}"),
                    events: labels
                        .iter()
                        .enumerate()
                        .map(|(j, l)| EventInstance::new(*l, (j as i64 + 1) * 10))
                        .collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn counts_single_trace() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "b", "c"]]));
        assert_eq!(dfg.count("a", "b"), 1);
        assert_eq!(dfg.count("b", "c"), 1);
        assert_eq!(dfg.count("a", "c"), 0);
        assert_eq!(dfg.count("b", "a"), 0);
    }

    #[test]
    fn counts_both_directions() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "b"], &["b", "a"]]));
        assert_eq!(dfg.count("a", "b"), 1);
        assert_eq!(dfg.count("b", "a"), 1);
    }

    #[test]
    fn counts_self_follow() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "a", "b"]]));
        assert_eq!(dfg.count("a", "a"), 1);
        assert_eq!(dfg.count("a", "b"), 1);
    }

    #[test]
    fn follow_probability_is_conditional_frequency() {
        let log = log_of(&[&["a", "b"], &["a", "b"], &["a", "b"], &["a", "c"]]);
        let dfg = DirectlyFollowsGraph::from_log(&log);
        assert_eq!(dfg.follow_probability("a", "b").unwrap(), 0.75);
        assert_eq!(dfg.follow_probability("a", "c").unwrap(), 0.25);
    }

    #[test]
    fn follow_probability_zero_cases() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "b", "c"]]));
        // no loop edge
        assert_eq!(dfg.follow_probability("a", "a").unwrap(), 0.0);
        // c only occurs trace-final: zero denominator
        assert_eq!(dfg.follow_probability("c", "a").unwrap(), 0.0);
    }

    #[test]
    fn follow_probability_unknown_label() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "b"]]));
        assert!(matches!(
            dfg.follow_probability("zzz", "a"),
            Err(RelationsError::UnknownLabel(_))
        ));
    }

    #[test]
    fn concurrent_pairs_requires_both_directions() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "b"], &["b", "a"]]));
        let pairs = dfg.concurrent_pairs();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].first, "a");
        assert_eq!(pairs[0].second, "b");
        assert!((pairs[0].score - 2.0).abs() < 1e-12);
    }

    #[test]
    fn concurrent_pairs_empty_for_chain() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "b", "c"]]));
        assert!(dfg.concurrent_pairs().is_empty());
    }

    #[test]
    fn self_loops_detected() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "a", "b"]]));
        let loops = dfg.self_loop_labels();
        assert_eq!(loops.into_iter().collect::<Vec<_>>(), vec!["a".to_string()]);
    }

    #[test]
    fn self_loops_longer_run() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[&["a", "b", "b", "b"]]));
        assert_eq!(dfg.count("b", "b"), 2);
        assert!(dfg.self_loop_labels().contains("b"));
        assert!(!dfg.self_loop_labels().contains("a"));
    }

    #[test]
    fn out_totals_match_row_sums() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[
            &["a", "b", "c"],
            &["a", "c", "b"],
            &["b", "a"],
        ]));
        for i in 0..dfg.labels().len() {
            let row_sum: u64 = (0..dfg.labels().len()).map(|j| dfg.count_by_index(i, j)).sum();
            assert_eq!(row_sum, dfg.out_total(i));
        }
    }

    #[test]
    fn probabilities_per_source_sum_to_one_or_zero() {
        let dfg = DirectlyFollowsGraph::from_log(&log_of(&[
            &["a", "b", "c"],
            &["a", "c", "b"],
        ]));
        for i in 0..dfg.labels().len() {
            let sum: f64 = (0..dfg.labels().len()).map(|j| dfg.probability_by_index(i, j)).sum();
            assert!(sum.abs() < 1e-12 || (sum - 1.0).abs() < 1e-12, "sum was {sum}");
        }
    }
}
