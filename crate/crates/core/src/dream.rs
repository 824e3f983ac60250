//! Decay-function initialization and Timed State Sample extraction.
//!
//! Every place carries a linear decay response `f_p(t) = max(beta - alpha_p *
//! (t - t_p), 0)` where `t_p` is the last time a token entered p; the response
//! is 0 while the place has never been entered. A timed state sample at event
//! time t concatenates the response vector F, the cumulative token-entry
//! counts C since trace start, and the current marking M.

use std::collections::BTreeMap;

use serde_json::json;
use thiserror::Error;

use crate::event_log::EventLog;
use crate::petri::{PetriError, PetriNet, Replayer, ReplayPolicy};
use crate::END_LABEL;

#[derive(Debug, Error)]
pub enum DreamError {
    #[error("all traces are instantaneous; decay rates are undefined")]
    ZeroDuration,
    #[error("auxiliary features missing for case {0:?}")]
    MissingAux(String),
    #[error(transparent)]
    Petri(#[from] PetriError),
}

/// Per-place decay parameters plus the last-entry clock used during replay.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayState {
    /// Response ceiling; responses live in [0, beta].
    pub beta: f64,
    /// Response units lost per millisecond, per place; always positive.
    pub alpha_per_place: Vec<f64>,
    /// Most recent token entry per place; `None` means never entered.
    pub last_entry: Vec<Option<i64>>,
}

impl DecayState {
    /// Response of place `p` at time `tau`; 0 when the place was never entered.
    pub fn response(&self, p: usize, tau: i64) -> f64 {
        match self.last_entry[p] {
            Some(entered) => {
                let delta = (tau - entered) as f64;
                (self.beta - self.alpha_per_place[p] * delta).max(0.0)
            }
            None => 0.0,
        }
    }

    fn reset(&mut self) {
        self.last_entry.iter_mut().for_each(|e| *e = None);
    }

    pub fn to_json(&self) -> serde_json::Value {
        let alpha: BTreeMap<String, f64> = self
            .alpha_per_place
            .iter()
            .enumerate()
            .map(|(i, &a)| (format!("p{i}"), a))
            .collect();
        json!({ "beta": self.beta, "alpha": alpha })
    }
}

/// Feature vector of one replay step: decay responses, cumulative token
/// entries, marking, and the following event's label as the training target.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedStateSample {
    pub case_id: String,
    /// Event index within the trace.
    pub index: usize,
    /// Event time in ms.
    pub tau: i64,
    pub decay_responses: Vec<f64>,
    pub token_counts: Vec<u64>,
    pub marking: Vec<u32>,
    /// Label of the next event, or the end marker after the final event.
    pub next_label: String,
}

impl TimedStateSample {
    /// F ++ C ++ M as one numeric row of width 3 * |P|.
    pub fn feature_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(3 * self.decay_responses.len());
        row.extend_from_slice(&self.decay_responses);
        row.extend(self.token_counts.iter().map(|&c| c as f64));
        row.extend(self.marking.iter().map(|&m| f64::from(m)));
        row
    }
}

/// Estimate per-place decay rates from a replay of the whole log.
///
/// `delta_max` is the longest trace duration. Places entered at most once per
/// trace decay over the full horizon (`alpha = beta / delta_max`), so their
/// response stays positive until trace end; re-entered places decay over their
/// mean positive reactivation gap, pooled across traces. Never-entered places
/// fall back to the full horizon.
pub fn estimate_decay_rates(
    net: &PetriNet,
    log: &EventLog,
    beta: f64,
) -> Result<DecayState, DreamError> {
    let delta_max = log
        .traces
        .iter()
        .map(|t| t.duration_ms())
        .max()
        .unwrap_or(0);
    if delta_max <= 0 {
        return Err(DreamError::ZeroDuration);
    }
    let n_places = net.places().len();
    let mut max_entries_per_trace = vec![0u64; n_places];
    let mut gap_sum = vec![0f64; n_places];
    let mut gap_count = vec![0u64; n_places];

    for trace in &log.traces {
        let mut replayer = Replayer::new(net, ReplayPolicy::Lenient);
        let mut entries: Vec<u64> = vec![0; n_places];
        let mut last_entry: Vec<Option<i64>> = vec![None; n_places];
        let mut record = |p: usize, tau: i64, entries: &mut Vec<u64>, last: &mut Vec<Option<i64>>| {
            entries[p] += 1;
            if let Some(prev) = last[p] {
                let gap = tau - prev;
                if gap > 0 {
                    gap_sum[p] += gap as f64;
                    gap_count[p] += 1;
                }
            }
            last[p] = Some(tau);
        };
        let mut last_tau = trace.events.first().map_or(0, |e| e.timestamp);
        for event in &trace.events {
            last_tau = event.timestamp;
            let outcome = replayer.step(&event.label)?;
            for p in outcome.entered {
                record(p.0, event.timestamp, &mut entries, &mut last_entry);
            }
        }
        let completion = replayer.complete();
        for p in completion.entered {
            record(p.0, last_tau, &mut entries, &mut last_entry);
        }
        for p in 0..n_places {
            max_entries_per_trace[p] = max_entries_per_trace[p].max(entries[p]);
        }
    }

    let horizon_alpha = beta / delta_max as f64;
    let alpha_per_place = (0..n_places)
        .map(|p| {
            if max_entries_per_trace[p] <= 1 || gap_count[p] == 0 {
                horizon_alpha
            } else {
                beta / (gap_sum[p] / gap_count[p] as f64)
            }
        })
        .collect();
    Ok(DecayState {
        beta,
        alpha_per_place,
        last_entry: vec![None; n_places],
    })
}

/// Replay the log and emit one sample per event: fire per the replay policy,
/// update entry clocks and counts, recompute responses at the event time, and
/// attach the following label as the target.
pub fn extract_tss(
    net: &PetriNet,
    decay: &DecayState,
    log: &EventLog,
) -> Result<Vec<TimedStateSample>, DreamError> {
    let n_places = net.places().len();
    let mut samples = Vec::with_capacity(log.total_events());
    for trace in &log.traces {
        let mut replayer = Replayer::new(net, ReplayPolicy::Lenient);
        let mut decay = decay.clone();
        decay.reset();
        let mut counts: Vec<u64> = vec![0; n_places];
        for (index, event) in trace.events.iter().enumerate() {
            let tau = event.timestamp;
            let outcome = replayer.step(&event.label)?;
            for p in &outcome.entered {
                counts[p.0] += 1;
                decay.last_entry[p.0] = Some(tau);
            }
            let responses = (0..n_places).map(|p| decay.response(p, tau)).collect();
            let next_label = trace
                .events
                .get(index + 1)
                .map_or_else(|| END_LABEL.to_owned(), |e| e.label.clone());
            samples.push(TimedStateSample {
                case_id: trace.case_id.clone(),
                index,
                tau,
                decay_responses: responses,
                token_counts: counts.clone(),
                marking: replayer.marking().0.clone(),
                next_label,
            });
        }
    }
    Ok(samples)
}

/// Per-case auxiliary features appended after the TSS vector.
#[derive(Debug, Clone, Default)]
pub struct AuxTable {
    pub width: usize,
    pub by_case: BTreeMap<String, Vec<f64>>,
}

/// What the feature matrix predicts.
#[derive(Debug, Clone)]
pub enum TssTask {
    /// One row per sample; target = index of the next event's label.
    NextEvent,
    /// One row per case from its last sample; target = the case's outcome.
    Outcome { labels: BTreeMap<String, String> },
}

/// Numeric training data: rows of F ++ C ++ M ++ aux and integer class targets.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
    /// Class index -> label.
    pub classes: Vec<String>,
    /// Case id per row.
    pub cases: Vec<String>,
    pub width: usize,
}

/// Assemble the training matrix. With `strict` set, rows whose case is absent
/// from a non-empty aux table (or from the outcome labels) are an error;
/// otherwise missing aux becomes zeros and unlabeled cases are dropped.
pub fn tss_to_matrix(
    samples: &[TimedStateSample],
    aux: Option<&AuxTable>,
    task: &TssTask,
    strict: bool,
) -> Result<FeatureMatrix, DreamError> {
    let aux_width = aux.map_or(0, |a| a.width);
    let aux_row = |case: &str| -> Result<Vec<f64>, DreamError> {
        match aux {
            None => Ok(Vec::new()),
            Some(table) => match table.by_case.get(case) {
                Some(row) => Ok(row.clone()),
                None if strict => Err(DreamError::MissingAux(case.to_owned())),
                None => Ok(vec![0.0; table.width]),
            },
        }
    };

    let chosen: Vec<&TimedStateSample> = match task {
        TssTask::NextEvent => samples.iter().collect(),
        TssTask::Outcome { .. } => {
            // last sample per case, in case order of first appearance
            let mut last: BTreeMap<&str, &TimedStateSample> = BTreeMap::new();
            let mut order: Vec<&str> = Vec::new();
            for s in samples {
                if !last.contains_key(s.case_id.as_str()) {
                    order.push(&s.case_id);
                }
                let entry = last.entry(&s.case_id).or_insert(s);
                if s.tau >= entry.tau {
                    *entry = s;
                }
            }
            order.into_iter().map(|c| last[c]).collect()
        }
    };

    let classes: Vec<String> = match task {
        TssTask::NextEvent => {
            let mut labels: Vec<String> = chosen.iter().map(|s| s.next_label.clone()).collect();
            labels.sort();
            labels.dedup();
            labels
        }
        TssTask::Outcome { labels } => {
            let mut outcomes: Vec<String> = labels.values().cloned().collect();
            outcomes.sort();
            outcomes.dedup();
            outcomes
        }
    };
    let class_index = |label: &str| classes.iter().position(|c| c == label);

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut cases = Vec::new();
    for sample in chosen {
        let target = match task {
            TssTask::NextEvent => class_index(&sample.next_label).expect("class from samples"),
            TssTask::Outcome { labels } => match labels.get(&sample.case_id) {
                Some(outcome) => class_index(outcome).expect("class from labels"),
                None if strict => return Err(DreamError::MissingAux(sample.case_id.clone())),
                None => continue,
            },
        };
        let mut row = sample.feature_row();
        row.extend(aux_row(&sample.case_id)?);
        rows.push(row);
        targets.push(target);
        cases.push(sample.case_id.clone());
    }
    let width = 3 * samples.first().map_or(0, |s| s.decay_responses.len()) + aux_width;
    Ok(FeatureMatrix {
        rows,
        targets,
        classes,
        cases,
        width,
    })
}

/// CSV export: `case,idx,tau,f_0..,c_0..,m_0..,target`.
pub fn tss_to_csv(samples: &[TimedStateSample]) -> String {
    let n = samples.first().map_or(0, |s| s.decay_responses.len());
    let mut out = String::from("case,idx,tau");
    for i in 0..n {
        out.push_str(&format!(",f_{i}"));
    }
    for i in 0..n {
        out.push_str(&format!(",c_{i}"));
    }
    for i in 0..n {
        out.push_str(&format!(",m_{i}"));
    }
    out.push_str(",target\n");
    for s in samples {
        out.push_str(&format!("{},{},{}", s.case_id, s.index, s.tau));
        for f in &s.decay_responses {
            out.push_str(&format!(",{f}"));
        }
        for c in &s.token_counts {
            out.push_str(&format!(",{c}"));
        }
        for m in &s.marking {
            out.push_str(&format!(",{m}"));
        }
        out.push(',');
        out.push_str(&s.next_label);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{EventInstance, Trace};
    use crate::petri::sequential_net;

    fn chain_log(stamps: &[&[i64]], labels: &[&str]) -> EventLog {
        EventLog::new(
            stamps
                .iter()
                .enumerate()
                .map(|(i, times)| Trace {
                    case_id: format!("c{i}"),
                    events: times
                        .iter()
                        .zip(labels)
                        .map(|(ts, l)| EventInstance::new(*l, *ts))
                        .collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_visit_rates_use_max_duration() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = chain_log(&[&[0, 500, 1000]], &["a", "b", "c"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        for (p, &alpha) in decay.alpha_per_place.iter().enumerate() {
            assert!((alpha - 0.001).abs() < 1e-15, "place {p}: {alpha}");
        }
    }

    #[test]
    fn beta_scales_rates_linearly() {
        let net = sequential_net(&["a", "b"]);
        let log = chain_log(&[&[0, 800]], &["a", "b"]);
        let d1 = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let d2 = estimate_decay_rates(&net, &log, 2.0).unwrap();
        for (a1, a2) in d1.alpha_per_place.iter().zip(&d2.alpha_per_place) {
            assert!((a2 - 2.0 * a1).abs() < 1e-15);
        }
    }

    #[test]
    fn reentered_place_uses_mean_gap() {
        // a fires at 0, 100, 400: the place after `a` is entered at gaps 100, 300
        let mut b = crate::petri::PetriNetBuilder::new();
        let p0 = b.add_place("source");
        let p1 = b.add_place("p1");
        let p2 = b.add_place("sink");
        b.add_transition(Some("a"), vec![p0], vec![p0, p1]);
        b.add_transition(Some("z"), vec![p0, p1], vec![p2]);
        b.mark_initial(p0, 1);
        b.mark_final(p2, 1);
        let net = b.build().unwrap();
        let log = EventLog::new(vec![Trace {
            case_id: "c0".into(),
            events: vec![
                EventInstance::new("a", 0),
                EventInstance::new("a", 100),
                EventInstance::new("a", 400),
                EventInstance::new("z", 500),
            ],
        }])
        .unwrap();
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        // p1 is entered at 0, 100, 400: mean gap 200
        assert!((decay.alpha_per_place[1] - 1.0 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_is_an_error() {
        let net = sequential_net(&["a"]);
        let log = chain_log(&[&[42]], &["a"]);
        assert!(matches!(
            estimate_decay_rates(&net, &log, 1.0),
            Err(DreamError::ZeroDuration)
        ));
    }

    #[test]
    fn first_sample_counts_only_that_firing() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = chain_log(&[&[0, 10, 1000]], &["a", "b", "c"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        let first = &samples[0];
        assert_eq!(first.token_counts.iter().sum::<u64>(), 1);
        // unvisited places respond 0; the entered place responds beta
        let entered = first.token_counts.iter().position(|&c| c == 1).unwrap();
        assert_eq!(first.decay_responses[entered], 1.0);
        for (p, &r) in first.decay_responses.iter().enumerate() {
            if p != entered {
                assert_eq!(r, 0.0);
            }
        }
    }

    #[test]
    fn response_decays_by_one_ms_step() {
        let net = sequential_net(&["a", "b"]);
        let log = chain_log(&[&[0, 1], &[0, 1000]], &["a", "b"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        // trace c0: second event 1 ms after the first; the place entered by `a`
        // has decayed exactly alpha * 1
        let second = &samples[1];
        let p_after_a = 1; // chain: source=0, p1=1, sink=2
        let expected = 1.0 - decay.alpha_per_place[p_after_a] * 1.0;
        assert_eq!(second.decay_responses[p_after_a], expected);
    }

    #[test]
    fn one_sample_per_event_and_width_3p() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = chain_log(
            &[&[0, 10, 300], &[5, 20, 900]],
            &["a", "b", "c"],
        );
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        assert_eq!(samples.len(), log.total_events());
        for s in &samples {
            assert_eq!(s.feature_row().len(), 3 * net.places().len());
        }
    }

    #[test]
    fn counts_reset_between_traces_and_grow_within() {
        let net = sequential_net(&["a", "b"]);
        let log = chain_log(&[&[0, 10], &[0, 10]], &["a", "b"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        assert_eq!(samples[0].token_counts.iter().sum::<u64>(), 1);
        assert_eq!(samples[1].token_counts.iter().sum::<u64>(), 2);
        // second trace starts fresh
        assert_eq!(samples[2].token_counts.iter().sum::<u64>(), 1);
        for w in samples.windows(2) {
            if w[0].case_id == w[1].case_id {
                for (c0, c1) in w[0].token_counts.iter().zip(&w[1].token_counts) {
                    assert!(c1 >= c0);
                }
            }
        }
    }

    #[test]
    fn final_event_targets_end_marker() {
        let net = sequential_net(&["a", "b"]);
        let log = chain_log(&[&[0, 10]], &["a", "b"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        assert_eq!(samples[0].next_label, "b");
        assert_eq!(samples[1].next_label, END_LABEL);
    }

    #[test]
    fn matrix_without_aux_has_width_3p() {
        let net = sequential_net(&["a", "b"]);
        let log = chain_log(&[&[0, 10]], &["a", "b"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        let matrix = tss_to_matrix(&samples, None, &TssTask::NextEvent, false).unwrap();
        assert_eq!(matrix.width, 3 * net.places().len());
        assert!(matrix.rows.iter().all(|r| r.len() == matrix.width));
    }

    #[test]
    fn matrix_with_aux_appends_columns() {
        let net = sequential_net(&["a", "b"]);
        let log = chain_log(&[&[0, 10]], &["a", "b"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        let aux = AuxTable {
            width: 4,
            by_case: [("c0".to_string(), vec![1.0, 2.0, 3.0, 4.0])].into(),
        };
        let matrix = tss_to_matrix(&samples, Some(&aux), &TssTask::NextEvent, true).unwrap();
        assert_eq!(matrix.width, 3 * net.places().len() + 4);
        assert_eq!(&matrix.rows[0][matrix.width - 4..], &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn outcome_mode_uses_last_sample_per_case() {
        let net = sequential_net(&["a", "b"]);
        let log = chain_log(&[&[0, 10], &[0, 900]], &["a", "b"]);
        let decay = estimate_decay_rates(&net, &log, 1.0).unwrap();
        let samples = extract_tss(&net, &decay, &log).unwrap();
        let labels: BTreeMap<String, String> = [
            ("c0".to_string(), "died".to_string()),
            ("c1".to_string(), "discharged".to_string()),
        ]
        .into();
        let matrix =
            tss_to_matrix(&samples, None, &TssTask::Outcome { labels }, true).unwrap();
        assert_eq!(matrix.rows.len(), 2);
        assert_eq!(matrix.cases, vec!["c0", "c1"]);
        // the selected samples are the max-tau ones
        let max_tau_c0 = samples
            .iter()
            .filter(|s| s.case_id == "c0")
            .max_by_key(|s| s.tau)
            .unwrap();
        assert_eq!(matrix.rows[0], max_tau_c0.feature_row());
    }

    #[test]
    fn strict_missing_aux_is_an_error() {
        let net = sequential_net(&["a"]);
        let log = chain_log(&[&[0]], &["a"]);
        let decay = DecayState {
            beta: 1.0,
            alpha_per_place: vec![0.001; net.places().len()],
            last_entry: vec![None; net.places().len()],
        };
        let samples = extract_tss(&net, &decay, &log).unwrap();
        let aux = AuxTable {
            width: 2,
            by_case: BTreeMap::new(),
        };
        assert!(matches!(
            tss_to_matrix(&samples, Some(&aux), &TssTask::NextEvent, true),
            Err(DreamError::MissingAux(_))
        ));
    }
}
