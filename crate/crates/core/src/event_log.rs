//! Event-log data model, CSV ingestion, timestamp normalization, and seeded
//! synthetic log generation.
//!
//! CSV is the canonical interchange format: `case,activity,timestamp[,attr...]`
//! with timestamps as integer milliseconds or RFC-3339 strings. The parser is
//! deliberately minimal (no quoting) so round-trips stay bit-exact.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::petri::{PetriNet, PetriError};

/// One observed activity occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInstance {
    /// Activity name; never empty.
    pub label: String,
    /// Milliseconds since epoch; never negative.
    pub timestamp: i64,
    /// Extra event attributes; empty map when absent.
    pub attributes: BTreeMap<String, String>,
}

impl EventInstance {
    pub fn new(label: impl Into<String>, timestamp: i64) -> Self {
        EventInstance {
            label: label.into(),
            timestamp,
            attributes: BTreeMap::new(),
        }
    }
}

/// The ordered event sequence of one case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<EventInstance>,
}

impl Trace {
    pub fn labels(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.label.as_str()).collect()
    }

    /// Last timestamp minus first; 0 for single-event traces.
    pub fn duration_ms(&self) -> i64 {
        match (self.events.first(), self.events.last()) {
            (Some(first), Some(last)) => last.timestamp - first.timestamp,
            _ => 0,
        }
    }
}

/// A set of traces plus the universe of labels occurring in them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub label_universe: BTreeSet<String>,
}

impl EventLog {
    /// Build from traces, deriving the label universe. Case ids must be unique.
    pub fn new(traces: Vec<Trace>) -> Result<Self, EventLogError> {
        let mut seen = BTreeSet::new();
        for t in &traces {
            if !seen.insert(t.case_id.clone()) {
                return Err(EventLogError::DuplicateCase(t.case_id.clone()));
            }
        }
        let label_universe = traces
            .iter()
            .flat_map(|t| t.events.iter().map(|e| e.label.clone()))
            .collect();
        Ok(EventLog {
            traces,
            label_universe,
        })
    }

    pub fn total_events(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }
}

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("row {row}: expected {expected} columns, found {found}")]
    MalformedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: unparseable timestamp {value:?}")]
    BadTimestamp { row: usize, value: String },
    #[error("log contains no event rows")]
    EmptyLog,
    #[error("case {case}: {run} equal timestamps at {stamp} collide with next distinct stamp {next}")]
    ShiftCollision {
        case: String,
        stamp: i64,
        run: usize,
        next: i64,
    },
    #[error("duplicate case id {0:?}")]
    DuplicateCase(String),
    #[error("missing required column {0:?}")]
    MissingColumn(String),
    #[error("generation deadlocked before the final marking (step budget {budget})")]
    Deadlock { budget: usize },
    #[error("invalid gap distribution: {0}")]
    BadGapSpec(String),
    #[error(transparent)]
    Petri(#[from] PetriError),
}

/// Timestamp encodings accepted by the CSV parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TsFormat {
    /// Integer milliseconds since epoch.
    #[default]
    Millis,
    /// RFC-3339 datetime, e.g. `2024-01-02T03:04:05.678Z`.
    Rfc3339,
}

/// Column mapping for CSV ingestion. Unmapped columns become event attributes.
#[derive(Debug, Clone)]
pub struct CsvConfig {
    pub case_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
    pub ts_format: TsFormat,
}

impl Default for CsvConfig {
    fn default() -> Self {
        CsvConfig {
            case_column: "case".into(),
            activity_column: "activity".into(),
            timestamp_column: "timestamp".into(),
            ts_format: TsFormat::Millis,
        }
    }
}

fn parse_timestamp(value: &str, format: TsFormat, row: usize) -> Result<i64, EventLogError> {
    let bad = || EventLogError::BadTimestamp {
        row,
        value: value.to_owned(),
    };
    let ts = match format {
        TsFormat::Millis => value.trim().parse::<i64>().map_err(|_| bad())?,
        TsFormat::Rfc3339 => chrono::DateTime::parse_from_rfc3339(value.trim())
            .map_err(|_| bad())?
            .timestamp_millis(),
    };
    if ts < 0 {
        return Err(bad());
    }
    Ok(ts)
}

/// Parse a CSV event log. Traces are grouped by case id in first-appearance
/// order and sorted ascending by timestamp; the sort is stable, so rows with
/// equal stamps keep their file order. Row numbers in errors are 1-based data
/// rows (the header is not counted).
pub fn parse_csv(source: &str, config: &CsvConfig) -> Result<EventLog, EventLogError> {
    let mut lines = source.lines();
    let header = lines.next().ok_or(EventLogError::EmptyLog)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| -> Result<usize, EventLogError> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| EventLogError::MissingColumn(name.to_owned()))
    };
    let case_idx = find(&config.case_column)?;
    let activity_idx = find(&config.activity_column)?;
    let ts_idx = find(&config.timestamp_column)?;
    let attr_columns: Vec<(usize, &str)> = columns
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != case_idx && *i != activity_idx && *i != ts_idx)
        .map(|(i, c)| (i, *c))
        .collect();

    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<(usize, EventInstance)>> = BTreeMap::new();
    let mut row = 0usize;
    for line in lines {
        if line.is_empty() {
            continue;
        }
        row += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(EventLogError::MalformedRow {
                row,
                expected: columns.len(),
                found: fields.len(),
            });
        }
        let case = fields[case_idx].trim();
        let label = fields[activity_idx].trim();
        if case.is_empty() || label.is_empty() {
            return Err(EventLogError::MalformedRow {
                row,
                expected: columns.len(),
                found: fields.len(),
            });
        }
        let timestamp = parse_timestamp(fields[ts_idx], config.ts_format, row)?;
        let mut event = EventInstance::new(label, timestamp);
        for (i, name) in &attr_columns {
            let value = fields[*i].trim();
            if !value.is_empty() {
                event.attributes.insert((*name).to_owned(), value.to_owned());
            }
        }
        if !grouped.contains_key(case) {
            order.push(case.to_owned());
        }
        grouped.entry(case.to_owned()).or_default().push((row, event));
    }
    if row == 0 {
        return Err(EventLogError::EmptyLog);
    }

    let traces = order
        .into_iter()
        .map(|case_id| {
            let mut rows = grouped.remove(&case_id).expect("grouped by case");
            rows.sort_by_key(|(file_order, e)| (e.timestamp, *file_order));
            Trace {
                case_id,
                events: rows.into_iter().map(|(_, e)| e).collect(),
            }
        })
        .collect();
    EventLog::new(traces)
}

/// Write the canonical CSV form: `case,activity,timestamp` plus the sorted
/// union of attribute keys as extra columns. Timestamps are integer ms.
pub fn write_csv(log: &EventLog) -> String {
    let attr_keys: BTreeSet<&str> = log
        .traces
        .iter()
        .flat_map(|t| t.events.iter())
        .flat_map(|e| e.attributes.keys().map(String::as_str))
        .collect();
    let mut out = String::from("case,activity,timestamp");
    for key in &attr_keys {
        out.push(',');
        out.push_str(key);
    }
    out.push('\n');
    for trace in &log.traces {
        for event in &trace.events {
            out.push_str(&trace.case_id);
            out.push(',');
            out.push_str(&event.label);
            out.push(',');
            out.push_str(&event.timestamp.to_string());
            for key in &attr_keys {
                out.push(',');
                if let Some(v) = event.attributes.get(*key) {
                    out.push_str(v);
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Shift the k-th event of every run of equal timestamps by +k ms, preserving
/// order. Fails rather than reorder when a run is longer than the gap to the
/// next distinct stamp.
pub fn normalize_timestamps(log: &EventLog) -> Result<EventLog, EventLogError> {
    let mut traces = Vec::with_capacity(log.traces.len());
    for trace in &log.traces {
        let mut events = trace.events.clone();
        let mut i = 0;
        while i < events.len() {
            let stamp = events[i].timestamp;
            let mut run = 1;
            while i + run < events.len() && events[i + run].timestamp == stamp {
                run += 1;
            }
            if run > 1 {
                if let Some(next) = events.get(i + run).map(|e| e.timestamp) {
                    if stamp + run as i64 - 1 >= next {
                        return Err(EventLogError::ShiftCollision {
                            case: trace.case_id.clone(),
                            stamp,
                            run,
                            next,
                        });
                    }
                }
                for (k, event) in events[i..i + run].iter_mut().enumerate() {
                    event.timestamp = stamp + k as i64;
                }
            }
            i += run;
        }
        traces.push(Trace {
            case_id: trace.case_id.clone(),
            events,
        });
    }
    EventLog::new(traces)
}

/// Inter-event gap distribution for generated logs; gaps are at least 1 ms so
/// timestamps strictly increase.
#[derive(Debug, Clone, Copy)]
pub enum GapDistribution {
    FixedMs(i64),
    UniformMs { min: i64, max: i64 },
}

impl GapDistribution {
    fn validate(&self) -> Result<(), EventLogError> {
        let ok = match self {
            GapDistribution::FixedMs(ms) => *ms >= 1,
            GapDistribution::UniformMs { min, max } => *min >= 1 && max >= min,
        };
        if ok {
            Ok(())
        } else {
            Err(EventLogError::BadGapSpec(format!("{self:?}")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        match self {
            GapDistribution::FixedMs(ms) => *ms,
            GapDistribution::UniformMs { min, max } => rng.gen_range(*min..=*max),
        }
    }
}

const PLAYOUT_STEP_BUDGET: usize = 10_000;

/// Sample `n_traces` play-outs of the model by uniformly choosing among
/// enabled transitions. Deterministic for a fixed seed.
pub fn generate_log(
    model: &PetriNet,
    n_traces: usize,
    seed: u64,
    timing: GapDistribution,
) -> Result<EventLog, EventLogError> {
    timing.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(n_traces);
    for i in 0..n_traces {
        let mut marking = model.initial_marking().clone();
        let mut time = 0i64;
        let mut events = Vec::new();
        let mut steps = 0usize;
        while &marking != model.final_marking() {
            steps += 1;
            if steps > PLAYOUT_STEP_BUDGET {
                return Err(EventLogError::Deadlock {
                    budget: PLAYOUT_STEP_BUDGET,
                });
            }
            let enabled = model.enabled(&marking);
            if enabled.is_empty() {
                return Err(EventLogError::Deadlock {
                    budget: PLAYOUT_STEP_BUDGET,
                });
            }
            let t = enabled[rng.gen_range(0..enabled.len())];
            marking = model.fire(&marking, t)?;
            if let Some(label) = &model.transition(t).label {
                time += timing.sample(&mut rng);
                events.push(EventInstance::new(label.clone(), time));
            }
        }
        traces.push(Trace {
            case_id: format!("case_{i}"),
            events,
        });
    }
    EventLog::new(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::sequential_net;

    fn log_of(traces: Vec<(&str, Vec<(&str, i64)>)>) -> EventLog {
        EventLog::new(
            traces
                .into_iter()
                .map(|(case, events)| Trace {
                    case_id: case.into(),
                    events: events
                        .into_iter()
                        .map(|(l, ts)| EventInstance::new(l, ts))
                        .collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn parse_single_case() {
        let csv = "case,activity,timestamp\nc1,a,10\nc1,b,20\nc1,c,30\n";
        let log = parse_csv(csv, &CsvConfig::default()).unwrap();
        assert_eq!(log.traces.len(), 1);
        assert_eq!(log.traces[0].labels(), vec!["a", "b", "c"]);
    }

    #[test]
    fn parse_interleaved_cases() {
        let csv = "case,activity,timestamp\nc1,a,10\nc2,x,5\nc1,b,20\nc2,y,6\n";
        let log = parse_csv(csv, &CsvConfig::default()).unwrap();
        assert_eq!(log.traces.len(), 2);
        assert_eq!(log.traces[0].case_id, "c1");
        assert_eq!(log.traces[0].labels(), vec!["a", "b"]);
        assert_eq!(log.traces[1].labels(), vec!["x", "y"]);
    }

    #[test]
    fn parse_sorts_by_timestamp_stably() {
        let csv = "case,activity,timestamp\nc1,later,50\nc1,first,10\nc1,tie1,30\nc1,tie2,30\n";
        let log = parse_csv(csv, &CsvConfig::default()).unwrap();
        assert_eq!(log.traces[0].labels(), vec!["first", "tie1", "tie2", "later"]);
    }

    #[test]
    fn parse_bad_timestamp_reports_row() {
        let csv = "case,activity,timestamp\nc1,a,10\nc1,b,abc\n";
        let err = parse_csv(csv, &CsvConfig::default()).unwrap_err();
        match err {
            EventLogError::BadTimestamp { row, value } => {
                assert_eq!(row, 2);
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_empty_log() {
        let err = parse_csv("case,activity,timestamp\n", &CsvConfig::default()).unwrap_err();
        assert!(matches!(err, EventLogError::EmptyLog));
    }

    #[test]
    fn parse_malformed_row() {
        let csv = "case,activity,timestamp\nc1,a\n";
        let err = parse_csv(csv, &CsvConfig::default()).unwrap_err();
        assert!(matches!(err, EventLogError::MalformedRow { row: 1, .. }));
    }

    #[test]
    fn parse_rfc3339() {
        let csv = "case,activity,timestamp\nc1,a,1970-01-01T00:00:01Z\n";
        let config = CsvConfig {
            ts_format: TsFormat::Rfc3339,
            ..CsvConfig::default()
        };
        let log = parse_csv(csv, &config).unwrap();
        assert_eq!(log.traces[0].events[0].timestamp, 1000);
    }

    #[test]
    fn csv_round_trip_with_attributes() {
        let csv = "case,activity,timestamp,unit\nc1,a,10,mg\nc1,b,20,\nc2,a,5,ml\n";
        let log = parse_csv(csv, &CsvConfig::default()).unwrap();
        let log2 = parse_csv(&write_csv(&log), &CsvConfig::default()).unwrap();
        assert_eq!(log, log2);
    }

    #[test]
    fn normalize_shifts_duplicate_runs() {
        let log = log_of(vec![("c1", vec![("a", 5), ("b", 5), ("c", 5)])]);
        let normalized = normalize_timestamps(&log).unwrap();
        let stamps: Vec<i64> = normalized.traces[0].events.iter().map(|e| e.timestamp).collect();
        assert_eq!(stamps, vec![5, 6, 7]);
    }

    #[test]
    fn normalize_identity_without_duplicates() {
        let log = log_of(vec![("c1", vec![("a", 1), ("b", 2), ("c", 3)])]);
        assert_eq!(normalize_timestamps(&log).unwrap(), log);
    }

    #[test]
    fn normalize_detects_collision() {
        let log = log_of(vec![("c1", vec![("a", 5), ("b", 5), ("c", 6)])]);
        let err = normalize_timestamps(&log).unwrap_err();
        assert!(matches!(err, EventLogError::ShiftCollision { stamp: 5, run: 2, next: 6, .. }));
    }

    #[test]
    fn normalized_stamps_strictly_increase() {
        let log = log_of(vec![("c1", vec![("a", 5), ("b", 5), ("c", 100), ("d", 100)])]);
        let normalized = normalize_timestamps(&log).unwrap();
        for t in &normalized.traces {
            for pair in t.events.windows(2) {
                assert!(pair[0].timestamp < pair[1].timestamp);
            }
        }
    }

    #[test]
    fn generate_sequential_is_the_single_run() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = generate_log(&net, 2, 1, GapDistribution::FixedMs(10)).unwrap();
        assert_eq!(log.traces.len(), 2);
        for t in &log.traces {
            assert_eq!(t.labels(), vec!["a", "b", "c"]);
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let net = sequential_net(&["a", "b"]);
        let timing = GapDistribution::UniformMs { min: 1, max: 50 };
        let l1 = generate_log(&net, 5, 7, timing).unwrap();
        let l2 = generate_log(&net, 5, 7, timing).unwrap();
        assert_eq!(l1, l2);
    }

    #[test]
    fn generated_timestamps_strictly_increase() {
        let net = sequential_net(&["a", "b", "c", "d"]);
        let log = generate_log(&net, 10, 3, GapDistribution::UniformMs { min: 1, max: 5 }).unwrap();
        for t in &log.traces {
            for pair in t.events.windows(2) {
                assert!(pair[0].timestamp < pair[1].timestamp);
            }
        }
    }
}
