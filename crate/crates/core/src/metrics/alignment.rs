//! Alignment-based fitness and escaping-edges precision over the synchronous
//! product of a trace and a net.
//!
//! Moves and their costs: synchronous and silent moves are free; a log-only
//! move (event skipped by the model) and a model-only move on a visible
//! transition cost one each. Trace fitness is `1 - cost / worst_cost` with
//! `worst_cost = trace length + cheapest visible path through the model`,
//! and log fitness averages over traces (variants weighted by count).

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use crate::event_log::EventLog;
use crate::metrics::MetricsError;
use crate::petri::{Marking, PetriNet, Replayer, ReplayPolicy, TransitionId};
use crate::END_LABEL;

#[derive(Debug, Clone, Copy)]
pub struct AlignmentOptions {
    /// Cap on expanded search states per trace before falling back.
    pub max_states: usize,
}

impl Default for AlignmentOptions {
    fn default() -> Self {
        AlignmentOptions {
            max_states: 1_000_000,
        }
    }
}

/// One step of an optimal alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// Event and visible transition advance together (cost 0).
    Sync(usize, TransitionId),
    /// Event has no model counterpart (cost 1).
    LogOnly(usize),
    /// Visible transition fires without an event (cost 1).
    ModelVisible(TransitionId),
    /// Silent transition fires (cost 0).
    ModelSilent(TransitionId),
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub cost: u32,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    pos: usize,
    marking: Marking,
}

#[derive(PartialEq, Eq)]
struct QueueEntry {
    cost: u32,
    seq: u64,
    state: State,
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on cost; insertion order breaks ties deterministically
        other
            .cost
            .cmp(&self.cost)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first search for a minimal-cost alignment of `labels` on `net`,
/// ending at the final marking.
pub fn align_trace(
    net: &PetriNet,
    labels: &[&str],
    opts: &AlignmentOptions,
) -> Result<Alignment, MetricsError> {
    let start = State {
        pos: 0,
        marking: net.initial_marking().clone(),
    };
    let mut dist: HashMap<State, u32> = HashMap::new();
    let mut parent: HashMap<State, (State, Move)> = HashMap::new();
    let mut heap: BinaryHeap<QueueEntry> = BinaryHeap::new();
    dist.insert(start.clone(), 0);
    heap.push(QueueEntry {
        cost: 0,
        seq: 0,
        state: start.clone(),
    });
    let mut seq = 0u64;
    let mut expanded = 0usize;

    while let Some(QueueEntry { cost, state, .. }) = heap.pop() {
        if dist.get(&state).copied() != Some(cost) {
            continue;
        }
        if state.pos == labels.len() && &state.marking == net.final_marking() {
            let mut moves = Vec::new();
            let mut cursor = state;
            while let Some((prev, mv)) = parent.remove(&cursor) {
                moves.push(mv);
                cursor = prev;
            }
            moves.reverse();
            return Ok(Alignment { cost, moves });
        }
        expanded += 1;
        if expanded > opts.max_states {
            return Err(MetricsError::SearchBudgetExceeded(opts.max_states));
        }

        let mut push = |next: State,
                        next_cost: u32,
                        mv: Move,
                        dist: &mut HashMap<State, u32>,
                        parent: &mut HashMap<State, (State, Move)>,
                        heap: &mut BinaryHeap<QueueEntry>| {
            let better = dist.get(&next).map_or(true, |&c| next_cost < c);
            if better {
                dist.insert(next.clone(), next_cost);
                parent.insert(next.clone(), (state.clone(), mv));
                seq += 1;
                heap.push(QueueEntry {
                    cost: next_cost,
                    seq,
                    state: next,
                });
            }
        };

        if state.pos < labels.len() {
            push(
                State {
                    pos: state.pos + 1,
                    marking: state.marking.clone(),
                },
                cost + 1,
                Move::LogOnly(state.pos),
                &mut dist,
                &mut parent,
                &mut heap,
            );
        }
        for t in net.enabled(&state.marking) {
            let fired = net.fire(&state.marking, t).expect("enabled");
            match &net.transition(t).label {
                None => push(
                    State {
                        pos: state.pos,
                        marking: fired,
                    },
                    cost,
                    Move::ModelSilent(t),
                    &mut dist,
                    &mut parent,
                    &mut heap,
                ),
                Some(label) => {
                    if state.pos < labels.len() && label == labels[state.pos] {
                        push(
                            State {
                                pos: state.pos + 1,
                                marking: fired.clone(),
                            },
                            cost,
                            Move::Sync(state.pos, t),
                            &mut dist,
                            &mut parent,
                            &mut heap,
                        );
                    }
                    push(
                        State {
                            pos: state.pos,
                            marking: fired,
                        },
                        cost + 1,
                        Move::ModelVisible(t),
                        &mut dist,
                        &mut parent,
                        &mut heap,
                    );
                }
            }
        }
    }
    // final marking unreachable: treat like a blown budget and fall back
    Err(MetricsError::SearchBudgetExceeded(opts.max_states))
}

/// Cheapest number of visible firings from the initial to the final marking.
fn shortest_model_path(net: &PetriNet, opts: &AlignmentOptions) -> Option<u32> {
    let mut dist: HashMap<Marking, u32> = HashMap::new();
    let mut heap: BinaryHeap<QueueEntry> = BinaryHeap::new();
    let start = net.initial_marking().clone();
    dist.insert(start.clone(), 0);
    heap.push(QueueEntry {
        cost: 0,
        seq: 0,
        state: State {
            pos: 0,
            marking: start,
        },
    });
    let mut seq = 0u64;
    let mut expanded = 0usize;
    while let Some(QueueEntry { cost, state, .. }) = heap.pop() {
        if dist.get(&state.marking).copied() != Some(cost) {
            continue;
        }
        if &state.marking == net.final_marking() {
            return Some(cost);
        }
        expanded += 1;
        if expanded > opts.max_states {
            return None;
        }
        for t in net.enabled(&state.marking) {
            let fired = net.fire(&state.marking, t).expect("enabled");
            let step = u32::from(net.transition(t).label.is_some());
            let next_cost = cost + step;
            if dist.get(&fired).map_or(true, |&c| next_cost < c) {
                dist.insert(fired.clone(), next_cost);
                seq += 1;
                heap.push(QueueEntry {
                    cost: next_cost,
                    seq,
                    state: State {
                        pos: 0,
                        marking: fired,
                    },
                });
            }
        }
    }
    None
}

fn variants(log: &EventLog) -> Vec<(Vec<String>, usize)> {
    let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for trace in &log.traces {
        let labels: Vec<String> = trace.events.iter().map(|e| e.label.clone()).collect();
        *counts.entry(labels).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

/// Classical token-replay fitness, used when alignment search blows its
/// budget: half weight on missing tokens, half on leftovers.
fn token_replay_fitness(net: &PetriNet, labels: &[&str]) -> f64 {
    let mut replayer = Replayer::new(net, ReplayPolicy::Lenient);
    for label in labels {
        replayer.step(label).expect("lenient replay is total");
    }
    replayer.complete();
    let result = replayer.into_result();
    let initial_total = net.initial_marking().total();
    let produced_total: u64 = result.produced_per_place.iter().sum();
    let end_total = result.final_marking.total();
    let consumed_during = initial_total + produced_total - end_total;
    let final_required = net.final_marking().total();
    let missing_at_end: u64 = net
        .final_marking()
        .0
        .iter()
        .zip(&result.final_marking.0)
        .map(|(&want, &have)| u64::from(want.saturating_sub(have)))
        .sum();
    let remaining: u64 = result
        .final_marking
        .0
        .iter()
        .zip(&net.final_marking().0)
        .map(|(&have, &want)| u64::from(have.saturating_sub(want)))
        .sum();
    let m = result.missing_tokens as f64 + missing_at_end as f64;
    let c = (consumed_during + final_required) as f64;
    let p = (initial_total + produced_total) as f64;
    let r = remaining as f64;
    let part1 = if c > 0.0 { 1.0 - m / c } else { 1.0 };
    let part2 = if p > 0.0 { 1.0 - r / p } else { 1.0 };
    (0.5 * part1 + 0.5 * part2).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct FitnessReport {
    pub value: f64,
    /// Trace count that fell back to token replay.
    pub fallback_traces: usize,
}

pub fn fitness_detailed(net: &PetriNet, log: &EventLog, opts: &AlignmentOptions) -> FitnessReport {
    let worst_base = shortest_model_path(net, opts);
    let mut weighted_sum = 0.0;
    let mut weight_total = 0usize;
    let mut fallback_traces = 0usize;
    for (labels, count) in variants(log) {
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let value = match (align_trace(net, &refs, opts), worst_base) {
            (Ok(alignment), Some(model_path)) => {
                let worst = labels.len() as f64 + model_path as f64;
                if worst == 0.0 {
                    1.0
                } else {
                    (1.0 - f64::from(alignment.cost) / worst).clamp(0.0, 1.0)
                }
            }
            _ => {
                fallback_traces += count;
                token_replay_fitness(net, &refs)
            }
        };
        weighted_sum += value * count as f64;
        weight_total += count;
    }
    FitnessReport {
        value: if weight_total == 0 {
            1.0
        } else {
            weighted_sum / weight_total as f64
        },
        fallback_traces,
    }
}

/// Log fitness in [0, 1]; 1.0 exactly when every trace aligns at zero cost.
pub fn fitness(net: &PetriNet, log: &EventLog) -> f64 {
    fitness_detailed(net, log, &AlignmentOptions::default()).value
}

/// Visible labels reachable by firing zero or more silent transitions, plus
/// the end marker when the final marking is silently reachable.
fn allowed_continuations(net: &PetriNet, marking: &Marking) -> BTreeSet<String> {
    const MAX_VISITED: usize = 10_000;
    let mut allowed = BTreeSet::new();
    let mut visited: BTreeSet<Marking> = BTreeSet::new();
    let mut stack = vec![marking.clone()];
    visited.insert(marking.clone());
    while let Some(m) = stack.pop() {
        if &m == net.final_marking() {
            allowed.insert(END_LABEL.to_owned());
        }
        for t in net.enabled(&m) {
            match &net.transition(t).label {
                Some(label) => {
                    allowed.insert(label.clone());
                }
                None => {
                    let next = net.fire(&m, t).expect("enabled");
                    if visited.len() < MAX_VISITED && visited.insert(next.clone()) {
                        stack.push(next);
                    }
                }
            }
        }
    }
    allowed
}

/// Markings along the alignment, one per trace prefix: entry `j` is the state
/// right before the j-th event is consumed (after any preceding model moves),
/// and entry `len` is the final state.
fn prefix_markings(net: &PetriNet, alignment: &Alignment, len: usize) -> Vec<Marking> {
    let mut markings = Vec::with_capacity(len + 1);
    let mut marking = net.initial_marking().clone();
    let mut pos = 0;
    for mv in &alignment.moves {
        match mv {
            Move::Sync(_, t) => {
                markings.push(marking.clone());
                pos += 1;
                marking = net.fire(&marking, *t).expect("aligned move fires");
            }
            Move::LogOnly(_) => {
                markings.push(marking.clone());
                pos += 1;
            }
            Move::ModelVisible(t) | Move::ModelSilent(t) => {
                marking = net.fire(&marking, *t).expect("aligned move fires");
            }
        }
    }
    debug_assert_eq!(pos, len);
    markings.push(marking);
    markings
}

#[derive(Debug, Clone)]
pub struct PrecisionReport {
    pub value: f64,
    pub skipped_traces: usize,
}

/// Escaping-edges precision over aligned prefixes: at each prefix state the
/// contribution is `|observed ∩ allowed| / |allowed|`, frequency-weighted.
/// Trace ends observe the end marker; states allowing nothing are skipped.
pub fn precision_detailed(
    net: &PetriNet,
    log: &EventLog,
    opts: &AlignmentOptions,
) -> PrecisionReport {
    let variant_list = variants(log);

    // observed continuations per prefix, shared across variants
    let mut observed: BTreeMap<&[String], BTreeSet<String>> = BTreeMap::new();
    for (labels, _) in &variant_list {
        for j in 0..=labels.len() {
            let entry = observed.entry(&labels[..j]).or_default();
            match labels.get(j) {
                Some(next) => {
                    entry.insert(next.clone());
                }
                None => {
                    entry.insert(END_LABEL.to_owned());
                }
            }
        }
    }

    let mut acc = 0.0;
    let mut denom = 0.0;
    let mut skipped_traces = 0usize;
    for (labels, count) in &variant_list {
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let alignment = match align_trace(net, &refs, opts) {
            Ok(a) => a,
            Err(_) => {
                skipped_traces += count;
                continue;
            }
        };
        let markings = prefix_markings(net, &alignment, labels.len());
        for (j, marking) in markings.iter().enumerate() {
            let allowed = allowed_continuations(net, marking);
            if allowed.is_empty() {
                continue;
            }
            let obs = &observed[&labels[..j]];
            let hit = obs.intersection(&allowed).count();
            acc += *count as f64 * hit as f64 / allowed.len() as f64;
            denom += *count as f64;
        }
    }
    PrecisionReport {
        value: if denom == 0.0 { 1.0 } else { acc / denom },
        skipped_traces,
    }
}

pub fn precision(net: &PetriNet, log: &EventLog) -> f64 {
    precision_detailed(net, log, &AlignmentOptions::default()).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{EventInstance, Trace};
    use crate::petri::{sequential_net, PetriNetBuilder};

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
    fn aligned_generating_log_is_perfectly_fit() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = log_of(&[&["a", "b", "c"]]);
        assert_eq!(fitness(&net, &log), 1.0);
    }

    #[test]
    fn skipping_one_model_step_costs_one_fifth() {
        // trace <a, c> on a->b->c: one model move; worst = 2 + 3 = 5
        let net = sequential_net(&["a", "b", "c"]);
        let log = log_of(&[&["a", "c"]]);
        let alignment = align_trace(&net, &["a", "c"], &AlignmentOptions::default()).unwrap();
        assert_eq!(alignment.cost, 1);
        assert_eq!(fitness(&net, &log), 1.0 - 1.0 / 5.0);
    }

    #[test]
    fn disjoint_alphabet_has_zero_fitness() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = log_of(&[&["x", "y"]]);
        // cost = 2 log moves + 3 model moves = worst cost
        assert_eq!(fitness(&net, &log), 0.0);
    }

    #[test]
    fn alignment_handles_silent_routing() {
        // source -> tau -> p -> a -> sink
        let mut b = PetriNetBuilder::new();
        let src = b.add_place("source");
        let p = b.add_place("p");
        let sink = b.add_place("sink");
        b.add_transition(None, vec![src], vec![p]);
        b.add_transition(Some("a"), vec![p], vec![sink]);
        b.mark_initial(src, 1);
        b.mark_final(sink, 1);
        let net = b.build().unwrap();
        let alignment = align_trace(&net, &["a"], &AlignmentOptions::default()).unwrap();
        assert_eq!(alignment.cost, 0);
    }

    #[test]
    fn budget_exhaustion_falls_back_to_token_replay() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = log_of(&[&["a", "b", "c"]]);
        let report = fitness_detailed(&net, &log, &AlignmentOptions { max_states: 1 });
        assert_eq!(report.fallback_traces, 1);
        assert!(report.value > 0.9, "conformant token replay stays high: {}", report.value);
    }

    #[test]
    fn precision_of_linear_net_on_own_log() {
        let net = sequential_net(&["a", "b", "c"]);
        let log = log_of(&[&["a", "b", "c"]]);
        assert_eq!(precision(&net, &log), 1.0);
    }

    #[test]
    fn precision_of_flower_net_is_low() {
        // one marked place, four self-looping labeled transitions
        let mut b = PetriNetBuilder::new();
        let p = b.add_place("center");
        for l in ["a", "b", "c", "d"] {
            b.add_transition(Some(l), vec![p], vec![p]);
        }
        b.mark_initial(p, 1);
        b.mark_final(p, 1);
        let net = b.build().unwrap();
        let log = log_of(&[&["a", "b", "c", "d"]]);
        // every prefix state allows 4 labels + END and observes exactly 1
        assert!((precision(&net, &log) - 0.2).abs() < 1e-12);
        assert_eq!(fitness(&net, &log), 1.0);
    }

    #[test]
    fn precision_one_when_xor_branches_all_exercised() {
        // a then XOR(b, c)
        let mut builder = PetriNetBuilder::new();
        let src = builder.add_place("source");
        let mid = builder.add_place("mid");
        let sink = builder.add_place("sink");
        builder.add_transition(Some("a"), vec![src], vec![mid]);
        builder.add_transition(Some("b"), vec![mid], vec![sink]);
        builder.add_transition(Some("c"), vec![mid], vec![sink]);
        builder.mark_initial(src, 1);
        builder.mark_final(sink, 1);
        let net = builder.build().unwrap();
        let log = log_of(&[&["a", "b"], &["a", "c"]]);
        assert_eq!(precision(&net, &log), 1.0);
    }

    #[test]
    fn metrics_invariant_under_trace_reordering() {
        let net = sequential_net(&["a", "b", "c"]);
        let log1 = log_of(&[&["a", "b", "c"], &["a", "c"], &["b", "c"]]);
        let log2 = log_of(&[&["b", "c"], &["a", "b", "c"], &["a", "c"]]);
        assert_eq!(fitness(&net, &log1), fitness(&net, &log2));
        assert_eq!(precision(&net, &log1), precision(&net, &log2));
    }
}
