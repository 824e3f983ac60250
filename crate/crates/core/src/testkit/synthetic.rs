//! Seeded synthetic nets, logs, and score sets for the property and
//! acceptance suites.
//!
//! The interleaved-pair generators model the "lab measurements in rapid
//! alternation" pattern: each block runs one label pair in strict alternation
//! (either order, three or four repetitions), bracketed by separator
//! activities. Both directed follow probabilities of such a pair sit well
//! above 0.8, so the pair merges at the shipped threshold.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::event_log::{generate_log, EventInstance, EventLog, GapDistribution, Trace};
use crate::petri::{PetriNet, PetriNetBuilder, PlaceId};

const LABEL_POOL: [&str; 5] = ["a", "b", "c", "d", "e"];

/// Random log over at most `max_labels` labels; trace lengths in 1..=max_len.
pub fn random_log(seed: u64, max_labels: usize, max_traces: usize, max_len: usize) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_labels = rng.gen_range(1..=max_labels.min(LABEL_POOL.len()));
    let n_traces = rng.gen_range(1..=max_traces);
    let traces = (0..n_traces)
        .map(|i| {
            let len = rng.gen_range(1..=max_len);
            let events = (0..len)
                .map(|j| {
                    let label = LABEL_POOL[rng.gen_range(0..n_labels)];
                    EventInstance::new(label, (j as i64 + 1) * 10)
                })
                .collect();
            Trace {
                case_id: format!("case_{i}"),
                events,
            }
        })
        .collect();
    EventLog::new(traces).expect("unique case ids")
}

/// Random label sequence for alignment instances; may include the
/// out-of-alphabet label `z`.
pub fn random_trace_labels(seed: u64, max_len: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = ["a", "b", "c", "d", "z"];
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| pool[rng.gen_range(0..pool.len())].to_owned())
        .collect()
}

/// AND block over the given labels, then nothing: source -> split -> labels
/// in parallel -> join -> sink.
pub fn and_block_net(labels: &[&str]) -> PetriNet {
    let mut b = PetriNetBuilder::new();
    let src = b.add_place("source");
    let sink = b.add_place("sink");
    let mut branch_in = Vec::new();
    let mut branch_out = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let p_in = b.add_place(format!("in{i}"));
        let p_out = b.add_place(format!("out{i}"));
        b.add_transition(Some(label), vec![p_in], vec![p_out]);
        branch_in.push(p_in);
        branch_out.push(p_out);
    }
    b.add_transition(None, vec![src], branch_in);
    b.add_transition(None, branch_out, vec![sink]);
    b.mark_initial(src, 1);
    b.mark_final(sink, 1);
    b.build().expect("and block is valid")
}

/// One of five small workflow shapes (chain, XOR, AND combinations),
/// all with at most six transitions.
pub fn random_workflow_net(seed: u64) -> PetriNet {
    let mut b = PetriNetBuilder::new();
    let src = b.add_place("source");
    match seed % 5 {
        0 => {
            // a -> b -> c
            let p1 = b.add_place("p1");
            let p2 = b.add_place("p2");
            let sink = b.add_place("sink");
            b.add_transition(Some("a"), vec![src], vec![p1]);
            b.add_transition(Some("b"), vec![p1], vec![p2]);
            b.add_transition(Some("c"), vec![p2], vec![sink]);
            b.mark_final(sink, 1);
        }
        1 => {
            // a then XOR(b, c)
            let mid = b.add_place("mid");
            let sink = b.add_place("sink");
            b.add_transition(Some("a"), vec![src], vec![mid]);
            b.add_transition(Some("b"), vec![mid], vec![sink]);
            b.add_transition(Some("c"), vec![mid], vec![sink]);
            b.mark_final(sink, 1);
        }
        2 => {
            // AND(a, b) then c
            let pa = b.add_place("pa");
            let pb = b.add_place("pb");
            let qa = b.add_place("qa");
            let qb = b.add_place("qb");
            let joined = b.add_place("joined");
            let sink = b.add_place("sink");
            b.add_transition(None, vec![src], vec![pa, pb]);
            b.add_transition(Some("a"), vec![pa], vec![qa]);
            b.add_transition(Some("b"), vec![pb], vec![qb]);
            b.add_transition(None, vec![qa, qb], vec![joined]);
            b.add_transition(Some("c"), vec![joined], vec![sink]);
            b.mark_final(sink, 1);
        }
        3 => {
            // XOR(a, b) then c
            let mid = b.add_place("mid");
            let sink = b.add_place("sink");
            b.add_transition(Some("a"), vec![src], vec![mid]);
            b.add_transition(Some("b"), vec![src], vec![mid]);
            b.add_transition(Some("c"), vec![mid], vec![sink]);
            b.mark_final(sink, 1);
        }
        _ => {
            // a then AND(b, c)
            let mid = b.add_place("mid");
            let pb = b.add_place("pb");
            let pc = b.add_place("pc");
            let qb = b.add_place("qb");
            let qc = b.add_place("qc");
            let sink = b.add_place("sink");
            b.add_transition(Some("a"), vec![src], vec![mid]);
            b.add_transition(None, vec![mid], vec![pb, pc]);
            b.add_transition(Some("b"), vec![pb], vec![qb]);
            b.add_transition(Some("c"), vec![pc], vec![qc]);
            b.add_transition(None, vec![qb, qc], vec![sink]);
            b.mark_final(sink, 1);
        }
    }
    b.mark_initial(src, 1);
    b.build().expect("shape is valid")
}

/// Wire one alternation block for pair (a, b) between `entry` and `exit`:
/// an exclusive choice of starting label, three strict alternation rounds,
/// and an optional fourth.
fn add_alternation_block(
    b: &mut PetriNetBuilder,
    entry: PlaceId,
    exit: PlaceId,
    a: &str,
    second: &str,
    tag: &str,
) {
    for (lane, (first, then)) in [(a, second), (second, a)].iter().enumerate() {
        let mut current = b.add_place(format!("{tag}_l{lane}_0"));
        b.add_transition(None, vec![entry], vec![current]);
        for rep in 0..3 {
            let mid = b.add_place(format!("{tag}_l{lane}_{rep}m"));
            b.add_transition(Some(first), vec![current], vec![mid]);
            let next = b.add_place(format!("{tag}_l{lane}_{rep}e"));
            b.add_transition(Some(then), vec![mid], vec![next]);
            current = next;
        }
        // optional fourth repetition
        b.add_transition(None, vec![current], vec![exit]);
        let mid = b.add_place(format!("{tag}_l{lane}_xm"));
        b.add_transition(Some(first), vec![current], vec![mid]);
        let last = b.add_place(format!("{tag}_l{lane}_xe"));
        b.add_transition(Some(then), vec![mid], vec![last]);
        b.add_transition(None, vec![last], vec![exit]);
    }
}

/// Chain of alternation blocks separated by `s{i}` activities; one block per
/// label pair.
pub fn interleaved_net(pairs: &[(String, String)]) -> PetriNet {
    let mut b = PetriNetBuilder::new();
    let src = b.add_place("source");
    b.mark_initial(src, 1);
    let mut current = src;
    for (i, (first, second)) in pairs.iter().enumerate() {
        let entry = b.add_place(format!("blk{i}_in"));
        b.add_transition(Some(&format!("s{i}")), vec![current], vec![entry]);
        let exit = b.add_place(format!("blk{i}_out"));
        add_alternation_block(&mut b, entry, exit, first, second, &format!("blk{i}"));
        current = exit;
    }
    let sink = b.add_place("sink");
    b.add_transition(Some(&format!("s{}", pairs.len())), vec![current], vec![sink]);
    b.mark_final(sink, 1);
    b.build().expect("interleaved net is valid")
}

/// Swap two labels in some traces and occasionally drop an event.
pub fn perturb_traces(log: &mut EventLog, fraction: f64, rng: &mut ChaCha8Rng) {
    let n = log.traces.len();
    let n_noise = (fraction * n as f64).ceil() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);
    for &idx in indices.iter().take(n_noise.min(n)) {
        let trace = &mut log.traces[idx];
        let len = trace.events.len();
        if len >= 2 {
            let i = rng.gen_range(0..len);
            let j = rng.gen_range(0..len);
            if i != j {
                let li = trace.events[i].label.clone();
                let lj = trace.events[j].label.clone();
                trace.events[i].label = lj;
                trace.events[j].label = li;
            }
        }
        if len > 3 && rng.gen_bool(0.5) {
            let drop = rng.gen_range(0..trace.events.len());
            trace.events.remove(drop);
        }
    }
    *log = EventLog::new(std::mem::take(&mut log.traces)).expect("case ids unchanged");
}

/// Seeded log from a net of `n_pairs` fully interleaved pairs plus a noise
/// fraction of perturbed traces.
pub fn noisy_interleaved_log(
    seed: u64,
    n_pairs: usize,
    n_traces: usize,
    noise_fraction: f64,
) -> EventLog {
    let pairs: Vec<(String, String)> = (0..n_pairs)
        .map(|i| (format!("p{i}a"), format!("p{i}b")))
        .collect();
    let net = interleaved_net(&pairs);
    let mut log = generate_log(
        &net,
        n_traces,
        seed,
        GapDistribution::UniformMs { min: 10, max: 500 },
    )
    .expect("interleaved net plays out");
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e3779b9));
    perturb_traces(&mut log, noise_fraction, &mut rng);
    log
}

/// Exclusive choice between two interleaved-pair branches; the outcome to
/// predict is which branch a case followed.
pub fn outcome_task_net() -> PetriNet {
    let mut b = PetriNetBuilder::new();
    let src = b.add_place("source");
    b.mark_initial(src, 1);
    let entry = b.add_place("entry");
    b.add_transition(Some("s0"), vec![src], vec![entry]);
    let join = b.add_place("join");

    for (tag, first, second) in [("bra", "a1", "a2"), ("brb", "b1", "b2")] {
        let branch_in = b.add_place(format!("{tag}_in"));
        b.add_transition(None, vec![entry], vec![branch_in]);
        let branch_out = b.add_place(format!("{tag}_out"));
        add_alternation_block(&mut b, branch_in, branch_out, first, second, tag);
        b.add_transition(None, vec![branch_out], vec![join]);
    }
    let sink = b.add_place("sink");
    b.add_transition(Some("s1"), vec![join], vec![sink]);
    b.mark_final(sink, 1);
    b.build().expect("outcome net is valid")
}

/// Log plus the per-case outcome: "pos" for branch A cases, "neg" otherwise.
pub fn outcome_task_log(
    seed: u64,
    n_traces: usize,
    noise_fraction: f64,
) -> (EventLog, BTreeMap<String, String>) {
    let net = outcome_task_net();
    let mut log = generate_log(
        &net,
        n_traces,
        seed,
        GapDistribution::UniformMs { min: 10, max: 500 },
    )
    .expect("outcome net plays out");
    if noise_fraction > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5bd1e995));
        perturb_traces(&mut log, noise_fraction, &mut rng);
    }
    let outcomes = log
        .traces
        .iter()
        .map(|t| {
            let followed_a = t.events.iter().any(|e| e.label.starts_with("a"));
            let label = if followed_a { "pos" } else { "neg" };
            (t.case_id.clone(), label.to_owned())
        })
        .collect();
    (log, outcomes)
}

/// Random non-zero paired differences with deliberate magnitude ties.
pub fn random_diffs(seed: u64, min_n: usize, max_n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(min_n..=max_n);
    let magnitudes = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    (0..n)
        .map(|_| {
            let m = magnitudes[rng.gen_range(0..magnitudes.len())];
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect()
}

/// Scores from two unit-variance normals `separation` apart, labels true for
/// the shifted class.
pub fn random_scores(
    seed: u64,
    n_pos: usize,
    n_neg: usize,
    separation: f64,
) -> (Vec<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move |mean: f64| {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen::<f64>();
        mean + (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut scores = Vec::with_capacity(n_pos + n_neg);
    let mut labels = Vec::with_capacity(n_pos + n_neg);
    for _ in 0..n_pos {
        scores.push(normal(separation));
        labels.push(true);
    }
    for _ in 0..n_neg {
        scores.push(normal(0.0));
        labels.push(false);
    }
    (scores, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concat::plan_concatenation;
    use crate::petri::replay_trace;
    use crate::relations::DirectlyFollowsGraph;

    #[test]
    fn interleaved_net_plays_out_alternation() {
        let pairs = vec![("x".to_string(), "y".to_string())];
        let net = interleaved_net(&pairs);
        let log = generate_log(&net, 20, 5, GapDistribution::FixedMs(10)).unwrap();
        for trace in &log.traces {
            let labels = trace.labels();
            assert_eq!(labels[0], "s0");
            assert_eq!(*labels.last().unwrap(), "s1");
            // strict alternation between x and y inside the block
            let inner = &labels[1..labels.len() - 1];
            assert!(inner.len() == 6 || inner.len() == 8, "len {}", inner.len());
            for w in inner.windows(2) {
                assert_ne!(w[0], w[1]);
            }
        }
    }

    #[test]
    fn generated_traces_replay_conformantly() {
        let pairs = vec![
            ("p0a".to_string(), "p0b".to_string()),
            ("p1a".to_string(), "p1b".to_string()),
        ];
        let net = interleaved_net(&pairs);
        let log = generate_log(&net, 10, 3, GapDistribution::FixedMs(10)).unwrap();
        for trace in &log.traces {
            let result = replay_trace(&net, trace).unwrap();
            assert_eq!(result.forced_firings, 0);
            assert_eq!(result.missing_tokens, 0);
            assert_eq!(&result.final_marking, net.final_marking());
        }
    }

    #[test]
    fn interleaved_pairs_exceed_default_threshold() {
        let log = noisy_interleaved_log(11, 2, 30, 0.1);
        let dfg = DirectlyFollowsGraph::from_log(&log);
        for pair in [("p0a", "p0b"), ("p1a", "p1b")] {
            let fwd = dfg.follow_probability(pair.0, pair.1).unwrap();
            let bwd = dfg.follow_probability(pair.1, pair.0).unwrap();
            assert!(fwd > 0.7, "P({} -> {}) = {fwd}", pair.0, pair.1);
            assert!(bwd > 0.7, "P({} -> {}) = {bwd}", pair.1, pair.0);
        }
        let plan = plan_concatenation(&log, 0.7);
        assert_eq!(plan.merged_pairs().len(), 2);
    }

    #[test]
    fn outcome_task_has_both_classes() {
        let (log, outcomes) = outcome_task_log(3, 60, 0.0);
        assert_eq!(outcomes.len(), log.traces.len());
        let pos = outcomes.values().filter(|v| *v == "pos").count();
        assert!(pos > 10 && pos < 50, "positives: {pos}");
    }

    #[test]
    fn random_log_is_deterministic() {
        let l1 = random_log(7, 5, 20, 8);
        let l2 = random_log(7, 5, 20, 8);
        assert_eq!(l1, l2);
    }
}
