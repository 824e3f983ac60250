//! Independent brute-force oracles. None of these share logic with the
//! implementations they check: alignments are enumerated depth-first instead
//! of best-first, the Wilcoxon distribution is enumerated over all 2^n sign
//! assignments instead of the subset-sum polynomial, and concurrency is a
//! direct trace scan instead of a DFG query.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::event_log::EventLog;
use crate::metrics;
use crate::petri::{Marking, PetriNet, TransitionId};
use crate::testkit::{OracleBudget, TestkitError};

/// Concurrent pairs by direct adjacency scan over every trace.
pub fn scan_concurrent_pairs(log: &EventLog) -> BTreeSet<(String, String)> {
    let mut forward: BTreeSet<(String, String)> = BTreeSet::new();
    for trace in &log.traces {
        for pair in trace.events.windows(2) {
            forward.insert((pair[0].label.clone(), pair[1].label.clone()));
        }
    }
    let mut pairs = BTreeSet::new();
    for (a, b) in &forward {
        if a < b && forward.contains(&(b.clone(), a.clone())) {
            pairs.insert((a.clone(), b.clone()));
        }
    }
    pairs
}

/// Labels immediately repeating somewhere in the log.
pub fn scan_self_loops(log: &EventLog) -> BTreeSet<String> {
    let mut labels = BTreeSet::new();
    for trace in &log.traces {
        for pair in trace.events.windows(2) {
            if pair[0].label == pair[1].label {
                labels.insert(pair[0].label.clone());
            }
        }
    }
    labels
}

/// Minimal alignment cost by exhaustive depth-first enumeration with
/// branch-and-bound pruning over (position, marking) states.
pub fn brute_alignment(
    net: &PetriNet,
    labels: &[&str],
    budget: &OracleBudget,
) -> Result<u32, TestkitError> {
    struct Search<'a> {
        net: &'a PetriNet,
        labels: &'a [&'a str],
        best: u32,
        memo: HashMap<(usize, Marking), u32>,
        steps: usize,
        max_steps: usize,
    }

    impl Search<'_> {
        fn dfs(&mut self, pos: usize, marking: &Marking, cost: u32) -> Result<(), TestkitError> {
            self.steps += 1;
            if self.steps > self.max_steps {
                return Err(TestkitError::BudgetExceeded(format!(
                    "alignment enumeration past {} steps",
                    self.max_steps
                )));
            }
            if cost >= self.best {
                return Ok(());
            }
            if pos == self.labels.len() && marking == self.net.final_marking() {
                self.best = cost;
                return Ok(());
            }
            let key = (pos, marking.clone());
            if let Some(&seen) = self.memo.get(&key) {
                if seen <= cost {
                    return Ok(());
                }
            }
            self.memo.insert(key, cost);

            if pos < self.labels.len() {
                self.dfs(pos + 1, marking, cost + 1)?;
            }
            for t in self.net.enabled(marking) {
                let fired = self.net.fire(marking, t).expect("enabled");
                match &self.net.transition(t).label {
                    None => self.dfs(pos, &fired, cost)?,
                    Some(label) => {
                        if pos < self.labels.len() && label == self.labels[pos] {
                            self.dfs(pos + 1, &fired, cost)?;
                        }
                        self.dfs(pos, &fired, cost + 1)?;
                    }
                }
            }
            Ok(())
        }
    }

    let mut search = Search {
        net,
        labels,
        best: u32::MAX,
        memo: HashMap::new(),
        steps: 0,
        max_steps: budget.max_states,
    };
    search.dfs(0, net.initial_marking(), 0)?;
    if search.best == u32::MAX {
        return Err(TestkitError::BudgetExceeded(
            "no alignment found within budget".into(),
        ));
    }
    Ok(search.best)
}

/// All markings reachable from the initial marking, by plain BFS.
pub fn brute_reachability(
    net: &PetriNet,
    budget: &OracleBudget,
) -> Result<BTreeSet<Marking>, TestkitError> {
    let mut seen: BTreeSet<Marking> = BTreeSet::new();
    let mut queue: VecDeque<Marking> = VecDeque::new();
    seen.insert(net.initial_marking().clone());
    queue.push_back(net.initial_marking().clone());
    while let Some(m) = queue.pop_front() {
        if seen.len() > budget.max_states {
            return Err(TestkitError::BudgetExceeded(format!(
                "more than {} reachable markings",
                budget.max_states
            )));
        }
        for t in net.enabled(&m) {
            let next = net.fire(&m, t).expect("enabled");
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}

/// Soundness summary from exhaustive state-space exploration.
#[derive(Debug, Clone)]
pub struct SoundnessReport {
    pub reachable_markings: usize,
    /// Transitions never enabled in any reachable marking.
    pub dead_transitions: Vec<TransitionId>,
    /// Final marking reachable from every reachable marking.
    pub option_to_complete: bool,
    /// No reachable marking strictly covers the final marking.
    pub proper_completion: bool,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.dead_transitions.is_empty() && self.option_to_complete && self.proper_completion
    }
}

pub fn check_soundness(
    net: &PetriNet,
    budget: &OracleBudget,
) -> Result<SoundnessReport, TestkitError> {
    let reachable = brute_reachability(net, budget)?;
    let markings: Vec<&Marking> = reachable.iter().collect();
    let index: BTreeMap<&Marking, usize> = markings
        .iter()
        .enumerate()
        .map(|(i, m)| (*m, i))
        .collect();

    let mut fired = vec![false; net.transitions().len()];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); markings.len()];
    for (i, m) in markings.iter().enumerate() {
        for t in net.enabled(m) {
            fired[t.0] = true;
            let next = net.fire(m, t).expect("enabled");
            edges[index[&next]].push(i); // reversed, for co-reachability
        }
    }
    let dead_transitions = fired
        .iter()
        .enumerate()
        .filter(|(_, &f)| !f)
        .map(|(i, _)| TransitionId(i))
        .collect();

    let option_to_complete = match index.get(net.final_marking()) {
        None => false,
        Some(&final_idx) => {
            let mut coreach = vec![false; markings.len()];
            coreach[final_idx] = true;
            let mut stack = vec![final_idx];
            while let Some(v) = stack.pop() {
                for &u in &edges[v] {
                    if !coreach[u] {
                        coreach[u] = true;
                        stack.push(u);
                    }
                }
            }
            coreach.iter().all(|&c| c)
        }
    };
    let final_marking = net.final_marking();
    let proper_completion = !markings.iter().any(|m| {
        *m != final_marking
            && m.0
                .iter()
                .zip(&final_marking.0)
                .all(|(&have, &want)| have >= want)
    });
    Ok(SoundnessReport {
        reachable_markings: markings.len(),
        dead_transitions,
        option_to_complete,
        proper_completion,
    })
}

/// Exact two-sided signed-rank p-value by enumerating all 2^n sign
/// assignments over the mid-ranks of |diffs|.
pub fn exact_wilcoxon(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    assert!(n > 0 && n <= 20, "enumeration oracle is for small n");
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    // mid-ranks by sorting positions
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| abs[i].partial_cmp(&abs[j]).expect("finite"));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && abs[order[j + 1]] == abs[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    let observed: f64 = ranks
        .iter()
        .zip(diffs)
        .filter(|(_, &d)| d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let mut count_le = 0u64;
    let mut count_ge = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|&k| mask & (1 << k) != 0)
            .map(|k| ranks[k])
            .sum();
        if w <= observed {
            count_le += 1;
        }
        if w >= observed {
            count_ge += 1;
        }
    }
    let denom = (1u64 << n) as f64;
    (2.0 * count_le.min(count_ge) as f64 / denom).min(1.0)
}

/// Percentile-bootstrap confidence interval for the AUC, by case resampling.
pub fn bootstrap_auc_ci(
    scores: &[f64],
    labels: &[bool],
    resamples: usize,
    seed: u64,
    level: f64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scores.len();
    let mut aucs = Vec::with_capacity(resamples);
    while aucs.len() < resamples {
        let mut s = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n);
        for _ in 0..n {
            let idx = rng.gen_range(0..n);
            s.push(scores[idx]);
            l.push(labels[idx]);
        }
        // degenerate resamples carry no AUC; redraw
        if let Ok(a) = metrics::auc(&s, &l) {
            aucs.push(a);
        }
    }
    aucs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let alpha = (1.0 - level) / 2.0;
    let pick = |q: f64| {
        let idx = ((aucs.len() as f64 * q).ceil() as usize).clamp(1, aucs.len()) - 1;
        aucs[idx]
    };
    (pick(alpha), pick(1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::sequential_net;
    use crate::testkit::synthetic;

    #[test]
    fn brute_alignment_generating_trace_is_free() {
        let net = sequential_net(&["a", "b", "c"]);
        let cost = brute_alignment(&net, &["a", "b", "c"], &OracleBudget::default()).unwrap();
        assert_eq!(cost, 0);
    }

    #[test]
    fn brute_alignment_skip_costs_one() {
        let net = sequential_net(&["a", "b", "c"]);
        let cost = brute_alignment(&net, &["a", "c"], &OracleBudget::default()).unwrap();
        assert_eq!(cost, 1);
    }

    #[test]
    fn brute_alignment_disjoint_alphabet() {
        let net = sequential_net(&["a", "b"]);
        // n log moves + m model moves
        let cost = brute_alignment(&net, &["x", "y", "z"], &OracleBudget::default()).unwrap();
        assert_eq!(cost, 5);
    }

    #[test]
    fn reachability_chain_has_n_plus_one_markings() {
        let net = sequential_net(&["a", "b", "c"]);
        let set = brute_reachability(&net, &OracleBudget::default()).unwrap();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn reachability_and_block_interleavings() {
        let net = synthetic::and_block_net(&["a", "b"]);
        let set = brute_reachability(&net, &OracleBudget::default()).unwrap();
        // src; split; a-done; b-done; both-done; sink
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn reachability_budget_triggers_on_unbounded_net() {
        let mut b = crate::petri::PetriNetBuilder::new();
        let p = b.add_place("p");
        b.add_transition(Some("grow"), vec![p], vec![p, p]);
        b.mark_initial(p, 1);
        b.mark_final(p, 1);
        let net = b.build().unwrap();
        let tight = OracleBudget {
            max_states: 50,
            ..OracleBudget::default()
        };
        assert!(matches!(
            brute_reachability(&net, &tight),
            Err(TestkitError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn soundness_of_chain_and_block() {
        let budget = OracleBudget::default();
        assert!(check_soundness(&sequential_net(&["a", "b"]), &budget)
            .unwrap()
            .is_sound());
        assert!(check_soundness(&synthetic::and_block_net(&["a", "b"]), &budget)
            .unwrap()
            .is_sound());
    }

    #[test]
    fn exact_wilcoxon_dominated_n6() {
        let p = exact_wilcoxon(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!((p - 0.03125).abs() < 1e-12);
    }

    #[test]
    fn exact_wilcoxon_symmetric_is_one() {
        let p = exact_wilcoxon(&[1.5, -1.5, 2.5, -2.5, 3.5, -3.5]);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn bootstrap_interval_brackets_point_auc() {
        let (scores, labels) = synthetic::random_scores(1, 40, 40, 1.0);
        let auc = metrics::auc(&scores, &labels).unwrap();
        let (lo, hi) = bootstrap_auc_ci(&scores, &labels, 500, 2, 0.95);
        assert!(lo <= auc && auc <= hi);
    }
}
