//! Brute-force oracles and seeded synthetic generators backing the property
//! and acceptance suites. Compiled into the library so `procat self-check`
//! can run the full oracle suite outside the test harness.

pub mod oracles;
pub mod synthetic;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TestkitError {
    #[error("oracle budget exceeded ({0})")]
    BudgetExceeded(String),
}

/// Caps for exhaustive enumeration; keep these desk-scale.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub max_states: usize,
    pub max_trace_len: usize,
    pub max_labels: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_states: 200_000,
            max_trace_len: 8,
            max_labels: 5,
        }
    }
}

/// One line of the self-check table.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Run every oracle against its production counterpart on deterministic
/// instances. Reduced sizes compared to the acceptance suite, so this stays
/// interactive.
pub fn self_check() -> Vec<CheckOutcome> {
    use crate::metrics;
    use crate::relations::DirectlyFollowsGraph;

    let mut results = Vec::new();
    let budget = OracleBudget::default();

    // relations vs exhaustive pair scan
    {
        let mut mismatches = 0;
        for seed in 0..100u64 {
            let log = synthetic::random_log(seed, budget.max_labels, 20, budget.max_trace_len);
            let dfg = DirectlyFollowsGraph::from_log(&log);
            let fast: std::collections::BTreeSet<(String, String)> = dfg
                .concurrent_pairs()
                .into_iter()
                .map(|p| (p.first, p.second))
                .collect();
            if fast != oracles::scan_concurrent_pairs(&log)
                || dfg.self_loop_labels() != oracles::scan_self_loops(&log)
            {
                mismatches += 1;
            }
        }
        results.push(CheckOutcome {
            name: "relations-oracle",
            passed: mismatches == 0,
            detail: format!("{mismatches} mismatches over 100 random logs"),
        });
    }

    // alignment search vs exhaustive enumeration
    {
        let mut mismatches = 0;
        let mut checked = 0;
        for seed in 0..50u64 {
            let net = synthetic::random_workflow_net(seed);
            let trace = synthetic::random_trace_labels(seed.wrapping_add(1000), 8);
            let refs: Vec<&str> = trace.iter().map(String::as_str).collect();
            let searched =
                metrics::align_trace(&net, &refs, &metrics::AlignmentOptions::default());
            let brute = oracles::brute_alignment(&net, &refs, &budget);
            if let (Ok(a), Ok(b)) = (searched, brute) {
                checked += 1;
                if a.cost != b {
                    mismatches += 1;
                }
            }
        }
        results.push(CheckOutcome {
            name: "alignment-oracle",
            passed: mismatches == 0 && checked > 0,
            detail: format!("{mismatches} mismatches over {checked} instances"),
        });
    }

    // reachability on known nets
    {
        let chain = crate::petri::sequential_net(&["a", "b", "c"]);
        let chain_ok = oracles::brute_reachability(&chain, &budget)
            .map(|set| set.len() == 4)
            .unwrap_or(false);
        let parallel = synthetic::and_block_net(&["a", "b"]);
        let parallel_ok = oracles::brute_reachability(&parallel, &budget)
            .map(|set| set.len() == 6)
            .unwrap_or(false);
        results.push(CheckOutcome {
            name: "reachability-known-nets",
            passed: chain_ok && parallel_ok,
            detail: format!("chain markings ok: {chain_ok}, and-block ok: {parallel_ok}"),
        });
    }

    // wilcoxon exact path vs enumeration
    {
        let mut mismatches = 0;
        for seed in 0..50u64 {
            let diffs = synthetic::random_diffs(seed, 5, 10);
            let dp = metrics::wilcoxon_exact_p(&diffs).expect("enough pairs");
            let enumerated = oracles::exact_wilcoxon(&diffs);
            if (dp - enumerated).abs() > 1e-12 {
                mismatches += 1;
            }
        }
        let n6 = oracles::exact_wilcoxon(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let n6_ok = (n6 - 0.03125).abs() < 1e-12;
        results.push(CheckOutcome {
            name: "wilcoxon-oracle",
            passed: mismatches == 0 && n6_ok,
            detail: format!("{mismatches} mismatches; n=6 dominated case ok: {n6_ok}"),
        });
    }

    // DeLong vs percentile bootstrap
    {
        let mut worst: f64 = 0.0;
        for seed in 0..3u64 {
            let (scores, labels) = synthetic::random_scores(seed, 40, 40, 1.2);
            let report = metrics::delong_ci(&scores, &labels, 0.95).expect("valid labels");
            let (lo, hi) = oracles::bootstrap_auc_ci(&scores, &labels, 2000, seed, 0.95);
            worst = worst.max((report.ci_low - lo).abs()).max((report.ci_high - hi).abs());
        }
        results.push(CheckOutcome {
            name: "delong-vs-bootstrap",
            passed: worst < 0.05,
            detail: format!("max CI endpoint gap {worst:.4}"),
        });
    }

    // gradient check
    {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![0.2 + 0.1 * i as f64, 0.9 - 0.07 * i as f64])
            .collect();
        let targets: Vec<usize> = (0..8).map(|i| i % 2).collect();
        let config = crate::predictor::MlpConfig::softmax_regression(2, 3);
        let err = crate::predictor::gradient_check(&config, &rows, &targets).unwrap_or(f64::MAX);
        results.push(CheckOutcome {
            name: "gradient-check",
            passed: err < 1e-6,
            detail: format!("max relative error {err:.2e}"),
        });
    }

    results
}
