//! Gate and qubit budgets for the proposed pipeline and the two-stage baseline.
//!
//! Every block is charged its big-O bookkeeping constant with unit cost per
//! qubit, so the totals are the closed forms `3n² + 33n` and `5n² + 98n`.

use crate::filter::count_filter_gates;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub n: u64,
    pub per_block: Vec<(String, u64)>,
    pub total: u64,
    pub qubits: u64,
}

impl CostReport {
    fn from_blocks(n: u64, m: u64, blocks: Vec<(&str, u64)>) -> Self {
        let total = blocks.iter().map(|(_, g)| g).sum();
        Self {
            n,
            per_block: blocks.into_iter().map(|(k, g)| (k.to_string(), g)).collect(),
            total,
            qubits: 1 + 2 * n + m,
        }
    }

    pub fn block(&self, name: &str) -> Option<u64> {
        self.per_block.iter().find(|(k, _)| k == name).map(|(_, g)| *g)
    }
}

/// Two phase estimations, the filter, the controlled flip and the inverse
/// of filter plus estimation.
pub fn cost_proposed(n: u64, m: u64) -> CostReport {
    let pe = n * n;
    let filter = count_filter_gates(n);
    CostReport::from_blocks(
        n,
        m,
        vec![
            ("PE1", pe),
            ("U_lambda_tau", filter),
            ("CU", n),
            ("U_dagger", pe + filter),
            ("PE2", pe),
        ],
    )
}

/// Three phase estimations, two Newton-based filters of `24n` each, two
/// `Ry(α)` rotations and two inverse blocks.
pub fn cost_baseline(n: u64, m: u64) -> CostReport {
    let newton = 24 * n;
    CostReport::from_blocks(
        n,
        m,
        vec![
            ("PE_x3", 3 * n * n),
            ("U_sigma_tau", newton),
            ("U_sigma_tau_prime", newton),
            ("Ry_alpha_x2", 2 * n),
            ("U_dagger_x2", 2 * (n * n + newton)),
        ],
    )
}

/// Proposed over baseline gate count; approaches 3/5 from below.
pub fn gate_ratio(n: u64) -> f64 {
    cost_proposed(n, 0).total as f64 / cost_baseline(n, 0).total as f64
}
