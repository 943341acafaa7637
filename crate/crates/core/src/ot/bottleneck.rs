//! Bottleneck (`p = ∞`) transport: smallest threshold `t` such that a
//! coupling supported on cells of cost `≤ t` exists.

use std::collections::VecDeque;

use crate::scalar::Scalar;

/// Distinct finite costs in increasing order.
pub(crate) fn thresholds<T: Scalar>(cost: &[T]) -> Vec<T> {
    let mut t: Vec<T> = cost.to_vec();
    t.sort_by(|a, b| a.partial_cmp(b).expect("finite costs"));
    t.dedup();
    t
}

/// Smallest index into `levels` for which `feasible` holds, assuming
/// monotonicity and that the last level is feasible.
pub(crate) fn lowest_feasible<T, F>(levels: &[T], mut feasible: F) -> usize
where
    F: FnMut(&T) -> bool,
{
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if feasible(&levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Whether supplies can be routed to demands over the allowed cells.
///
/// Max flow by shortest augmenting paths (Edmonds–Karp) on the network
/// source → rows → columns → sink; allowed cells have unbounded capacity.
pub(crate) fn feasible<T: Scalar>(supply: &[T], demand: &[T], allowed: &[bool]) -> bool {
    let m = supply.len();
    let n = demand.len();
    let tol = T::lit(T::OPT_TOL);
    let eps = T::lit(T::ZERO_TOL);
    let mut row_res: Vec<T> = supply.to_vec(); // residual source → row
    let mut col_res: Vec<T> = demand.to_vec(); // residual column → sink
    let mut flow = vec![T::zero(); m * n]; // row → column flow (reverse residual)
    let mut total = T::zero();
    loop {
        // BFS over rows/columns; node ids: rows 0..m, columns m..m+n.
        let mut parent: Vec<Option<usize>> = vec![None; m + n];
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::new();
        for i in 0..m {
            if row_res[i] > eps {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        let mut sink_col = None;
        while let Some(node) = queue.pop_front() {
            if node < m {
                let i = node;
                for j in 0..n {
                    if allowed[i * n + j] && !seen[m + j] {
                        seen[m + j] = true;
                        parent[m + j] = Some(i);
                        if col_res[j] > eps {
                            sink_col = Some(j);
                            break;
                        }
                        queue.push_back(m + j);
                    }
                }
                if sink_col.is_some() {
                    break;
                }
            } else {
                let j = node - m;
                for i in 0..m {
                    if !seen[i] && flow[i * n + j] > eps {
                        seen[i] = true;
                        parent[i] = Some(node);
                        queue.push_back(i);
                    }
                }
            }
        }
        let Some(j_end) = sink_col else { break };
        // Bottleneck along the path.
        let mut delta = col_res[j_end];
        let mut node = m + j_end;
        loop {
            let i = parent[node].unwrap();
            match parent[i] {
                None => {
                    delta = delta.min(row_res[i]);
                    break;
                }
                Some(prev_col) => {
                    delta = delta.min(flow[i * n + (prev_col - m)]);
                    node = prev_col;
                }
            }
        }
        // Augment.
        col_res[j_end] -= delta;
        let mut node = m + j_end;
        loop {
            let j = node - m;
            let i = parent[node].unwrap();
            flow[i * n + j] += delta;
            match parent[i] {
                None => {
                    row_res[i] -= delta;
                    break;
                }
                Some(prev_col) => {
                    flow[i * n + (prev_col - m)] -= delta;
                    node = prev_col;
                }
            }
        }
        total += delta;
    }
    total >= T::one() - tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_search_finds_first_true() {
        let levels = [1, 2, 3, 4, 5];
        assert_eq!(lowest_feasible(&levels, |&x| x >= 3), 2);
        assert_eq!(lowest_feasible(&levels, |_| true), 0);
        assert_eq!(lowest_feasible(&[7], |_| true), 0);
    }

    #[test]
    fn flow_feasibility() {
        let s = [0.5, 0.5];
        let d = [0.5, 0.5];
        assert!(feasible(&s, &d, &[true, false, false, true]));
        assert!(!feasible(&s, &d, &[true, true, false, false]));
        // Requires rerouting through a reverse edge.
        let s = [0.5, 0.5];
        let d = [0.5, 0.5];
        assert!(feasible(&s, &d, &[true, true, true, false]));
    }
}
