//! Square linear assignment.
//!
//! [`solve`] is the O(k³) shortest-augmenting-path form of the Hungarian
//! method with dual potentials. [`lex_min`] returns the lexicographically
//! smallest optimal assignment, which is what branch matching uses so that
//! ties between coincident atoms always resolve the same way.

/// Optimal assignment of a `k × k` cost matrix given row-major.
///
/// Returns `perm` with `perm[row] = col` and the cost summed in row order.
pub fn solve(cost: &[f64], k: usize) -> (Vec<usize>, f64) {
    debug_assert_eq!(cost.len(), k * k);
    if k == 0 {
        return (Vec::new(), 0.0);
    }
    let inf = f64::INFINITY;
    // 1-based arrays, column 0 is the virtual start column.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; k];
    for j in 1..=k {
        perm[owner[j] - 1] = j - 1;
    }
    let total = row_sum(cost, k, &perm);
    (perm, total)
}

fn row_sum(cost: &[f64], k: usize, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i * k + j]).sum()
}

/// Lexicographically smallest optimal assignment.
///
/// Rows are fixed in order; each row takes the smallest column for which an
/// optimal completion still exists. Completions are compared against the
/// optimum with a relative tolerance of `1e-12`.
pub fn lex_min(cost: &[f64], k: usize) -> (Vec<usize>, f64) {
    let (_, opt) = solve(cost, k);
    let tol = 1e-12 * (1.0 + opt.abs());
    let mut perm = Vec::with_capacity(k);
    let mut free: Vec<usize> = (0..k).collect();
    let mut fixed = 0.0;
    for i in 0..k {
        let rest_rows = k - i - 1;
        let mut chosen = None;
        for (pos, &j) in free.iter().enumerate() {
            let cols: Vec<usize> = free.iter().copied().filter(|&c| c != j).collect();
            let mut sub = Vec::with_capacity(rest_rows * rest_rows);
            for r in (i + 1)..k {
                for &c in &cols {
                    sub.push(cost[r * k + c]);
                }
            }
            let (_, rest) = solve(&sub, rest_rows);
            if fixed + cost[i * k + j] + rest <= opt + tol {
                chosen = Some(pos);
                break;
            }
        }
        // The optimum is always reachable, so the fallback only guards
        // against a non-finite cost entry.
        let pos = chosen.unwrap_or(0);
        let j = free.remove(pos);
        fixed += cost[i * k + j];
        perm.push(j);
    }
    let total = row_sum(cost, k, &perm);
    (perm, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[f64], k: usize) -> f64 {
        fn rec(cost: &[f64], k: usize, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == k {
                *best = best.min(acc);
                return;
            }
            for j in 0..k {
                if !used[j] {
                    used[j] = true;
                    rec(cost, k, row + 1, used, acc + cost[row * k + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, k, 0, &mut vec![false; k], 0.0, &mut best);
        best
    }

    #[test]
    fn small_matrices_match_enumeration() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for k in 1..=6 {
            for _ in 0..50 {
                let cost: Vec<f64> = (0..k * k).map(|_| next() * 10.0).collect();
                let (_, a) = solve(&cost, k);
                let (_, b) = lex_min(&cost, k);
                let c = brute(&cost, k);
                assert!((a - c).abs() <= 1e-12, "{a} {c}");
                assert!((b - c).abs() <= 1e-12, "{b} {c}");
            }
        }
    }

    #[test]
    fn ties_resolve_to_identity() {
        let cost = vec![0.0; 9];
        assert_eq!(lex_min(&cost, 3).0, vec![0, 1, 2]);
        let cost = vec![1.0, 0.0, 0.0, 1.0];
        assert_eq!(lex_min(&cost, 2).0, vec![1, 0]);
    }

    #[test]
    fn empty() {
        assert_eq!(solve(&[], 0), (vec![], 0.0));
    }
}
