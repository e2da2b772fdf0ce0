//! Minimum-cost perfect matching on a square cost matrix (Hungarian method
//! with row/column potentials, O(n^3)).

/// Returns `assign` with row `i` matched to column `assign[i]`.
///
/// `cost` is row-major `n x n`. The matching minimises the total cost;
/// costs must be finite.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }
    // 1-based indexing with a virtual column 0, following the classic
    // shortest-augmenting-path formulation.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Total cost of an assignment, summed in row order.
pub fn assignment_cost(cost: &[f64], n: usize, assign: &[usize]) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_optimal_for_diagonal_zero() {
        let c = [0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0];
        assert_eq!(hungarian(&c, 3), vec![0, 1, 2]);
    }

    #[test]
    fn swap_is_found() {
        let c = [5.0, 1.0, 1.0, 5.0];
        let a = hungarian(&c, 2);
        assert_eq!(a, vec![1, 0]);
        assert_eq!(assignment_cost(&c, 2, &a), 2.0);
    }

    #[test]
    fn empty_and_single() {
        assert!(hungarian(&[], 0).is_empty());
        assert_eq!(hungarian(&[4.2], 1), vec![0]);
    }

    #[test]
    fn result_is_a_permutation() {
        let c: Vec<f64> = (0..36).map(|k| ((k * 7919) % 31) as f64).collect();
        let mut a = hungarian(&c, 6);
        a.sort_unstable();
        assert_eq!(a, (0..6).collect::<Vec<_>>());
    }
}
