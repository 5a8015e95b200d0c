//! Minimum-cost bipartite assignment via the potentials form of the
//! Hungarian algorithm, O(n^3) in the padded square dimension.

use crate::tensor::Matrix;

/// A one-to-one assignment between predictions (rows) and ground truth
/// (columns), covering `min(P, G)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// `(prediction index, gt index)` pairs, sorted by prediction index.
    pub pairs: Vec<(usize, usize)>,
    /// Prediction indices left without a ground-truth partner, ascending.
    pub unmatched_predictions: Vec<usize>,
}

/// Solves the assignment problem on a `P x G` cost matrix.
///
/// Costs must be finite. Rectangular matrices are padded internally with
/// zero-cost dummies, so exactly `min(P, G)` real pairs come back and the
/// total real cost is minimal over all such assignments.
pub fn match_hungarian(cost: &Matrix) -> MatchResult {
    let (p, g) = (cost.rows, cost.cols);
    if p == 0 || g == 0 {
        return MatchResult {
            pairs: Vec::new(),
            unmatched_predictions: (0..p).collect(),
        };
    }
    assert!(
        cost.data.iter().all(|v| v.is_finite()),
        "assignment costs must be finite"
    );

    let dim = p.max(g);
    let at = |i: usize, j: usize| -> f64 {
        if i < p && j < g {
            cost.get(i, j)
        } else {
            0.0
        }
    };

    // row/column potentials with a 0 sentinel column
    let mut u = vec![0.0f64; dim + 1];
    let mut v = vec![0.0f64; dim + 1];
    let mut matched_row = vec![0usize; dim + 1]; // 1-based row matched to column j
    let mut way = vec![0usize; dim + 1];

    for i in 1..=dim {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; dim + 1];
        let mut used = vec![false; dim + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=dim {
                if used[j] {
                    continue;
                }
                let slack = at(i0 - 1, j - 1) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=dim {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut pairs = Vec::with_capacity(p.min(g));
    for j in 1..=dim {
        let i = matched_row[j];
        if i >= 1 && i - 1 < p && j - 1 < g {
            pairs.push((i - 1, j - 1));
        }
    }
    pairs.sort_unstable();
    let matched: std::collections::HashSet<usize> = pairs.iter().map(|&(i, _)| i).collect();
    MatchResult {
        pairs,
        unmatched_predictions: (0..p).filter(|i| !matched.contains(i)).collect(),
    }
}

/// Total cost of an assignment under a cost matrix, summed in pair order.
pub fn assignment_cost(cost: &Matrix, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| cost.get(i, j)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimum over all injections of the smaller side into the
    /// larger one. Totals are taken with [`assignment_cost`] over pairs in
    /// prediction order, the same summation the implementation reports.
    pub(crate) fn brute_force_min_cost(cost: &Matrix) -> f64 {
        let (p, g) = (cost.rows, cost.cols);
        let k = p.min(g);
        if k == 0 {
            return 0.0;
        }
        let large = p.max(g);
        let mut best = f64::INFINITY;
        let mut indices: Vec<usize> = (0..large).collect();
        permute(&mut indices, 0, k, &mut |perm| {
            let mut pairs: Vec<(usize, usize)> = (0..k)
                .map(|s| if p <= g { (s, perm[s]) } else { (perm[s], s) })
                .collect();
            pairs.sort_unstable();
            let total = assignment_cost(cost, &pairs);
            if total < best {
                best = total;
            }
        });
        best
    }

    /// Enumerates ordered selections of length `k` in place.
    fn permute(items: &mut Vec<usize>, depth: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
        if depth == k {
            visit(&items[..k]);
            return;
        }
        for i in depth..items.len() {
            items.swap(depth, i);
            permute(items, depth + 1, k, visit);
            items.swap(depth, i);
        }
    }

    #[test]
    fn single_cell() {
        let cost = Matrix::from_vec(1, 1, vec![3.0]);
        let m = match_hungarian(&cost);
        assert_eq!(m.pairs, vec![(0, 0)]);
        assert!(m.unmatched_predictions.is_empty());
    }

    #[test]
    fn diagonal_matrix_assigns_diagonally() {
        let mut cost = Matrix::from_vec(4, 4, vec![1.0; 16]);
        for i in 0..4 {
            cost.set(i, i, 0.0);
        }
        let m = match_hungarian(&cost);
        assert_eq!(m.pairs, (0..4).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn empty_sides() {
        let m = match_hungarian(&Matrix::zeros(3, 0));
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_predictions, vec![0, 1, 2]);
        let m = match_hungarian(&Matrix::zeros(0, 4));
        assert!(m.pairs.is_empty());
        assert!(m.unmatched_predictions.is_empty());
    }

    #[test]
    fn matches_brute_force_on_random_rectangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..60 {
            let p = rng.gen_range(1..=6);
            let g = rng.gen_range(1..=5);
            let cost = Matrix::from_vec(
                p,
                g,
                (0..p * g).map(|_| rng.gen_range(-4.0..8.0)).collect(),
            );
            let m = match_hungarian(&cost);
            assert_eq!(m.pairs.len(), p.min(g));
            assert_eq!(m.pairs.len() + m.unmatched_predictions.len(), p);
            let total = assignment_cost(&cost, &m.pairs);
            let best = brute_force_min_cost(&cost);
            assert_eq!(total, best, "cost {cost:?}");
        }
    }

    #[test]
    fn each_side_used_at_most_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let cost = Matrix::from_vec(7, 4, (0..28).map(|_| rng.gen_range(0.0..1.0)).collect());
        let m = match_hungarian(&cost);
        let mut preds: Vec<usize> = m.pairs.iter().map(|p| p.0).collect();
        let mut gts: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
        preds.dedup();
        gts.sort_unstable();
        gts.dedup();
        assert_eq!(preds.len(), 4);
        assert_eq!(gts.len(), 4);
    }
}
