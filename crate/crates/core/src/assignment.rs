//! Exact maximum-weight one-to-one assignment (Hungarian method with
//! potentials, O(n³)). Rectangular inputs are padded with zero-weight dummy
//! rows or columns.

/// Returns `(total_weight, row_to_col)`; `row_to_col[i]` is `None` for a row
/// matched only to padding.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    let n = rows.max(cols);
    let max_w = weights
        .iter()
        .flatten()
        .copied()
        .fold(0.0_f64, f64::max);
    // Minimize cost = max_w - weight on the padded square matrix.
    let cost = |i: usize, j: usize| -> f64 {
        let w = if i < rows && j < cols { weights[i][j] } else { 0.0 };
        max_w - w
    };

    // 1-based arrays; p[j] = row matched to column j, 0 = none.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
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
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
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

    let mut row_to_col = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            row_to_col[i - 1] = Some(j - 1);
            total += weights[i - 1][j - 1];
        }
    }
    (total, row_to_col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_example() {
        let w = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let (total, assign) = max_weight_assignment(&w);
        assert_eq!(total, 11.0);
        assert_eq!(assign, vec![Some(0), Some(2), Some(1)]);
    }

    #[test]
    fn rectangular_pads_with_zero() {
        let w = vec![vec![1.0, 9.0, 2.0]];
        let (total, assign) = max_weight_assignment(&w);
        assert_eq!(total, 9.0);
        assert_eq!(assign, vec![Some(1)]);
        let tall = vec![vec![1.0], vec![7.0], vec![3.0]];
        let (total, assign) = max_weight_assignment(&tall);
        assert_eq!(total, 7.0);
        assert_eq!(assign, vec![None, Some(0), None]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(max_weight_assignment(&[]).0, 0.0);
    }
}
