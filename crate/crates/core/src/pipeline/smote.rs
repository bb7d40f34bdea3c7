use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::PipelineError;
use crate::seed;

/// Indices of the `k` nearest other rows of every row, by squared Euclidean
/// distance, ties broken by index so the result does not depend on
/// traversal order.
fn neighbours(x: ArrayView2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = x.nrows();
    (0..n)
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    (dist, j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Synthetic minority rows `x + λ(x' − x)`, with `x` a random minority row,
/// `x'` one of its `k` nearest minority neighbours and `λ ~ U[0, 1]`.
/// `k` is clamped to `rows − 1`.
pub fn smote_oversample(
    minority: ArrayView2<f64>,
    k: usize,
    n_synthetic: usize,
    seed: u64,
) -> Result<Array2<f64>, PipelineError> {
    let n = minority.nrows();
    if n < 2 {
        return Err(PipelineError::TooFewMinority(n));
    }
    if k == 0 {
        return Err(PipelineError::ZeroNeighbours);
    }
    let k = k.min(n - 1);
    let nn = neighbours(minority, k);
    let mut rng = seed::rng(seed, "smote");
    let mut out = Array2::zeros((n_synthetic, minority.ncols()));
    for mut row in out.rows_mut() {
        let i = rng.random_range(0..n);
        let j = nn[i][rng.random_range(0..k)];
        let lambda: f64 = rng.random();
        let (x, y) = (minority.row(i), minority.row(j));
        for ((o, &a), &b) in row.iter_mut().zip(x).zip(y) {
            *o = a + lambda * (b - a);
        }
    }
    Ok(out)
}
