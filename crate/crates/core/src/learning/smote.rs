//! Synthetic minority oversampling.

use rand::Rng;
use rayon::prelude::*;

use super::LearningError;
use crate::matrix::DenseMatrix;

/// Synthetic rows and the `(base, neighbor)` minority indices each one was
/// interpolated between.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteSample {
    pub rows: DenseMatrix,
    pub parents: Vec<(usize, usize)>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest other rows of each row (Euclidean, ties by
/// index).
pub fn nearest_neighbors(rows: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..rows.len())
                .filter(|&j| j != i)
                .map(|j| (squared_distance(&rows[i], &rows[j]), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Generates `count` synthetic rows `x + u * (x_nn - x)` with `x` drawn
/// uniformly from `minority`, `x_nn` one of its `k` nearest minority
/// neighbours and `u` uniform in `[0, 1)`. `k` is clamped to the minority
/// size minus one.
pub fn smote<R: Rng>(minority: &[Vec<f64>], k: usize, count: usize, rng: &mut R) -> Result<SmoteSample, LearningError> {
    if minority.len() < 2 {
        return Err(LearningError::TooFewMinority(minority.len()));
    }
    let dim = minority[0].len();
    let k = k.clamp(1, minority.len() - 1);
    let mut rows = DenseMatrix::new(dim);
    let mut parents = Vec::with_capacity(count);
    if count == 0 {
        return Ok(SmoteSample { rows, parents });
    }
    let neighbors = nearest_neighbors(minority, k);
    let mut synthetic = vec![0.0; dim];
    for _ in 0..count {
        let base = rng.gen_range(0..minority.len());
        let nn = neighbors[base][rng.gen_range(0..k)];
        let gap: f64 = rng.gen();
        for ((s, &x), &y) in synthetic.iter_mut().zip(&minority[base]).zip(&minority[nn]) {
            *s = x + gap * (y - x);
        }
        rows.push_row(&synthetic);
        parents.push((base, nn));
    }
    Ok(SmoteSample { rows, parents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Rows;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_minority_stays_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = smote(&[vec![0.0, 0.0], vec![1.0, 1.0]], 1, 50, &mut rng).unwrap();
        for i in 0..s.rows.n_rows() {
            let r = s.rows.row(i);
            assert_eq!(r[0], r[1]);
            assert!((0.0..=1.0).contains(&r[0]));
        }
    }

    #[test]
    fn zero_count_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = smote(&[vec![0.0], vec![1.0]], 5, 0, &mut rng).unwrap();
        assert_eq!(s.rows.n_rows(), 0);
    }

    #[test]
    fn single_minority_row_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(matches!(
            smote(&[vec![0.0]], 5, 3, &mut rng),
            Err(LearningError::TooFewMinority(1))
        ));
    }

    #[test]
    fn neighbors_exclude_self() {
        let rows = vec![vec![0.0], vec![1.0], vec![5.0]];
        let nn = nearest_neighbors(&rows, 1);
        assert_eq!(nn, vec![vec![1], vec![0], vec![1]]);
    }
}
