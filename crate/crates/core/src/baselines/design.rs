//! Regularized design matrix `lambda * I + sum x x^T` for the binary
//! row/column features, with its inverse kept current by rank-one updates.

use nalgebra::DMatrix;

/// Rank-one updates between exact re-inversions.
const REFRESH_EVERY: u64 = 4096;

/// Indicator features of arm `(row, col)`: ones at `row` and `K + col`.
pub fn feature_vector(row: usize, col: usize, k: usize, l: usize) -> Vec<u8> {
    assert!(row < k && col < l, "arm ({row}, {col}) outside {k} x {l}");
    let mut x = vec![0; k + l];
    x[row] = 1;
    x[k + col] = 1;
    x
}

#[derive(Debug, Clone)]
pub struct Design {
    dim: usize,
    lambda: f64,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    log_det: f64,
    updates: u64,
}

impl Design {
    pub fn new(dim: usize, lambda: f64) -> Self {
        Self {
            dim,
            lambda,
            matrix: DMatrix::identity(dim, dim) * lambda,
            inverse: DMatrix::identity(dim, dim) / lambda,
            log_det: dim as f64 * lambda.ln(),
            updates: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `ln det V`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `x^T V^-1 x` for the feature with ones at `a` and `b`.
    pub fn quad(&self, a: usize, b: usize) -> f64 {
        let inv = &self.inverse;
        inv[(a, a)] + inv[(b, b)] + 2.0 * inv[(a, b)]
    }

    /// Adds `x x^T` for the feature with ones at `a != b`.
    pub fn add(&mut self, a: usize, b: usize) {
        self.matrix[(a, a)] += 1.0;
        self.matrix[(b, b)] += 1.0;
        self.matrix[(a, b)] += 1.0;
        self.matrix[(b, a)] += 1.0;

        // Sherman-Morrison with z = V^-1 x
        let quad = self.quad(a, b);
        let z = self.inverse.column(a) + self.inverse.column(b);
        let denom = 1.0 + quad;
        self.inverse.ger(-1.0 / denom, &z, &z, 1.0);
        self.log_det += denom.ln();
        self.updates += 1;
        if self.updates.is_multiple_of(REFRESH_EVERY) {
            self.refresh();
        }
    }

    fn refresh(&mut self) {
        if let Some(chol) = self.matrix.clone().cholesky() {
            self.log_det = 2.0
                * chol
                    .l_dirty()
                    .diagonal()
                    .iter()
                    .map(|x| x.ln())
                    .sum::<f64>();
            self.inverse = chol.inverse();
        }
    }

    /// `V^-1 b`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let inv = &self.inverse;
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| inv[(r, c)] * rhs[c]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn features_from_indicators() {
        assert_eq!(feature_vector(0, 0, 2, 2), vec![1, 0, 1, 0]);
        assert_eq!(feature_vector(1, 1, 2, 2), vec![0, 1, 0, 1]);
        for i in 0..3 {
            for j in 0..4 {
                let x = feature_vector(i, j, 3, 4);
                assert_eq!(x.iter().map(|&b| b as u32).sum::<u32>(), 2);
            }
        }
    }

    #[test]
    fn features_are_injective() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..5 {
            for j in 0..7 {
                assert!(seen.insert(feature_vector(i, j, 5, 7)));
            }
        }
    }

    #[test]
    fn single_update_matches_definition() {
        let mut d = Design::new(2, 1.0);
        d.add(0, 1);
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(d.matrix(), &expected);
        let inv = expected.clone().try_inverse().unwrap();
        assert!((d.inverse() - inv).abs().max() < 1e-14);
        assert!((d.log_det() - 3f64.ln()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn inverse_and_spectrum_stay_consistent(
            pulls in prop::collection::vec((0usize..3, 0usize..4), 1..300),
            lambda in 0.1..4.0f64,
        ) {
            let mut d = Design::new(7, lambda);
            for &(i, j) in &pulls {
                d.add(i, 3 + j);
            }
            let exact = d.matrix().clone().try_inverse().unwrap();
            prop_assert!((d.inverse() - &exact).abs().max() < 1e-9);
            let eig = d.matrix().clone().symmetric_eigen();
            prop_assert!(eig.eigenvalues.iter().all(|&e| e >= lambda - 1e-9));
            let det = d.matrix().clone().determinant();
            prop_assert!((d.log_det() - det.ln()).abs() < 1e-8);
        }
    }
}
