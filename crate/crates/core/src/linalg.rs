//! Small dense Cholesky routines used by the kernel and local-linear models.

use crate::matrix::Matrix;

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `a + jitter * I`. Returns `None` if a pivot is not
    /// strictly positive.
    pub fn factor(a: &Matrix, jitter: f64) -> Option<Cholesky> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a.get(i, j);
                if i == j {
                    sum += jitter;
                }
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                sum -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Some(Cholesky { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L z = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s: f64 = row.iter().zip(&z[..i]).map(|(a, b)| a * b).sum();
            z[i] = (z[i] - s) / self.lower[i * n + i];
        }
        z
    }

    /// Solves `Lᵀ x = z`.
    pub fn solve_upper(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }
}

/// Weighted ridge least squares: minimizes
/// `Σ w_i (y_i - x_iᵀθ)² + ridge ‖θ‖²`. Design rows are given by `rows`.
pub fn weighted_least_squares<'a, I>(rows: I, dim: usize, ridge: f64) -> Option<Vec<f64>>
where
    I: IntoIterator<Item = (&'a [f64], f64, f64)>,
{
    let mut gram = Matrix::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];
    for (x, y, w) in rows {
        if w == 0.0 {
            continue;
        }
        for i in 0..dim {
            let wxi = w * x[i];
            rhs[i] += wxi * y;
            for j in 0..=i {
                let v = gram.get(i, j) + wxi * x[j];
                gram.set(i, j, v);
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            let v = gram.get(i, j);
            gram.set(j, i, v);
        }
    }
    Cholesky::factor(&gram, ridge).map(|c| c.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = Matrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]]).unwrap();
        let chol = Cholesky::factor(&a, 0.0).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = chol.solve(&b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(Cholesky::factor(&a, 0.0).is_none());
        let z = Matrix::zeros(2, 2);
        assert!(Cholesky::factor(&z, 0.0).is_none());
        assert!(Cholesky::factor(&z, 1e-10).is_some());
    }

    #[test]
    fn wls_recovers_line() {
        let xs: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 1.0]).collect();
        let rows = xs.iter().map(|x| (&x[..], 3.0 * x[0] - 1.0, 1.0 + x[0]));
        let theta = weighted_least_squares(rows, 2, 0.0).unwrap();
        assert!((theta[0] - 3.0).abs() < 1e-12 && (theta[1] + 1.0).abs() < 1e-12);
    }
}
