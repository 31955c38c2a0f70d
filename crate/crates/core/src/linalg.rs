//! Small dense symmetric factorization used for the per-patch normal equations.

use crate::error::{Error, Result};

/// Pivoted LDL^T factorization of a symmetric matrix.
///
/// Diagonal (Bunch-Parlett style) pivoting: at every step the largest
/// remaining diagonal entry in magnitude is promoted. For the positive
/// semidefinite Gram matrices produced by the patch assembly this is as
/// stable as pivoted Cholesky. Factorization fails with
/// `SingularNormalMatrix` when the best pivot drops below
/// `1e-14 * max|M_ij|`.
pub struct SymmetricFactor {
    n: usize,
    /// Row-major working copy: strictly lower part holds L, diagonal holds D.
    ld: Vec<f64>,
    perm: Vec<usize>,
}

impl SymmetricFactor {
    pub fn new(m: &[f64], n: usize) -> Result<Self> {
        assert_eq!(m.len(), n * n, "matrix size mismatch");
        let mut a = m.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let norm = a.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
        let threshold = 1e-14 * norm;

        for k in 0..n {
            // choose the largest remaining diagonal entry
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let d = a[i * n + i].abs();
                if d > best {
                    best = d;
                    p = i;
                }
            }
            if best.is_nan() || best <= threshold {
                return Err(Error::SingularNormalMatrix {
                    pivot: best,
                    threshold,
                });
            }
            if p != k {
                perm.swap(k, p);
                // symmetric row/col swap on the full working array
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                for i in 0..n {
                    a.swap(i * n + k, i * n + p);
                }
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                a[i * n + k] = l;
                for j in k + 1..=i {
                    a[i * n + j] -= l * d * a[j * n + k];
                }
            }
            // keep the upper triangle mirrored for the remaining diagonal search
            for i in k + 1..n {
                for j in i + 1..n {
                    a[i * n + j] = a[j * n + i];
                }
            }
        }
        Ok(SymmetricFactor { n, ld: a, perm })
    }

    /// Solve M x = b using the cached factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // z = P b
        let mut z: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        // L y = z (unit lower)
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.ld[i * n + j] * z[j];
            }
            z[i] = s;
        }
        // D w = y
        for i in 0..n {
            z[i] /= self.ld[i * n + i];
        }
        // L^T v = w
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.ld[j * n + i] * z[j];
            }
            z[i] = s;
        }
        // x = P^T v
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = z[i];
        }
        x
    }
}

/// Residual-checked convenience wrapper.
pub fn factor_symmetric(m: &[f64], n: usize) -> Result<SymmetricFactor> {
    SymmetricFactor::new(m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn mat_vec(m: &[f64], x: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| m[i * n + j] * x[j]).sum())
            .collect()
    }

    #[test]
    fn identity_returns_rhs() {
        let n = 5;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let f = factor_symmetric(&m, n).unwrap();
        assert_eq!(f.solve(&b), b);
    }

    #[test]
    fn two_by_two_hand_checkable() {
        let m = [2.0, 1.0, 1.0, 2.0];
        let f = factor_symmetric(&m, 2).unwrap();
        let x = f.solve(&[3.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_96_residual() {
        // oracle: the residual ||Mx - b|| / ||b|| of the returned solution
        let n = 96;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let b_mat: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += b_mat[k * n + i] * b_mat[k * n + j];
                }
                m[i * n + j] = s + if i == j { 1e-3 } else { 0.0 };
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = factor_symmetric(&m, n).unwrap();
        let x = f.solve(&rhs);
        let mx = mat_vec(&m, &x, n);
        let num: f64 = mx
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den <= 1e-10, "relative residual {}", num / den);
    }

    #[test]
    fn singular_matrix_rejected() {
        // rank-1 outer product
        let n = 5;
        let v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = v[i] * v[j];
            }
        }
        assert!(matches!(
            factor_symmetric(&m, n),
            Err(Error::SingularNormalMatrix { .. })
        ));
    }
}
