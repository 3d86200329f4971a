//! Solver backends: dense LU with partial pivoting for desk-scale systems,
//! Jacobi-preconditioned conjugate gradients for larger sparse ones.

use alloc::vec;
use alloc::vec::Vec;

/// Interior systems up to this many unknowns are factorized densely.
pub const DENSE_LIMIT: usize = 2000;

/// Relative residual target for CG.
pub const CG_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum SolveError {
    /// Zero pivot: the system has no unique solution.
    Singular,
    /// CG failed to reach the residual target within the iteration cap.
    NonConvergence,
}

/// LU factorization with partial pivoting of a dense row-major matrix.
#[derive(Debug)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<DenseLu, SolveError> {
        debug_assert_eq!(a.len(), n * n);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(SolveError::Singular);
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                a[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= factor * a[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, piv })
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..n {
                    b[i] -= self.lu[i * n + k] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            b[k] /= self.lu[k * n + k];
            let bk = b[k];
            if bk != 0.0 {
                for i in 0..k {
                    b[i] -= self.lu[i * n + k] * bk;
                }
            }
        }
    }
}

/// Conjugate gradients on a symmetric positive definite operator given as a
/// matrix-vector product, with diagonal (Jacobi) preconditioning.
///
/// Iteration order is fixed, so results are bit-reproducible.
pub fn cg_solve<F>(
    apply: F,
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize, SolveError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    debug_assert_eq!(x.len(), n);
    let b_norm2: f64 = b.iter().map(|v| v * v).sum();
    if b_norm2 == 0.0 {
        x.fill(0.0);
        return Ok(0);
    }
    let target2 = rel_tol * rel_tol * b_norm2;

    let mut r = vec![0.0; n];
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    for i in 0..n {
        r[i] = b[i] - ax[i];
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];

    for iter in 0..max_iter {
        let r_norm2: f64 = r.iter().map(|v| v * v).sum();
        if r_norm2 <= target2 {
            return Ok(iter);
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(SolveError::Singular);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let r_norm2: f64 = r.iter().map(|v| v * v).sum();
    if r_norm2 <= target2 {
        Ok(max_iter)
    } else {
        Err(SolveError::NonConvergence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_lu_solves_small_system() {
        // 2x + y = 5, x + 3y = 10 -> x = 1, y = 3
        let lu = DenseLu::factor(2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let mut b = vec![5.0, 10.0];
        lu.solve(&mut b);
        assert!((b[0] - 1.0).abs() < 1e-14);
        assert!((b[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn dense_lu_detects_singular() {
        let err = DenseLu::factor(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap_err();
        assert_eq!(err, SolveError::Singular);
    }

    #[test]
    fn cg_matches_dense_on_laplacian_like_system() {
        // grounded path Laplacian: tridiagonal [2, -1] with n = 50
        let n = 50;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut acc = 2.0 * v[i];
                if i > 0 {
                    acc -= v[i - 1];
                }
                if i + 1 < n {
                    acc -= v[i + 1];
                }
                out[i] = acc;
            }
        };
        let diag = vec![2.0; n];
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; n];
        cg_solve(apply, &diag, &b, &mut x, 1e-13, 10 * n).unwrap();
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }
}
