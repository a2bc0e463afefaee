//! Small dense linear-algebra helpers for codebook construction.
//!
//! The only consumer is the pseudo-inverse beam design, which needs the
//! Moore-Penrose inverse of an N×N Hermitian PSD matrix (N ≤ 64 in shipped
//! configurations). A complex Hermitian matrix embeds as the real symmetric
//! matrix [[X, -Y], [Y, X]] with X = Re, Y = Im; the eigendecomposition of
//! the embedding is computed with cyclic Jacobi rotations and mapped back.

use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone)]
pub(crate) struct CMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![Complex64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.n_cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.n_cols + c] = v;
    }

    /// `self · v` for a complex vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| {
                (0..self.n_cols)
                    .map(|c| self.at(r, c) * v[c])
                    .sum::<Complex64>()
            })
            .collect()
    }
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.
/// Returns (eigenvalues, eigenvectors as columns, both unordered).
fn jacobi_symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut v = vec![0.0_f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = fro * 1e-15 + f64::MIN_POSITIVE;
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= stop / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A ← JᵀAJ on rows/columns p and q.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    (values, v)
}

/// Moore-Penrose pseudo-inverse of a Hermitian PSD matrix, zeroing
/// eigenvalues below `tol_rel · λ_max`. Also returns the condition number
/// λ_max/λ_min over the retained spectrum.
pub(crate) fn hermitian_pinv(m: &CMatrix, tol_rel: f64) -> (CMatrix, f64) {
    let n = m.n_rows;
    assert_eq!(n, m.n_cols);
    // Real symmetric embedding, 2n × 2n.
    let nn = 2 * n;
    let mut r = vec![0.0_f64; nn * nn];
    for i in 0..n {
        for j in 0..n {
            let z = m.at(i, j);
            r[i * nn + j] = z.re;
            r[i * nn + (n + j)] = -z.im;
            r[(n + i) * nn + j] = z.im;
            r[(n + i) * nn + (n + j)] = z.re;
        }
    }
    let (vals, vecs) = jacobi_symmetric_eigen(r, nn);
    let max = vals.iter().cloned().fold(0.0_f64, f64::max);
    let cut = max * tol_rel;
    let mut min_kept = f64::INFINITY;
    let inv: Vec<f64> = vals
        .iter()
        .map(|&l| {
            if l > cut {
                min_kept = min_kept.min(l);
                1.0 / l
            } else {
                0.0
            }
        })
        .collect();
    let cond = if min_kept.is_finite() && min_kept > 0.0 {
        max / min_kept
    } else {
        f64::INFINITY
    };
    // P = V diag(inv) Vᵀ; read the complex pinv out of its blocks.
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in 0..nn {
                if inv[k] == 0.0 {
                    continue;
                }
                re += vecs[i * nn + k] * inv[k] * vecs[j * nn + k];
                im += vecs[(n + i) * nn + k] * inv[k] * vecs[j * nn + k];
            }
            out.set(i, j, Complex64::new(re, im));
        }
    }
    (out, cond)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hermitian_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        // B Bᴴ with B of shape n × rank.
        let b: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                (0..rank)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v: Complex64 = (0..rank).map(|k| b[i][k] * b[j][k].conj()).sum();
                m.set(i, j, v);
            }
        }
        m
    }

    fn mat_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(a.n_rows, b.n_cols);
        for i in 0..a.n_rows {
            for j in 0..b.n_cols {
                let v: Complex64 = (0..a.n_cols).map(|k| a.at(i, k) * b.at(k, j)).sum();
                out.set(i, j, v);
            }
        }
        out
    }

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        a.data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn moore_penrose_conditions_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, rank) in &[(6usize, 6usize), (8, 5), (12, 3)] {
            let m = hermitian_psd(n, rank, &mut rng);
            let (p, cond) = hermitian_pinv(&m, 1e-12);
            assert!(cond.is_finite() || rank == 0);
            let mpm = mat_mul(&mat_mul(&m, &p), &m);
            let pmp = mat_mul(&mat_mul(&p, &m), &p);
            assert!(
                max_abs_diff(&mpm, &m) < 1e-10,
                "M P M ≠ M (n={n}, rank={rank})"
            );
            assert!(max_abs_diff(&pmp, &p) < 1e-10, "P M P ≠ P");
            // M P is Hermitian.
            let mp = mat_mul(&m, &p);
            for i in 0..n {
                for j in 0..n {
                    assert!((mp.at(i, j) - mp.at(j, i).conj()).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn full_rank_pinv_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 10;
        let m = hermitian_psd(n, 2 * n, &mut rng);
        let (p, _) = hermitian_pinv(&m, 1e-12);
        let mp = mat_mul(&m, &p);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((mp.at(i, j) - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }
}
