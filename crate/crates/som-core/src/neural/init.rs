//! Semi-orthogonal weight initialization.
//!
//! A Gaussian matrix is factored by Householder QR; the thin Q, with
//! column signs corrected by the diagonal of R, is a uniformly random
//! semi-orthogonal matrix with every singular value exactly 1. Wide
//! matrices are handled by factoring the transpose, giving orthonormal
//! rows instead of columns.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::autodiff::Tensor;
use crate::rng::Stream;

/// Householder QR of a tall column-major-free row-major matrix
/// (`n >= m`), returning the thin Q (n x m) and the diagonal of R.
fn householder_thin_q(n: usize, m: usize, a: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= m);
    // Householder vectors, one per column, stored densely (length n,
    // zeros above the pivot).
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rdiag = vec![0.0; m];

    for k in 0..m {
        // Norm of the k-th column below (and including) the diagonal.
        let mut norm = 0.0;
        for i in k..n {
            norm += a[i * m + k] * a[i * m + k];
        }
        norm = norm.sqrt();
        let akk = a[k * m + k];
        let alpha = if akk >= 0.0 { -norm } else { norm };

        let mut v = vec![0.0; n];
        for i in k..n {
            v[i] = a[i * m + k];
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();

        if vnorm2 > 0.0 {
            // Apply H = I - 2 v v^T / (v^T v) to the trailing block.
            for j in k..m {
                let mut dot = 0.0;
                for i in k..n {
                    dot += v[i] * a[i * m + j];
                }
                let f = 2.0 * dot / vnorm2;
                for i in k..n {
                    a[i * m + j] -= f * v[i];
                }
            }
        }
        rdiag[k] = a[k * m + k];
        vs.push(v);
    }

    // Q = H_0 H_1 ... H_{m-1} applied to the first m columns of I.
    let mut q = vec![0.0; n * m];
    for j in 0..m {
        q[j * m + j] = 1.0;
    }
    for k in (0..m).rev() {
        let v = &vs[k];
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..m {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i] * q[i * m + j];
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                q[i * m + j] -= f * v[i];
            }
        }
    }
    (q, rdiag)
}

/// Random semi-orthogonal `rows x cols` matrix. `W W^T = I` when
/// `rows <= cols`, `W^T W = I` otherwise; all singular values are 1.
pub fn orthogonal_init(rows: usize, cols: usize, rng: &mut Stream) -> Tensor {
    assert!(rows > 0 && cols > 0, "degenerate shape {rows}x{cols}");
    let (n, m, transpose) = if rows < cols {
        (cols, rows, true)
    } else {
        (rows, cols, false)
    };

    let mut a: Vec<f64> = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
    let (mut q, rdiag) = householder_thin_q(n, m, &mut a);

    // Sign correction: multiply column j by sign(R_jj) so the result is
    // drawn uniformly rather than biased by the QR convention.
    for (j, &d) in rdiag.iter().enumerate() {
        if d < 0.0 {
            for i in 0..n {
                q[i * m + j] = -q[i * m + j];
            }
        }
    }

    if transpose {
        let mut out = vec![0.0; rows * cols];
        for i in 0..n {
            for j in 0..m {
                out[j * cols + i] = q[i * m + j];
            }
        }
        Tensor::matrix(rows, cols, out)
    } else {
        Tensor::matrix(rows, cols, q)
    }
}
