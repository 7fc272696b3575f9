//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenpairs of a real symmetric matrix sorted by ascending eigenvalue.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        // Fix the sign so the largest-magnitude component is positive.
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Minimum-norm least-squares solution of `a x = b` with its residual norm
/// and the ratio of the largest to the smallest retained singular value.
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub residual: f64,
    pub condition: f64,
    pub rank: usize,
}

pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> LeastSquares {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return LeastSquares {
            solution: DVector::zeros(n),
            residual: b.norm(),
            condition: 1.0,
            rank: 0,
        };
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = rcond * smax.max(f64::MIN_POSITIVE);
    let u = svd.u.as_ref().expect("left vectors requested");
    let vt = svd.v_t.as_ref().expect("right vectors requested");
    let mut x = DVector::zeros(n);
    let mut rank = 0;
    let mut smin = smax;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            rank += 1;
            smin = smin.min(s);
            let coef = u.column(k).dot(b) / s;
            x += vt.row(k).transpose() * coef;
        }
    }
    let residual = (a * &x - b).norm();
    LeastSquares {
        solution: x,
        residual,
        condition: if rank == 0 {
            f64::INFINITY
        } else {
            smax / smin
        },
        rank,
    }
}

/// Largest singular value of a complex matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let zero = Complex64::new(0.0, 0.0);
    let (rows, cols) = m.shape();
    // Connected components of the bipartite row/column graph of nonzero
    // entries. Each component is an independent block of the matrix, and the
    // singular values of the matrix are the union of those of its blocks.
    let mut row_label = vec![usize::MAX; rows];
    let mut col_label = vec![usize::MAX; cols];
    let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for seed in 0..rows {
        if row_label[seed] != usize::MAX || m.row(seed).iter().all(|&z| z == zero) {
            continue;
        }
        let label = blocks.len();
        let (mut block_rows, mut block_cols) = (vec![seed], Vec::new());
        row_label[seed] = label;
        let mut queue = vec![(true, seed)];
        while let Some((is_row, k)) = queue.pop() {
            if is_row {
                for j in 0..cols {
                    if m[(k, j)] != zero && col_label[j] == usize::MAX {
                        col_label[j] = label;
                        block_cols.push(j);
                        queue.push((false, j));
                    }
                }
            } else {
                for i in 0..rows {
                    if m[(i, k)] != zero && row_label[i] == usize::MAX {
                        row_label[i] = label;
                        block_rows.push(i);
                        queue.push((true, i));
                    }
                }
            }
        }
        blocks.push((block_rows, block_cols));
    }
    blocks
        .iter()
        .map(|(r, c)| {
            DMatrix::from_fn(r.len(), c.len(), |i, j| m[(r[i], c[j])])
                .singular_values()
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn zeros(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); n]
}
