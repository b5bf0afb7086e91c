//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift
//! QL iteration, in the spirit of the classic EISPACK `tred2`/`tql2` pair.
//! Works entirely in f64 and accumulates the full eigenvector matrix, which
//! the graph Fourier transform needs. Intended for desk-scale dense problems
//! (n up to a few thousand).

use ndarray::{Array1, Array2};

use crate::error::{CoreError, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_QL_ITERS: usize = 64;

/// Full eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted ascending
/// and column `i` of the eigenvector matrix paired with eigenvalue `i`.
/// The output is deterministic: eigenvalue ties keep their pre-sort order
/// and each eigenvector is signed so that its largest-magnitude entry
/// (lowest index on ties) is positive.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(CoreError::NotSquare(rows, cols));
    }
    let n = rows;
    for i in 0..n {
        for j in 0..n {
            if !a[(i, j)].is_finite() {
                return Err(CoreError::NonFiniteEntry(i, j));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (a[(i, j)] - a[(j, i)]).abs();
            if delta > SYMMETRY_TOL {
                return Err(CoreError::NotSymmetric { i, j, delta });
            }
        }
    }

    let mut v = a.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit_shift(&mut v, &mut d, &mut e)?;

    // Sort ascending; stable in the original column order on exact ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));

    let mut values = Array1::<f64>::zeros(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = d[src];
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    fix_signs(&mut vectors);
    Ok((values, vectors))
}

/// Sign convention: the largest-magnitude entry of each column is positive,
/// ties broken by lowest row index.
fn fix_signs(vectors: &mut Array2<f64>) {
    let (n, cols) = vectors.dim();
    for c in 0..cols {
        let mut best = 0usize;
        let mut best_abs = vectors[(0, c)].abs();
        for r in 1..n {
            let mag = vectors[(r, c)].abs();
            if mag > best_abs {
                best_abs = mag;
                best = r;
            }
        }
        if vectors[(best, c)] < 0.0 {
            for r in 0..n {
                vectors[(r, c)] = -vectors[(r, c)];
            }
        }
    }
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
///
/// On entry `v` holds the matrix; on exit it holds the accumulated
/// orthogonal transformation, `d` the diagonal and `e` the subdiagonal.
fn tridiagonalize(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        // Scale to avoid under/overflow.
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            // Generate the Householder vector.
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            // Apply the similarity transformation to the remaining columns.
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix,
/// accumulating rotations into `v`.
fn ql_implicit_shift(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = 2.0f64.powi(-52);

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // m == n cannot hold: e[n-1] is exactly 0, satisfying the test.
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERS {
                    return Err(CoreError::EigenNoConvergence {
                        index: l,
                        residual: e[l].abs(),
                    });
                }

                // Implicit shift from the leading 2x2 block.
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // QL sweep.
                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
