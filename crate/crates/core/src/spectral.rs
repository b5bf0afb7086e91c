//! Spectral decomposition of the normalized adjacency and the graph
//! Fourier transform it induces.

use ndarray::{Array1, Array2};

use crate::eigen::symmetric_eigen;
use crate::error::{CoreError, Result};

/// Maximum allowed excursion of an eigenvalue outside [-1, 1] before the
/// decomposition is rejected rather than clamped.
pub const EIGENVALUE_CLAMP_TOL: f64 = 1e-9;
const ORTHOGONALITY_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-8;

/// Eigendecomposition `Â = U Λ Uᵀ` of a normalized adjacency.
///
/// Eigenvalues are sorted ascending and clamped into [-1, 1]; column `i` of
/// the eigenvector matrix pairs with eigenvalue `i`. The columns form the
/// graph Fourier basis.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
    residual: f64,
}

impl SpectralDecomposition {
    pub fn num_nodes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues λ_1 ≤ … ≤ λ_n, clamped to [-1, 1].
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvector matrix U; column i pairs with eigenvalue i.
    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    /// Max-abs entry of `ÂU - UΛ`, kept as a diagnostic.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Forward GFT of an n×d signal: `UᵀX`.
    pub fn gft_forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        gft(self, x, GftDirection::Forward)
    }

    /// Inverse GFT of an n×d spectrum: `UX`.
    pub fn gft_inverse(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        gft(self, x, GftDirection::Inverse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GftDirection {
    Forward,
    Inverse,
}

/// Decompose a symmetric normalized adjacency into its GFT basis.
///
/// Checks the invariants the rest of the workspace relies on: orthonormal
/// columns, small factorization residual, and eigenvalues within
/// [-1 - 1e-9, 1 + 1e-9] (then clamped to [-1, 1]).
pub fn eigendecompose(ahat: &Array2<f64>) -> Result<SpectralDecomposition> {
    let (mut eigenvalues, eigenvectors) = symmetric_eigen(ahat)?;
    let n = eigenvalues.len();

    for v in eigenvalues.iter_mut() {
        if v.abs() > 1.0 + EIGENVALUE_CLAMP_TOL {
            return Err(CoreError::EigenvalueOutOfRange {
                value: *v,
                tol: EIGENVALUE_CLAMP_TOL,
            });
        }
        *v = v.clamp(-1.0, 1.0);
    }

    let mut gram_err = 0.0f64;
    let gram = eigenvectors.t().dot(&eigenvectors);
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_err = gram_err.max((gram[(i, j)] - target).abs());
        }
    }
    if gram_err > ORTHOGONALITY_TOL {
        return Err(CoreError::DecompositionCheck {
            check: "max |UᵀU - I|",
            value: gram_err,
            limit: ORTHOGONALITY_TOL,
        });
    }

    let au = ahat.dot(&eigenvectors);
    let mut residual = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            residual = residual.max((au[(r, c)] - eigenvectors[(r, c)] * eigenvalues[c]).abs());
        }
    }
    if residual > RESIDUAL_TOL {
        return Err(CoreError::DecompositionCheck {
            check: "max |ÂU - UΛ|",
            value: residual,
            limit: RESIDUAL_TOL,
        });
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        residual,
    })
}

/// Graph Fourier transform of an n×d signal matrix.
pub fn gft(
    decomp: &SpectralDecomposition,
    x: &Array2<f64>,
    direction: GftDirection,
) -> Result<Array2<f64>> {
    if x.nrows() != decomp.num_nodes() {
        return Err(CoreError::SignalRowMismatch {
            rows: x.nrows(),
            n: decomp.num_nodes(),
        });
    }
    Ok(match direction {
        GftDirection::Forward => decomp.eigenvectors.t().dot(x),
        GftDirection::Inverse => decomp.eigenvectors.dot(x),
    })
}
