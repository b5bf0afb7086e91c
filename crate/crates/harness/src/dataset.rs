//! A graph packaged with its spectral decomposition, shared read-only by
//! experiment workers.

use gftbench_core::basis::{vandermonde, BasisKind, BasisMatrix};
use gftbench_core::graph::build_normalized_adjacency;
use gftbench_core::spectral::{eigendecompose, SpectralDecomposition};
use gftbench_core::Graph;

use crate::error::Result;

#[derive(Debug)]
pub struct PreparedDataset {
    pub name: String,
    pub graph: Graph,
    pub decomp: SpectralDecomposition,
}

impl PreparedDataset {
    /// Build the normalized adjacency and decompose it once; everything
    /// downstream reuses the result.
    pub fn prepare(name: impl Into<String>, graph: Graph) -> Result<Self> {
        let ahat = build_normalized_adjacency(&graph)?;
        let decomp = eigendecompose(&ahat)?;
        Ok(Self {
            name: name.into(),
            graph,
            decomp,
        })
    }

    pub fn vandermonde(&self, kind: BasisKind, order: usize) -> Result<BasisMatrix> {
        Ok(vandermonde(kind, order, self.decomp.eigenvalues())?)
    }
}
