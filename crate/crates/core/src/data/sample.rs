use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Community,
    Surface,
    Figures,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Community => "community",
            Family::Surface => "surface",
            Family::Figures => "figures",
        })
    }
}

/// Node features plus the ground-truth undirected graph they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample {
    pub family: Family,
    pub variant: String,
    pub features: DenseMatrix,
    pub adjacency: DenseMatrix,
    pub seed: u64,
}

impl GraphSample {
    pub fn new(
        family: Family,
        variant: impl Into<String>,
        features: DenseMatrix,
        adjacency: DenseMatrix,
        seed: u64,
    ) -> Result<Self> {
        if features.rows() != adjacency.rows() {
            return Err(GlnError::Dimension(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                adjacency.rows()
            )));
        }
        if !features.is_finite() {
            return Err(GlnError::Format("non-finite node features".into()));
        }
        check_adjacency(&adjacency)?;
        Ok(Self {
            family,
            variant: variant.into(),
            features,
            adjacency,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        edge_list(&self.adjacency)
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Fraction of unordered node pairs that are edges.
    pub fn density(&self) -> f64 {
        let n = self.n();
        let pairs = n * n.saturating_sub(1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }
}

/// Symmetric, binary, zero-diagonal.
pub fn check_adjacency(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(GlnError::InvalidAdjacency(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let n = a.rows();
    for i in 0..n {
        if a[(i, i)] != 0.0 {
            return Err(GlnError::InvalidAdjacency(format!("self-loop at {i}")));
        }
        for j in (i + 1)..n {
            let x = a[(i, j)];
            if x != 0.0 && x != 1.0 {
                return Err(GlnError::InvalidAdjacency(format!("entry ({i},{j}) = {x}")));
            }
            if x != a[(j, i)] {
                return Err(GlnError::InvalidAdjacency(format!("asymmetric pair ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Unordered edges `(i, j)` with `i < j`, in row-major order.
pub fn edge_list(a: &DenseMatrix) -> Vec<(usize, usize)> {
    let n = a.rows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if a[(i, j)] != 0.0 {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<DenseMatrix> {
    let mut a = DenseMatrix::zeros(n, n);
    for &(i, j) in edges {
        if i >= n || j >= n || i == j {
            return Err(GlnError::InvalidAdjacency(format!("bad edge ({i},{j}) for n = {n}")));
        }
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    Ok(a)
}
