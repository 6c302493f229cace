//! Degree and clustering-coefficient histograms of a single graph.

use crate::data::check_adjacency;
use crate::error::Result;
use crate::matrix::DenseMatrix;

pub const CLUSTERING_BINS: usize = 100;

fn normalize(counts: Vec<usize>, total: usize) -> Vec<f64> {
    if total == 0 {
        return counts.into_iter().map(|_| 0.0).collect();
    }
    counts.into_iter().map(|c| c as f64 / total as f64).collect()
}

fn degrees(a: &DenseMatrix) -> Vec<usize> {
    a.row_sums().into_iter().map(|d| d as usize).collect()
}

/// Fraction of nodes with each degree `0..n`.
pub fn degree_histogram(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_adjacency(a)?;
    let n = a.rows();
    let mut hist = vec![0usize; n];
    for d in degrees(a) {
        hist[d] += 1;
    }
    Ok(normalize(hist, n))
}

/// Local clustering coefficient of every node; 0 below degree 2.
pub fn clustering_coefficients(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_adjacency(a)?;
    let n = a.rows();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| a[(i, j)] != 0.0).collect())
        .collect();
    Ok(neighbours
        .iter()
        .map(|nb| {
            let d = nb.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (x, &u) in nb.iter().enumerate() {
                links += nb[x + 1..].iter().filter(|&&w| a[(u, w)] != 0.0).count();
            }
            2.0 * links as f64 / (d * (d - 1)) as f64
        })
        .collect())
}

/// Bin of a coefficient in `[0, 1]`; 1 falls in the last bin.
pub fn clustering_bin(c: f64) -> usize {
    ((c * CLUSTERING_BINS as f64).floor() as usize).min(CLUSTERING_BINS - 1)
}

/// Fraction of nodes per clustering bin.
pub fn clustering_histogram(a: &DenseMatrix) -> Result<Vec<f64>> {
    let coeffs = clustering_coefficients(a)?;
    let mut hist = vec![0usize; CLUSTERING_BINS];
    for &c in &coeffs {
        hist[clustering_bin(c)] += 1;
    }
    Ok(normalize(hist, coeffs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::adjacency_from_edges;

    fn graph(n: usize, edges: &[(usize, usize)]) -> DenseMatrix {
        adjacency_from_edges(n, edges).unwrap()
    }

    #[test]
    fn degree_examples() {
        let k3 = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(degree_histogram(&k3).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(degree_histogram(&graph(3, &[])).unwrap(), vec![1.0, 0.0, 0.0]);
        let p4 = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(degree_histogram(&p4).unwrap(), vec![0.0, 0.5, 0.5, 0.0]);
        assert!(degree_histogram(&DenseMatrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn clustering_examples() {
        let k3 = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(clustering_coefficients(&k3).unwrap(), vec![1.0; 3]);
        assert_eq!(clustering_histogram(&k3).unwrap()[99], 1.0);
        let star = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(clustering_histogram(&star).unwrap()[0], 1.0);
        // K4 minus edge 2-3
        let diamond = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        let c = clustering_coefficients(&diamond).unwrap();
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15 && (c[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((c[2], c[3]), (1.0, 1.0));
    }

    #[test]
    fn bins_cover_the_unit_interval() {
        assert_eq!(clustering_bin(0.0), 0);
        assert_eq!(clustering_bin(0.5), 50);
        assert_eq!(clustering_bin(0.999), 99);
        assert_eq!(clustering_bin(1.0), 99);
    }
}
