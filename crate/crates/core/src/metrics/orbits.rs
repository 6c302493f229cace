//! Per-node graphlet orbit counts for connected graphlets on 2, 3 and 4 nodes.
//!
//! Orbit numbering:
//!
//! | orbit | graphlet | position |
//! |-------|----------|----------|
//! | 0 | edge | either end |
//! | 1, 2 | path on 3 nodes | end, middle |
//! | 3 | triangle | any |
//! | 4, 5 | path on 4 nodes | end, inner |
//! | 6, 7 | star | leaf, centre |
//! | 8 | 4-cycle | any |
//! | 9, 10, 11 | paw | pendant, triangle degree 2, triangle degree 3 |
//! | 12, 13 | diamond | degree 2, degree 3 |
//! | 14 | 4-clique | any |
//!
//! Counts are induced. They are obtained from non-induced pattern counts,
//! which only need degrees and common-neighbour counts, and then from the
//! fixed number of times each pattern occurs inside each larger graphlet.

use crate::data::check_adjacency;
use crate::error::Result;
use crate::matrix::DenseMatrix;

pub const ORBITS: usize = 15;

/// Neighbour lists, bitset rows and all pairwise common-neighbour counts.
struct Neighbourhoods {
    n: usize,
    adj: Vec<Vec<usize>>,
    bits: Vec<Vec<u64>>,
    common: Vec<i64>,
}

impl Neighbourhoods {
    fn new(a: &DenseMatrix) -> Self {
        let n = a.rows();
        let words = n.div_ceil(64);
        let mut adj = vec![Vec::new(); n];
        let mut bits = vec![vec![0u64; words]; n];
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    adj[i].push(j);
                    bits[i][j / 64] |= 1 << (j % 64);
                }
            }
        }
        let mut common = vec![0i64; n * n];
        for i in 0..n {
            for j in i..n {
                let c = and_count(&bits[i], &bits[j]) as i64;
                common[i * n + j] = c;
                common[j * n + i] = c;
            }
        }
        Self { n, adj, bits, common }
    }

    fn deg(&self, v: usize) -> i64 {
        self.adj[v].len() as i64
    }

    fn common(&self, u: usize, w: usize) -> i64 {
        self.common[u * self.n + w]
    }

    fn linked(&self, u: usize, w: usize) -> bool {
        self.bits[u][w / 64] >> (w % 64) & 1 == 1
    }
}

fn and_count(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

fn and3_count(a: &[u64], b: &[u64], c: &[u64]) -> u32 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| (x & y & z).count_ones()).sum()
}

fn choose2(x: i64) -> i64 {
    x * (x - 1) / 2
}

fn choose3(x: i64) -> i64 {
    x * (x - 1) * (x - 2) / 6
}

/// One 15-vector per node.
pub fn orbit_counts(a: &DenseMatrix) -> Result<Vec<[u64; ORBITS]>> {
    check_adjacency(a)?;
    let g = Neighbourhoods::new(a);
    let n = g.n;
    let tri: Vec<i64> = (0..n)
        .map(|v| g.adj[v].iter().map(|&u| g.common(v, u)).sum::<i64>() / 2)
        .collect();
    // Σ over neighbours b of a of (deg b - 1)
    let reach: Vec<i64> = (0..n)
        .map(|a| g.adj[a].iter().map(|&b| g.deg(b) - 1).sum())
        .collect();

    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let d = g.deg(v);
        let t = tri[v];
        let nv = &g.adj[v];

        // non-induced pattern counts, indexed by the orbit of v in the pattern
        let mut p = [0i64; ORBITS];
        let mut a4_diag = 0;
        for w in 0..n {
            a4_diag += g.common(v, w).pow(2);
        }
        let mut neighbour_degrees = 0;
        for &x in nv {
            let (dx, cx) = (g.deg(x), g.common(v, x));
            neighbour_degrees += dx;
            p[4] += reach[x] - d + 1 - cx;
            p[5] += (d - 1) * (dx - 1) - cx;
            p[6] += choose2(dx - 1);
            p[9] += tri[x] - cx;
            p[10] += cx * (dx - 2);
            p[13] += choose2(cx);
        }
        p[7] = choose3(d);
        p[8] = (a4_diag - neighbour_degrees) / 2 - choose2(d);
        p[11] = t * (d - 2).max(0);
        let mut cliques = 0;
        for (i, &x) in nv.iter().enumerate() {
            for &y in &nv[i + 1..] {
                if g.linked(x, y) {
                    p[12] += g.common(x, y) - 1;
                    cliques += and3_count(&g.bits[v], &g.bits[x], &g.bits[y]) as i64;
                }
            }
        }
        p[14] = cliques / 3;

        let mut o = [0i64; ORBITS];
        o[0] = d;
        o[3] = t;
        o[2] = choose2(d) - t;
        o[1] = neighbour_degrees - d - 2 * t;
        o[14] = p[14];
        o[13] = p[13] - 3 * o[14];
        o[12] = p[12] - 3 * o[14];
        o[11] = p[11] - 2 * o[13] - 3 * o[14];
        o[10] = p[10] - 2 * o[12] - 2 * o[13] - 6 * o[14];
        o[9] = p[9] - 2 * o[12] - 3 * o[14];
        o[8] = p[8] - o[12] - o[13] - 3 * o[14];
        o[7] = p[7] - o[11] - o[13] - o[14];
        o[6] = p[6] - o[9] - o[10] - 2 * o[12] - o[13] - 3 * o[14];
        o[5] = p[5] - 2 * o[8] - o[10] - 2 * o[11] - 2 * o[12] - 4 * o[13] - 6 * o[14];
        o[4] = p[4] - 2 * o[8] - 2 * o[9] - o[10] - 4 * o[12] - 2 * o[13] - 6 * o[14];
        debug_assert!(o.iter().all(|&c| c >= 0), "negative orbit count at node {v}: {o:?}");
        out.push(o.map(|c| c.max(0) as u64));
    }
    Ok(out)
}

/// Mean of the per-node counts; all zeros for the empty node set.
pub fn orbit_mean_vector(counts: &[[u64; ORBITS]]) -> [f64; ORBITS] {
    let mut mean = [0.0; ORBITS];
    if counts.is_empty() {
        return mean;
    }
    for c in counts {
        for (m, &x) in mean.iter_mut().zip(c) {
            *m += x as f64;
        }
    }
    mean.map(|m| m / counts.len() as f64)
}
