//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's numeric code: matrices are plain nested vectors and
//! every operation is an explicit scalar loop.
#![allow(dead_code)]

use gln::model::{Activation, GlnModel};
use gln::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(m: &DenseMatrix) -> Mat {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn from_mat(m: &Mat) -> DenseMatrix {
    DenseMatrix::from_rows(m).unwrap()
}

pub fn mm(a: &Mat, b: &Mat) -> Mat {
    let (r, inner, c) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), inner);
    let mut out = vec![vec![0.0; c]; r];
    for i in 0..r {
        for j in 0..c {
            let mut s = 0.0;
            for t in 0..inner {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn tr(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
}

pub fn apply(a: &Mat, act: Activation) -> Mat {
    a.iter()
        .map(|row| {
            row.iter()
                .map(|&x| match act {
                    Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
                    Activation::Tanh => x.tanh(),
                    Activation::Identity => x,
                })
                .collect()
        })
        .collect()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `D^-1/2 (A + I) D^-1/2` with `D` the row sums of `A + I`.
pub fn tau(a: &Mat) -> Mat {
    let n = a.len();
    let hat: Mat = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] + if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let deg: Vec<f64> = hat.iter().map(|r| r.iter().sum()).collect();
    (0..n)
        .map(|i| (0..n).map(|j| hat[i][j] / (deg[i].sqrt() * deg[j].sqrt())).collect())
        .collect()
}

/// Per block: `(H_int, H_local, H_global, A')`.
pub fn forward(model: &GlnModel, h0: &Mat, a0: &Mat) -> Vec<(Mat, Mat, Mat, Mat)> {
    let acts = model.activations();
    let (mut h, mut a) = (h0.clone(), a0.clone());
    let mut out = Vec::new();
    for layer in model.layers() {
        let t = tau(&a);
        let th = mm(&t, &h);
        let mut h_int: Option<Mat> = None;
        for w in &layer.kernels {
            let z = apply(&mm(&th, &to_mat(w)), acts.embed);
            h_int = Some(match h_int {
                None => z,
                Some(acc) => add(&acc, &z),
            });
        }
        let h_int = h_int.unwrap();
        let h_local = apply(&mm(&mm(&t, &h_int), &to_mat(&layer.local)), acts.local);
        let h_global = apply(&mm(&h_local, &to_mat(&layer.global)), acts.global);
        let m = to_mat(&layer.projection);
        let s = mm(&mm(&mm(&mm(&m, &h_local), &to_mat(&layer.merge)), &tr(&h_global)), &tr(&m));
        let n = s.len();
        let sym: Mat = (0..n).map(|i| (0..n).map(|j| 0.5 * (s[i][j] + s[j][i])).collect()).collect();
        let a_next = apply(&sym, acts.adjacency);
        h = h_local.clone();
        a = a_next.clone();
        out.push((h_int, h_local, h_global, a_next));
    }
    out
}

/// Class-balanced cross-entropy summed over `i < j`, probabilities clamped
/// to `[1e-12, 1 - 1e-12]`; `swap` exchanges the two class weights.
pub fn balanced_bce(p: &Mat, t: &Mat, swap: bool) -> f64 {
    let n = p.len();
    let mut pos = 0usize;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            pairs += 1;
            if t[i][j] == 1.0 {
                pos += 1;
            }
        }
    }
    if pairs == 0 {
        return 0.0;
    }
    let beta = pos as f64 / pairs as f64;
    let (wp, wn) = if swap { (1.0 - beta, beta) } else { (beta, 1.0 - beta) };
    let mut loss = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let q = p[i][j].max(1e-12).min(1.0 - 1e-12);
            loss += if t[i][j] == 1.0 { -wp * q.ln() } else { -wn * (1.0 - q).ln() };
        }
    }
    loss
}

/// `1 - 2Σpt / (Σp² + Σt²)` over all entries, zero when both are empty.
pub fn dice(p: &Mat, t: &Mat) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (pr, tr_) in p.iter().zip(t) {
        for (&x, &y) in pr.iter().zip(tr_) {
            num += x * y;
            den += x * x + y * y;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        1.0 - 2.0 * num / den
    }
}

/// Optimal 1-D transport by the north-west corner rule; histograms may differ
/// in length and are padded with empty bins. Both must carry equal mass.
pub fn emd_transport(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let mut supply: Vec<f64> = (0..len).map(|i| p.get(i).copied().unwrap_or(0.0)).collect();
    let mut demand: Vec<f64> = (0..len).map(|i| q.get(i).copied().unwrap_or(0.0)).collect();
    let (mut i, mut j, mut cost) = (0, 0, 0.0);
    while i < len && j < len {
        let moved = supply[i].min(demand[j]);
        cost += moved * (i as f64 - j as f64).abs();
        supply[i] -= moved;
        demand[j] -= moved;
        if supply[i] <= demand[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    cost
}

/// Orbit counts by enumerating every induced connected subgraph on 2-4 nodes.
pub fn orbits_exhaustive(adj: &[Vec<bool>]) -> Vec<[u64; 15]> {
    let n = adj.len();
    let mut counts = vec![[0u64; 15]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            if adj[a][b] {
                counts[a][0] += 1;
                counts[b][0] += 1;
            }
            for c in (b + 1)..n {
                let nodes = [a, b, c];
                let deg = |v: usize| nodes.iter().filter(|&&u| u != v && adj[v][u]).count();
                let edges: usize = nodes.iter().map(|&v| deg(v)).sum::<usize>() / 2;
                for &v in &nodes {
                    match (edges, deg(v)) {
                        (2, 1) => counts[v][1] += 1,
                        (2, 2) => counts[v][2] += 1,
                        (3, _) => counts[v][3] += 1,
                        _ => {}
                    }
                }
                for d in (c + 1)..n {
                    let nodes = [a, b, c, d];
                    let deg = |v: usize| nodes.iter().filter(|&&u| u != v && adj[v][u]).count();
                    let degs: Vec<usize> = nodes.iter().map(|&v| deg(v)).collect();
                    let edges = degs.iter().sum::<usize>() / 2;
                    if edges < 3 || degs.contains(&0) {
                        continue;
                    }
                    let mut sorted = degs.clone();
                    sorted.sort_unstable();
                    for (&v, &dv) in nodes.iter().zip(&degs) {
                        let orbit = match (sorted.as_slice(), dv) {
                            ([1, 1, 2, 2], 1) => 4,
                            ([1, 1, 2, 2], 2) => 5,
                            ([1, 1, 1, 3], 1) => 6,
                            ([1, 1, 1, 3], 3) => 7,
                            ([2, 2, 2, 2], _) => 8,
                            ([1, 2, 2, 3], 1) => 9,
                            ([1, 2, 2, 3], 2) => 10,
                            ([1, 2, 2, 3], 3) => 11,
                            ([2, 2, 3, 3], 2) => 12,
                            ([2, 2, 3, 3], 3) => 13,
                            ([3, 3, 3, 3], _) => 14,
                            other => panic!("unexpected degree pattern {other:?}"),
                        };
                        counts[v][orbit] += 1;
                    }
                }
            }
        }
    }
    counts
}

pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}

pub fn as_bool(a: &DenseMatrix) -> Vec<Vec<bool>> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a[(i, j)] != 0.0).collect()).collect()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// Symmetric soft adjacency with entries in `[0, 1]` and a unit diagonal.
pub fn random_soft_adjacency(rng: &mut impl Rng, n: usize) -> DenseMatrix {
    let mut a = DenseMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = rng.random_range(0.0..1.0);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    a
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A model with every parameter drawn at random, `M` included.
pub fn random_model(rng: &mut impl Rng, input_dim: usize, hidden: usize, layers: usize, n: usize, k: usize) -> GlnModel {
    let mut model = GlnModel::init(gln::ModelShape::uniform(input_dim, hidden, layers, n, k), 0.5, rng.random()).unwrap();
    for p in model.parameters_mut() {
        for x in p.as_mut_slice() {
            *x = rng.random_range(-1.0..1.0);
        }
    }
    model
}

/// Largest deviation of the crate's forward pass from [`forward`] over all
/// block outputs, for one random instance with `n <= 8`.
pub fn forward_deviation(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.random_range(1..=8);
    let d0 = r.random_range(1..=4);
    let hidden = r.random_range(1..=5);
    let layers = r.random_range(1..=3);
    let k = r.random_range(1..=3);
    let model = random_model(&mut r, d0, hidden, layers, n, k);
    let h0 = random_matrix(&mut r, n, d0, 1.0);
    let a0 = if r.random_bool(0.5) { DenseMatrix::identity(n) } else { random_soft_adjacency(&mut r, n) };
    let got = model.forward(&h0, &a0).unwrap();
    let want = forward(&model, &to_mat(&h0), &to_mat(&a0));
    got.blocks
        .iter()
        .zip(&want)
        .map(|(g, w)| {
            [
                max_abs_diff(&to_mat(&g.h_int), &w.0),
                max_abs_diff(&to_mat(&g.h_local), &w.1),
                max_abs_diff(&to_mat(&g.h_global), &w.2),
                max_abs_diff(&to_mat(&g.adjacency), &w.3),
            ]
            .into_iter()
            .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub fn tau_deviation(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.random_range(1..=8);
    let a = if r.random_bool(0.5) { random_graph(&mut r, n, 0.4) } else { random_soft_adjacency(&mut r, n) };
    max_abs_diff(&to_mat(&gln::model::sym_normalize(&a).unwrap()), &tau(&to_mat(&a)))
}

/// Deviation of both losses (both balance modes) on random predictions,
/// including saturated entries.
pub fn loss_deviation(seed: u64) -> f64 {
    use gln::loss::{dice_structural_loss_value, edge_class_loss_value, BalanceMode};
    let mut r = rng(seed);
    let n = r.random_range(1..=8);
    let density = r.random_range(0.0..1.0);
    let truth = random_graph(&mut r, n, density);
    let mut p = random_soft_adjacency(&mut r, n);
    for i in 0..n {
        for j in 0..n {
            if r.random_bool(0.1) {
                p[(i, j)] = if r.random_bool(0.5) { 0.0 } else { 1.0 };
            }
        }
    }
    let (pm, tm) = (to_mat(&p), to_mat(&truth));
    let e1 = (edge_class_loss_value(&p, &truth, BalanceMode::PaperLiteral).unwrap() - balanced_bce(&pm, &tm, false)).abs();
    let e2 = (edge_class_loss_value(&p, &truth, BalanceMode::HedStandard).unwrap() - balanced_bce(&pm, &tm, true)).abs();
    let e3 = (dice_structural_loss_value(&p, &truth).unwrap() - dice(&pm, &tm)).abs();
    e1.max(e2).max(e3)
}

/// Deviation of the EMD on random normalised histograms of unequal length.
pub fn emd_deviation(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut hist = |len: usize| {
        let raw: Vec<f64> = (0..len)
            .map(|_| {
                let x: f64 = r.random_range(0.0..1.0);
                if x < 0.3 { 0.0 } else { x }
            })
            .collect();
        let s: f64 = raw.iter().sum();
        if s == 0.0 {
            let mut v = vec![0.0; len];
            v[0] = 1.0;
            v
        } else {
            raw.iter().map(|x| x / s).collect()
        }
    };
    let (p, q) = (hist(1 + (seed % 9) as usize), hist(1 + (seed / 9 % 9) as usize));
    (gln::metrics::emd_1d(&p, &q) - emd_transport(&p, &q)).abs()
}

/// Largest count difference against [`orbits_exhaustive`].
pub fn orbit_deviation(seed: u64) -> u64 {
    let mut r = rng(seed);
    let n = r.random_range(0..=8);
    let density = r.random_range(0.0..1.0);
    let a = random_graph(&mut r, n, density);
    let got = gln::metrics::orbit_counts(&a).unwrap();
    let want = orbits_exhaustive(&as_bool(&a));
    got.iter()
        .flatten()
        .zip(want.iter().flatten())
        .map(|(x, y)| x.abs_diff(*y))
        .max()
        .unwrap_or(0)
}

/// Worst `|g - fd| / max(1, |g|, |fd|)` over every parameter entry of the
/// total loss, central differences with step `h`.
pub fn gradient_error(seed: u64, weights: &gln::loss::LossWeights, h: f64) -> f64 {
    use gln::data::{Family, GraphSample};
    use gln::train::loss_and_gradients;
    let mut r = rng(seed);
    let n = 6;
    let mut model = GlnModel::init(gln::ModelShape::uniform(3, 4, 2, n, 2), 0.5, r.random()).unwrap();
    for p in model.parameters_mut() {
        for x in p.as_mut_slice() {
            *x += r.random_range(-0.3..0.3);
        }
    }
    let features = random_matrix(&mut r, n, 3, 1.0);
    let mut truth = random_graph(&mut r, n, 0.4);
    if truth.sum() == 0.0 {
        truth[(0, 1)] = 1.0;
        truth[(1, 0)] = 1.0;
    }
    let sample = GraphSample::new(Family::Community, "grad", features, truth, seed).unwrap();
    let initial = DenseMatrix::identity(n);
    let (_, grads) = loss_and_gradients(&model, &sample, &initial, weights).unwrap();
    let count = model.parameters().len();
    let mut worst: f64 = 0.0;
    for pi in 0..count {
        let len = model.parameters()[pi].as_slice().len();
        for e in 0..len {
            let orig = model.parameters()[pi].as_slice()[e];
            model.parameters_mut()[pi].as_mut_slice()[e] = orig + h;
            let up = loss_and_gradients(&model, &sample, &initial, weights).unwrap().0.total;
            model.parameters_mut()[pi].as_mut_slice()[e] = orig - h;
            let down = loss_and_gradients(&model, &sample, &initial, weights).unwrap().0.total;
            model.parameters_mut()[pi].as_mut_slice()[e] = orig;
            let fd = (up - down) / (2.0 * h);
            let g = grads[pi].as_slice()[e];
            worst = worst.max((g - fd).abs() / 1f64.max(g.abs()).max(fd.abs()));
        }
    }
    worst
}
