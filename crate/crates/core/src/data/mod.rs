//! Synthetic dataset families and helpers shared by all of them.

pub mod community;
pub mod figures;
pub mod io;
pub mod sample;
pub mod surface;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use community::{gen_community, CommunitySpec, FeatureMode};
pub use figures::{gen_figure_image, render_figure_image, Figure, FigureImage, FigureImageSpec};
pub use sample::{adjacency_from_edges, check_adjacency, edge_list, Family, GraphSample};
pub use surface::{gen_surface, SurfaceKind, SurfaceParams, SurfaceSpec, TransformMode};

use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

/// Derives the seed of the `index`-th sample from a dataset seed.
pub fn sample_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded shuffle followed by a split into `(train, test)`.
///
/// The train part gets `round(train_fraction · len)` items, clamped so that
/// neither side is empty.
pub fn split_dataset<T>(samples: Vec<T>, train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if samples.len() < 2 {
        return Err(GlnError::Config(format!(
            "cannot split {} sample(s) into train and test",
            samples.len()
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(GlnError::Config(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    let mut samples = samples;
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let len = samples.len();
    let n_train = ((train_fraction * len as f64).round() as usize).clamp(1, len - 1);
    let test = samples.split_off(n_train);
    Ok((samples, test))
}

/// The structure fed to the first block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InitialAdjacency {
    Identity,
    /// `⌊p · n(n-1)/2⌋` distinct random pairs plus the identity diagonal.
    RandomProportion { p: f64, seed: u64 },
}

pub fn make_initial_adjacency(n: usize, mode: InitialAdjacency) -> Result<DenseMatrix> {
    let mut a = DenseMatrix::identity(n);
    if let InitialAdjacency::RandomProportion { p, seed } = mode {
        if !(0.0..=1.0).contains(&p) {
            return Err(GlnError::Config(format!("proportion {p} not in [0, 1]")));
        }
        let pairs = n * n.saturating_sub(1) / 2;
        let chosen = (p * pairs as f64).floor() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // pair index -> (i, j) with i < j, row by row
        let mut starts = Vec::with_capacity(n);
        let mut acc = 0;
        for i in 0..n {
            starts.push(acc);
            acc += n - 1 - i;
        }
        for idx in index::sample(&mut rng, pairs, chosen.min(pairs)) {
            let i = starts.partition_point(|&s| s <= idx) - 1;
            let j = i + 1 + (idx - starts[i]);
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
    }
    Ok(a)
}
