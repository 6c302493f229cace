//! Relaxed caveman graphs: `C` cliques of equal size with a few edges
//! rewired across cliques.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sample::{Family, GraphSample};
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// 2-D positions drawn from one Gaussian blob per community.
    #[default]
    Blobs,
    /// 2-D standard normal noise, independent of the communities.
    Noise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommunitySpec {
    pub communities: usize,
    pub community_size: usize,
    pub samples: usize,
    pub p_rewire: f64,
    pub feature_mode: FeatureMode,
    pub blob_radius: f64,
    pub blob_std: f64,
}

impl Default for CommunitySpec {
    fn default() -> Self {
        Self::with_communities(2)
    }
}

impl CommunitySpec {
    /// 300 samples for two communities, 500 for four.
    pub fn with_communities(communities: usize) -> Self {
        Self {
            communities,
            community_size: 20,
            samples: if communities == 4 { 500 } else { 300 },
            p_rewire: 0.01,
            feature_mode: FeatureMode::Blobs,
            blob_radius: 5.0,
            blob_std: 0.5,
        }
    }

    pub fn n(&self) -> usize {
        self.communities * self.community_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.communities == 0 || self.community_size < 2 {
            return Err(GlnError::Config("need at least one community of two nodes".into()));
        }
        if !(0.0..=1.0).contains(&self.p_rewire) {
            return Err(GlnError::Config(format!("p_rewire {} not in [0, 1]", self.p_rewire)));
        }
        if !(self.blob_std >= 0.0) {
            return Err(GlnError::Config("blob_std must be nonnegative".into()));
        }
        Ok(())
    }
}

const REWIRE_ATTEMPTS: usize = 64;

/// Moves edge `(u, v)` to `(u, w)` for a random `w` outside `u`'s clique.
fn try_rewire(
    adj: &mut DenseMatrix,
    u: usize,
    v: usize,
    size: usize,
    rng: &mut impl Rng,
) -> bool {
    let n = adj.rows();
    let clique = u / size;
    let outside = n - size;
    if outside == 0 {
        return false;
    }
    for _ in 0..REWIRE_ATTEMPTS {
        let mut w = rng.random_range(0..outside);
        if w >= clique * size {
            w += size;
        }
        if adj[(u, w)] == 0.0 {
            adj[(u, v)] = 0.0;
            adj[(v, u)] = 0.0;
            adj[(u, w)] = 1.0;
            adj[(w, u)] = 1.0;
            return true;
        }
    }
    false
}

pub fn gen_community(spec: &CommunitySpec, seed: u64) -> Result<GraphSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, size, n) = (spec.communities, spec.community_size, spec.n());
    let mut adj = DenseMatrix::from_fn(n, n, |i, j| (i != j && i / size == j / size) as u8 as f64);

    if spec.p_rewire > 0.0 && c > 1 {
        let mut rewired = vec![0usize; c];
        for clique in 0..c {
            let base = clique * size;
            for u in base..base + size {
                for v in (u + 1)..base + size {
                    if rng.random_bool(spec.p_rewire) && try_rewire(&mut adj, u, v, size, &mut rng) {
                        rewired[clique] += 1;
                    }
                }
            }
        }
        // every clique keeps at least one link to the outside
        for clique in 0..c {
            let base = clique * size;
            for _ in 0..REWIRE_ATTEMPTS * size * size {
                if rewired[clique] > 0 {
                    break;
                }
                let u = base + rng.random_range(0..size);
                let v = base + rng.random_range(0..size);
                if u != v && adj[(u, v)] == 1.0 && try_rewire(&mut adj, u, v, size, &mut rng) {
                    rewired[clique] += 1;
                }
            }
        }
    }

    let features = match spec.feature_mode {
        FeatureMode::Blobs => {
            let noise = Normal::new(0.0, spec.blob_std).map_err(|e| GlnError::Config(e.to_string()))?;
            DenseMatrix::from_fn(n, 2, |i, axis| {
                let angle = TAU * (i / size) as f64 / c as f64;
                let centre = if axis == 0 { angle.cos() } else { angle.sin() } * spec.blob_radius;
                centre + noise.sample(&mut rng)
            })
        }
        FeatureMode::Noise => {
            let noise = Normal::new(0.0, 1.0).expect("unit normal");
            DenseMatrix::from_fn(n, 2, |_, _| noise.sample(&mut rng))
        }
    };
    GraphSample::new(Family::Community, format!("c{c}"), features, adj, seed)
}
