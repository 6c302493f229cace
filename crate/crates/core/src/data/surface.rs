//! Sampled 3-D surfaces turned into grid meshes.
//!
//! Each surface is sampled on a regular `u_steps x v_steps` parameter grid.
//! Nodes are the sampled points (after a random affine transform) and edges
//! join 4-neighbours in parameter space, wrapping only along periodic
//! coordinates.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::{adjacency_from_edges, Family, GraphSample};
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Ellipsoid,
    EllipticHyperboloid,
    EllipticParaboloid,
    Saddle,
    Torus,
    SineRadial,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 6] = [
        SurfaceKind::Torus,
        SurfaceKind::EllipticParaboloid,
        SurfaceKind::Saddle,
        SurfaceKind::Ellipsoid,
        SurfaceKind::EllipticHyperboloid,
        SurfaceKind::SineRadial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Ellipsoid => "ellipsoid",
            SurfaceKind::EllipticHyperboloid => "elliptic_hyperboloid",
            SurfaceKind::EllipticParaboloid => "elliptic_paraboloid",
            SurfaceKind::Saddle => "saddle",
            SurfaceKind::Torus => "torus",
            SurfaceKind::SineRadial => "sine_radial",
        }
    }

    /// Whether the (u, v) grid coordinates wrap around.
    fn periodic(self) -> (bool, bool) {
        match self {
            SurfaceKind::Torus => (true, true),
            SurfaceKind::Ellipsoid | SurfaceKind::EllipticHyperboloid => (true, false),
            _ => (false, false),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Torus major radius.
    pub major_radius: f64,
    /// Torus minor radius.
    pub minor_radius: f64,
    /// Amplitude of the radial sine.
    pub height: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            major_radius: 2.0,
            minor_radius: 1.0,
            height: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformMode {
    Identity,
    #[default]
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    #[serde(default)]
    pub params: SurfaceParams,
    pub u_steps: usize,
    pub v_steps: usize,
    #[serde(default)]
    pub transform: TransformMode,
}

impl SurfaceSpec {
    pub fn grid(kind: SurfaceKind, u_steps: usize, v_steps: usize) -> Self {
        Self {
            kind,
            params: SurfaceParams::default(),
            u_steps,
            v_steps,
            transform: TransformMode::Random,
        }
    }

    /// 10 x 10 grid.
    pub fn surf100(kind: SurfaceKind) -> Self {
        Self::grid(kind, 10, 10)
    }

    /// 20 x 20 grid.
    pub fn surf400(kind: SurfaceKind) -> Self {
        Self::grid(kind, 20, 20)
    }

    pub fn n(&self) -> usize {
        self.u_steps * self.v_steps
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let all_positive = [p.a, p.b, p.c, p.major_radius, p.minor_radius, p.height]
            .iter()
            .all(|&x| x > 0.0 && x.is_finite());
        if !all_positive {
            return Err(GlnError::Config("surface parameters must be positive".into()));
        }
        if self.u_steps == 0 || self.v_steps == 0 {
            return Err(GlnError::Config("surface grid must be non-empty".into()));
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, steps: usize, i: usize) -> f64 {
    if steps == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (steps - 1) as f64
    }
}

/// Untransformed point for grid cell `(i, j)`.
pub fn surface_point(spec: &SurfaceSpec, i: usize, j: usize) -> [f64; 3] {
    let p = &spec.params;
    let (us, vs) = (spec.u_steps, spec.v_steps);
    match spec.kind {
        SurfaceKind::Ellipsoid => {
            let theta = TAU * i as f64 / us as f64;
            let phi = PI * (j as f64 + 0.5) / vs as f64;
            [
                p.a * phi.sin() * theta.cos(),
                p.b * phi.sin() * theta.sin(),
                p.c * phi.cos(),
            ]
        }
        SurfaceKind::EllipticHyperboloid => {
            let theta = TAU * i as f64 / us as f64;
            let t = linspace(-1.0, 1.0, vs, j);
            [
                p.a * t.cosh() * theta.cos(),
                p.b * t.cosh() * theta.sin(),
                p.c * t.sinh(),
            ]
        }
        SurfaceKind::EllipticParaboloid => {
            let x = linspace(-1.0, 1.0, us, i);
            let y = linspace(-1.0, 1.0, vs, j);
            [x, y, x * x / (p.a * p.a) + y * y / (p.b * p.b)]
        }
        SurfaceKind::Saddle => {
            let x = linspace(-1.0, 1.0, us, i);
            let y = linspace(-1.0, 1.0, vs, j);
            [x, y, x * x / (p.a * p.a) - y * y / (p.b * p.b)]
        }
        SurfaceKind::Torus => {
            let theta = TAU * i as f64 / us as f64;
            let phi = TAU * j as f64 / vs as f64;
            let ring = p.major_radius + p.minor_radius * phi.cos();
            [ring * theta.cos(), ring * theta.sin(), p.minor_radius * phi.sin()]
        }
        SurfaceKind::SineRadial => {
            let x = linspace(-TAU, TAU, us, i);
            let y = linspace(-TAU, TAU, vs, j);
            [x, y, p.height * (x * x + y * y).sqrt().sin()]
        }
    }
}

/// Grid-mesh edges for the spec's resolution and periodicity.
pub fn grid_edges(spec: &SurfaceSpec) -> Vec<(usize, usize)> {
    let (us, vs) = (spec.u_steps, spec.v_steps);
    let (wrap_u, wrap_v) = spec.kind.periodic();
    let id = |i: usize, j: usize| i * vs + j;
    let mut edges = BTreeSet::new();
    let mut link = |a: usize, b: usize| {
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    };
    for i in 0..us {
        for j in 0..vs {
            if i + 1 < us {
                link(id(i, j), id(i + 1, j));
            } else if wrap_u {
                link(id(i, j), id(0, j));
            }
            if j + 1 < vs {
                link(id(i, j), id(i, j + 1));
            } else if wrap_v {
                link(id(i, j), id(i, 0));
            }
        }
    }
    edges.into_iter().collect()
}

/// Affine map `x -> linear · x + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub linear: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        linear: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        offset: [0.0; 3],
    };

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let mut out = self.offset;
        for (r, o) in out.iter_mut().enumerate() {
            *o += (0..3).map(|c| self.linear[r][c] * p[c]).sum::<f64>();
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.linear;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    fn then_linear(self, m: [[f64; 3]; 3]) -> Affine {
        let mut linear = [[0.0; 3]; 3];
        for (r, row) in linear.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| m[r][k] * self.linear[k][c]).sum();
            }
        }
        Affine { linear, ..self }
    }

    /// Each of scale, rotation, shear, reflection and translation is included
    /// independently with probability 1/2.
    pub fn random(rng: &mut impl Rng) -> Affine {
        let mut t = Affine::IDENTITY;
        if rng.random_bool(0.5) {
            let s: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..=2.0));
            t = t.then_linear([[s[0], 0.0, 0.0], [0.0, s[1], 0.0], [0.0, 0.0, s[2]]]);
        }
        if rng.random_bool(0.5) {
            t = t.then_linear(random_rotation(rng));
        }
        if rng.random_bool(0.5) {
            let mut m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            for (r, row) in m.iter_mut().enumerate() {
                for (c, x) in row.iter_mut().enumerate() {
                    if r != c {
                        *x = rng.random_range(-0.3..=0.3);
                    }
                }
            }
            t = t.then_linear(m);
        }
        if rng.random_bool(0.5) {
            let mut flip = [1.0; 3];
            while flip.iter().all(|&f| f > 0.0) {
                flip = std::array::from_fn(|_| if rng.random_bool(0.5) { -1.0 } else { 1.0 });
            }
            t = t.then_linear([[flip[0], 0.0, 0.0], [0.0, flip[1], 0.0], [0.0, 0.0, flip[2]]]);
        }
        if rng.random_bool(0.5) {
            t.offset = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        }
        t
    }
}

/// Uniform rotation from a random unit quaternion.
fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
        b * (TAU * u3).cos(),
    );
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn gen_surface(spec: &SurfaceSpec, seed: u64) -> Result<GraphSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transform = match spec.transform {
        TransformMode::Identity => Affine::IDENTITY,
        TransformMode::Random => loop {
            let t = Affine::random(&mut rng);
            if t.determinant().abs() > 1e-6 {
                break t;
            }
        },
    };
    let (us, vs) = (spec.u_steps, spec.v_steps);
    let mut features = DenseMatrix::zeros(us * vs, 3);
    for i in 0..us {
        for j in 0..vs {
            let p = transform.apply(surface_point(spec, i, j));
            for (c, x) in p.into_iter().enumerate() {
                features[(i * vs + j, c)] = x;
            }
        }
    }
    let adjacency = adjacency_from_edges(us * vs, &grid_edges(spec))?;
    GraphSample::new(Family::Surface, spec.kind.name(), features, adjacency, seed)
}
