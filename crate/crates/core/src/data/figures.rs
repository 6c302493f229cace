//! Procedural images of circles, rectangles and dividing lines.
//!
//! Every pixel is a node with its (noisy) RGB colour as features. Two
//! 4-neighbouring pixels are joined iff they belong to the same segment,
//! where segments are the 4-connected components of the painted regions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sample::{adjacency_from_edges, Family, GraphSample};
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FigureImageSpec {
    pub side: usize,
    pub samples: usize,
    pub max_circles: usize,
    pub max_rectangles: usize,
    pub max_lines: usize,
    pub noise_std: f64,
    pub min_color_distance: f64,
}

impl Default for FigureImageSpec {
    fn default() -> Self {
        Self {
            side: 20,
            samples: 3000,
            max_circles: 2,
            max_rectangles: 2,
            max_lines: 1,
            noise_std: 0.02,
            min_color_distance: 0.2,
        }
    }
}

impl FigureImageSpec {
    pub fn n(&self) -> usize {
        self.side * self.side
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 {
            return Err(GlnError::Config("image side must be positive".into()));
        }
        if !(self.noise_std >= 0.0) || !(self.min_color_distance >= 0.0) {
            return Err(GlnError::Config("noise and colour distance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A shape in pixel coordinates; pixel `(x, y)` has its centre at `(x + ½, y + ½)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Figure {
    /// Disc inscribed in the `diameter`-sided square at `(left, top)`.
    Circle { left: usize, top: usize, diameter: usize },
    Rectangle { left: usize, top: usize, width: usize, height: usize },
    /// Band of the given thickness around the line through two points.
    Line { from: [f64; 2], to: [f64; 2], thickness: f64 },
}

impl Figure {
    fn covers(&self, x: usize, y: usize) -> bool {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        match *self {
            Figure::Circle { left, top, diameter } => {
                let r = diameter as f64 / 2.0;
                let (cx, cy) = (left as f64 + r, top as f64 + r);
                (px - cx).powi(2) + (py - cy).powi(2) <= r * r
            }
            Figure::Rectangle { left, top, width, height } => {
                (left..left + width).contains(&x) && (top..top + height).contains(&y)
            }
            Figure::Line { from, to, thickness } => {
                let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
                let len = dx.hypot(dy);
                if len == 0.0 {
                    return false;
                }
                let dist = (dy * (px - from[0]) - dx * (py - from[1])).abs() / len;
                dist <= thickness / 2.0
            }
        }
    }

    fn random(kind: usize, side: usize, rng: &mut impl Rng) -> Figure {
        let s = side as f64;
        match kind {
            0 => {
                let diameter = rng.random_range(1..=side);
                Figure::Circle {
                    left: rng.random_range(0..=side - diameter),
                    top: rng.random_range(0..=side - diameter),
                    diameter,
                }
            }
            1 => {
                let (width, height) = (rng.random_range(1..=side), rng.random_range(1..=side));
                Figure::Rectangle {
                    left: rng.random_range(0..=side - width),
                    top: rng.random_range(0..=side - height),
                    width,
                    height,
                }
            }
            _ => {
                // border to opposite border, so the band splits the canvas
                let (a, b) = (rng.random_range(0.0..s), rng.random_range(0.0..s));
                let (from, to) = if rng.random_bool(0.5) {
                    ([0.0, a], [s, b])
                } else {
                    ([a, 0.0], [b, s])
                };
                Figure::Line {
                    from,
                    to,
                    thickness: rng.random_range(1.0..=2.0),
                }
            }
        }
    }
}

/// A rendered canvas before conversion to a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureImage {
    pub side: usize,
    /// Row-major segment id per pixel, numbered in scan order.
    pub segments: Vec<usize>,
    /// Row-major RGB per pixel after noise, in `[0, 1]`.
    pub rgb: Vec<[f64; 3]>,
}

impl FigureImage {
    pub fn segment_count(&self) -> usize {
        self.segments.iter().max().map_or(0, |m| m + 1)
    }

    /// 4-neighbour pairs within the same segment.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let s = self.side;
        let mut edges = Vec::new();
        for y in 0..s {
            for x in 0..s {
                let id = y * s + x;
                if x + 1 < s && self.segments[id] == self.segments[id + 1] {
                    edges.push((id, id + 1));
                }
                if y + 1 < s && self.segments[id] == self.segments[id + s] {
                    edges.push((id, id + s));
                }
            }
        }
        edges
    }

    pub fn into_sample(self, seed: u64) -> Result<GraphSample> {
        let n = self.side * self.side;
        let adjacency = adjacency_from_edges(n, &self.edges())?;
        let features = DenseMatrix::from_fn(n, 3, |i, c| self.rgb[i][c]);
        GraphSample::new(Family::Figures, format!("side{}", self.side), features, adjacency, seed)
    }
}

fn distinct_color(existing: &[[f64; 3]], min_distance: f64, rng: &mut impl Rng) -> [f64; 3] {
    let mut best = [0.0; 3];
    let mut best_gap = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let c: [f64; 3] = std::array::from_fn(|_| rng.random());
        let gap = existing
            .iter()
            .map(|e| (0..3).map(|k| (e[k] - c[k]).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        if gap >= min_distance {
            return c;
        }
        if gap > best_gap {
            best_gap = gap;
            best = c;
        }
    }
    best
}

/// Relabels a region map into its 4-connected components (scan order).
fn connected_segments(side: usize, regions: &[usize]) -> Vec<usize> {
    let mut seg = vec![usize::MAX; regions.len()];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..regions.len() {
        if seg[start] != usize::MAX {
            continue;
        }
        seg[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % side, p / side);
            let mut visit = |q: usize| {
                if seg[q] == usize::MAX && regions[q] == regions[p] {
                    seg[q] = next;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < side {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - side);
            }
            if y + 1 < side {
                visit(p + side);
            }
        }
        next += 1;
    }
    seg
}

/// Paints `figures` back to front over a background, one colour per figure.
pub fn render_figures(
    side: usize,
    figures: &[Figure],
    noise_std: f64,
    min_color_distance: f64,
    rng: &mut impl Rng,
) -> Result<FigureImage> {
    let mut regions = vec![0usize; side * side];
    for (k, fig) in figures.iter().enumerate() {
        for y in 0..side {
            for x in 0..side {
                if fig.covers(x, y) {
                    regions[y * side + x] = k + 1;
                }
            }
        }
    }
    let mut colors: Vec<[f64; 3]> = Vec::with_capacity(figures.len() + 1);
    for _ in 0..=figures.len() {
        let c = distinct_color(&colors, min_color_distance, rng);
        colors.push(c);
    }
    let noise = Normal::new(0.0, noise_std).map_err(|e| GlnError::Config(e.to_string()))?;
    let rgb = regions
        .iter()
        .map(|&r| std::array::from_fn(|c| (colors[r][c] + noise.sample(rng)).clamp(0.0, 1.0)))
        .collect();
    Ok(FigureImage {
        side,
        segments: connected_segments(side, &regions),
        rgb,
    })
}

pub fn render_figure_image(spec: &FigureImageSpec, seed: u64) -> Result<FigureImage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds = Vec::new();
    let budget = spec.max_circles + spec.max_rectangles + spec.max_lines;
    while kinds.is_empty() {
        kinds.clear();
        kinds.extend(std::iter::repeat_n(0, rng.random_range(0..=spec.max_circles)));
        kinds.extend(std::iter::repeat_n(1, rng.random_range(0..=spec.max_rectangles)));
        kinds.extend(std::iter::repeat_n(2, rng.random_range(0..=spec.max_lines)));
        if budget == 0 {
            break;
        }
    }
    // random painting order
    for i in (1..kinds.len()).rev() {
        kinds.swap(i, rng.random_range(0..=i));
    }
    let figures: Vec<Figure> = kinds
        .into_iter()
        .map(|k| Figure::random(k, spec.side, &mut rng))
        .collect();
    render_figures(spec.side, &figures, spec.noise_std, spec.min_color_distance, &mut rng)
}

pub fn gen_figure_image(spec: &FigureImageSpec, seed: u64) -> Result<GraphSample> {
    render_figure_image(spec, seed)?.into_sample(seed)
}
