//! The recurrent GLN block and its L-step chain.
//!
//! One block maps `(H, A)` to `(H', A')`:
//!
//! ```text
//! T        = τ(A)                                  renormalised adjacency
//! H_int    = Σ_i σ(T · H · W_i)                    k graph-convolution kernels
//! H_local  = σ(T · H_int · U)                      becomes H'
//! H_global = tanh(H_local · Z)
//! S        = M · (H_local · Q · H_globalᵀ) · Mᵀ
//! A'       = σ((S + Sᵀ) / 2)
//! ```
//!
//! Both uses of τ inside a block see the incoming `A`, and the soft (sigmoid)
//! adjacency is fed forward unchanged; thresholding happens only at readout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Sigmoid => tape.sigmoid(x),
            Activation::Tanh => tape.tanh(x),
            Activation::Identity => x,
        }
    }
}

/// Non-linearity used by each function of the block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivationSchedule {
    pub embed: Activation,
    pub local: Activation,
    pub global: Activation,
    pub adjacency: Activation,
}

impl Default for ActivationSchedule {
    fn default() -> Self {
        Self {
            embed: Activation::Sigmoid,
            local: Activation::Sigmoid,
            global: Activation::Tanh,
            adjacency: Activation::Sigmoid,
        }
    }
}

/// Learnable weights of one recurrent step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlnLayerParams {
    /// `k` convolution kernels, each `d_in x d_out`.
    #[serde(rename = "W")]
    pub kernels: Vec<DenseMatrix>,
    #[serde(rename = "U")]
    pub local: DenseMatrix,
    #[serde(rename = "Z")]
    pub global: DenseMatrix,
    #[serde(rename = "Q")]
    pub merge: DenseMatrix,
    /// `n x n` node-indexed adjacency projection.
    #[serde(rename = "M")]
    pub projection: DenseMatrix,
}

impl GlnLayerParams {
    pub fn zeros(d_in: usize, d_out: usize, n: usize, k: usize) -> Self {
        Self {
            kernels: vec![DenseMatrix::zeros(d_in, d_out); k],
            local: DenseMatrix::zeros(d_out, d_out),
            global: DenseMatrix::zeros(d_out, d_out),
            merge: DenseMatrix::zeros(d_out, d_out),
            projection: DenseMatrix::zeros(n, n),
        }
    }

    fn check(&self, d_in: usize, d_out: usize, n: usize, k: usize) -> Result<()> {
        let expect = |name: &str, m: &DenseMatrix, shape: (usize, usize)| {
            if m.shape() == shape {
                Ok(())
            } else {
                Err(GlnError::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    shape.0,
                    shape.1
                )))
            }
        };
        if self.kernels.len() != k {
            return Err(GlnError::Dimension(format!(
                "expected {k} kernels, found {}",
                self.kernels.len()
            )));
        }
        for w in &self.kernels {
            expect("W", w, (d_in, d_out))?;
        }
        expect("U", &self.local, (d_out, d_out))?;
        expect("Z", &self.global, (d_out, d_out))?;
        expect("Q", &self.merge, (d_out, d_out))?;
        expect("M", &self.projection, (n, n))
    }

    fn matrices(&self) -> impl Iterator<Item = &DenseMatrix> {
        self.kernels
            .iter()
            .chain([&self.local, &self.global, &self.merge, &self.projection])
    }

    fn matrices_mut(&mut self) -> impl Iterator<Item = &mut DenseMatrix> {
        self.kernels.iter_mut().chain([
            &mut self.local,
            &mut self.global,
            &mut self.merge,
            &mut self.projection,
        ])
    }
}

/// Architecture hyper-parameters that fix every parameter shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    /// `[d_0, d_1, ..., d_L]`.
    pub dims: Vec<usize>,
    pub n: usize,
    pub k: usize,
}

impl ModelShape {
    /// `layers` steps of width `hidden` on top of `input_dim` features.
    pub fn uniform(input_dim: usize, hidden: usize, layers: usize, n: usize, k: usize) -> Self {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(hidden, layers));
        Self { dims, n, k }
    }

    pub fn depth(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlnModel {
    shape: ModelShape,
    epsilon: f64,
    activations: ActivationSchedule,
    layers: Vec<GlnLayerParams>,
}

impl GlnModel {
    pub fn new(
        shape: ModelShape,
        epsilon: f64,
        activations: ActivationSchedule,
        layers: Vec<GlnLayerParams>,
    ) -> Result<Self> {
        if shape.dims.is_empty() || shape.dims.contains(&0) {
            return Err(GlnError::Config(format!("invalid dims {:?}", shape.dims)));
        }
        if shape.k == 0 || shape.n == 0 {
            return Err(GlnError::Config("k and n must be positive".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GlnError::Config(format!("epsilon {epsilon} not in (0, 1)")));
        }
        if layers.len() != shape.depth() {
            return Err(GlnError::Dimension(format!(
                "{} layers for {} dims",
                layers.len(),
                shape.dims.len()
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            layer
                .check(shape.dims[l], shape.dims[l + 1], shape.n, shape.k)
                .map_err(|e| GlnError::Dimension(format!("layer {l}: {e}")))?;
        }
        Ok(Self {
            shape,
            epsilon,
            activations,
            layers,
        })
    }

    /// Glorot-uniform `W`, `U`, `Z`, `Q`; `M = I + U(-0.01, 0.01)`.
    pub fn init(shape: ModelShape, epsilon: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
        };
        let mut layers = Vec::with_capacity(shape.depth());
        for l in 0..shape.depth() {
            let (d_in, d_out) = (shape.dims[l], shape.dims[l + 1]);
            let kernels = (0..shape.k).map(|_| glorot(d_in, d_out)).collect();
            let local = glorot(d_out, d_out);
            let global = glorot(d_out, d_out);
            let merge = glorot(d_out, d_out);
            layers.push(GlnLayerParams {
                kernels,
                local,
                global,
                merge,
                projection: DenseMatrix::identity(shape.n),
            });
        }
        for layer in &mut layers {
            for x in layer.projection.as_mut_slice() {
                *x += rng.random_range(-0.01..=0.01);
            }
        }
        Self::new(shape, epsilon, ActivationSchedule::default(), layers)
    }

    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn k(&self) -> usize {
        self.shape.k
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.shape.dims[0]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn activations(&self) -> ActivationSchedule {
        self.activations
    }

    pub fn set_activations(&mut self, activations: ActivationSchedule) {
        self.activations = activations;
    }

    pub fn layers(&self) -> &[GlnLayerParams] {
        &self.layers
    }

    /// Parameters in canonical order: per layer `W_1..W_k, U, Z, Q, M`.
    pub fn parameters(&self) -> Vec<&DenseMatrix> {
        self.layers.iter().flat_map(GlnLayerParams::matrices).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut DenseMatrix> {
        self.layers
            .iter_mut()
            .flat_map(GlnLayerParams::matrices_mut)
            .collect()
    }

    /// Registers every parameter as a trainable leaf on `tape`.
    pub fn register(&self, tape: &mut Tape) -> ModelVars {
        let layers = self
            .layers
            .iter()
            .map(|p| LayerVars {
                kernels: p.kernels.iter().map(|w| tape.param(w.clone())).collect(),
                local: tape.param(p.local.clone()),
                global: tape.param(p.global.clone()),
                merge: tape.param(p.merge.clone()),
                projection: tape.param(p.projection.clone()),
            })
            .collect();
        ModelVars { layers }
    }

    fn check_inputs(&self, h0: &DenseMatrix, a0: &DenseMatrix) -> Result<()> {
        let n = self.shape.n;
        if h0.shape() != (n, self.input_dim()) {
            return Err(GlnError::Dimension(format!(
                "features are {}x{}, model expects {n}x{}",
                h0.rows(),
                h0.cols(),
                self.input_dim()
            )));
        }
        if a0.shape() != (n, n) {
            return Err(GlnError::Dimension(format!(
                "initial adjacency is {}x{}, model expects {n}x{n}",
                a0.rows(),
                a0.cols()
            )));
        }
        Ok(())
    }

    /// Runs the L-step chain on `tape`, reusing already registered parameters.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        vars: &ModelVars,
        h0: Var,
        a0: Var,
    ) -> Result<TapeForward> {
        self.check_inputs(tape.value(h0), tape.value(a0))?;
        let mut h = h0;
        let mut a = a0;
        let mut blocks = Vec::with_capacity(self.depth());
        for layer in &vars.layers {
            let out = block(tape, h, a, layer, self.activations)?;
            h = out.h_local;
            a = out.adjacency;
            blocks.push(out);
        }
        Ok(TapeForward {
            blocks,
            features: h,
            adjacency: a,
        })
    }

    pub fn forward(&self, h0: &DenseMatrix, a0: &DenseMatrix) -> Result<ForwardOutput> {
        self.check_inputs(h0, a0)?;
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let h = tape.constant(h0.clone());
        let a = tape.constant(a0.clone());
        let trace = self.forward_on_tape(&mut tape, &vars, h, a)?;
        let blocks = trace
            .blocks
            .iter()
            .map(|b| BlockOutput {
                h_int: tape.value(b.h_int).clone(),
                h_local: tape.value(b.h_local).clone(),
                h_global: tape.value(b.h_global).clone(),
                adjacency: tape.value(b.adjacency).clone(),
            })
            .collect();
        Ok(ForwardOutput {
            blocks,
            features: tape.value(trace.features).clone(),
            adjacency: tape.value(trace.adjacency).clone(),
        })
    }

    /// Forward from `(features, I)` followed by thresholding at `epsilon`.
    pub fn predict_edges(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        let out = self.forward(features, &DenseMatrix::identity(self.n()))?;
        Ok(binarize(&out.adjacency, self.epsilon))
    }
}

/// Tape handles of one layer's parameters.
#[derive(Clone, Debug)]
pub struct LayerVars {
    pub kernels: Vec<Var>,
    pub local: Var,
    pub global: Var,
    pub merge: Var,
    pub projection: Var,
}

#[derive(Clone, Debug)]
pub struct ModelVars {
    pub layers: Vec<LayerVars>,
}

impl ModelVars {
    /// Same order as [`GlnModel::parameters`].
    pub fn iter(&self) -> impl Iterator<Item = Var> + '_ {
        self.layers.iter().flat_map(|l| {
            l.kernels
                .iter()
                .copied()
                .chain([l.local, l.global, l.merge, l.projection])
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BlockVars {
    pub h_int: Var,
    pub h_local: Var,
    pub h_global: Var,
    pub adjacency: Var,
}

#[derive(Clone, Debug)]
pub struct TapeForward {
    pub blocks: Vec<BlockVars>,
    pub features: Var,
    pub adjacency: Var,
}

#[derive(Clone, Debug)]
pub struct BlockOutput {
    pub h_int: DenseMatrix,
    pub h_local: DenseMatrix,
    pub h_global: DenseMatrix,
    /// Soft adjacency in `(0, 1)` for the next step.
    pub adjacency: DenseMatrix,
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub blocks: Vec<BlockOutput>,
    pub features: DenseMatrix,
    pub adjacency: DenseMatrix,
}

/// `Σ_i act(T · H · W_i)`.
pub fn intermediary_embedding(
    tape: &mut Tape,
    h: Var,
    tau: Var,
    kernels: &[Var],
    act: Activation,
) -> Result<Var> {
    let Some((first, rest)) = kernels.split_first() else {
        return Err(GlnError::Config("at least one kernel is required".into()));
    };
    let th = tape.matmul(tau, h)?;
    let conv = tape.matmul(th, *first)?;
    let mut acc = act.apply(tape, conv);
    for w in rest {
        let conv = tape.matmul(th, *w)?;
        let z = act.apply(tape, conv);
        acc = tape.add(acc, z)?;
    }
    Ok(acc)
}

/// `act(T · H_int · U)`.
pub fn local_context(
    tape: &mut Tape,
    h_int: Var,
    tau: Var,
    local: Var,
    act: Activation,
) -> Result<Var> {
    let th = tape.matmul(tau, h_int)?;
    let pre = tape.matmul(th, local)?;
    Ok(act.apply(tape, pre))
}

/// `act(H_local · Z)`.
pub fn global_context(tape: &mut Tape, h_local: Var, global: Var, act: Activation) -> Result<Var> {
    let pre = tape.matmul(h_local, global)?;
    Ok(act.apply(tape, pre))
}

/// `act(sym(M · H_local · Q · H_globalᵀ · Mᵀ))`.
pub fn predict_adjacency(
    tape: &mut Tape,
    h_local: Var,
    h_global: Var,
    merge: Var,
    projection: Var,
    act: Activation,
) -> Result<Var> {
    let hq = tape.matmul(h_local, merge)?;
    let gt = tape.transpose(h_global);
    let alpha = tape.matmul(hq, gt)?;
    let ma = tape.matmul(projection, alpha)?;
    let mt = tape.transpose(projection);
    let s = tape.matmul(ma, mt)?;
    let st = tape.transpose(s);
    let both = tape.add(s, st)?;
    let sym = tape.scale(both, 0.5);
    Ok(act.apply(tape, sym))
}

/// One recurrent step.
pub fn block(
    tape: &mut Tape,
    h: Var,
    a: Var,
    layer: &LayerVars,
    acts: ActivationSchedule,
) -> Result<BlockVars> {
    let tau = tape.sym_normalize(a)?;
    let h_int = intermediary_embedding(tape, h, tau, &layer.kernels, acts.embed)?;
    let h_local = local_context(tape, h_int, tau, layer.local, acts.local)?;
    let h_global = global_context(tape, h_local, layer.global, acts.global)?;
    let adjacency = predict_adjacency(
        tape,
        h_local,
        h_global,
        layer.merge,
        layer.projection,
        acts.adjacency,
    )?;
    Ok(BlockVars {
        h_int,
        h_local,
        h_global,
        adjacency,
    })
}

/// Value-only `τ(A)`.
pub fn sym_normalize(a: &DenseMatrix) -> Result<DenseMatrix> {
    let mut tape = Tape::new();
    let v = tape.constant(a.clone());
    let t = tape.sym_normalize(v)?;
    Ok(tape.value(t).clone())
}

/// Thresholds a soft adjacency: `1` iff the entry exceeds `epsilon`, zero diagonal.
pub fn binarize(a: &DenseMatrix, epsilon: f64) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        if i != j && a[(i, j)] > epsilon {
            1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model(layers: usize) -> GlnModel {
        GlnModel::init(ModelShape::uniform(2, 3, layers, 4, 2), 0.5, 7).unwrap()
    }

    #[test]
    fn init_shapes_and_projection_near_identity() {
        let model = tiny_model(3);
        assert_eq!(model.depth(), 3);
        assert_eq!(model.parameters().len(), 3 * (2 + 4));
        for layer in model.layers() {
            let diff = layer.projection.max_abs_diff(&DenseMatrix::identity(4)).unwrap();
            assert!(diff <= 0.01);
        }
    }

    #[test]
    fn new_rejects_bad_shapes() {
        let shape = ModelShape::uniform(2, 3, 1, 4, 1);
        let mut layer = GlnLayerParams::zeros(2, 3, 4, 1);
        layer.local = DenseMatrix::zeros(2, 2);
        let err = GlnModel::new(shape.clone(), 0.5, ActivationSchedule::default(), vec![layer]);
        assert!(matches!(err, Err(GlnError::Dimension(_))));
        let ok = GlnLayerParams::zeros(2, 3, 4, 1);
        assert!(GlnModel::new(shape, 1.0, ActivationSchedule::default(), vec![ok]).is_err());
    }

    #[test]
    fn zero_depth_returns_inputs() {
        let model = tiny_model(0);
        let h = DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64);
        let a = DenseMatrix::identity(4);
        let out = model.forward(&h, &a).unwrap();
        assert!(out.blocks.is_empty());
        assert_eq!(out.features, h);
        assert_eq!(out.adjacency, a);
    }

    #[test]
    fn zero_weights_cascade_to_one_half() {
        let shape = ModelShape::uniform(2, 3, 2, 4, 2);
        let layers = vec![GlnLayerParams::zeros(2, 3, 4, 2), GlnLayerParams::zeros(3, 3, 4, 2)];
        let model = GlnModel::new(shape, 0.5, ActivationSchedule::default(), layers).unwrap();
        let h = DenseMatrix::from_fn(4, 2, |i, j| i as f64 - j as f64);
        let out = model.forward(&h, &DenseMatrix::identity(4)).unwrap();
        assert_eq!(out.adjacency, DenseMatrix::filled(4, 4, 0.5));
    }

    #[test]
    fn zero_local_context_gives_half_adjacency() {
        let mut tape = Tape::new();
        let h = tape.constant(DenseMatrix::zeros(3, 2));
        let z = tape.param(DenseMatrix::from_fn(2, 2, |i, j| (i + 2 * j) as f64));
        let q = tape.param(DenseMatrix::identity(2));
        let m = tape.param(DenseMatrix::from_fn(3, 3, |i, j| (i * j) as f64 + 1.0));
        let g = global_context(&mut tape, h, z, Activation::Tanh).unwrap();
        assert_eq!(tape.value(g), &DenseMatrix::zeros(3, 2));
        let a = predict_adjacency(&mut tape, h, g, q, m, Activation::Sigmoid).unwrap();
        assert_eq!(tape.value(a), &DenseMatrix::filled(3, 3, 0.5));
    }

    #[test]
    fn local_context_of_zero_embedding() {
        let mut tape = Tape::new();
        let h = tape.constant(DenseMatrix::zeros(3, 2));
        let a = tape.constant(DenseMatrix::zeros(3, 3));
        let tau = tape.sym_normalize(a).unwrap();
        let u = tape.param(DenseMatrix::identity(2));
        let l = local_context(&mut tape, h, tau, u, Activation::Sigmoid).unwrap();
        assert_eq!(tape.value(l), &DenseMatrix::filled(3, 2, 0.5));
    }

    #[test]
    fn single_identity_kernel_passes_features_through() {
        let mut tape = Tape::new();
        let h0 = DenseMatrix::from_fn(3, 2, |i, j| i as f64 * 0.3 - j as f64);
        let h = tape.constant(h0.clone());
        let a = tape.constant(DenseMatrix::zeros(3, 3));
        let tau = tape.sym_normalize(a).unwrap();
        let w = tape.param(DenseMatrix::identity(2));
        let out = intermediary_embedding(&mut tape, h, tau, &[w], Activation::Identity).unwrap();
        assert_eq!(tape.value(out), &h0);
    }

    #[test]
    fn duplicated_kernel_doubles_embedding() {
        let mut tape = Tape::new();
        let h = tape.constant(DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 * 0.1));
        let a = tape.constant(DenseMatrix::from_fn(3, 3, |i, j| (i != j) as u8 as f64 * 0.4));
        let tau = tape.sym_normalize(a).unwrap();
        let w_value = DenseMatrix::from_fn(2, 4, |i, j| (i as f64) - 0.2 * j as f64);
        let w1 = tape.param(w_value.clone());
        let w2 = tape.param(w_value);
        let twice = intermediary_embedding(&mut tape, h, tau, &[w1, w2], Activation::Sigmoid).unwrap();
        let once = intermediary_embedding(&mut tape, h, tau, &[w1], Activation::Sigmoid).unwrap();
        let expected = tape.value(once).scale(2.0);
        assert!(tape.value(twice).max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn binarize_is_strict_with_empty_diagonal() {
        let half = DenseMatrix::filled(3, 3, 0.5);
        assert_eq!(binarize(&half, 0.5), DenseMatrix::zeros(3, 3));
        let a = DenseMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert_eq!(binarize(&a, 0.5), DenseMatrix::zeros(2, 2));
        let b = DenseMatrix::from_rows(&[vec![0.9, 0.7], vec![0.7, 0.9]]).unwrap();
        assert_eq!(binarize(&b, 0.5), DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
    }

    #[test]
    fn predicted_adjacency_is_exactly_symmetric() {
        let model = tiny_model(2);
        let h = DenseMatrix::from_fn(4, 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let out = model.forward(&h, &DenseMatrix::identity(4)).unwrap();
        for b in &out.blocks {
            assert_eq!(b.adjacency, b.adjacency.transpose());
            assert!(b.adjacency.as_slice().iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }
}
