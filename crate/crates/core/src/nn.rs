//! Small dense feed-forward networks with analytic gradients.
//!
//! Batches are row-major `batch × dim` slices. Layer weights are stored
//! `n_out × n_in` row-major, so a forward pass is `Y = X·Wᵀ + b`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 4] = [Activation::Relu, Activation::Tanh, Activation::Sigmoid, Activation::Identity];

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    /// Uniform fan-in initialisation, U(−1/√n_in, 1/√n_in).
    pub fn new<R: Rng + ?Sized>(n_in: usize, n_out: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        Layer {
            n_in,
            n_out,
            weights: (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect(),
            bias: (0..n_out).map(|_| rng.random_range(-bound..bound)).collect(),
            activation,
        }
    }

    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Layer { n_in, n_out, weights: vec![0.0; n_in * n_out], bias: vec![0.0; n_out], activation }
    }

    fn forward_into(&self, x: &[f64], batch: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(batch * self.n_out, 0.0);
        if batch == 1 {
            for (j, o) in out.iter_mut().enumerate() {
                let row = &self.weights[j * self.n_in..(j + 1) * self.n_in];
                *o = self.bias[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            }
        } else {
            for r in 0..batch {
                out[r * self.n_out..(r + 1) * self.n_out].copy_from_slice(&self.bias);
            }
            // out (B×out) += X (B×in) · Wᵀ (in×out)
            gemm(batch, self.n_in, self.n_out, x, (self.n_in, 1), &self.weights, (1, self.n_in), out, (self.n_out, 1), 1.0);
        }
        for o in out.iter_mut() {
            *o = self.activation.apply(*o);
        }
    }
}

/// `c = a·b + beta·c` with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    (rsc, csc): (usize, usize),
    beta: f64,
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |rs: usize, cs: usize, rows: usize, cols: usize| (rows - 1) * rs + (cols - 1) * cs;
    if k > 0 {
        assert!(last(rsa, csa, m, k) < a.len() && last(rsb, csb, k, n) < b.len());
    }
    assert!(last(rsc, csc, m, n) < c.len());
    // SAFETY: bounds checked above; the three slices do not alias (c is &mut).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer activations from a forward pass: `acts[0]` is the input,
/// `acts[i + 1]` the output of layer `i`.
#[derive(Debug, Clone)]
pub struct Cache {
    batch: usize,
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache holds the input at least")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|g| g.is_finite()))
    }
}

impl Mlp {
    /// `sizes` lists every layer width including input and output;
    /// `activations` has one entry per weight layer.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2 && activations.len() == sizes.len() - 1, "one activation per layer");
        Mlp { layers: sizes.windows(2).zip(activations).map(|(w, &a)| Layer::new(w[0], w[1], a, rng)).collect() }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ArchitectureMismatch("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::ArchitectureMismatch(format!("layer {i} parameter shapes")));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].n_out != w[1].n_in {
                return Err(Error::ArchitectureMismatch(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].n_out,
                    i + 1,
                    w[1].n_in
                )));
            }
        }
        Ok(Mlp { layers })
    }

    /// Hidden layers with one activation, then an output layer with another.
    pub fn with_hidden<R: Rng + ?Sized>(
        n_in: usize,
        hidden: &[usize],
        n_out: usize,
        hidden_act: Activation,
        out_act: Activation,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(n_out);
        let mut acts = vec![hidden_act; hidden.len()];
        acts.push(out_act);
        Mlp::new(&sizes, &acts, rng)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").n_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), actual: params.len() });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = it.next().expect("length checked"));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|p| p.is_finite()))
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.n_in == b.n_in && a.n_out == b.n_out && a.activation == b.activation)
    }

    fn check_input(&self, inputs: &[f64], batch: usize) -> Result<()> {
        if batch == 0 || inputs.len() != batch * self.input_dim() {
            return Err(Error::DimensionMismatch { expected: batch * self.input_dim(), actual: inputs.len() });
        }
        Ok(())
    }

    /// Forward pass over a batch, keeping activations for [`Mlp::backward`].
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<(Vec<f64>, Cache)> {
        self.check_input(inputs, batch)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(inputs.to_vec());
        for layer in &self.layers {
            let mut out = Vec::new();
            layer.forward_into(acts.last().expect("non-empty"), batch, &mut out);
            acts.push(out);
        }
        let output = acts.last().expect("non-empty").clone();
        Ok((output, Cache { batch, acts }))
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Cache)> {
        self.forward_batch(input, 1)
    }

    /// Forward pass without a cache.
    pub fn predict_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(inputs, batch)?;
        let mut cur = inputs.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&cur, batch, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.predict_batch(input, 1)
    }

    /// Gradients of `Σ dout ⊙ output` with respect to the parameters and the input.
    pub fn backward(&self, cache: &Cache, dout: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let batch = cache.batch;
        if cache.acts.len() != self.layers.len() + 1 {
            return Err(Error::ArchitectureMismatch("cache comes from a different network".into()));
        }
        if dout.len() != batch * self.output_dim() {
            return Err(Error::DimensionMismatch { expected: batch * self.output_dim(), actual: dout.len() });
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta = dout.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.acts[i];
            let y = &cache.acts[i + 1];
            if x.len() != batch * layer.n_in || y.len() != batch * layer.n_out {
                return Err(Error::ArchitectureMismatch(format!("cache shape at layer {i}")));
            }
            for (d, &yv) in delta.iter_mut().zip(y) {
                *d *= layer.activation.derivative_from_output(yv);
            }
            let g = &mut grads.layers[i];
            // dW (out×in) = δᵀ (out×B) · X (B×in)
            gemm(layer.n_out, batch, layer.n_in, &delta, (1, layer.n_out), x, (layer.n_in, 1), &mut g.weights, (layer.n_in, 1), 0.0);
            for r in 0..batch {
                for (gb, d) in g.bias.iter_mut().zip(&delta[r * layer.n_out..(r + 1) * layer.n_out]) {
                    *gb += d;
                }
            }
            // dX (B×in) = δ (B×out) · W (out×in)
            let mut dx = vec![0.0; batch * layer.n_in];
            gemm(batch, layer.n_out, layer.n_in, &delta, (layer.n_out, 1), &layer.weights, (layer.n_in, 1), &mut dx, (layer.n_in, 1), 0.0);
            delta = dx;
        }
        Ok((grads, delta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Algorithm {
    PlainSgd,
    AdaptiveMoment { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Algorithm {
    pub fn adam() -> Self {
        Algorithm::AdaptiveMoment { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl OptimizerState {
    pub fn new(algorithm: Algorithm, learning_rate: f64, net: &Mlp) -> Self {
        let n = match algorithm {
            Algorithm::PlainSgd => 0,
            Algorithm::AdaptiveMoment { .. } => net.param_count(),
        };
        OptimizerState { algorithm, learning_rate, step: 0, first_moment: vec![0.0; n], second_moment: vec![0.0; n] }
    }

    pub fn sgd(learning_rate: f64, net: &Mlp) -> Self {
        Self::new(Algorithm::PlainSgd, learning_rate, net)
    }

    pub fn adam(learning_rate: f64, net: &Mlp) -> Self {
        Self::new(Algorithm::adam(), learning_rate, net)
    }
}

/// One optimizer step. Non-finite gradients are rejected before anything changes.
pub fn apply_gradients(net: &mut Mlp, grads: &Gradients, opt: &mut OptimizerState) -> Result<()> {
    if grads.layers.len() != net.layers.len()
        || grads.layers.iter().zip(&net.layers).any(|(g, l)| g.weights.len() != l.weights.len() || g.bias.len() != l.bias.len())
    {
        return Err(Error::ArchitectureMismatch("gradient shapes do not match the network".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradients"));
    }
    opt.step += 1;
    let lr = opt.learning_rate;
    match opt.algorithm {
        Algorithm::PlainSgd => {
            for (l, g) in net.layers.iter_mut().zip(&grads.layers) {
                for (p, d) in l.weights.iter_mut().zip(&g.weights).chain(l.bias.iter_mut().zip(&g.bias)) {
                    *p -= lr * d;
                }
            }
        }
        Algorithm::AdaptiveMoment { beta1, beta2, epsilon } => {
            if opt.first_moment.len() != net.param_count() {
                return Err(Error::ArchitectureMismatch("optimizer state shape".into()));
            }
            let t = opt.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let mut k = 0;
            for (l, g) in net.layers.iter_mut().zip(&grads.layers) {
                for (p, d) in l.weights.iter_mut().zip(&g.weights).chain(l.bias.iter_mut().zip(&g.bias)) {
                    let m = &mut opt.first_moment[k];
                    let v = &mut opt.second_moment[k];
                    *m = beta1 * *m + (1.0 - beta1) * d;
                    *v = beta2 * *v + (1.0 - beta2) * d * d;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                    k += 1;
                }
            }
        }
    }
    Ok(())
}

/// `target ← τ·source + (1 − τ)·target`, parameter-wise.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<()> {
    if !target.same_architecture(source) {
        return Err(Error::ArchitectureMismatch("soft update between different networks".into()));
    }
    for (t, s) in target.layers.iter_mut().zip(&source.layers) {
        for (tp, sp) in t.weights.iter_mut().zip(&s.weights).chain(t.bias.iter_mut().zip(&s.bias)) {
            *tp = tau * sp + (1.0 - tau) * *tp;
        }
    }
    Ok(())
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// A network with its optimizer, as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub version: u32,
    pub net: Mlp,
    pub optimizer: Option<OptimizerState>,
}

impl NetCheckpoint {
    pub fn new(net: Mlp, optimizer: Option<OptimizerState>) -> Self {
        NetCheckpoint { version: CHECKPOINT_VERSION, net, optimizer }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite parameters always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: NetCheckpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported network checkpoint version {}", ck.version)));
        }
        Mlp::from_layers(ck.net.layers.clone())?;
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut l = Layer::zeros(3, 3, Activation::Identity);
        for i in 0..3 {
            l.weights[i * 3 + i] = 1.0;
        }
        let net = Mlp::from_layers(vec![l]).unwrap();
        assert_eq!(net.forward(&[0.5, -1.0, 2.0]).unwrap().0, vec![0.5, -1.0, 2.0]);
        let (g, dx) = net.backward(&net.forward(&[0.5, -1.0, 2.0]).unwrap().1, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(dx, vec![1.0, 2.0, 3.0]);
        assert_eq!(g.layers[0].bias, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_sigmoid_layer_outputs_half() {
        let net = Mlp::from_layers(vec![Layer::zeros(4, 2, Activation::Sigmoid)]).unwrap();
        assert_eq!(net.predict(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn two_layer_net_matches_hand_arithmetic() {
        // h = relu(W1 x + b1), y = W2 h + b2
        let l1 = Layer {
            n_in: 2,
            n_out: 2,
            weights: vec![1.0, -1.0, 0.5, 2.0],
            bias: vec![0.1, -0.2],
            activation: Activation::Relu,
        };
        let l2 = Layer { n_in: 2, n_out: 1, weights: vec![3.0, -2.0], bias: vec![0.5], activation: Activation::Identity };
        let net = Mlp::from_layers(vec![l1, l2]).unwrap();
        // x = (2, 1): W1x+b1 = (2-1+0.1, 1+2-0.2) = (1.1, 2.8); y = 3.3 - 5.6 + 0.5 = -1.8
        let y = net.predict(&[2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(y[0], -1.8, epsilon = 1e-12);
        // batched path agrees with the single-row path
        let yb = net.predict_batch(&[2.0, 1.0, -1.0, 0.5, 0.0, 3.0], 3).unwrap();
        assert_abs_diff_eq!(yb[0], -1.8, epsilon = 1e-12);
        for r in 0..3 {
            let single = net.predict(&[[2.0, 1.0], [-1.0, 0.5], [0.0, 3.0]][r]).unwrap();
            assert_abs_diff_eq!(yb[r], single[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = Mlp::with_hidden(5, &[7], 3, Activation::Tanh, Activation::Sigmoid, &mut rng(1));
        let (_, cache) = net.forward(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let (g, dx) = net.backward(&cache, &[0.0; 3]).unwrap();
        assert!(g.flatten().iter().all(|x| *x == 0.0));
        assert!(dx.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn dimension_errors() {
        let net = Mlp::with_hidden(5, &[7], 3, Activation::Tanh, Activation::Sigmoid, &mut rng(1));
        assert!(matches!(net.forward(&[0.0; 4]), Err(Error::DimensionMismatch { .. })));
        let (_, cache) = net.forward(&[0.0; 5]).unwrap();
        assert!(net.backward(&cache, &[0.0; 2]).is_err());
        let bad = Layer { n_in: 2, n_out: 2, weights: vec![0.0; 3], bias: vec![0.0; 2], activation: Activation::Relu };
        assert!(Mlp::from_layers(vec![bad]).is_err());
        assert!(Mlp::from_layers(vec![Layer::zeros(2, 3, Activation::Relu), Layer::zeros(4, 1, Activation::Relu)]).is_err());
    }

    #[test]
    fn sgd_step() {
        let mut net = Mlp::from_layers(vec![Layer::zeros(1, 1, Activation::Identity)]).unwrap();
        let mut opt = OptimizerState::sgd(0.1, &net);
        let g = Gradients { layers: vec![LayerGrad { weights: vec![1.0], bias: vec![0.0] }] };
        apply_gradients(&mut net, &g, &mut opt).unwrap();
        assert_abs_diff_eq!(net.layers()[0].weights[0], -0.1, epsilon = 1e-15);
        assert_eq!(opt.step, 1);
        let before = net.clone();
        let zeros = Gradients::zeros_like(&net);
        apply_gradients(&mut net, &zeros, &mut opt).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn adam_step_approaches_learning_rate() {
        let mut net = Mlp::from_layers(vec![Layer::zeros(1, 1, Activation::Identity)]).unwrap();
        let mut opt = OptimizerState::adam(1e-3, &net);
        let g = Gradients { layers: vec![LayerGrad { weights: vec![0.3], bias: vec![-2.0] }] };
        let mut prev = net.params();
        for _ in 0..2000 {
            apply_gradients(&mut net, &g, &mut opt).unwrap();
            let now = net.params();
            // Bias-corrected moments equal g and g², so every step is lr·g/(|g|+ε).
            assert_abs_diff_eq!(prev[0] - now[0], 1e-3 * 0.3 / (0.3 + 1e-8), epsilon = 1e-9);
            assert_abs_diff_eq!(now[1] - prev[1], 1e-3, epsilon = 1e-9);
            prev = now;
        }
        let zeros = Gradients::zeros_like(&net);
        let mut opt = OptimizerState::adam(1e-3, &net);
        let before = net.clone();
        apply_gradients(&mut net, &zeros, &mut opt).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn non_finite_gradients_are_rejected() {
        let mut net = Mlp::with_hidden(2, &[3], 1, Activation::Relu, Activation::Identity, &mut rng(0));
        let mut g = Gradients::zeros_like(&net);
        g.layers[0].weights[0] = f64::NAN;
        let before = net.clone();
        let mut opt = OptimizerState::adam(1e-3, &net);
        assert!(matches!(apply_gradients(&mut net, &g, &mut opt), Err(Error::NonFinite(_))));
        assert_eq!(net, before);
        assert_eq!(opt.step, 0);
    }

    #[test]
    fn soft_update_blends() {
        let zero = Mlp::from_layers(vec![Layer::zeros(1, 1, Activation::Identity)]).unwrap();
        let mut one = zero.clone();
        one.set_params(&[1.0, 1.0]).unwrap();
        let mut t = zero.clone();
        soft_update(&mut t, &one, 0.5).unwrap();
        assert_eq!(t.params(), vec![0.5, 0.5]);
        let mut t = zero.clone();
        soft_update(&mut t, &one, 0.0).unwrap();
        assert_eq!(t, zero);
        soft_update(&mut t, &one, 1.0).unwrap();
        assert_eq!(t, one);
        let other = Mlp::from_layers(vec![Layer::zeros(2, 1, Activation::Identity)]).unwrap();
        assert!(soft_update(&mut t, &other, 0.5).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut net = Mlp::with_hidden(6, &[8, 8], 2, Activation::Relu, Activation::Sigmoid, &mut rng(9));
        let mut opt = OptimizerState::adam(1e-3, &net);
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let (_, cache) = net.forward(&x).unwrap();
        let (g, _) = net.backward(&cache, &[0.3, -0.7]).unwrap();
        apply_gradients(&mut net, &g, &mut opt).unwrap();
        let ck = NetCheckpoint::new(net.clone(), Some(opt.clone()));
        let back = NetCheckpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);
        let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
        assert_eq!(bits(back.net.params()), bits(net.params()));
        assert!(NetCheckpoint::from_json("{\"version\":7}").is_err());
    }

    /// Central finite differences of `Σ dout ⊙ f(x)` over the parameters.
    fn numeric_grad(net: &Mlp, x: &[f64], batch: usize, dout: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = 1e-6;
        let loss = |n: &Mlp, x: &[f64]| -> f64 {
            n.predict_batch(x, batch).unwrap().iter().zip(dout).map(|(a, b)| a * b).sum()
        };
        let base = net.params();
        let mut gp = Vec::with_capacity(base.len());
        let mut probe = net.clone();
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            probe.set_params(&p).unwrap();
            let up = loss(&probe, x);
            p[i] -= 2.0 * h;
            probe.set_params(&p).unwrap();
            gp.push((up - loss(&probe, x)) / (2.0 * h));
        }
        let mut gx = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            xp[i] += h;
            let up = loss(net, &xp);
            xp[i] -= 2.0 * h;
            gx.push((up - loss(net, &xp)) / (2.0 * h));
        }
        (gp, gx)
    }

    fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 { 0.0 } else { diff / scale }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        use rand::Rng;
        for (seed, act) in Activation::ALL.iter().enumerate() {
            for out_act in [Activation::Identity, Activation::Sigmoid, Activation::Tanh] {
                let mut r = rng(100 + seed as u64);
                let net = Mlp::with_hidden(5, &[9, 7], 3, *act, out_act, &mut r);
                for batch in [1, 4] {
                    let x: Vec<f64> = (0..5 * batch).map(|_| r.random_range(-1.0..1.0)).collect();
                    let dout: Vec<f64> = (0..3 * batch).map(|_| r.random_range(-1.0..1.0)).collect();
                    let (_, cache) = net.forward_batch(&x, batch).unwrap();
                    let (g, dx) = net.backward(&cache, &dout).unwrap();
                    let (np, nx) = numeric_grad(&net, &x, batch, &dout);
                    let ep = relative_error(&g.flatten(), &np);
                    let ex = relative_error(&dx, &nx);
                    assert!(ep < 1e-4, "{act:?}/{out_act:?} batch {batch}: param error {ep}");
                    assert!(ex < 1e-4, "{act:?}/{out_act:?} batch {batch}: input error {ex}");
                }
            }
        }
    }

    #[test]
    fn learns_square_function() {
        use rand::Rng;
        let mut r = rng(3);
        let mut net = Mlp::with_hidden(1, &[32, 32], 1, Activation::Tanh, Activation::Identity, &mut r);
        let mut opt = OptimizerState::adam(3e-3, &net);
        let grid: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 * 0.05).collect();
        let mse = |n: &Mlp| {
            let y = n.predict_batch(&grid, grid.len()).unwrap();
            y.iter().zip(&grid).map(|(p, x)| (p - x * x).powi(2)).sum::<f64>() / grid.len() as f64
        };
        let start = mse(&net);
        for _ in 0..3000 {
            let x: Vec<f64> = (0..32).map(|_| r.random_range(-1.0..1.0)).collect();
            let (y, cache) = net.forward_batch(&x, 32).unwrap();
            let dout: Vec<f64> = y.iter().zip(&x).map(|(p, v)| 2.0 * (p - v * v) / 32.0).collect();
            let (g, _) = net.backward(&cache, &dout).unwrap();
            apply_gradients(&mut net, &g, &mut opt).unwrap();
        }
        let end = mse(&net);
        assert!(end < 1e-3 && end < start / 10.0, "mse {start} -> {end}");
    }

    #[test]
    fn same_seed_same_network() {
        let a = Mlp::with_hidden(4, &[16], 3, Activation::Relu, Activation::Identity, &mut rng(42));
        let b = Mlp::with_hidden(4, &[16], 3, Activation::Relu, Activation::Identity, &mut rng(42));
        assert_eq!(a, b);
    }
}
