use ndarray::{linalg::general_mat_mul, s, Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::cell::{sigmoid, tanh, LstmLayerParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Network shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input: usize,
    pub hidden: usize,
    pub layers: usize,
    pub classes: usize,
}

impl Dims {
    /// Two 128-unit layers over (I, Q) steps, six classes.
    pub const STANDARD: Dims = Dims {
        input: 2,
        hidden: 128,
        layers: 2,
        classes: 6,
    };

    fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 || self.layers == 0 || self.classes == 0 {
            return Err(Error::param("dims", format!("all dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Fully connected layer feeding a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSoftmaxHead<T> {
    /// `classes x hidden`.
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

/// Stacked LSTM layers with a dense softmax head on the last time step.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmNetwork<T> {
    pub layers: Vec<LstmLayerParams<T>>,
    pub head: DenseSoftmaxHead<T>,
}

/// Per-layer activations of a batched forward pass, time-major.
#[derive(Debug, Clone)]
struct LayerCache<T> {
    /// `[x_t; h_{t-1}]`, shape `(steps, batch, input + hidden)`.
    concat: Array3<T>,
    /// Activated gates `[z, z_f, z_i, z_o]`, shape `(steps, batch, 4 hidden)`.
    gates: Array3<T>,
    /// Cell states, shape `(steps + 1, batch, hidden)`; index 0 is the zero state.
    cell: Array3<T>,
    tanh_cell: Array3<T>,
    /// Layer outputs `h_t`, shape `(steps, batch, hidden)`.
    hidden: Array3<T>,
}

/// Activations kept by [`LstmNetwork::forward_batch`] for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
    /// Softmax output, `(batch, classes)`.
    pub probs: Array2<T>,
}

impl<T: Real> LstmNetwork<T> {
    pub fn zeros(dims: Dims) -> Self {
        let layers = (0..dims.layers)
            .map(|l| LstmLayerParams::zeros(if l == 0 { dims.input } else { dims.hidden }, dims.hidden))
            .collect();
        LstmNetwork {
            layers,
            head: DenseSoftmaxHead {
                weights: Array2::zeros((dims.classes, dims.hidden)),
                bias: Array1::zeros(dims.classes),
            },
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            input: self.layers[0].input_dim,
            hidden: self.layers[0].hidden_dim,
            layers: self.layers.len(),
            classes: self.head.weights.nrows(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter tensors in declaration order: for each layer the stacked
    /// gate weights (input, forget, memory, output blocks) then the stacked
    /// biases; finally the head weights and bias.
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for l in &self.layers {
            out.push(l.weights.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.head.weights.as_slice().expect("standard layout"));
        out.push(self.head.bias.as_slice().expect("standard layout"));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for l in &mut self.layers {
            out.push(l.weights.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.head.weights.as_slice_mut().expect("standard layout"));
        out.push(self.head.bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn cast<U: Real>(&self) -> LstmNetwork<U> {
        let conv1 = |a: &Array1<T>| a.mapv(|v| U::of(v.as_f64()));
        let conv2 = |a: &Array2<T>| a.mapv(|v| U::of(v.as_f64()));
        LstmNetwork {
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayerParams {
                    weights: conv2(&l.weights),
                    bias: conv1(&l.bias),
                    input_dim: l.input_dim,
                    hidden_dim: l.hidden_dim,
                })
                .collect(),
            head: DenseSoftmaxHead {
                weights: conv2(&self.head.weights),
                bias: conv1(&self.head.bias),
            },
        }
    }

    fn check_input(&self, steps: usize, features: usize) -> Result<()> {
        if steps == 0 {
            return Err(Error::Empty("frame"));
        }
        let want = self.dims().input;
        if features != want {
            return Err(Error::shape("frame features per step", want, features));
        }
        Ok(())
    }

    /// Batched forward pass over time-major input `(steps, batch, input)`.
    pub fn forward_batch(&self, x: ArrayView3<'_, T>) -> Result<ForwardCache<T>> {
        let (steps, batch, features) = x.dim();
        self.check_input(steps, features)?;
        let mut caches: Vec<LayerCache<T>> = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let cache = match caches.last() {
                Some(prev) => layer_forward(layer, prev.hidden.view()),
                None => layer_forward(layer, x),
            };
            debug_assert_eq!(cache.hidden.dim(), (steps, batch, layer.hidden_dim), "layer {li}");
            caches.push(cache);
        }
        let last = caches.last().expect("at least one layer").hidden.index_axis(Axis(0), steps - 1);
        let probs = head_forward(&self.head, last);
        Ok(ForwardCache { layers: caches, probs })
    }

    /// Class probabilities for a `steps x input` frame.
    pub fn forward(&self, frame: ArrayView2<'_, T>) -> Result<Array1<T>> {
        let (steps, features) = frame.dim();
        let x = frame.insert_axis(Axis(1));
        debug_assert_eq!(x.dim(), (steps, 1, features));
        let cache = self.forward_batch(x)?;
        Ok(cache.probs.row(0).to_owned())
    }

    /// Probabilities for many frames stacked as `(frames, steps, input)`,
    /// evaluated in chunks of `chunk` frames.
    pub fn predict(&self, frames: ArrayView3<'_, T>, chunk: usize) -> Result<Array2<T>> {
        let n = frames.len_of(Axis(0));
        let mut out = Array2::zeros((n, self.dims().classes));
        let chunk = chunk.max(1);
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            let x = frames.slice(s![start..end, .., ..]).permuted_axes([1, 0, 2]);
            let x = x.as_standard_layout();
            let cache = self.forward_batch(x.view())?;
            out.slice_mut(s![start..end, ..]).assign(&cache.probs);
            start = end;
        }
        Ok(out)
    }

    /// Exact gradient of the mean cross-entropy of the cached batch with
    /// respect to every parameter, unrolled over all steps.
    pub fn backward(&self, cache: &ForwardCache<T>, labels: &[usize]) -> Result<LstmNetwork<T>> {
        let (batch, classes) = cache.probs.dim();
        if labels.len() != batch {
            return Err(Error::shape("label count", batch, labels.len()));
        }
        if cache.layers.len() != self.layers.len() {
            return Err(Error::MissingCache);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::param("label", format!("{bad} is not below {classes}")));
        }
        let inv_batch = T::one() / T::of_usize(batch);
        let mut dlogits = cache.probs.clone();
        for (b, &l) in labels.iter().enumerate() {
            dlogits[[b, l]] = dlogits[[b, l]] - T::one();
        }
        dlogits.mapv_inplace(|v| v * inv_batch);

        let mut grads = LstmNetwork::zeros(self.dims());
        let top = cache.layers.last().expect("at least one layer");
        let steps = top.hidden.len_of(Axis(0));
        let h_last = top.hidden.index_axis(Axis(0), steps - 1);
        general_mat_mul(T::one(), &dlogits.t(), &h_last, T::zero(), &mut grads.head.weights);
        grads.head.bias = dlogits.sum_axis(Axis(0));

        let hidden = self.dims().hidden;
        let mut dh_above = Array3::<T>::zeros((steps, batch, hidden));
        general_mat_mul(
            T::one(),
            &dlogits,
            &self.head.weights,
            T::zero(),
            &mut dh_above.index_axis_mut(Axis(0), steps - 1),
        );
        for li in (0..self.layers.len()).rev() {
            let need_dx = li > 0;
            let (dw, db, dx) = layer_backward(&self.layers[li], &cache.layers[li], dh_above.view(), need_dx);
            grads.layers[li].weights = dw;
            grads.layers[li].bias = db;
            if let Some(dx) = dx {
                dh_above = dx;
            }
        }
        Ok(grads)
    }
}

/// Uniform initialisation in `[-k, k]` with `k = 1/sqrt(fan_in)` per matrix,
/// deterministic in `seed`.
pub fn init_params<T: Real>(dims: Dims, seed: u64) -> Result<LstmNetwork<T>> {
    dims.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = (0..dims.layers)
        .map(|l| {
            let input = if l == 0 { dims.input } else { dims.hidden };
            LstmLayerParams::init(input, dims.hidden, &mut rng)
        })
        .collect();
    let k = 1.0 / (dims.hidden as f64).sqrt();
    let dist = Uniform::new_inclusive(-k, k);
    let weights = Array2::from_shape_simple_fn((dims.classes, dims.hidden), || T::of(dist.sample(&mut rng)));
    Ok(LstmNetwork {
        layers,
        head: DenseSoftmaxHead {
            weights,
            bias: Array1::zeros(dims.classes),
        },
    })
}

/// Single-frame inference; see [`LstmNetwork::forward`].
pub fn network_forward<T: Real>(frame: ArrayView2<'_, T>, net: &LstmNetwork<T>) -> Result<Array1<T>> {
    net.forward(frame)
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows<T: Real>(logits: &mut Array2<T>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

fn head_forward<T: Real>(head: &DenseSoftmaxHead<T>, h: ArrayView2<'_, T>) -> Array2<T> {
    let mut logits = Array2::zeros((h.nrows(), head.weights.nrows()));
    logits.assign(&head.bias.view().insert_axis(Axis(0)));
    general_mat_mul(T::one(), &h, &head.weights.t(), T::one(), &mut logits);
    softmax_rows(&mut logits);
    logits
}

fn layer_forward<T: Real>(p: &LstmLayerParams<T>, x: ArrayView3<'_, T>) -> LayerCache<T> {
    let (steps, batch, ni) = x.dim();
    let nh = p.hidden_dim;
    let mut concat = Array3::<T>::zeros((steps, batch, ni + nh));
    let mut gates = Array3::<T>::zeros((steps, batch, 4 * nh));
    let mut cell = Array3::<T>::zeros((steps + 1, batch, nh));
    let mut tanh_cell = Array3::<T>::zeros((steps, batch, nh));
    let mut hidden = Array3::<T>::zeros((steps, batch, nh));
    let bias = p.bias.view().insert_axis(Axis(0));
    // input projections for every step in one product; only the recurrent
    // term has to wait for the previous step
    {
        let rows = steps * batch;
        let xs = x.as_standard_layout();
        let x2 = xs.view().into_shape_with_order((rows, ni)).expect("contiguous");
        let mut g2 = gates.view_mut().into_shape_with_order((rows, 4 * nh)).expect("contiguous");
        g2.assign(&bias);
        general_mat_mul(T::one(), &x2, &p.weights.slice(s![.., ..ni]).t(), T::one(), &mut g2);
    }
    let w_h = p.weights.slice(s![.., ni..]);
    for t in 0..steps {
        let mut a = concat.index_axis_mut(Axis(0), t);
        a.slice_mut(s![.., ..ni]).assign(&x.index_axis(Axis(0), t));
        let mut g = gates.index_axis_mut(Axis(0), t);
        if t > 0 {
            let h_prev = hidden.index_axis(Axis(0), t - 1);
            a.slice_mut(s![.., ni..]).assign(&h_prev);
            general_mat_mul(T::one(), &h_prev, &w_h.t(), T::one(), &mut g);
        }
        let gs = g.as_slice_mut().expect("standard layout");
        for row in gs.chunks_exact_mut(4 * nh) {
            let (z, rest) = row.split_at_mut(nh);
            z.iter_mut().for_each(|v| *v = tanh(*v));
            rest.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        let (prev, mut next) = cell.view_mut().split_at(Axis(0), t + 1);
        let c_prev = prev.index_axis(Axis(0), t);
        let c_prev = c_prev.as_slice().expect("standard layout");
        let mut c_new = next.index_axis_mut(Axis(0), 0);
        let c_new = c_new.as_slice_mut().expect("standard layout");
        let mut tc = tanh_cell.index_axis_mut(Axis(0), t);
        let tc = tc.as_slice_mut().expect("standard layout");
        let mut h = hidden.index_axis_mut(Axis(0), t);
        let h = h.as_slice_mut().expect("standard layout");
        for b in 0..batch {
            let gr = &gs[b * 4 * nh..(b + 1) * 4 * nh];
            let (z, rest) = gr.split_at(nh);
            let (f, rest) = rest.split_at(nh);
            let (i, o) = rest.split_at(nh);
            let r = b * nh..(b + 1) * nh;
            let (cp, cn, tcb, hb) = (&c_prev[r.clone()], &mut c_new[r.clone()], &mut tc[r.clone()], &mut h[r]);
            for k in 0..nh {
                let c = f[k] * cp[k] + i[k] * z[k];
                let th = tanh(c);
                cn[k] = c;
                tcb[k] = th;
                hb[k] = o[k] * th;
            }
        }
    }
    LayerCache {
        concat,
        gates,
        cell,
        tanh_cell,
        hidden,
    }
}

/// Returns `(dW, db, dx)` where `dx` is the gradient with respect to the
/// layer input sequence (only when requested).
fn layer_backward<T: Real>(
    p: &LstmLayerParams<T>,
    cache: &LayerCache<T>,
    dh_above: ArrayView3<'_, T>,
    need_dx: bool,
) -> (Array2<T>, Array1<T>, Option<Array3<T>>) {
    let (steps, batch, nh) = dh_above.dim();
    let ni = p.input_dim;
    let one = T::one();
    let mut dpre = Array3::<T>::zeros((steps, batch, 4 * nh));
    let mut dh_next = Array2::<T>::zeros((batch, nh));
    let mut dc_next = Array2::<T>::zeros((batch, nh));
    let mut da = Array2::<T>::zeros((batch, ni + nh));
    let mut dx = need_dx.then(|| Array3::<T>::zeros((steps, batch, ni)));
    let w_h = p.weights.slice(s![.., ni..]);
    for t in (0..steps).rev() {
        let g = cache.gates.index_axis(Axis(0), t);
        let g = g.as_slice().expect("standard layout");
        let c_prev = cache.cell.index_axis(Axis(0), t);
        let c_prev = c_prev.as_slice().expect("standard layout");
        let tc = cache.tanh_cell.index_axis(Axis(0), t);
        let tc = tc.as_slice().expect("standard layout");
        let dha = dh_above.index_axis(Axis(0), t);
        let dha = dha.as_slice().expect("standard layout");
        let mut dp = dpre.index_axis_mut(Axis(0), t);
        let dp = dp.as_slice_mut().expect("standard layout");
        let dhn = dh_next.as_slice().expect("standard layout");
        let dcn = dc_next.as_slice_mut().expect("standard layout");
        for b in 0..batch {
            let gr = &g[b * 4 * nh..(b + 1) * 4 * nh];
            let dpr = &mut dp[b * 4 * nh..(b + 1) * 4 * nh];
            let base = b * nh;
            for k in 0..nh {
                let (z, f, i, o) = (gr[k], gr[nh + k], gr[2 * nh + k], gr[3 * nh + k]);
                let th = tc[base + k];
                let dh = dha[base + k] + dhn[base + k];
                let d_o = dh * th;
                let dc = dh * o * (one - th * th) + dcn[base + k];
                let dz = dc * i;
                let di = dc * z;
                let df = dc * c_prev[base + k];
                dcn[base + k] = dc * f;
                dpr[k] = dz * (one - z * z);
                dpr[nh + k] = df * f * (one - f);
                dpr[2 * nh + k] = di * i * (one - i);
                dpr[3 * nh + k] = d_o * o * (one - o);
            }
        }
        let dp = dpre.index_axis(Axis(0), t);
        match dx.as_mut() {
            Some(dx) => {
                general_mat_mul(one, &dp, &p.weights, T::zero(), &mut da);
                dx.index_axis_mut(Axis(0), t).assign(&da.slice(s![.., ..ni]));
                dh_next.assign(&da.slice(s![.., ni..]));
            }
            None => general_mat_mul(one, &dp, &w_h, T::zero(), &mut dh_next),
        }
    }
    let rows = steps * batch;
    let dpre2 = dpre.into_shape_with_order((rows, 4 * nh)).expect("contiguous");
    let a2 = cache
        .concat
        .view()
        .into_shape_with_order((rows, ni + nh))
        .expect("contiguous");
    let mut dw = Array2::<T>::zeros((4 * nh, ni + nh));
    general_mat_mul(one, &dpre2.t(), &a2, T::zero(), &mut dw);
    let db = dpre2.sum_axis(Axis(0));
    (dw, db, dx)
}
