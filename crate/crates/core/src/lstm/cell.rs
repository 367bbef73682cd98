use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::Uniform;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Logistic sigmoid.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// `tanh` through a single `exp`; within a few ulps of `1` in absolute
/// terms and much cheaper than the library call.
#[inline]
pub(crate) fn tanh<T: Real>(x: T) -> T {
    let two = T::one() + T::one();
    two / (T::one() + (-two * x).exp()) - T::one()
}

/// Weights of one LSTM layer.
///
/// The four gate matrices are stored stacked by rows in the order
/// input (`tanh`), forget, memory, output; each block is
/// `hidden x (input + hidden)` and multiplies `a = [x; h_prev]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Gate block indices within the stacked weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Memory = 2,
    Output = 3,
}

impl<T: Real> LstmLayerParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmLayerParams {
            weights: Array2::zeros((4 * hidden_dim, input_dim + hidden_dim)),
            bias: Array1::zeros(4 * hidden_dim),
            input_dim,
            hidden_dim,
        }
    }

    /// Uniform weights in `[-k, k]`, `k = 1/sqrt(input + hidden)`; zero gate
    /// biases except the forget gate, which starts at one.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let k = 1.0 / ((input_dim + hidden_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-k, k);
        let mut p = Self::zeros(input_dim, hidden_dim);
        p.weights.mapv_inplace(|_| T::of(rng.sample(dist)));
        p.bias
            .slice_mut(s![hidden_dim..2 * hidden_dim])
            .fill(T::one());
        p
    }

    pub fn gate(&self, gate: Gate) -> ArrayView2<'_, T> {
        let h = self.hidden_dim;
        let g = gate as usize;
        self.weights.slice(s![g * h..(g + 1) * h, ..])
    }

    pub fn gate_bias(&self, gate: Gate) -> ArrayView1<'_, T> {
        let h = self.hidden_dim;
        let g = gate as usize;
        self.bias.slice(s![g * h..(g + 1) * h])
    }

    pub fn w_input(&self) -> ArrayView2<'_, T> {
        self.gate(Gate::Input)
    }

    pub fn w_forget(&self) -> ArrayView2<'_, T> {
        self.gate(Gate::Forget)
    }

    pub fn w_memory(&self) -> ArrayView2<'_, T> {
        self.gate(Gate::Memory)
    }

    pub fn w_output(&self) -> ArrayView2<'_, T> {
        self.gate(Gate::Output)
    }

    pub fn check(&self) -> Result<()> {
        let want = (4 * self.hidden_dim, self.input_dim + self.hidden_dim);
        if self.weights.dim() != want {
            return Err(Error::shape(
                "stacked gate weights",
                format!("{want:?}"),
                format!("{:?}", self.weights.dim()),
            ));
        }
        if self.bias.len() != 4 * self.hidden_dim {
            return Err(Error::shape("gate bias", 4 * self.hidden_dim, self.bias.len()));
        }
        Ok(())
    }
}

/// Recurrent state after one step, with the gate activations kept for
/// backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Array1<T>,
    pub c: Array1<T>,
    /// Candidate input `tanh(W a)`.
    pub z: Array1<T>,
    pub z_forget: Array1<T>,
    pub z_memory: Array1<T>,
    pub z_output: Array1<T>,
}

impl<T: Real> LstmState<T> {
    pub fn zeros(hidden_dim: usize) -> Self {
        let z = Array1::zeros(hidden_dim);
        LstmState {
            h: z.clone(),
            c: z.clone(),
            z: z.clone(),
            z_forget: z.clone(),
            z_memory: z.clone(),
            z_output: z,
        }
    }
}

/// One time step of a single sequence:
/// `c = z_f ⊙ c_prev + z_i ⊙ z`, `h = z_o ⊙ tanh(c)`.
pub fn lstm_cell_forward<T: Real>(
    x_t: ArrayView1<'_, T>,
    state: &LstmState<T>,
    params: &LstmLayerParams<T>,
) -> Result<LstmState<T>> {
    params.check()?;
    if x_t.len() != params.input_dim {
        return Err(Error::shape("cell input x_t", params.input_dim, x_t.len()));
    }
    if state.h.len() != params.hidden_dim || state.c.len() != params.hidden_dim {
        return Err(Error::shape(
            "cell state h/c",
            params.hidden_dim,
            format!("{}/{}", state.h.len(), state.c.len()),
        ));
    }
    let mut a = Array1::zeros(params.input_dim + params.hidden_dim);
    a.slice_mut(s![..params.input_dim]).assign(&x_t);
    a.slice_mut(s![params.input_dim..]).assign(&state.h);
    let pre = params.weights.dot(&a) + &params.bias;
    let h = params.hidden_dim;
    let z = pre.slice(s![0..h]).mapv(T::tanh);
    let z_forget = pre.slice(s![h..2 * h]).mapv(sigmoid);
    let z_memory = pre.slice(s![2 * h..3 * h]).mapv(sigmoid);
    let z_output = pre.slice(s![3 * h..4 * h]).mapv(sigmoid);
    let c = &z_forget * &state.c + &z_memory * &z;
    let h_new = &z_output * &c.mapv(T::tanh);
    Ok(LstmState {
        h: h_new,
        c,
        z,
        z_forget,
        z_memory,
        z_output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_halve_memory() {
        let p = LstmLayerParams::<f64>::zeros(3, 2);
        let c0 = ndarray::arr1(&[0.8, -2.0]);
        let st = LstmState {
            c: c0.clone(),
            ..LstmState::zeros(2)
        };
        let out = lstm_cell_forward(Array1::zeros(3).view(), &st, &p).unwrap();
        for k in 0..2 {
            assert_eq!(out.z_forget[k], 0.5);
            assert_eq!(out.z_memory[k], 0.5);
            assert_eq!(out.z_output[k], 0.5);
            assert_eq!(out.z[k], 0.0);
            assert!((out.c[k] - 0.5 * c0[k]).abs() < 1e-15);
            assert!((out.h[k] - 0.5 * (0.5 * c0[k]).tanh()).abs() < 1e-15);
        }
        let out = lstm_cell_forward(Array1::zeros(3).view(), &LstmState::zeros(2), &p).unwrap();
        assert!(out.h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_scalar_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (ni, nh) = (3usize, 2usize);
        let mut p = LstmLayerParams::<f64>::init(ni, nh, &mut rng);
        p.bias.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        let x: Vec<f64> = (0..ni).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h0: Vec<f64> = (0..nh).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c0: Vec<f64> = (0..nh).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let st = LstmState {
            h: Array1::from(h0.clone()),
            c: Array1::from(c0.clone()),
            ..LstmState::zeros(nh)
        };
        let out = lstm_cell_forward(Array1::from(x.clone()).view(), &st, &p).unwrap();

        let a: Vec<f64> = x.iter().chain(h0.iter()).copied().collect();
        let lin = |gate: usize, row: usize| -> f64 {
            let mut acc = p.bias[gate * nh + row];
            for (j, aj) in a.iter().enumerate() {
                acc += p.weights[[gate * nh + row, j]] * aj;
            }
            acc
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for r in 0..nh {
            let z = lin(0, r).tanh();
            let f = sig(lin(1, r));
            let i = sig(lin(2, r));
            let o = sig(lin(3, r));
            let c = f * c0[r] + i * z;
            let h = o * c.tanh();
            assert!((out.c[r] - c).abs() < 1e-12);
            assert!((out.h[r] - h).abs() < 1e-12);
            assert!((out.z[r] - z).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors_name_the_matrix() {
        let p = LstmLayerParams::<f64>::zeros(2, 4);
        let err = lstm_cell_forward(Array1::zeros(3).view(), &LstmState::zeros(4), &p).unwrap_err();
        assert!(err.to_string().contains("x_t"));
        let mut bad = p.clone();
        bad.weights = Array2::zeros((16, 5));
        let err = lstm_cell_forward(Array1::zeros(2).view(), &LstmState::zeros(4), &bad).unwrap_err();
        assert!(err.to_string().contains("stacked gate weights"));
    }

    #[test]
    fn init_bounds_and_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = LstmLayerParams::<f32>::init(2, 128, &mut rng);
        assert_eq!(p.w_input().dim(), (128, 130));
        assert_eq!(p.w_output().dim(), (128, 130));
        let k = 1.0 / 130f32.sqrt();
        assert!(p.weights.iter().all(|v| v.abs() <= k));
        assert!(p.gate_bias(Gate::Forget).iter().all(|&b| b == 1.0));
        assert!(p.gate_bias(Gate::Input).iter().all(|&b| b == 0.0));
    }
}
