//! Two-layer LSTM classifier trained with backpropagation through time and
//! Adam.

mod adam;
mod cell;
pub mod checkpoint;
mod data;
mod eval;
mod loss;
mod network;
mod train;

pub use checkpoint::{load_model, save_model, ModelSidecar};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use cell::{lstm_cell_forward, sigmoid, Gate, LstmLayerParams, LstmState};
pub use data::FrameSet;
pub use eval::{argmax_rows, evaluate, Evaluation};
pub use loss::{batch_cross_entropy, cross_entropy_loss, Loss, PROB_FLOOR};
pub use network::{init_params, network_forward, softmax_rows, DenseSoftmaxHead, Dims, ForwardCache, LstmNetwork};
pub use train::{train, train_and_evaluate, train_with, EpochRecord, History, TrainConfig, TrainStep};
