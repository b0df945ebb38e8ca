//! Neural core: LSTM encoder, shallow decoder, the composite SHRED map and
//! its hand-derived reverse-mode gradient. All arithmetic is `f64`.

mod activation;
mod decoder;
mod lstm;
mod params;
mod shred;

pub use activation::{relu, sigmoid, tanh};
pub(crate) use decoder::decoder_backward;
pub use decoder::{decoder_forward, DecoderParams, DecoderTrace};
pub use lstm::{lstm_cell_forward, lstm_sequence, CellCache, LstmLayer, LstmParams, LstmTrace, GATES};
pub use params::{Dense, ParamArrays};
pub(crate) use shred::accumulate_gradient;
pub use shred::{
    init_params, shred_backward, shred_forward, Architecture, GradientSet, LossKind, ShredParams, CHECKPOINT_MAGIC,
};
