//! Exact tensors, the transformer block, re-grounding, the recurrent loop
//! and the alignment loss.

mod block;
mod inference;
mod loss;
mod ring;
mod snapshot;
mod tensor;

pub use block::{attention_weights, over_common_denominator, rational_attention, rational_ffn};
pub use inference::{
    bound_report, layernorm_f64, run_inference, softmax_f64, BoundReport, InferenceConfig, InferenceOutput,
    ModelWeights, StepTrace,
};
pub use loss::{ring_loss, ste_project, IdentityJacobian, LossConfig, LossOutput};
pub use ring::{b_ring, the_ring, Denoiser, RingConfig, RingOutput};
pub use snapshot::{load_weights, read_tensor, save_weights, write_tensor};
pub use tensor::RationalTensor;
