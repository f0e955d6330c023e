//! Attention and feed-forward layers over exact tensors.

use super::tensor::RationalTensor;
use crate::error::Result;
use crate::exact::Rational;
use crate::transcend::{attention_shift, rat_relu, rat_softmax, TranscendConfig};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

/// Row-wise softmax of `Q K^T 2^-k`; every row sums to exactly one.
pub fn attention_weights(q: &RationalTensor, k: &RationalTensor, cfg: &TranscendConfig) -> Result<RationalTensor> {
    let shift = attention_shift(q.cols());
    let scores = q.matmul(&k.transpose())?.map(|s| s.shr(shift));
    let mut data = Vec::with_capacity(scores.rows() * scores.cols());
    for r in 0..scores.rows() {
        data.extend(rat_softmax(scores.row(r), cfg.taylor_order)?);
    }
    RationalTensor::new(scores.rows(), scores.cols(), data)
}

/// `softmax(Q K^T 2^-k) V` for a single head.
pub fn rational_attention(
    q: &RationalTensor,
    k: &RationalTensor,
    v: &RationalTensor,
    cfg: &TranscendConfig,
) -> Result<RationalTensor> {
    attention_weights(q, k, cfg)?.matmul(v)
}

/// `relu(H W1) W2`.
pub fn rational_ffn(h: &RationalTensor, w1: &RationalTensor, w2: &RationalTensor) -> Result<RationalTensor> {
    h.matmul(w1)?.map(rat_relu).matmul(w2)
}

/// Rewrites every entry over the least common multiple of the entries'
/// denominators. Values are unchanged.
pub fn over_common_denominator(t: &RationalTensor) -> RationalTensor {
    let common = t
        .data()
        .iter()
        .fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    t.map(|q| Rational::from_parts(q.numer() * (&common / q.denom()), common.clone()))
}
