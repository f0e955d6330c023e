//! The end-to-end recurrent loop: prelude, exact core, periodic
//! re-grounding, and the float coda.

use super::block::{attention_weights, over_common_denominator, rational_ffn};
use super::ring::{b_ring, the_ring, RingConfig};
use super::tensor::RationalTensor;
use crate::error::{HaloError, Result};
use crate::exact::{BitReport, Rational};
use crate::float_emu::{round_to, Regime};
use crate::transcend::TranscendConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceConfig {
    /// Recurrent depth `T`.
    pub depth: usize,
    /// Lift scale `S = 2^scale_log2`.
    pub scale_log2: u32,
    pub d_model: usize,
    pub d_ff: usize,
    pub vocab: usize,
    /// Longest token sequence the positional table covers.
    pub max_seq: usize,
    pub taylor: TranscendConfig,
    /// `None` disables re-grounding.
    pub ring: Option<RingConfig>,
    pub seed: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            depth: 300,
            scale_log2: 16,
            d_model: 32,
            d_ff: 32,
            vocab: 16,
            max_seq: 8,
            taylor: TranscendConfig::default(),
            ring: Some(RingConfig::default()),
            seed: 42,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.d_ff == 0 || self.vocab == 0 || self.max_seq == 0 {
            return Err(HaloError::InvalidParameter("model dimensions must be at least 1".into()));
        }
        self.taylor.validate()?;
        if let Some(ring) = &self.ring {
            ring.validate()?;
        }
        Ok(())
    }
}

/// Model parameters, all dyadic rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights {
    pub embed: RationalTensor,
    pub pos: RationalTensor,
    pub wq: RationalTensor,
    pub wk: RationalTensor,
    pub w1: RationalTensor,
    pub w2: RationalTensor,
    pub w_vocab: RationalTensor,
}

impl ModelWeights {
    /// Seeded uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` draws, rounded to
    /// bfloat16 and lifted at the configured scale. Embeddings draw from
    /// `(-1, 1)`; the positional table is a fixed pattern of multiples of
    /// `1/64`.
    pub fn random(cfg: &InferenceConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let s = cfg.scale_log2;
        let mut draw = |rows: usize, cols: usize, half_width: f64| -> Result<RationalTensor> {
            let data = (0..rows * cols)
                .map(|_| {
                    let x = round_to(rng.gen_range(-half_width..half_width), Regime::Bf16);
                    Rational::lift(x, s).map(|l| l.value)
                })
                .collect::<Result<Vec<_>>>()?;
            RationalTensor::new(rows, cols, data)
        };
        let (d, f, v) = (cfg.d_model, cfg.d_ff, cfg.vocab);
        let embed = draw(v, d, 1.0)?;
        let wq = draw(d, d, 1.0 / (d as f64).sqrt())?;
        let wk = draw(d, d, 1.0 / (d as f64).sqrt())?;
        let w1 = draw(d, f, 1.0 / (d as f64).sqrt())?;
        let w2 = draw(f, d, 1.0 / (f as f64).sqrt())?;
        let w_vocab = draw(d, v, 1.0 / (d as f64).sqrt())?;
        let pos = RationalTensor::from_fn(cfg.max_seq, d, |p, j| {
            Rational::ratio(((p * 7 + j * 3) % 16) as i64 - 8, 64)
        });
        Ok(Self {
            embed,
            pos,
            wq,
            wk,
            w1,
            w2,
            w_vocab,
        })
    }

    fn check(&self, cfg: &InferenceConfig) -> Result<()> {
        let (d, f, v) = (cfg.d_model, cfg.d_ff, cfg.vocab);
        let expected = [
            ("embed", &self.embed, (v, d)),
            ("pos", &self.pos, (cfg.max_seq, d)),
            ("wq", &self.wq, (d, d)),
            ("wk", &self.wk, (d, d)),
            ("w1", &self.w1, (d, f)),
            ("w2", &self.w2, (f, d)),
            ("w_vocab", &self.w_vocab, (d, v)),
        ];
        for (name, t, shape) in expected {
            if t.shape() != shape {
                return Err(HaloError::Shape(format!("{name} is {:?}, expected {shape:?}", t.shape())));
            }
        }
        Ok(())
    }
}

/// Bit widths at one step of the loop.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    pub step: usize,
    /// State after the step (after re-grounding on ring steps).
    pub bits: BitReport,
    /// State just before re-grounding, on ring steps.
    pub pre_ring: Option<BitReport>,
    pub ring_misses: usize,
    pub b_ring: Option<u64>,
}

impl StepTrace {
    /// Width of the freshly computed state, before any re-grounding.
    pub fn computed_bits(&self) -> u64 {
        self.pre_ring.unwrap_or(self.bits).total_bits
    }
}

#[derive(Clone, Debug)]
pub struct InferenceOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub trace: Vec<StepTrace>,
    pub final_state: RationalTensor,
    /// The lifted prelude state `H_0`.
    pub initial_state: RationalTensor,
    /// Attention weights used at every step, over one common denominator.
    pub attention: RationalTensor,
    /// False if lifting the prelude state rounded anything.
    pub lift_exact: bool,
}

/// Runs the recurrent model on `tokens`.
///
/// Queries and keys come from the prelude state, so the attention weights
/// are computed once and applied to `H_{t-1}` at every step. They are
/// stored over a single common denominator, which keeps every entry of the
/// state on one shared denominator and makes bit growth per step additive.
/// Re-grounded states are put back over the least common multiple of their
/// denominators for the same reason; the trace records them reduced.
pub fn run_inference(tokens: &[usize], cfg: &InferenceConfig, weights: &ModelWeights) -> Result<InferenceOutput> {
    cfg.validate()?;
    weights.check(cfg)?;
    if tokens.is_empty() || tokens.len() > cfg.max_seq {
        return Err(HaloError::InvalidParameter(format!(
            "sequence length {} outside 1..={}",
            tokens.len(),
            cfg.max_seq
        )));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t >= cfg.vocab) {
        return Err(HaloError::InvalidParameter(format!("token {bad} outside vocabulary of {}", cfg.vocab)));
    }

    // Stage 1: embed in float, lift.
    let d = cfg.d_model;
    let mut lift_exact = true;
    let mut h0 = Vec::with_capacity(tokens.len() * d);
    for (p, &tok) in tokens.iter().enumerate() {
        for j in 0..d {
            let x = weights.embed.get(tok, j).to_f64() + weights.pos.get(p, j).to_f64();
            let l = Rational::lift(x, cfg.scale_log2)?;
            lift_exact &= l.exact;
            h0.push(l.value);
        }
    }
    let mut h = RationalTensor::new(tokens.len(), d, h0)?;
    let initial_state = h.clone();
    let q = h.matmul(&weights.wq)?;
    let k = h.matmul(&weights.wk)?;
    let attention = over_common_denominator(&attention_weights(&q, &k, &cfg.taylor)?);

    let mut trace = vec![StepTrace {
        step: 0,
        bits: h.bit_report(),
        pre_ring: None,
        ring_misses: 0,
        b_ring: None,
    }];

    // Stages 2 and 3.
    for t in 1..=cfg.depth {
        let attn = attention.matmul(&h)?;
        let mlp = rational_ffn(&attn, &weights.w1, &weights.w2)?;
        let temp = mlp.add(&h)?;
        match &cfg.ring {
            Some(ring) if t % ring.interval == 0 => {
                let pre = temp.bit_report();
                let out = the_ring(&temp, ring)?;
                let bits = out.state.bit_report();
                // Back onto one denominator; the widening shows up in the
                // next step's growth.
                h = over_common_denominator(&out.state);
                trace.push(StepTrace {
                    step: t,
                    bits,
                    pre_ring: Some(pre),
                    ring_misses: out.misses,
                    b_ring: Some(out.b_ring),
                });
            }
            _ => {
                h = temp;
                trace.push(StepTrace {
                    step: t,
                    bits: h.bit_report(),
                    pre_ring: None,
                    ring_misses: 0,
                    b_ring: None,
                });
            }
        }
    }

    // Stage 4: collapse, normalize the last position, project, softmax.
    let last: Vec<f64> = h.row(h.rows() - 1).iter().map(Rational::to_f64).collect();
    let normed = layernorm_f64(&last, 1e-5);
    let logits: Vec<f64> = (0..cfg.vocab)
        .map(|c| {
            normed
                .iter()
                .enumerate()
                .fold(0.0, |acc, (j, x)| acc + x * weights.w_vocab.get(j, c).to_f64())
        })
        .collect();
    let probs = softmax_f64(&logits);
    Ok(InferenceOutput {
        logits,
        probs,
        trace,
        final_state: h,
        initial_state,
        attention,
        lift_exact,
    })
}

pub fn layernorm_f64(v: &[f64], eps: f64) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    v.iter().map(|x| (x - mean) * inv).collect()
}

pub fn softmax_f64(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Empirical check of the bit-width bound on one trace.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub interval: usize,
    pub b_ring: u64,
    /// Largest one-step growth of the state's widest entry.
    pub alpha_obs: u64,
    /// Widest entry ever computed, re-grounding inputs included.
    pub peak_bits: u64,
    /// Widest entry ever held between steps.
    pub peak_settled_bits: u64,
    pub bound_k: u64,
    pub bound_k_minus_1: u64,
}

impl BoundReport {
    pub fn holds_k(&self) -> bool {
        self.peak_bits <= self.bound_k
    }

    pub fn holds_k_minus_1(&self) -> bool {
        self.peak_bits <= self.bound_k_minus_1
    }
}

/// Measures `alpha` from the trace and compares the peak with
/// `B_ring + K alpha` and `B_ring + (K-1) alpha`.
///
/// `B_ring` is the largest grid bound seen at a re-grounding; before the
/// first one it is computed from the prelude state's magnitude.
pub fn bound_report(trace: &[StepTrace], interval: usize, d_max: u64, initial: &RationalTensor) -> BoundReport {
    let initial_int = initial
        .data()
        .iter()
        .map(|q| q.abs().floor())
        .max()
        .unwrap_or_default();
    let b = trace
        .iter()
        .filter_map(|s| s.b_ring)
        .chain(std::iter::once(b_ring(d_max, &initial_int)))
        .max()
        .unwrap_or(0);
    let alpha = trace
        .windows(2)
        .map(|w| w[1].computed_bits().saturating_sub(w[0].bits.total_bits))
        .max()
        .unwrap_or(0);
    let peak = trace.iter().map(StepTrace::computed_bits).max().unwrap_or(0);
    let settled = trace.iter().map(|s| s.bits.total_bits).max().unwrap_or(0);
    let k = interval as u64;
    BoundReport {
        interval,
        b_ring: b,
        alpha_obs: alpha,
        peak_bits: peak,
        peak_settled_bits: settled,
        bound_k: b + k * alpha,
        bound_k_minus_1: b + k.saturating_sub(1) * alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ring::Denoiser;
    use num_traits::{One, Zero};

    fn small(depth: usize, k: Option<usize>) -> InferenceConfig {
        InferenceConfig {
            depth,
            d_model: 8,
            d_ff: 8,
            vocab: 6,
            max_seq: 4,
            ring: k.map(|interval| RingConfig {
                interval,
                ..RingConfig::default()
            }),
            ..InferenceConfig::default()
        }
    }

    #[test]
    fn depth_zero_projects_the_lifted_embedding() {
        let cfg = small(0, Some(5));
        let w = ModelWeights::random(&cfg).unwrap();
        let tokens = [1, 4, 2];
        let out = run_inference(&tokens, &cfg, &w).unwrap();
        assert_eq!(out.trace.len(), 1);
        let last: Vec<f64> = (0..cfg.d_model)
            .map(|j| w.embed.get(2, j).to_f64() + w.pos.get(2, j).to_f64())
            .collect();
        let n = layernorm_f64(&last, 1e-5);
        for c in 0..cfg.vocab {
            let want: f64 = (0..cfg.d_model).fold(0.0, |a, j| a + n[j] * w.w_vocab.get(j, c).to_f64());
            assert_eq!(out.logits[c], want);
        }
        assert!((out.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let cfg = small(12, Some(4));
        let w = ModelWeights::random(&cfg).unwrap();
        let a = run_inference(&[0, 3], &cfg, &w).unwrap();
        let b = run_inference(&[0, 3], &cfg, &w).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(a.final_state.identical(&b.final_state));
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let cfg = small(1, None);
        let w = ModelWeights::random(&cfg).unwrap();
        let out = run_inference(&[0, 1, 2, 3], &cfg, &w).unwrap();
        for r in 0..4 {
            let s = out.attention.row(r).iter().fold(Rational::zero(), |a, b| a + b);
            assert_eq!(s, Rational::one());
        }
    }

    #[test]
    fn residual_addition_is_lossless() {
        let cfg = small(0, None);
        let w = ModelWeights::random(&cfg).unwrap();
        let out = run_inference(&[2, 5, 1], &cfg, &w).unwrap();
        let mut h = out.final_state.clone();
        for _ in 0..3 {
            let attn = out.attention.matmul(&h).unwrap();
            let mlp = rational_ffn(&attn, &w.w1, &w.w2).unwrap();
            let temp = mlp.add(&h).unwrap();
            assert!(temp.sub(&h).unwrap().identical(&mlp));
            h = temp;
        }
    }

    #[test]
    fn bound_holds_with_ring() {
        let cfg = small(30, Some(5));
        let w = ModelWeights::random(&cfg).unwrap();
        let out = run_inference(&[1, 2, 3], &cfg, &w).unwrap();
        let h0 = run_inference(&[1, 2, 3], &InferenceConfig { depth: 0, ..cfg.clone() }, &w).unwrap();
        let r = bound_report(&out.trace, 5, 1 << 16, &h0.final_state);
        assert!(r.alpha_obs > 0);
        assert!(r.holds_k(), "{r:?}");
        for s in &out.trace {
            if let Some(b) = s.b_ring {
                assert!(s.bits.total_bits <= b);
            }
        }
    }

    #[test]
    fn round_through_float_denoiser_runs() {
        let mut cfg = small(6, Some(3));
        cfg.ring.as_mut().unwrap().denoiser = Denoiser::RoundThroughFloat;
        let w = ModelWeights::random(&cfg).unwrap();
        assert!(run_inference(&[0], &cfg, &w).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = small(1, None);
        let w = ModelWeights::random(&cfg).unwrap();
        assert!(run_inference(&[], &cfg, &w).is_err());
        assert!(run_inference(&[99], &cfg, &w).is_err());
        assert!(run_inference(&[0; 5], &cfg, &w).is_err());
        let other = small(1, None);
        let wrong = ModelWeights::random(&InferenceConfig { d_model: 4, ..other }).unwrap();
        assert!(matches!(run_inference(&[0], &cfg, &wrong), Err(HaloError::Shape(_))));
    }
}
