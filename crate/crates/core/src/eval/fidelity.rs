use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::crypto::PrfKey;
use crate::lime::{explain, LimeConfig, Variant};
use crate::model::{Label, ModelWeights};
use crate::numeric::{FieldElement, FixedPoint, FixedVec};

/// How evaluation points are drawn around an input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EvalSampling {
    Uniform { half_edge: f64 },
    Gaussian { std: f64 },
}

impl Default for EvalSampling {
    fn default() -> Self {
        EvalSampling::Uniform { half_edge: 0.2 }
    }
}

#[derive(Debug, Clone)]
pub struct FidelityOptions {
    pub variants: Vec<Variant>,
    pub eval_points: usize,
    pub sampling: EvalSampling,
    pub seed: u64,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        Self {
            variants: Variant::all(),
            eval_points: 1_000,
            sampling: EvalSampling::default(),
            seed: 0,
        }
    }
}

/// Similarity of one variant on every input, in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub variant: String,
    pub similarities: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl FidelityResult {
    fn new(variant: Variant, similarities: Vec<f64>) -> Self {
        let n = similarities.len().max(1) as f64;
        let mean = similarities.iter().sum::<f64>() / n;
        let var = similarities.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        Self {
            variant: variant.to_string(),
            similarities,
            mean,
            std: var.sqrt(),
        }
    }
}

/// Class of the linear surrogate: 1 iff `w^T z + b >= 0.5`, exactly.
pub fn surrogate_label(w: &FixedVec, intercept: FixedPoint, z: &[i64]) -> Label {
    let s = w.scale as i128;
    let score: i128 = w
        .raw
        .iter()
        .zip(z)
        .map(|(&a, &b)| a as i128 * b as i128)
        .sum::<i128>()
        + intercept.raw as i128 * s;
    Label((2 * score >= s * s) as u8)
}

/// Points drawn around `x`, quantized to the model scale.
pub fn eval_points(x: &[i64], scale: i64, count: usize, sampling: EvalSampling, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = scale as f64;
    let normal = match sampling {
        EvalSampling::Gaussian { std } => Some(Normal::new(0.0, std).expect("finite std")),
        EvalSampling::Uniform { .. } => None,
    };
    (0..count)
        .map(|_| {
            x.iter()
                .map(|&xi| {
                    let off = match (sampling, &normal) {
                        (EvalSampling::Uniform { half_edge }, _) if half_edge > 0.0 => {
                            rng.random_range(-half_edge..=half_edge)
                        }
                        (EvalSampling::Gaussian { .. }, Some(n)) => n.sample(&mut rng),
                        _ => 0.0,
                    };
                    xi + (off * s).round() as i64
                })
                .collect()
        })
        .collect()
}

/// Fraction of `points` where model and surrogate agree.
pub fn prediction_similarity(
    model: &ModelWeights,
    w: &FixedVec,
    intercept: FixedPoint,
    points: &[Vec<i64>],
) -> Result<f64, EvalError> {
    let labels = model.infer_batch(points)?;
    let matches = labels
        .iter()
        .zip(points)
        .filter(|(l, p)| **l == surrogate_label(w, intercept, p))
        .count();
    Ok(matches as f64 / points.len().max(1) as f64)
}

fn key_for(seed: u64, input: usize) -> PrfKey {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ input as u64);
    PrfKey(FieldElement::random(&mut rng))
}

/// Explain every input under every variant and score the surrogate
/// against the model on fresh points around the input. Inputs run in
/// parallel; results keep input order.
pub fn eval_fidelity(
    model: &ModelWeights,
    base: &LimeConfig,
    inputs: &[Vec<i64>],
    opts: &FidelityOptions,
) -> Result<Vec<FidelityResult>, EvalError> {
    if let Some(bad) = inputs.iter().find(|x| x.len() != model.input_dim) {
        return Err(EvalError::Input(format!(
            "input has {} features, model expects {}",
            bad.len(),
            model.input_dim
        )));
    }
    let points: Vec<Vec<Vec<i64>>> = inputs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            eval_points(
                x,
                model.scale,
                opts.eval_points,
                opts.sampling,
                opts.seed ^ (i as u64) << 20,
            )
        })
        .collect();
    opts.variants
        .iter()
        .map(|&v| {
            let cfg = base.clone().with_variant(v);
            let sims = inputs
                .par_iter()
                .enumerate()
                .map(|(i, x)| {
                    let out = explain(x, model, &cfg, &key_for(opts.seed, i))?;
                    prediction_similarity(model, &out.lasso.w_hat, out.lasso.intercept, &points[i])
                })
                .collect::<Result<Vec<_>, EvalError>>()?;
            Ok(FidelityResult::new(v, sims))
        })
        .collect()
}

/// `variant,input,similarity` rows.
pub fn results_csv(results: &[FidelityResult]) -> String {
    let mut out = String::from("variant,input,similarity\n");
    for r in results {
        for (i, s) in r.similarities.iter().enumerate() {
            writeln!(out, "{},{i},{s:.6}", r.variant).expect("write to string");
        }
    }
    out
}

/// One line per variant: `mean ± std`.
pub fn summary_table(results: &[FidelityResult]) -> String {
    let mut out = format!("{:<8} {:>8} {:>8} {:>6}\n", "variant", "mean", "std", "inputs");
    for r in results {
        writeln!(
            out,
            "{:<8} {:>8.4} {:>8.4} {:>6}",
            r.variant,
            r.mean,
            r.std,
            r.similarities.len()
        )
        .expect("write to string");
    }
    out
}
