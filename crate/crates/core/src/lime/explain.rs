use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::border::{find_opposite_point, BorderHit};
use super::lasso::{certify, CertifyOptions, Design, LassoSolution};
use super::neighborhood::{build_neighborhood, weighted_design, Neighborhood};
use super::topk::{top_k, Explanation};
use super::{LimeConfig, LimeError};
use crate::crypto::{decompose, prf_stream, PrfKey, Tables};
use crate::model::{Label, ModelWeights};
use crate::numeric::FieldElement;

/// Wall-clock time per pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sampling: Duration,
    pub border: Duration,
    pub neighborhood: Duration,
    pub lasso: Duration,
    pub top_k: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.sampling + self.border + self.neighborhood + self.lasso + self.top_k
    }

    pub fn phases(&self) -> [(&'static str, Duration); 5] {
        [
            ("sampling", self.sampling),
            ("border", self.border),
            ("neighborhood", self.neighborhood),
            ("lasso", self.lasso),
            ("top_k", self.top_k),
        ]
    }
}

/// Everything one run produces, including the intermediates a certificate
/// needs.
#[derive(Debug, Clone)]
pub struct ExplainOutput {
    pub label: Label,
    pub explanation: Explanation,
    pub neighborhood: Neighborhood,
    pub lasso: LassoSolution,
    /// Present iff border search is enabled; equals the input when no
    /// direction flips.
    pub x_border: Option<Vec<i64>>,
    pub border_hit: Option<BorderHit>,
    pub hashes: Vec<FieldElement>,
    /// Every limb of every digest, digest by digest.
    pub limbs: Vec<u32>,
    pub timings: Timings,
}

/// Run the full pipeline on `x` with PRF key `key`.
pub fn explain(
    x: &[i64],
    model: &ModelWeights,
    cfg: &LimeConfig,
    key: &PrfKey,
) -> Result<ExplainOutput, LimeError> {
    let d = x.len();
    if d != model.input_dim {
        return Err(LimeError::Config(format!(
            "input has {d} features, model expects {}",
            model.input_dim
        )));
    }
    cfg.validate(d)?;
    let tables = Tables::shared(&cfg.tables, cfg.scale, cfg.bits)?;
    let mut timings = Timings::default();

    let clock = Instant::now();
    let layout = cfg.layout()?;
    let total = cfg.total_samples(d);
    let hashes = prf_stream(key, layout.digests_for(total));
    let limbs: Vec<u32> = hashes.iter().flat_map(|h| decompose(h, layout).0).collect();
    timings.sampling = clock.elapsed();

    let label = model.infer(x)?;
    let used = cfg.border_samples(d);

    let clock = Instant::now();
    let (center, x_border, border_hit) = if cfg.border_lime {
        let (center, hit) = find_opposite_point(x, model, cfg, &limbs[..used], &tables)?;
        (center.clone(), Some(center), hit)
    } else {
        (x.to_vec(), None, None)
    };
    timings.border = clock.elapsed();

    let clock = Instant::now();
    let neighborhood = build_neighborhood(&center, cfg, &limbs[used..total], model, &tables)?;
    timings.neighborhood = clock.elapsed();

    let clock = Instant::now();
    let (zp, yp) = weighted_design(&neighborhood.z, &neighborhood.y, &neighborhood.pi, d, cfg.scale)?;
    let design = Design::new(&zp, &yp, d, cfg.scale)?;
    let lasso = certify(&design, certify_options(cfg))?;
    timings.lasso = clock.elapsed();

    let clock = Instant::now();
    let explanation = top_k(&lasso.w_hat, cfg.k);
    timings.top_k = clock.elapsed();

    Ok(ExplainOutput {
        label,
        explanation,
        neighborhood,
        lasso,
        x_border,
        border_hit,
        hashes,
        limbs,
        timings,
    })
}

pub fn certify_options(cfg: &LimeConfig) -> CertifyOptions {
    CertifyOptions {
        alpha: cfg.alpha,
        epsilon: cfg.epsilon,
        dual_scale: cfg.dual_scale,
        max_sweeps: cfg.max_sweeps,
        tol_fraction: 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lime::{KernelType, SamplingType, Variant};
    use crate::model::synthesize_model;
    use crate::numeric::{FixedVec, DEFAULT_SCALE};

    const S: i64 = DEFAULT_SCALE;

    fn key(v: u128) -> PrfKey {
        PrfKey(FieldElement::from_u128(v))
    }

    #[test]
    fn deterministic() {
        let model = synthesize_model(&"mlp:6,8,2".parse().unwrap(), 1, S).unwrap();
        let cfg = LimeConfig::defaults(6);
        let x = vec![1_000, -500, 2_000, 0, 300, -1_200];
        let a = explain(&x, &model, &cfg, &key(42)).unwrap();
        let b = explain(&x, &model, &cfg, &key(42)).unwrap();
        assert_eq!(a.explanation, b.explanation);
        assert_eq!(a.lasso, b.lasso);
        assert_eq!(a.neighborhood, b.neighborhood);
        let c = explain(&x, &model, &cfg, &key(43)).unwrap();
        assert_ne!(a.neighborhood.z, c.neighborhood.z);
    }

    #[test]
    fn border_gate() {
        let model = synthesize_model(&"mlp:3,8,2".parse().unwrap(), 2, S).unwrap();
        let x = vec![500, 500, -500];
        let mut cfg = LimeConfig::defaults(3);
        let out = explain(&x, &model, &cfg, &key(7)).unwrap();
        assert!(out.x_border.is_none());
        // with no border search the first sample perturbs the first row
        let direct = crate::lime::neighborhood::perturb(
            &x,
            &out.limbs[..3],
            &cfg,
            &Tables::shared(&cfg.tables, S, 16).unwrap().gauss,
        )
        .unwrap();
        assert_eq!(direct, out.neighborhood.row(0));

        cfg.border_lime = true;
        let out = explain(&x, &model, &cfg, &key(7)).unwrap();
        let center = out.x_border.clone().unwrap();
        if let Some(hit) = &out.border_hit {
            assert_eq!(hit.point, center);
            assert_ne!(model.infer(&center).unwrap(), out.label);
        } else {
            assert_eq!(center, x);
        }
    }

    #[test]
    fn adult_sized_run() {
        let model = synthesize_model(&"mlp:14,16,16,2".parse().unwrap(), 3, S).unwrap();
        let cfg = LimeConfig::defaults(14);
        let x: Vec<i64> = (0..14).map(|i| (i as i64 - 7) * 700).collect();
        for v in Variant::all() {
            let c = cfg.clone().with_variant(v);
            let out = explain(&x, &model, &c, &key(11)).unwrap();
            assert_eq!(out.explanation.len(), 5, "{v}");
            assert!(out.lasso.gap.raw <= c.epsilon.rescale(c.dual_scale).unwrap().raw);
            for e in &out.explanation.entries {
                assert_eq!(e.value.raw, out.lasso.w_hat.raw[e.feature]);
            }
        }
    }

    /// Linear model, gaussian sampling, no kernel: the explanation points
    /// along the true coefficients.
    #[test]
    fn planted_linear_direction() {
        let coef = [1.0, -1.0, 1.0];
        let model = ModelWeights::linear(&coef, 0.0, S).unwrap();
        let mut cfg = LimeConfig::defaults(3);
        cfg.smpl_type = SamplingType::Gaussian;
        cfg.krnl_type = KernelType::None;
        cfg.n = 3_000;
        cfg.k = 3;
        cfg.alpha = crate::numeric::FixedPoint::new(1, S);
        let x = vec![100, 50, -20];
        let out = explain(&x, &model, &cfg, &key(99)).unwrap();
        let w = FixedVec::to_f64(&out.lasso.w_hat);
        let dot: f64 = w.iter().zip(&coef).map(|(a, b)| a * b).sum();
        let nw = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nc = coef.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(dot / (nw * nc) >= 0.99, "cosine {}", dot / (nw * nc));
    }

    #[test]
    fn dimension_mismatch() {
        let model = synthesize_model(&"mlp:3,4,2".parse().unwrap(), 4, S).unwrap();
        let cfg = LimeConfig::defaults(3);
        assert!(explain(&[0, 0], &model, &cfg, &key(1)).is_err());
    }
}
