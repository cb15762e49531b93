use serde::{Deserialize, Serialize};

use super::{KernelType, LimeConfig, LimeError, SamplingType};
use crate::crypto::{LookupTable, Tables};
use crate::model::{Label, ModelWeights};
use crate::numeric::{div_round, isqrt, mul_raw, narrow, NumericError};

/// Perturbed points, their labels and kernel weights. `z` is row-major,
/// `d` values per row, at `scale`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub d: usize,
    pub scale: i64,
    pub z: Vec<i64>,
    pub y: Vec<Label>,
    pub pi: Vec<i64>,
}

impl Neighborhood {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.z[i * self.d..(i + 1) * self.d]
    }
}

/// Offset of one uniform limb: `(s - 2^(b-1)) / 2^(b-1) * half_edge`.
pub fn uniform_offset(sample: u32, mid: u32, half_edge: i64) -> i64 {
    let centered = sample as i128 - mid as i128;
    div_round(centered * half_edge as i128, mid as i128) as i64
}

/// Perturb `center` once per `d`-chunk of `samples`; returns `z` row-major.
pub fn perturb(
    center: &[i64],
    samples: &[u32],
    cfg: &LimeConfig,
    gauss: &LookupTable,
) -> Result<Vec<i64>, LimeError> {
    let d = center.len();
    if d == 0 || !samples.len().is_multiple_of(d) {
        return Err(LimeError::SampleShortage {
            needed: d,
            got: samples.len(),
        });
    }
    let mid = 1u32 << (cfg.bits - 1);
    samples
        .iter()
        .enumerate()
        .map(|(t, &s)| {
            let offset = match cfg.smpl_type {
                SamplingType::Uniform => uniform_offset(s, mid, cfg.half_edge.raw),
                SamplingType::Gaussian => mul_raw(cfg.gauss_std.raw, gauss.lookup(s as i64)?, cfg.scale)?,
            };
            center[t % d]
                .checked_add(offset)
                .ok_or_else(|| overflow("perturbed coordinate", cfg.scale).into())
        })
        .collect()
}

fn overflow(what: &str, scale: i64) -> NumericError {
    NumericError::Overflow {
        value: what.to_string(),
        scale,
    }
}

/// Squared distance at `scale^2`.
pub fn squared_distance(a: &[i64], b: &[i64]) -> i128 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let t = p as i128 - q as i128;
            t * t
        })
        .sum()
}

/// `exp(-||x - z||^2 / sigma^2)` through the exponential table.
pub fn exponential_kernel(
    x: &[i64],
    z: &[i64],
    sigma: i64,
    scale: i64,
    exp: &LookupTable,
) -> Result<i64, LimeError> {
    if x.len() != z.len() {
        return Err(NumericError::LengthMismatch {
            left: x.len(),
            right: z.len(),
        }
        .into());
    }
    let s2 = sigma as i128 * sigma as i128;
    let key = div_round(squared_distance(x, z) * scale as i128, s2);
    // the table clamps anything below its domain
    let key = key.min(i64::MAX as i128) as i64;
    Ok(exp.lookup(-key)?)
}

/// Kernel weight of every row relative to `center`.
pub fn kernel_weights(
    center: &[i64],
    z: &[i64],
    cfg: &LimeConfig,
    exp: &LookupTable,
) -> Result<Vec<i64>, LimeError> {
    let d = center.len();
    match cfg.krnl_type {
        KernelType::None => Ok(vec![cfg.scale; z.len() / d]),
        KernelType::Exponential => z
            .chunks(d)
            .map(|row| exponential_kernel(center, row, cfg.sigma.raw, cfg.scale, exp))
            .collect(),
    }
}

/// `sqrt(pi)` at `scale`, rounded down.
pub fn sqrt_weight(pi: i64, scale: i64) -> Result<i64, LimeError> {
    if pi < 0 {
        return Err(LimeError::Config(format!("negative kernel weight {pi}")));
    }
    Ok(narrow(isqrt(pi as u128 * scale as u128) as i128, scale)?)
}

/// The design the solver sees: `z' = sqrt(pi) z` and `y' = sqrt(pi) y`.
pub fn weighted_design(
    z: &[i64],
    y: &[Label],
    pi: &[i64],
    d: usize,
    scale: i64,
) -> Result<(Vec<i64>, Vec<i64>), LimeError> {
    if z.len() != y.len() * d || pi.len() != y.len() {
        return Err(NumericError::LengthMismatch {
            left: z.len(),
            right: y.len() * d,
        }
        .into());
    }
    let mut zp = Vec::with_capacity(z.len());
    let mut yp = Vec::with_capacity(y.len());
    for (i, (&p, &label)) in pi.iter().zip(y).enumerate() {
        let w = sqrt_weight(p, scale)?;
        for &v in &z[i * d..(i + 1) * d] {
            zp.push(mul_raw(w, v, scale)?);
        }
        yp.push(w * label.0 as i64);
    }
    Ok((zp, yp))
}

/// Perturb, label and weight `n` points around `center`.
pub fn build_neighborhood(
    center: &[i64],
    cfg: &LimeConfig,
    samples: &[u32],
    model: &ModelWeights,
    tables: &Tables,
) -> Result<Neighborhood, LimeError> {
    let d = center.len();
    let needed = cfg.n * d;
    if samples.len() < needed {
        return Err(LimeError::SampleShortage {
            needed,
            got: samples.len(),
        });
    }
    let z = perturb(center, &samples[..needed], cfg, &tables.gauss)?;
    let y = model.infer_rows(&z)?;
    let pi = kernel_weights(center, &z, cfg, &tables.exp)?;
    Ok(Neighborhood {
        d,
        scale: cfg.scale,
        z,
        y,
        pi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{FixedPoint, DEFAULT_SCALE};
    use proptest::prelude::*;
    use std::sync::Arc;

    const S: i64 = DEFAULT_SCALE;

    fn tables() -> Arc<Tables> {
        Tables::shared(&Default::default(), S, 16).unwrap()
    }

    fn cfg(sampling: SamplingType) -> LimeConfig {
        let mut c = LimeConfig::defaults(2);
        c.smpl_type = sampling;
        c
    }

    #[test]
    fn centered_sample_is_the_center() {
        let t = tables();
        let x = [1234, -5678];
        for mode in [SamplingType::Uniform, SamplingType::Gaussian] {
            let z = perturb(&x, &[1 << 15; 6], &cfg(mode), &t.gauss).unwrap();
            for row in z.chunks(2) {
                assert!((row[0] - x[0]).abs() <= 1 && (row[1] - x[1]).abs() <= 1);
            }
        }
        let z = perturb(&x, &[1 << 15; 2], &cfg(SamplingType::Uniform), &t.gauss).unwrap();
        assert_eq!(z, x);
    }

    #[test]
    fn uniform_endpoints() {
        let mid = 1 << 15;
        assert_eq!(uniform_offset(0, mid, 2000), -2000);
        // (2^15 - 1) / 2^15 * 0.2 = 0.19999.. rounds to 0.2 at scale 1e4
        assert_eq!(uniform_offset((1 << 16) - 1, mid, 2000), 2000);
        assert_eq!(uniform_offset(mid + mid / 2, mid, 2000), 1000);
    }

    /// Gaussian offsets over the full limb range: moments against the
    /// exact normal.
    #[test]
    fn gaussian_moments() {
        let t = tables();
        let c = cfg(SamplingType::Gaussian);
        let samples: Vec<u32> = (0..20_000u32).map(|i| (i * 3277 + 17) % (1 << 16)).collect();
        let z = perturb(&[0, 0], &samples, &c, &t.gauss).unwrap();
        let vals: Vec<f64> = z.iter().map(|&v| v as f64 / S as f64).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 0.2).abs() < 0.2 * 0.03, "std {}", var.sqrt());
    }

    #[test]
    fn kernel_values() {
        let t = tables();
        let x = [1000, 2000];
        assert_eq!(exponential_kernel(&x, &x, 7500, S, &t.exp).unwrap(), S);
        // distance exactly sigma
        let z = [1000 + 6000, 2000 + 8000];
        let k = exponential_kernel(&x, &z, 10_000, S, &t.exp).unwrap();
        let reference = ((-1.0f64).exp() * S as f64).round() as i64;
        assert!((k - reference).abs() <= 1, "{k} vs {reference}");
        // far away clamps to exp(-20), which is 0 at this scale
        let z = [1_000_000, 0];
        assert_eq!(exponential_kernel(&x, &z, 100, S, &t.exp).unwrap(), 0);
        assert!(exponential_kernel(&x, &[0], 100, S, &t.exp).is_err());
    }

    #[test]
    fn no_kernel_is_one() {
        let t = tables();
        let mut c = cfg(SamplingType::Gaussian);
        c.krnl_type = KernelType::None;
        let pi = kernel_weights(&[0, 0], &[5, 5, 9, 9, -3, 2], &c, &t.exp).unwrap();
        assert_eq!(pi, vec![S; 3]);
    }

    #[test]
    fn design_weights() {
        let z = [10_000, -20_000, 3_000, 4_000];
        let y = [Label::ONE, Label::ZERO];
        // pi = 0.25 -> sqrt 0.5 ; pi = 1 -> 1
        let (zp, yp) = weighted_design(&z, &y, &[2_500, S], 2, S).unwrap();
        assert_eq!(zp, vec![5_000, -10_000, 3_000, 4_000]);
        assert_eq!(yp, vec![5_000, 0]);
        assert!(weighted_design(&z, &y, &[S], 2, S).is_err());
    }

    #[test]
    fn shortage_is_reported() {
        let t = tables();
        let model = ModelWeights::linear(&[1.0, 1.0], 0.0, S).unwrap();
        let c = cfg(SamplingType::Uniform);
        let err = build_neighborhood(&[0, 0], &c, &[0; 10], &model, &t).unwrap_err();
        assert!(matches!(err, LimeError::SampleShortage { needed: 600, got: 10 }));
    }

    proptest! {
        #[test]
        fn kernel_in_unit_interval(
            x in proptest::collection::vec(-50_000i64..50_000, 3),
            z in proptest::collection::vec(-50_000i64..50_000, 3),
            sigma in 100i64..50_000,
        ) {
            let t = tables();
            let k = exponential_kernel(&x, &z, sigma, S, &t.exp).unwrap();
            prop_assert!((0..=S).contains(&k));
            let reference = (-(squared_distance(&x, &z) as f64) / (sigma as f64).powi(2)).exp();
            prop_assert!((k as f64 / S as f64 - reference).abs() <= 2.0 / S as f64);
        }

        #[test]
        fn uniform_offsets_bounded(s in 0u32..(1 << 16), half in 0i64..10_000) {
            let o = uniform_offset(s, 1 << 15, half);
            prop_assert!(o.abs() <= half);
            let exact = (s as f64 - 32768.0) / 32768.0 * half as f64;
            prop_assert!((o as f64 - exact).abs() <= 0.5);
        }
    }

    #[test]
    fn fixed_point_sigma_scale() {
        let c = LimeConfig::defaults(2);
        assert_eq!(c.sigma, FixedPoint::new(10_607, S));
    }
}
