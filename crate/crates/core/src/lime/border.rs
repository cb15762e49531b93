use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::neighborhood::squared_distance;
use super::{LimeConfig, LimeError};
use crate::crypto::{gaussian_samples, Tables};
use crate::model::{Label, ModelWeights};
use crate::numeric::{div_round, mul_raw, narrow, FixedPoint};

/// A label flip found along one search direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorderHit {
    pub point: Vec<i64>,
    pub direction: usize,
    /// Step count `k` at which the label first differs.
    pub step: usize,
    /// Squared distance to the input at `scale^2`.
    pub dist2: i128,
}

impl BorderHit {
    fn rank(&self) -> (usize, i128, usize) {
        (self.step, self.dist2, self.direction)
    }
}

/// Unit directions from `m * d` limbs: gaussian coordinates scaled by the
/// table reciprocal square root of their squared norm.
pub fn border_directions(
    samples: &[u32],
    d: usize,
    m: usize,
    tables: &Tables,
    scale: i64,
) -> Result<Vec<Vec<i64>>, LimeError> {
    if samples.len() < m * d {
        return Err(LimeError::SampleShortage {
            needed: m * d,
            got: samples.len(),
        });
    }
    let g = gaussian_samples(&samples[..m * d], &tables.gauss)?;
    g.chunks(d)
        .map(|dir| {
            let norm2: i128 = dir.iter().map(|&v| v as i128 * v as i128).sum();
            let key = narrow(div_round(norm2, scale as i128), scale)?;
            let inv = tables.recip_sqrt.lookup(key)?;
            dir.iter()
                .map(|&v| Ok(mul_raw(v, inv, scale)?))
                .collect::<Result<Vec<_>, LimeError>>()
        })
        .collect()
}

/// `x + k * delta * u`, each coordinate rounded once.
pub fn ray_point(x: &[i64], u: &[i64], k: usize, delta: i64, scale: i64) -> Result<Vec<i64>, LimeError> {
    x.iter()
        .zip(u)
        .map(|(&xi, &ui)| {
            let off = div_round(k as i128 * delta as i128 * ui as i128, scale as i128);
            Ok(narrow(xi as i128 + off, scale)?)
        })
        .collect()
}

fn better(a: Option<BorderHit>, b: Option<BorderHit>) -> Option<BorderHit> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.rank() < a.rank() { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Walk each ray until the label flips or `t` steps are used. The chosen
/// hit minimizes `(step, dist2, direction)`, so the result does not depend
/// on scheduling.
pub fn search_rays(
    x: &[i64],
    dirs: &[Vec<i64>],
    model: &ModelWeights,
    label: Label,
    delta: i64,
    t: usize,
    scale: i64,
) -> Result<Option<BorderHit>, LimeError> {
    let hits = dirs
        .par_iter()
        .enumerate()
        .map(|(dir, u)| -> Result<Option<BorderHit>, LimeError> {
            for k in 1..=t {
                let p = ray_point(x, u, k, delta, scale)?;
                if model.infer(&p)? != label {
                    return Ok(Some(BorderHit {
                        dist2: squared_distance(&p, x),
                        point: p,
                        direction: dir,
                        step: k,
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(hits.into_iter().fold(None, better))
}

/// The checker's form: label every grid point `x + i * step_size * u` for
/// `i = 1..=vector_length`, then scan from the far end keeping the nearest
/// flipped step. Agrees with [`search_rays`] by construction.
pub fn grid_search(
    x: &[i64],
    dirs: &[Vec<i64>],
    model: &ModelWeights,
    label: Label,
    step_size: i64,
    vector_length: usize,
    scale: i64,
) -> Result<Option<BorderHit>, LimeError> {
    let mut grid = Vec::with_capacity(dirs.len() * vector_length);
    for u in dirs {
        for i in 1..=vector_length {
            grid.push(ray_point(x, u, i, step_size, scale)?);
        }
    }
    let labels = model.infer_batch(&grid)?;
    let mut best: Option<BorderHit> = None;
    for i in (1..=vector_length).rev() {
        let mut at_step: Option<BorderHit> = None;
        for dir in 0..dirs.len() {
            let idx = dir * vector_length + i - 1;
            if labels[idx] != label {
                let hit = BorderHit {
                    point: grid[idx].clone(),
                    direction: dir,
                    step: i,
                    dist2: squared_distance(&grid[idx], x),
                };
                at_step = better(at_step, Some(hit));
            }
        }
        if at_step.is_some() {
            best = at_step;
        }
    }
    Ok(best)
}

/// Border search from the first `m * d` samples. Returns the new center,
/// which is `x` itself when no direction flips.
pub fn find_opposite_point(
    x: &[i64],
    model: &ModelWeights,
    cfg: &LimeConfig,
    samples: &[u32],
    tables: &Tables,
) -> Result<(Vec<i64>, Option<BorderHit>), LimeError> {
    let d = x.len();
    let b = &cfg.border;
    let dirs = border_directions(samples, d, b.m, tables, cfg.scale)?;
    let label = model.infer(x)?;
    let hit = search_rays(x, &dirs, model, label, b.delta.raw, b.t, cfg.scale)?;
    let center = hit.as_ref().map_or_else(|| x.to_vec(), |h| h.point.clone());
    Ok((center, hit))
}

/// Smallest candidate radius for which every input finds an opposite
/// point. `inputs` pairs each input with its border samples. Offline helper,
/// not part of the protocol.
pub fn select_delta(
    inputs: &[(Vec<i64>, Vec<u32>)],
    model: &ModelWeights,
    cfg: &LimeConfig,
    tables: &Tables,
    candidates: &[FixedPoint],
) -> Result<Option<FixedPoint>, LimeError> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|c| c.raw);
    for delta in sorted {
        let mut c = cfg.clone();
        c.border = super::BorderConfig::new(cfg.border.m, delta, cfg.border.t);
        let mut all = true;
        for (x, samples) in inputs {
            if find_opposite_point(x, model, &c, samples, tables)?.1.is_none() {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(delta));
        }
    }
    Ok(None)
}

/// Radii tried by [`select_delta`] by default.
pub fn default_delta_candidates(scale: i64) -> Vec<FixedPoint> {
    [0.01, 0.03, 0.05, 0.07, 0.1, 0.15]
        .iter()
        .map(|&v| FixedPoint::quantize(v, scale).expect("small constants fit"))
        .collect()
}
