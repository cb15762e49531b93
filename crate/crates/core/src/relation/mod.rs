//! The explanation relation: a statement, a witness, and a deterministic
//! checker that accepts iff every condition holds.

mod tamper;

pub use tamper::{enumerate_tampers, Tamper};

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crypto::{
    check_decomposition, commit, decompose, prf_hash, verify_opening, Blinding, Commitment,
    DecompositionFault, PrfKey, Tables,
};
use crate::encoding::canonical_bytes;
use crate::lime::border::border_directions;
use crate::lime::lasso::{duality_gap, Design};
use crate::lime::neighborhood::{kernel_weights, perturb, weighted_design};
use crate::lime::{grid_search, top_k, Explanation, LimeConfig};
use crate::model::{Label, ModelWeights};
use crate::numeric::{FieldElement, FixedPoint, FixedVec};

/// Public inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub cc: LimeConfig,
    pub x: FixedVec,
    pub o: Label,
    pub e: Explanation,
    pub r_v: FieldElement,
    pub com_w: Commitment,
    pub com_r: Commitment,
}

/// Everything the prover knows. Disclosed in full to the replay checker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub model: ModelWeights,
    pub r_p: FieldElement,
    pub rho_w: Blinding,
    pub rho_r: Blinding,
    /// Labels of the perturbed points.
    pub y: Vec<Label>,
    /// PRF outputs `h_0 .. h_{N-1}`.
    pub h: Vec<FieldElement>,
    /// All `b`-bit limbs of `h`, digest by digest.
    pub limbs: Vec<u32>,
    /// Kernel weights at the primal scale.
    pub pi: Vec<i64>,
    pub w_hat: FixedVec,
    pub intercept: FixedPoint,
    pub v_hat: FixedVec,
    pub x_border: Option<Vec<i64>>,
}

/// Message committed to by `com_W`.
pub fn model_commitment_message(model: &ModelWeights) -> Vec<u8> {
    canonical_bytes(model).expect("model weights serialize")
}

pub fn commit_model(model: &ModelWeights, rho: &Blinding) -> Commitment {
    commit(&model_commitment_message(model), rho)
}

pub fn commit_randomness(r_p: &FieldElement, rho: &Blinding) -> Commitment {
    commit(&r_p.to_bytes(), rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    /// Shapes, scales and configuration.
    Structure,
    /// The certificate's statement matches what the verifier presented.
    StatementBinding,
    CommitmentR,
    CommitmentW,
    OutputInference,
    PrfHash,
    SampleDecomposition,
    SampleRange,
    BorderPoint,
    KernelWeights,
    SampleLabels,
    DualityGap,
    DualFeasibility,
    TopK,
}

impl CheckId {
    pub const ALL: [CheckId; 14] = [
        CheckId::Structure,
        CheckId::StatementBinding,
        CheckId::CommitmentR,
        CheckId::CommitmentW,
        CheckId::OutputInference,
        CheckId::PrfHash,
        CheckId::SampleDecomposition,
        CheckId::SampleRange,
        CheckId::BorderPoint,
        CheckId::KernelWeights,
        CheckId::SampleLabels,
        CheckId::DualityGap,
        CheckId::DualFeasibility,
        CheckId::TopK,
    ];
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("unit variant");
        f.write_str(v.as_str().expect("string tag"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub check: CheckId,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckTiming {
    pub check: CheckId,
    pub seconds: f64,
}

/// Outcome of [`check_relation`]. Timings are informational only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub accepted: bool,
    pub failures: Vec<Failure>,
    pub timings: Vec<CheckTiming>,
}

impl CheckReport {
    pub fn rejected_by(&self, check: CheckId) -> bool {
        self.failures.iter().any(|f| f.check == check)
    }

    pub fn failed_checks(&self) -> Vec<CheckId> {
        let mut ids: Vec<CheckId> = self.failures.iter().map(|f| f.check).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// A report rejecting with a single failure.
    pub fn single(check: CheckId, message: impl Into<String>) -> Self {
        let mut r = Recorder::default();
        r.fail(check, message);
        r.finish()
    }
}

#[derive(Default)]
struct Recorder {
    failures: Vec<Failure>,
    timings: Vec<CheckTiming>,
}

impl Recorder {
    fn fail(&mut self, check: CheckId, message: impl Into<String>) {
        self.failures.push(Failure {
            check,
            message: message.into(),
        });
    }

    fn timed<T>(&mut self, check: CheckId, f: impl FnOnce(&mut Self) -> T) -> T {
        let clock = Instant::now();
        let out = f(self);
        self.timings.push(CheckTiming {
            check,
            seconds: clock.elapsed().as_secs_f64(),
        });
        out
    }

    fn finish(self) -> CheckReport {
        CheckReport {
            accepted: self.failures.is_empty(),
            failures: self.failures,
            timings: self.timings,
        }
    }
}

/// Shape and configuration checks; `Err` carries the first violation.
fn check_structure(stmt: &Statement, wit: &Witness) -> Result<(), String> {
    let cc = &stmt.cc;
    let d = stmt.x.len();
    cc.validate(d).map_err(|e| e.to_string())?;
    wit.model.validate().map_err(|e| format!("model: {e}"))?;
    if wit.model.input_dim != d {
        return Err(format!(
            "x has {d} features, model expects {}",
            wit.model.input_dim
        ));
    }
    let scales = [
        ("x", stmt.x.scale),
        ("model", wit.model.scale),
        ("w_hat", wit.w_hat.scale),
        ("intercept", wit.intercept.scale),
    ];
    for (name, s) in scales {
        if s != cc.scale {
            return Err(format!("{name} scale {s} differs from configured {}", cc.scale));
        }
    }
    if wit.v_hat.scale != cc.dual_scale {
        return Err(format!(
            "v_hat scale {} differs from {}",
            wit.v_hat.scale, cc.dual_scale
        ));
    }
    let layout = cc.layout().map_err(|e| e.to_string())?;
    let digests = layout.digests_for(cc.total_samples(d));
    let lengths = [
        ("h", wit.h.len(), digests),
        ("limbs", wit.limbs.len(), digests * layout.limbs_per_digest()),
        ("y", wit.y.len(), cc.n),
        ("pi", wit.pi.len(), cc.n),
        ("w_hat", wit.w_hat.len(), d),
        ("v_hat", wit.v_hat.len(), cc.n),
        ("e", stmt.e.len(), cc.k),
    ];
    for (name, got, want) in lengths {
        if got != want {
            return Err(format!("{name} has length {got}, expected {want}"));
        }
    }
    if wit.y.iter().any(|l| l.0 > 1) {
        return Err("labels must be 0 or 1".into());
    }
    match (&wit.x_border, cc.border_lime) {
        (Some(p), true) if p.len() != d => {
            return Err(format!("x_border has length {}, expected {d}", p.len()))
        }
        (None, true) => return Err("border search enabled but x_border missing".into()),
        (Some(_), false) => return Err("x_border present with border search disabled".into()),
        _ => {}
    }
    if stmt
        .e
        .entries
        .iter()
        .any(|en| en.feature >= d || en.value.scale != cc.scale)
    {
        return Err("explanation entry out of range".into());
    }
    Ok(())
}

/// Check `(stmt, wit)` against every condition of the relation.
pub fn check_relation(stmt: &Statement, wit: &Witness) -> CheckReport {
    let mut rec = Recorder::default();
    if let Err(msg) = rec.timed(CheckId::Structure, |_| check_structure(stmt, wit)) {
        rec.fail(CheckId::Structure, msg);
        return rec.finish();
    }
    let cc = &stmt.cc;
    let d = stmt.x.len();
    let x = &stmt.x.raw;
    let tables = match Tables::shared(&cc.tables, cc.scale, cc.bits) {
        Ok(t) => t,
        Err(e) => {
            rec.fail(CheckId::Structure, format!("tables: {e}"));
            return rec.finish();
        }
    };
    let layout = cc.layout().expect("validated layout");

    rec.timed(CheckId::CommitmentR, |r| {
        if !verify_opening(&stmt.com_r, &wit.r_p.to_bytes(), &wit.rho_r) {
            r.fail(CheckId::CommitmentR, "r_p does not open com_r");
        }
    });
    rec.timed(CheckId::CommitmentW, |r| {
        if !verify_opening(&stmt.com_w, &model_commitment_message(&wit.model), &wit.rho_w) {
            r.fail(CheckId::CommitmentW, "weights do not open com_W");
        }
    });
    rec.timed(CheckId::OutputInference, |r| match wit.model.infer(x) {
        Ok(label) if label == stmt.o => {}
        Ok(label) => r.fail(
            CheckId::OutputInference,
            format!("f(x) = {label}, claimed {}", stmt.o),
        ),
        Err(e) => r.fail(CheckId::OutputInference, e.to_string()),
    });

    let key = PrfKey::derive(&wit.r_p, &stmt.r_v);
    rec.timed(CheckId::PrfHash, |r| {
        let bad: Vec<usize> = wit
            .h
            .par_iter()
            .enumerate()
            .filter(|(i, h)| prf_hash(&key, *i as u64) != **h)
            .map(|(i, _)| i)
            .collect();
        if let Some(first) = bad.first() {
            r.fail(
                CheckId::PrfHash,
                format!("{} digests differ from the PRF, first at {first}", bad.len()),
            );
        }
    });

    rec.timed(CheckId::SampleRange, |r| {
        let per = layout.limbs_per_digest();
        for (i, (h, limbs)) in wit.h.iter().zip(wit.limbs.chunks(per)).enumerate() {
            match check_decomposition(h, limbs, layout) {
                Ok(()) => {}
                Err(DecompositionFault::LimbRange(p)) => r.fail(
                    CheckId::SampleRange,
                    format!("digest {i}: limb {p} not below 2^b"),
                ),
                Err(DecompositionFault::RemainderRange) => r.fail(
                    CheckId::SampleRange,
                    format!("digest {i}: remainder not below 2^b"),
                ),
                Err(DecompositionFault::Mismatch) => r.fail(
                    CheckId::SampleDecomposition,
                    format!("digest {i}: limbs do not recombine"),
                ),
            }
        }
    });

    // downstream checks use limbs derived from the disclosed digests
    let samples: Vec<u32> = wit.h.iter().flat_map(|h| decompose(h, layout).0).collect();
    let used = cc.border_samples(d);

    let center = rec.timed(CheckId::BorderPoint, |r| {
        if !cc.border_lime {
            return Some(x.clone());
        }
        let b = &cc.border;
        let found = border_directions(&samples[..used], d, b.m, &tables, cc.scale).and_then(|dirs| {
            grid_search(
                x,
                &dirs,
                &wit.model,
                stmt.o,
                b.step_size.raw,
                b.vector_length,
                cc.scale,
            )
        });
        match found {
            Ok(hit) => {
                let expected = hit.map_or_else(|| x.clone(), |h| h.point);
                if wit.x_border.as_ref() != Some(&expected) {
                    r.fail(
                        CheckId::BorderPoint,
                        "x_border differs from the grid search result",
                    );
                }
                Some(expected)
            }
            Err(e) => {
                r.fail(CheckId::BorderPoint, e.to_string());
                None
            }
        }
    });
    let Some(center) = center else {
        return rec.finish();
    };

    let total = cc.total_samples(d);
    let z = match perturb(&center, &samples[used..total], cc, &tables.gauss) {
        Ok(z) => z,
        Err(e) => {
            rec.fail(CheckId::KernelWeights, format!("perturbation: {e}"));
            return rec.finish();
        }
    };
    rec.timed(CheckId::KernelWeights, |r| {
        match kernel_weights(&center, &z, cc, &tables.exp) {
            Ok(pi) => {
                let bad = pi.iter().zip(&wit.pi).filter(|(a, b)| a != b).count();
                if bad > 0 {
                    r.fail(CheckId::KernelWeights, format!("{bad} kernel weights differ"));
                }
            }
            Err(e) => r.fail(CheckId::KernelWeights, e.to_string()),
        }
    });
    rec.timed(CheckId::SampleLabels, |r| match wit.model.infer_rows(&z) {
        Ok(labels) => {
            let bad = labels.iter().zip(&wit.y).filter(|(a, b)| a != b).count();
            if bad > 0 {
                r.fail(CheckId::SampleLabels, format!("{bad} labels differ from f(z_i)"));
            }
        }
        Err(e) => r.fail(CheckId::SampleLabels, e.to_string()),
    });

    rec.timed(CheckId::DualityGap, |r| {
        let report = weighted_design(&z, &wit.y, &wit.pi, d, cc.scale)
            .map_err(|e| e.to_string())
            .and_then(|(zp, yp)| {
                let design = Design::new(&zp, &yp, d, cc.scale).map_err(|e| e.to_string())?;
                duality_gap(
                    &design,
                    &wit.w_hat.raw,
                    wit.intercept.raw,
                    &wit.v_hat.raw,
                    cc.alpha.raw,
                    cc.dual_scale,
                )
                .map_err(|e| e.to_string())
            });
        match report {
            Ok(g) => {
                if !g.within(cc.epsilon) {
                    r.fail(
                        CheckId::DualityGap,
                        format!("gap {} exceeds epsilon {}", g.gap_f64(), cc.epsilon),
                    );
                }
                if !g.feasible {
                    r.fail(
                        CheckId::DualFeasibility,
                        format!(
                            "||X^T v||_inf = {} exceeds alpha {}",
                            num_to_f64(&g.max_xtv),
                            cc.alpha
                        ),
                    );
                }
            }
            Err(e) => r.fail(CheckId::DualityGap, e),
        }
    });

    rec.timed(CheckId::TopK, |r| {
        if top_k(&wit.w_hat, cc.k) != stmt.e {
            r.fail(CheckId::TopK, "explanation is not the top-K of w_hat");
        }
    });

    rec.finish()
}

fn num_to_f64(q: &num_rational::BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::INFINITY)
}
