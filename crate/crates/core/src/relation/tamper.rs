use super::{CheckId, Statement, Witness};
use crate::crypto::{commit, decompose, Blinding, Tables};
use crate::encoding::{canonical_bytes, from_bytes};
use crate::lime::neighborhood::{perturb, weighted_design};
use crate::model::{ModelKind, Node};
use crate::numeric::FieldElement;

/// One mutation of an honest pair. `expected` names the check that must
/// reject it; `None` marks a mutation that changes nothing observable.
#[derive(Debug, Clone)]
pub struct Tamper {
    pub id: &'static str,
    pub expected: Option<CheckId>,
    pub stmt: Statement,
    pub wit: Witness,
}

/// The weighted design the honest witness was fitted on.
fn weighted_rows(stmt: &Statement, wit: &Witness) -> Option<Vec<i64>> {
    let cc = &stmt.cc;
    let d = stmt.x.len();
    let tables = Tables::shared(&cc.tables, cc.scale, cc.bits).ok()?;
    let layout = cc.layout().ok()?;
    let samples: Vec<u32> = wit.h.iter().flat_map(|h| decompose(h, layout).0).collect();
    let center = wit.x_border.clone().unwrap_or_else(|| stmt.x.raw.clone());
    let used = cc.border_samples(d);
    let z = perturb(&center, &samples[used..cc.total_samples(d)], cc, &tables.gauss).ok()?;
    Some(weighted_design(&z, &wit.y, &wit.pi, d, cc.scale).ok()?.0)
}

fn bump(f: &FieldElement) -> FieldElement {
    f.add(&FieldElement::from_u128(1))
}

/// Mutations of an honest `(stmt, wit)`, at least one per check that can
/// fail on values.
pub fn enumerate_tampers(stmt: &Statement, wit: &Witness) -> Vec<Tamper> {
    let mut out = Vec::new();
    let mut push = |id, expected, stmt: Statement, wit: Witness| {
        out.push(Tamper {
            id,
            expected,
            stmt,
            wit,
        })
    };
    let cc = &stmt.cc;
    let d = stmt.x.len();

    {
        let mut w = wit.clone();
        match &mut w.model.kind {
            ModelKind::Mlp { layers } => layers[0].weights[0][0] += 1,
            ModelKind::Forest { trees } => match &mut trees[0].nodes[0] {
                Node::Split { threshold, .. } => *threshold += 1,
                Node::Leaf(l) => *l ^= 1,
            },
        }
        push("model_weight", Some(CheckId::CommitmentW), stmt.clone(), w);
    }
    {
        let mut w = wit.clone();
        w.rho_w.0[0] ^= 1;
        push("recommit_rho", Some(CheckId::CommitmentW), stmt.clone(), w);
    }
    {
        let mut s = stmt.clone();
        s.com_w = commit(b"another model", &wit.rho_w);
        push("mismatched_com_w", Some(CheckId::CommitmentW), s, wit.clone());
    }
    {
        let mut w = wit.clone();
        w.r_p = bump(&w.r_p);
        push("prover_randomness", Some(CheckId::CommitmentR), stmt.clone(), w);
    }
    {
        let mut s = stmt.clone();
        s.com_r = commit(&FieldElement::zero().to_bytes(), &Blinding(vec![0; 32]));
        push("mismatched_com_r", Some(CheckId::CommitmentR), s, wit.clone());
    }
    {
        let mut s = stmt.clone();
        s.o = s.o.flipped();
        push("output_label", Some(CheckId::OutputInference), s, wit.clone());
    }
    {
        let mut s = stmt.clone();
        s.r_v = bump(&s.r_v);
        push("verifier_randomness", Some(CheckId::PrfHash), s, wit.clone());
    }
    {
        let mut w = wit.clone();
        w.h[0] = bump(&w.h[0]);
        push("hash", Some(CheckId::PrfHash), stmt.clone(), w);
    }
    if let Ok(layout) = cc.layout() {
        // move one unit of limb j+1 into limb j: same digest, limb j >= 2^b
        let per = layout.limbs_per_digest();
        let pos = (0..per.saturating_sub(1)).find(|&j| wit.limbs[j + 1] > 0);
        if let (Some(j), true) = (pos, cc.bits < 32) {
            let mut w = wit.clone();
            w.limbs[j] += 1 << cc.bits;
            w.limbs[j + 1] -= 1;
            push("limb_range", Some(CheckId::SampleRange), stmt.clone(), w);
        }
    }
    {
        let mut w = wit.clone();
        w.limbs[0] ^= 1;
        push("limb_value", Some(CheckId::SampleDecomposition), stmt.clone(), w);
    }
    {
        let mut w = wit.clone();
        w.y[0] = w.y[0].flipped();
        push("label", Some(CheckId::SampleLabels), stmt.clone(), w);
    }
    {
        let mut w = wit.clone();
        w.pi[0] += 1;
        push("kernel_weight", Some(CheckId::KernelWeights), stmt.clone(), w);
    }
    if cc.border_lime {
        let mut w = wit.clone();
        if let Some(p) = w.x_border.as_mut() {
            p[0] += 1;
        }
        push("border_point", Some(CheckId::BorderPoint), stmt.clone(), w);
    }
    if let Some(zp) = weighted_rows(stmt, wit) {
        // largest |z'_ij| gives the smallest dual change that breaks |X^T v|_j <= alpha
        let (idx, zmax) = zp
            .iter()
            .enumerate()
            .max_by_key(|(_, v)| v.unsigned_abs())
            .map(|(i, v)| (i, *v))
            .unwrap_or((0, 0));
        if zmax != 0 {
            let row = idx / d;
            let delta = 2 * cc.alpha.raw as i128 * cc.dual_scale as i128 / zmax.unsigned_abs() as i128 + 1;
            let mut w = wit.clone();
            w.v_hat.raw[row] = w.v_hat.raw[row].saturating_add(delta as i64);
            push("infeasible_dual", Some(CheckId::DualFeasibility), stmt.clone(), w);

            let col = idx % d;
            let mut w = wit.clone();
            w.w_hat.raw[col] += 10 * cc.scale * zmax.signum();
            push("oversized_gap", Some(CheckId::DualityGap), stmt.clone(), w);
        }
    }
    {
        let mut w = wit.clone();
        w.intercept.raw += 10 * cc.scale;
        push("intercept", Some(CheckId::DualityGap), stmt.clone(), w);
    }
    if stmt.e.len() >= 2 {
        let mut s = stmt.clone();
        s.e.entries.swap(0, 1);
        push("topk_order", Some(CheckId::TopK), s, wit.clone());
    }
    {
        let mut s = stmt.clone();
        s.e.entries[0].value.raw += 1;
        push("topk_value", Some(CheckId::TopK), s, wit.clone());
    }
    {
        // swap the two largest coordinates when they differ
        let ranked = crate::lime::ranking(&wit.w_hat.raw);
        if d >= 2 {
            let (a, b) = (ranked[0], ranked[1]);
            if wit.w_hat.raw[a] != wit.w_hat.raw[b] {
                let mut w = wit.clone();
                w.w_hat.raw.swap(a, b);
                push("swap_w_hat", Some(CheckId::TopK), stmt.clone(), w);
            }
        }
    }
    {
        let mut w = wit.clone();
        w.y.pop();
        push("truncated_labels", Some(CheckId::Structure), stmt.clone(), w);
    }
    {
        let s: Statement = from_bytes(&canonical_bytes(stmt).expect("serialize")).expect("parse");
        let w: Witness = from_bytes(&canonical_bytes(wit).expect("serialize")).expect("parse");
        push("reserialize", None, s, w);
    }
    out
}
