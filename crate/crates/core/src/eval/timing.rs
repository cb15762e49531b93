use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::numeric::{FieldElement, FixedVec};
use crate::protocol::ProverState;
use crate::relation::check_relation;

/// Wall-clock seconds per phase for one prove + verify run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub sampling: f64,
    pub border: f64,
    pub neighborhood: f64,
    pub lasso: f64,
    pub top_k: f64,
    pub verify: f64,
    /// Measured around the whole run, so it bounds the sum of the phases.
    pub total: f64,
}

pub const TIMING_COLUMNS: [&str; 8] = [
    "run",
    "sampling",
    "border",
    "neighborhood",
    "lasso",
    "top_k",
    "verify",
    "total",
];

/// Prove and verify each input once, recording phase times.
pub fn timing_report(
    state: &ProverState,
    inputs: &[FixedVec],
    r_v: &FieldElement,
) -> Result<Vec<PhaseTimes>, EvalError> {
    inputs
        .iter()
        .map(|x| {
            let clock = Instant::now();
            let (stmt, wit, t) = state.assemble(x, r_v)?;
            let check = Instant::now();
            let report = check_relation(&stmt, &wit);
            let verify = check.elapsed().as_secs_f64();
            if !report.accepted {
                return Err(EvalError::Input(format!(
                    "certificate rejected: {:?}",
                    report.failures
                )));
            }
            Ok(PhaseTimes {
                sampling: t.sampling.as_secs_f64(),
                border: t.border.as_secs_f64(),
                neighborhood: t.neighborhood.as_secs_f64(),
                lasso: t.lasso.as_secs_f64(),
                top_k: t.top_k.as_secs_f64(),
                verify,
                total: clock.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

pub fn timing_csv(rows: &[PhaseTimes]) -> String {
    let mut out = TIMING_COLUMNS.join(",");
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            out,
            "{i},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.sampling, r.border, r.neighborhood, r.lasso, r.top_k, r.verify, r.total
        )
        .expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lime::LimeConfig;
    use crate::model::synthesize_model;
    use crate::numeric::DEFAULT_SCALE;
    use crate::protocol::setup;

    fn rows() -> Vec<PhaseTimes> {
        let model = synthesize_model(&"mlp:4,8,2".parse().unwrap(), 1, DEFAULT_SCALE).unwrap();
        let mut cc = LimeConfig::defaults(4);
        cc.n = 80;
        cc.border_lime = true;
        let (state, _) = setup(model, cc, [3; 32]).unwrap();
        let xs = vec![FixedVec::new(vec![0, 1_000, -1_000, 500], DEFAULT_SCALE); 3];
        timing_report(&state, &xs, &FieldElement::from_u128(5)).unwrap()
    }

    #[test]
    fn columns_present() {
        let csv = timing_csv(&rows());
        let header = csv.lines().next().unwrap();
        assert_eq!(header, TIMING_COLUMNS.join(","));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv
            .lines()
            .skip(1)
            .all(|l| l.split(',').count() == TIMING_COLUMNS.len()));
    }

    #[test]
    fn durations_non_negative() {
        for r in rows() {
            for v in [
                r.sampling,
                r.border,
                r.neighborhood,
                r.lasso,
                r.top_k,
                r.verify,
                r.total,
            ] {
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn phases_bounded_by_total() {
        for r in rows() {
            let sum = r.sampling + r.border + r.neighborhood + r.lasso + r.top_k + r.verify;
            assert!(sum <= r.total, "{sum} > {}", r.total);
        }
    }
}
