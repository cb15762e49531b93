//! Two-phase protocol. Offline, the owner commits to the weights and to its
//! share of the sampling randomness. Online, each query gets a label, an
//! explanation and a certificate that a verifier replays.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crypto::{Blinding, Commitment, PrfKey, TableDigests, Tables};
use crate::encoding::{canonical_bytes, from_bytes};
use crate::lime::{explain, Explanation, LimeConfig, LimeError, Timings};
use crate::model::{Label, ModelError, ModelWeights};
use crate::numeric::{FieldElement, FixedVec};
use crate::relation::{
    check_relation, commit_model, commit_randomness, CheckId, CheckReport, Failure, Statement, Witness,
};

pub const PROTOCOL_VERSION: u32 = 1;

const CHALLENGE_TAG: &[u8] = b"expproof/challenge/v1";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Lime(#[from] LimeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("input has {got} features, model expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("input scale {got} differs from configured {expected}")]
    InputScale { expected: i64, got: i64 },
    #[error("prover self-check failed: {0:?}")]
    SelfCheck(Vec<Failure>),
    #[error("encoding: {0}")]
    Encoding(#[from] serde_json::Error),
}

/// What the owner publishes once, before any query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicBundle {
    pub version: u32,
    pub cc: LimeConfig,
    pub com_w: Commitment,
    pub com_r: Commitment,
    /// Shape of the committed model, e.g. `mlp:14,16,16,2`.
    pub architecture: String,
    pub tables: TableDigests,
}

/// The owner's secrets and commitments. Immutable after [`setup`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverState {
    pub model: ModelWeights,
    pub r_p: FieldElement,
    pub rho_w: Blinding,
    pub rho_r: Blinding,
    pub com_w: Commitment,
    pub com_r: Commitment,
    pub cc: LimeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendTag {
    Replay,
}

/// Self-contained proof of one answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    pub backend: BackendTag,
    pub statement: Statement,
    pub witness: Witness,
}

impl Certificate {
    pub fn to_bytes(&self) -> Result<Vec<u8>, ProtocolError> {
        Ok(canonical_bytes(self)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        Ok(from_bytes(bytes)?)
    }
}

/// Where a succinct proof system would plug in. Any backend must accept
/// and reject exactly as [`check_relation`] does.
pub trait ProofBackend {
    fn tag(&self) -> BackendTag;
    fn prove(&self, stmt: &Statement, wit: &Witness) -> Result<Vec<u8>, ProtocolError>;
    fn verify(&self, stmt: &Statement, proof: &[u8]) -> CheckReport;
}

/// Proof bytes are the canonical witness; verification re-runs the checker.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReplayBackend;

impl ProofBackend for ReplayBackend {
    fn tag(&self) -> BackendTag {
        BackendTag::Replay
    }

    fn prove(&self, _stmt: &Statement, wit: &Witness) -> Result<Vec<u8>, ProtocolError> {
        Ok(canonical_bytes(wit)?)
    }

    fn verify(&self, stmt: &Statement, proof: &[u8]) -> CheckReport {
        match from_bytes::<Witness>(proof) {
            Ok(wit) => check_relation(stmt, &wit),
            Err(e) => CheckReport::single(CheckId::Structure, format!("witness encoding: {e}")),
        }
    }
}

/// Commit to `model` and fresh randomness drawn from `entropy`.
pub fn setup(
    model: ModelWeights,
    cc: LimeConfig,
    entropy: [u8; 32],
) -> Result<(ProverState, PublicBundle), ProtocolError> {
    model.validate()?;
    cc.validate(model.input_dim)?;
    if model.scale != cc.scale {
        return Err(LimeError::Config(format!(
            "model scale {} differs from configured {}",
            model.scale, cc.scale
        ))
        .into());
    }
    let tables = Tables::shared(&cc.tables, cc.scale, cc.bits).map_err(LimeError::from)?;
    let mut rng = ChaCha20Rng::from_seed(entropy);
    let r_p = FieldElement::random(&mut rng);
    let rho_w = Blinding::random(&mut rng);
    let rho_r = Blinding::random(&mut rng);
    let com_w = commit_model(&model, &rho_w);
    let com_r = commit_randomness(&r_p, &rho_r);
    let bundle = PublicBundle {
        version: PROTOCOL_VERSION,
        cc: cc.clone(),
        com_w,
        com_r,
        architecture: model.architecture().to_string(),
        tables: tables.digests(),
    };
    let state = ProverState {
        model,
        r_p,
        rho_w,
        rho_r,
        com_w,
        com_r,
        cc,
    };
    Ok((state, bundle))
}

/// One answered query.
#[derive(Debug, Clone)]
pub struct ProveOutput {
    pub o: Label,
    pub e: Explanation,
    pub certificate: Certificate,
    pub timings: Timings,
    /// Time spent in the prover's own relation check.
    pub self_check_seconds: f64,
}

impl ProverState {
    /// Run the explanation and assemble the statement and witness without
    /// checking them.
    pub fn assemble(
        &self,
        x: &FixedVec,
        r_v: &FieldElement,
    ) -> Result<(Statement, Witness, Timings), ProtocolError> {
        if x.len() != self.model.input_dim {
            return Err(ProtocolError::InputDim {
                expected: self.model.input_dim,
                got: x.len(),
            });
        }
        if x.scale != self.cc.scale {
            return Err(ProtocolError::InputScale {
                expected: self.cc.scale,
                got: x.scale,
            });
        }
        let key = PrfKey::derive(&self.r_p, r_v);
        let out = explain(&x.raw, &self.model, &self.cc, &key)?;
        let stmt = Statement {
            cc: self.cc.clone(),
            x: x.clone(),
            o: out.label,
            e: out.explanation,
            r_v: r_v.clone(),
            com_w: self.com_w,
            com_r: self.com_r,
        };
        let wit = Witness {
            model: self.model.clone(),
            r_p: self.r_p.clone(),
            rho_w: self.rho_w.clone(),
            rho_r: self.rho_r.clone(),
            y: out.neighborhood.y,
            h: out.hashes,
            limbs: out.limbs,
            pi: out.neighborhood.pi,
            w_hat: out.lasso.w_hat,
            intercept: out.lasso.intercept,
            v_hat: out.lasso.v_hat,
            x_border: out.x_border,
        };
        Ok((stmt, wit, out.timings))
    }

    /// Answer a query. The certificate is checked before it is returned.
    pub fn prove(&self, x: &FixedVec, r_v: &FieldElement) -> Result<ProveOutput, ProtocolError> {
        let (stmt, wit, timings) = self.assemble(x, r_v)?;
        let clock = Instant::now();
        let report = check_relation(&stmt, &wit);
        let self_check_seconds = clock.elapsed().as_secs_f64();
        if !report.accepted {
            return Err(ProtocolError::SelfCheck(report.failures));
        }
        Ok(ProveOutput {
            o: stmt.o,
            e: stmt.e.clone(),
            certificate: Certificate {
                version: PROTOCOL_VERSION,
                backend: BackendTag::Replay,
                statement: stmt,
                witness: wit,
            },
            timings,
            self_check_seconds,
        })
    }
}

/// Check that `cert` answers exactly this query under this bundle, then
/// run the backend's verification.
pub fn verify(
    bundle: &PublicBundle,
    x: &FixedVec,
    r_v: &FieldElement,
    o: Label,
    e: &Explanation,
    cert: &Certificate,
) -> CheckReport {
    let bind = |msg: &str| CheckReport::single(CheckId::StatementBinding, msg);
    if bundle.version != PROTOCOL_VERSION || cert.version != PROTOCOL_VERSION {
        return bind("protocol version mismatch");
    }
    let stmt = &cert.statement;
    let checks = [
        (stmt.cc == bundle.cc, "configuration differs from the bundle"),
        (stmt.com_w == bundle.com_w, "com_W differs from the bundle"),
        (stmt.com_r == bundle.com_r, "com_r differs from the bundle"),
        (stmt.x == *x, "certificate is for a different input"),
        (stmt.r_v == *r_v, "certificate is for a different challenge"),
        (stmt.o == o, "certificate is for a different label"),
        (stmt.e == *e, "certificate is for a different explanation"),
    ];
    if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
        return bind(msg);
    }
    match Tables::shared(&bundle.cc.tables, bundle.cc.scale, bundle.cc.bits) {
        Ok(t) if t.digests() == bundle.tables => {}
        Ok(_) => return bind("lookup tables differ from the bundle digests"),
        Err(e) => return bind(&format!("tables: {e}")),
    }
    let backend = match cert.backend {
        BackendTag::Replay => ReplayBackend,
    };
    match backend.prove(stmt, &cert.witness) {
        Ok(proof) => backend.verify(stmt, &proof),
        Err(e) => CheckReport::single(CheckId::Structure, e.to_string()),
    }
}

/// Non-interactive challenge `H(bundle || x)`. Weaker than a fresh verifier
/// challenge: the prover can grind over inputs.
pub fn challenge_from_query(bundle: &PublicBundle, x: &FixedVec) -> Result<FieldElement, ProtocolError> {
    let mut h = Sha256::new();
    h.update(CHALLENGE_TAG);
    let b = canonical_bytes(bundle)?;
    h.update((b.len() as u64).to_be_bytes());
    h.update(&b);
    h.update(canonical_bytes(x)?);
    let out: [u8; 32] = h.finalize().into();
    let mut lo = [0u8; 16];
    lo.copy_from_slice(&out[..16]);
    Ok(FieldElement::from_u128(u128::from_be_bytes(lo)))
}

/// A verifier's fresh challenge.
pub fn random_challenge<R: rand::RngCore + ?Sized>(rng: &mut R) -> FieldElement {
    FieldElement::random(rng)
}
