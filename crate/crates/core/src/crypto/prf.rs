use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::numeric::FieldElement;

/// Name recorded in the configuration for the PRF below.
pub const PRF_ALGORITHM: &str = "sha256-trunc128";

const PRF_TAG: &[u8] = b"expproof/prf/v1";

/// PRF key `r_p + r_v`: neither party controls it alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrfKey(pub FieldElement);

impl PrfKey {
    pub fn derive(prover: &FieldElement, verifier: &FieldElement) -> Self {
        PrfKey(prover.add(verifier))
    }
}

/// `h_i`: SHA-256 over the tagged key and index, truncated to 128 bits.
pub fn prf_hash(key: &PrfKey, index: u64) -> FieldElement {
    let mut h = Sha256::new();
    h.update(PRF_TAG);
    h.update(key.0.to_bytes());
    h.update(index.to_be_bytes());
    let out: [u8; 32] = h.finalize().into();
    let mut lo = [0u8; 16];
    lo.copy_from_slice(&out[..16]);
    FieldElement::from_u128(u128::from_be_bytes(lo))
}

/// `h_0 .. h_{count-1}`.
pub fn prf_stream(key: &PrfKey, count: usize) -> Vec<FieldElement> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| prf_hash(key, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic() {
        let k = PrfKey(FieldElement::from_u128(12345));
        assert_eq!(prf_hash(&k, 7), prf_hash(&k, 7));
        assert_eq!(prf_stream(&k, 3)[2], prf_hash(&k, 2));
    }

    #[test]
    fn key_combines_both_parties() {
        let a = FieldElement::from_u128(5);
        let b = FieldElement::from_u128(9);
        let c = FieldElement::from_u128(10);
        assert_ne!(PrfKey::derive(&a, &b), PrfKey::derive(&a, &c));
        assert_ne!(PrfKey::derive(&a, &b), PrfKey::derive(&c, &b));
        assert_eq!(PrfKey::derive(&a, &b).0, FieldElement::from_u128(14));
    }

    #[test]
    fn adjacent_indices_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let k = PrfKey(FieldElement::random(&mut rng));
            assert_ne!(prf_hash(&k, 0), prf_hash(&k, 1));
        }
    }

    /// Each of the 128 output bits should be set about half the time.
    #[test]
    fn per_bit_bias_below_one_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = PrfKey(FieldElement::random(&mut rng));
        let n = 100_000u64;
        let mut counts = [0u64; 128];
        for h in prf_stream(&k, n as usize) {
            let v = h.low_u128();
            for (bit, c) in counts.iter_mut().enumerate() {
                *c += ((v >> bit) & 1) as u64;
            }
        }
        for (bit, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.5).abs() < 0.01, "bit {bit}: {freq}");
        }
        // chi-square on the bit totals with 128 degrees of freedom
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let e = n as f64 / 2.0;
                (c as f64 - e).powi(2) / e + ((n - c) as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < 180.0, "chi2 {chi2}");
    }
}
