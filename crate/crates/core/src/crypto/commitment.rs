use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// Domain separation tag for commitment preimages.
pub const COMMIT_TAG: &[u8] = b"expproof/commit/v1";

/// SHA-256 digest of `tag || len(m) || m || len(rho) || rho`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Commitment(pub [u8; 32]);

impl Commitment {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({})", self.to_hex())
    }
}

impl Serialize for Commitment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Commitment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("commitment must be 32 bytes"))?;
        Ok(Commitment(arr))
    }
}

/// Blinding randomness for a commitment, hex encoded on the wire.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Blinding(pub Vec<u8>);

impl Blinding {
    pub const MIN_LEN: usize = 32;

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = vec![0u8; Self::MIN_LEN];
        rng.fill_bytes(&mut bytes);
        Blinding(bytes)
    }
}

impl fmt::Debug for Blinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Blinding({} bytes)", self.0.len())
    }
}

impl Serialize for Blinding {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for Blinding {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(&s).map(Blinding).map_err(serde::de::Error::custom)
    }
}

pub fn commit(message: &[u8], rho: &Blinding) -> Commitment {
    let mut h = Sha256::new();
    h.update(COMMIT_TAG);
    h.update((message.len() as u64).to_be_bytes());
    h.update(message);
    h.update((rho.0.len() as u64).to_be_bytes());
    h.update(&rho.0);
    Commitment(h.finalize().into())
}

/// True iff `(message, rho)` opens `c`.
pub fn verify_opening(c: &Commitment, message: &[u8], rho: &Blinding) -> bool {
    commit(message, rho) == *c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_and_binding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = Blinding::random(&mut rng);
        let c = commit(b"weights", &rho);
        assert_eq!(c, commit(b"weights", &rho));
        assert!(verify_opening(&c, b"weights", &rho));
        assert!(!verify_opening(&c, b"weightz", &rho));
        let mut other = rho.clone();
        other.0[0] ^= 1;
        assert!(!verify_opening(&c, b"weights", &other));
    }

    #[test]
    fn fresh_blinding_changes_digest() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..1000 {
            let rho = Blinding::random(&mut rng);
            assert!(seen.insert(commit(b"m", &rho)));
        }
    }

    #[test]
    fn length_prefix_separates_message_and_blinding() {
        // moving a byte across the message/blinding boundary must change the digest
        let a = commit(b"ab", &Blinding(b"c".to_vec()));
        let b = commit(b"a", &Blinding(b"bc".to_vec()));
        assert_ne!(a, b);
    }

    #[test]
    fn serde_hex() {
        let c = commit(b"x", &Blinding(vec![7; 32]));
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json.len(), 66);
        assert_eq!(serde_json::from_str::<Commitment>(&json).unwrap(), c);
        assert!(serde_json::from_str::<Commitment>("\"abcd\"").is_err());
    }
}
