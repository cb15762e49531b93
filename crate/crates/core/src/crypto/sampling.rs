use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{CryptoError, LookupTable};
use crate::numeric::FieldElement;

/// How each digest is cut into `b`-bit limbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimbLayout {
    /// Sample bit width `b`.
    pub bits: u32,
    /// Usable digest width `W`.
    pub digest_bits: u32,
}

impl LimbLayout {
    pub fn new(bits: u32, digest_bits: u32) -> Result<Self, CryptoError> {
        if bits == 0 || bits > 32 || bits > digest_bits || digest_bits > 128 {
            return Err(CryptoError::Layout(format!(
                "need 1 <= b <= min(32, W) and W <= 128, got b={bits}, W={digest_bits}"
            )));
        }
        Ok(Self { bits, digest_bits })
    }

    /// `B = floor(W / b)`.
    pub fn limbs_per_digest(&self) -> usize {
        (self.digest_bits / self.bits) as usize
    }

    /// `N = ceil(count / B)`.
    pub fn digests_for(&self, count: usize) -> usize {
        count.div_ceil(self.limbs_per_digest())
    }

    pub fn midpoint(&self) -> u32 {
        1 << (self.bits - 1)
    }
}

/// Base-`2^b` digits of `h`, least significant first, plus the discarded
/// high remainder.
pub fn decompose(h: &FieldElement, layout: LimbLayout) -> (Vec<u32>, BigUint) {
    let b = layout.bits;
    let mask = (BigUint::from(1u32) << b) - 1u32;
    let mut v = h.value().clone();
    let mut limbs = Vec::with_capacity(layout.limbs_per_digest());
    for _ in 0..layout.limbs_per_digest() {
        let limb = &v & &mask;
        limbs.push(limb.to_u32_digits().first().copied().unwrap_or(0));
        v >>= b;
    }
    (limbs, v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompositionFault {
    /// Limb at this position (within the digest) is not below `2^b`.
    LimbRange(usize),
    /// The limbs do not recombine to the digest.
    Mismatch,
    /// The leftover high part is not below `2^b`.
    RemainderRange,
}

/// Check that `limbs` are a valid base-`2^b` decomposition of `h`:
/// every limb and the remainder in `[0, 2^b)` and
/// `sum limb_i 2^(b i) + rem 2^(B b) = h`.
pub fn check_decomposition(
    h: &FieldElement,
    limbs: &[u32],
    layout: LimbLayout,
) -> Result<(), DecompositionFault> {
    let b = layout.bits;
    let bound = 1u64 << b;
    if let Some(pos) = limbs.iter().position(|&l| l as u64 >= bound) {
        return Err(DecompositionFault::LimbRange(pos));
    }
    if limbs.len() != layout.limbs_per_digest() {
        return Err(DecompositionFault::Mismatch);
    }
    let mut acc = BigUint::zero();
    for &l in limbs.iter().rev() {
        acc <<= b;
        acc += l;
    }
    if &acc > h.value() {
        return Err(DecompositionFault::Mismatch);
    }
    let shift = b as usize * limbs.len();
    let diff = h.value() - &acc;
    let rem = &diff >> shift;
    if (&rem << shift) != diff {
        return Err(DecompositionFault::Mismatch);
    }
    if rem >= BigUint::from(bound) {
        return Err(DecompositionFault::RemainderRange);
    }
    Ok(())
}

/// First `count` limbs across the digests, in digest order.
pub fn uniform_samples(
    hashes: &[FieldElement],
    layout: LimbLayout,
    count: usize,
) -> Result<Vec<u32>, CryptoError> {
    let needed = layout.digests_for(count);
    if hashes.len() < needed {
        return Err(CryptoError::NotEnoughHashes {
            needed,
            got: hashes.len(),
            count,
        });
    }
    let mut out = Vec::with_capacity(needed * layout.limbs_per_digest());
    for h in &hashes[..needed] {
        out.extend(decompose(h, layout).0);
    }
    out.truncate(count);
    Ok(out)
}

/// Map uniform limbs through the inverse-CDF table.
pub fn gaussian_samples(uniform: &[u32], table: &LookupTable) -> Result<Vec<i64>, CryptoError> {
    uniform.iter().map(|&u| table.lookup(u as i64)).collect()
}
