//! Scaled-integer arithmetic and the prime field used for protocol randomness.
//!
//! Every quantity that crosses the prover/verifier boundary is a [`FixedPoint`]
//! (an `i64` numerator over a positive scale) or a [`FieldElement`]. Products are
//! accumulated in `i128` and rescaled once, rounding half away from zero, so both
//! sides reproduce identical raw integers.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default fixed-point scale: four decimal places.
pub const DEFAULT_SCALE: i64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("value {value} does not fit at scale {scale}")]
    Overflow { value: String, scale: i64 },
    #[error("scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: i64, right: i64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("scale must be positive, got {0}")]
    BadScale(i64),
    #[error("malformed field element: {0}")]
    BadFieldElement(String),
}

/// Divide rounding half away from zero. `den` must be non-zero.
pub fn div_round(num: i128, den: i128) -> i128 {
    debug_assert!(den != 0);
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den {
        q + num.signum()
    } else {
        q
    }
}

/// Narrow an `i128` to `i64`, reporting overflow at `scale`.
pub fn narrow(v: i128, scale: i64) -> Result<i64, NumericError> {
    i64::try_from(v).map_err(|_| NumericError::Overflow {
        value: v.to_string(),
        scale,
    })
}

/// `round(a * b / scale)` on raw numerators.
pub fn mul_raw(a: i64, b: i64, scale: i64) -> Result<i64, NumericError> {
    narrow(div_round(a as i128 * b as i128, scale as i128), scale)
}

/// Dot product of raw numerators sharing `scale`, rescaled once at the end.
pub fn dot_raw(a: &[i64], b: &[i64], scale: i64) -> Result<i64, NumericError> {
    if a.len() != b.len() {
        return Err(NumericError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut acc: i128 = 0;
    for (&x, &y) in a.iter().zip(b) {
        acc = acc
            .checked_add(x as i128 * y as i128)
            .ok_or_else(|| NumericError::Overflow {
                value: "dot product accumulator".into(),
                scale,
            })?;
    }
    narrow(div_round(acc, scale as i128), scale)
}

/// Floor of the square root of a non-negative integer.
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    // correct the float estimate in both directions
    while x.checked_mul(x).is_none_or(|sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

fn check_scale(scale: i64) -> Result<(), NumericError> {
    if scale > 0 {
        Ok(())
    } else {
        Err(NumericError::BadScale(scale))
    }
}

/// A real number `raw / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPoint {
    pub raw: i64,
    pub scale: i64,
}

impl FixedPoint {
    pub const fn new(raw: i64, scale: i64) -> Self {
        Self { raw, scale }
    }

    pub const fn zero(scale: i64) -> Self {
        Self { raw: 0, scale }
    }

    pub const fn one(scale: i64) -> Self {
        Self { raw: scale, scale }
    }

    /// Quantize a real, rounding half away from zero.
    pub fn quantize(x: f64, scale: i64) -> Result<Self, NumericError> {
        check_scale(scale)?;
        let scaled = (x * scale as f64).round();
        if !scaled.is_finite() || scaled.abs() >= i64::MAX as f64 {
            return Err(NumericError::Overflow {
                value: x.to_string(),
                scale,
            });
        }
        Ok(Self {
            raw: scaled as i64,
            scale,
        })
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 / self.scale as f64
    }

    fn same_scale(self, other: Self) -> Result<(), NumericError> {
        if self.scale == other.scale {
            Ok(())
        } else {
            Err(NumericError::ScaleMismatch {
                left: self.scale,
                right: other.scale,
            })
        }
    }

    pub fn checked_add(self, other: Self) -> Result<Self, NumericError> {
        self.same_scale(other)?;
        let raw = self
            .raw
            .checked_add(other.raw)
            .ok_or_else(|| NumericError::Overflow {
                value: format!("{} + {}", self.raw, other.raw),
                scale: self.scale,
            })?;
        Ok(Self::new(raw, self.scale))
    }

    pub fn checked_sub(self, other: Self) -> Result<Self, NumericError> {
        self.checked_add(Self::new(-other.raw, other.scale))
    }

    /// Product rescaled to the common scale.
    pub fn checked_mul(self, other: Self) -> Result<Self, NumericError> {
        self.same_scale(other)?;
        Ok(Self::new(mul_raw(self.raw, other.raw, self.scale)?, self.scale))
    }

    /// Re-express at another scale, rounding half away from zero.
    pub fn rescale(self, scale: i64) -> Result<Self, NumericError> {
        check_scale(scale)?;
        let raw = div_round(self.raw as i128 * scale as i128, self.scale as i128);
        Ok(Self::new(narrow(raw, scale)?, scale))
    }

    pub fn abs(self) -> Self {
        Self::new(self.raw.abs(), self.scale)
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Dot product of two fixed-point vectors at a shared scale.
pub fn fp_dot(a: &[FixedPoint], b: &[FixedPoint]) -> Result<FixedPoint, NumericError> {
    if a.len() != b.len() {
        return Err(NumericError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let Some(first) = a.first() else {
        return Ok(FixedPoint::zero(DEFAULT_SCALE));
    };
    let scale = first.scale;
    for v in a.iter().chain(b) {
        first.same_scale(*v)?;
    }
    let ar: Vec<i64> = a.iter().map(|v| v.raw).collect();
    let br: Vec<i64> = b.iter().map(|v| v.raw).collect();
    Ok(FixedPoint::new(dot_raw(&ar, &br, scale)?, scale))
}

/// A vector of raw numerators sharing one scale. Serialized as
/// `{"scale": s, "raw": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedVec {
    pub scale: i64,
    pub raw: Vec<i64>,
}

impl FixedVec {
    pub fn new(raw: Vec<i64>, scale: i64) -> Self {
        Self { scale, raw }
    }

    pub fn quantize(xs: &[f64], scale: i64) -> Result<Self, NumericError> {
        let raw = xs
            .iter()
            .map(|&x| FixedPoint::quantize(x, scale).map(|v| v.raw))
            .collect::<Result<_, _>>()?;
        Ok(Self { scale, raw })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<FixedPoint> {
        self.raw.get(i).map(|&r| FixedPoint::new(r, self.scale))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.raw.iter().map(|&r| r as f64 / self.scale as f64).collect()
    }
}

/// Bytes in the canonical big-endian encoding of a field element.
pub const FIELD_BYTES: usize = 17;

/// The field modulus `2^130 - 5`.
pub fn field_modulus() -> &'static BigUint {
    static P: OnceLock<BigUint> = OnceLock::new();
    P.get_or_init(|| (BigUint::one() << 130u32) - BigUint::from(5u32))
}

/// An element of the prime field of order `2^130 - 5`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(BigUint);

impl FieldElement {
    pub fn new(value: BigUint) -> Self {
        Self(value % field_modulus())
    }

    pub fn zero() -> Self {
        Self(BigUint::zero())
    }

    pub fn from_u128(v: u128) -> Self {
        Self::new(BigUint::from(v))
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        Self::new(BigUint::from_bytes_be(&bytes))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Low 128 bits of the canonical representative.
    pub fn low_u128(&self) -> u128 {
        let digits = self.0.to_u64_digits();
        let lo = digits.first().copied().unwrap_or(0) as u128;
        let hi = digits.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.0 + &other.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.0 * &other.0)
    }

    pub fn to_bytes(&self) -> [u8; FIELD_BYTES] {
        let be = self.0.to_bytes_be();
        let mut out = [0u8; FIELD_BYTES];
        out[FIELD_BYTES - be.len()..].copy_from_slice(&be);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NumericError> {
        let v = BigUint::from_bytes_be(bytes);
        if &v >= field_modulus() {
            return Err(NumericError::BadFieldElement(
                "value not below the modulus".into(),
            ));
        }
        Ok(Self(v))
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.to_bytes()))
    }

    pub fn from_hex(s: &str) -> Result<Self, NumericError> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        if digits.len() != 2 * FIELD_BYTES {
            return Err(NumericError::BadFieldElement(format!(
                "expected {} hex digits, got {}",
                2 * FIELD_BYTES,
                digits.len()
            )));
        }
        let bytes = hex::decode(digits).map_err(|e| NumericError::BadFieldElement(e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(FixedPoint::quantize(0.0, 10_000).unwrap().raw, 0);
        assert_eq!(FixedPoint::quantize(1.0, 10_000).unwrap().raw, 10_000);
        // 0.00005 * 10^4 = 1/2 exactly, rounds away from zero
        assert_eq!(FixedPoint::quantize(0.00005, 10_000).unwrap().raw, 1);
        assert_eq!(FixedPoint::quantize(-0.00005, 10_000).unwrap().raw, -1);
    }

    #[test]
    fn quantize_overflow() {
        assert!(matches!(
            FixedPoint::quantize(1e300, 10_000),
            Err(NumericError::Overflow { .. })
        ));
        assert!(FixedPoint::quantize(f64::NAN, 10_000).is_err());
        assert!(matches!(
            FixedPoint::quantize(1.0, 0),
            Err(NumericError::BadScale(0))
        ));
    }

    #[test]
    fn div_round_is_half_away() {
        assert_eq!(div_round(5, 2), 3);
        assert_eq!(div_round(-5, 2), -3);
        assert_eq!(div_round(4, 3), 1);
        assert_eq!(div_round(-4, 3), -1);
        assert_eq!(div_round(5, -2), -3);
        assert_eq!(div_round(0, 7), 0);
    }

    #[test]
    fn dot_examples() {
        let s = 10_000;
        let q = |x: f64| FixedPoint::quantize(x, s).unwrap();
        assert_eq!(fp_dot(&[q(1.0)], &[q(1.0)]).unwrap(), q(1.0));
        let zeros = [q(0.0); 3];
        assert_eq!(fp_dot(&zeros, &[q(0.3), q(-2.0), q(7.5)]).unwrap(), q(0.0));
        // 0.5*0.3 + 0.5*0.7 = 0.5 exactly
        assert_eq!(fp_dot(&[q(0.5), q(0.5)], &[q(0.3), q(0.7)]).unwrap().raw, 5000);
    }

    #[test]
    fn dot_errors() {
        let a = [FixedPoint::new(1, 10)];
        let b = [FixedPoint::new(1, 10), FixedPoint::new(2, 10)];
        assert!(matches!(fp_dot(&a, &b), Err(NumericError::LengthMismatch { .. })));
        let c = [FixedPoint::new(1, 100)];
        assert!(matches!(fp_dot(&a, &c), Err(NumericError::ScaleMismatch { .. })));
        assert!(dot_raw(&[i64::MAX, i64::MAX], &[i64::MAX, i64::MAX], 1).is_err());
    }

    #[test]
    fn isqrt_exact() {
        for n in 0u128..2000 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
        assert_eq!(isqrt(u64::MAX as u128 * u64::MAX as u128), u64::MAX as u128);
    }

    #[test]
    fn field_hex_round_trip_and_reduction() {
        let p = field_modulus().clone();
        assert!(p.bits() == 130);
        assert_eq!(FieldElement::new(p.clone()), FieldElement::zero());
        let x = FieldElement::new(p - 1u32);
        assert_eq!(x.add(&FieldElement::from_u128(1)), FieldElement::zero());
        assert_eq!(FieldElement::from_hex(&x.to_hex()).unwrap(), x);
        assert!(FieldElement::from_hex("0x1234").is_err());
        let over = format!("0x{}", hex::encode(field_modulus().to_bytes_be()));
        assert!(FieldElement::from_hex(&over).is_err());
    }

    proptest! {
        #[test]
        fn quantize_error_within_half_ulp(x in -1.0e6f64..1.0e6) {
            let q = FixedPoint::quantize(x, DEFAULT_SCALE).unwrap();
            prop_assert!((q.to_f64() - x).abs() <= 0.5 / DEFAULT_SCALE as f64 + 1e-9);
        }

        #[test]
        fn quantize_is_additive_on_grid(a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000) {
            let s = DEFAULT_SCALE;
            let qa = FixedPoint::quantize(a as f64 / s as f64, s).unwrap();
            let qb = FixedPoint::quantize(b as f64 / s as f64, s).unwrap();
            let qs = FixedPoint::quantize((a + b) as f64 / s as f64, s).unwrap();
            prop_assert_eq!(qa.checked_add(qb).unwrap(), qs);
        }

        #[test]
        fn field_addition_assoc_comm(a in any::<[u8; 32]>(), b in any::<[u8; 32]>(), c in any::<[u8; 32]>()) {
            let f = |x: &[u8; 32]| FieldElement::new(BigUint::from_bytes_be(x));
            let (a, b, c) = (f(&a), f(&b), f(&c));
            prop_assert_eq!(a.add(&b), b.add(&a));
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            prop_assert!(a.add(&b).value() < field_modulus());
        }

        #[test]
        fn mul_matches_rational_rounding(a in -100_000_000i64..100_000_000, b in -100_000_000i64..100_000_000) {
            let s = DEFAULT_SCALE as i128;
            let exact = a as i128 * b as i128;
            let got = mul_raw(a, b, DEFAULT_SCALE).unwrap() as i128;
            // |got*s - exact| <= s/2, with ties going away from zero
            let diff = got * s - exact;
            prop_assert!(2 * diff.abs() <= s);
            if 2 * diff.abs() == s {
                prop_assert_eq!(diff.signum(), exact.signum());
            }
        }
    }
}
