use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

use super::CryptoError;
use crate::numeric::{div_round, FixedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Exp,
    GaussInvCdf,
    RecipSqrt,
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableKind::Exp => "exp",
            TableKind::GaussInvCdf => "gauss_inv_cdf",
            TableKind::RecipSqrt => "recip_sqrt",
        })
    }
}

/// Public table parameters. Both parties regenerate identical tables from
/// these plus the run's scale and sample bit width.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TableConfig {
    /// Lower end of the exponential domain `[exp_min, 0]`, in whole units.
    pub exp_min: i64,
    /// Exponential grid points including both ends.
    pub exp_entries: usize,
    /// Grid spacing of the reciprocal square root table; also its first key.
    pub recip_sqrt_step: FixedPoint,
    pub recip_sqrt_entries: usize,
    /// Inverse-CDF outputs are clamped to `[-gauss_clamp, gauss_clamp]`.
    pub gauss_clamp: FixedPoint,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            exp_min: -20,
            exp_entries: 200_001,
            recip_sqrt_step: FixedPoint::new(20, 10_000),
            recip_sqrt_entries: 200_000,
            gauss_clamp: FixedPoint::new(40_000, 10_000),
        }
    }
}

/// A function sampled on the integer grid `lo + i * step`, `i < entries.len()`,
/// evaluated by nearest grid point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    pub kind: TableKind,
    pub key_scale: i64,
    pub value_scale: i64,
    pub lo: i64,
    pub step: i64,
    /// Out-of-domain keys snap to the nearest end instead of failing.
    pub clamp: bool,
    pub entries: Vec<i64>,
}

impl LookupTable {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.step * (self.entries.len() as i64 - 1)
    }

    /// Nearest-grid-point entry for a raw key at `key_scale`.
    pub fn lookup(&self, key: i64) -> Result<i64, CryptoError> {
        let idx = div_round(key as i128 - self.lo as i128, self.step as i128);
        let last = self.entries.len() as i128 - 1;
        let idx = if (0..=last).contains(&idx) {
            idx
        } else if self.clamp {
            idx.clamp(0, last)
        } else {
            return Err(CryptoError::OutOfDomain {
                table: self.kind,
                key,
            });
        };
        Ok(self.entries[idx as usize])
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kind.to_string().as_bytes());
        for v in [
            self.key_scale,
            self.value_scale,
            self.lo,
            self.step,
            self.clamp as i64,
        ] {
            h.update(v.to_be_bytes());
        }
        for e in &self.entries {
            h.update(e.to_be_bytes());
        }
        hex::encode(h.finalize())
    }

    /// `exp(x)` on `[exp_min, 0]`; keys below clamp to `exp(exp_min)`, which
    /// quantizes to 0 at the usual scales.
    pub fn exponential(scale: i64, exp_min: i64, entries: usize) -> Result<Self, CryptoError> {
        if exp_min >= 0 || entries < 2 {
            return Err(CryptoError::TableConfig(
                "exp table needs exp_min < 0 and at least 2 entries".into(),
            ));
        }
        let span = -exp_min as i128 * scale as i128;
        let gaps = entries as i128 - 1;
        if span % gaps != 0 {
            return Err(CryptoError::TableConfig(format!(
                "exp domain of {span} raw units does not split into {gaps} equal steps"
            )));
        }
        let step = (span / gaps) as i64;
        let lo = exp_min * scale;
        let entries = (0..entries as i64)
            .map(|i| {
                let key = (lo + i * step) as f64 / scale as f64;
                FixedPoint::quantize(key.exp(), scale).map(|v| v.raw)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            kind: TableKind::Exp,
            key_scale: scale,
            value_scale: scale,
            lo,
            step,
            clamp: true,
            entries,
        })
    }

    /// Entry `u` holds `clamp(Phi^-1((u + 1/2) / 2^bits))` for every `b`-bit `u`.
    pub fn gauss_inv_cdf(scale: i64, bits: u32, clamp_at: FixedPoint) -> Result<Self, CryptoError> {
        if bits == 0 || bits > 20 {
            return Err(CryptoError::TableConfig(format!(
                "inverse-CDF table supports 1..=20 bits, got {bits}"
            )));
        }
        let normal = Normal::standard();
        let n = 1u64 << bits;
        let bound = clamp_at.to_f64();
        let entries = (0..n)
            .map(|u| {
                let p = (u as f64 + 0.5) / n as f64;
                let z = normal.inverse_cdf(p).clamp(-bound, bound);
                FixedPoint::quantize(z, scale).map(|v| v.raw)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            kind: TableKind::GaussInvCdf,
            key_scale: 1,
            value_scale: scale,
            lo: 0,
            step: 1,
            clamp: false,
            entries,
        })
    }

    /// `1/sqrt(x)` on `step, 2 step, ..., entries * step`; clamps at both ends.
    pub fn recip_sqrt(scale: i64, step: FixedPoint, entries: usize) -> Result<Self, CryptoError> {
        let step = step.rescale(scale)?.raw;
        if step <= 0 || entries == 0 {
            return Err(CryptoError::TableConfig(
                "recip_sqrt table needs a positive step and entries".into(),
            ));
        }
        let values = (1..=entries as i64)
            .map(|i| {
                let key = (i * step) as f64 / scale as f64;
                FixedPoint::quantize(1.0 / key.sqrt(), scale).map(|v| v.raw)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            kind: TableKind::RecipSqrt,
            key_scale: scale,
            value_scale: scale,
            lo: step,
            step,
            clamp: true,
            entries: values,
        })
    }
}

/// Evaluate a table at a fixed-point key.
pub fn lookup_eval(table: &LookupTable, key: FixedPoint) -> Result<FixedPoint, CryptoError> {
    if key.scale != table.key_scale {
        return Err(CryptoError::KeyScale {
            table: table.kind,
            expected: table.key_scale,
            found: key.scale,
        });
    }
    Ok(FixedPoint::new(table.lookup(key.raw)?, table.value_scale))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDigests {
    pub exp: String,
    pub gauss_inv_cdf: String,
    pub recip_sqrt: String,
}

/// The three tables a run needs.
#[derive(Debug)]
pub struct Tables {
    pub exp: LookupTable,
    pub gauss: LookupTable,
    pub recip_sqrt: LookupTable,
    digests: OnceLock<TableDigests>,
}

type CacheKey = (TableConfig, i64, u32);

impl Tables {
    pub fn build(cfg: &TableConfig, scale: i64, bits: u32) -> Result<Self, CryptoError> {
        Ok(Self {
            exp: LookupTable::exponential(scale, cfg.exp_min, cfg.exp_entries)?,
            gauss: LookupTable::gauss_inv_cdf(scale, bits, cfg.gauss_clamp)?,
            recip_sqrt: LookupTable::recip_sqrt(scale, cfg.recip_sqrt_step, cfg.recip_sqrt_entries)?,
            digests: OnceLock::new(),
        })
    }

    /// Process-wide memoized [`Tables::build`].
    pub fn shared(cfg: &TableConfig, scale: i64, bits: u32) -> Result<Arc<Self>, CryptoError> {
        static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Tables>>>> = OnceLock::new();
        let key = (cfg.clone(), scale, bits);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().expect("table cache poisoned").get(&key) {
            return Ok(t.clone());
        }
        let built = Arc::new(Self::build(cfg, scale, bits)?);
        cache
            .lock()
            .expect("table cache poisoned")
            .insert(key, built.clone());
        Ok(built)
    }

    /// Computed once per instance.
    pub fn digests(&self) -> TableDigests {
        self.digests
            .get_or_init(|| TableDigests {
                exp: self.exp.digest(),
                gauss_inv_cdf: self.gauss.digest(),
                recip_sqrt: self.recip_sqrt.digest(),
            })
            .clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::DEFAULT_SCALE;

    const S: i64 = DEFAULT_SCALE;

    fn tables() -> Arc<Tables> {
        Tables::shared(&TableConfig::default(), S, 16).unwrap()
    }

    #[test]
    fn default_exp_table_shape() {
        let t = &tables().exp;
        assert_eq!(t.size(), 200_001);
        assert_eq!(t.step, 1);
        assert_eq!(t.lo, -200_000);
        assert_eq!(t.hi(), 0);
    }

    #[test]
    fn exp_lookup_examples() {
        let t = &tables().exp;
        assert_eq!(lookup_eval(t, FixedPoint::zero(S)).unwrap(), FixedPoint::one(S));
        let v = lookup_eval(t, FixedPoint::new(-S, S)).unwrap();
        assert!((v.to_f64() - (-1f64).exp()).abs() <= 1.0 / S as f64);
        assert_eq!(v.raw, 3679);
        assert_eq!(t.lookup(-10 * 200_000).unwrap(), 0);
        assert!(lookup_eval(t, FixedPoint::new(0, 100)).is_err());
    }

    #[test]
    fn recip_sqrt_examples() {
        let t = &tables().recip_sqrt;
        assert_eq!(lookup_eval(t, FixedPoint::one(S)).unwrap(), FixedPoint::one(S));
        assert_eq!(t.lookup(4 * S).unwrap(), S / 2);
        // below the grid clamps to the first entry
        assert_eq!(t.lookup(0).unwrap(), t.entries[0]);
        assert_eq!(t.lookup(i64::MAX / 2).unwrap(), *t.entries.last().unwrap());
    }

    #[test]
    fn gauss_table_is_monotone_and_clamped() {
        let t = &tables().gauss;
        assert_eq!(t.size(), 1 << 16);
        assert!(t.entries.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.entries.iter().all(|&v| v.abs() <= 4 * S));
        assert!(matches!(t.lookup(1 << 16), Err(CryptoError::OutOfDomain { .. })));
        assert!(t.lookup(-1).is_err());
    }

    #[test]
    fn exp_table_is_monotone() {
        let t = &tables().exp;
        assert!(t.entries.windows(2).all(|w| w[0] <= w[1]));
        let t = &tables().recip_sqrt;
        assert!(t.entries.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn bad_configs() {
        assert!(LookupTable::exponential(S, 0, 10).is_err());
        assert!(LookupTable::exponential(S, -20, 7).is_err());
        assert!(LookupTable::gauss_inv_cdf(S, 24, FixedPoint::one(S)).is_err());
        assert!(LookupTable::recip_sqrt(S, FixedPoint::zero(S), 10).is_err());
    }

    #[test]
    fn digests_are_stable_and_distinct() {
        let a = Tables::build(&TableConfig::default(), S, 16).unwrap().digests();
        let b = tables().digests();
        assert_eq!(a, b);
        let c = Tables::build(&TableConfig::default(), S, 12).unwrap().digests();
        assert_ne!(a.gauss_inv_cdf, c.gauss_inv_cdf);
        assert_eq!(a.exp, c.exp);
    }
}
