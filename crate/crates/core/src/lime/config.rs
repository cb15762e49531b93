use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LimeError;
use crate::crypto::{LimbLayout, TableConfig, PRF_ALGORITHM};
use crate::numeric::{FixedPoint, DEFAULT_SCALE};

/// Scale of the dual vector. Finer than the primal scale because the
/// certificate's objective is quadratic in `v`.
pub const DEFAULT_DUAL_SCALE: i64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingType {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelType {
    Exponential,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BorderConfig {
    /// Number of search directions `m`.
    pub m: usize,
    /// Step length along each direction.
    pub delta: FixedPoint,
    /// Maximum steps per direction.
    pub t: usize,
    /// Grid steps the checker evaluates per direction; equals `t`.
    pub vector_length: usize,
    /// Grid spacing the checker uses; equals `delta`.
    pub step_size: FixedPoint,
}

impl BorderConfig {
    pub fn new(m: usize, delta: FixedPoint, t: usize) -> Self {
        Self {
            m,
            delta,
            t,
            vector_length: t,
            step_size: delta,
        }
    }
}

impl Default for BorderConfig {
    fn default() -> Self {
        Self::new(5, FixedPoint::new(500, DEFAULT_SCALE), 250)
    }
}

/// Every public parameter of one explanation run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LimeConfig {
    pub smpl_type: SamplingType,
    pub krnl_type: KernelType,
    pub border_lime: bool,
    pub sigma: FixedPoint,
    pub alpha: FixedPoint,
    pub epsilon: FixedPoint,
    pub n: usize,
    pub k: usize,
    /// Sample bit width `b`.
    pub bits: u32,
    /// Usable PRF output width `W`.
    pub digest_bits: u32,
    pub scale: i64,
    pub dual_scale: i64,
    pub half_edge: FixedPoint,
    pub gauss_std: FixedPoint,
    pub border: BorderConfig,
    pub max_sweeps: usize,
    pub prf: String,
    pub tables: TableConfig,
}

impl LimeConfig {
    /// Defaults for a `d`-feature input: n = 300, K = 5, sigma = 0.75 sqrt(d).
    pub fn defaults(d: usize) -> Self {
        let s = DEFAULT_SCALE;
        let sigma = FixedPoint::quantize(0.75 * (d as f64).sqrt(), s).expect("sigma fits the default scale");
        Self {
            smpl_type: SamplingType::Gaussian,
            krnl_type: KernelType::Exponential,
            border_lime: false,
            sigma,
            alpha: FixedPoint::new(100, s),
            epsilon: FixedPoint::new(10, s),
            n: 300,
            k: 5.min(d.max(1)),
            bits: 16,
            digest_bits: 128,
            scale: s,
            dual_scale: DEFAULT_DUAL_SCALE,
            half_edge: FixedPoint::new(2_000, s),
            gauss_std: FixedPoint::new(2_000, s),
            border: BorderConfig::default(),
            max_sweeps: 10_000,
            prf: PRF_ALGORITHM.to_string(),
            tables: TableConfig::default(),
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.smpl_type = variant.sampling;
        self.krnl_type = variant.kernel;
        self.border_lime = variant.border;
        self
    }

    pub fn variant(&self) -> Variant {
        Variant {
            sampling: self.smpl_type,
            kernel: self.krnl_type,
            border: self.border_lime,
        }
    }

    pub fn layout(&self) -> Result<LimbLayout, LimeError> {
        Ok(LimbLayout::new(self.bits, self.digest_bits)?)
    }

    /// Samples consumed by the border search.
    pub fn border_samples(&self, d: usize) -> usize {
        if self.border_lime {
            self.border.m * d
        } else {
            0
        }
    }

    /// Samples consumed by the whole run.
    pub fn total_samples(&self, d: usize) -> usize {
        self.border_samples(d) + self.n * d
    }

    pub fn validate(&self, d: usize) -> Result<(), LimeError> {
        let bad = |msg: String| Err(LimeError::Config(msg));
        if d == 0 {
            return bad("input dimension must be positive".into());
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.k == 0 || self.k > d {
            return bad(format!("K = {} must be in 1..={d}", self.k));
        }
        if self.scale <= 0 || self.dual_scale <= 0 {
            return bad("scales must be positive".into());
        }
        let fields = [
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("epsilon", self.epsilon),
            ("half_edge", self.half_edge),
            ("gauss_std", self.gauss_std),
            ("border.delta", self.border.delta),
            ("border.step_size", self.border.step_size),
        ];
        for (name, v) in fields {
            if v.scale != self.scale {
                return bad(format!("{name} has scale {}, expected {}", v.scale, self.scale));
            }
        }
        for (name, v) in &fields[..3] {
            if v.raw <= 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.half_edge.raw < 0 || self.gauss_std.raw < 0 {
            return bad("perturbation widths must be non-negative".into());
        }
        if self.border_lime {
            let b = &self.border;
            if b.m == 0 || b.t == 0 || b.delta.raw <= 0 {
                return bad("border search needs m >= 1, T >= 1, delta > 0".into());
            }
            if b.vector_length != b.t || b.step_size != b.delta {
                return bad("border grid must match T and delta".into());
            }
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be positive".into());
        }
        if self.prf != PRF_ALGORITHM {
            return bad(format!("unsupported PRF {:?}", self.prf));
        }
        self.layout()?;
        Ok(())
    }
}

/// One of the eight LIME variants: sampling x kernel x border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub sampling: SamplingType,
    pub kernel: KernelType,
    pub border: bool,
}

impl Variant {
    pub fn all() -> Vec<Variant> {
        let mut out = Vec::with_capacity(8);
        for border in [false, true] {
            for sampling in [SamplingType::Gaussian, SamplingType::Uniform] {
                for kernel in [KernelType::Exponential, KernelType::None] {
                    out.push(Variant {
                        sampling,
                        kernel,
                        border,
                    });
                }
            }
        }
        out
    }
}

/// Short names: `GE`, `UN`, `B-GE`, ...
impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.border {
            f.write_str("B-")?;
        }
        let s = match self.sampling {
            SamplingType::Gaussian => 'G',
            SamplingType::Uniform => 'U',
        };
        let k = match self.kernel {
            KernelType::Exponential => 'E',
            KernelType::None => 'N',
        };
        write!(f, "{s}{k}")
    }
}

impl FromStr for Variant {
    type Err = LimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        let (border, rest) = match upper.strip_prefix("B-") {
            Some(r) => (true, r),
            None => (false, upper.as_str()),
        };
        let mut chars = rest.chars();
        let sampling = match chars.next() {
            Some('G') => SamplingType::Gaussian,
            Some('U') => SamplingType::Uniform,
            _ => return Err(LimeError::Config(format!("bad variant {s:?}"))),
        };
        let kernel = match (chars.next(), chars.next()) {
            (Some('E'), None) => KernelType::Exponential,
            (Some('N'), None) => KernelType::None,
            _ => return Err(LimeError::Config(format!("bad variant {s:?}"))),
        };
        Ok(Variant {
            sampling,
            kernel,
            border,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = LimeConfig::defaults(14);
        cfg.validate(14).unwrap();
        // 0.75 * sqrt(14) = 2.80624...
        assert_eq!(cfg.sigma.raw, 28_062);
        assert_eq!(cfg.n, 300);
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.border.m, 5);
        assert_eq!(cfg.border.t, 250);
        assert_eq!(cfg.half_edge.to_f64(), 0.2);
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = 4;
        let ok = LimeConfig::defaults(d);
        let mut c = ok.clone();
        c.k = 5;
        assert!(c.validate(d).is_err());
        let mut c = ok.clone();
        c.epsilon.raw = 0;
        assert!(c.validate(d).is_err());
        let mut c = ok.clone();
        c.alpha.raw = -1;
        assert!(c.validate(d).is_err());
        let mut c = ok.clone();
        c.n = 0;
        assert!(c.validate(d).is_err());
        let mut c = ok.clone();
        c.sigma = FixedPoint::new(1, 100);
        assert!(c.validate(d).is_err());
        let mut c = ok.clone();
        c.border_lime = true;
        c.border.t = 0;
        assert!(c.validate(d).is_err());
        let mut c = ok;
        c.bits = 0;
        assert!(c.validate(d).is_err());
    }

    #[test]
    fn sample_budget() {
        let mut c = LimeConfig::defaults(3);
        assert_eq!(c.total_samples(3), 900);
        c.border_lime = true;
        assert_eq!(c.border_samples(3), 15);
        assert_eq!(c.total_samples(3), 915);
    }

    #[test]
    fn variant_names_round_trip() {
        let all = Variant::all();
        assert_eq!(all.len(), 8);
        for v in all {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("GX".parse::<Variant>().is_err());
        assert!("B-".parse::<Variant>().is_err());
        assert_eq!("b-un".parse::<Variant>().unwrap().to_string(), "B-UN");
    }
}
