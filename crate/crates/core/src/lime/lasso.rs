//! Weighted LASSO: a floating-point coordinate-descent solver, and the exact
//! integer/rational certificate (dual-feasible point plus duality gap) that
//! the relation re-checks.
//!
//! The objective for a fixed intercept `b` is
//! `p(w) = ||y' - b - X w||^2 / 2n + alpha ||w||_1` with dual
//! `d(v) = -(n/2) ||v||^2 + v^T (y' - b)` over `||X^T v||_inf <= alpha`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::neighborhood::weighted_design;
use crate::model::Label;
use crate::numeric::{FixedPoint, FixedVec, NumericError};

#[derive(Debug, Error)]
pub enum LassoError {
    #[error("solver stopped after {sweeps} sweeps with duality gap {gap}")]
    NotConverged { sweeps: usize, gap: f64 },
    #[error("certified gap {gap} still above epsilon after tightening the solver")]
    GapNotReached { gap: f64 },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("design has {rows} rows of width {d} but {len} values")]
    Shape { rows: usize, d: usize, len: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// A weighted design at a common scale, `x` row-major.
#[derive(Debug, Clone, Copy)]
pub struct Design<'a> {
    pub x: &'a [i64],
    pub y: &'a [i64],
    pub d: usize,
    pub scale: i64,
}

impl<'a> Design<'a> {
    pub fn new(x: &'a [i64], y: &'a [i64], d: usize, scale: i64) -> Result<Self, LassoError> {
        if d == 0 || x.len() != y.len() * d || y.is_empty() {
            return Err(LassoError::Shape {
                rows: y.len(),
                d,
                len: x.len(),
            });
        }
        Ok(Self { x, y, d, scale })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    fn row(&self, i: usize) -> &[i64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }
}

/// Floating-point fit from the coordinate-descent solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalFit {
    pub w: Vec<f64>,
    pub intercept: f64,
    pub gap: f64,
    pub sweeps: usize,
    pub converged: bool,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on centered columns, so the intercept
/// `mean(y) - mu^T w` is exact at every sweep. Stops once the duality gap
/// is at most `tol` or after `max_sweeps`.
pub fn coordinate_descent(
    x: &[f64],
    y: &[f64],
    d: usize,
    alpha: f64,
    tol: f64,
    max_sweeps: usize,
    warm: Option<&[f64]>,
) -> PrimalFit {
    let n = y.len();
    let nf = n as f64;
    let mut mu = vec![0.0; d];
    for row in x.chunks(d) {
        for (m, v) in mu.iter_mut().zip(row) {
            *m += v / nf;
        }
    }
    let ybar = y.iter().sum::<f64>() / nf;
    // column-major centered copy
    let mut cols = vec![0.0; n * d];
    for (i, row) in x.chunks(d).enumerate() {
        for j in 0..d {
            cols[j * n + i] = row[j] - mu[j];
        }
    }
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let col_sq: Vec<f64> = cols
        .chunks(n)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf)
        .collect();

    let mut w = match warm {
        Some(w0) if w0.len() == d => w0.to_vec(),
        _ => vec![0.0; d],
    };
    let mut r = yc.clone();
    for j in 0..d {
        if w[j] != 0.0 {
            for (ri, c) in r.iter_mut().zip(&cols[j * n..(j + 1) * n]) {
                *ri -= c * w[j];
            }
        }
    }

    let gap_of = |w: &[f64], r: &[f64]| -> f64 {
        let rr: f64 = r.iter().map(|v| v * v).sum();
        let primal = rr / (2.0 * nf) + alpha * w.iter().map(|v| v.abs()).sum::<f64>();
        let gmax = cols
            .chunks(n)
            .map(|c| c.iter().zip(r).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max);
        let s = if gmax > 0.0 {
            (1.0 / nf).min(alpha / gmax)
        } else {
            1.0 / nf
        };
        let ry: f64 = r.iter().zip(&yc).map(|(a, b)| a * b).sum();
        let dual = -nf / 2.0 * s * s * rr + s * ry;
        primal - dual
    };

    let mut gap = gap_of(&w, &r);
    let mut sweeps = 0;
    while gap > tol && sweeps < max_sweeps {
        for j in 0..d {
            if col_sq[j] == 0.0 {
                w[j] = 0.0;
                continue;
            }
            let c = &cols[j * n..(j + 1) * n];
            let rho = c.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / nf + col_sq[j] * w[j];
            let new = soft_threshold(rho, alpha) / col_sq[j];
            let delta = new - w[j];
            if delta != 0.0 {
                for (ri, cv) in r.iter_mut().zip(c) {
                    *ri -= cv * delta;
                }
                w[j] = new;
            }
        }
        sweeps += 1;
        gap = gap_of(&w, &r);
    }
    let intercept = ybar - mu.iter().zip(&w).map(|(m, v)| m * v).sum::<f64>();
    PrimalFit {
        w,
        intercept,
        gap,
        sweeps,
        converged: gap <= tol,
    }
}

/// Fit on `z` with labels `y` and kernel weights `pi` by solving the
/// unweighted problem on `(sqrt(pi) z, sqrt(pi) y)`.
pub fn solve_weighted_lasso(
    z: &[i64],
    y: &[Label],
    pi: &[i64],
    d: usize,
    alpha: FixedPoint,
    tol: f64,
    max_sweeps: usize,
) -> Result<PrimalFit, LassoError> {
    let scale = alpha.scale;
    let (zp, yp) = weighted_design(z, y, pi, d, scale).map_err(|e| match e {
        super::LimeError::Numeric(n) => LassoError::Numeric(n),
        _ => LassoError::Shape {
            rows: y.len(),
            d,
            len: z.len(),
        },
    })?;
    let design = Design::new(&zp, &yp, d, scale)?;
    Ok(solve_design(&design, alpha.to_f64(), tol, max_sweeps, None))
}

fn solve_design(design: &Design, alpha: f64, tol: f64, max_sweeps: usize, warm: Option<&[f64]>) -> PrimalFit {
    let s = design.scale as f64;
    let xf: Vec<f64> = design.x.iter().map(|&v| v as f64 / s).collect();
    let yf: Vec<f64> = design.y.iter().map(|&v| v as f64 / s).collect();
    coordinate_descent(&xf, &yf, design.d, alpha, tol, max_sweeps, warm)
}

/// `y'_i - b - x_i^T w` at `scale^2`.
pub fn residuals(design: &Design, w: &[i64], b: i64) -> Result<Vec<i128>, LassoError> {
    if w.len() != design.d {
        return Err(NumericError::LengthMismatch {
            left: w.len(),
            right: design.d,
        }
        .into());
    }
    let s = design.scale as i128;
    (0..design.n())
        .map(|i| {
            let mut acc = (design.y[i] as i128 - b as i128)
                .checked_mul(s)
                .ok_or(LassoError::Overflow("residual"))?;
            for (&xv, &wv) in design.row(i).iter().zip(w) {
                acc = acc
                    .checked_sub(xv as i128 * wv as i128)
                    .ok_or(LassoError::Overflow("residual"))?;
            }
            Ok(acc)
        })
        .collect()
}

fn xt_v(design: &Design, v: &[i128]) -> Result<Vec<i128>, LassoError> {
    let mut out = vec![0i128; design.d];
    for (i, &vi) in v.iter().enumerate() {
        for (o, &xv) in out.iter_mut().zip(design.row(i)) {
            let term = (xv as i128)
                .checked_mul(vi)
                .ok_or(LassoError::Overflow("X^T v"))?;
            *o = o.checked_add(term).ok_or(LassoError::Overflow("X^T v"))?;
        }
    }
    Ok(out)
}

/// `max_j |(X^T v)_j| <= alpha`, exactly, for `v` at `dual_scale`.
pub fn is_dual_feasible(design: &Design, v: &[i64], alpha: i64, dual_scale: i64) -> Result<bool, LassoError> {
    Ok(max_xtv(design, v)? <= alpha as i128 * dual_scale as i128)
}

/// `max_j |(X^T v)_j|` at `scale * dual_scale`.
pub fn max_xtv(design: &Design, v: &[i64]) -> Result<i128, LassoError> {
    if v.len() != design.n() {
        return Err(NumericError::LengthMismatch {
            left: v.len(),
            right: design.n(),
        }
        .into());
    }
    let wide: Vec<i128> = v.iter().map(|&x| x as i128).collect();
    Ok(xt_v(design, &wide)?.into_iter().map(i128::abs).max().unwrap_or(0))
}

/// Dual point `v = s (y' - b - X w)` at `dual_scale`, with
/// `s = min(1/n, alpha / ||X^T r||_inf)` pulled in by the rounding slack so the
/// quantized vector stays feasible. Of `v` and `-v` the one with the larger
/// dual objective is returned.
pub fn dual_feasible(
    design: &Design,
    w: &[i64],
    b: i64,
    alpha: i64,
    dual_scale: i64,
) -> Result<Vec<i64>, LassoError> {
    let n = design.n();
    let r = residuals(design, w, b)?;
    if r.iter().all(|&v| v == 0) {
        return Ok(vec![0; n]);
    }
    let s = design.scale as f64;
    let g = xt_v(design, &r)?;
    let gmax = g.iter().map(|v| v.abs()).max().unwrap_or(0) as f64 / (s * s * s);
    // |X^T e| for rounding error |e_i| <= 1/(2 dual_scale)
    let slack = (0..design.d)
        .map(|j| {
            (0..n)
                .map(|i| design.row(i)[j].unsigned_abs() as f64)
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        / s
        / (2.0 * dual_scale as f64);
    let alpha_f = alpha as f64 / s;
    let mut scale_factor = if gmax > 0.0 {
        (1.0 / n as f64).min((alpha_f - slack).max(0.0) / gmax)
    } else {
        1.0 / n as f64
    };
    let mut v = Vec::new();
    for _ in 0..64 {
        let c = scale_factor * dual_scale as f64 / (s * s);
        v = r.iter().map(|&ri| (ri as f64 * c).round() as i64).collect();
        if is_dual_feasible(design, &v, alpha, dual_scale)? {
            break;
        }
        scale_factor *= 0.5;
    }
    if !is_dual_feasible(design, &v, alpha, dual_scale)? {
        v = vec![0; n];
    }
    let neg: Vec<i64> = v.iter().map(|x| -x).collect();
    let pos_d = dual_value(design, &v, b, dual_scale)?;
    let neg_d = dual_value(design, &neg, b, dual_scale)?;
    Ok(if neg_d > pos_d { neg } else { v })
}

fn big(v: i128) -> BigInt {
    BigInt::from(v)
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn dual_value(design: &Design, v: &[i64], b: i64, dual_scale: i64) -> Result<BigRational, LassoError> {
    let mut v2 = 0i128;
    let mut vt = 0i128;
    for (&vi, &yi) in v.iter().zip(design.y) {
        let vi = vi as i128;
        v2 = vi
            .checked_mul(vi)
            .and_then(|t| v2.checked_add(t))
            .ok_or(LassoError::Overflow("||v||^2"))?;
        vt = (yi as i128 - b as i128)
            .checked_mul(vi)
            .and_then(|t| vt.checked_add(t))
            .ok_or(LassoError::Overflow("v^T y"))?;
    }
    let n = design.n() as i128;
    let sd = dual_scale as i128;
    let quad = ratio(-big(n) * big(v2), big(2) * big(sd) * big(sd));
    let lin = ratio(big(vt), big(sd) * big(design.scale as i128));
    Ok(quad + lin)
}

/// Exact primal and dual objectives with the feasibility bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub primal: BigRational,
    pub dual: BigRational,
    pub gap: BigRational,
    /// `max_j |(X^T v)_j|` as an exact real.
    pub max_xtv: BigRational,
    pub feasible: bool,
}

impl GapReport {
    pub fn gap_f64(&self) -> f64 {
        self.gap.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn within(&self, epsilon: FixedPoint) -> bool {
        self.gap <= ratio(big(epsilon.raw as i128), big(epsilon.scale as i128))
    }
}

/// Round an exact real to `scale`, half away from zero.
pub fn round_to(q: &BigRational, scale: i64) -> Result<FixedPoint, LassoError> {
    let num = q.numer() * BigInt::from(scale);
    let den = q.denom().clone();
    let twice: BigInt = num.abs() * 2 + &den;
    let mag: BigInt = twice / (den * 2);
    let signed = if num.is_negative() { -mag } else { mag };
    let raw = signed.to_i64().ok_or(LassoError::Overflow("rounding"))?;
    Ok(FixedPoint::new(raw, scale))
}

/// `p`, `d`, `p - d` and dual feasibility, computed exactly.
pub fn duality_gap(
    design: &Design,
    w: &[i64],
    b: i64,
    v: &[i64],
    alpha: i64,
    dual_scale: i64,
) -> Result<GapReport, LassoError> {
    let r = residuals(design, w, b)?;
    let mut r2 = 0i128;
    for &ri in &r {
        r2 = ri
            .checked_mul(ri)
            .and_then(|t| r2.checked_add(t))
            .ok_or(LassoError::Overflow("||r||^2"))?;
    }
    let l1: i128 = w.iter().map(|&x| (x as i128).abs()).sum();
    let n = design.n() as i128;
    let s = big(design.scale as i128);
    let s2 = &s * &s;
    let primal = ratio(big(r2), big(2 * n) * &s2 * &s2) + ratio(big(alpha as i128) * big(l1), s2);
    let dual = dual_value(design, v, b, dual_scale)?;
    let xtv = max_xtv(design, v)?;
    let feasible = xtv <= alpha as i128 * dual_scale as i128;
    let gap = &primal - &dual;
    Ok(GapReport {
        primal,
        dual,
        gap,
        max_xtv: ratio(big(xtv), s * big(dual_scale as i128)),
        feasible,
    })
}

/// A certified fit: `v_hat` is dual feasible and `p - d <= epsilon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoSolution {
    pub w_hat: FixedVec,
    pub intercept: FixedPoint,
    pub v_hat: FixedVec,
    /// Objectives and gap, rounded to the dual scale.
    pub primal: FixedPoint,
    pub dual: FixedPoint,
    pub gap: FixedPoint,
    pub sweeps: usize,
}

/// Solver settings for [`certify`].
#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub alpha: FixedPoint,
    pub epsilon: FixedPoint,
    pub dual_scale: i64,
    pub max_sweeps: usize,
    /// Initial solver tolerance as a fraction of epsilon.
    pub tol_fraction: f64,
}

const TIGHTEN_ROUNDS: usize = 6;

/// Solve, quantize, build the dual point and check the gap exactly. When
/// quantization pushes the gap above epsilon the solver tolerance shrinks
/// by 8x, up to a fixed number of rounds.
pub fn certify(design: &Design, opts: CertifyOptions) -> Result<LassoSolution, LassoError> {
    let scale = design.scale;
    let alpha_f = opts.alpha.to_f64();
    let mut tol = opts.epsilon.to_f64() * opts.tol_fraction;
    let mut warm: Option<Vec<f64>> = None;
    let mut sweeps = 0;
    let mut last_gap = f64::INFINITY;
    for _ in 0..TIGHTEN_ROUNDS {
        let fit = solve_design(design, alpha_f, tol, opts.max_sweeps, warm.as_deref());
        sweeps += fit.sweeps;
        let w: Vec<i64> = FixedVec::quantize(&fit.w, scale)?.raw;
        let b = FixedPoint::quantize(fit.intercept, scale)?.raw;
        let v = dual_feasible(design, &w, b, opts.alpha.raw, opts.dual_scale)?;
        let report = duality_gap(design, &w, b, &v, opts.alpha.raw, opts.dual_scale)?;
        last_gap = report.gap_f64();
        if report.feasible && report.within(opts.epsilon) {
            return Ok(LassoSolution {
                w_hat: FixedVec::new(w, scale),
                intercept: FixedPoint::new(b, scale),
                v_hat: FixedVec::new(v, opts.dual_scale),
                primal: round_to(&report.primal, opts.dual_scale)?,
                dual: round_to(&report.dual, opts.dual_scale)?,
                gap: round_to(&report.gap, opts.dual_scale)?,
                sweeps,
            });
        }
        if !fit.converged {
            return Err(LassoError::NotConverged {
                sweeps,
                gap: fit.gap.max(last_gap),
            });
        }
        warm = Some(fit.w);
        tol /= 8.0;
    }
    Err(LassoError::GapNotReached { gap: last_gap })
}

/// Exact primal objective of a fixed-point solution.
pub fn objective(design: &Design, w: &[i64], b: i64, alpha: i64) -> Result<BigRational, LassoError> {
    let zero = vec![0i64; design.n()];
    Ok(duality_gap(design, w, b, &zero, alpha, 1)?.primal)
}

impl LassoSolution {
    /// Non-zero coefficient count.
    pub fn support(&self) -> usize {
        self.w_hat.raw.iter().filter(|v| **v != 0).count()
    }
}
