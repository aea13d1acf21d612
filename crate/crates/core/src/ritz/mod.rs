//! Rayleigh-Ritz diagonalization over the non-orthogonal basis
//! `u_j(xi) = xi^(|l|+j) exp(-xi^2/2)`, j = 0..N-1, with the measure
//! `xi dxi`.
//!
//! Every matrix element reduces to the Gamma moment
//! `M(p) = int_0^inf xi^p exp(-xi^2) dxi = Gamma((p+1)/2) / 2`. Integrating
//! the kinetic term by parts gives, with s = 2|l| and m = i + j,
//!
//! ```text
//! S_ij = M(s+m+1)
//! H_ij = [(|l|+i)(|l|+j) + l^2] M(s+m-1) - (s+m) M(s+m+1) + 2 M(s+m+3) - alpha M(s+m)
//! ```
//!
//! The Gram matrix of this basis is a Hankel matrix of moments and loses
//! roughly one decimal digit per basis function, so everything here runs
//! at a configurable decimal precision (50 digits by default).

pub mod linalg;

use rug::float::Constant;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ScaledModel;
use crate::precision::Precision;
pub use linalg::Matrix;

pub const MAX_BASIS_SIZE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisSpec {
    pub l: f64,
    pub size: usize,
    pub precision: Precision,
}

impl BasisSpec {
    pub fn new(l: f64, size: usize, precision: Precision) -> Result<Self> {
        if !l.is_finite() {
            return Err(Error::invalid("l must be finite"));
        }
        if size == 0 || size > MAX_BASIS_SIZE {
            return Err(Error::invalid(format!(
                "basis size must be in 1..={MAX_BASIS_SIZE}, got {size}"
            )));
        }
        Ok(BasisSpec { l, size, precision })
    }

    fn two_abs_l(&self) -> f64 {
        2.0 * self.l.abs()
    }
}

/// M(p) = Gamma((p+1)/2)/2 for p > -1.
pub fn moment(p: f64, prec: Precision) -> Result<Float> {
    if !p.is_finite() || p <= -1.0 {
        return Err(Error::invalid(format!("moment M({p}) diverges (need p > -1)")));
    }
    let bits = prec.bits();
    if p.fract() == 0.0 && p < 1e6 {
        let k = p as u64;
        let mut m0 = Float::with_val(bits, Constant::Pi).sqrt() / 2u32; // M(0)
        let mut m1 = Float::with_val(bits, 1) / 2u32; // M(1)
        // walk the recurrence M(q) = (q-1)/2 M(q-2) up to p
        let mut q = 1;
        while q < k {
            q += 1;
            let next = Float::with_val(bits, &m0 * (q - 1)) / 2u32;
            m0 = m1;
            m1 = next;
        }
        return Ok(if k == 0 { m0 } else { m1 });
    }
    Ok(gamma_moment(Float::with_val(bits, p)))
}

fn gamma_moment(p: Float) -> Float {
    ((p + 1u32) / 2u32).gamma() / 2u32
}

/// M(s + o) for offsets o = -1 ..= max_offset, s = 2|l|. The entry for
/// p = s - 1 is absent when it would diverge (l = 0).
#[derive(Debug, Clone)]
pub struct MomentTable {
    shift: f64,
    values: Vec<Option<Float>>,
}

impl MomentTable {
    pub fn new(two_abs_l: f64, max_offset: usize, prec: Precision) -> Result<Self> {
        let bits = prec.bits();
        let mut values: Vec<Option<Float>> = Vec::with_capacity(max_offset + 2);
        for o in -1..=max_offset as i64 {
            let p = two_abs_l + o as f64;
            let idx = (o + 1) as usize;
            let v = if p <= -1.0 {
                None
            } else if idx >= 2 && values[idx - 2].is_some() {
                // M(p) = (p-1)/2 M(p-2)
                let prev = values[idx - 2].as_ref().unwrap();
                let coef = (Float::with_val(bits, two_abs_l) + (o - 1)) / 2u32;
                Some(coef * prev)
            } else if two_abs_l.fract() == 0.0 {
                Some(moment(p, prec)?)
            } else {
                Some(gamma_moment(Float::with_val(bits, two_abs_l) + o))
            };
            values.push(v);
        }
        Ok(MomentTable {
            shift: two_abs_l,
            values,
        })
    }

    /// M(2|l| + offset).
    pub fn get(&self, offset: i64) -> &Float {
        self.values[(offset + 1) as usize]
            .as_ref()
            .unwrap_or_else(|| panic!("divergent moment M({})", self.shift + offset as f64))
    }
}

fn moments_for(basis: &BasisSpec) -> Result<MomentTable> {
    MomentTable::new(basis.two_abs_l(), 2 * basis.size + 2, basis.precision)
}

/// S_ij = <u_i | u_j>.
pub fn overlap_matrix(basis: &BasisSpec) -> Result<Matrix> {
    let m = moments_for(basis)?;
    let bits = basis.precision.bits();
    Ok(Matrix::from_fn(basis.size, bits, |i, j| {
        m.get((i + j) as i64 + 1).clone()
    }))
}

/// X_ij = <u_i | 1/xi | u_j>, the alpha-derivative of -H.
pub fn inverse_xi_matrix(basis: &BasisSpec) -> Result<Matrix> {
    let m = moments_for(basis)?;
    let bits = basis.precision.bits();
    Ok(Matrix::from_fn(basis.size, bits, |i, j| {
        m.get((i + j) as i64).clone()
    }))
}

/// H_ij = <u_i | -(1/xi) d/dxi xi d/dxi + l^2/xi^2 - alpha/xi + xi^2 | u_j>.
pub fn hamiltonian_matrix(basis: &BasisSpec, alpha: &Float) -> Result<Matrix> {
    let m = moments_for(basis)?;
    let bits = basis.precision.bits();
    let a = basis.l.abs();
    let l2 = basis.l * basis.l;
    let alpha = Float::with_val(bits, alpha);
    Ok(Matrix::from_fn(basis.size, bits, |i, j| {
        let o = (i + j) as i64;
        let mut h = Float::new(bits);
        let kin = Float::with_val(bits, a + i as f64) * (a + j as f64) + l2;
        // zero coefficient at l = 0, i = j = 0 guards the divergent M(-1)
        if !kin.is_zero() {
            h += kin * m.get(o - 1);
        }
        h -= Float::with_val(bits, basis.two_abs_l() + o as f64) * m.get(o + 1);
        h += Float::with_val(bits, m.get(o + 3) * 2u32);
        h -= Float::with_val(bits, &alpha * m.get(o));
        h
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RitzResult {
    pub size: usize,
    /// Ascending.
    pub eigenvalues: Vec<Float>,
    /// Coefficient vectors, normalized so that c^T S c = 1.
    pub vectors: Vec<Vec<Float>>,
    /// ||H c - W S c|| / ((||H|| + |W| ||S||) ||c||) per pair.
    pub residual_norms: Vec<Float>,
    /// Decimal digits lost to the conditioning of S (estimate).
    pub lost_digits: f64,
    pub precision: Precision,
}

impl RitzResult {
    pub fn eigenvalues_f64(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(Float::to_f64).collect()
    }

    /// Absolute error scale of the eigenvalues at this precision.
    pub fn error_scale(&self) -> Float {
        let good = f64::from(self.precision.digits) - self.lost_digits - 5.0;
        Float::with_val(self.precision.bits(), 10).pow_ref_f64(-good.max(0.0))
    }
}

trait PowF64 {
    fn pow_ref_f64(self, e: f64) -> Float;
}

impl PowF64 for Float {
    fn pow_ref_f64(self, e: f64) -> Float {
        use rug::ops::Pow;
        let bits = self.prec();
        Float::with_val(bits, self.pow(Float::with_val(bits, e)))
    }
}

/// Default residual tolerance: half the working digits.
pub fn default_tolerance(prec: Precision) -> Float {
    prec.ten_pow_neg((prec.digits / 2) as i32)
}

/// Digits that must remain after conditioning losses.
const RESERVE_DIGITS: f64 = 15.0;

/// Solves H c = W S c through S = L L^T and a Jacobi diagonalization of
/// L^{-1} H L^{-T}.
pub fn solve_generalized(
    h: &Matrix,
    s: &Matrix,
    prec: Precision,
    tolerance: Option<&Float>,
) -> Result<RitzResult> {
    let n = h.dim();
    if s.dim() != n {
        return Err(Error::invalid("H and S must have the same dimension"));
    }
    let bits = prec.bits();
    let exhausted = |required: f64, detail: String| Error::PrecisionExhausted {
        digits: prec.digits,
        required_digits: required.ceil().max(f64::from(prec.digits) + 1.0) as u32,
        detail,
    };
    let l = linalg::cholesky(s).map_err(|pivot| {
        exhausted(
            f64::from(prec.digits) * 1.5,
            format!("Cholesky of the overlap matrix failed at pivot {pivot} of {n}"),
        )
    })?;
    let linv = linalg::lower_inverse(&l);
    let cond_l = Float::with_val(bits, l.frobenius_norm() * linv.frobenius_norm());
    let lost = 2.0 * cond_l.to_f64().log10();
    if f64::from(prec.digits) - lost < RESERVE_DIGITS {
        return Err(exhausted(
            lost + RESERVE_DIGITS + 5.0,
            format!("overlap matrix condition number ~1e{lost:.0} at N = {n}"),
        ));
    }

    let c = linalg::congruence_inverse(&l, h);
    let eig = linalg::jacobi_eigen(&c, 100)
        .ok_or_else(|| Error::NotConverged(format!("Jacobi sweeps exhausted at N = {n}")))?;

    let tol = tolerance.cloned().unwrap_or_else(|| default_tolerance(prec));
    let h_norm = h.frobenius_norm();
    let s_norm = s.frobenius_norm();
    let mut vectors = Vec::with_capacity(n);
    let mut residual_norms = Vec::with_capacity(n);
    for (w, y) in eig.values.iter().zip(&eig.vectors) {
        let mut cvec = linalg::back_substitute_transpose(&l, y);
        // deterministic sign: largest component positive
        let (mut big, mut idx) = (Float::new(bits), 0);
        for (k, x) in cvec.iter().enumerate() {
            let a = Float::with_val(bits, x.abs_ref());
            if a > big {
                big = a;
                idx = k;
            }
        }
        if cvec[idx].is_sign_negative() {
            for x in &mut cvec {
                *x = -x.clone();
            }
        }
        let hc = h.mul_vec(&cvec);
        let sc = s.mul_vec(&cvec);
        let r: Vec<Float> = hc
            .iter()
            .zip(&sc)
            .map(|(a, b)| Float::with_val(bits, a - Float::with_val(bits, b * w)))
            .collect();
        let denom = (h_norm.clone() + Float::with_val(bits, w.abs_ref()) * &s_norm) * linalg::norm(&cvec);
        let rel = linalg::norm(&r) / denom;
        if rel > tol {
            return Err(exhausted(
                f64::from(prec.digits) + 20.0,
                format!("relative residual {:.3e} above tolerance {:.3e}", rel.to_f64(), tol.to_f64()),
            ));
        }
        vectors.push(cvec);
        residual_norms.push(rel);
    }
    Ok(RitzResult {
        size: n,
        eigenvalues: eig.values,
        vectors,
        residual_norms,
        lost_digits: lost.max(0.0),
        precision: prec,
    })
}

/// Ritz spectrum for one basis size.
pub fn ritz_spectrum(model: &ScaledModel, size: usize, prec: Precision) -> Result<RitzResult> {
    let basis = BasisSpec::new(model.l, size, prec)?;
    let h = hamiltonian_matrix(&basis, &model.alpha)?;
    let s = overlap_matrix(&basis)?;
    solve_generalized(&h, &s, prec, None)
}

/// <1/xi> in eigenstate `level`, i.e. (c^T X c) / (c^T S c).
pub fn expectation_inverse_xi(result: &RitzResult, level: usize, basis: &BasisSpec) -> Result<Float> {
    if level >= result.size {
        return Err(Error::invalid(format!(
            "level {level} out of range for basis size {}",
            result.size
        )));
    }
    if basis.size != result.size {
        return Err(Error::invalid("basis size does not match the Ritz result"));
    }
    let c = &result.vectors[level];
    let x = inverse_xi_matrix(basis)?;
    let s = overlap_matrix(basis)?;
    Ok(x.quadratic_form(c) / s.quadratic_form(c))
}

/// Ritz results over a nested sequence of basis sizes.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub l: f64,
    pub alpha: Float,
    pub count: usize,
    pub results: Vec<RitzResult>,
}

impl ConvergenceStudy {
    /// (N, lowest min(N, count) eigenvalues) per basis size.
    pub fn rows(&self) -> Vec<(usize, Vec<Float>)> {
        self.results
            .iter()
            .map(|r| {
                let k = r.size.min(self.count);
                (r.size, r.eigenvalues[..k].to_vec())
            })
            .collect()
    }

    pub fn last(&self) -> &RitzResult {
        self.results.last().expect("non-empty study")
    }
}

/// Runs every basis size in `sizes` (ascending) and checks that each
/// tracked level is non-increasing in N, as nested variational bounds must be.
pub fn convergence_study(
    model: &ScaledModel,
    sizes: &[usize],
    count: usize,
    prec: Precision,
) -> Result<ConvergenceStudy> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("basis sizes must be non-empty and strictly ascending"));
    }
    let results = sizes
        .iter()
        .map(|&n| ritz_spectrum(model, n, prec))
        .collect::<Result<Vec<_>>>()?;
    check_monotone(&results, count)?;
    Ok(ConvergenceStudy {
        l: model.l,
        alpha: model.alpha.clone(),
        count,
        results,
    })
}

fn check_monotone(results: &[RitzResult], count: usize) -> Result<()> {
    for pair in results.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let slack = if a.error_scale() > b.error_scale() {
            a.error_scale()
        } else {
            b.error_scale()
        };
        for nu in 0..a.size.min(count) {
            let excess = Float::with_val(slack.prec(), &b.eigenvalues[nu] - &a.eigenvalues[nu]);
            let scale = Float::with_val(slack.prec(), a.eigenvalues[nu].abs_ref()).max(&Float::with_val(slack.prec(), 1));
            if excess > Float::with_val(slack.prec(), &slack * &scale) {
                return Err(Error::CheckFailure(format!(
                    "level {nu} rose from {} (N = {}) to {} (N = {}); precision fault",
                    a.eigenvalues[nu].to_f64(),
                    a.size,
                    b.eigenvalues[nu].to_f64(),
                    b.size
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    /// Largest change of any tracked level accepted as converged.
    pub tolerance: f64,
    pub max_size: usize,
    /// Consecutive basis sizes that must satisfy `tolerance`.
    pub stable_steps: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            tolerance: 1e-13,
            max_size: 40,
            stable_steps: 2,
        }
    }
}

/// Upper limit for the automatic precision increase of [`converged_spectrum`].
pub const MAX_ESCALATED_DIGITS: u32 = 400;

/// Grows the basis until the `count` lowest levels stop moving.
///
/// When a basis size needs more digits than `prec` provides, the working
/// precision is raised to the required amount (at most
/// [`MAX_ESCALATED_DIGITS`]); the returned result records the precision used.
pub fn converged_spectrum(
    model: &ScaledModel,
    count: usize,
    prec: Precision,
    opts: ConvergenceOptions,
) -> Result<RitzResult> {
    if count == 0 {
        return Err(Error::invalid("count must be positive"));
    }
    let mut prec = prec;
    let mut prev: Option<RitzResult> = None;
    let mut stable = 0;
    for size in (count + 1).max(2)..=opts.max_size {
        let cur = loop {
            match ritz_spectrum(model, size, prec) {
                Err(Error::PrecisionExhausted { required_digits, .. })
                    if required_digits <= MAX_ESCALATED_DIGITS && required_digits > prec.digits =>
                {
                    prec = Precision::digits(required_digits)?;
                }
                other => break other?,
            }
        };
        if let Some(p) = prev.take() {
            let pair = [p, cur];
            check_monotone(&pair, count)?;
            let [p, cur] = pair;
            let change = (0..count)
                .map(|k| Float::with_val(64, &p.eigenvalues[k] - &cur.eigenvalues[k]).abs().to_f64())
                .fold(0.0, f64::max);
            stable = if change < opts.tolerance { stable + 1 } else { 0 };
            if stable >= opts.stable_steps {
                return Ok(cur);
            }
            prev = Some(cur);
        } else {
            prev = Some(cur);
        }
    }
    Err(Error::NotConverged(format!(
        "{count} lowest levels at l = {}, alpha = {} not converged to {:e} by N = {}",
        model.l,
        model.alpha.to_f64(),
        opts.tolerance,
        opts.max_size
    )))
}
