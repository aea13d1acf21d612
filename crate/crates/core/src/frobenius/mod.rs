//! Frobenius series around the origin and its polynomial (truncated)
//! sector.
//!
//! With `R = xi^|l| exp(-xi^2/2) sum_j a_j xi^j` the coefficients obey the
//! three-term recurrence
//!
//! ```text
//! a_{j+2} = -alpha/((j+2)(j+1+theta)) a_{j+1} - (g - 2j)/((j+2)(j+1+theta)) a_j
//! theta = 2|l| + 1,  g = W - 2 - 2|l|,  a_0 = 1,  a_{-1} = 0.
//! ```
//!
//! The series stops at degree n when g = 2n and a_{n+1}(alpha) = 0. The
//! second condition is a degree n+1 polynomial in alpha whose roots are all
//! real, so each family (n, l) gives one eigenvalue W = 2n + 2|l| + 2 that
//! holds only at n+1 isolated values of alpha.

pub mod poly;

use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::model::ScaledModel;
use crate::precision::Precision;
pub use poly::{RationalPoly, SturmSequence};

/// Default number of significant digits for truncation roots.
pub const DEFAULT_ROOT_DIGITS: u32 = 40;

fn exact(x: f64) -> Rational {
    Rational::from_f64(x).expect("finite value")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceParams {
    pub l: f64,
    /// 2|l| + 1, exact.
    pub theta: Rational,
    /// W - 2 - 2|l|, exact in the binary value of the inputs.
    pub g: Rational,
}

impl RecurrenceParams {
    pub fn new(l: f64, w: f64) -> Result<Self> {
        if !l.is_finite() || !w.is_finite() {
            return Err(Error::invalid("l and W must be finite"));
        }
        let two_l = exact(l.abs()) * 2u32;
        let g = exact(w) - Rational::from(2) - &two_l;
        Ok(RecurrenceParams {
            l,
            theta: two_l + 1u32,
            g,
        })
    }

    /// Parameters with g = 2n frozen, i.e. W = 2n + 2|l| + 2.
    pub fn truncated(l: f64, n: u32) -> Result<Self> {
        if !l.is_finite() {
            return Err(Error::invalid("l must be finite"));
        }
        Ok(RecurrenceParams {
            l,
            theta: exact(l.abs()) * 2u32 + 1u32,
            g: Rational::from(2 * n),
        })
    }

    fn denominator(&self, k: u32) -> Rational {
        // (j+2)(j+1+theta) with k = j + 2
        Rational::from(&self.theta + (k - 1)) * k
    }
}

/// a_0 ..= a_{j_max} at the given alpha, in alpha's precision.
pub fn coefficients(params: &RecurrenceParams, alpha: &Float, j_max: usize) -> Vec<Float> {
    let bits = alpha.prec();
    let mut a = Vec::with_capacity(j_max + 1);
    a.push(Float::with_val(bits, 1));
    let mut prev = Float::new(bits); // a_{-1}
    for k in 1..=j_max as u32 {
        let den = params.denominator(k);
        let shift = Rational::from(&params.g - 2 * (i64::from(k) - 2));
        let cur = &a[k as usize - 1];
        let mut next = Float::with_val(bits, alpha * cur);
        next += Float::with_val(bits, &shift * &prev);
        next /= &den;
        next = -next;
        prev = cur.clone();
        a.push(next);
    }
    a
}

/// a_{n+1} as an exact polynomial in alpha with g = 2n.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPolynomial {
    pub n: u32,
    pub l: f64,
    pub poly: RationalPoly,
}

impl CoefficientPolynomial {
    pub fn degree(&self) -> usize {
        self.poly.degree().unwrap_or(0)
    }

    pub fn eval(&self, alpha: &Float) -> Float {
        self.poly.eval_float(alpha)
    }
}

/// Every a_j as a polynomial in alpha, j = 0..=j_max.
pub fn coefficient_polynomials(params: &RecurrenceParams, j_max: usize) -> Vec<RationalPoly> {
    let mut a = vec![RationalPoly::constant(Rational::from(1))];
    let mut prev = RationalPoly::zero();
    for k in 1..=j_max as u32 {
        let den = params.denominator(k);
        let shift = Rational::from(&params.g - 2 * (i64::from(k) - 2));
        let cur = &a[k as usize - 1];
        let num = cur.shift_up().add(&prev.scale(&shift));
        let next = num.scale(&(Rational::from(-1) / den));
        prev = cur.clone();
        a.push(next);
    }
    a
}

pub fn coefficient_polynomial(l: f64, n: u32) -> Result<CoefficientPolynomial> {
    if n == 0 {
        return Err(Error::invalid("truncation order n must be at least 1"));
    }
    let params = RecurrenceParams::truncated(l, n)?;
    let mut all = coefficient_polynomials(&params, n as usize + 1);
    Ok(CoefficientPolynomial {
        n,
        l,
        poly: all.pop().unwrap(),
    })
}

/// One truncation family: the fixed eigenvalue and the alpha values at
/// which it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSolution {
    pub n: u32,
    pub l: f64,
    /// 2n + 2|l| + 2.
    pub w_fixed: Float,
    /// n + 1 real roots of a_{n+1}(alpha), ascending.
    pub alpha_roots: Vec<Float>,
    pub precision: Precision,
}

impl TruncationSolution {
    pub fn w_fixed_f64(&self) -> f64 {
        self.w_fixed.to_f64()
    }

    pub fn roots_f64(&self) -> Vec<f64> {
        self.alpha_roots.iter().map(Float::to_f64).collect()
    }
}

pub fn truncation_solutions(l: f64, n: u32) -> Result<TruncationSolution> {
    truncation_solutions_with(l, n, Precision::digits(DEFAULT_ROOT_DIGITS)?)
}

pub fn truncation_solutions_with(l: f64, n: u32, prec: Precision) -> Result<TruncationSolution> {
    let cp = coefficient_polynomial(l, n)?;
    let bits = prec.bits();
    let (zero_mult, rest) = cp.poly.split_zero_root();
    if zero_mult > 1 {
        return Err(Error::RootFinding {
            lo: "0".into(),
            hi: "0".into(),
            detail: format!("alpha = 0 is a root of multiplicity {zero_mult}"),
        });
    }
    // a few decimal digits beyond the request so the reported digits are settled
    let rel_tol = Rational::from((1, rug::Integer::from(10).pow(prec.digits + 3)));
    let mut roots = poly::isolate_real_roots(&rest, &rel_tol, bits)?;
    if zero_mult == 1 {
        roots.push(Float::new(bits));
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    if roots.len() != n as usize + 1 {
        return Err(Error::RootFinding {
            lo: "-inf".into(),
            hi: "inf".into(),
            detail: format!("expected {} roots, found {}", n + 1, roots.len()),
        });
    }
    let w = exact(l.abs()) * 2u32 + (2 * n + 2);
    Ok(TruncationSolution {
        n,
        l,
        w_fixed: Float::with_val(bits, &w),
        alpha_roots: roots,
        precision: prec,
    })
}

/// Value and first two derivatives of a radial function.
pub trait RadialFunction {
    fn derivatives(&self, xi: &Float) -> [Float; 3];

    fn value(&self, xi: &Float) -> Float {
        let [r, _, _] = self.derivatives(xi);
        r
    }
}

/// `xi^|l| exp(-xi^2/2) sum_j a_j xi^j` for a finite coefficient list.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialWavefunction {
    pub l: f64,
    pub coeffs: Vec<Float>,
}

impl PolynomialWavefunction {
    pub fn from_coefficients(l: f64, coeffs: Vec<Float>) -> Self {
        PolynomialWavefunction { l, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval_f64(&self, xi: f64) -> f64 {
        let bits = self.coeffs.first().map_or(64, Float::prec);
        self.value(&Float::with_val(bits, xi)).to_f64()
    }

    /// Nodes of R on (0, inf): distinct positive real roots of the
    /// polynomial factor, counted by a Sturm sequence over the
    /// rationalized coefficients.
    pub fn node_count(&self) -> usize {
        let coeffs: Vec<Rational> = self
            .coeffs
            .iter()
            .map(|c| c.to_rational().unwrap_or_default())
            .collect();
        let p = RationalPoly::new(coeffs);
        let (_, p) = p.split_zero_root();
        if p.degree().unwrap_or(0) == 0 {
            return 0;
        }
        let s = SturmSequence::new(&p);
        s.count(&Rational::new(), &p.root_bound())
    }
}

impl RadialFunction for PolynomialWavefunction {
    fn derivatives(&self, xi: &Float) -> [Float; 3] {
        let bits = xi.prec().max(self.coeffs.first().map_or(53, Float::prec));
        let x = Float::with_val(bits, xi);
        // P, P', P'' by Horner
        let mut p = Float::new(bits);
        let mut dp = Float::new(bits);
        let mut ddp = Float::new(bits);
        for c in self.coeffs.iter().rev() {
            ddp = ddp * &x + Float::with_val(bits, &dp * 2u32);
            dp = dp * &x + &p;
            p = p * &x + c;
        }
        let s = self.l.abs();
        let (f, df, ddf) = if s == 0.0 {
            (p, dp, ddp)
        } else {
            let xs = Float::with_val(bits, x.clone().pow(s));
            let xs1 = Float::with_val(bits, &xs / &x);
            let xs2 = Float::with_val(bits, &xs1 / &x);
            let f = Float::with_val(bits, &xs * &p);
            let df = Float::with_val(bits, &xs1 * &p) * s + Float::with_val(bits, &xs * &dp);
            let ddf = Float::with_val(bits, &xs2 * &p) * (s * (s - 1.0))
                + Float::with_val(bits, &xs1 * &dp) * (2.0 * s)
                + Float::with_val(bits, &xs * &ddp);
            (f, df, ddf)
        };
        let x2 = Float::with_val(bits, x.square_ref());
        let e = Float::with_val(bits, -(x2.clone() / 2u32)).exp();
        // R = e F, R' = e (F' - xi F), R'' = e (F'' - 2 xi F' + (xi^2 - 1) F)
        let r = Float::with_val(bits, &e * &f);
        let xf = Float::with_val(bits, &x * &f);
        let r1 = Float::with_val(bits, &df - &xf) * &e;
        let mut inner = ddf;
        inner -= Float::with_val(bits, &x * &df) * 2u32;
        inner += (x2 - 1u32) * &f;
        let r2 = inner * &e;
        [r, r1, r2]
    }
}

/// Polynomial eigenfunction of family `sol` at its `root_index`-th root
/// (1-based, ascending alpha). Checks that a_{n+1} and a_{n+2} vanish.
pub fn polynomial_wavefunction(
    sol: &TruncationSolution,
    root_index: usize,
) -> Result<PolynomialWavefunction> {
    if root_index == 0 || root_index > sol.alpha_roots.len() {
        return Err(Error::invalid(format!(
            "root index {root_index} out of range 1..={}",
            sol.alpha_roots.len()
        )));
    }
    let alpha = &sol.alpha_roots[root_index - 1];
    let params = RecurrenceParams::truncated(sol.l, sol.n)?;
    let n = sol.n as usize;
    let mut a = coefficients(&params, alpha, n + 2);
    let scale = a
        .iter()
        .take(n + 1)
        .map(|c| c.clone().abs())
        .fold(Float::with_val(alpha.prec(), 1), |m, c| if c > m { c } else { m });
    let tol = sol.precision.ten_pow_neg(sol.precision.digits as i32 - 8) * scale;
    for j in [n + 1, n + 2] {
        if a[j].clone().abs() > tol {
            return Err(Error::CheckFailure(format!(
                "a_{j} = {} does not vanish at the truncation root",
                a[j].to_f64()
            )));
        }
    }
    a.truncate(n + 1);
    Ok(PolynomialWavefunction::from_coefficients(sol.l, a))
}

/// max over the grid of |R'' + R'/xi - l^2/xi^2 R + alpha/xi R - xi^2 R + W R|.
pub fn ode_residual<F: RadialFunction + ?Sized>(
    r: &F,
    w: &Float,
    model: &ScaledModel,
    grid: &[f64],
) -> Result<Float> {
    let bits = w.prec().max(model.alpha.prec());
    let mut worst = Float::new(bits);
    for &x in grid {
        if !(x > 0.0) {
            return Err(Error::invalid(format!("grid point {x} is not positive")));
        }
        let xi = Float::with_val(bits, x);
        let [f, f1, f2] = r.derivatives(&xi);
        let inv = Float::with_val(bits, 1u32 / &xi);
        let mut res = f2;
        res += Float::with_val(bits, &f1 * &inv);
        let pot = Float::with_val(bits, &model.alpha * &inv)
            - Float::with_val(bits, inv.square_ref()) * (model.l * model.l)
            - Float::with_val(bits, xi.square_ref())
            + w;
        res += pot * &f;
        let res = res.abs();
        if res > worst {
            worst = res;
        }
    }
    Ok(worst)
}

/// The uniform grid xi_k = k * xi_max / count, k = 1..=count.
pub fn uniform_grid(xi_max: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| xi_max * k as f64 / count as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prec() -> Precision {
        Precision::default()
    }

    fn sqrt(v: u32) -> Float {
        Float::with_val(prec().bits(), v).sqrt()
    }

    #[test]
    fn first_recurrence_steps() {
        let alpha = prec().float(0.7);
        let p = RecurrenceParams::new(0.0, 6.0).unwrap(); // g = 4
        let a = coefficients(&p, &alpha, 4);
        assert_eq!(a[0], 1);
        assert_eq!(a[1], -alpha.clone());
        let expect = Float::with_val(prec().bits(), alpha.square_ref()) / 4u32 - 1u32;
        assert!((a[2].clone() - expect).abs() < 1e-45);
    }

    #[test]
    fn odd_coefficients_vanish_at_zero_alpha() {
        let p = RecurrenceParams::truncated(0.0, 3).unwrap();
        let a = coefficients(&p, &prec().zero(), 12);
        for j in (1..=12).step_by(2) {
            assert!(a[j].is_zero(), "a_{j} = {}", a[j]);
        }
    }

    #[test]
    fn truncation_polynomial_degree_and_parity() {
        for n in 1..=8 {
            for l in [0.0, 1.0, 2.5] {
                let cp = coefficient_polynomial(l, n).unwrap();
                assert_eq!(cp.degree(), n as usize + 1);
                for (k, c) in cp.poly.coeffs().iter().enumerate() {
                    if (k + n as usize + 1) % 2 == 1 {
                        assert_eq!(*c, 0, "n={n} l={l} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn n1_polynomial_closed_form() {
        // a_2 = (alpha^2 - (4|l|+2)) / (2 theta (theta + 1))
        for l in [0.0, 1.0, 3.0] {
            let cp = coefficient_polynomial(l, 1).unwrap();
            let theta = Rational::from_f64(2.0 * l + 1.0).unwrap();
            let den = (&theta * (theta.clone() + 1u32)) * Rational::from(2u32);
            let c = cp.poly.coeffs();
            assert_eq!(c[2], Rational::from(1) / &den);
            assert_eq!(c[0], -Rational::from_f64(4.0 * l + 2.0).unwrap() / &den);
        }
    }

    #[test]
    fn n0_rejected() {
        assert!(coefficient_polynomial(0.0, 0).is_err());
        assert!(truncation_solutions(0.0, 0).is_err());
    }

    #[test]
    fn n2_l0_cubic() {
        let sol = truncation_solutions(0.0, 2).unwrap();
        assert_eq!(sol.w_fixed, 6);
        let r = &sol.alpha_roots;
        assert_eq!(r.len(), 3);
        assert!(r[1].is_zero());
        let two_sqrt3 = sqrt(12);
        assert!((r[2].clone() - &two_sqrt3).abs() < 1e-39);
        assert!((r[0].clone() + &two_sqrt3).abs() < 1e-39);
    }

    #[test]
    fn n1_roots() {
        let s = truncation_solutions(1.0, 1).unwrap();
        assert_eq!(s.w_fixed, 6);
        assert!((s.alpha_roots[0].clone() + sqrt(6)).abs() < 1e-39);
    }

    #[test]
    fn half_integer_l_has_rational_roots() {
        // 4|l| + 2 = 4 -> alpha = +-2 exactly
        let s = truncation_solutions(0.5, 1).unwrap();
        assert_eq!(s.alpha_roots[0], -2);
        assert_eq!(s.alpha_roots[1], 2);
    }

    #[test]
    fn wavefunction_n1() {
        let sol = truncation_solutions_with(0.0, 1, prec()).unwrap();
        let low = polynomial_wavefunction(&sol, 1).unwrap();
        assert_eq!(low.degree(), 1);
        assert!((low.coeffs[1].clone() - sqrt(2)).abs() < 1e-45);
        assert_eq!(low.node_count(), 0);
        let high = polynomial_wavefunction(&sol, 2).unwrap();
        assert!((high.coeffs[1].clone() + sqrt(2)).abs() < 1e-45);
        assert_eq!(high.node_count(), 1);
        // R(1) = (1 + sqrt2) e^{-1/2}
        let r1 = low.eval_f64(1.0);
        assert!((r1 - (1.0 + 2f64.sqrt()) * (-0.5f64).exp()).abs() < 1e-14);
        assert!(polynomial_wavefunction(&sol, 0).is_err());
        assert!(polynomial_wavefunction(&sol, 3).is_err());
    }

    #[test]
    fn wavefunction_at_zero_alpha_is_even() {
        let sol = truncation_solutions_with(0.0, 2, prec()).unwrap();
        let wf = polynomial_wavefunction(&sol, 2).unwrap();
        assert!(wf.coeffs[1].is_zero());
        assert!(!wf.coeffs[2].is_zero());
    }

    #[test]
    fn residual_is_exact_zero_for_truncation_states() {
        let grid = uniform_grid(6.0, 50);
        for (l, n) in [(0.0, 1), (1.0, 1), (0.0, 3), (2.0, 4), (0.5, 2)] {
            let sol = truncation_solutions_with(l, n, prec()).unwrap();
            for i in 1..=n as usize + 1 {
                let wf = polynomial_wavefunction(&sol, i).unwrap();
                let model = ScaledModel::with_alpha(l, sol.alpha_roots[i - 1].clone()).unwrap();
                let res = ode_residual(&wf, &sol.w_fixed, &model, &grid).unwrap();
                assert!(res < 1e-30, "l={l} n={n} i={i} res={res}");
            }
        }
    }

    #[test]
    fn residual_is_linear_in_w_perturbation() {
        let sol = truncation_solutions_with(0.0, 1, prec()).unwrap();
        let wf = polynomial_wavefunction(&sol, 1).unwrap();
        let model = ScaledModel::with_alpha(0.0, sol.alpha_roots[0].clone()).unwrap();
        let grid = [0.5, 1.0, 2.0];
        for &x in &grid {
            let w = sol.w_fixed.clone() + 1e-3;
            let res = ode_residual(&wf, &w, &model, &[x]).unwrap().to_f64();
            assert!((res - 1e-3 * wf.eval_f64(x).abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_of_bare_gaussian() {
        // R = e^{-xi^2/2}, l = 0, alpha = 1, W = 2: residual = R / xi
        let gauss = PolynomialWavefunction::from_coefficients(0.0, vec![prec().float(1.0)]);
        let model = ScaledModel::new(0.0, 1.0).unwrap();
        let grid = uniform_grid(6.0, 50);
        let res = ode_residual(&gauss, &prec().float(2.0), &model, &grid).unwrap().to_f64();
        let oracle = grid
            .iter()
            .map(|x| (-x * x / 2.0).exp() / x)
            .fold(0.0, f64::max);
        assert!((res - oracle).abs() < 1e-12 * oracle);
        assert!(res > 0.1);
        assert!(ode_residual(&gauss, &prec().float(2.0), &model, &[0.0]).is_err());
    }
}
