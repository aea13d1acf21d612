//! Dense univariate polynomials over exact rationals, Sturm sequences and
//! real-root isolation by bisection on Sturm counts.

use rug::{Float, Rational};

use crate::error::{Error, Result};

/// Coefficients stored lowest degree first, with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalPoly {
    coeffs: Vec<Rational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| *c == 0) {
            coeffs.pop();
        }
        RationalPoly { coeffs }
    }

    pub fn zero() -> Self {
        RationalPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn eval_float(&self, x: &Float) -> Float {
        let mut acc = Float::new(x.prec());
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| Rational::from(c * k as u32))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|c| Rational::from(c * s)).collect())
    }

    /// Multiplies by x.
    pub fn shift_up(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(Rational::new());
        c.extend(self.coeffs.iter().cloned());
        Self::new(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Rational::new(); n];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[k] += c;
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            out[k] += c;
        }
        Self::new(out)
    }

    /// Number of factors of x, and the cofactor.
    pub fn split_zero_root(&self) -> (usize, Self) {
        let k = self.coeffs.iter().take_while(|c| **c == 0).count();
        if self.is_zero() {
            return (0, Self::zero());
        }
        (k, Self::new(self.coeffs[k..].to_vec()))
    }

    /// Remainder of Euclidean division by a nonzero divisor.
    pub fn rem(&self, divisor: &Self) -> Self {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().unwrap();
        let mut r = self.coeffs.clone();
        while r.len() > dd {
            let top = r.len() - 1;
            let q = Rational::from(&r[top] / lead);
            if q != 0 {
                for (k, d) in divisor.coeffs.iter().enumerate() {
                    r[top - dd + k] -= Rational::from(&q * d);
                }
            }
            r.pop();
            while r.last().is_some_and(|c| *c == 0) {
                r.pop();
            }
        }
        Self::new(r)
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// Power of two above the Cauchy bound 1 + max |c_k / c_lead|, so
    /// bisection midpoints stay dyadic.
    pub fn root_bound(&self) -> Rational {
        let lead = self.leading().expect("bound of the zero polynomial").clone().abs();
        let mut m = Rational::new();
        for c in &self.coeffs[..self.coeffs.len() - 1] {
            let r = Rational::from(c / &lead).abs();
            if r > m {
                m = r;
            }
        }
        let cauchy = m + 1u32;
        let mut b = Rational::from(1);
        while b <= cauchy {
            b *= 2u32;
        }
        b
    }
}

/// Sturm sequence p, p', -rem(p, p'), ... of a square-free polynomial.
#[derive(Debug, Clone)]
pub struct SturmSequence {
    seq: Vec<RationalPoly>,
}

impl SturmSequence {
    pub fn new(p: &RationalPoly) -> Self {
        let mut seq = vec![p.clone(), p.derivative()];
        loop {
            let k = seq.len();
            if seq[k - 1].is_zero() {
                seq.pop();
                break;
            }
            let r = seq[k - 2].rem(&seq[k - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(r.scale(&Rational::from(-1)));
        }
        SturmSequence { seq }
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn sign_changes(&self, x: &Rational) -> usize {
        let mut last = 0i32;
        let mut changes = 0;
        for p in &self.seq {
            let s = p.eval(x).cmp0() as i32;
            if s != 0 {
                if last != 0 && s != last {
                    changes += 1;
                }
                last = s;
            }
        }
        changes
    }

    /// Distinct real roots in the half-open interval (a, b].
    pub fn count(&self, a: &Rational, b: &Rational) -> usize {
        self.sign_changes(a) - self.sign_changes(b)
    }
}

fn rat_to_string(r: &Rational) -> String {
    format!("{:.6e}", r.to_f64())
}

/// All real roots of a square-free `p` with `p(0) != 0`, sorted ascending,
/// each refined until its bracket is narrower than `rel_tol * |root|`.
/// Returns the midpoints of the final brackets at `bits` precision.
pub fn isolate_real_roots(p: &RationalPoly, rel_tol: &Rational, bits: u32) -> Result<Vec<Float>> {
    let deg = match p.degree() {
        None => return Err(Error::invalid("cannot isolate roots of the zero polynomial")),
        Some(0) => return Ok(Vec::new()),
        Some(d) => d,
    };
    let sturm = SturmSequence::new(p);
    let bound = p.root_bound();
    let neg_bound = Rational::from(-&bound);
    let zero = Rational::new();
    let total = sturm.count(&neg_bound, &bound);
    if total != deg {
        return Err(Error::RootFinding {
            lo: rat_to_string(&neg_bound),
            hi: rat_to_string(&bound),
            detail: format!("found {total} distinct real roots, expected {deg}"),
        });
    }

    // depth-first so that brackets come out in ascending order
    let mut isolated = Vec::with_capacity(deg);
    let mut stack = vec![(zero.clone(), bound.clone()), (neg_bound, zero)];
    while let Some((lo, hi)) = stack.pop() {
        match sturm.count(&lo, &hi) {
            0 => {}
            1 => isolated.push((lo, hi)),
            _ => {
                let mid = Rational::from(&lo + &hi) / 2u32;
                stack.push((mid.clone(), hi));
                stack.push((lo, mid));
            }
        }
    }

    isolated
        .into_iter()
        .map(|(lo, hi)| refine(&sturm, lo, hi, rel_tol, bits))
        .collect()
}

fn refine(
    sturm: &SturmSequence,
    mut lo: Rational,
    mut hi: Rational,
    rel_tol: &Rational,
    bits: u32,
) -> Result<Float> {
    let p = &sturm.seq[0];
    if p.eval(&hi) == 0 {
        return Ok(Float::with_val(bits, &hi));
    }
    // the bracket never contains 0, so the relative width is well defined
    for _ in 0..10_000 {
        let width = Rational::from(&hi - &lo);
        let scale = if lo.clone().abs() < hi.clone().abs() {
            lo.clone().abs()
        } else {
            hi.clone().abs()
        };
        if width <= Rational::from(rel_tol * &scale) {
            let mid = Rational::from(&lo + &hi) / 2u32;
            return Ok(Float::with_val(bits, &mid));
        }
        let mid = Rational::from(&lo + &hi) / 2u32;
        if p.eval(&mid) == 0 {
            return Ok(Float::with_val(bits, &mid));
        }
        if sturm.count(&lo, &mid) == 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::RootFinding {
        lo: rat_to_string(&lo),
        hi: rat_to_string(&hi),
        detail: "bisection did not reach the requested width".into(),
    })
}
