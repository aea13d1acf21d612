//! Working-precision helpers shared by the high-precision modules.

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

pub const DEFAULT_DIGITS: u32 = 50;

/// Decimal working precision. Converted to a binary mantissa with a few
/// guard bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Precision {
    pub digits: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            digits: DEFAULT_DIGITS,
        }
    }
}

impl Precision {
    pub fn digits(digits: u32) -> Result<Self> {
        if !(10..=2000).contains(&digits) {
            return Err(Error::invalid(format!(
                "precision must be between 10 and 2000 digits, got {digits}"
            )));
        }
        Ok(Precision { digits })
    }

    pub fn bits(self) -> u32 {
        (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32 + 16
    }

    pub fn float(self, v: impl Into<f64>) -> Float {
        Float::with_val(self.bits(), v.into())
    }

    pub fn zero(self) -> Float {
        Float::new(self.bits())
    }

    /// 10^-k at this precision.
    pub fn ten_pow_neg(self, k: i32) -> Float {
        Float::with_val(self.bits(), 10).pow(-k)
    }

    /// Unit roundoff of the working precision.
    pub fn epsilon(self) -> Float {
        Float::with_val(self.bits(), 1) >> (self.bits() - 1)
    }
}

/// Formats `x` in plain positional notation rounded to `sig` significant
/// digits, e.g. `10.49997602`, `-1.180391283`, `4.000000000`.
pub fn format_sig(x: &Float, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let (neg, digits, exp) = x.to_sign_string_exp_round(10, Some(sig), Round::Nearest);
    let exp = exp.expect("finite nonzero value has an exponent");
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp) as usize));
        out.push_str(&digits);
    } else if exp as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', exp as usize - digits.len()));
    } else {
        let (int, frac) = digits.split_at(exp as usize);
        out.push_str(int);
        out.push('.');
        out.push_str(frac);
    }
    out
}

/// Scientific notation with `sig` significant digits, e.g. `-2.50e-7`.
pub fn format_sci(x: &Float, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sig = sig.max(1);
    let (neg, digits, exp) = x.to_sign_string_exp_round(10, Some(sig), Round::Nearest);
    let exp = exp.expect("finite nonzero value has an exponent") - 1;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&digits[..1]);
    if digits.len() > 1 {
        out.push('.');
        out.push_str(&digits[1..]);
    }
    out.push_str(&format!("e{exp}"));
    out
}

/// Parses exact constant tokens: `sqrt2`, `-sqrt(6)`, `3/2`, `1/2*sqrt3`,
/// `-1.25`, `0`. Square roots and rationals are evaluated at `prec`, so a
/// token never carries a double-precision truncation.
pub fn parse_exact(token: &str, prec: Precision) -> Result<Float> {
    let bits = prec.bits();
    let t: String = token.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.to_ascii_lowercase();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(&t)),
    };
    if body.is_empty() {
        return Err(Error::invalid(format!("empty constant token {token:?}")));
    }
    let (coef_part, sqrt_part) = match body.find("sqrt") {
        Some(pos) => {
            let coef = body[..pos].trim_end_matches('*');
            let coef = if coef.is_empty() { None } else { Some(coef) };
            (coef, Some(&body[pos + 4..]))
        }
        None => (Some(body), None),
    };
    let mut value = match coef_part {
        Some(c) => parse_rational(c, bits)
            .ok_or_else(|| Error::invalid(format!("cannot parse constant {token:?}")))?,
        None => Float::with_val(bits, 1),
    };
    if let Some(arg) = sqrt_part {
        let arg = arg.trim_start_matches('(').trim_end_matches(')');
        let radicand = parse_rational(arg, bits)
            .ok_or_else(|| Error::invalid(format!("cannot parse sqrt argument in {token:?}")))?;
        if radicand < 0 {
            return Err(Error::invalid(format!("negative radicand in {token:?}")));
        }
        value *= radicand.sqrt();
    }
    if neg {
        value = -value;
    }
    Ok(value)
}

fn parse_rational(s: &str, bits: u32) -> Option<Float> {
    if let Some((p, q)) = s.split_once('/') {
        let p = rug::Rational::parse(format!("{p}/{q}")).ok()?;
        let r = rug::Rational::from(p);
        return Some(Float::with_val(bits, &r));
    }
    // decimal literals are read as exact decimals, not via f64
    let r = Float::parse(s).ok()?;
    Some(Float::with_val(bits, r))
}
