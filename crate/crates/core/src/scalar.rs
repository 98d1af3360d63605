//! Scalar abstraction shared by observables, verification predicates and the
//! evaluation statistics.
//!
//! Everything numeric in the crate is generic over [`Scalar`]. Binary floats
//! (`f32`, `f64`) compare with an absolute tolerance; [`Exact`] rationals
//! compare exactly and make arithmetic-consistency questions (is a reported
//! mean attainable from integer data?) decidable without rounding noise.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedMul, Num, Signed, ToPrimitive};

/// Exact rational scalar.
pub type Exact = Ratio<i64>;

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// Absolute tolerance used by `==` verification predicates.
    fn eq_tolerance() -> Self;

    /// Parses a plain decimal literal: optional sign, digits, optional
    /// fraction. No exponents, no `inf`/`nan`.
    fn from_decimal(text: &str) -> Option<Self>;

    /// Canonical decimal rendering. `from_decimal(to_decimal(x)) == x` for
    /// every value produced by `from_decimal`.
    fn to_decimal(&self) -> String;

    fn to_f64(&self) -> f64;

    /// Nearest representable value. Rationals go through the shortest
    /// round-trip decimal form of the float.
    fn from_f64(value: f64) -> Option<Self>;

    fn sqrt(self) -> Self;

    fn from_i64(value: i64) -> Self;

    fn approx_eq(self, other: Self) -> bool {
        (self - other).abs() <= Self::eq_tolerance()
    }
}

/// Validates decimal syntax and returns (negative, integer digits, fraction digits).
fn split_decimal(text: &str) -> Option<(bool, &str, &str)> {
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || !digits(frac) {
        return None;
    }
    Some((negative, int, frac))
}

fn float_to_decimal(value: impl Display) -> String {
    // `Display` for floats is the shortest round-trip form and never uses an
    // exponent, so it is already a valid decimal literal.
    let s = value.to_string();
    if s == "-0" {
        "0".to_owned()
    } else {
        s
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            fn eq_tolerance() -> Self {
                $tol
            }

            fn from_decimal(text: &str) -> Option<Self> {
                split_decimal(text)?;
                let v = <$t>::from_str(text).ok()?;
                v.is_finite().then_some(v)
            }

            fn to_decimal(&self) -> String {
                float_to_decimal(*self)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_f64(value: f64) -> Option<Self> {
                value.is_finite().then_some(value as $t)
            }

            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }

            fn from_i64(value: i64) -> Self {
                value as $t
            }
        }
    };
}

float_scalar!(f64, 1e-9);
// f32 cannot resolve 1e-9 around typical observable magnitudes.
float_scalar!(f32, 1e-6);

impl Scalar for Exact {
    fn eq_tolerance() -> Self {
        Ratio::from_integer(0)
    }

    fn from_decimal(text: &str) -> Option<Self> {
        let (negative, int, frac) = split_decimal(text)?;
        let mut numer: i64 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            numer = numer.checked_mul(10)?.checked_add(i64::from(b - b'0'))?;
        }
        let denom = 10i64.checked_pow(u32::try_from(frac.len()).ok()?)?;
        let value = Ratio::new(numer, denom);
        Some(if negative { -value } else { value })
    }

    fn to_decimal(&self) -> String {
        let negative = *self.numer() < 0;
        let numer = i128::from(*self.numer()).abs();
        let denom = i128::from(*self.denom());
        // Terminating expansions need a denominator of the form 2^a 5^b.
        let mut rest = denom;
        let mut twos = 0u32;
        let mut fives = 0u32;
        while rest % 2 == 0 {
            rest /= 2;
            twos += 1;
        }
        while rest % 5 == 0 {
            rest /= 5;
            fives += 1;
        }
        let digits = match twos.max(fives) {
            d if rest == 1 && d <= 18 => d,
            _ => 18,
        };
        let scale = 10i128.pow(digits);
        let scaled = numer * scale / denom;
        let int = scaled / scale;
        let frac = scaled % scale;
        let mut out = String::new();
        if negative && scaled != 0 {
            out.push('-');
        }
        out.push_str(&int.to_string());
        if frac != 0 {
            let frac = format!("{:0width$}", frac, width = digits as usize);
            out.push('.');
            out.push_str(frac.trim_end_matches('0'));
        }
        out
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        Self::from_decimal(&float_to_decimal(value))
    }

    fn sqrt(self) -> Self {
        let root = Scalar::to_f64(&self).sqrt();
        if let Some(r) = Self::from_f64(root) {
            if r.checked_mul(&r) == Some(self) {
                return r;
            }
        }
        // Irrational roots are approximated to 12 decimal places so that
        // downstream arithmetic stays inside i64.
        let scaled = (root * 1e12).round() as i64;
        Ratio::new(scaled, 1_000_000_000_000)
    }

    fn from_i64(value: i64) -> Self {
        Ratio::from_integer(value)
    }
}
