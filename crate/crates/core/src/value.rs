//! Canonical values for estimand and observation spaces.
//!
//! Relation membership needs exact equality, so real numbers are snapped
//! onto a fixed grid (round-half-even) before they are compared. Two values
//! are equal exactly when their [`Value::canonical_key`] encodings are
//! byte-identical; the derived `Eq`/`Hash`/`Ord` operate on the same
//! canonical fields, so the two notions coincide.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};

/// Default equality step for real scalars.
pub const DEFAULT_EPS_EQ: f64 = 1e-9;

/// Snaps reals onto the grid `step * Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    step: f64,
}

impl Default for Quantizer {
    fn default() -> Self {
        Quantizer { step: DEFAULT_EPS_EQ }
    }
}

impl Quantizer {
    /// Panics if `step` is not a positive finite number.
    pub fn new(step: f64) -> Self {
        assert!(
            step.is_finite() && step > 0.0,
            "quantization step must be positive, got {step}"
        );
        Quantizer { step }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Grid index of `x`, ties broken to even.
    pub fn ticks(&self, x: f64) -> i128 {
        (x / self.step).round_ties_even() as i128
    }

    /// Quantized real value. Non-finite inputs have no grid point and map to
    /// [`Value::Missing`].
    pub fn real(&self, x: f64) -> Value {
        if !x.is_finite() {
            return Value::Missing;
        }
        Value::Real {
            ticks: self.ticks(x),
            step_bits: self.step.to_bits(),
        }
    }

    pub fn tuple<I: IntoIterator<Item = f64>>(&self, xs: I) -> Value {
        Value::Tuple(xs.into_iter().map(|x| self.real(x)).collect())
    }
}

/// An element of an estimand space or an observation space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    /// Unobserved cell or undefined quantity (e.g. a conditional on a null event).
    Missing,
    Rational(Ratio<i64>),
    /// Real scalar stored as a grid index; `step_bits` records the grid.
    Real {
        ticks: i128,
        step_bits: u64,
    },
    Tuple(Vec<Value>),
    Map(BTreeMap<String, Value>),
}

impl Value {
    /// Real scalar on the default grid.
    pub fn real(x: f64) -> Value {
        Quantizer::default().real(x)
    }

    pub fn rational(numer: i64, denom: i64) -> Value {
        Value::Rational(Ratio::new(numer, denom))
    }

    pub fn tuple<I: IntoIterator<Item = f64>>(xs: I) -> Value {
        Quantizer::default().tuple(xs)
    }

    pub fn map<I, K>(entries: I) -> Value
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        Value::Map(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Numeric value of a scalar (rational or real).
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Rational(r) => Some(*r.numer() as f64 / *r.denom() as f64),
            Value::Real { ticks, step_bits } => {
                let step = f64::from_bits(*step_bits);
                Some(match decimal_places(step) {
                    Some(k) => *ticks as f64 / 10f64.powi(k as i32),
                    None => *ticks as f64 * step,
                })
            }
            _ => None,
        }
    }

    /// Exact rational value of a scalar. Reals on a decimal grid convert
    /// exactly (`ticks / 10^k`).
    pub fn to_big_rational(&self) -> Option<BigRational> {
        match self {
            Value::Rational(r) => Some(BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))),
            Value::Real { ticks, step_bits } => {
                let step = f64::from_bits(*step_bits);
                let ticks = BigInt::from(*ticks);
                match decimal_places(step) {
                    Some(k) => Some(BigRational::new(ticks, BigInt::from(10u32).pow(k))),
                    None => BigRational::from_float(step).map(|s| s * BigRational::from_integer(ticks)),
                }
            }
            _ => None,
        }
    }

    /// Prefix-free byte encoding; equal keys iff equal values.
    pub fn canonical_key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut Vec<u8>) {
        match self {
            Value::Missing => out.push(0),
            Value::Rational(r) => {
                out.push(1);
                out.extend_from_slice(&r.numer().to_be_bytes());
                out.extend_from_slice(&r.denom().to_be_bytes());
            }
            Value::Real { ticks, step_bits } => {
                out.push(2);
                out.extend_from_slice(&step_bits.to_be_bytes());
                out.extend_from_slice(&ticks.to_be_bytes());
            }
            Value::Tuple(items) => {
                out.push(3);
                out.extend_from_slice(&(items.len() as u64).to_be_bytes());
                for item in items {
                    item.write_key(out);
                }
            }
            Value::Map(entries) => {
                out.push(4);
                out.extend_from_slice(&(entries.len() as u64).to_be_bytes());
                for (label, v) in entries {
                    out.extend_from_slice(&(label.len() as u64).to_be_bytes());
                    out.extend_from_slice(label.as_bytes());
                    v.write_key(out);
                }
            }
        }
    }
}

/// `Some(k)` when `step == 10^-k` for some `k <= 18`.
pub(crate) fn decimal_places(step: f64) -> Option<u32> {
    (0..=18u32).find(|&k| {
        let scaled = step * 10f64.powi(k as i32);
        (scaled - 1.0).abs() < 1e-12
    })
}

/// Exact decimal rendering of `ticks * 10^-k`.
fn format_decimal(ticks: i128, k: u32) -> String {
    if k == 0 {
        return ticks.to_string();
    }
    let negative = ticks < 0;
    let digits = ticks.unsigned_abs().to_string();
    let k = k as usize;
    let padded = if digits.len() <= k {
        format!("{}{}", "0".repeat(k + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (int_part, frac_part) = padded.split_at(padded.len() - k);
    let frac_part = frac_part.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Missing => write!(f, "*"),
            Value::Rational(r) => {
                if r.denom() == &1 {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Value::Real { ticks, step_bits } => {
                let step = f64::from_bits(*step_bits);
                match decimal_places(step) {
                    Some(k) => write!(f, "{}", format_decimal(*ticks, k)),
                    None => write!(f, "{}", *ticks as f64 * step),
                }
            }
            Value::Tuple(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
            Value::Map(entries) => {
                write!(f, "{{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Missing => serializer.serialize_none(),
            Value::Rational(_) | Value::Real { .. } => {
                // Route through the exact decimal text so JSON shows 0.45, not 0.44999999999999996.
                let text = self.to_string();
                if let Ok(n) = text.parse::<i64>() {
                    return serializer.serialize_i64(n);
                }
                let x: f64 = text.parse().unwrap_or_else(|_| self.as_f64().unwrap_or(f64::NAN));
                serializer.serialize_f64(x)
            }
            Value::Tuple(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            Value::Map(entries) => {
                let mut map = serializer.serialize_map(Some(entries.len()))?;
                for (k, v) in entries {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

/// Exact rational for a float, read through its shortest round-trip decimal
/// representation: `0.6` becomes `3/5`, not the nearest binary fraction.
pub fn decimal_rational(x: f64) -> BigRational {
    assert!(x.is_finite(), "cannot convert non-finite {x} to a rational");
    parse_decimal(&format!("{x:e}")).expect("float formats as a decimal literal")
}

/// Parses `[-]digits[.digits][e[-]digits]` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * ten.pow(scale as u32))
    } else {
        BigRational::new(digits, ten.pow((-scale) as u32))
    };
    if negative {
        r = -r;
    }
    Some(r)
}

/// Nearest f64 to a rational.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}
