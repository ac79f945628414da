//! Fixed-width positional numbers and the carry-normalization kernel.
//!
//! Digits are stored least significant first. [`fmt::Display`] prints them
//! most significant first, as in `(4,14,2,0)_16`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meter::{Meter, MeterError};
use crate::tables::TableSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RadixError {
    #[error("digit {digit} at position {position} is not below base {base}")]
    DigitTooLarge {
        digit: u64,
        position: usize,
        base: u64,
    },
    #[error("base {0} is below 2")]
    BadBase(u64),
    #[error("pseudo-digit {entry} exceeds the declared limit {limit}")]
    PseudoDigitTooLarge { entry: u64, limit: u64 },
    #[error("carry {0} left over after the last position")]
    CarryOut(u64),
    #[error(transparent)]
    Meter(#[from] MeterError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadixNumber {
    pub base: u64,
    /// Least significant first; the length is the declared width.
    pub digits: Vec<u64>,
}

impl RadixNumber {
    pub fn zero(base: u64, width: usize) -> Self {
        RadixNumber {
            base,
            digits: vec![0; width],
        }
    }

    /// Builds from digits given least significant first, validating them.
    pub fn from_digits(base: u64, digits: Vec<u64>) -> Result<Self, RadixError> {
        if base < 2 {
            return Err(RadixError::BadBase(base));
        }
        let n = RadixNumber { base, digits };
        n.validate()?;
        Ok(n)
    }

    /// Builds from digits written most significant first.
    pub fn from_msb(base: u64, msb_first: &[u64]) -> Result<Self, RadixError> {
        let mut d = msb_first.to_vec();
        d.reverse();
        Self::from_digits(base, d)
    }

    pub fn width(&self) -> usize {
        self.digits.len()
    }

    pub fn validate(&self) -> Result<(), RadixError> {
        for (position, &digit) in self.digits.iter().enumerate() {
            if digit >= self.base {
                return Err(RadixError::DigitTooLarge {
                    digit,
                    position,
                    base: self.base,
                });
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Number of digits up to and including the leading nonzero one.
    pub fn significant_len(&self) -> usize {
        self.digits
            .iter()
            .rposition(|&d| d != 0)
            .map_or(0, |p| p + 1)
    }

    /// Same value with `width` digits. Fails if a nonzero digit would be cut.
    pub fn resized(&self, width: usize) -> Option<Self> {
        if self.significant_len() > width {
            return None;
        }
        let mut digits = self.digits.clone();
        digits.resize(width, 0);
        Some(RadixNumber {
            base: self.base,
            digits,
        })
    }

    /// Host-side value; panics only if the value exceeds `u128`.
    pub fn value(&self) -> u128 {
        from_radix(self).expect("digits validated on construction")
    }
}

impl fmt::Display for RadixNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.digits.iter().rev().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")_{}", self.base)
    }
}

/// Digit vector whose entries may exceed the base, each below `limit_factor · base²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoDigits {
    pub base: u64,
    pub entries: Vec<u64>,
    pub limit_factor: u64,
}

impl PseudoDigits {
    pub fn new(base: u64, entries: Vec<u64>, limit_factor: u64) -> Result<Self, RadixError> {
        let limit = limit_factor.saturating_mul(base).saturating_mul(base);
        if let Some(&entry) = entries.iter().find(|&&e| e >= limit) {
            return Err(RadixError::PseudoDigitTooLarge { entry, limit });
        }
        Ok(PseudoDigits {
            base,
            entries,
            limit_factor,
        })
    }

    pub fn value(&self) -> u128 {
        self.entries
            .iter()
            .rev()
            .fold(0u128, |acc, &e| acc * self.base as u128 + e as u128)
    }
}

/// Result of a bounded operation: a number of the declared output width, or
/// the overflow sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpResult {
    Value(RadixNumber),
    Overflow,
}

impl OpResult {
    pub fn value(&self) -> Option<u128> {
        match self {
            OpResult::Value(r) => Some(r.value()),
            OpResult::Overflow => None,
        }
    }

    pub fn number(&self) -> Option<&RadixNumber> {
        match self {
            OpResult::Value(r) => Some(r),
            OpResult::Overflow => None,
        }
    }
}

/// Writes `x` in `base` with exactly `width` digits, or `Overflow` if it does
/// not fit.
pub fn to_radix(x: u128, base: u64, width: usize) -> OpResult {
    assert!(base >= 2, "base must be at least 2");
    let b = base as u128;
    let mut rest = x;
    let mut digits = Vec::with_capacity(width);
    for _ in 0..width {
        digits.push((rest % b) as u64);
        rest /= b;
    }
    if rest != 0 {
        OpResult::Overflow
    } else {
        OpResult::Value(RadixNumber { base, digits })
    }
}

/// Horner evaluation of a validated number.
pub fn from_radix(n: &RadixNumber) -> Result<u128, RadixError> {
    n.validate()?;
    Ok(n.digits
        .iter()
        .rev()
        .fold(0u128, |acc, &d| acc * n.base as u128 + d as u128))
}

/// Carry loop `(r_{i+1}, z_i) <- (DivB[z'_i + r_i], ModB[z'_i + r_i])` over
/// every entry. The last carry must vanish; callers reserve a top entry.
pub fn normalize(
    p: &PseudoDigits,
    tables: &TableSet,
    m: &mut Meter,
) -> Result<RadixNumber, RadixError> {
    let mut digits = Vec::with_capacity(p.entries.len());
    let mut carry = 0;
    for &e in &p.entries {
        let s = m.add(e, carry)?;
        carry = m.load(&tables.div_b, s)?;
        digits.push(m.load(&tables.mod_b, s)?);
    }
    if carry != 0 {
        return Err(RadixError::CarryOut(carry));
    }
    Ok(RadixNumber {
        base: tables.b,
        digits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(base: u64, msb: &[u64]) -> RadixNumber {
        RadixNumber::from_msb(base, msb).unwrap()
    }

    #[test]
    fn to_radix_examples() {
        assert_eq!(to_radix(20000, 16, 4), OpResult::Value(n(16, &[4, 14, 2, 0])));
        assert_eq!(to_radix(0, 7, 3), OpResult::Value(n(7, &[0, 0, 0])));
        assert_eq!(to_radix(16, 16, 1), OpResult::Overflow);
    }

    #[test]
    fn from_radix_examples() {
        assert_eq!(from_radix(&n(16, &[4, 14, 2, 0])), Ok(20000));
        assert_eq!(from_radix(&n(10, &[5])), Ok(5));
        assert_eq!(from_radix(&n(10, &[9, 9])), Ok(99));
        let bad = RadixNumber {
            base: 10,
            digits: vec![10],
        };
        assert!(matches!(from_radix(&bad), Err(RadixError::DigitTooLarge { .. })));
    }

    #[test]
    fn display_is_msb_first() {
        assert_eq!(n(16, &[4, 14, 2, 0]).to_string(), "(4,14,2,0)_16");
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&n(16, &[1, 2])).unwrap();
        assert_eq!(s, r#"{"base":16,"digits":[2,1]}"#);
    }

    #[test]
    fn normalize_single_carry() {
        let t = TableSet::build(256, 1).unwrap();
        assert_eq!(t.b, 16);
        let mut m = Meter::new(t.content_bound);
        let p = PseudoDigits::new(16, vec![18, 0], 2).unwrap();
        let r = normalize(&p, &t, &mut m).unwrap();
        assert_eq!(r.digits, vec![2, 1]);
        let z = PseudoDigits::new(16, vec![0, 0, 0], 2).unwrap();
        assert!(normalize(&z, &t, &mut m).unwrap().is_zero());
    }

    #[test]
    fn normalize_matches_products_b4() {
        // Every convolution of two width-2 base-4 numbers.
        let t = TableSet::build(16, 2).unwrap();
        for x in 0..16u64 {
            for y in 0..16u64 {
                let (x0, x1, y0, y1) = (x % 4, x / 4, y % 4, y / 4);
                let p = PseudoDigits::new(4, vec![x0 * y0, x1 * y0 + x0 * y1, x1 * y1, 0], 2)
                    .unwrap();
                let mut m = Meter::new(t.content_bound);
                let r = normalize(&p, &t, &mut m).unwrap();
                assert_eq!(r.value(), (x * y) as u128);
            }
        }
    }

    #[test]
    fn pseudo_digit_limit_enforced() {
        assert!(PseudoDigits::new(4, vec![32], 2).is_err());
        assert!(PseudoDigits::new(4, vec![31], 2).is_ok());
    }

    proptest! {
        #[test]
        fn round_trip(x in 0u128..1u128 << 100, base in 2u64..5000, w in 1usize..40) {
            if let OpResult::Value(r) = to_radix(x, base, w) {
                prop_assert_eq!(from_radix(&r).unwrap(), x);
            } else {
                prop_assert!((base as f64).powi(w as i32) <= x as f64 * 1.000001);
            }
        }

        #[test]
        fn normalize_preserves_value(entries in proptest::collection::vec(0u64..300, 1..5)) {
            let t = TableSet::build(100, 1).unwrap();
            let mut e = entries.clone();
            e.extend([0, 0]);
            let p = PseudoDigits::new(t.b, e, 4).unwrap();
            let mut m = Meter::new(t.content_bound);
            let r = normalize(&p, &t, &mut m).unwrap();
            prop_assert_eq!(r.value(), p.value());
            r.validate().unwrap();
            let again = PseudoDigits::new(t.b, r.digits.clone(), 4).unwrap();
            let mut m2 = Meter::new(t.content_bound);
            prop_assert_eq!(normalize(&again, &t, &mut m2).unwrap(), r);
        }
    }
}
