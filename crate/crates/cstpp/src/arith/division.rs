//! Division by a multi-digit divisor.
//!
//! The building blocks are prefix extraction, divisor normalization by
//! `μ = ⌊B/(v+1)⌋`, and the trial quotient `min(⌊u₍₂₎/v⌋, B−1)`. They are
//! exposed one by one and also composed two ways:
//!
//! * [`div_large`] shifts the divisor so its leading digit sits in the top
//!   position, normalizes once, then runs the trial/correct step at every one
//!   of the `w + 1` quotient positions. Positions whose prefix is below the
//!   divisor yield digit 0. Its step count depends only on the width.
//! * [`div_by_prefixes`] follows the textbook recursion literally: find the
//!   shortest prefix `u ≥ y`, take one quotient digit, fold the remainder
//!   back, repeat. Its cost depends on the operands.

use std::cmp::Ordering;

use crate::meter::Meter;
use crate::radix::RadixNumber;
use crate::tables::TableSet;

use super::kernels::{
    compare_digits, div_digits_by_digit, monus, mul_by_digit, sub_digits,
};
use super::{expect_base, ArithError};

/// Working state of one quotient-digit step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisionState {
    /// Dividend prefix, `m + 1` digits.
    pub u: RadixNumber,
    /// Divisor, `m` digits with a nonzero leading digit.
    pub y: RadixNumber,
    /// Leading digit of `y`.
    pub v: u64,
    /// Normalization factor applied to `u` and `y`.
    pub mu: u64,
    /// Number of dividend digits below the prefix.
    pub k: usize,
    /// Those low digits (`x mod B^k`), `k` of them.
    pub low: RadixNumber,
    /// Significant digit count of the divisor.
    pub m: usize,
}

/// `x = u·B^k + x'` with `y ≤ u < B·y`; `u` is zero-completed to `m + 1`
/// digits, `m` being the divisor's digit count.
pub fn extract_prefix(
    t: &TableSet,
    meter: &mut Meter,
    x: &RadixNumber,
    y: &RadixNumber,
) -> Result<DivisionState, ArithError> {
    expect_base(x, t.b)?;
    expect_base(y, t.b)?;
    let m = y.significant_len();
    if m == 0 {
        return Err(ArithError::DivisionByZero);
    }
    let yd = &y.digits[..m];
    let xs = x.significant_len().max(m);
    let digits_at = |k: usize| -> Vec<u64> {
        (k..k + m + 1)
            .map(|i| x.digits.get(i).copied().unwrap_or(0))
            .collect()
    };
    let mut yext = yd.to_vec();
    yext.push(0);
    // largest k with ⌊x / B^k⌋ ≥ y; the window is m + 1 digits wide because
    // every digit above position k + m is zero once k ≥ xs − m − 1
    let mut k = xs - m;
    loop {
        let u = digits_at(k);
        let high_zero = (k + m + 1..x.digits.len()).all(|i| x.digits[i] == 0);
        meter.charge(1)?;
        if high_zero && compare_digits(t, meter, &u, &yext)? != Ordering::Less {
            break;
        }
        if k == 0 {
            return Err(ArithError::DividendBelowDivisor);
        }
        k -= 1;
    }
    Ok(DivisionState {
        u: RadixNumber {
            base: t.b,
            digits: digits_at(k),
        },
        y: RadixNumber {
            base: t.b,
            digits: yd.to_vec(),
        },
        v: yd[m - 1],
        mu: 1,
        k,
        low: RadixNumber {
            base: t.b,
            digits: x.digits[..k].to_vec(),
        },
        m,
    })
}

/// Outcome of [`normalize_divisor`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedDivisor {
    /// `u·μ`, still `m + 1` digits.
    pub u: RadixNumber,
    /// `y·μ`, still `m` digits.
    pub y: RadixNumber,
    pub mu: u64,
    /// Carries `c_1..c_m` of the `y·μ` product loop.
    pub carries: Vec<u64>,
}

/// `μ = ⌊B/(v+1)⌋` without branching: when `v ≥ ⌊B/2⌋` the factor is 1 and
/// the table read uses index `v` instead of `v + 1` to stay in range.
pub(crate) fn normalization_factor(
    t: &TableSet,
    m: &mut Meter,
    v: u64,
) -> Result<u64, ArithError> {
    let short = monus(t, m, t.half_b, v)?;
    let normalized = m.is_zero(short)?;
    let bump = m.is_zero(normalized)?;
    let divisor = m.add(v, bump)?;
    let idx = m.add(t.b, divisor)?;
    let raw = m.load(&t.a_bdiv, idx)?;
    Ok(m.select(normalized, raw, 1)?)
}

/// Multiplies prefix and divisor by `μ` so the divisor's leading digit
/// reaches `⌊B/2⌋`.
pub fn normalize_divisor(
    t: &TableSet,
    meter: &mut Meter,
    u: &RadixNumber,
    y: &RadixNumber,
) -> Result<NormalizedDivisor, ArithError> {
    expect_base(u, t.b)?;
    expect_base(y, t.b)?;
    let m = y.width();
    let v = *y.digits.last().ok_or(ArithError::DivisionByZero)?;
    if v == 0 {
        return Err(ArithError::DivisionByZero);
    }
    let mu = normalization_factor(t, meter, v)?;
    let (yd, carries) = mul_by_digit(t, meter, &y.digits, mu)?;
    let (ud, _) = mul_by_digit(t, meter, &u.digits, mu)?;
    if yd[m] != 0 || ud[m + 1..].iter().any(|&d| d != 0) {
        return Err(ArithError::Internal("normalization widened the divisor"));
    }
    Ok(NormalizedDivisor {
        u: RadixNumber {
            base: t.b,
            digits: ud[..=m].to_vec(),
        },
        y: RadixNumber {
            base: t.b,
            digits: yd[..m].to_vec(),
        },
        mu,
        carries,
    })
}

fn trial_digit(
    t: &TableSet,
    m: &mut Meter,
    u_top: u64,
    u_next: u64,
    v: u64,
) -> Result<u64, ArithError> {
    let (q2, _) = div_digits_by_digit(t, m, &[u_next, u_top], v)?;
    let small = m.is_zero(q2[1])?;
    Ok(m.select(small, t.b - 1, q2[0])?)
}

/// `q̃ = min(⌊(u_m·B + u_{m−1}) / v⌋, B − 1)` for an `m + 1`-digit prefix and
/// an `m`-digit divisor with leading digit `v`.
pub fn trial_quotient(
    t: &TableSet,
    meter: &mut Meter,
    u: &RadixNumber,
    y: &RadixNumber,
) -> Result<u64, ArithError> {
    expect_base(u, t.b)?;
    expect_base(y, t.b)?;
    let m = y.width();
    if m == 0 || u.width() != m + 1 {
        return Err(ArithError::WidthMismatch {
            left: u.width(),
            right: m,
        });
    }
    trial_digit(t, meter, u.digits[m], u.digits[m - 1], y.digits[m - 1])
}

/// Exact quotient digit from `q̃` with the two comparisons
/// `u ≥ q̃·y` and `u ≥ (q̃−1)·y`; returns the digit and `u − q·y`.
fn correct_digit(
    t: &TableSet,
    m: &mut Meter,
    u: &[u64],
    y: &[u64],
    q_trial: u64,
) -> Result<(u64, Vec<u64>), ArithError> {
    let w = u.len();
    let (mut p0, _) = mul_by_digit(t, m, y, q_trial)?;
    let q_less = monus(t, m, q_trial, 1)?;
    let (mut p1, _) = mul_by_digit(t, m, y, q_less)?;
    p0.truncate(w);
    p1.truncate(w);
    let lt0 = u64::from(compare_digits(t, m, u, &p0)? == Ordering::Less);
    let lt1 = u64::from(compare_digits(t, m, u, &p1)? == Ordering::Less);
    m.charge(2)?;
    let ge0 = m.is_zero(lt0)?;
    let ge1 = m.is_zero(lt1)?;
    let s = m.add(q_trial, ge0)?;
    let s = m.add(s, ge1)?;
    let q = monus(t, m, s, 2)?;
    let (mut p, _) = mul_by_digit(t, m, y, q)?;
    p.truncate(w);
    let r = sub_digits(t, m, u, &p)?;
    Ok((q, r))
}

/// Quotient and remainder of equal-width base-`B` digit vectors.
pub fn div_large_digits(
    t: &TableSet,
    m: &mut Meter,
    x: &[u64],
    y: &[u64],
) -> Result<(Vec<u64>, Vec<u64>), ArithError> {
    let w = x.len();
    debug_assert_eq!(w, y.len());
    // significant length of y, scanning up; leading zeros, scanning down
    let mut len = 0;
    for (j, &d) in y.iter().enumerate() {
        let z = m.is_zero(d)?;
        len = m.select(z, j as u64 + 1, len)?;
    }
    let mut seen = 0;
    let mut shift = 0;
    for &d in y.iter().rev() {
        let z = m.is_zero(d)?;
        seen = m.select(z, 1, seen)?;
        let not_seen = m.is_zero(seen)?;
        shift = m.add(shift, not_seen)?;
    }
    if m.is_zero(len)? == 1 {
        return Err(ArithError::DivisionByZero);
    }

    // shift left by `shift` digits through zero-padded scratch vectors
    let mut pad_y = vec![0u64; w];
    pad_y.extend_from_slice(y);
    let mut pad_x = vec![0u64; w];
    pad_x.extend_from_slice(x);
    pad_x.extend(std::iter::repeat_n(0, w));
    m.charge(5 * w as u64)?;
    let mut ys = Vec::with_capacity(w);
    for j in 0..w as u64 {
        let idx = m.add(j, len)?;
        ys.push(m.load_reg(&pad_y, idx)?);
    }
    let mut xs = Vec::with_capacity(2 * w);
    for j in 0..2 * w as u64 {
        let idx = m.add(j, len)?;
        xs.push(m.load_reg(&pad_x, idx)?);
    }

    let mu = normalization_factor(t, m, ys[w - 1])?;
    let (mut dn, _) = mul_by_digit(t, m, &ys, mu)?;
    dn.truncate(w);
    let (mut rem, _) = mul_by_digit(t, m, &xs, mu)?;
    let v = dn[w - 1];

    let mut q = vec![0u64; w + 1];
    let mut dn_ext = dn.clone();
    dn_ext.push(0);
    for k in (0..=w).rev() {
        let u = rem[k..=k + w].to_vec();
        m.charge(w as u64 + 1)?;
        let q_trial = trial_digit(t, m, u[w], u[w - 1], v)?;
        let (digit, r) = correct_digit(t, m, &u, &dn_ext, q_trial)?;
        q[k] = digit;
        rem[k..=k + w].copy_from_slice(&r);
        m.charge(w as u64 + 1)?;
    }
    if q[w] != 0 {
        return Err(ArithError::Internal("quotient overflowed its width"));
    }
    q.truncate(w);

    // undo μ, then shift right by `shift`
    let (unscaled, _) = div_digits_by_digit(t, m, &rem[..w], mu)?;
    let mut pad_r = unscaled;
    pad_r.extend(std::iter::repeat_n(0, w));
    m.charge(w as u64)?;
    let mut r = Vec::with_capacity(w);
    for j in 0..w as u64 {
        let idx = m.add(j, shift)?;
        r.push(m.load_reg(&pad_r, idx)?);
    }
    Ok((q, r))
}

/// `(⌊x/y⌋, x mod y)` on base-`B` numbers of equal width, with a step count
/// fixed by the width.
pub fn div_large(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
    y: &RadixNumber,
) -> Result<(RadixNumber, RadixNumber), ArithError> {
    expect_base(x, t.b)?;
    expect_base(y, t.b)?;
    if x.width() != y.width() {
        return Err(ArithError::WidthMismatch {
            left: x.width(),
            right: y.width(),
        });
    }
    let (q, r) = div_large_digits(t, m, &x.digits, &y.digits)?;
    Ok((
        RadixNumber {
            base: t.b,
            digits: q,
        },
        RadixNumber {
            base: t.b,
            digits: r,
        },
    ))
}

/// Division by the literal prefix recursion: extract `u`, normalize, take
/// `q̃`, correct, and continue on `x'' = r·B^k + x'` until `x'' < y`.
pub fn div_by_prefixes(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
    y: &RadixNumber,
) -> Result<(RadixNumber, RadixNumber), ArithError> {
    expect_base(x, t.b)?;
    expect_base(y, t.b)?;
    let w = x.width().max(y.width());
    let ylen = y.significant_len();
    if ylen == 0 {
        return Err(ArithError::DivisionByZero);
    }
    let y_trim = RadixNumber {
        base: t.b,
        digits: y.digits[..ylen].to_vec(),
    };
    let mut rest = x.resized(w).expect("resize to own width");
    let mut q = vec![0u64; w];
    let mut y_wide = y_trim.digits.clone();
    y_wide.resize(w, 0);
    loop {
        m.charge(1)?;
        if compare_digits(t, m, &rest.digits, &y_wide)? == Ordering::Less {
            break;
        }
        let st = extract_prefix(t, m, &rest, &y_trim)?;
        let nd = normalize_divisor(t, m, &st.u, &st.y)?;
        let q_trial = trial_quotient(t, m, &nd.u, &nd.y)?;
        let mut yn = nd.y.digits.clone();
        yn.push(0);
        let (digit, r_scaled) = correct_digit(t, m, &nd.u.digits, &yn, q_trial)?;
        let (r, _) = div_digits_by_digit(t, m, &r_scaled, nd.mu)?;
        q[st.k] = digit;
        // x'' = r·B^k + x'
        let mut next = st.low.digits.clone();
        next.extend_from_slice(&r);
        next.resize(w, 0);
        m.charge(w as u64)?;
        rest = RadixNumber {
            base: t.b,
            digits: next,
        };
    }
    Ok((
        RadixNumber {
            base: t.b,
            digits: q,
        },
        rest,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radix::{to_radix, OpResult};

    fn num(v: u128, b: u64, w: usize) -> RadixNumber {
        match to_radix(v, b, w) {
            OpResult::Value(r) => r,
            OpResult::Overflow => panic!("{v} does not fit"),
        }
    }

    fn decimal() -> TableSet {
        let t = TableSet::build(100, 3).unwrap();
        assert_eq!(t.b, 10);
        t
    }

    #[test]
    fn prefix_examples() {
        let t = decimal();
        let mut m = Meter::new(t.content_bound);
        let st = extract_prefix(&t, &mut m, &num(23768, 10, 5), &num(65, 10, 5)).unwrap();
        assert_eq!(st.u.digits, vec![7, 3, 2]);
        assert_eq!((st.k, st.m), (2, 2));
        assert_eq!(st.low.digits, vec![8, 6]);
        let st = extract_prefix(&t, &mut m, &num(36524, 10, 5), &num(14, 10, 2)).unwrap();
        assert_eq!(st.u.digits, vec![6, 3, 0]);
        assert_eq!(st.k, 3);
    }

    #[test]
    fn prefix_bracket_property_b8() {
        let t = TableSet::build(64, 2).unwrap();
        for x in 1..512u128 {
            for y in 1..=x.min(100) {
                let mut m = Meter::new(t.content_bound);
                let st = extract_prefix(&t, &mut m, &num(x, 8, 3), &num(y, 8, 3)).unwrap();
                let u = st.u.value();
                assert!(y <= u && u < 8 * y, "x={x} y={y} u={u}");
                assert_eq!(u * 8u128.pow(st.k as u32) + st.low.value(), x);
            }
        }
    }

    #[test]
    fn normalize_example() {
        let t = decimal();
        let mut m = Meter::new(t.content_bound);
        let nd = normalize_divisor(&t, &mut m, &num(36, 10, 3), &num(14, 10, 2)).unwrap();
        assert_eq!(nd.mu, 5);
        assert_eq!(nd.y.value(), 70);
        assert_eq!(nd.u.value(), 180);
        let nd = normalize_divisor(&t, &mut m, &num(237, 10, 3), &num(65, 10, 2)).unwrap();
        assert_eq!((nd.mu, nd.y.value()), (1, 65));
    }

    #[test]
    fn trial_example() {
        let t = decimal();
        let mut m = Meter::new(t.content_bound);
        let q = trial_quotient(&t, &mut m, &num(237, 10, 3), &num(65, 10, 2)).unwrap();
        assert_eq!(q, 3);
    }

    #[test]
    fn footnote_division() {
        let t = decimal();
        for f in [div_large, div_by_prefixes] {
            let mut m = Meter::new(t.content_bound);
            let (q, r) = f(&t, &mut m, &num(23768, 10, 6), &num(65, 10, 6)).unwrap();
            assert_eq!((q.value(), r.value()), (365, 43));
        }
    }

    #[test]
    fn exhaustive_b4_width4() {
        let t = TableSet::build(16, 2).unwrap();
        let mut costs = std::collections::BTreeSet::new();
        for x in 0..256u128 {
            for y in 1..256u128 {
                let mut m = Meter::new(t.content_bound);
                let (q, r) = div_large(&t, &mut m, &num(x, 4, 4), &num(y, 4, 4)).unwrap();
                assert_eq!((q.value(), r.value()), (x / y, x % y), "x={x} y={y}");
                costs.insert(m.steps());
                let mut m = Meter::new(t.content_bound);
                let (q, r) = div_by_prefixes(&t, &mut m, &num(x, 4, 4), &num(y, 4, 4)).unwrap();
                assert_eq!((q.value(), r.value()), (x / y, x % y));
            }
        }
        assert_eq!(costs.len(), 1);
    }

    #[test]
    fn zero_divisor() {
        let t = decimal();
        let mut m = Meter::new(t.content_bound);
        assert!(matches!(
            div_large(&t, &mut m, &num(5, 10, 2), &num(0, 10, 2)),
            Err(ArithError::DivisionByZero)
        ));
    }
}
