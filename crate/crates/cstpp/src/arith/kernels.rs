//! Base-`B` digit kernels. Every kernel runs a fixed sequence of metered
//! steps for a given operand width, so its cost never depends on the digits.

use std::cmp::Ordering;

use crate::meter::Meter;
use crate::radix::{normalize, PseudoDigits, RadixNumber};
use crate::tables::TableSet;

use super::ArithError;

/// `B·x` for `x < 2B`.
pub(crate) fn times_b(t: &TableSet, m: &mut Meter, x: u64) -> Result<u64, ArithError> {
    Ok(m.load(&t.mult_b, x)?)
}

/// `A_mul[x][y] = x·y` for digits.
pub(crate) fn digit_mul(t: &TableSet, m: &mut Meter, x: u64, y: u64) -> Result<u64, ArithError> {
    let row = times_b(t, m, x)?;
    let idx = m.add(row, y)?;
    Ok(m.load(&t.a_mul, idx)?)
}

/// `A_diff[x][y] = max(0, x − y)` for `x, y < 2B`.
pub(crate) fn monus(t: &TableSet, m: &mut Meter, x: u64, y: u64) -> Result<u64, ArithError> {
    let row = times_b(t, m, x)?;
    let row = m.add(row, row)?;
    let idx = m.add(row, y)?;
    Ok(m.load(&t.a_diff, idx)?)
}

fn carry_normalize(
    t: &TableSet,
    m: &mut Meter,
    entries: Vec<u64>,
    limit_factor: u64,
) -> Result<Vec<u64>, ArithError> {
    let p = PseudoDigits::new(t.b, entries, limit_factor)?;
    Ok(normalize(&p, t, m)?.digits)
}

/// `x + y` on equal-width digit vectors; the result has one more digit.
pub fn add_digits(t: &TableSet, m: &mut Meter, x: &[u64], y: &[u64]) -> Result<Vec<u64>, ArithError> {
    debug_assert_eq!(x.len(), y.len());
    let mut entries = Vec::with_capacity(x.len() + 1);
    for (&a, &b) in x.iter().zip(y) {
        entries.push(m.add(a, b)?);
    }
    entries.push(0);
    carry_normalize(t, m, entries, 2)
}

/// `max(0, x − y)` on equal-width digit vectors.
///
/// Each position reads `A_diff[x_i + B][y_i + borrow]`, whose value is
/// `B + (x_i − y_i − borrow)` when no borrow is needed. A final borrow zeroes
/// every digit through `A_mul`.
pub fn sub_digits(t: &TableSet, m: &mut Meter, x: &[u64], y: &[u64]) -> Result<Vec<u64>, ArithError> {
    debug_assert_eq!(x.len(), y.len());
    let two_b = t.mult_b.data[2];
    let mut borrow = 0;
    let mut raw = Vec::with_capacity(x.len());
    for (&a, &b) in x.iter().zip(y) {
        let lifted = m.add(a, t.b)?;
        let taken = m.add(b, borrow)?;
        let diff = monus(t, m, lifted, taken)?;
        raw.push(m.load(&t.mod_b, diff)?);
        let no_borrow = m.load(&t.div_b, diff)?;
        let idx = m.add(two_b, no_borrow)?;
        borrow = m.load(&t.a_diff, idx)?;
    }
    let keep = m.is_zero(borrow)?;
    raw.into_iter()
        .map(|digit| digit_mul(t, m, digit, keep))
        .collect()
}

/// Three-way comparison, scanning digits most significant first with
/// `A_diff` tests and 0/1 flags combined through `A_mul`.
pub fn compare_digits(
    t: &TableSet,
    m: &mut Meter,
    x: &[u64],
    y: &[u64],
) -> Result<Ordering, ArithError> {
    debug_assert_eq!(x.len(), y.len());
    let mut equal = 1;
    let mut greater = 0;
    let mut less = 0;
    for (&a, &b) in x.iter().zip(y).rev() {
        let ab = monus(t, m, a, b)?;
        let ba = monus(t, m, b, a)?;
        let a_gt = m.is_zero(ab)?;
        let a_gt = m.is_zero(a_gt)?;
        let b_gt = m.is_zero(ba)?;
        let b_gt = m.is_zero(b_gt)?;
        let g = digit_mul(t, m, equal, a_gt)?;
        greater = m.add(greater, g)?;
        let l = digit_mul(t, m, equal, b_gt)?;
        less = m.add(less, l)?;
        let either = m.add(ab, ba)?;
        let same = m.is_zero(either)?;
        equal = digit_mul(t, m, equal, same)?;
    }
    Ok(match (greater, less) {
        (0, 0) => Ordering::Equal,
        (_, 0) => Ordering::Greater,
        _ => Ordering::Less,
    })
}

/// Schoolbook product truncated to `out_width` digits. The caller
/// guarantees the true product fits, so every dropped pseudo-digit is zero.
pub fn mul_digits(
    t: &TableSet,
    m: &mut Meter,
    x: &[u64],
    y: &[u64],
    out_width: usize,
) -> Result<Vec<u64>, ArithError> {
    let mut entries = vec![0u64; out_width];
    convolve_into(t, m, x, y, &mut entries)?;
    let terms = x.len().min(y.len()) as u64;
    carry_normalize(t, m, entries, terms + 1)
}

pub(crate) fn convolve_into(
    t: &TableSet,
    m: &mut Meter,
    x: &[u64],
    y: &[u64],
    entries: &mut [u64],
) -> Result<(), ArithError> {
    for (j, slot) in entries.iter_mut().enumerate() {
        let mut acc = 0;
        let lo = j.saturating_sub(y.len() - 1);
        let hi = j.min(x.len() - 1);
        for i in lo..=hi {
            let p = digit_mul(t, m, x[i], y[j - i])?;
            acc = m.add(acc, p)?;
        }
        *slot = acc;
    }
    Ok(())
}

/// `y·μ` for a single digit `μ`. Returns `w + 1` digits and the carries
/// `c_1, …, c_w` of the product loop.
pub fn mul_by_digit(
    t: &TableSet,
    m: &mut Meter,
    y: &[u64],
    mu: u64,
) -> Result<(Vec<u64>, Vec<u64>), ArithError> {
    let mut digits = Vec::with_capacity(y.len() + 1);
    let mut carries = Vec::with_capacity(y.len());
    let mut carry = 0;
    for &yi in y {
        let p = digit_mul(t, m, yi, mu)?;
        let z = m.add(p, carry)?;
        carry = m.load(&t.div_b, z)?;
        digits.push(m.load(&t.mod_b, z)?);
        carries.push(carry);
    }
    digits.push(carry);
    Ok((digits, carries))
}

/// Quotient and remainder of `x` by a digit `1 ≤ y < B`, most significant
/// digit first: `z_i = (B·r + x_i) div y`, `r ← (B·r + x_i) mod y`.
///
/// `B·r` is split by `A_Bdiv`/`A_Bmod`, `x_i` by `A_div`/`A_mod`; the two
/// remainders sum below `2y`, and one `A_diff` test folds them.
pub fn div_digits_by_digit(
    t: &TableSet,
    m: &mut Meter,
    x: &[u64],
    y: u64,
) -> Result<(Vec<u64>, u64), ArithError> {
    if m.is_zero(y)? == 1 {
        return Err(ArithError::DivisionByZero);
    }
    let mut q = vec![0u64; x.len()];
    let mut r = 0u64;
    for i in (0..x.len()).rev() {
        let row_r = times_b(t, m, r)?;
        let idx_r = m.add(row_r, y)?;
        let q_br = m.load(&t.a_bdiv, idx_r)?;
        let r_br = m.load(&t.a_bmod, idx_r)?;
        let row_x = times_b(t, m, x[i])?;
        let idx_x = m.add(row_x, y)?;
        let q_x = m.load(&t.a_div, idx_x)?;
        let r_x = m.load(&t.a_mod, idx_x)?;
        let s = m.add(r_br, r_x)?;
        let short = monus(t, m, y, s)?;
        let wraps = m.is_zero(short)?;
        let take = digit_mul(t, m, y, wraps)?;
        r = monus(t, m, s, take)?;
        let zi = m.add(q_br, q_x)?;
        q[i] = m.add(zi, wraps)?;
    }
    Ok((q, r))
}

/// Public form of [`div_digits_by_digit`] on a [`RadixNumber`].
pub fn div_by_digit(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
    y: u64,
) -> Result<(RadixNumber, u64), ArithError> {
    super::expect_base(x, t.b)?;
    let (q, r) = div_digits_by_digit(t, m, &x.digits, y)?;
    Ok((RadixNumber { base: t.b, digits: q }, r))
}
