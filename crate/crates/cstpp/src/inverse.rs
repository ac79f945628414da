//! Constant-time inverses of exponentially growing functions, and the
//! converse reconstruction of `f` from `f⁻¹` by binary search.
//!
//! `f⁻¹(x) = min{y : f(y) ≥ x}`. Preprocessing sweeps `y = 0, 1, …` while
//! `f(y) < N^d` and records, for every bucket `b`, the first `y` whose value
//! lands in a bucket `≥ b`. Buckets are keyed by
//! `i(x) = j·⌈log₂N⌉ + LOG2[x_j]`, `x_j` being the leading base-`N` digit,
//! which stays within `d + 1` of `⌊log₂ x⌋`. A query scans a fixed number of
//! candidates from the start of its bucket.

use std::cmp::Ordering;

use thiserror::Error;

use crate::arith::kernels::{digit_mul, div_digits_by_digit};
use crate::arith::{convert_b_to_n, convert_n_to_b, standard_op, ArithError, Op, OpOutput};
use crate::meter::{CostMeter, Meter, MeterError, Table};
use crate::radix::{to_radix, OpResult, RadixNumber};
use crate::tables::{add_base_n, TableSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InverseError {
    #[error("bucket index of zero is undefined")]
    Zero,
    #[error("growth witness fails at y = {y}")]
    GrowthViolation { y: usize },
    #[error("bucket {bucket} holds {len} values, above the bound {bound}")]
    BucketTooLarge { bucket: usize, len: u64, bound: usize },
    #[error("inverse is inconsistent while reconstructing f({y})")]
    Inconsistent { y: usize },
    #[error("tables for N = {0} lack the FIB/FACT sequences")]
    MissingSequence(u64),
    #[error("expected {expected} digits in base {base}")]
    Shape { base: u64, expected: usize },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Meter(#[from] MeterError),
}

/// An exponentially growing `f` on `[0, ℓ]` with `f(ℓ) < N^d ≤ f(ℓ+1)`,
/// plus its growth witnesses: `f(y+1)·den > num·f(y)` for `y ≥ threshold`.
#[derive(Debug, Clone)]
pub struct GrowthFunction {
    pub name: String,
    pub n: u64,
    pub d: usize,
    /// `f(0), …, f(ℓ)` as `d`-digit base-`N` numbers.
    pub values: Vec<RadixNumber>,
    /// Growth factor `num/den > 1`.
    pub growth: (u64, u64),
    pub threshold: usize,
}

impl GrowthFunction {
    /// Fibonacci over the `FIB` table, growth `3/2` from `y = 4`.
    pub fn fib(t: &TableSet) -> Result<Self, InverseError> {
        let s = t.fib.as_ref().ok_or(InverseError::MissingSequence(t.n))?;
        Ok(Self::from_sequence("fib", t.n, &s.values, (3, 2), 4))
    }

    /// Factorial over the `FACT` table, growth `2` from `y = 2`.
    pub fn fact(t: &TableSet) -> Result<Self, InverseError> {
        let s = t.fact.as_ref().ok_or(InverseError::MissingSequence(t.n))?;
        Ok(Self::from_sequence("fact", t.n, &s.values, (2, 1), 2))
    }

    fn from_sequence(
        name: &str,
        n: u64,
        values: &[RadixNumber],
        growth: (u64, u64),
        threshold: usize,
    ) -> Self {
        GrowthFunction {
            name: name.into(),
            n,
            d: values[0].width(),
            values: values.to_vec(),
            growth,
            threshold,
        }
    }

    /// Tabulates a host function until it reaches `N^d`.
    pub fn from_fn(
        name: &str,
        n: u64,
        d: usize,
        growth: (u64, u64),
        threshold: usize,
        f: impl Fn(u64) -> u128,
    ) -> Self {
        let mut values = Vec::new();
        let mut y = 0;
        while let OpResult::Value(v) = to_radix(f(y), n, d) {
            values.push(v);
            y += 1;
        }
        GrowthFunction {
            name: name.into(),
            n,
            d,
            values,
            growth,
            threshold,
        }
    }

    /// `ℓ`, the last `y` with `f(y) < N^d`.
    pub fn last(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// Unit-cost evaluation; overflow past `ℓ`.
    pub fn eval(&self, m: &mut Meter, y: u64) -> Result<OpResult, InverseError> {
        m.charge(1)?;
        Ok(self
            .values
            .get(y as usize)
            .cloned()
            .map_or(OpResult::Overflow, OpResult::Value))
    }

    /// Bucket-size bound `K′ = K + ⌈(2d+3)/log₂ c⌉`, the ceiling computed
    /// exactly as the least `k` with `c^k ≥ 2^{2d+3}`.
    pub fn bucket_bound(&self) -> usize {
        let (num, den) = (self.growth.0 as u128, self.growth.1 as u128);
        let target = 1u128 << (2 * self.d + 3);
        let (mut p, mut q, mut k) = (1u128, 1u128, 0usize);
        while p < target * q {
            p *= num;
            q *= den;
            k += 1;
        }
        self.threshold + k
    }
}

fn expect_shape(x: &RadixNumber, base: u64, width: usize) -> Result<(), InverseError> {
    if x.base != base || x.width() != width {
        return Err(InverseError::Shape {
            base,
            expected: width,
        });
    }
    Ok(())
}

/// `i(x) = j·⌈log₂N⌉ + LOG2[x_j]` with `j` the leading nonzero position;
/// `i(0)` is clamped to 0.
fn bucket_clamped(t: &TableSet, m: &mut Meter, x: &RadixNumber) -> Result<u64, InverseError> {
    let mut offset = 0;
    let mut lead_offset = 0;
    let mut lead = 0;
    for &digit in &x.digits {
        let z = m.is_zero(digit)?;
        lead = m.select(z, digit, lead)?;
        lead_offset = m.select(z, offset, lead_offset)?;
        offset = m.add(offset, t.ceil_log2_n)?;
    }
    let zero = m.is_zero(lead)?;
    let safe = m.select(zero, lead, 1)?;
    let log = m.load(&t.log2, safe)?;
    Ok(m.add(lead_offset, log)?)
}

/// Bucket index of `x ≥ 1` given as `d` base-`N` digits.
pub fn bucket_index(t: &TableSet, m: &mut Meter, x: &RadixNumber) -> Result<u64, InverseError> {
    if x.base != t.n {
        return Err(InverseError::Shape {
            base: t.n,
            expected: x.width(),
        });
    }
    if x.is_zero() {
        return Err(InverseError::Zero);
    }
    bucket_clamped(t, m, x)
}

fn ordering(t: &TableSet, m: &mut Meter, x: &RadixNumber, y: &RadixNumber) -> Result<Ordering, InverseError> {
    match standard_op(t, m, Op::Compare, x, y, None)? {
        OpOutput::Order(o) => Ok(o),
        OpOutput::Number(_) => Err(ArithError::Internal("compare returned a number").into()),
    }
}

/// The bucket starts and the clamping arrays a query reads.
#[derive(Debug, Clone)]
pub struct InverseIndex {
    /// `START[b]`: least `y` with `i(f(y)) ≥ b`, for `b ≤ q + 1`.
    pub start: Table,
    /// Highest bucket, `i(N^d − 1)`.
    pub q: u64,
    pub bucket_bound: usize,
    /// `ℓ`.
    pub last: u64,
    /// `min(y, ℓ)` for every candidate position.
    pub clamp: Table,
    /// `1` if `y ≤ ℓ`, else `0`.
    pub inside: Table,
    pub build_cost: CostMeter,
}

impl InverseIndex {
    /// Number of entries in bucket `b` (before completion).
    pub fn bucket_len(&self, b: usize) -> u64 {
        self.start.data[b + 1] - self.start.data[b]
    }
}

/// Preprocessing sweep. Verifies monotonicity and the growth witnesses, and
/// that no bucket exceeds `K′`.
pub fn build_inverse_index(f: &GrowthFunction, t: &TableSet) -> Result<InverseIndex, InverseError> {
    let mut m = Meter::new(t.content_bound);
    let (num, den) = (f.growth.0 as u128, f.growth.1 as u128);
    for y in 0..f.values.len() - 1 {
        let (a, b) = (f.values[y].value(), f.values[y + 1].value());
        if b < a || (y >= f.threshold && b * den <= num * a) {
            return Err(InverseError::GrowthViolation { y });
        }
    }
    // q = i(N^d − 1): every digit is PRED[N]
    let top = m.load(&t.pred, t.n)?;
    let all_top = RadixNumber {
        base: t.n,
        digits: vec![top; f.d],
    };
    let q = bucket_clamped(t, &mut m, &all_top)?;
    let mut start = vec![0u64; q as usize + 2];
    let mut next_bucket = 0u64;
    let mut y = 0u64;
    loop {
        let v = match f.eval(&mut m, y)? {
            OpResult::Value(v) => v,
            OpResult::Overflow => break,
        };
        let b = bucket_clamped(t, &mut m, &v)?;
        while next_bucket <= b {
            m.charge(2)?;
            start[next_bucket as usize] = y;
            next_bucket = m.add(next_bucket, 1)?;
        }
        y = m.add(y, 1)?;
    }
    // completion: empty trailing buckets start past the domain
    while next_bucket <= q + 1 {
        m.charge(2)?;
        start[next_bucket as usize] = y;
        next_bucket = m.add(next_bucket, 1)?;
    }
    let last = y - 1;
    let bound = f.bucket_bound();
    for b in 0..=q as usize {
        let len = start[b + 1] - start[b];
        if len > bound as u64 {
            return Err(InverseError::BucketTooLarge {
                bucket: b,
                len,
                bound,
            });
        }
    }
    let span = last as usize + bound + 2;
    let mut clamp = vec![0u64; span];
    let mut inside = vec![0u64; span];
    let mut c = 0u64;
    for pos in 0..span {
        m.charge(3)?;
        clamp[pos] = c;
        inside[pos] = u64::from(pos as u64 <= last);
        if (pos as u64) < last {
            c = m.add(c, 1)?;
        }
    }
    Ok(InverseIndex {
        start: Table::new("START", start),
        q,
        bucket_bound: bound,
        last,
        clamp: Table::new("CLAMP", clamp),
        inside: Table::new("IN", inside),
        build_cost: m.counts,
    })
}

/// `f⁻¹(x)` for `x < N^d`: `0` when `x ≤ f(0)`, otherwise the start of
/// bucket `i(x)` plus the number of its `K′ + 1` candidates with `f(y) < x`.
pub fn inverse_eval(
    idx: &InverseIndex,
    f: &GrowthFunction,
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
) -> Result<u64, InverseError> {
    expect_shape(x, f.n, f.d)?;
    let f0 = match f.eval(m, 0)? {
        OpResult::Value(v) => v,
        OpResult::Overflow => return Ok(0),
    };
    let above = u64::from(ordering(t, m, x, &f0)? == Ordering::Greater);
    let b = bucket_clamped(t, m, x)?;
    let first = m.load(&idx.start, b)?;
    let mut count = 0;
    for k in 0..=idx.bucket_bound as u64 {
        let pos = m.add(first, k)?;
        let y = m.load(&idx.clamp, pos)?;
        let inside = m.load(&idx.inside, pos)?;
        let value = match f.eval(m, y)? {
            OpResult::Value(v) => v,
            OpResult::Overflow => return Err(ArithError::Internal("clamped y left the domain").into()),
        };
        let below = u64::from(ordering(t, m, &value, x)? == Ordering::Less);
        let hit = digit_mul(t, m, inside, below)?;
        count = m.add(count, hit)?;
    }
    let answer = m.add(first, count)?;
    Ok(m.select(above, 0, answer)?)
}

/// Tables, growth functions and indexes for `Fib⁻¹` and `Fact⁻¹`.
#[derive(Debug, Clone)]
pub struct InverseOps {
    pub tables: TableSet,
    pub fib: GrowthFunction,
    pub fib_index: InverseIndex,
    pub fact: GrowthFunction,
    pub fact_index: InverseIndex,
}

impl InverseOps {
    pub fn new(n: u64, d: usize) -> Result<Self, InverseError> {
        let tables = TableSet::build(n, d)
            .and_then(|t| t.with_sequences(d))
            .map_err(|e| ArithError::Table(e.to_string()))?;
        let fib = GrowthFunction::fib(&tables)?;
        let fact = GrowthFunction::fact(&tables)?;
        let fib_index = build_inverse_index(&fib, &tables)?;
        let fact_index = build_inverse_index(&fact, &tables)?;
        Ok(InverseOps {
            tables,
            fib,
            fib_index,
            fact,
            fact_index,
        })
    }

    pub fn meter(&self) -> Meter {
        Meter::new(self.tables.content_bound)
    }

    pub fn fib_inverse(&self, m: &mut Meter, x: &RadixNumber) -> Result<u64, InverseError> {
        inverse_eval(&self.fib_index, &self.fib, &self.tables, m, x)
    }

    pub fn fact_inverse(&self, m: &mut Meter, x: &RadixNumber) -> Result<u64, InverseError> {
        inverse_eval(&self.fact_index, &self.fact, &self.tables, m, x)
    }
}

/// `f⁻¹` as a unit-cost primitive on `d + 1`-digit operands, answering
/// `ℓ + 1` for anything at or above `N^d`.
pub fn inverse_primitive<'a>(
    idx: &'a InverseIndex,
    f: &'a GrowthFunction,
    t: &'a TableSet,
) -> impl FnMut(&mut Meter, &RadixNumber) -> Result<u64, InverseError> + 'a {
    move |m: &mut Meter, x: &RadixNumber| {
        m.charge(1)?;
        expect_shape(x, f.n, f.d + 1)?;
        if x.digits[f.d] != 0 {
            return Ok(idx.last + 1);
        }
        let low = RadixNumber {
            base: f.n,
            digits: x.digits[..f.d].to_vec(),
        };
        let mut scratch = Meter::new(m.bound());
        inverse_eval(idx, f, t, &mut scratch, &low)
    }
}

/// Output of [`reconstruct_f`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// `f(0), …, f(ℓ)` as `d`-digit numbers.
    pub values: Vec<RadixNumber>,
    pub last: u64,
    pub cost: CostMeter,
}

/// Rebuilds `f` on `[0, ℓ]` from a unit-cost `f⁻¹`. `f(y)` for `y ≥ K` is
/// the largest `x` with `f⁻¹(x) = y`, found by binary search on
/// `[f(y−1) + 1, N^d]` keeping `f⁻¹(b₀) = y < f⁻¹(b₁)`. The `K` initial
/// values are given.
pub fn reconstruct_f(
    t: &TableSet,
    d: usize,
    initial: &[u128],
    f_inv: &mut dyn FnMut(&mut Meter, &RadixNumber) -> Result<u64, InverseError>,
) -> Result<Reconstruction, InverseError> {
    let mut m = Meter::new(t.content_bound);
    let n = t.n;
    let wide = d + 1;
    let mut limit = vec![0u64; wide];
    limit[d] = m.mov(1)?;
    let limit = RadixNumber {
        base: n,
        digits: limit,
    };
    let mut one = vec![0u64; wide];
    one[0] = 1;

    let past = f_inv(&mut m, &limit)?;
    let last = m.load(&t.pred, past)?;
    let mut values: Vec<RadixNumber> = Vec::with_capacity(past as usize);
    for &v in initial.iter().take(past as usize) {
        m.charge(d as u64)?;
        match to_radix(v, n, wide) {
            OpResult::Value(r) => values.push(r),
            OpResult::Overflow => return Err(InverseError::Inconsistent { y: values.len() }),
        }
    }
    let mut y = values.len();
    while y as u64 <= last {
        let (b0, carry) = add_base_n(t, &mut m, &values[y - 1].digits, &one)?;
        if carry != 0 {
            return Err(InverseError::Inconsistent { y });
        }
        let mut b0 = RadixNumber {
            base: n,
            digits: b0,
        };
        let mut b1 = limit.clone();
        let r0 = f_inv(&mut m, &b0)?;
        m.charge(2)?;
        if r0 != y as u64 {
            return Err(InverseError::Inconsistent { y });
        }
        loop {
            // continue while b₀ + 1 < b₁
            let (succ, _) = add_base_n(t, &mut m, &b0.digits, &one)?;
            let succ = RadixNumber {
                base: n,
                digits: succ,
            };
            if ordering(t, &mut m, &succ, &b1)? != Ordering::Less {
                break;
            }
            let mid = midpoint(t, &mut m, &b0, &b1)?;
            let r = f_inv(&mut m, &mid)?;
            m.charge(2)?;
            match r.cmp(&(y as u64)) {
                Ordering::Equal => b0 = mid,
                Ordering::Greater => b1 = mid,
                Ordering::Less => return Err(InverseError::Inconsistent { y }),
            }
        }
        values.push(b0);
        y += 1;
    }
    let values = values
        .into_iter()
        .map(|v| {
            v.resized(d).ok_or(InverseError::Inconsistent { y: 0 })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Reconstruction {
        values,
        last,
        cost: m.counts,
    })
}

/// `⌊(a + b)/2⌋` through base `B`.
fn midpoint(
    t: &TableSet,
    m: &mut Meter,
    a: &RadixNumber,
    b: &RadixNumber,
) -> Result<RadixNumber, InverseError> {
    let (sum, carry) = add_base_n(t, m, &a.digits, &b.digits)?;
    if carry != 0 {
        return Err(ArithError::Internal("midpoint sum carried out").into());
    }
    let sum = RadixNumber {
        base: t.n,
        digits: sum,
    };
    let in_b = convert_n_to_b(t, m, &sum)?;
    let (half, _) = div_digits_by_digit(t, m, &in_b.digits, 2)?;
    let half = RadixNumber {
        base: t.b,
        digits: half,
    };
    match convert_b_to_n(t, m, &half, a.width())? {
        OpResult::Value(v) => Ok(v),
        OpResult::Overflow => Err(ArithError::Internal("midpoint overflowed").into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(x: u128, n: u64, d: usize) -> RadixNumber {
        to_radix(x, n, d).number().unwrap().clone()
    }

    fn fib_u(y: u64) -> u128 {
        let (mut a, mut b) = (0u128, 1u128);
        for _ in 0..y {
            (a, b) = (b, a + b);
        }
        a
    }

    #[test]
    fn bucket_index_examples() {
        let t = TableSet::build(64, 2).unwrap();
        let mut m = Meter::new(t.content_bound);
        assert_eq!(bucket_index(&t, &mut m, &num(37, 64, 2)).unwrap(), 5);
        assert_eq!(bucket_index(&t, &mut m, &num(64, 64, 2)).unwrap(), 6);
        assert_eq!(bucket_index(&t, &mut m, &num(0, 64, 2)), Err(InverseError::Zero));
        for x in 1..4096u128 {
            let i = bucket_index(&t, &mut m, &num(x, 64, 2)).unwrap() as i64;
            let exact = 127 - x.leading_zeros() as i64;
            assert!((i - exact).abs() <= 3, "x={x}");
        }
    }

    #[test]
    fn fib_domain_and_examples() {
        let ops = InverseOps::new(16, 2).unwrap();
        assert_eq!(ops.fib.last(), 13);
        let mut m = ops.meter();
        let q = |m: &mut Meter, x| ops.fib_inverse(m, &num(x, 16, 2)).unwrap();
        assert_eq!(q(&mut m, 13), 7);
        assert_eq!(q(&mut m, 14), 8);
        assert_eq!(q(&mut m, 0), 0);
        assert_eq!(q(&mut m, 1), 1);
        assert_eq!(q(&mut m, 255), 14);
        assert_eq!(ops.fact_inverse(&mut m, &num(1, 16, 2)).unwrap(), 0);
        assert_eq!(ops.fact_inverse(&mut m, &num(7, 16, 2)).unwrap(), 4);
    }

    #[test]
    fn powers_of_two_have_own_buckets() {
        let t = TableSet::build(16, 2).unwrap();
        let f = GrowthFunction::from_fn("pow2", 16, 2, (3, 2), 0, |y| 1u128 << y);
        let idx = build_inverse_index(&f, &t).unwrap();
        for y in 0..=f.last() as usize {
            assert_eq!(idx.start.data[y], y as u64);
            assert_eq!(idx.bucket_len(y), 1);
        }
    }

    #[test]
    fn growth_violation_detected() {
        let t = TableSet::build(16, 2).unwrap();
        let f = GrowthFunction::from_fn("slow", 16, 2, (2, 1), 0, |y| (y as u128 + 1) * 3);
        assert!(matches!(
            build_inverse_index(&f, &t),
            Err(InverseError::GrowthViolation { .. })
        ));
    }

    #[test]
    fn reconstruct_small() {
        let ops = InverseOps::new(16, 2).unwrap();
        let mut prim = inverse_primitive(&ops.fib_index, &ops.fib, &ops.tables);
        let r = reconstruct_f(&ops.tables, 2, &[0, 1, 1, 2], &mut prim).unwrap();
        assert_eq!(r.last, 13);
        let got: Vec<u128> = r.values.iter().map(|v| v.value()).collect();
        let want: Vec<u128> = (0..=13).map(fib_u).collect();
        assert_eq!(got, want);
        let mut prim = inverse_primitive(&ops.fact_index, &ops.fact, &ops.tables);
        let r = reconstruct_f(&ops.tables, 2, &[1, 1], &mut prim).unwrap();
        let got: Vec<u128> = r.values.iter().map(|v| v.value()).collect();
        assert_eq!(got, vec![1, 1, 2, 6, 24, 120]);
    }

    #[test]
    fn bound_formula() {
        let t = TableSet::build(16, 2).unwrap().with_sequences(2).unwrap();
        // ⌈7 / log₂ 1.5⌉ = 12, ⌈7 / 1⌉ = 7
        assert_eq!(GrowthFunction::fib(&t).unwrap().bucket_bound(), 16);
        assert_eq!(GrowthFunction::fact(&t).unwrap().bucket_bound(), 9);
    }
}
