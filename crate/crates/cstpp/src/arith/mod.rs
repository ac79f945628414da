//! Constant-time arithmetic on base-`N` numbers of fixed degree.
//!
//! Operands arrive as `d` digits in base `N`. Standard mode converts them to
//! `2d` digits in base `B = ⌈√N⌉`, runs a base-`B` kernel against tables of
//! size `O(N)`, and converts back. Reduced mode ([`reduced`]) goes through a
//! second reference integer `N₁ = ⌈N^{1/c}⌉` instead.

pub mod division;
pub mod kernels;
pub mod reduced;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meter::{CostMeter, Meter, MeterError};
use crate::radix::{normalize, to_radix, OpResult, PseudoDigits, RadixError, RadixNumber};
use crate::tables::TableSet;

pub use division::{
    div_by_prefixes, div_large, extract_prefix, normalize_divisor, trial_quotient,
    DivisionState, NormalizedDivisor,
};
pub use kernels::div_by_digit;
pub use reduced::{reduced_op, setup_reduced, ReducedSetup};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("dividend is below the divisor")]
    DividendBelowDivisor,
    #[error("expected base {expected}, got {found}")]
    BaseMismatch { expected: u64, found: u64 },
    #[error("operand widths differ: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("operand {value} does not fit {width} digits in base {base}")]
    OperandTooLarge { value: u128, base: u64, width: usize },
    #[error("reduced mode needs N ≥ 2^{c}·{d}, got N = {n}")]
    BelowThreshold { n: u64, c: u32, d: usize },
    #[error("root order {0} is outside the supported range 1..=8")]
    UnsupportedRoot(u32),
    #[error("table construction failed: {0}")]
    Table(String),
    #[error("internal invariant broken: {0}")]
    Internal(&'static str),
    #[error(transparent)]
    Meter(#[from] MeterError),
    #[error(transparent)]
    Radix(#[from] RadixError),
}

pub(crate) fn expect_base(x: &RadixNumber, b: u64) -> Result<(), ArithError> {
    if x.base != b {
        return Err(ArithError::BaseMismatch {
            expected: b,
            found: x.base,
        });
    }
    Ok(())
}

fn same_width(x: &RadixNumber, y: &RadixNumber) -> Result<(), ArithError> {
    if x.width() != y.width() {
        return Err(ArithError::WidthMismatch {
            left: x.width(),
            right: y.width(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Compare,
    Pred,
}

impl Op {
    pub const ALL: [Op; 7] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::Mod,
        Op::Compare,
        Op::Pred,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Mod => "mod",
            Op::Compare => "compare",
            Op::Pred => "pred",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Op::Pred => 1,
            _ => 2,
        }
    }

    /// Output width for operands of width `w`: `w+1` for add, `2w` for mul,
    /// `w` otherwise.
    pub fn default_width(self, w: usize) -> usize {
        match self {
            Op::Add => w + 1,
            Op::Mul => 2 * w,
            _ => w,
        }
    }

    /// Exact host-side result for numeric operations, used by oracles and
    /// the CLI; `None` for compare and for a zero divisor.
    pub fn reference(self, x: u128, y: u128) -> Option<u128> {
        match self {
            Op::Add => Some(x + y),
            Op::Sub => Some(x.saturating_sub(y)),
            Op::Mul => Some(x * y),
            Op::Div => x.checked_div(y),
            Op::Mod => x.checked_rem(y),
            Op::Pred => Some(x.saturating_sub(1)),
            Op::Compare => None,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Op::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| format!("unknown operation `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpOutput {
    Number(OpResult),
    Order(Ordering),
}

impl OpOutput {
    pub fn number(&self) -> Option<&OpResult> {
        match self {
            OpOutput::Number(r) => Some(r),
            OpOutput::Order(_) => None,
        }
    }

    pub fn order(&self) -> Option<Ordering> {
        match self {
            OpOutput::Order(o) => Some(*o),
            OpOutput::Number(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Reduced { c: u32 },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Standard => f.write_str("standard"),
            Mode::Reduced { c } => write!(f, "reduced(c={c})"),
        }
    }
}

// ---------------------------------------------------------------------------
// base-B public wrappers

fn base_b_pair(t: &TableSet, x: &RadixNumber, y: &RadixNumber) -> Result<(), ArithError> {
    expect_base(x, t.b)?;
    expect_base(y, t.b)?;
    same_width(x, y)
}

fn in_base_b(t: &TableSet, digits: Vec<u64>) -> RadixNumber {
    RadixNumber { base: t.b, digits }
}

/// `x + y` in base `B`, one digit wider than the operands.
pub fn add_d(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
    y: &RadixNumber,
) -> Result<RadixNumber, ArithError> {
    base_b_pair(t, x, y)?;
    Ok(in_base_b(t, kernels::add_digits(t, m, &x.digits, &y.digits)?))
}

/// `max(0, x − y)` in base `B`.
pub fn sub_d(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
    y: &RadixNumber,
) -> Result<RadixNumber, ArithError> {
    base_b_pair(t, x, y)?;
    Ok(in_base_b(t, kernels::sub_digits(t, m, &x.digits, &y.digits)?))
}

pub fn compare_d(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
    y: &RadixNumber,
) -> Result<Ordering, ArithError> {
    base_b_pair(t, x, y)?;
    kernels::compare_digits(t, m, &x.digits, &y.digits)
}

/// `x · y` in base `B`, twice the operand width.
pub fn mul_d(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
    y: &RadixNumber,
) -> Result<RadixNumber, ArithError> {
    base_b_pair(t, x, y)?;
    let w = 2 * x.width();
    Ok(in_base_b(t, kernels::mul_digits(t, m, &x.digits, &y.digits, w)?))
}

// ---------------------------------------------------------------------------
// conversions

/// Base `N` (width `w`) to base `B` (width `2w`) by the decreasing Horner
/// recurrence `X_i = X_{i+1}·N + x_i`.
pub fn convert_n_to_b(
    t: &TableSet,
    m: &mut Meter,
    x: &RadixNumber,
) -> Result<RadixNumber, ArithError> {
    expect_base(x, t.n)?;
    Ok(in_base_b(t, n_to_b_digits(t, m, &x.digits)?))
}

fn n_to_b_digits(t: &TableSet, m: &mut Meter, x: &[u64]) -> Result<Vec<u64>, ArithError> {
    let width = 2 * x.len();
    let mut acc = vec![0u64; width];
    for &digit in x.iter().rev() {
        let mut entries = vec![0u64; width];
        kernels::convolve_into(t, m, &acc, &t.n_in_b, &mut entries)?;
        let lo = m.load(&t.mod_b, digit)?;
        let hi = m.load(&t.div_b, digit)?;
        entries[0] = m.add(entries[0], lo)?;
        if width > 1 {
            entries[1] = m.add(entries[1], hi)?;
        }
        let p = PseudoDigits::new(t.b, entries, 4)?;
        acc = normalize(&p, t, m)?.digits;
    }
    Ok(acc)
}

/// Base `B` to base `N` with `out_width` digits by Horner's rule in base
/// `N`: each `N`-digit `v` is multiplied by `B` as `T1[v]·N + T0[v]`.
pub fn convert_b_to_n(
    t: &TableSet,
    m: &mut Meter,
    y: &RadixNumber,
    out_width: usize,
) -> Result<OpResult, ArithError> {
    expect_base(y, t.b)?;
    b_to_n_digits(t, m, &y.digits, out_width)
}

fn b_to_n_digits(
    t: &TableSet,
    m: &mut Meter,
    y: &[u64],
    out_width: usize,
) -> Result<OpResult, ArithError> {
    let mut r = vec![0u64; out_width];
    let mut overflow = 0;
    for &digit in y.iter().rev() {
        let mut carry = digit;
        for slot in r.iter_mut() {
            let lo = m.load(&t.t0, *slot)?;
            let hi = m.load(&t.t1, *slot)?;
            let s = m.add(lo, carry)?;
            *slot = m.load(&t.mod_n, s)?;
            let c = m.load(&t.div_n, s)?;
            carry = m.add(hi, c)?;
        }
        let fits = m.is_zero(carry)?;
        overflow = m.select(fits, 1, overflow)?;
    }
    Ok(if overflow == 0 {
        OpResult::Value(RadixNumber {
            base: t.n,
            digits: r,
        })
    } else {
        OpResult::Overflow
    })
}

// ---------------------------------------------------------------------------
// base-N operations

/// `max(0, x − 1)` directly on base-`N` digits with `PRED`; `PRED[N] = N−1`
/// supplies the borrow digit.
pub fn pred_d(t: &TableSet, m: &mut Meter, x: &RadixNumber) -> Result<RadixNumber, ArithError> {
    expect_base(x, t.n)?;
    let mut borrow = 1;
    let mut out = Vec::with_capacity(x.width());
    for &digit in &x.digits {
        let z = m.is_zero(digit)?;
        let idx = m.select(z, digit, t.n)?;
        let lowered = m.load(&t.pred, idx)?;
        out.push(m.select(borrow, digit, lowered)?);
        borrow = m.select(borrow, 0, z)?;
    }
    // x = 0 borrowed through every digit
    for d in out.iter_mut() {
        *d = m.select(borrow, *d, 0)?;
    }
    Ok(RadixNumber {
        base: t.n,
        digits: out,
    })
}

fn fit_width(r: RadixNumber, width: usize) -> OpResult {
    match r.resized(width) {
        Some(v) => OpResult::Value(v),
        None => OpResult::Overflow,
    }
}

/// Quotient and remainder of base-`N` numbers of equal width.
pub(crate) fn divmod_base_n(
    t: &TableSet,
    m: &mut Meter,
    x: &[u64],
    y: &[u64],
) -> Result<(Vec<u64>, Vec<u64>), ArithError> {
    let w = x.len();
    let xb = n_to_b_digits(t, m, x)?;
    let yb = n_to_b_digits(t, m, y)?;
    let (q, r) = division::div_large_digits(t, m, &xb, &yb)?;
    let unwrap = |res: OpResult| match res {
        OpResult::Value(v) => Ok(v.digits),
        OpResult::Overflow => Err(ArithError::Internal("quotient wider than dividend")),
    };
    let q = unwrap(b_to_n_digits(t, m, &q, w)?)?;
    let r = unwrap(b_to_n_digits(t, m, &r, w)?)?;
    Ok((q, r))
}

/// One standard-mode operation on base-`N` operands of equal width.
/// `out_width` overrides the default output width; results that do not fit
/// come back as the overflow sentinel.
pub fn standard_op(
    t: &TableSet,
    m: &mut Meter,
    op: Op,
    x: &RadixNumber,
    y: &RadixNumber,
    out_width: Option<usize>,
) -> Result<OpOutput, ArithError> {
    expect_base(x, t.n)?;
    expect_base(y, t.n)?;
    let w = x.width();
    let out = out_width.unwrap_or(op.default_width(w));
    if op == Op::Pred {
        return Ok(OpOutput::Number(fit_width(pred_d(t, m, x)?, out)));
    }
    same_width(x, y)?;
    let xb = n_to_b_digits(t, m, &x.digits)?;
    let yb = n_to_b_digits(t, m, &y.digits)?;
    let result = match op {
        Op::Add => kernels::add_digits(t, m, &xb, &yb)?,
        Op::Sub => kernels::sub_digits(t, m, &xb, &yb)?,
        Op::Mul => kernels::mul_digits(t, m, &xb, &yb, 4 * w)?,
        Op::Div => division::div_large_digits(t, m, &xb, &yb)?.0,
        Op::Mod => division::div_large_digits(t, m, &xb, &yb)?.1,
        Op::Compare => {
            return Ok(OpOutput::Order(kernels::compare_digits(t, m, &xb, &yb)?));
        }
        Op::Pred => unreachable!("handled above"),
    };
    Ok(OpOutput::Number(b_to_n_digits(t, m, &result, out)?))
}

/// Full `2d`-digit product, used while building `FACT`.
pub(crate) fn mul_base_n(
    t: &TableSet,
    m: &mut Meter,
    a: &RadixNumber,
    b: &RadixNumber,
) -> Result<RadixNumber, ArithError> {
    match standard_op(t, m, Op::Mul, a, b, None)? {
        OpOutput::Number(OpResult::Value(v)) => Ok(v),
        _ => Err(ArithError::Internal("full-width product overflowed")),
    }
}

// ---------------------------------------------------------------------------
// contexts

#[derive(Debug, Clone)]
enum Engine {
    Standard(TableSet),
    Reduced(Box<ReducedSetup>),
}

/// Everything an operation call needs: the tables for `N` (or for `N₁` in
/// reduced mode) and the degree `d` of the operands.
#[derive(Debug, Clone)]
pub struct OpContext {
    n: u64,
    d: usize,
    mode: Mode,
    engine: Engine,
    setup_cost: CostMeter,
}

impl OpContext {
    pub fn standard(n: u64, d: usize) -> Result<Self, ArithError> {
        let tables = TableSet::build(n, d).map_err(|e| ArithError::Table(e.to_string()))?;
        Ok(Self::from_tables(tables, d))
    }

    /// Wraps prebuilt tables, for instance ones loaded from a dump.
    pub fn from_tables(tables: TableSet, d: usize) -> Self {
        OpContext {
            n: tables.n,
            d,
            mode: Mode::Standard,
            setup_cost: tables.build_meter(),
            engine: Engine::Standard(tables),
        }
    }

    /// Reduced mode for `c ≥ 2`; `c = 1` falls back to standard mode.
    pub fn reduced(n: u64, c: u32, d: usize) -> Result<Self, ArithError> {
        if c == 1 {
            return Self::standard(n, d);
        }
        let setup = setup_reduced(n, c, d)?;
        Ok(OpContext {
            n,
            d,
            mode: Mode::Reduced { c },
            setup_cost: setup.cost,
            engine: Engine::Reduced(Box::new(setup)),
        })
    }

    pub fn new(n: u64, d: usize, mode: Mode) -> Result<Self, ArithError> {
        match mode {
            Mode::Standard => Self::standard(n, d),
            Mode::Reduced { c } => Self::reduced(n, c, d),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The mode actually in use (`c = 1` reports standard).
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Tables the operations read: those for `N`, or for `N₁` in reduced mode.
    pub fn tables(&self) -> &TableSet {
        match &self.engine {
            Engine::Standard(t) => t,
            Engine::Reduced(s) => &s.nested,
        }
    }

    pub fn reduced_setup(&self) -> Option<&ReducedSetup> {
        match &self.engine {
            Engine::Standard(_) => None,
            Engine::Reduced(s) => Some(s),
        }
    }

    /// Metered preprocessing cost.
    pub fn setup_cost(&self) -> CostMeter {
        self.setup_cost
    }

    /// A fresh meter with the operation-phase content bound.
    pub fn meter(&self) -> Meter {
        match &self.engine {
            Engine::Standard(t) => Meter::new(t.content_bound),
            Engine::Reduced(s) => Meter::new(s.op_bound),
        }
    }

    /// `x` as `d` digits in base `N`.
    pub fn encode(&self, x: u128) -> Result<RadixNumber, ArithError> {
        match to_radix(x, self.n, self.d) {
            OpResult::Value(v) => Ok(v),
            OpResult::Overflow => Err(ArithError::OperandTooLarge {
                value: x,
                base: self.n,
                width: self.d,
            }),
        }
    }

    /// Applies `op` with the default output width.
    pub fn apply(
        &self,
        m: &mut Meter,
        op: Op,
        x: &RadixNumber,
        y: &RadixNumber,
    ) -> Result<OpOutput, ArithError> {
        self.dispatch(m, op, x, y, None)
    }

    /// Applies `op` with output width `out_width`, returning the overflow
    /// sentinel when the result does not fit.
    pub fn apply_width(
        &self,
        m: &mut Meter,
        op: Op,
        x: &RadixNumber,
        y: &RadixNumber,
        out_width: usize,
    ) -> Result<OpOutput, ArithError> {
        self.dispatch(m, op, x, y, Some(out_width))
    }

    fn dispatch(
        &self,
        m: &mut Meter,
        op: Op,
        x: &RadixNumber,
        y: &RadixNumber,
        out_width: Option<usize>,
    ) -> Result<OpOutput, ArithError> {
        for v in [x, y] {
            expect_base(v, self.n)?;
            if v.width() != self.d {
                return Err(ArithError::WidthMismatch {
                    left: v.width(),
                    right: self.d,
                });
            }
        }
        match &self.engine {
            Engine::Standard(t) => standard_op(t, m, op, x, y, out_width),
            Engine::Reduced(s) => reduced_op(s, m, op, x, y, out_width),
        }
    }

    /// Encodes host integers, runs `op` on a fresh meter and returns the
    /// output with the operation-phase cost.
    pub fn run(&self, op: Op, x: u128, y: u128) -> Result<(OpOutput, CostMeter), ArithError> {
        let (xe, ye) = (self.encode(x)?, self.encode(y)?);
        let mut m = self.meter();
        let out = self.apply(&mut m, op, &xe, &ye)?;
        Ok((out, m.counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx16() -> OpContext {
        OpContext::standard(16, 2).unwrap()
    }

    #[test]
    fn op_names_round_trip() {
        for op in Op::ALL {
            assert_eq!(op.name().parse::<Op>().unwrap(), op);
        }
        assert!("pow".parse::<Op>().is_err());
    }

    #[test]
    fn product_example() {
        let c = ctx16();
        let (out, _) = c.run(Op::Mul, 100, 200).unwrap();
        let v = out.number().unwrap().number().unwrap().clone();
        assert_eq!(v.to_string(), "(4,14,2,0)_16");
    }

    #[test]
    fn conversions_round_trip_exhaustive() {
        let c = ctx16();
        let t = c.tables();
        for x in 0..256u128 {
            let mut m = c.meter();
            let xn = c.encode(x).unwrap();
            let xb = convert_n_to_b(t, &mut m, &xn).unwrap();
            assert_eq!(xb.value(), x);
            assert_eq!(xb.width(), 4);
            let back = convert_b_to_n(t, &mut m, &xb, 2).unwrap();
            assert_eq!(back, OpResult::Value(xn));
        }
        let mut m = c.meter();
        let sixteen = convert_n_to_b(t, &mut m, &c.encode(16).unwrap()).unwrap();
        assert_eq!(sixteen.digits, vec![0, 0, 1, 0]);
    }

    #[test]
    fn b_to_n_reports_overflow() {
        let c = ctx16();
        let mut m = c.meter();
        let big = RadixNumber::from_digits(4, vec![0, 0, 0, 0, 1]).unwrap();
        assert_eq!(
            convert_b_to_n(c.tables(), &mut m, &big, 2).unwrap(),
            OpResult::Overflow
        );
    }

    #[test]
    fn pred_cases() {
        let c = ctx16();
        let mut m = c.meter();
        let t = c.tables();
        assert!(pred_d(t, &mut m, &c.encode(0).unwrap()).unwrap().is_zero());
        let r = pred_d(t, &mut m, &c.encode(3 * 16).unwrap()).unwrap();
        assert_eq!(r.digits, vec![15, 2]);
        for x in 0..256u128 {
            let r = pred_d(t, &mut m, &c.encode(x).unwrap()).unwrap();
            assert_eq!(r.value(), x.saturating_sub(1));
        }
    }

    #[test]
    fn custom_width_overflow() {
        let c = ctx16();
        let mut m = c.meter();
        let (x, y) = (c.encode(200).unwrap(), c.encode(100).unwrap());
        let out = c.apply_width(&mut m, Op::Add, &x, &y, 2).unwrap();
        assert_eq!(out, OpOutput::Number(OpResult::Overflow));
        let out = c.apply_width(&mut m, Op::Add, &y, &y, 2).unwrap();
        assert_eq!(out.number().unwrap().value(), Some(200));
    }

    #[test]
    fn base_b_wrappers() {
        let t = TableSet::build(256, 1).unwrap();
        let mut m = Meter::new(t.content_bound);
        let x = RadixNumber::from_digits(16, vec![15, 15]).unwrap();
        let one = RadixNumber::from_digits(16, vec![1, 0]).unwrap();
        assert_eq!(add_d(&t, &mut m, &x, &one).unwrap().to_string(), "(1,0,0)_16");
        assert_eq!(sub_d(&t, &mut m, &one, &x).unwrap().value(), 0);
        assert_eq!(compare_d(&t, &mut m, &x, &x).unwrap(), Ordering::Equal);
        assert_eq!(mul_d(&t, &mut m, &x, &x).unwrap().value(), 255 * 255);
    }

    proptest! {
        #[test]
        fn sampled_ops_match_reference(x in 0u128..1 << 30, y in 0u128..1 << 30) {
            let c = OpContext::standard(1024, 3).unwrap();
            for op in Op::ALL {
                match c.run(op, x, y) {
                    Ok((OpOutput::Number(r), _)) => prop_assert_eq!(r.value(), op.reference(x, y)),
                    Ok((OpOutput::Order(o), _)) => prop_assert_eq!(o, x.cmp(&y)),
                    Err(ArithError::DivisionByZero) => prop_assert_eq!(y, 0),
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }
}
