//! Reduced preprocessing: tables of size `O(N^{1/c})`.
//!
//! Setup computes `N₁ = ⌈N^{1/c}⌉`, the arrays `MultN_j[x] = N₁^j·x`, and a
//! full table set for `N₁` sized for `2cd`-digit operands. An operation
//! rewrites each operand in base `N₁` (Horner's rule over its base-`N`
//! digits, each split into `c` base-`N₁` digits), runs the standard procedure
//! for `N₁`, then peels base-`N` digits off the result by repeated division by
//! `N`. Each remainder `(z_0, …, z_{c−1})` is reassembled as
//! `z_0 + Σ MultN_j[z_j]`.
//!
//! Digit splitting uses `div`/`mod` as unit-cost primitives, as does the root
//! computation.

use crate::meter::{CostMeter, Meter, Table};
use crate::radix::{OpResult, RadixNumber};
use crate::tables::{compute_root, TableSet};

use super::{divmod_base_n, standard_op, ArithError, Op, OpOutput};

const MULT_NAMES: [&str; 7] = [
    "MultN_1", "MultN_2", "MultN_3", "MultN_4", "MultN_5", "MultN_6", "MultN_7",
];

#[derive(Debug, Clone)]
pub struct ReducedSetup {
    pub c: u32,
    pub n: u64,
    pub d: usize,
    pub n1: u64,
    /// `MultN_j` for `j = 1..c−1`, each over `[0, N₁)`.
    pub mult_n: Vec<Table>,
    /// `N` in base `N₁`, `c + 1` digits.
    pub n_digits: Vec<u64>,
    /// Tables for the reference integer `N₁`.
    pub nested: TableSet,
    /// Content bound during operations.
    pub op_bound: u64,
    pub cost: CostMeter,
}

/// Builds the reduced context. Requires `N ≥ 2^{cd}` so that `N₁ ≥ 2^d` and
/// the intermediate numbers keep their digit counts.
pub fn setup_reduced(n: u64, c: u32, d: usize) -> Result<ReducedSetup, ArithError> {
    if !(2..=8).contains(&c) {
        return Err(ArithError::UnsupportedRoot(c));
    }
    let threshold = (c as u64)
        .checked_mul(d as u64)
        .and_then(|e| 1u64.checked_shl(e as u32))
        .filter(|_| c as usize * d < 64);
    if threshold.is_none_or(|t| n < t) {
        return Err(ArithError::BelowThreshold { n, c, d });
    }
    let setup_bound = ((1u64 << c) + 1).saturating_mul(n);
    let mut m = Meter::new(setup_bound);
    let n1 = compute_root(n, c, &mut m)?;

    let mut mult_n = Vec::with_capacity(c as usize - 1);
    let mut power = m.mov(n1)?;
    for name in MULT_NAMES.iter().take(c as usize - 1) {
        let mut data = vec![0u64; n1 as usize];
        m.charge(1)?;
        for x in 1..n1 as usize {
            m.charge(2)?;
            data[x] = m.add(data[x - 1], power)?;
        }
        // N₁^{j+1} = N₁^j·(N₁ − 1) + N₁^j
        power = m.add(data[n1 as usize - 1], power)?;
        mult_n.push(Table::new(name, data));
    }

    let mut n_digits = Vec::with_capacity(c as usize + 1);
    let mut rest = n;
    for _ in 0..=c {
        n_digits.push(m.rem(rest, n1)?);
        rest = m.div(rest, n1)?;
    }

    let nested = TableSet::build(n1, 2 * c as usize * d)
        .map_err(|e| ArithError::Table(e.to_string()))?;
    let mut cost = m.counts;
    cost.merge(&nested.build_meter());
    let op_bound = nested.content_bound.max(2 * n);
    Ok(ReducedSetup {
        c,
        n,
        d,
        n1,
        mult_n,
        n_digits,
        nested,
        op_bound,
        cost,
    })
}

/// A base-`N` digit (`< N ≤ N₁^c`) as `c` base-`N₁` digits.
fn split_digit(s: &ReducedSetup, m: &mut Meter, digit: u64) -> Result<Vec<u64>, ArithError> {
    let mut out = Vec::with_capacity(s.c as usize);
    let mut rest = digit;
    for _ in 0..s.c {
        out.push(m.rem(rest, s.n1)?);
        rest = m.div(rest, s.n1)?;
    }
    Ok(out)
}

/// Low `width` digits of a nested result. The dropped digits are zero since
/// every Horner prefix is below `N^w`.
fn low_digits(out: OpOutput, width: usize) -> Result<Vec<u64>, ArithError> {
    match out {
        OpOutput::Number(OpResult::Value(mut v)) => {
            v.digits.truncate(width);
            Ok(v.digits)
        }
        _ => Err(ArithError::Internal("nested Horner step did not produce a number")),
    }
}

/// Base `N` (width `w`) to base `N₁` (width `c·w`) by Horner's rule
/// `X_i = X_{i+1}·N + x_i`, evaluated with the nested multiplication and
/// addition.
fn to_nested(s: &ReducedSetup, m: &mut Meter, x: &RadixNumber) -> Result<RadixNumber, ArithError> {
    let c = s.c as usize;
    let target = c * x.width();
    let w = target.max(c + 1);
    let mut n_pad = s.n_digits.clone();
    n_pad.resize(w, 0);
    let n_num = RadixNumber {
        base: s.n1,
        digits: n_pad,
    };
    let mut acc = RadixNumber::zero(s.n1, w);
    for &digit in x.digits.iter().rev() {
        let mut z = split_digit(s, m, digit)?;
        z.resize(w, 0);
        let z = RadixNumber {
            base: s.n1,
            digits: z,
        };
        let prod = standard_op(&s.nested, m, Op::Mul, &acc, &n_num, None)?;
        let prod = RadixNumber {
            base: s.n1,
            digits: low_digits(prod, w)?,
        };
        let sum = standard_op(&s.nested, m, Op::Add, &prod, &z, None)?;
        acc = RadixNumber {
            base: s.n1,
            digits: low_digits(sum, w)?,
        };
    }
    acc.digits.truncate(target);
    Ok(acc)
}

/// Base-`N₁` digits back to `out_width` base-`N` digits, or overflow.
fn join(
    s: &ReducedSetup,
    m: &mut Meter,
    z: &[u64],
    out_width: usize,
) -> Result<OpResult, ArithError> {
    let c = s.c as usize;
    let w = z.len().max(c + 1);
    let mut rest = z.to_vec();
    rest.resize(w, 0);
    let mut divisor = s.n_digits.clone();
    divisor.resize(w, 0);
    let mut out = Vec::with_capacity(out_width);
    for _ in 0..out_width {
        let (q, r) = divmod_base_n(&s.nested, m, &rest, &divisor)?;
        let mut y = r[0];
        for (j, table) in s.mult_n.iter().enumerate() {
            let part = m.load(table, r[j + 1])?;
            y = m.add(y, part)?;
        }
        out.push(y);
        rest = q;
    }
    let mut overflow = 0;
    for &digit in &rest {
        let z = m.is_zero(digit)?;
        overflow = m.select(z, 1, overflow)?;
    }
    Ok(if overflow == 0 {
        OpResult::Value(RadixNumber {
            base: s.n,
            digits: out,
        })
    } else {
        OpResult::Overflow
    })
}

/// One operation in reduced mode; results equal those of standard mode.
pub fn reduced_op(
    s: &ReducedSetup,
    m: &mut Meter,
    op: Op,
    x: &RadixNumber,
    y: &RadixNumber,
    out_width: Option<usize>,
) -> Result<OpOutput, ArithError> {
    let w = x.width();
    let out = out_width.unwrap_or(op.default_width(w));
    let xs = to_nested(s, m, x)?;
    let (inner_op, ys) = if op == Op::Pred {
        let mut one = vec![0u64; xs.width()];
        one[0] = m.mov(1)?;
        (
            Op::Sub,
            RadixNumber {
                base: s.n1,
                digits: one,
            },
        )
    } else {
        (op, to_nested(s, m, y)?)
    };
    match standard_op(&s.nested, m, inner_op, &xs, &ys, None)? {
        OpOutput::Order(o) => Ok(OpOutput::Order(o)),
        OpOutput::Number(OpResult::Value(z)) => Ok(OpOutput::Number(join(s, m, &z.digits, out)?)),
        OpOutput::Number(OpResult::Overflow) => {
            Err(ArithError::Internal("nested result exceeded its natural width"))
        }
    }
}
