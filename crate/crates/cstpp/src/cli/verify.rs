//! Self-checking suites behind `cstpp verify`.
//!
//! Each suite compares library results with an independent host
//! computation and collects every disagreement. The host side uses plain
//! `u128` arithmetic and brute-force searches only.

use std::fmt;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{normalize_divisor, trial_quotient, Op, OpContext, OpOutput};
use crate::inverse::{inverse_primitive, reconstruct_f, InverseOps};
use crate::meter::Meter;
use crate::radix::{to_radix, OpResult, RadixNumber};
use crate::ram::{check_lockstep, execute, find_program, lower_to_r, CorpusProgram, MachineState, Primitives};
use crate::tables::TableSet;
use crate::transform::{wrap_restore, WrappedProcedure};

use super::CliError;

/// Failures kept verbatim per suite; the rest are only counted.
const KEPT_FAILURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Oracle,
    ApproximationLemma,
    Restore,
    Inverse,
    Lockstep,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::ApproximationLemma => "approximation-lemma",
            Suite::Restore => "restore",
            Suite::Inverse => "inverse",
            Suite::Lockstep => "lockstep",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: u64,
    pub failure_count: u64,
    /// The first few failing cases.
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            checks: 0,
            failure_count: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.fail(describe());
        }
    }

    fn fail(&mut self, message: String) {
        self.failure_count += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(message);
        }
    }

    fn absorb(&mut self, other: SuiteReport) {
        self.checks += other.checks;
        self.failure_count += other.failure_count;
        for f in other.failures {
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push(format!("{}: {f}", other.name));
            }
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "{}: {verdict} ({} checks, {} failures)", self.name, self.checks, self.failure_count)?;
        for fail in &self.failures {
            write!(f, "\n  {fail}")?;
        }
        Ok(())
    }
}

/// Sizes used by the suites. [`SuiteConfig::default`] keeps `verify all`
/// to a few seconds in release builds.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random pairs per operation at the sampled size.
    pub oracle_samples: usize,
    pub restore_calls: usize,
    pub restore_ns: Vec<u64>,
    pub inverse_n: u64,
    pub inverse_d: usize,
    pub lockstep_ns: Vec<u64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            oracle_samples: 1000,
            restore_calls: 1000,
            restore_ns: vec![7, 64, 256],
            inverse_n: 64,
            inverse_d: 2,
            lockstep_ns: vec![7, 64],
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport, CliError> {
    match suite {
        Suite::Oracle => {
            let mut r = oracle_exhaustive(16, 2)?;
            r.absorb(oracle_sampled(1024, 3, cfg.oracle_samples, cfg.seed)?);
            r.name = suite.name().into();
            Ok(r)
        }
        Suite::ApproximationLemma => {
            let mut r = SuiteReport::new(suite.name());
            r.absorb(trial_quotient_bounds(4..=64)?);
            r.absorb(trial_quotient_brute_force(&[(2, 4..=8), (3, 4..=6)])?);
            r.absorb(normalization_carries(4..=32)?);
            Ok(r)
        }
        Suite::Restore => restore_roundtrips(&cfg.restore_ns, cfg.restore_calls, cfg.seed),
        Suite::Inverse => inverse_exhaustive(cfg.inverse_n, cfg.inverse_d),
        Suite::Lockstep => corpus_lockstep(&cfg.lockstep_ns),
        Suite::All => {
            let mut r = SuiteReport::new(suite.name());
            for s in [
                Suite::Oracle,
                Suite::ApproximationLemma,
                Suite::Restore,
                Suite::Inverse,
                Suite::Lockstep,
            ] {
                r.absorb(run_suite(s, cfg)?);
            }
            Ok(r)
        }
    }
}

/// Output widths checked per operation: the default and, where it differs,
/// the operand width (forcing the overflow sentinel on large results).
fn widths(op: Op, d: usize) -> Vec<usize> {
    let mut w = vec![op.default_width(d)];
    if w[0] != d {
        w.push(d);
    }
    w
}

fn expected_output(op: Op, x: u128, y: u128, n: u64, width: usize) -> Option<OpOutput> {
    if op == Op::Compare {
        return Some(OpOutput::Order(x.cmp(&y)));
    }
    let r = op.reference(x, y)?;
    Some(OpOutput::Number(to_radix(r, n, width)))
}

fn check_pair(r: &mut SuiteReport, ctx: &OpContext, op: Op, x: u128, y: u128) -> Result<(), CliError> {
    let (xe, ye) = (ctx.encode(x)?, ctx.encode(y)?);
    for w in widths(op, ctx.d()) {
        let mut m = ctx.meter();
        let got = ctx.apply_width(&mut m, op, &xe, &ye, w);
        match expected_output(op, x, y, ctx.n(), w) {
            Some(want) => {
                let got = got.map_err(|e| e.to_string());
                r.check(got.as_ref() == Ok(&want), || {
                    format!("{op}({x}, {y}) width {w} at N={}: got {got:?}, want {want:?}", ctx.n())
                });
            }
            None => r.check(got.is_err(), || format!("{op}({x}, 0) should fail, got {got:?}")),
        }
    }
    Ok(())
}

/// Every operand pair below `N^d` for every operation.
pub fn oracle_exhaustive(n: u64, d: usize) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new(&format!("oracle exhaustive N={n} d={d}"));
    let ctx = OpContext::standard(n, d)?;
    let limit = (n as u128).pow(d as u32);
    for op in Op::ALL {
        let ys = if op.arity() == 1 { 1 } else { limit };
        for x in 0..limit {
            for y in 0..ys {
                check_pair(&mut r, &ctx, op, x, y)?;
            }
        }
    }
    Ok(r)
}

/// `samples` seeded random pairs per operation.
pub fn oracle_sampled(n: u64, d: usize, samples: usize, seed: u64) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new(&format!("oracle sampled N={n} d={d}"));
    let ctx = OpContext::standard(n, d)?;
    let limit = (n as u128).pow(d as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for op in Op::ALL {
        for _ in 0..samples {
            let x = rng.gen_range(0..limit);
            let y = rng.gen_range(0..limit);
            check_pair(&mut r, &ctx, op, x, y)?;
        }
    }
    Ok(r)
}

/// Tables whose inner base is exactly `b`.
fn tables_with_base(b: u64) -> Result<TableSet, CliError> {
    let t = TableSet::build(b * b, 1)?;
    if t.b != b {
        return Err(CliError::Usage(format!("inner base of {} is {}, expected {b}", b * b, t.b)));
    }
    Ok(t)
}

fn digits_of(mut x: u128, b: u64, width: usize) -> RadixNumber {
    let digits = (0..width)
        .map(|_| {
            let d = (x % b as u128) as u64;
            x /= b as u128;
            d
        })
        .collect();
    RadixNumber { base: b, digits }
}

/// `q̃` for a dividend whose two leading digits are `top` and a divisor
/// whose leading digit is `v`, both padded to width `m` with zeros.
fn trial(t: &TableSet, top: u64, v: u64, m: usize) -> Result<u64, CliError> {
    let b = t.b;
    let mut u = vec![0; m + 1];
    u[m] = top / b;
    u[m - 1] = top % b;
    let mut y = vec![0; m];
    y[m - 1] = v;
    let mut meter = Meter::new(t.content_bound);
    Ok(trial_quotient(
        t,
        &mut meter,
        &RadixNumber { base: b, digits: u },
        &RadixNumber { base: b, digits: y },
    )?)
}

/// The trial quotient bound for every base in `bases` and `m ∈ {1, 2, 3}`.
///
/// The trial digit reads only the two leading dividend digits `t` and the
/// leading divisor digit `v`, so for every `(t, v)` the true quotients
/// `⌊u/y⌋` over the corresponding block of `(u, y)` lie between
/// `⌊u_min / y_max⌋` and `⌊u_max / y_min⌋` (clamped to `[1, B−1]`, which
/// `y ≤ u < B·y` already guarantees). Checking both ends covers every pair
/// in the block; for `m = 1` the block is a single pair.
pub fn trial_quotient_bounds(bases: std::ops::RangeInclusive<u64>) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("trial quotient bounds");
    for b in bases {
        let t = tables_with_base(b)?;
        let bw = b as u128;
        for v in b / 2..b {
            for top in 0..b * b {
                let q_trial = trial(&t, top, v, 1)?;
                r.check(q_trial < b, || format!("B={b} t={top} v={v}: trial {q_trial} ≥ B"));
                for m in 1..=3u32 {
                    let scale = bw.pow(m - 1);
                    let (u_min, u_max) = (top as u128 * scale, (top as u128 + 1) * scale - 1);
                    let (y_min, y_max) = (v as u128 * scale, (v as u128 + 1) * scale - 1);
                    // blocks with no pair satisfying y ≤ u < B·y
                    if u_max < y_min || u_min >= bw * y_max {
                        continue;
                    }
                    let q_trial = if m == 1 { q_trial } else { trial(&t, top, v, m as usize)? } as u128;
                    let q_lo = (u_min / y_max).max(1);
                    let q_hi = (u_max / y_min).min(bw - 1);
                    r.check(q_trial <= q_lo + 2, || {
                        format!("B={b} m={m} t={top} v={v}: trial {q_trial} exceeds quotient {q_lo} by more than 2")
                    });
                    r.check(q_hi <= q_trial, || {
                        format!("B={b} m={m} t={top} v={v}: trial {q_trial} below quotient {q_hi}")
                    });
                }
            }
        }
    }
    Ok(r)
}

/// Every pair `(u, y)` with `y ≤ u < B·y` and a normalized divisor, for
/// each `(m, bases)` given.
pub fn trial_quotient_brute_force(
    cases: &[(usize, std::ops::RangeInclusive<u64>)],
) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("trial quotient brute force");
    for (m, bases) in cases {
        let m = *m;
        for b in bases.clone() {
            let t = tables_with_base(b)?;
            let bw = b as u128;
            let y_start = (b / 2) as u128 * bw.pow(m as u32 - 1);
            for y in y_start..bw.pow(m as u32) {
                let ye = digits_of(y, b, m);
                for u in y..bw * y {
                    let ue = digits_of(u, b, m + 1);
                    let mut meter = Meter::new(t.content_bound);
                    let q_trial = trial_quotient(&t, &mut meter, &ue, &ye)? as u128;
                    let q = u / y;
                    r.check(q <= q_trial && q_trial <= q + 2 && q_trial < bw, || {
                        format!("B={b} m={m} u={u} y={y}: trial {q_trial}, quotient {q}")
                    });
                }
            }
        }
    }
    Ok(r)
}

/// Normalizing every divisor with a small leading digit, `m ≤ 3`.
pub fn normalization_carries(bases: std::ops::RangeInclusive<u64>) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("normalization carries");
    for b in bases {
        let t = tables_with_base(b)?;
        let bw = b as u128;
        for m in 1..=3usize {
            let scale = bw.pow(m as u32 - 1);
            for y in scale..(b / 2) as u128 * scale {
                let v = (y / scale) as u64;
                let mut meter = Meter::new(t.content_bound);
                let zero = RadixNumber::zero(b, m + 1);
                let nd = normalize_divisor(&t, &mut meter, &zero, &digits_of(y, b, m))?;
                let mu = b / (v + 1);
                let carries_ok = nd.carries.iter().all(|&c| c * (v + 1) < b);
                r.check(carries_ok, || format!("B={b} y={y}: carries {:?} exceed (B−1)/(v+1)", nd.carries));
                r.check(nd.mu == mu && nd.y.value() == y * mu as u128, || {
                    format!("B={b} y={y}: μ={} y′={}", nd.mu, nd.y.value())
                });
                r.check(nd.y.width() == m && nd.y.digits[m - 1] >= b / 2, || {
                    format!("B={b} y={y}: y′ digits {:?} not normalized", nd.y.digits)
                });
            }
        }
    }
    Ok(r)
}

/// A machine for `p` at `n` with its prerequisites run and host tables
/// loaded.
pub fn prepared_state(p: &CorpusProgram, n: u64) -> Result<MachineState, CliError> {
    let tables = TableSet::build(n, 1)?;
    let mut state = MachineState::new(n, tables.content_bound)?;
    if p.host_tables {
        state.load_table_set(&tables);
    }
    let prims = Primitives::new();
    for dep in p.requires {
        let dep = find_program(dep).ok_or_else(|| CliError::Usage(format!("missing corpus program {dep}")))?;
        execute(&mut state, &dep.parse()?, &prims, &[])?;
    }
    Ok(state)
}

/// Kernels exercised by the restore suite.
pub const RESTORE_KERNELS: [&str; 3] = ["cstp_pred2", "add2", "mul1"];

/// `calls` successive wrapped calls per kernel and `N` on one machine:
/// outputs match the unwrapped kernel and the host oracle, and the memory
/// snapshot is unchanged by each call.
pub fn restore_roundtrips(ns: &[u64], calls: usize, seed: u64) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("restore");
    let prims = Primitives::new();
    let log = WrappedProcedure::log_names();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for name in RESTORE_KERNELS {
        let kernel = find_program(name).ok_or_else(|| CliError::Usage(format!("missing corpus program {name}")))?;
        let plain = kernel.parse()?;
        let wrapped = wrap_restore(&plain)?;
        for &n in ns {
            let mut state = prepared_state(kernel, n)?;
            let arity = kernel.sample_inputs(n).len();
            for call in 0..calls {
                let inputs: Vec<u64> = (0..arity).map(|_| rng.gen_range(0..n)).collect();
                let mut unwrapped_state = state.clone();
                let plain_out = execute(&mut unwrapped_state, &plain, &prims, &inputs)?.outputs;
                let before = state.snapshot_hash(&log);
                let out = execute(&mut state, &wrapped.program, &prims, &inputs)?.outputs;
                let after = state.snapshot_hash(&log);
                let oracle = kernel.expected(n, &inputs);
                r.check(out == plain_out && out == oracle, || {
                    format!("{name} N={n} call {call} {inputs:?}: wrapped {out:?}, plain {plain_out:?}, oracle {oracle:?}")
                });
                r.check(before == after, || format!("{name} N={n} call {call} {inputs:?}: memory changed"));
            }
        }
    }
    Ok(r)
}

fn fib_host(y: u64) -> u128 {
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..y {
        (a, b) = (b, a.saturating_add(b));
    }
    a
}

fn fact_host(y: u64) -> u128 {
    (1..=y as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

/// Smallest `y` with `f(y) ≥ x`, by linear search.
fn host_inverse(f: fn(u64) -> u128, x: u128) -> u64 {
    (0..).find(|&y| f(y) >= x).unwrap_or(0)
}

/// Both inverses on every `x < N^d`, and both rebuilt tables.
pub fn inverse_exhaustive(n: u64, d: usize) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new(&format!("inverse N={n} d={d}"));
    let ops = InverseOps::new(n, d)?;
    let limit = (n as u128).pow(d as u32);
    for x in 0..limit {
        let OpResult::Value(xe) = to_radix(x, n, d) else {
            unreachable!("x below N^d")
        };
        let mut m = ops.meter();
        let got = ops.fib_inverse(&mut m, &xe)?;
        let want = host_inverse(fib_host, x);
        r.check(got == want, || format!("fib_inverse({x}) = {got}, want {want}"));
        let got = ops.fact_inverse(&mut m, &xe)?;
        let want = host_inverse(fact_host, x);
        r.check(got == want, || format!("fact_inverse({x}) = {got}, want {want}"));
    }
    let sequences: [(&str, fn(u64) -> u128, &[u128], _, _); 2] = [
        ("fib", fib_host, &[0, 1, 1, 2], &ops.fib_index, &ops.fib),
        ("fact", fact_host, &[1, 1], &ops.fact_index, &ops.fact),
    ];
    for (name, host, initial, index, f) in sequences {
        let mut prim = inverse_primitive(index, f, &ops.tables);
        let rec = reconstruct_f(&ops.tables, d, initial, &mut prim)?;
        let got: Vec<u128> = rec.values.iter().map(RadixNumber::value).collect();
        let want: Vec<u128> = (0..).map(host).take_while(|&v| v < limit).collect();
        r.check(got == want, || format!("reconstructed {name}: {got:?}, want {want:?}"));
    }
    Ok(r)
}

/// Each array-level corpus program, lowered to register level, against the
/// array-level run from the same state.
pub fn corpus_lockstep(ns: &[u64]) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("lockstep");
    let prims = Primitives::new();
    for p in crate::ram::corpus() {
        let program = p.parse()?;
        if !program.is_array_level() {
            continue;
        }
        let lowered = lower_to_r(&program)?;
        for &n in ns {
            let mut array_state = prepared_state(p, n)?;
            let mut register_state = lowered.transfer_state(&program, &array_state)?;
            let inputs = p.sample_inputs(n);
            let a = execute(&mut array_state, &program, &prims, &inputs)?;
            let b = execute(&mut register_state, &lowered.program, &prims, &inputs)?;
            let oracle = p.expected(n, &inputs);
            r.check(a.outputs == oracle, || format!("{} N={n}: outputs {:?}, oracle {oracle:?}", p.name, a.outputs));
            r.check(check_lockstep(&a, &b, lowered.lag_factor), || {
                format!("{} N={n}: lowered run not in lockstep at λ={}", p.name, lowered.lag_factor)
            });
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_oracle_passes() {
        let r = oracle_exhaustive(4, 2).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.checks > 16 * 16 * 6);
    }

    #[test]
    fn approximation_small_bases() {
        let r = trial_quotient_bounds(4..=10).unwrap();
        assert!(r.passed(), "{r}");
        let r = trial_quotient_brute_force(&[(1, 4..=6), (2, 4..=5)]).unwrap();
        assert!(r.passed(), "{r}");
        let r = normalization_carries(4..=9).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn restore_and_lockstep_small() {
        let r = restore_roundtrips(&[7], 30, 1).unwrap();
        assert!(r.passed(), "{r}");
        let r = corpus_lockstep(&[7]).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn inverse_small() {
        let r = inverse_exhaustive(16, 2).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn report_lists_failures() {
        let mut r = SuiteReport::new("x");
        r.check(false, || "case".into());
        assert!(!r.passed());
        assert_eq!(r.to_string(), "x: FAIL (1 checks, 1 failures)\n  case");
    }
}
