//! Preprocessing: every lookup table the constant-time procedures read.
//!
//! Each builder is written as the loop a RAM would run, using additions and
//! equality tests only (plus unit-cost `div`/`mod` inside [`compute_root`]),
//! and charges a [`Meter`] accordingly. The per-builder costs are kept in
//! [`TableSet::build_costs`] so linearity can be measured.
//!
//! Two-dimensional tables are flat: `A[x][y]` lives at `A[B·x + y]`
//! (`A_diff` uses row stride `2B`).

use std::io::{Read, Write};

use thiserror::Error;

use crate::meter::{CostMeter, Meter, MeterError, Table, UNDEFINED};
use crate::radix::RadixNumber;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("reference integer must be at least 2, got {0}")]
    BadReference(u64),
    #[error("degree must be at least 1")]
    BadDegree,
    #[error(transparent)]
    Meter(#[from] MeterError),
    #[error("table dump: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A table of base-`N` numbers of fixed width, such as `FIB` or `FACT`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceTable {
    pub values: Vec<RadixNumber>,
    /// Largest index whose value is below `N^d`.
    pub bound: usize,
}

/// The precomputed arrays for one reference integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSet {
    pub n: u64,
    pub b: u64,
    /// Degree the tables were sized for.
    pub degree: usize,
    pub content_bound: u64,
    /// `⌊B/2⌋`.
    pub half_b: u64,
    /// `⌈log₂ N⌉`.
    pub ceil_log2_n: u64,
    /// Base-`B` digits of `N`, three of them since `N ≤ B²`.
    pub n_in_b: [u64; 3],
    pub pred: Table,
    pub div_b: Table,
    pub mod_b: Table,
    pub mult_b: Table,
    pub a_mul: Table,
    pub a_diff: Table,
    pub a_div: Table,
    pub a_mod: Table,
    pub a_bdiv: Table,
    pub a_bmod: Table,
    pub log2: Table,
    pub div_n: Table,
    pub mod_n: Table,
    pub t0: Table,
    pub t1: Table,
    pub fib: Option<SequenceTable>,
    pub fact: Option<SequenceTable>,
    /// Metered cost of each builder, in build order.
    pub build_costs: Vec<(String, CostMeter)>,
}

/// Content-bound multiple for a kernel working on `width` base-`B` digits:
/// `max(8, 2·width)`. The floor of 8 keeps `A_diff` (4B² ≤ 8N cells)
/// addressable.
pub fn bound_multiple(width: usize) -> u64 {
    (2 * width as u64).max(8)
}

/// `B = ⌈√N⌉` by the corrected incremental-squares sweep: `y` runs from 1 to
/// `N` while `x₂ = x²` tracks the first square at or above `y`.
pub fn compute_b(n: u64, m: &mut Meter) -> Result<u64, MeterError> {
    let mut sweep = SqrtSweep::new(m)?;
    while sweep.y != n {
        sweep.step(m)?;
    }
    Ok(sweep.x)
}

/// State of the sweep behind [`compute_b`]. After `k` steps it holds
/// `y = k + 1` and `x = ⌈√y⌉`, so one pass also answers every smaller `N`.
#[derive(Debug, Clone)]
pub struct SqrtSweep {
    pub x: u64,
    pub x2: u64,
    pub y: u64,
}

impl SqrtSweep {
    pub fn new(m: &mut Meter) -> Result<Self, MeterError> {
        m.charge(3)?;
        Ok(SqrtSweep { x: 1, x2: 1, y: 1 })
    }

    pub fn step(&mut self, m: &mut Meter) -> Result<(), MeterError> {
        // loop test y ≠ N, then test y = x₂
        m.charge(2)?;
        if self.y == self.x2 {
            let t = m.add(self.x2, self.x)?;
            let t = m.add(t, self.x)?;
            self.x2 = m.add(t, 1)?;
            self.x = m.add(self.x, 1)?;
        }
        self.y = m.add(self.y, 1)?;
        Ok(())
    }
}

/// `⌈N^{1/c}⌉` maintaining `x, x², …, x^c` by binomial increments. The loop
/// test `x^c < N` is decided with `N div x^c` and `N mod x^c`.
pub fn compute_root(n: u64, c: u32, m: &mut Meter) -> Result<u64, MeterError> {
    assert!(c >= 1, "root order must be positive");
    if c == 1 {
        return Ok(n);
    }
    let c = c as usize;
    let binom = pascal_row_table(c);
    // powers[k] = x^k for k = 0..=c
    let mut powers = vec![1u64; c + 1];
    m.charge(c as u64 + 1)?;
    loop {
        let top = powers[c];
        let q = m.div(n, top)?;
        let r = m.rem(n, top)?;
        // three equality tests and the final branch
        m.charge(4)?;
        let below = (q != 0 && q != 1) || (q == 1 && r != 0);
        if !below {
            return Ok(powers[1]);
        }
        // (x+1)^k = Σ_j C(k,j) x^j, highest k first so lower powers are still old.
        for k in (1..=c).rev() {
            let mut acc = powers[k];
            for (j, &p) in powers.iter().enumerate().take(k) {
                for _ in 0..binom[k][j] {
                    acc = m.add(acc, p)?;
                }
            }
            powers[k] = acc;
        }
    }
}

fn pascal_row_table(c: usize) -> Vec<Vec<u64>> {
    let mut rows = vec![vec![1u64]];
    for k in 1..=c {
        let prev = &rows[k - 1];
        let mut row = vec![1u64; k + 1];
        for j in 1..k {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

/// `PRED[x+1] = x` for `0 ≤ x < N`; `PRED[0]` is undefined.
pub fn build_pred(n: u64, m: &mut Meter) -> Result<Table, MeterError> {
    let mut pred = vec![UNDEFINED; n as usize + 1];
    let mut x = 0u64;
    m.charge(1)?;
    loop {
        m.charge(1)?;
        if x == n {
            break;
        }
        let next = m.add(x, 1)?;
        pred[next as usize] = x;
        m.charge(1)?;
        x = next;
    }
    Ok(Table::new("PRED", pred))
}

/// `(x div d, x mod d)` for `0 ≤ x < len` by the three-case induction; the
/// remainder resets when it reaches `d − 1`.
fn divmod_induction(
    d: u64,
    len: usize,
    m: &mut Meter,
) -> Result<(Vec<u64>, Vec<u64>), MeterError> {
    let mut q = vec![0u64; len];
    let mut r = vec![0u64; len];
    m.charge(2)?;
    for x in 1..len {
        // loop test, index increment, two reads, equality test
        m.charge(5)?;
        if r[x - 1] + 1 == d {
            q[x] = m.add(q[x - 1], 1)?;
            r[x] = 0;
            m.charge(1)?;
        } else {
            q[x] = m.mov(q[x - 1])?;
            r[x] = m.add(r[x - 1], 1)?;
        }
    }
    Ok((q, r))
}

/// `DivB` and `ModB` over `[0, len)`.
pub fn build_divmod_b(b: u64, len: usize, m: &mut Meter) -> Result<(Table, Table), MeterError> {
    let (q, r) = divmod_induction(b, len, m)?;
    Ok((Table::new("DivB", q), Table::new("ModB", r)))
}

/// `MultB[x] = B·x` for `x < 2B`, and `A_mul[B·x + y] = x·y` for `x, y < B`
/// by `A_mul[Bx+y] = A_mul[Bx+y−1] + x`.
pub fn build_mul_table(b: u64, m: &mut Meter) -> Result<(Table, Table), MeterError> {
    let mut mult = vec![0u64; 2 * b as usize];
    m.charge(1)?;
    for x in 1..mult.len() {
        m.charge(2)?;
        mult[x] = m.add(mult[x - 1], b)?;
    }
    let bu = b as usize;
    let mut a = vec![0u64; bu * bu];
    let mut idx = 0usize;
    for x in 0..b {
        m.charge(1)?;
        for y in 0..b {
            m.charge(2)?;
            if y == 0 {
                a[idx] = 0;
                m.charge(1)?;
            } else {
                a[idx] = m.add(a[idx - 1], x)?;
            }
            idx += 1;
            m.charge(1)?;
        }
    }
    Ok((Table::new("MultB", mult), Table::new("A_mul", a)))
}

/// `A_diff[2B·x + y] = max(0, x − y)` for `x, y < 2B`, by the diagonal
/// induction `A_diff[x][y] = A_diff[x−1][y−1]` with `A_diff[x][0] = x` and
/// `A_diff[0][y] = 0`.
pub fn build_diff_table(b: u64, m: &mut Meter) -> Result<Table, MeterError> {
    let w = 2 * b as usize;
    let mut a = vec![0u64; w * w];
    let mut row_start = 0usize;
    let mut x_val = 0u64;
    for x in 0..w {
        m.charge(2)?;
        a[row_start] = x_val;
        if x > 0 {
            // i walks row x, j = i − (2B + 1) walks the previous diagonal
            let mut i = row_start + 1;
            let mut j = row_start - w;
            for _ in 1..w {
                m.charge(4)?;
                a[i] = a[j];
                i += 1;
                j += 1;
            }
        } else {
            for y in 1..w {
                m.charge(2)?;
                a[y] = 0;
            }
        }
        row_start += w;
        x_val = m.add(x_val, 1)?;
    }
    Ok(Table::new("A_diff", a))
}

/// Single-digit division tables for `x < B`, `1 ≤ y < B`:
/// `A_div`, `A_mod` (of `x` by `y`) and `A_Bdiv`, `A_Bmod` (of `B·x` by `y`).
/// The `y = 0` column is undefined.
pub fn build_digit_div_tables(b: u64, m: &mut Meter) -> Result<[Table; 4], MeterError> {
    let bu = b as usize;
    let mut a_div = vec![UNDEFINED; bu * bu];
    let mut a_mod = vec![UNDEFINED; bu * bu];
    let mut a_bdiv = vec![UNDEFINED; bu * bu];
    let mut a_bmod = vec![UNDEFINED; bu * bu];
    for y in 1..b {
        m.charge(2)?;
        // quotient/remainder by y on [0, 2B), reused for this column
        let (q2, r2) = divmod_induction(y, 2 * bu, m)?;
        let (qb, rb) = (q2[bu], r2[bu]);
        let mut bdiv = 0u64;
        let mut bmod = 0u64;
        for x in 0..bu {
            let idx = bu * x + y as usize;
            m.charge(3)?;
            a_div[idx] = q2[x];
            a_mod[idx] = r2[x];
            if x > 0 {
                // B·x = B·(x−1) + B
                let s = m.add(bmod, rb)?;
                let t = m.add(bdiv, qb)?;
                bdiv = m.add(t, q2[s as usize])?;
                bmod = m.mov(r2[s as usize])?;
            }
            a_bdiv[idx] = bdiv;
            a_bmod[idx] = bmod;
            m.charge(2)?;
        }
    }
    Ok([
        Table::new("A_div", a_div),
        Table::new("A_mod", a_mod),
        Table::new("A_Bdiv", a_bdiv),
        Table::new("A_Bmod", a_bmod),
    ])
}

/// `LOG2[x] = ⌊log₂ x⌋` for `1 ≤ x < 2N`; `LOG2[0]` is undefined.
pub fn build_log2(n: u64, m: &mut Meter) -> Result<Table, MeterError> {
    let len = 2 * n as usize;
    let mut t = vec![UNDEFINED; len];
    let mut value = 0u64;
    let mut next_pow = 2u64;
    m.charge(2)?;
    for x in 1..len as u64 {
        m.charge(3)?;
        if x == next_pow {
            value = m.add(value, 1)?;
            next_pow = m.add(next_pow, next_pow)?;
        }
        t[x as usize] = value;
    }
    Ok(Table::new("LOG2", t))
}

/// `DivN`, `ModN`, `T0`, `T1` over `[0, 2N)` with `v·B = T1[v]·N + T0[v]`.
pub fn build_exprmul_tables(n: u64, b: u64, m: &mut Meter) -> Result<[Table; 4], MeterError> {
    let len = 2 * n as usize;
    let (div_n, mod_n) = divmod_induction(n, len, m)?;
    let mut t0 = vec![0u64; len];
    let mut t1 = vec![0u64; len];
    m.charge(2)?;
    for v in 1..len {
        m.charge(2)?;
        let s = m.add(t0[v - 1], b)?;
        t0[v] = m.mov(mod_n[s as usize])?;
        t1[v] = m.add(t1[v - 1], div_n[s as usize])?;
        m.charge(2)?;
    }
    Ok([
        Table::new("DivN", div_n),
        Table::new("ModN", mod_n),
        Table::new("T0", t0),
        Table::new("T1", t1),
    ])
}

/// Base-`N` addition of two width-`d` numbers using `DivN`/`ModN`. Returns
/// the sum and whether it carried out of the top digit.
pub(crate) fn add_base_n(
    t: &TableSet,
    m: &mut Meter,
    x: &[u64],
    y: &[u64],
) -> Result<(Vec<u64>, u64), MeterError> {
    let mut out = Vec::with_capacity(x.len());
    let mut carry = 0;
    for (&a, &b) in x.iter().zip(y) {
        let s = m.add(a, b)?;
        let s = m.add(s, carry)?;
        out.push(m.load(&t.mod_n, s)?);
        carry = m.load(&t.div_n, s)?;
    }
    Ok((out, carry))
}

/// `FIB[x] = Fib(x)` while `Fib(x) < N^d`.
pub fn build_fib(t: &TableSet, d: usize, m: &mut Meter) -> Result<SequenceTable, MeterError> {
    let n = t.n;
    let zero = vec![0u64; d];
    let mut one = vec![0u64; d];
    one[0] = 1;
    let mut values = vec![RadixNumber {
        base: n,
        digits: zero,
    }];
    let mut z = one;
    m.charge(3)?;
    loop {
        // `z < N^d` holds exactly when the last addition did not carry out.
        values.push(RadixNumber {
            base: n,
            digits: z.clone(),
        });
        m.charge(d as u64)?;
        let k = values.len();
        let (next, carry) = add_base_n(t, m, &values[k - 2].digits, &values[k - 1].digits)?;
        m.charge(2)?;
        if carry != 0 {
            break;
        }
        z = next;
    }
    let bound = values.len() - 1;
    Ok(SequenceTable { values, bound })
}

/// `FACT[x] = x!` while `x! < N^d`, each step multiplying by `x + 1` through
/// the metered base-`N` multiplication.
pub fn build_fact(t: &TableSet, d: usize, m: &mut Meter) -> Result<SequenceTable, TableError> {
    let n = t.n;
    let mut one = vec![0u64; d];
    one[0] = 1;
    let mut values = vec![RadixNumber {
        base: n,
        digits: one.clone(),
    }];
    // x + 1 kept as a base-N number so it can feed the multiplication
    let mut succ = vec![0u64; d];
    m.charge(3)?;
    loop {
        let (next_succ, c) = add_base_n(t, m, &succ, &one)?;
        if c != 0 {
            break;
        }
        succ = next_succ;
        let last = values.last().expect("FACT[0] present");
        let a = RadixNumber {
            base: n,
            digits: succ.clone(),
        };
        let prod = crate::arith::mul_base_n(t, m, &a, last)
            .map_err(|e| TableError::Format(e.to_string()))?;
        // the product has 2d digits; it stays below N^d iff the top half is zero
        let mut high_nonzero = 0;
        for &digit in &prod.digits[d..] {
            high_nonzero += 1 - m.is_zero(digit)?;
        }
        if high_nonzero != 0 {
            break;
        }
        values.push(RadixNumber {
            base: n,
            digits: prod.digits[..d].to_vec(),
        });
        m.charge(d as u64)?;
    }
    let bound = values.len() - 1;
    Ok(SequenceTable { values, bound })
}

impl TableSet {
    /// Builds every table for reference integer `n`, sized so that
    /// operations of degree up to `degree` stay within the content bound.
    pub fn build(n: u64, degree: usize) -> Result<TableSet, TableError> {
        if n < 2 {
            return Err(TableError::BadReference(n));
        }
        if degree == 0 {
            return Err(TableError::BadDegree);
        }
        let content_bound = bound_multiple(2 * degree) * n;
        let mut costs = Vec::new();
        let mut stage = |name: &str, m: &Meter| costs.push((name.to_string(), m.counts));

        let mut m = Meter::new(content_bound);
        let b = compute_b(n, &mut m)?;
        stage("compute_B", &m);

        let mut m = Meter::new(content_bound);
        let pred = build_pred(n, &mut m)?;
        stage("PRED", &m);

        let mut m = Meter::new(content_bound);
        let (div_b, mod_b) = build_divmod_b(b, content_bound as usize, &mut m)?;
        stage("DivB/ModB", &m);

        let mut m = Meter::new(content_bound);
        let (mult_b, a_mul) = build_mul_table(b, &mut m)?;
        stage("MultB/A_mul", &m);

        let mut m = Meter::new(content_bound);
        let a_diff = build_diff_table(b, &mut m)?;
        stage("A_diff", &m);

        let mut m = Meter::new(content_bound);
        let [a_div, a_mod, a_bdiv, a_bmod] = build_digit_div_tables(b, &mut m)?;
        stage("digit division", &m);

        let mut m = Meter::new(content_bound);
        let log2 = build_log2(n, &mut m)?;
        stage("LOG2", &m);

        let mut m = Meter::new(content_bound);
        let [div_n, mod_n, t0, t1] = build_exprmul_tables(n, b, &mut m)?;
        stage("DivN/ModN/T0/T1", &m);

        let mut m = Meter::new(content_bound);
        let half_b = half_of(b, &mut m)?;
        let top_bit = m.load(&log2, n - 1)?;
        let ceil_log2_n = m.add(top_bit, 1)?;
        let hi = m.load(&div_b, n)?;
        let n_in_b = [
            m.load(&mod_b, n)?,
            m.load(&mod_b, hi)?,
            m.load(&div_b, hi)?,
        ];
        stage("constants", &m);

        Ok(TableSet {
            n,
            b,
            degree,
            content_bound,
            half_b,
            ceil_log2_n,
            n_in_b,
            pred,
            div_b,
            mod_b,
            mult_b,
            a_mul,
            a_diff,
            a_div,
            a_mod,
            a_bdiv,
            a_bmod,
            log2,
            div_n,
            mod_n,
            t0,
            t1,
            fib: None,
            fact: None,
            build_costs: costs,
        })
    }

    /// Adds `FIB` and `FACT` for degree `d`.
    pub fn with_sequences(mut self, d: usize) -> Result<TableSet, TableError> {
        let mut m = Meter::new(self.content_bound);
        let fib = build_fib(&self, d, &mut m)?;
        self.build_costs.push(("FIB".into(), m.counts));
        let mut m = Meter::new(self.content_bound);
        let fact = build_fact(&self, d, &mut m)?;
        self.build_costs.push(("FACT".into(), m.counts));
        self.fib = Some(fib);
        self.fact = Some(fact);
        Ok(self)
    }

    /// Total metered preprocessing cost.
    pub fn build_meter(&self) -> CostMeter {
        let mut total = CostMeter::default();
        for (_, c) in &self.build_costs {
            total.merge(c);
        }
        total
    }

    fn tables(&self) -> [&Table; 15] {
        [
            &self.pred,
            &self.div_b,
            &self.mod_b,
            &self.mult_b,
            &self.a_mul,
            &self.a_diff,
            &self.a_div,
            &self.a_mod,
            &self.a_bdiv,
            &self.a_bmod,
            &self.log2,
            &self.div_n,
            &self.mod_n,
            &self.t0,
            &self.t1,
        ]
    }

    /// Named tables in a fixed order, for memory images and dumps.
    pub fn named_tables(&self) -> Vec<&Table> {
        self.tables().to_vec()
    }

    /// Writes the binary dump: magic, version, header scalars, table lengths,
    /// then every value as little-endian `u64`.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<(), TableError> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        let seq_width = self.fib.as_ref().map_or(0, |_| self.sequence_degree());
        let header = [
            self.n,
            self.b,
            self.degree as u64,
            self.content_bound,
            seq_width as u64,
        ];
        for v in header {
            w.write_all(&v.to_le_bytes())?;
        }
        let seqs = self.sequence_tables();
        let all: Vec<&Vec<u64>> = self
            .tables()
            .iter()
            .map(|t| &t.data)
            .chain(seqs.iter())
            .collect();
        w.write_all(&(all.len() as u64).to_le_bytes())?;
        for t in &all {
            w.write_all(&(t.len() as u64).to_le_bytes())?;
        }
        for t in &all {
            for v in t.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    fn sequence_degree(&self) -> usize {
        self.fib
            .as_ref()
            .and_then(|s| s.values.first())
            .map_or(0, |v| v.width())
    }

    fn sequence_tables(&self) -> Vec<Vec<u64>> {
        let flat = |s: &Option<SequenceTable>| -> Option<Vec<u64>> {
            s.as_ref()
                .map(|s| s.values.iter().flat_map(|v| v.digits.clone()).collect())
        };
        match (flat(&self.fib), flat(&self.fact)) {
            (Some(f), Some(g)) => vec![f, g],
            _ => Vec::new(),
        }
    }

    /// Reads a dump written by [`TableSet::dump`]. Build costs are not stored
    /// and come back empty; derived constants are recomputed.
    pub fn load<R: Read>(mut r: R) -> Result<TableSet, TableError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(TableError::Format("bad magic".into()));
        }
        let mut v4 = [0u8; 4];
        r.read_exact(&mut v4)?;
        let version = u32::from_le_bytes(v4);
        if version != DUMP_VERSION {
            return Err(TableError::Format(format!("unsupported version {version}")));
        }
        let read_u64 = |r: &mut R| -> Result<u64, TableError> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n = read_u64(&mut r)?;
        let b = read_u64(&mut r)?;
        let degree = read_u64(&mut r)? as usize;
        let content_bound = read_u64(&mut r)?;
        let seq_width = read_u64(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        if count != 15 && count != 17 {
            return Err(TableError::Format(format!("unexpected table count {count}")));
        }
        let mut lens = Vec::with_capacity(count);
        for _ in 0..count {
            lens.push(read_u64(&mut r)? as usize);
        }
        let mut data = Vec::with_capacity(count);
        for len in lens {
            let mut t = Vec::with_capacity(len);
            for _ in 0..len {
                t.push(read_u64(&mut r)?);
            }
            data.push(t);
        }
        let mut it = data.into_iter();
        let mut next = |name: &'static str| Table::new(name, it.next().unwrap_or_default());
        let pred = next("PRED");
        let div_b = next("DivB");
        let mod_b = next("ModB");
        let mult_b = next("MultB");
        let a_mul = next("A_mul");
        let a_diff = next("A_diff");
        let a_div = next("A_div");
        let a_mod = next("A_mod");
        let a_bdiv = next("A_Bdiv");
        let a_bmod = next("A_Bmod");
        let log2 = next("LOG2");
        let div_n = next("DivN");
        let mod_n = next("ModN");
        let t0 = next("T0");
        let t1 = next("T1");
        let unflatten = |t: Table| -> Option<SequenceTable> {
            if seq_width == 0 || t.data.is_empty() {
                return None;
            }
            let values: Vec<RadixNumber> = t
                .data
                .chunks(seq_width)
                .map(|c| RadixNumber {
                    base: n,
                    digits: c.to_vec(),
                })
                .collect();
            let bound = values.len() - 1;
            Some(SequenceTable { values, bound })
        };
        let (fib, fact) = if count == 17 {
            (unflatten(next("FIB")), unflatten(next("FACT")))
        } else {
            (None, None)
        };
        if n < 2 || mod_b.len() <= n as usize || log2.len() < n as usize {
            return Err(TableError::Format("inconsistent header".into()));
        }
        let hi = div_b.data[n as usize];
        Ok(TableSet {
            n,
            b,
            degree,
            content_bound,
            half_b: b / 2,
            ceil_log2_n: log2.data[n as usize - 1] + 1,
            n_in_b: [mod_b.data[n as usize], mod_b.data[hi as usize], div_b.data[hi as usize]],
            pred,
            div_b,
            mod_b,
            mult_b,
            a_mul,
            a_diff,
            a_div,
            a_mod,
            a_bdiv,
            a_bmod,
            log2,
            div_n,
            mod_n,
            t0,
            t1,
            fib,
            fact,
            build_costs: Vec::new(),
        })
    }
}

/// `⌊b/2⌋` by counting up in steps of two.
fn half_of(b: u64, m: &mut Meter) -> Result<u64, MeterError> {
    let mut twice = 0u64;
    let mut half = 0u64;
    loop {
        m.charge(2)?;
        let next = m.add(twice, 2)?;
        if next > b {
            return Ok(half);
        }
        twice = next;
        half = m.add(half, 1)?;
    }
}

const DUMP_MAGIC: &[u8; 8] = b"CSTPPTBL";
const DUMP_VERSION: u32 = 1;
