//! Cost measurement across reference integers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{Mode, Op, OpContext};
use crate::inverse::InverseOps;
use crate::meter::CostMeter;

use super::CliError;

/// Anything `measure` can time: an arithmetic operation or one of the two
/// inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasuredOp {
    Arith(Op),
    FibInverse,
    FactInverse,
}

impl MeasuredOp {
    pub fn all() -> Vec<MeasuredOp> {
        Op::ALL
            .into_iter()
            .map(MeasuredOp::Arith)
            .chain([MeasuredOp::FibInverse, MeasuredOp::FactInverse])
            .collect()
    }
}

impl fmt::Display for MeasuredOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasuredOp::Arith(op) => write!(f, "{op}"),
            MeasuredOp::FibInverse => f.write_str("fib_inverse"),
            MeasuredOp::FactInverse => f.write_str("fact_inverse"),
        }
    }
}

impl FromStr for MeasuredOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fib_inverse" => Ok(MeasuredOp::FibInverse),
            "fact_inverse" => Ok(MeasuredOp::FactInverse),
            _ => s.parse::<Op>().map(MeasuredOp::Arith).map_err(|_| {
                let names: Vec<String> = MeasuredOp::all().iter().map(ToString::to_string).collect();
                format!("unknown operation `{s}` (known: {})", names.join(", "))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n: u64,
    /// Instruction count of the whole setup.
    pub preprocessing_cost: u64,
    pub min_cost: u64,
    pub max_cost: u64,
    pub mean_cost: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    /// Maximum operation cost identical for every `N`.
    pub constancy: bool,
    /// Largest `(cost(N′)/cost(N)) / (N′/N)` over consecutive records;
    /// 1 means exactly linear preprocessing.
    pub linearity_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub op: String,
    pub mode: String,
    pub d: usize,
    pub seed: u64,
    pub records: Vec<Record>,
    pub verdicts: Verdicts,
}

impl MeasurementReport {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "op",
            "mode",
            "d",
            "n",
            "preprocessing_cost",
            "min_cost",
            "max_cost",
            "mean_cost",
            "samples",
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
        for r in &self.records {
            w.write_record([
                self.op.clone(),
                self.mode.clone(),
                self.d.to_string(),
                r.n.to_string(),
                r.preprocessing_cost.to_string(),
                r.min_cost.to_string(),
                r.max_cost.to_string(),
                format!("{:.3}", r.mean_cost),
                r.samples.to_string(),
            ])
            .map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Uniform operand below `N^d`; divisors are drawn from `[1, N^d)`.
fn operand(rng: &mut ChaCha8Rng, limit: u128, nonzero: bool) -> u128 {
    rng.gen_range(u128::from(nonzero)..limit)
}

/// Preprocessing cost and per-sample operation costs at one `N`.
pub fn sample_costs(
    op: MeasuredOp,
    n: u64,
    d: usize,
    mode: Mode,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(CostMeter, Vec<CostMeter>), CliError> {
    let limit = (n as u128).pow(d as u32);
    let mut costs = Vec::with_capacity(samples);
    match op {
        MeasuredOp::Arith(op) => {
            let ctx = OpContext::new(n, d, mode)?;
            let nonzero = matches!(op, Op::Div | Op::Mod);
            for _ in 0..samples {
                let x = operand(rng, limit, false);
                let y = operand(rng, limit, nonzero);
                let (_, cost) = ctx.run(op, x, y)?;
                costs.push(cost);
            }
            Ok((ctx.setup_cost(), costs))
        }
        MeasuredOp::FibInverse | MeasuredOp::FactInverse => {
            if mode != Mode::Standard {
                return Err(CliError::Usage("inverses are measured in standard mode only".into()));
            }
            let ops = InverseOps::new(n, d)?;
            let mut setup = ops.tables.build_meter();
            let index = if op == MeasuredOp::FibInverse {
                &ops.fib_index
            } else {
                &ops.fact_index
            };
            setup.merge(&index.build_cost);
            for _ in 0..samples {
                let x = operand(rng, limit, false);
                let xe = crate::radix::to_radix(x, n, d)
                    .number()
                    .cloned()
                    .ok_or_else(|| CliError::Usage(format!("operand {x} out of range")))?;
                let mut m = ops.meter();
                if op == MeasuredOp::FibInverse {
                    ops.fib_inverse(&mut m, &xe)?;
                } else {
                    ops.fact_inverse(&mut m, &xe)?;
                }
                costs.push(m.counts);
            }
            Ok((setup, costs))
        }
    }
}

/// Runs preprocessing and `samples` random operations for every `N` in
/// `ns`, in order, from one seeded generator.
pub fn measure(
    op: MeasuredOp,
    d: usize,
    ns: &[u64],
    samples: usize,
    mode: Mode,
    seed: u64,
) -> Result<MeasurementReport, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("at least one sample per N is required".into()));
    }
    if ns.is_empty() {
        return Err(CliError::Usage("no reference integers given".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(ns.len());
    for &n in ns {
        let (setup, costs) = sample_costs(op, n, d, mode, samples, &mut rng)?;
        let counts: Vec<u64> = costs.iter().map(|c| c.instruction_count).collect();
        records.push(Record {
            n,
            preprocessing_cost: setup.instruction_count,
            min_cost: *counts.iter().min().unwrap_or(&0),
            max_cost: *counts.iter().max().unwrap_or(&0),
            mean_cost: counts.iter().sum::<u64>() as f64 / counts.len() as f64,
            samples: counts.len(),
        });
    }
    let constancy = records.windows(2).all(|w| w[0].max_cost == w[1].max_cost);
    let linearity_ratio = records
        .windows(2)
        .map(|w| {
            let cost = w[1].preprocessing_cost as f64 / w[0].preprocessing_cost.max(1) as f64;
            cost / (w[1].n as f64 / w[0].n as f64)
        })
        .fold(if records.len() > 1 { 0.0 } else { 1.0 }, f64::max);
    Ok(MeasurementReport {
        op: op.to_string(),
        mode: mode.to_string(),
        d,
        seed,
        records,
        verdicts: Verdicts {
            constancy,
            linearity_ratio,
        },
    })
}

/// `start, 4·start, …` up to `end`.
pub fn geometric_range(start: u64, end: u64) -> Vec<u64> {
    std::iter::successors(Some(start), |&n| n.checked_mul(4))
        .take_while(|&n| n <= end)
        .collect()
}
