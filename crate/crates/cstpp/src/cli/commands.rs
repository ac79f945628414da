use std::fs;
use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arith::Mode;
use crate::meter::CostMeter;
use crate::ram::{check_lockstep, execute, find_program, lower_to_r, parse_program, MachineState, Primitives, Program, Trace};
use crate::tables::{bound_multiple, TableSet};
use crate::transform::{
    build_mul_expression, compile_to_expression, mul_memory, restricted_corpus, verify_compiled, verify_mul_expression,
    CompileContext, RestrictedProgram, TransformError,
};

use super::measure::geometric_range;
use super::verify::{run_suite, SuiteConfig};
use super::{Builtin, CliError, CompileArgs, Format, MeasureArgs, ModeArg, PreprocessArgs, RunArgs, VerifyArgs};

const CORPUS_PREFIX: &str = "corpus:";

#[derive(Serialize)]
struct PreprocessSummary<'a> {
    n: u64,
    b: u64,
    degree: usize,
    content_bound: u64,
    tables: Vec<TableSummary<'a>>,
    /// Last FIB index below `N^d`, when the sequences were built.
    sequence_bound: Option<usize>,
    build_costs: Vec<BuildCost<'a>>,
    total_cost: CostMeter,
    /// Digest of the binary dump.
    sha256: String,
}

#[derive(Serialize)]
struct TableSummary<'a> {
    name: &'a str,
    len: usize,
}

#[derive(Serialize)]
struct BuildCost<'a> {
    name: &'a str,
    #[serde(flatten)]
    cost: CostMeter,
}

pub(super) fn preprocess(a: &PreprocessArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let tables = match (&a.load, a.n) {
        (Some(path), _) => TableSet::load(fs::File::open(path)?)?,
        (None, Some(n)) => {
            let t = TableSet::build(n, a.d)?;
            if a.sequences {
                t.with_sequences(a.d)?
            } else {
                t
            }
        }
        (None, None) => return Err(CliError::Usage("either --n or --load is required".into())),
    };
    let mut bytes = Vec::new();
    tables.dump(&mut bytes)?;
    if let Some(path) = &a.dump {
        fs::write(path, &bytes)?;
    }
    let named = tables.named_tables();
    let summary = PreprocessSummary {
        n: tables.n,
        b: tables.b,
        degree: tables.degree,
        content_bound: tables.content_bound,
        tables: named.iter().map(|t| TableSummary { name: t.name, len: t.data.len() }).collect(),
        sequence_bound: tables.fib.as_ref().map(|f| f.bound),
        build_costs: tables
            .build_costs
            .iter()
            .map(|(name, cost)| BuildCost { name, cost: *cost })
            .collect(),
        total_cost: tables.build_meter(),
        sha256: hex(&Sha256::digest(&bytes)),
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct LoadedProgram {
    name: String,
    program: Program,
    host_tables: bool,
}

fn load_program(arg: &str) -> Result<LoadedProgram, CliError> {
    if let Some(name) = arg.strip_prefix(CORPUS_PREFIX) {
        let p = find_program(name).ok_or_else(|| {
            let known: Vec<&str> = crate::ram::corpus().iter().map(|p| p.name).collect();
            CliError::Usage(format!("no bundled program `{name}` (known: {})", known.join(", ")))
        })?;
        return Ok(LoadedProgram {
            name: p.name.to_string(),
            program: p.parse()?,
            host_tables: p.host_tables,
        });
    }
    let source = fs::read_to_string(arg).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
    Ok(LoadedProgram {
        name: arg.to_string(),
        program: parse_program(&source)?,
        host_tables: false,
    })
}

#[derive(Serialize)]
struct RunRecord<'a> {
    program: &'a str,
    trace: Trace,
}

#[derive(Serialize)]
struct LoweredRecord {
    lag_factor: u64,
    lockstep: bool,
    trace: Trace,
}

#[derive(Serialize)]
struct RunReport<'a> {
    n: u64,
    runs: Vec<RunRecord<'a>>,
    lowered: Option<LoweredRecord>,
}

pub(super) fn run_programs(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let programs = a.programs.iter().map(|s| load_program(s)).collect::<Result<Vec<_>, _>>()?;
    let bound = bound_multiple(2 * a.d.max(1)).saturating_mul(a.n);
    let mut state = MachineState::new(a.n, bound)?;
    if a.tables || programs.iter().any(|p| p.host_tables) {
        state.load_table_set(&TableSet::build(a.n, a.d)?);
    }
    let prims = Primitives::new();
    let mut records = Vec::new();
    let last = programs.len() - 1;
    let mut lowered_report = None;
    for (i, p) in programs.iter().enumerate() {
        if i < last {
            let trace = execute(&mut state, &p.program, &prims, &[])?;
            records.push(RunRecord { program: &p.name, trace });
            continue;
        }
        let lowered_run = if a.lower {
            let lowered = lower_to_r(&p.program)?;
            let register_state = lowered.transfer_state(&p.program, &state)?;
            Some((lowered, register_state))
        } else {
            None
        };
        let trace = execute(&mut state, &p.program, &prims, &a.inputs)?;
        if let Some((lowered, mut register_state)) = lowered_run {
            let sim = execute(&mut register_state, &lowered.program, &prims, &a.inputs)?;
            lowered_report = Some(LoweredRecord {
                lag_factor: lowered.lag_factor,
                lockstep: check_lockstep(&trace, &sim, lowered.lag_factor),
                trace: sim,
            });
        }
        records.push(RunRecord { program: &p.name, trace });
    }
    let report = RunReport {
        n: a.n,
        runs: records,
        lowered: lowered_report,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

pub(super) fn measure(a: &MeasureArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mode = match a.mode {
        ModeArg::Standard => Mode::Standard,
        ModeArg::Reduced => Mode::Reduced { c: a.c },
    };
    let ns = if a.n.is_empty() {
        geometric_range(16, 4096)
    } else {
        a.n.clone()
    };
    writeln!(err, "seed={}", a.seed)?;
    let report = super::measure::measure(a.op, a.d, &ns, a.samples, mode, a.seed)?;
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Format::Csv => write!(out, "{}", report.to_csv()?)?,
    }
    Ok(())
}

fn verification(e: TransformError) -> CliError {
    match e {
        TransformError::Mismatch { .. } => CliError::Verification(e.to_string()),
        other => other.into(),
    }
}

pub(super) fn compile_expr(a: &CompileArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.builtin == Some(Builtin::Mul) {
        let tables = TableSet::build(a.n, 1)?;
        let mem = mul_memory(&tables);
        let expr = build_mul_expression(&mem)?;
        writeln!(out, "{}", expr.to_prefix())?;
        if a.verify {
            let points = verify_mul_expression(&expr, a.n, &mem).map_err(verification)?;
            writeln!(out, "verified=true points={points}")?;
        }
        return Ok(());
    }
    let arg = a
        .source
        .as_deref()
        .ok_or_else(|| CliError::Usage("a program or --builtin is required".into()))?;
    let (program, default_degree) = match arg.strip_prefix(CORPUS_PREFIX) {
        Some(name) => {
            let sample = restricted_corpus().iter().find(|s| s.name == name).ok_or_else(|| {
                let known: Vec<&str> = restricted_corpus().iter().map(|s| s.name).collect();
                CliError::Usage(format!("no bundled restricted program `{name}` (known: {})", known.join(", ")))
            })?;
            (sample.parse()?, sample.degree)
        }
        None => {
            let source = fs::read_to_string(arg).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
            let program = RestrictedProgram::parse(&source)?;
            let degree = program.inputs / 2;
            (program, degree.max(1))
        }
    };
    let degree = a.degree.unwrap_or(default_degree);
    let ctx = CompileContext::new(a.n)?;
    let expr = compile_to_expression(&program, degree, &ctx, a.tau)?;
    writeln!(out, "{}", expr.to_prefix())?;
    if a.verify {
        let points = verify_compiled(&expr, &program, degree, &ctx).map_err(verification)?;
        writeln!(out, "verified=true points={points}")?;
    }
    Ok(())
}

pub(super) fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = SuiteConfig {
        seed: a.seed,
        oracle_samples: a.samples,
        ..SuiteConfig::default()
    };
    let report = run_suite(a.suite, &cfg)?;
    writeln!(out, "{report}")?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} checks failed",
            report.failure_count, report.checks
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::super::run;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("cstpp").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn echo_run() {
        let (code, out, err) = call(&["run", "corpus:echo_n", "--n", "7"]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["runs"][0]["trace"]["outputs"], serde_json::json!([7]));
    }

    #[test]
    fn pred_after_preprocessing() {
        let (code, out, err) = call(&["run", "corpus:linpp_pred", "corpus:cstp_pred2", "--n", "5", "--inputs", "3,0"]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["runs"][1]["trace"]["outputs"], serde_json::json!([2, 4]));
    }

    #[test]
    fn lowered_run_reports_lockstep() {
        let (code, out, err) = call(&["run", "corpus:linpp_pred", "--n", "5", "--lower"]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["lowered"]["lockstep"], serde_json::json!(true));
    }

    #[test]
    fn builtin_mul_verifies() {
        let (code, out, err) = call(&["compile-expr", "--builtin", "mul", "--n", "16", "--verify"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.lines().any(|l| l.starts_with("verified=true")), "{out}");
    }

    #[test]
    fn identity_compiles() {
        let (code, out, _) = call(&["compile-expr", "corpus:identity", "--n", "16"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "(tuple x0)");
    }

    #[test]
    fn measure_csv() {
        let (code, out, err) = call(&[
            "measure", "--op", "add", "--d", "1", "--n", "16,64", "--samples", "10", "--format", "csv",
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(err.contains("seed=0"));
        assert_eq!(out.lines().count(), 3);
    }

    #[test]
    fn missing_program_file() {
        let (code, _, err) = call(&["run", "/nonexistent.ram", "--n", "5"]);
        assert_eq!(code, 2);
        assert!(err.contains("nonexistent"));
    }
}
