//! The RAM machine model.
//!
//! Two instruction sets share one [`Program`] type. *R-level* programs
//! address a single register file `R[0], R[1], …` and compute only through
//! registered primitives. *Array-level* programs use named variables, named
//! arrays and nested expressions over `+`, `N` and primitives. [`lower_to_r`]
//! rewrites the second form into the first with a constant lag factor, and
//! [`check_lockstep`] confirms the rewrite on a pair of traces.
//!
//! Register contents, addresses and every intermediate result are kept below
//! the content bound of the [`MachineState`]; leaving it is an error.

mod corpus;
mod exec;
mod lockstep;
mod lower;
mod parse;
mod program;

pub use corpus::{corpus, find as find_program, CorpusProgram};
pub use exec::{execute, MachineState, Primitive, Primitives, Trace};
pub use lockstep::check_lockstep;
pub use lower::{cell_register, lower_to_r, variable_register, LoweredProgram};
pub use parse::parse_program;
pub use program::{Expr, Instruction, Level, Program};

use thiserror::Error;

/// Name of the primitive behind `+` and the R-level `op add`.
pub const ADD: &str = "add";

/// Array written by the `jeq` sugar.
pub const EQUAL_ARRAY: &str = "Equal";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RamError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: undefined label `{label}`")]
    UndefinedLabel { line: usize, label: String },
    #[error("instruction {at}: branch target {target} outside a program of {len} instructions")]
    UndefinedTarget { at: usize, target: usize, len: usize },
    #[error("line {line}: `{name}` is not a declared {what}")]
    Undeclared {
        line: usize,
        name: String,
        what: &'static str,
    },
    #[error("program mixes R-level and array-level instructions (line {line})")]
    MixedLevels { line: usize },
    #[error("program is empty or does not end with halt")]
    MissingHalt,
    #[error("instruction {at} does not belong to a {level} program")]
    WrongLevel { at: usize, level: Level },
    #[error("instruction {at} refers to missing {what} #{index}")]
    BadReference {
        at: usize,
        what: &'static str,
        index: usize,
    },
    #[error("primitive `{0}` is not registered")]
    UnknownPrimitive(String),
    #[error("primitive `{name}` takes {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("primitive `{name}` is undefined on {args:?}")]
    PrimitiveUndefined { name: String, args: Vec<u64> },
    #[error("instruction {at}: value {value} reaches the content bound {bound}")]
    BoundViolation { at: usize, value: u64, bound: u64 },
    #[error("instruction {at}: input stream exhausted")]
    InputExhausted { at: usize },
    #[error("step limit {limit} exceeded")]
    StepLimit { limit: u64 },
    #[error("reference integer must be at least 2, got {0}")]
    InvalidN(u64),
    #[error("content bound {bound} must exceed the reference integer {n}")]
    InvalidBound { n: u64, bound: u64 },
}
