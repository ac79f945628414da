//! Program transformations.
//!
//! * [`wrap_restore`] turns an array-level procedure into one that logs its
//!   writes and undoes them before returning, at a constant-factor cost.
//! * [`compile_to_expression`] turns a program in the restricted
//!   accumulator language into a single addition expression: a DAG of
//!   sums and memory reads, evaluated without branching.
//! * [`build_mul_expression`] gives the hand-built addition expression for
//!   one-digit multiplication.

mod compile;
mod expr;
mod restore;
mod restricted;

pub use compile::{
    arithmetize, build_mul_expression, compile_to_expression, eliminate_nonadditive, input_name, mul_memory,
    operand_name, symbolic_execute, verify_compiled, verify_mul_expression, Atom, Case, CompileContext, Domain, EliminationTables, GuardedForm,
};
pub use expr::{eval_expression, parse_prefix, validate_addition_expr, Arena, Evaluator, Expression, Memory, Node, NodeId};
pub use restore::{wrap_restore, WrappedProcedure, NB_WRITE};
pub use restricted::{restricted_corpus, Operand, RestrictedProgram, RestrictedSample, Stmt};

use thiserror::Error;

use crate::ram::RamError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("procedure must have exactly one halt, found {0}")]
    MultipleReturns(usize),
    #[error("instruction {0} outputs outside the return block")]
    OutputOutsideReturn(usize),
    #[error("instruction {0} jumps into the middle of the return block")]
    JumpIntoReturn(usize),
    #[error("`{0}` is reserved for the write log")]
    ReservedName(String),
    #[error("only array-level procedures can be wrapped")]
    NotArrayLevel,
    #[error(transparent)]
    Ram(#[from] RamError),
    #[error("line {line}: {message}")]
    RestrictedSyntax { line: usize, message: String },
    #[error("expression text: {0}")]
    ExprSyntax(String),
    #[error("every return must list the same number of buffers, and there must be one")]
    ReturnArity,
    #[error("expected {expected} inputs, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("an execution path exceeds {tau} steps")]
    PathTooLong { tau: u64 },
    #[error("memory read at {0} is outside the image or undefined")]
    MemoryRead(u64),
    #[error("no memory segment named `{0}`")]
    UnknownSegment(String),
    #[error("variable `{0}` is unbound")]
    UnboundVariable(String),
    #[error("{true_guards} guards hold at input {input:?}")]
    PartitionViolated { input: Vec<u64>, true_guards: usize },
    #[error("operand {value} is outside the table base {base}")]
    OperandTooLarge { value: u64, base: u64 },
    #[error("intermediate value {value} reaches the bound {bound}")]
    ValueBound { value: u64, bound: u64 },
    #[error("at input {input:?} expected {expected:?}, got {got:?}")]
    Mismatch {
        input: Vec<u64>,
        expected: Vec<u64>,
        got: Vec<u64>,
    },
    #[error("compiled expression contains a non-additive node")]
    NotAdditive,
    #[error("table construction: {0}")]
    Tables(String),
}
