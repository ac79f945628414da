//! A cost-accounted RAM machine and a library of operations that run in
//! constant time after linear-time table preprocessing.
//!
//! * [`meter`] counts instructions and enforces the content bound.
//! * [`radix`] holds fixed-width numbers and the carry loop.
//! * [`tables`] builds every lookup table from additions alone.
//! * [`arith`] runs add, sub, compare, mul, div and mod on base-`N` operands.
//! * [`inverse`] inverts fast-growing functions through logarithmic buckets.
//! * [`ram`] parses, executes and lowers RAM programs.
//! * [`transform`] wraps procedures so they restore memory, and compiles
//!   restricted programs to addition expressions.
//! * [`cli`] contains the measurement and verification drivers behind the
//!   `cstpp` binary.

pub mod arith;
pub mod cli;
pub mod inverse;
pub mod meter;
pub mod radix;
pub mod ram;
pub mod tables;
pub mod transform;
