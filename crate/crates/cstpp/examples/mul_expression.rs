//! The hand-built addition expression for one-digit products.

use cstpp::tables::TableSet;
use cstpp::transform::{build_mul_expression, eval_expression, mul_memory, verify_mul_expression};
use std::collections::BTreeMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 64;
    let tables = TableSet::build(n, 1)?;
    let mem = mul_memory(&tables);
    let expr = build_mul_expression(&mem)?;
    println!("{} shared nodes", expr.size());
    let vars = BTreeMap::from([("x".to_string(), 61), ("y".to_string(), 59)]);
    let (digits, steps) = eval_expression(&expr, &vars, n, &mem)?;
    println!("61 * 59 = {} * {n} + {} in {steps} steps", digits[0], digits[1]);
    println!("verified on {} pairs", verify_mul_expression(&expr, n, &mem)?);
    Ok(())
}
