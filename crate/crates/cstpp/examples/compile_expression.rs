//! Compiles a branching restricted program into a single addition
//! expression and checks it on every operand.

use cstpp::transform::{
    compile_to_expression, validate_addition_expr, verify_compiled, CompileContext, RestrictedProgram,
};

const SOURCE: &str = "\
# 1 when the low base-B digit of x is zero, else the high digit
.inputs 2
A <- U0
B0 <- A
A <- 0
if A = B0 goto zero else other
zero:
A <- 1
B1 <- A
return B2 B1
other:
A <- U1
B1 <- A
return B2 B1
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 16;
    let program = RestrictedProgram::parse(SOURCE)?;
    let ctx = CompileContext::new(n)?;
    let expr = compile_to_expression(&program, 1, &ctx, None)?;
    assert!(validate_addition_expr(&expr));
    println!("{} nodes: {}", expr.size(), expr.to_prefix());
    let points = verify_compiled(&expr, &program, 1, &ctx)?;
    println!("matches direct execution on all {points} operands");
    Ok(())
}
