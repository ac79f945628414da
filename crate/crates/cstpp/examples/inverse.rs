//! Constant-time inverses of Fibonacci and factorial, and rebuilding the
//! Fibonacci table from the inverse alone.

use cstpp::inverse::{inverse_primitive, reconstruct_f, InverseOps};
use cstpp::radix::to_radix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 256;
    let ops = InverseOps::new(n, 2)?;
    for x in [1u128, 13, 14, 1000, 65_535] {
        let xe = to_radix(x, n, 2).number().cloned().expect("x below N^2");
        let mut m = ops.meter();
        let fib = ops.fib_inverse(&mut m, &xe)?;
        let fact = ops.fact_inverse(&mut m, &xe)?;
        println!("x = {x:>5}: smallest y with Fib(y) >= x is {fib:>2}, with y! >= x is {fact}");
    }
    let mut prim = inverse_primitive(&ops.fib_index, &ops.fib, &ops.tables);
    let rebuilt = reconstruct_f(&ops.tables, 2, &[0, 1, 1, 2], &mut prim)?;
    let values: Vec<u128> = rebuilt.values.iter().map(|v| v.value()).collect();
    println!("rebuilt Fib(0..={}) = {values:?}", rebuilt.last);
    println!("rebuild cost {} instructions", rebuilt.cost.instruction_count);
    Ok(())
}
