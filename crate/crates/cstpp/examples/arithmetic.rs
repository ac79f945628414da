//! Runs every operation on base-N operands and shows that the metered cost
//! does not depend on N.

use cstpp::arith::{Op, OpContext, OpOutput};
use cstpp::radix::OpResult;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (x, y) = (123_456u128, 789u128);
    for n in [256u64, 4096] {
        let ctx = OpContext::standard(n, 3)?;
        println!("N = {n}, d = 3, setup {} instructions", ctx.setup_cost().instruction_count);
        for op in Op::ALL {
            let (out, cost) = ctx.run(op, x, y)?;
            let shown = match &out {
                OpOutput::Order(o) => format!("{o:?}"),
                other => other.number().and_then(OpResult::value).map_or("overflow".into(), |v| v.to_string()),
            };
            println!("  {op:<8} {shown:>12}  cost {}", cost.instruction_count);
        }
    }
    Ok(())
}
