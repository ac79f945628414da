//! Reduced mode trades table size for a root of N: setup grows like
//! N^(1/c) while operations still agree with standard mode.

use cstpp::arith::{Mode, Op, OpContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [1u64 << 10, 1 << 14, 1 << 18] {
        let standard = OpContext::standard(n, 2)?;
        let reduced = OpContext::new(n, 2, Mode::Reduced { c: 2 })?;
        let (x, y) = ((n as u128).pow(2) - 3, n as u128 + 7);
        for op in [Op::Mul, Op::Div] {
            assert_eq!(standard.run(op, x, y)?.0, reduced.run(op, x, y)?.0);
        }
        println!(
            "N = {n:>6}: standard setup {:>9}, reduced setup {:>7}",
            standard.setup_cost().instruction_count,
            reduced.setup_cost().instruction_count
        );
    }
    Ok(())
}
