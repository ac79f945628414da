//! A constancy and linearity report like `cstpp measure` produces.

use cstpp::arith::{Mode, Op};
use cstpp::cli::{measure, MeasuredOp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = measure(MeasuredOp::Arith(Op::Div), 2, &[16, 64, 256, 1024], 500, Mode::Standard, 42)?;
    print!("{}", report.to_csv()?);
    println!(
        "constant cost: {}, worst preprocessing growth relative to N: {:.2}",
        report.verdicts.constancy, report.verdicts.linearity_ratio
    );
    Ok(())
}
