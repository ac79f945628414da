//! Parses and runs RAM programs: a table-building preprocessing program,
//! then a constant-time query against the same memory.

use cstpp::ram::{execute, find_program, parse_program, MachineState, Primitives};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10;
    let mut state = MachineState::with_degree(n, 1)?;
    let prims = Primitives::new();
    let build = find_program("linpp_pred").expect("bundled").parse()?;
    let t = execute(&mut state, &build, &prims, &[])?;
    println!("PRED built in {} instructions", t.final_meter.instruction_count);

    let query = find_program("cstp_pred2").expect("bundled").parse()?;
    for inputs in [[3, 0], [0, 7], [0, 0]] {
        let t = execute(&mut state, &query, &prims, &inputs)?;
        println!("pred({inputs:?}) = {:?} in {} instructions", t.outputs, t.final_meter.instruction_count);
    }

    let own = parse_program(".vars s x\nread x\ns = x + x\noutput s + N\nhalt\n")?;
    println!("2x + N at x = 4: {:?}", own.run_fresh(n, &[4])?.outputs);
    Ok(())
}
