//! Lowers an array-level program to register instructions and compares the
//! two runs step for step.

use cstpp::ram::{check_lockstep, execute, find_program, lower_to_r, MachineState, Primitives};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 16;
    let p = find_program("reverse").expect("bundled");
    let program = p.parse()?;
    let lowered = lower_to_r(&program)?;
    println!(
        "{} array instructions become {} register instructions (lag factor {})",
        program.len(),
        lowered.program.len(),
        lowered.lag_factor
    );
    let inputs = p.sample_inputs(n);
    let mut a = MachineState::with_degree(n, 1)?;
    let mut r = lowered.transfer_state(&program, &a)?;
    let prims = Primitives::new();
    let ta = execute(&mut a, &program, &prims, &inputs)?;
    let tr = execute(&mut r, &lowered.program, &prims, &inputs)?;
    println!("outputs {:?} and {:?}", ta.outputs, tr.outputs);
    println!("lockstep: {}", check_lockstep(&ta, &tr, lowered.lag_factor));
    Ok(())
}
