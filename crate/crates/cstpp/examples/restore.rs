//! Wraps a procedure so that every call leaves memory as it found it.

use cstpp::ram::{execute, find_program, MachineState, Primitives};
use cstpp::tables::TableSet;
use cstpp::transform::{wrap_restore, WrappedProcedure};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 64;
    let tables = TableSet::build(n, 1)?;
    let mut state = MachineState::new(n, tables.content_bound)?;
    state.load_table_set(&tables);
    let kernel = find_program("mul1").expect("bundled").parse()?;
    let wrapped = wrap_restore(&kernel)?;
    println!(
        "wrapped procedure: {} instructions, cost factors {} / {}",
        wrapped.program.len(),
        wrapped.instruction_factor,
        wrapped.atomic_factor
    );
    let log = WrappedProcedure::log_names();
    let before = state.snapshot_hash(&log);
    for (x, y) in [(63, 62), (5, 9), (0, 40)] {
        let t = execute(&mut state, &wrapped.program, &Primitives::new(), &[x, y])?;
        println!("{x} * {y} = {:?} (base {n} digits)", t.outputs);
    }
    assert_eq!(before, state.snapshot_hash(&log));
    println!("memory snapshot unchanged: {before}");
    Ok(())
}
