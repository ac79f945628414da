//! Builds the lookup tables for one reference integer, prints their sizes and
//! build costs, and round-trips them through the binary dump.

use cstpp::tables::TableSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1000;
    let tables = TableSet::build(n, 2)?.with_sequences(2)?;
    println!("N = {n}, B = {}, content bound = {}", tables.b, tables.content_bound);
    for t in tables.named_tables() {
        println!("  {:<8} {:>6} cells", t.name, t.len());
    }
    for (name, cost) in &tables.build_costs {
        println!("  build {name:<12} {:>8} instructions", cost.instruction_count);
    }
    println!("total {} instructions", tables.build_meter().instruction_count);

    let mut dump = Vec::new();
    tables.dump(&mut dump)?;
    let back = TableSet::load(&dump[..])?;
    assert_eq!(back.a_mul, tables.a_mul);
    println!("dump of {} bytes reloads identically", dump.len());
    Ok(())
}
