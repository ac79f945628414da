//! The trial quotient digit and divisor normalization used by long division.

use cstpp::arith::{normalize_divisor, trial_quotient};
use cstpp::meter::Meter;
use cstpp::radix::RadixNumber;
use cstpp::tables::TableSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // N = 100 gives inner base B = 10.
    let t = TableSet::build(100, 1)?;
    let mut m = Meter::new(t.content_bound);
    let u = RadixNumber::from_msb(10, &[2, 3, 7])?;
    let y = RadixNumber::from_msb(10, &[6, 5])?;
    let q = trial_quotient(&t, &mut m, &u, &y)?;
    println!("trial digit for 237 / 65 is {q}; true quotient {}", 237 / 65);

    let y = RadixNumber::from_msb(10, &[1, 4])?;
    let u = RadixNumber::from_msb(10, &[0, 3, 6])?;
    let nd = normalize_divisor(&t, &mut m, &u, &y)?;
    println!("14 scaled by {} is {} (carries {:?}); 36 becomes {}", nd.mu, nd.y.value(), nd.carries, nd.u.value());
    Ok(())
}
