//! Every table of every `TableSet` with `N ≤ 4096`, checked index by index
//! against its defining formula.

use cstpp::meter::{Table, UNDEFINED};
use cstpp::tables::TableSet;

fn ceil_sqrt(n: u64) -> u64 {
    (1..).find(|b| b * b >= n).unwrap()
}

fn expect(t: &Table, len: usize, f: impl Fn(u64) -> Option<u64>) -> Result<(), String> {
    if t.data.len() < len {
        return Err(format!("{} has {} cells, needs {len}", t.name, t.data.len()));
    }
    for i in 0..len {
        let want = f(i as u64);
        let got = t.data[i];
        if let Some(w) = want {
            if got != w {
                return Err(format!("{}[{i}] = {got}, want {w}", t.name));
            }
        } else if got != UNDEFINED {
            return Err(format!("{}[{i}] = {got}, want undefined", t.name));
        }
    }
    Ok(())
}

fn check(n: u64) -> Result<(), String> {
    let t = TableSet::build(n, 1).map_err(|e| e.to_string())?;
    let b = ceil_sqrt(n);
    if t.b != b {
        return Err(format!("B = {}, want {b}", t.b));
    }
    let bound = t.content_bound as usize;
    expect(&t.pred, n as usize + 1, |x| x.checked_sub(1))?;
    expect(&t.div_b, bound, |x| Some(x / b))?;
    expect(&t.mod_b, bound, |x| Some(x % b))?;
    expect(&t.mult_b, 2 * b as usize, |x| Some(b * x))?;
    expect(&t.a_mul, (b * b) as usize, |i| Some((i / b) * (i % b)))?;
    expect(&t.a_diff, (4 * b * b) as usize, |i| Some((i / (2 * b)).saturating_sub(i % (2 * b))))?;
    let digit = |f: fn(u64, u64, u64) -> u64| {
        move |i: u64| {
            let (x, y) = (i / b, i % b);
            (y != 0).then(|| f(x, y, b))
        }
    };
    expect(&t.a_div, (b * b) as usize, digit(|x, y, _| x / y))?;
    expect(&t.a_mod, (b * b) as usize, digit(|x, y, _| x % y))?;
    expect(&t.a_bdiv, (b * b) as usize, digit(|x, y, b| b * x / y))?;
    expect(&t.a_bmod, (b * b) as usize, digit(|x, y, b| b * x % y))?;
    expect(&t.log2, 2 * n as usize, |x| (x > 0).then(|| 63 - x.leading_zeros() as u64))?;
    expect(&t.div_n, 2 * n as usize, |v| Some(v / n))?;
    expect(&t.mod_n, 2 * n as usize, |v| Some(v % n))?;
    expect(&t.t1, 2 * n as usize, |v| Some(v * b / n))?;
    expect(&t.t0, 2 * n as usize, |v| Some(v * b % n))?;
    Ok(())
}

#[test]
fn every_table_up_to_4096() {
    let failures: Vec<String> = (2..=4096u64)
        .filter_map(|n| check(n).err().map(|e| format!("N={n}: {e}")))
        .take(10)
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}
