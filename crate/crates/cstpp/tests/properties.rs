//! Property tests over random programs and operands.

use proptest::prelude::*;

use cstpp::arith::{Mode, Op, OpContext, OpOutput};
use cstpp::inverse::InverseOps;
use cstpp::radix::{to_radix, OpResult};
use cstpp::ram::{check_lockstep, execute, find_program, lower_to_r, parse_program, MachineState, Primitives};
use cstpp::tables::TableSet;
use cstpp::transform::{wrap_restore, WrappedProcedure};

const VARS: [&str; 3] = ["a", "b", "c"];

#[derive(Debug, Clone)]
enum Atom {
    Var(usize),
    Const(u64),
    RefN,
    Cell(usize),
}

#[derive(Debug, Clone)]
enum Stmt {
    Read(usize),
    Assign(usize, Atom, Atom),
    Store(usize, Atom),
    Output(Atom),
    /// Forward branch on a variable; offsets are relative to the statement.
    JumpZero(usize, usize, usize),
}

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (0..3usize).prop_map(Atom::Var),
        (0..4u64).prop_map(Atom::Const),
        Just(Atom::RefN),
        (0..3usize).prop_map(Atom::Cell),
    ]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    prop_oneof![
        (0..3usize).prop_map(Stmt::Read),
        (0..3usize, atom(), atom()).prop_map(|(v, x, y)| Stmt::Assign(v, x, y)),
        (0..3usize, atom()).prop_map(|(v, x)| Stmt::Store(v, x)),
        atom().prop_map(Stmt::Output),
        (0..3usize, 1..4usize, 1..4usize).prop_map(|(v, a, b)| Stmt::JumpZero(v, a, b)),
    ]
}

fn render_atom(a: &Atom) -> String {
    match a {
        Atom::Var(v) => VARS[*v].to_string(),
        Atom::Const(c) => c.to_string(),
        Atom::RefN => "N".to_string(),
        Atom::Cell(v) => format!("A[{}]", VARS[*v]),
    }
}

/// Straight-line code with forward branches only, so every run halts.
fn render(body: &[Stmt]) -> String {
    let halt = body.len() + 1;
    let mut src = format!(".vars {}\n.arrays A\n", VARS.join(" "));
    for (i, s) in body.iter().enumerate() {
        let line = match s {
            Stmt::Read(v) => format!("read {}", VARS[*v]),
            Stmt::Assign(v, x, y) => format!("{} = {} + {}", VARS[*v], render_atom(x), render_atom(y)),
            Stmt::Store(v, x) => format!("A[{}] = {}", VARS[*v], render_atom(x)),
            Stmt::Output(x) => format!("output {}", render_atom(x)),
            Stmt::JumpZero(v, a, b) => format!("jzero {} {} {}", VARS[*v], (i + a).min(halt), (i + b).min(halt)),
        };
        src.push_str(&line);
        src.push('\n');
    }
    src.push_str("output a\nhalt\n");
    src
}

fn programs() -> impl Strategy<Value = String> {
    proptest::collection::vec(stmt(), 1..12).prop_map(|b| render(&b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lowering_preserves_io_in_lockstep(
        src in programs(),
        n in 3u64..40,
        inputs in proptest::collection::vec(0u64..3, 0..6),
    ) {
        let p = parse_program(&src).unwrap();
        let prims = Primitives::new();
        let mut a = MachineState::with_degree(n, 1).unwrap();
        let Ok(ta) = execute(&mut a, &p, &prims, &inputs) else {
            return Ok(());
        };
        let lowered = lower_to_r(&p).unwrap();
        let mut r = MachineState::new(n, lowered.content_bound(a.content_bound())).unwrap();
        let tr = execute(&mut r, &lowered.program, &prims, &inputs).unwrap();
        prop_assert_eq!(&ta.inputs, &tr.inputs);
        prop_assert_eq!(&ta.outputs, &tr.outputs);
        prop_assert!(check_lockstep(&ta, &tr, lowered.lag_factor));
    }

    #[test]
    fn execution_is_deterministic_and_bounded(
        src in programs(),
        n in 3u64..40,
        inputs in proptest::collection::vec(0u64..40, 0..6),
    ) {
        let p = parse_program(&src).unwrap();
        let prims = Primitives::new();
        let mut first = MachineState::with_degree(n, 1).unwrap();
        let mut second = MachineState::with_degree(n, 1).unwrap();
        let a = execute(&mut first, &p, &prims, &inputs);
        let b = execute(&mut second, &p, &prims, &inputs);
        prop_assert_eq!(&a, &b);
        if a.is_ok() {
            let bound = first.content_bound();
            for v in VARS {
                prop_assert!(first.var(v) < bound);
            }
            prop_assert!(first.array_cells("A").iter().all(|&(i, v)| i < bound && v < bound));
            prop_assert_eq!(first.snapshot_hash(&[]), second.snapshot_hash(&[]));
        }
    }

    #[test]
    fn division_identity(x in 0u128..1 << 30, y in 1u128..1 << 30) {
        let c = OpContext::standard(1024, 3).unwrap();
        let (q, _) = c.run(Op::Div, x, y).unwrap();
        let (r, _) = c.run(Op::Mod, x, y).unwrap();
        let q = q.number().and_then(OpResult::value).unwrap();
        let r = r.number().and_then(OpResult::value).unwrap();
        prop_assert_eq!(q * y + r, x);
        prop_assert!(r < y);
    }

    #[test]
    fn reduced_mode_matches_standard(x in 0u128..65536, y in 0u128..65536) {
        let standard = OpContext::standard(256, 2).unwrap();
        let reduced = OpContext::new(256, 2, Mode::Reduced { c: 2 }).unwrap();
        for op in [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Mod] {
            let s = standard.run(op, x, y).map(|(o, _)| o);
            let r = reduced.run(op, x, y).map(|(o, _)| o);
            prop_assert_eq!(s, r, "{}({}, {})", op, x, y);
        }
    }

    #[test]
    fn inverse_is_minimal_and_monotone(x in 1u128..4095) {
        let ops = InverseOps::new(64, 2).unwrap();
        let enc = |v| match to_radix(v, 64, 2) {
            OpResult::Value(r) => r,
            OpResult::Overflow => unreachable!(),
        };
        let mut m = ops.meter();
        let here = ops.fib_inverse(&mut m, &enc(x)).unwrap();
        let next = ops.fib_inverse(&mut m, &enc(x + 1)).unwrap();
        prop_assert!(here <= next);
        let fib = |y: u64| (0..y).fold((0u128, 1u128), |(a, b), _| (b, a + b)).0;
        prop_assert!(fib(here) >= x);
        prop_assert!(here == 0 || fib(here - 1) < x);
    }

    #[test]
    fn wrapped_kernels_restore_memory(n in 5u64..300, x in 0u64..1 << 20, y in 0u64..1 << 20) {
        let (x, y) = (x % n, y % n);
        for name in ["mul1", "add2"] {
            let p = find_program(name).unwrap();
            let tables = TableSet::build(n, 1).unwrap();
            let mut state = MachineState::new(n, tables.content_bound).unwrap();
            state.load_table_set(&tables);
            for dep in p.requires {
                execute(&mut state, &find_program(dep).unwrap().parse().unwrap(), &Primitives::new(), &[]).unwrap();
            }
            let wrapped = wrap_restore(&p.parse().unwrap()).unwrap();
            let inputs: Vec<u64> = if name == "mul1" { vec![x, y] } else { vec![x, y, y, x] };
            let before = state.snapshot_hash(&WrappedProcedure::log_names());
            let t = execute(&mut state, &wrapped.program, &Primitives::new(), &inputs).unwrap();
            prop_assert_eq!(t.outputs, p.expected(n, &inputs));
            prop_assert_eq!(state.snapshot_hash(&WrappedProcedure::log_names()), before);
        }
    }
}

#[test]
fn compare_agrees_with_host_order() {
    let c = OpContext::standard(16, 2).unwrap();
    for (x, y) in [(0, 0), (3, 200), (255, 17)] {
        let (o, _) = c.run(Op::Compare, x, y).unwrap();
        assert_eq!(o, OpOutput::Order(x.cmp(&y)));
    }
}
