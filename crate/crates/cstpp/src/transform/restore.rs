//! The restore wrapper: log every write, then undo the log before
//! returning, so a call leaves memory exactly as it found it.

use std::collections::BTreeSet;

use crate::ram::{Expr, Instruction, Level, Program, ADD};

use super::TransformError;

/// Previous value of the `k`-th write.
pub const OLD: &str = "Old";
/// Identifier of the location of the `k`-th write: `v + 1` for variable
/// `v`, `q + a + 1` for array `a`.
pub const DEST: &str = "Dest";
/// Cell index of the `k`-th write when it targets an array.
pub const INDEX: &str = "Index";
/// `Back[k + 1] = k`, so the replay can count down with additions only.
pub const BACK: &str = "Back";
pub const RETURN_VALUE: &str = "ReturnValue";
/// Scratch array for the equality tests that dispatch each undo.
pub const DISPATCH: &str = "RestoreEqual";
pub const NB_WRITE: &str = "NbWrite";
pub const SLOT: &str = "RestoreSlot";

const LOG_ARRAYS: [&str; 6] = [OLD, DEST, INDEX, BACK, RETURN_VALUE, DISPATCH];
const LOG_VARS: [&str; 2] = [NB_WRITE, SLOT];

/// A wrapped procedure and the constants bounding its overhead.
#[derive(Debug, Clone)]
pub struct WrappedProcedure {
    pub program: Program,
    /// Wrapped instruction count ≤ this × original instruction count.
    pub instruction_factor: u64,
    /// Same bound for atomic steps.
    pub atomic_factor: u64,
}

impl WrappedProcedure {
    /// Names the memory snapshot must skip: the log itself.
    pub fn log_names() -> Vec<&'static str> {
        LOG_ARRAYS.iter().chain(&LOG_VARS).copied().collect()
    }
}

struct Layout {
    add: usize,
    nb: usize,
    slot: usize,
    old: usize,
    dest: usize,
    index: usize,
    back: usize,
    ret: usize,
    dispatch: usize,
}

impl Layout {
    fn sum(&self, a: Expr, b: Expr) -> Expr {
        Expr::Prim {
            op: self.add,
            args: vec![a, b],
        }
    }

    fn at_top(&self, array: usize) -> Expr {
        Expr::cell(array, Expr::Var(self.nb))
    }

    fn assign_at_top(&self, array: usize, value: Expr) -> Instruction {
        Instruction::AssignCell {
            array,
            index: Expr::Var(self.nb),
            value,
        }
    }

    /// `Back[NbWrite + 1] = NbWrite; NbWrite = NbWrite + 1`
    fn advance(&self, out: &mut Vec<Instruction>) {
        let next = self.sum(Expr::Var(self.nb), Expr::Const(1));
        out.push(Instruction::AssignCell {
            array: self.back,
            index: next.clone(),
            value: Expr::Var(self.nb),
        });
        out.push(Instruction::AssignVar {
            var: self.nb,
            value: next,
        });
    }
}

fn goto(target: usize) -> Instruction {
    Instruction::Branch {
        cond: Expr::Const(0),
        if_zero: target,
        otherwise: target,
    }
}

/// Rewrites `procedure` so that each assignment (and each `read`) first
/// logs the overwritten value, and the single return stores its values,
/// replays the log backwards and only then outputs them and halts.
///
/// The procedure must have exactly one `halt`, and its outputs must form
/// one block directly before it that is entered only at its start.
pub fn wrap_restore(procedure: &Program) -> Result<WrappedProcedure, TransformError> {
    if procedure.level != Level::Array {
        return Err(TransformError::NotArrayLevel);
    }
    for name in procedure.variables.iter().chain(&procedure.arrays) {
        if LOG_ARRAYS.contains(&name.as_str()) || LOG_VARS.contains(&name.as_str()) {
            return Err(TransformError::ReservedName(name.clone()));
        }
    }
    let ins = &procedure.instructions;
    let halts: Vec<usize> = (0..ins.len()).filter(|&i| ins[i] == Instruction::Halt).collect();
    let [halt] = halts[..] else {
        return Err(TransformError::MultipleReturns(halts.len()));
    };
    let mut ret_start = halt;
    while ret_start > 0 && matches!(ins[ret_start - 1], Instruction::OutputExpr(_)) {
        ret_start -= 1;
    }
    let returned: Vec<Expr> = ins[ret_start..halt]
        .iter()
        .map(|i| match i {
            Instruction::OutputExpr(e) => e.clone(),
            _ => unreachable!("return block holds outputs only"),
        })
        .collect();
    for (at, i) in ins[..ret_start].iter().enumerate() {
        if matches!(i, Instruction::OutputExpr(_)) {
            return Err(TransformError::OutputOutsideReturn(at));
        }
        if let Some((a, b)) = i.targets() {
            if a > ret_start || b > ret_start {
                return Err(TransformError::JumpIntoReturn(at));
            }
        }
    }

    let q = procedure.q();
    let mut variables = procedure.variables.clone();
    let mut arrays = procedure.arrays.clone();
    let mut primitive_ops = procedure.primitive_ops.clone();
    let add = match procedure.op_index(ADD) {
        Some(i) => i,
        None => {
            primitive_ops.push(ADD.into());
            primitive_ops.len() - 1
        }
    };
    let push = |list: &mut Vec<String>, name: &str| {
        list.push(name.to_string());
        list.len() - 1
    };
    let l = Layout {
        add,
        nb: push(&mut variables, NB_WRITE),
        slot: push(&mut variables, SLOT),
        old: push(&mut arrays, OLD),
        dest: push(&mut arrays, DEST),
        index: push(&mut arrays, INDEX),
        back: push(&mut arrays, BACK),
        ret: push(&mut arrays, RETURN_VALUE),
        dispatch: push(&mut arrays, DISPATCH),
    };

    // Locations written anywhere, as dispatch identifiers.
    let mut written = BTreeSet::new();
    for i in &ins[..ret_start] {
        match i {
            Instruction::AssignVar { var, .. } | Instruction::ReadVar { var } => {
                written.insert(var + 1);
            }
            Instruction::AssignCell { array, .. } | Instruction::ReadCell { array, .. } => {
                written.insert(q + array + 1);
            }
            _ => {}
        }
    }

    let mut out = vec![Instruction::AssignVar {
        var: l.nb,
        value: Expr::Const(0),
    }];
    let mut start = vec![0usize; ret_start + 1];
    for (at, i) in ins[..ret_start].iter().enumerate() {
        start[at] = out.len();
        match i {
            Instruction::AssignVar { var, .. } | Instruction::ReadVar { var } => {
                out.push(l.assign_at_top(l.old, Expr::Var(*var)));
                out.push(l.assign_at_top(l.dest, Expr::Const(*var as u64 + 1)));
                out.push(i.clone());
                l.advance(&mut out);
            }
            Instruction::AssignCell { array, index, .. } | Instruction::ReadCell { array, index } => {
                out.push(l.assign_at_top(l.old, Expr::cell(*array, index.clone())));
                out.push(l.assign_at_top(l.dest, Expr::Const((q + array + 1) as u64)));
                out.push(l.assign_at_top(l.index, index.clone()));
                out.push(i.clone());
                l.advance(&mut out);
            }
            other => out.push(other.clone()),
        }
    }
    start[ret_start] = out.len();
    for (j, e) in returned.iter().enumerate() {
        out.push(Instruction::AssignCell {
            array: l.ret,
            index: Expr::Const(j as u64),
            value: e.clone(),
        });
    }

    // Replay: while NbWrite ≠ 0, step back and undo the write it names.
    let head = out.len();
    out.push(Instruction::Branch {
        cond: Expr::Var(l.nb),
        if_zero: usize::MAX,
        otherwise: head + 1,
    });
    out.push(Instruction::AssignVar {
        var: l.nb,
        value: l.at_top(l.back),
    });
    out.push(Instruction::AssignVar {
        var: l.slot,
        value: l.at_top(l.dest),
    });
    let slot_cell = || Expr::cell(l.dispatch, Expr::Var(l.slot));
    let mut tests = Vec::new();
    for &id in &written {
        out.push(Instruction::AssignCell {
            array: l.dispatch,
            index: Expr::Var(l.slot),
            value: Expr::Const(1),
        });
        out.push(Instruction::AssignCell {
            array: l.dispatch,
            index: Expr::Const(id as u64),
            value: Expr::Const(0),
        });
        tests.push(out.len());
        out.push(Instruction::Branch {
            cond: slot_cell(),
            if_zero: usize::MAX,
            otherwise: out.len() + 1,
        });
    }
    out.push(goto(head));
    for (&id, &test) in written.iter().zip(&tests) {
        let handler = out.len();
        if let Instruction::Branch { if_zero, .. } = &mut out[test] {
            *if_zero = handler;
        }
        let old = l.at_top(l.old);
        out.push(if id <= q {
            Instruction::AssignVar { var: id - 1, value: old }
        } else {
            Instruction::AssignCell {
                array: id - q - 1,
                index: l.at_top(l.index),
                value: old,
            }
        });
        out.push(goto(head));
    }
    let end = out.len();
    if let Instruction::Branch { if_zero, .. } = &mut out[head] {
        *if_zero = end;
    }
    for j in 0..returned.len() {
        out.push(Instruction::OutputExpr(Expr::cell(l.ret, Expr::Const(j as u64))));
    }
    out.push(Instruction::Halt);

    for i in &mut out[1..start[ret_start]] {
        if let Instruction::Branch {
            if_zero, otherwise, ..
        } = i
        {
            *if_zero = start[*if_zero];
            *otherwise = start[*otherwise];
        }
    }

    let mut program = Program::new(Level::Array, out, variables, arrays, primitive_ops)?;
    program.labels = procedure.labels.iter().map(|(k, &v)| (k.clone(), start[v.min(ret_start)])).collect();
    let ids = written.len() as u64;
    Ok(WrappedProcedure {
        program,
        instruction_factor: 11 + 3 * ids,
        atomic_factor: 36 + 9 * ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ram::{execute, parse_program, MachineState, Primitives};

    fn wrapped(src: &str) -> WrappedProcedure {
        wrap_restore(&parse_program(src).unwrap()).unwrap()
    }

    #[test]
    fn single_write_is_restored() {
        let src = ".vars v\nv = N + 1\noutput v\nhalt\n";
        let w = wrapped(src);
        let mut state = MachineState::new(8, 64).unwrap();
        state.set_var("v", 5);
        let before = state.snapshot_hash(&WrappedProcedure::log_names());
        let trace = execute(&mut state, &w.program, &Primitives::new(), &[]).unwrap();
        assert_eq!(trace.outputs, vec![9]);
        assert_eq!(state.var("v"), 5);
        assert_eq!(state.var(NB_WRITE), 0);
        assert_eq!(state.snapshot_hash(&WrappedProcedure::log_names()), before);
    }

    #[test]
    fn loops_and_cells_are_restored() {
        let src = "\
.vars i x
.arrays A
read x
i = 0
top: A[i] = x + i
i = i + 1
jeq i 4 done top
done: return A[3], i
";
        let w = wrapped(src);
        let plain = parse_program(src).unwrap();
        let mut state = MachineState::new(16, 256).unwrap();
        state.load_array("A", &[7, 7, 7, 7, 7]);
        let before = state.snapshot_hash(&WrappedProcedure::log_names());
        let prims = Primitives::new();
        let t = execute(&mut state, &w.program, &prims, &[10]).unwrap();
        assert_eq!(t.outputs, vec![13, 4]);
        assert_eq!(state.snapshot_hash(&WrappedProcedure::log_names()), before);
        let mut fresh = MachineState::new(16, 256).unwrap();
        let o = execute(&mut fresh, &plain, &prims, &[10]).unwrap();
        assert_eq!(o.outputs, t.outputs);
        assert!(t.final_meter.instruction_count <= w.instruction_factor * o.final_meter.instruction_count);
        assert!(t.final_meter.atomic_step_count <= w.atomic_factor * o.final_meter.atomic_step_count);
    }

    #[test]
    fn rejections() {
        let two_halts = parse_program(".vars v\njzero v a b\na: halt\nb: halt\n").unwrap();
        assert_eq!(wrap_restore(&two_halts).unwrap_err(), TransformError::MultipleReturns(2));
        let stray = parse_program(".vars v\noutput v\nv = 1\noutput v\nhalt\n").unwrap();
        assert_eq!(wrap_restore(&stray).unwrap_err(), TransformError::OutputOutsideReturn(0));
        let log = parse_program(".arrays Old\nOld[0] = 1\nhalt\n").unwrap();
        assert_eq!(wrap_restore(&log).unwrap_err(), TransformError::ReservedName("Old".into()));
        let r = parse_program("cst 0 1\nhalt\n").unwrap();
        assert_eq!(wrap_restore(&r).unwrap_err(), TransformError::NotArrayLevel);
        let into = parse_program(".vars v\njzero v 2 1\noutput v\noutput 1\nhalt\n").unwrap();
        assert_eq!(wrap_restore(&into).unwrap_err(), TransformError::JumpIntoReturn(0));
    }
}
