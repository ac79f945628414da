//! Array-level to R-level rewriting.
//!
//! With `S` arrays (padded so that `S ≥ 1` and every primitive's arguments
//! fit in the buffers) and stride `S + 1`, variable `v_i` (1-based) lives in
//! `R[(S+1)·i]` and cell `A_j[x]` in `R[(S+1)(x+1) + j]`. Registers
//! `R[0..=S]` are buffers. Each array instruction becomes a fixed sequence:
//! subexpressions land in temporary variables numbered after the declared
//! ones, and a cell address is built in `R[0]` by `S` additions of the
//! index to itself followed by adding the constant `S + 1 + j`.

use super::exec::MachineState;
use super::program::{Expr, Instruction, Level, Program};
use super::{RamError, ADD};

/// Register of variable `v_i`, `i ≥ 1`, among `s` arrays.
pub fn variable_register(s: u64, i: u64) -> u64 {
    (s + 1) * i
}

/// Register of cell `A_j[i]`, `1 ≤ j ≤ s`.
pub fn cell_register(s: u64, j: u64, i: u64) -> u64 {
    (s + 1) * (i + 1) + j
}

#[derive(Debug, Clone)]
pub struct LoweredProgram {
    pub program: Program,
    /// Lag factor for [`check_lockstep`](super::check_lockstep).
    pub lag_factor: u64,
    /// Longest R-level sequence emitted for one array instruction.
    pub max_block: u64,
    /// `S + 1`.
    pub stride: u64,
    /// Declared plus temporary variables.
    pub variable_slots: u64,
}

impl LoweredProgram {
    /// Content bound that covers the lowered addresses when the array-level
    /// program runs under `bound`.
    pub fn content_bound(&self, bound: u64) -> u64 {
        self.stride
            .saturating_mul(bound.saturating_add(self.variable_slots + 2))
    }

    /// Register of the 0-based declared variable `var`.
    pub fn var_register(&self, var: usize) -> u64 {
        variable_register(self.stride - 1, var as u64 + 1)
    }

    /// Register of cell `index` of the 0-based declared array `array`.
    pub fn cell_register(&self, array: usize, index: u64) -> u64 {
        cell_register(self.stride - 1, array as u64 + 1, index)
    }

    /// A register machine holding the variables and arrays that `original`
    /// declares, copied from `state` into their lowered registers. This lets
    /// a lowered program continue from state left by earlier programs or a
    /// host preload.
    pub fn transfer_state(&self, original: &Program, state: &MachineState) -> Result<MachineState, RamError> {
        let mut r = MachineState::new(state.n(), self.content_bound(state.content_bound()))?;
        for (i, name) in original.variables.iter().enumerate() {
            r.set_register(self.var_register(i), state.var(name));
        }
        for (j, name) in original.arrays.iter().enumerate() {
            for (index, value) in state.array_cells(name) {
                r.set_register(self.cell_register(j, index), value);
            }
        }
        Ok(r)
    }
}

struct Emitter {
    stride: u64,
    s: u64,
    q: usize,
    add: usize,
    code: Vec<Instruction>,
    temps_used: usize,
    next_temp: usize,
}

impl Emitter {
    fn var_reg(&self, var: usize) -> u64 {
        self.stride * (var as u64 + 1)
    }

    fn temp(&mut self) -> u64 {
        let t = self.q + self.next_temp;
        self.next_temp += 1;
        self.temps_used = self.temps_used.max(self.next_temp);
        self.var_reg(t)
    }

    /// `R[0] ← (S+1)(R[reg] + 1) + (array + 1)`.
    fn address(&mut self, reg: u64, array: usize) {
        self.code.push(Instruction::Move { dst: 0, src: reg });
        self.code.push(Instruction::Move { dst: 1, src: reg });
        for _ in 0..self.s {
            self.code.push(Instruction::Op { op: self.add });
        }
        self.code.push(Instruction::Cst {
            dst: 1,
            value: self.stride + array as u64 + 1,
        });
        self.code.push(Instruction::Op { op: self.add });
    }

    /// Emits code leaving the value of `e` in the returned register.
    fn expr(&mut self, e: &Expr) -> u64 {
        match e {
            Expr::Var(v) => self.var_reg(*v),
            Expr::Const(c) => {
                let t = self.temp();
                self.code.push(Instruction::Cst { dst: t, value: *c });
                t
            }
            Expr::RefN => {
                let t = self.temp();
                self.code.push(Instruction::GetN { dst: t });
                t
            }
            Expr::Cell { array, index } => {
                let r = self.expr(index);
                self.address(r, *array);
                let t = self.temp();
                self.code.push(Instruction::Load { dst: t, addr: 0 });
                t
            }
            Expr::Prim { op, args } => {
                let regs: Vec<u64> = args.iter().map(|a| self.expr(a)).collect();
                for (k, r) in regs.into_iter().enumerate() {
                    self.code.push(Instruction::Move {
                        dst: k as u64,
                        src: r,
                    });
                }
                self.code.push(Instruction::Op { op: *op });
                let t = self.temp();
                self.code.push(Instruction::Move { dst: t, src: 0 });
                t
            }
        }
    }
}

/// Rewrites an array-level program into R-instructions.
pub fn lower_to_r(program: &Program) -> Result<LoweredProgram, RamError> {
    if program.level != Level::Array {
        return Err(RamError::WrongLevel {
            at: 0,
            level: Level::Array,
        });
    }
    program.validate()?;
    let s = (program.s() as u64)
        .max(1)
        .max(program.max_arity().saturating_sub(1) as u64);
    let stride = s + 1;
    let mut ops = program.primitive_ops.clone();
    let add = match ops.iter().position(|o| o == ADD) {
        Some(i) => i,
        None => {
            ops.push(ADD.to_string());
            ops.len() - 1
        }
    };
    let mut em = Emitter {
        stride,
        s,
        q: program.q(),
        add,
        code: Vec::new(),
        temps_used: 0,
        next_temp: 0,
    };
    let mut starts = Vec::with_capacity(program.len());
    let mut branches = Vec::new();
    let mut max_block = 0u64;
    for ins in &program.instructions {
        let start = em.code.len();
        starts.push(start);
        em.next_temp = 0;
        match ins {
            Instruction::AssignVar { var, value } => {
                let r = em.expr(value);
                let dst = em.var_reg(*var);
                em.code.push(Instruction::Move { dst, src: r });
            }
            Instruction::AssignCell {
                array,
                index,
                value,
            } => {
                let rv = em.expr(value);
                let ri = em.expr(index);
                em.address(ri, *array);
                em.code.push(Instruction::Store { addr: 0, src: rv });
            }
            Instruction::ReadVar { var } => {
                let dst = em.var_reg(*var);
                em.code.push(Instruction::Input { dst });
            }
            Instruction::ReadCell { array, index } => {
                let ri = em.expr(index);
                em.address(ri, *array);
                em.code.push(Instruction::Input { dst: 1 });
                em.code.push(Instruction::Store { addr: 0, src: 1 });
            }
            Instruction::OutputExpr(e) => {
                let r = em.expr(e);
                em.code.push(Instruction::Output { src: r });
            }
            Instruction::Branch {
                cond,
                if_zero,
                otherwise,
            } => {
                let r = em.expr(cond);
                branches.push((em.code.len(), *if_zero, *otherwise));
                em.code.push(Instruction::Jzero {
                    reg: r,
                    if_zero: 0,
                    otherwise: 0,
                });
            }
            Instruction::Halt => em.code.push(Instruction::Halt),
            _ => unreachable!("validated array-level program"),
        }
        max_block = max_block.max((em.code.len() - start) as u64);
    }
    for (at, z, nz) in branches {
        if let Instruction::Jzero {
            if_zero, otherwise, ..
        } = &mut em.code[at]
        {
            *if_zero = starts[z];
            *otherwise = starts[nz];
        }
    }
    let variable_slots = (program.q() + em.temps_used) as u64;
    let lowered = Program::new(Level::R, em.code, vec![], vec![], ops)?;
    Ok(LoweredProgram {
        program: lowered,
        lag_factor: 2 * max_block - 1,
        max_block,
        stride,
        variable_slots,
    })
}
