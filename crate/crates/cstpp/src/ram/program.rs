use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{RamError, ADD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    R,
    Array,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::R => "r",
            Level::Array => "array",
        })
    }
}

/// Array-level expression. Variables and arrays are indices into the
/// declaration lists of the owning [`Program`]; primitives index
/// [`Program::primitive_ops`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(u64),
    RefN,
    Var(usize),
    Cell { array: usize, index: Box<Expr> },
    Prim { op: usize, args: Vec<Expr> },
}

impl Expr {
    pub fn cell(array: usize, index: Expr) -> Expr {
        Expr::Cell {
            array,
            index: Box::new(index),
        }
    }

    /// Number of nodes, the atomic-step cost of one evaluation.
    pub fn node_count(&self) -> u64 {
        match self {
            Expr::Const(_) | Expr::RefN | Expr::Var(_) => 1,
            Expr::Cell { index, .. } => 1 + index.node_count(),
            Expr::Prim { args, .. } => 1 + args.iter().map(Expr::node_count).sum::<u64>(),
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Cell { index, .. } => index.visit(f),
            Expr::Prim { args, .. } => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    /// `R[dst] ← value`
    Cst { dst: u64, value: u64 },
    /// `R[dst] ← R[src]`
    Move { dst: u64, src: u64 },
    /// `R[R[addr]] ← R[src]`
    Store { addr: u64, src: u64 },
    /// `R[dst] ← R[R[addr]]`
    Load { dst: u64, addr: u64 },
    Jzero { reg: u64, if_zero: usize, otherwise: usize },
    /// `R[0] ← op(R[0], …, R[k−1])`
    Op { op: usize },
    GetN { dst: u64 },
    Input { dst: u64 },
    Output { src: u64 },
    Halt,
    AssignCell { array: usize, index: Expr, value: Expr },
    AssignVar { var: usize, value: Expr },
    ReadCell { array: usize, index: Expr },
    ReadVar { var: usize },
    OutputExpr(Expr),
    Branch { cond: Expr, if_zero: usize, otherwise: usize },
}

impl Instruction {
    /// `None` for `Halt`, which both levels share.
    pub fn level(&self) -> Option<Level> {
        use Instruction::*;
        match self {
            Halt => None,
            Cst { .. } | Move { .. } | Store { .. } | Load { .. } | Jzero { .. } | Op { .. }
            | GetN { .. } | Input { .. } | Output { .. } => Some(Level::R),
            _ => Some(Level::Array),
        }
    }

    pub fn targets(&self) -> Option<(usize, usize)> {
        match *self {
            Instruction::Jzero {
                if_zero, otherwise, ..
            }
            | Instruction::Branch {
                if_zero, otherwise, ..
            } => Some((if_zero, otherwise)),
            _ => None,
        }
    }

    pub fn is_io(&self) -> bool {
        use Instruction::*;
        matches!(
            self,
            Input { .. } | Output { .. } | ReadCell { .. } | ReadVar { .. } | OutputExpr(_)
        )
    }

    fn exprs(&self) -> Vec<&Expr> {
        use Instruction::*;
        match self {
            AssignCell { index, value, .. } => vec![index, value],
            AssignVar { value, .. } => vec![value],
            ReadCell { index, .. } => vec![index],
            OutputExpr(e) => vec![e],
            Branch { cond, .. } => vec![cond],
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub level: Level,
    pub instructions: Vec<Instruction>,
    pub variables: Vec<String>,
    pub arrays: Vec<String>,
    pub primitive_ops: Vec<String>,
    /// Label name to instruction index, kept for printing.
    pub labels: BTreeMap<String, usize>,
}

impl Program {
    /// Assembles and validates a program.
    pub fn new(
        level: Level,
        instructions: Vec<Instruction>,
        variables: Vec<String>,
        arrays: Vec<String>,
        primitive_ops: Vec<String>,
    ) -> Result<Program, RamError> {
        let p = Program {
            level,
            instructions,
            variables,
            arrays,
            primitive_ops,
            labels: BTreeMap::new(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Number of declared variables.
    pub fn q(&self) -> usize {
        self.variables.len()
    }

    /// Number of declared arrays.
    pub fn s(&self) -> usize {
        self.arrays.len()
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn array_index(&self, name: &str) -> Option<usize> {
        self.arrays.iter().position(|a| a == name)
    }

    pub fn op_index(&self, name: &str) -> Option<usize> {
        self.primitive_ops.iter().position(|o| o == name)
    }

    /// Largest argument count of any primitive use; R-level `op` uses are
    /// resolved against the registry at run time and count as zero here.
    pub fn max_arity(&self) -> usize {
        let mut best = 0;
        for ins in &self.instructions {
            for e in ins.exprs() {
                e.visit(&mut |n| {
                    if let Expr::Prim { args, .. } = n {
                        best = best.max(args.len());
                    }
                });
            }
        }
        best
    }

    pub fn validate(&self) -> Result<(), RamError> {
        if self.instructions.last() != Some(&Instruction::Halt) {
            return Err(RamError::MissingHalt);
        }
        let len = self.len();
        for (at, ins) in self.instructions.iter().enumerate() {
            if let Some(level) = ins.level() {
                if level != self.level {
                    return Err(RamError::WrongLevel {
                        at,
                        level: self.level,
                    });
                }
            }
            if let Some((a, b)) = ins.targets() {
                for target in [a, b] {
                    if target >= len {
                        return Err(RamError::UndefinedTarget { at, target, len });
                    }
                }
            }
            let bad = |what, index| RamError::BadReference { at, what, index };
            match ins {
                Instruction::Op { op } if *op >= self.primitive_ops.len() => {
                    return Err(bad("primitive", *op))
                }
                Instruction::AssignVar { var, .. } | Instruction::ReadVar { var }
                    if *var >= self.q() =>
                {
                    return Err(bad("variable", *var))
                }
                Instruction::AssignCell { array, .. } | Instruction::ReadCell { array, .. }
                    if *array >= self.s() =>
                {
                    return Err(bad("array", *array))
                }
                _ => {}
            }
            for e in ins.exprs() {
                let mut err = None;
                e.visit(&mut |n| match n {
                    Expr::Var(v) if *v >= self.q() => err = Some(bad("variable", *v)),
                    Expr::Cell { array, .. } if *array >= self.s() => {
                        err = Some(bad("array", *array))
                    }
                    Expr::Prim { op, .. } if *op >= self.primitive_ops.len() => {
                        err = Some(bad("primitive", *op))
                    }
                    _ => {}
                });
                if let Some(e) = err {
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    /// Source text that parses back to the same instructions. Branch targets
    /// are printed as instruction numbers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, ".level {}", self.level);
        for (dir, names) in [
            (".vars", &self.variables),
            (".arrays", &self.arrays),
            (".ops", &self.primitive_ops),
        ] {
            let names: Vec<&str> = names
                .iter()
                .map(String::as_str)
                .filter(|n| !(dir == ".ops" && *n == ADD))
                .collect();
            if !names.is_empty() {
                let _ = writeln!(out, "{dir} {}", names.join(" "));
            }
        }
        for ins in &self.instructions {
            let _ = writeln!(out, "{}", self.instruction_text(ins));
        }
        out
    }

    pub fn instruction_text(&self, ins: &Instruction) -> String {
        use Instruction::*;
        let e = |x: &Expr| self.expr_text(x, false);
        match ins {
            Cst { dst, value } => format!("cst {dst} {value}"),
            Move { dst, src } => format!("move {dst} {src}"),
            Store { addr, src } => format!("store {addr} {src}"),
            Load { dst, addr } => format!("load {dst} {addr}"),
            Jzero {
                reg,
                if_zero,
                otherwise,
            } => format!("jzero {reg} {if_zero} {otherwise}"),
            Op { op } => format!("op {}", self.primitive_ops[*op]),
            GetN { dst } => format!("getn {dst}"),
            Input { dst } => format!("input {dst}"),
            Output { src } => format!("output {src}"),
            Halt => "halt".into(),
            AssignCell {
                array,
                index,
                value,
            } => format!("{}[{}] = {}", self.arrays[*array], e(index), e(value)),
            AssignVar { var, value } => format!("{} = {}", self.variables[*var], e(value)),
            ReadCell { array, index } => format!("read {}[{}]", self.arrays[*array], e(index)),
            ReadVar { var } => format!("read {}", self.variables[*var]),
            OutputExpr(x) => format!("output {}", e(x)),
            Branch {
                cond,
                if_zero,
                otherwise,
            } => format!("jzero {} {if_zero} {otherwise}", e(cond)),
        }
    }

    fn expr_text(&self, e: &Expr, nested_sum: bool) -> String {
        match e {
            Expr::Const(c) => c.to_string(),
            Expr::RefN => "N".into(),
            Expr::Var(v) => self.variables[*v].clone(),
            Expr::Cell { array, index } => {
                format!("{}[{}]", self.arrays[*array], self.expr_text(index, false))
            }
            Expr::Prim { op, args } if self.primitive_ops[*op] == ADD && args.len() == 2 => {
                let text = format!(
                    "{} + {}",
                    self.expr_text(&args[0], false),
                    self.expr_text(&args[1], true)
                );
                if nested_sum {
                    format!("({text})")
                } else {
                    text
                }
            }
            Expr::Prim { op, args } => {
                let args: Vec<String> = args.iter().map(|a| self.expr_text(a, false)).collect();
                format!("{}({})", self.primitive_ops[*op], args.join(", "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_targets_and_missing_halt() {
        let jump = Instruction::Jzero {
            reg: 0,
            if_zero: 7,
            otherwise: 0,
        };
        assert!(matches!(
            Program::new(Level::R, vec![jump, Instruction::Halt], vec![], vec![], vec![]),
            Err(RamError::UndefinedTarget { target: 7, .. })
        ));
        assert_eq!(
            Program::new(Level::R, vec![Instruction::GetN { dst: 0 }], vec![], vec![], vec![]),
            Err(RamError::MissingHalt)
        );
    }

    #[test]
    fn levels_cannot_mix() {
        let ins = vec![Instruction::OutputExpr(Expr::RefN), Instruction::Halt];
        assert!(matches!(
            Program::new(Level::R, ins, vec![], vec![], vec![]),
            Err(RamError::WrongLevel { .. })
        ));
    }

    #[test]
    fn node_count() {
        let e = Expr::Prim {
            op: 0,
            args: vec![Expr::cell(0, Expr::Var(0)), Expr::Const(1)],
        };
        assert_eq!(e.node_count(), 4);
    }
}
