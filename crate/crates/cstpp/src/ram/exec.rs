use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::meter::{step_limit_from_env, CostMeter};

use super::program::{Expr, Instruction, Level, Program};
use super::{RamError, ADD};

type PrimFn = dyn Fn(&[u64]) -> Option<u64> + Send + Sync;

/// A unit-cost host operation. `None` from the function means the operation
/// is undefined on those arguments.
#[derive(Clone)]
pub struct Primitive {
    pub arity: usize,
    func: Arc<PrimFn>,
}

impl Primitive {
    pub fn new(arity: usize, func: impl Fn(&[u64]) -> Option<u64> + Send + Sync + 'static) -> Self {
        Primitive {
            arity,
            func: Arc::new(func),
        }
    }

    pub fn apply(&self, args: &[u64]) -> Option<u64> {
        (self.func)(args)
    }
}

impl fmt::Debug for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Primitive(arity {})", self.arity)
    }
}

/// Registry of primitives by name. Addition is always present.
#[derive(Debug, Clone)]
pub struct Primitives {
    map: BTreeMap<String, Primitive>,
}

impl Default for Primitives {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert(
            ADD.to_string(),
            Primitive::new(2, |a| a[0].checked_add(a[1])),
        );
        Primitives { map }
    }
}

impl Primitives {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, prim: Primitive) -> &mut Self {
        self.map.insert(name.to_string(), prim);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Primitive> {
        self.map.get(name)
    }
}

/// Machine memory and accounting. Memory persists across [`execute`] calls,
/// so a preprocessing program can fill arrays that later calls read.
///
/// Variables and arrays are keyed by name: programs sharing names share
/// storage. Cells and registers holding 0 are not stored, matching the
/// all-zero initial memory.
#[derive(Debug, Clone)]
pub struct MachineState {
    n: u64,
    content_bound: u64,
    step_limit: u64,
    registers: BTreeMap<u64, u64>,
    var_slots: HashMap<String, usize>,
    vars: Vec<u64>,
    var_names: Vec<String>,
    array_slots: HashMap<String, usize>,
    arrays: Vec<BTreeMap<u64, u64>>,
    array_names: Vec<String>,
    /// Totals over every execution on this state.
    pub meter: CostMeter,
}

impl MachineState {
    pub fn new(n: u64, content_bound: u64) -> Result<Self, RamError> {
        if n < 2 {
            return Err(RamError::InvalidN(n));
        }
        if content_bound <= n {
            return Err(RamError::InvalidBound {
                n,
                bound: content_bound,
            });
        }
        Ok(MachineState {
            n,
            content_bound,
            step_limit: step_limit_from_env(),
            registers: BTreeMap::new(),
            var_slots: HashMap::new(),
            vars: Vec::new(),
            var_names: Vec::new(),
            array_slots: HashMap::new(),
            arrays: Vec::new(),
            array_names: Vec::new(),
            meter: CostMeter::default(),
        })
    }

    /// Bound `max(4, 2·degree)·N`.
    pub fn with_degree(n: u64, degree: usize) -> Result<Self, RamError> {
        let multiple = (2 * degree as u64).max(4);
        Self::new(n, multiple.saturating_mul(n))
    }

    pub fn with_step_limit(mut self, limit: u64) -> Self {
        self.step_limit = limit;
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn content_bound(&self) -> u64 {
        self.content_bound
    }

    pub fn register(&self, addr: u64) -> u64 {
        self.registers.get(&addr).copied().unwrap_or(0)
    }

    pub fn var(&self, name: &str) -> u64 {
        self.var_slots.get(name).map_or(0, |&s| self.vars[s])
    }

    pub fn cell(&self, array: &str, index: u64) -> u64 {
        self.array_slots
            .get(array)
            .and_then(|&s| self.arrays[s].get(&index).copied())
            .unwrap_or(0)
    }

    pub fn set_var(&mut self, name: &str, value: u64) {
        let s = self.var_slot(name);
        self.vars[s] = value;
    }

    /// Host-side preload of a table, unmetered. Cells with the undefined
    /// marker are skipped.
    pub fn load_array(&mut self, name: &str, data: &[u64]) {
        let s = self.array_slot(name);
        let map = &mut self.arrays[s];
        map.clear();
        for (i, &v) in data.iter().enumerate() {
            if v != 0 && v != crate::meter::UNDEFINED {
                map.insert(i as u64, v);
            }
        }
    }

    /// Preloads every table of `tables` under its own name.
    pub fn load_table_set(&mut self, tables: &crate::tables::TableSet) {
        for t in tables.named_tables() {
            self.load_array(t.name, &t.data);
        }
    }

    /// Nonzero cells of `array` in index order.
    pub fn array_cells(&self, name: &str) -> Vec<(u64, u64)> {
        self.array_slots
            .get(name)
            .map(|&s| self.arrays[s].iter().map(|(&i, &v)| (i, v)).collect())
            .unwrap_or_default()
    }

    /// Host-side register write, unmetered.
    pub fn set_register(&mut self, addr: u64, value: u64) {
        if value == 0 {
            self.registers.remove(&addr);
        } else {
            self.registers.insert(addr, value);
        }
    }

    /// `array[0..len]` as a vector.
    pub fn array_values(&self, name: &str, len: usize) -> Vec<u64> {
        (0..len as u64).map(|i| self.cell(name, i)).collect()
    }

    fn var_slot(&mut self, name: &str) -> usize {
        if let Some(&s) = self.var_slots.get(name) {
            return s;
        }
        self.vars.push(0);
        self.var_names.push(name.to_string());
        self.var_slots.insert(name.to_string(), self.vars.len() - 1);
        self.vars.len() - 1
    }

    fn array_slot(&mut self, name: &str) -> usize {
        if let Some(&s) = self.array_slots.get(name) {
            return s;
        }
        self.arrays.push(BTreeMap::new());
        self.array_names.push(name.to_string());
        self.array_slots.insert(name.to_string(), self.arrays.len() - 1);
        self.arrays.len() - 1
    }

    /// SHA-256 over all registers, variables and arrays whose names are not
    /// excluded, as lowercase hex. Zero cells do not contribute.
    pub fn snapshot_hash(&self, exclude: &[&str]) -> String {
        let mut h = Sha256::new();
        for (&a, &v) in &self.registers {
            if v != 0 {
                h.update(format!("R[{a}]={v};"));
            }
        }
        let mut vars: Vec<(&String, u64)> = self
            .var_names
            .iter()
            .zip(&self.vars)
            .filter(|(n, &v)| v != 0 && !exclude.contains(&n.as_str()))
            .map(|(n, &v)| (n, v))
            .collect();
        vars.sort();
        for (n, v) in vars {
            h.update(format!("{n}={v};"));
        }
        let mut arrays: Vec<(&String, &BTreeMap<u64, u64>)> = self
            .array_names
            .iter()
            .zip(&self.arrays)
            .filter(|(n, _)| !exclude.contains(&n.as_str()))
            .collect();
        arrays.sort_by(|a, b| a.0.cmp(b.0));
        for (n, cells) in arrays {
            for (&i, &v) in cells {
                if v != 0 {
                    h.update(format!("{n}[{i}]={v};"));
                }
            }
        }
        let mut out = String::with_capacity(64);
        for b in h.finalize().iter() {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

/// Record of one execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub inputs: Vec<u64>,
    pub outputs: Vec<u64>,
    pub final_meter: CostMeter,
    /// For each input or output event in order, the 1-based position of
    /// the executing instruction in the run.
    pub io_timestamps: Vec<u64>,
}

struct Run<'a> {
    state: &'a mut MachineState,
    vars: Vec<usize>,
    arrays: Vec<usize>,
    prims: Vec<Primitive>,
    names: &'a [String],
    meter: CostMeter,
    at: usize,
}

impl Run<'_> {
    fn check(&self, value: u64) -> Result<u64, RamError> {
        if value >= self.state.content_bound {
            Err(RamError::BoundViolation {
                at: self.at,
                value,
                bound: self.state.content_bound,
            })
        } else {
            Ok(value)
        }
    }

    fn apply(&self, op: usize, args: &[u64]) -> Result<u64, RamError> {
        let prim = &self.prims[op];
        let v = prim
            .apply(args)
            .ok_or_else(|| RamError::PrimitiveUndefined {
                name: self.names[op].clone(),
                args: args.to_vec(),
            })?;
        self.check(v)
    }

    fn eval(&mut self, e: &Expr) -> Result<u64, RamError> {
        self.meter.charge_nodes(1);
        match e {
            Expr::Const(c) => self.check(*c),
            Expr::RefN => Ok(self.state.n),
            Expr::Var(v) => Ok(self.state.vars[self.vars[*v]]),
            Expr::Cell { array, index } => {
                let i = self.eval(index)?;
                let i = self.check(i)?;
                Ok(self.state.arrays[self.arrays[*array]]
                    .get(&i)
                    .copied()
                    .unwrap_or(0))
            }
            Expr::Prim { op, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                self.apply(*op, &vals)
            }
        }
    }

    fn set_cell(&mut self, array: usize, index: u64, value: u64) -> Result<(), RamError> {
        let index = self.check(index)?;
        let value = self.check(value)?;
        let map = &mut self.state.arrays[self.arrays[array]];
        if value == 0 {
            map.remove(&index);
        } else {
            map.insert(index, value);
        }
        Ok(())
    }

    fn set_reg(&mut self, addr: u64, value: u64) -> Result<(), RamError> {
        let addr = self.check(addr)?;
        let value = self.check(value)?;
        if value == 0 {
            self.state.registers.remove(&addr);
        } else {
            self.state.registers.insert(addr, value);
        }
        Ok(())
    }

    fn reg(&self, addr: u64) -> Result<u64, RamError> {
        let addr = self.check(addr)?;
        Ok(self.state.registers.get(&addr).copied().unwrap_or(0))
    }
}

struct Io<'a> {
    pending: std::slice::Iter<'a, u64>,
    trace: Trace,
}

impl Io<'_> {
    fn read(&mut self, run: &Run, pc: usize) -> Result<u64, RamError> {
        let v = *self.pending.next().ok_or(RamError::InputExhausted { at: pc })?;
        self.trace.inputs.push(v);
        run.check(v)
    }
}

impl Run<'_> {
    /// Executes one instruction; `None` on halt, else the next pc.
    fn step(&mut self, ins: &Instruction, pc: usize, io: &mut Io) -> Result<Option<usize>, RamError> {
        use Instruction::*;
        match ins {
            Halt => return Ok(None),
            Cst { dst, value } => {
                let v = self.check(*value)?;
                self.set_reg(*dst, v)?;
            }
            Move { dst, src } => {
                let v = self.reg(*src)?;
                self.set_reg(*dst, v)?;
            }
            Store { addr, src } => {
                let a = self.reg(*addr)?;
                let v = self.reg(*src)?;
                self.set_reg(a, v)?;
            }
            Load { dst, addr } => {
                let a = self.reg(*addr)?;
                let v = self.reg(a)?;
                self.set_reg(*dst, v)?;
            }
            Jzero {
                reg,
                if_zero,
                otherwise,
            } => {
                let v = self.reg(*reg)?;
                return Ok(Some(if v == 0 { *if_zero } else { *otherwise }));
            }
            Op { op } => {
                let k = self.prims[*op].arity as u64;
                let mut args = Vec::with_capacity(k as usize);
                for r in 0..k {
                    args.push(self.reg(r)?);
                }
                let v = self.apply(*op, &args)?;
                self.set_reg(0, v)?;
            }
            GetN { dst } => {
                let n = self.state.n;
                self.set_reg(*dst, n)?;
            }
            Input { dst } => {
                let v = io.read(self, pc)?;
                self.set_reg(*dst, v)?;
            }
            Output { src } => {
                let v = self.reg(*src)?;
                io.trace.outputs.push(v);
            }
            AssignCell {
                array,
                index,
                value,
            } => {
                let i = self.eval(index)?;
                let v = self.eval(value)?;
                self.set_cell(*array, i, v)?;
            }
            AssignVar { var, value } => {
                let v = self.eval(value)?;
                let v = self.check(v)?;
                self.state.vars[self.vars[*var]] = v;
            }
            ReadCell { array, index } => {
                let i = self.eval(index)?;
                let v = io.read(self, pc)?;
                self.set_cell(*array, i, v)?;
            }
            ReadVar { var } => {
                let v = io.read(self, pc)?;
                self.state.vars[self.vars[*var]] = v;
            }
            OutputExpr(e) => {
                let v = self.eval(e)?;
                io.trace.outputs.push(v);
            }
            Branch {
                cond,
                if_zero,
                otherwise,
            } => {
                let v = self.eval(cond)?;
                return Ok(Some(if v == 0 { *if_zero } else { *otherwise }));
            }
        }
        Ok(Some(pc + 1))
    }
}

/// Runs `program` from instruction 0 to `halt` on `state`, consuming
/// `inputs` in order. Each instruction costs 1; for array-level programs each
/// evaluated expression node adds one atomic step.
pub fn execute(
    state: &mut MachineState,
    program: &Program,
    prims: &Primitives,
    inputs: &[u64],
) -> Result<Trace, RamError> {
    program.validate()?;
    let mut resolved = Vec::with_capacity(program.primitive_ops.len());
    for name in &program.primitive_ops {
        let p = prims
            .get(name)
            .ok_or_else(|| RamError::UnknownPrimitive(name.clone()))?;
        resolved.push(p.clone());
    }
    for ins in &program.instructions {
        check_arity(program, &resolved, ins)?;
    }
    let vars = program.variables.iter().map(|v| state.var_slot(v)).collect();
    let arrays = program.arrays.iter().map(|a| state.array_slot(a)).collect();
    let limit = state.step_limit;
    let mut run = Run {
        state,
        vars,
        arrays,
        prims: resolved,
        names: &program.primitive_ops,
        meter: CostMeter::default(),
        at: 0,
    };
    let mut io = Io {
        pending: inputs.iter(),
        trace: Trace {
            inputs: Vec::new(),
            outputs: Vec::new(),
            final_meter: CostMeter::default(),
            io_timestamps: Vec::new(),
        },
    };
    let mut pc = 0usize;
    let outcome = loop {
        run.at = pc;
        run.meter.charge(1);
        if run.meter.atomic_step_count > limit {
            break Err(RamError::StepLimit { limit });
        }
        let ins = &program.instructions[pc];
        if ins.is_io() {
            io.trace.io_timestamps.push(run.meter.instruction_count);
        }
        let step = run.step(ins, pc, &mut io);
        match step {
            Ok(Some(next)) => pc = next,
            Ok(None) => break Ok(()),
            Err(e) => break Err(e),
        }
    };
    let meter = run.meter;
    run.state.meter.merge(&meter);
    outcome?;
    io.trace.final_meter = meter;
    Ok(io.trace)
}

fn check_arity(program: &Program, prims: &[Primitive], ins: &Instruction) -> Result<(), RamError> {
    fn walk(program: &Program, prims: &[Primitive], e: &Expr) -> Result<(), RamError> {
        match e {
            Expr::Cell { index, .. } => walk(program, prims, index),
            Expr::Prim { op, args } => {
                if prims[*op].arity != args.len() {
                    return Err(RamError::ArityMismatch {
                        name: program.primitive_ops[*op].clone(),
                        expected: prims[*op].arity,
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|a| walk(program, prims, a))
            }
            _ => Ok(()),
        }
    }
    use Instruction::*;
    match ins {
        AssignCell { index, value, .. } => {
            walk(program, prims, index)?;
            walk(program, prims, value)
        }
        AssignVar { value: e, .. } | ReadCell { index: e, .. } | OutputExpr(e) => {
            walk(program, prims, e)
        }
        Branch { cond, .. } => walk(program, prims, cond),
        _ => Ok(()),
    }
}

impl Program {
    /// Convenience wrapper: a fresh state with the default bound for
    /// degree 1, the built-in primitives, and the given inputs.
    pub fn run_fresh(&self, n: u64, inputs: &[u64]) -> Result<Trace, RamError> {
        let mut state = MachineState::with_degree(n, 1)?;
        execute(&mut state, self, &Primitives::new(), inputs)
    }

    pub fn is_array_level(&self) -> bool {
        self.level == Level::Array
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ram::parse_program;

    #[test]
    fn echo_n() {
        let p = parse_program("getn 0\noutput 0\nhalt").unwrap();
        let t = p.run_fresh(7, &[]).unwrap();
        assert_eq!(t.outputs, vec![7]);
        assert_eq!(t.final_meter.instruction_count, 3);
        assert_eq!(t.io_timestamps, vec![2]);
    }

    #[test]
    fn bound_violation_is_reported() {
        // Default bound at degree 1 is 4N = 28.
        let p = parse_program("cst 0 28\nhalt").unwrap();
        assert!(matches!(
            p.run_fresh(7, &[]),
            Err(RamError::BoundViolation { value: 28, bound: 28, .. })
        ));
        let q = parse_program(".vars x\nx = N + N + N + N\nhalt").unwrap();
        assert!(matches!(q.run_fresh(7, &[]), Err(RamError::BoundViolation { .. })));
    }

    #[test]
    fn input_exhaustion_and_step_limit() {
        let p = parse_program("input 1\nhalt").unwrap();
        assert!(matches!(p.run_fresh(7, &[]), Err(RamError::InputExhausted { at: 0 })));
        let spin = parse_program("l: goto l\nhalt").unwrap();
        let mut s = MachineState::with_degree(7, 1).unwrap().with_step_limit(100);
        assert_eq!(
            execute(&mut s, &spin, &Primitives::new(), &[]),
            Err(RamError::StepLimit { limit: 100 })
        );
    }

    #[test]
    fn indirect_store_and_load() {
        let p = parse_program("cst 1 9\ncst 2 5\nstore 1 2\nload 3 1\noutput 3\nhalt").unwrap();
        assert_eq!(p.run_fresh(7, &[]).unwrap().outputs, vec![5]);
    }

    #[test]
    fn atomic_steps_count_nodes() {
        let p = parse_program(".vars x\nx = N + 1\noutput x\nhalt").unwrap();
        let t = p.run_fresh(7, &[]).unwrap();
        assert_eq!(t.final_meter.instruction_count, 3);
        assert_eq!(t.final_meter.atomic_step_count, 3 + 3 + 1);
        assert_eq!(t.outputs, vec![8]);
    }

    #[test]
    fn registered_primitive_and_arity() {
        let mut prims = Primitives::new();
        prims.register("double", Primitive::new(1, |a| Some(2 * a[0])));
        let p = parse_program(".ops double\n.vars x\nread x\noutput double(x)\nhalt").unwrap();
        let mut s = MachineState::with_degree(10, 1).unwrap();
        assert_eq!(execute(&mut s, &p, &prims, &[4]).unwrap().outputs, vec![8]);
        let bad = parse_program(".ops double\noutput double(1, 2)\nhalt").unwrap();
        assert!(matches!(
            execute(&mut s, &bad, &prims, &[]),
            Err(RamError::ArityMismatch { .. })
        ));
        assert!(matches!(
            execute(&mut s, &p, &Primitives::new(), &[4]),
            Err(RamError::UnknownPrimitive(_))
        ));
    }

    #[test]
    fn snapshot_ignores_zero_cells_and_exclusions() {
        let mut a = MachineState::with_degree(10, 1).unwrap();
        let b = a.clone();
        a.load_array("T", &[0, 0, 0]);
        assert_eq!(a.snapshot_hash(&[]), b.snapshot_hash(&[]));
        a.set_var("log", 3);
        assert_ne!(a.snapshot_hash(&[]), b.snapshot_hash(&[]));
        assert_eq!(a.snapshot_hash(&["log"]), b.snapshot_hash(&[]));
    }
}
