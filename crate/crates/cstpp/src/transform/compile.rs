//! Restricted program → guarded form → arithmetic expression → addition
//! expression, and the composed pipeline over base-`N` operands.

use std::collections::HashMap;

use crate::meter::Meter;
use crate::tables::{build_mul_table, TableSet};

use super::expr::{Arena, Evaluator, Expression, Memory, Node, NodeId};
use super::restricted::{Operand, RestrictedProgram, Stmt};
use super::TransformError;

/// `lhs = rhs` when `equal`, `lhs ≠ rhs` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Atom {
    pub lhs: NodeId,
    pub rhs: NodeId,
    pub equal: bool,
}

#[derive(Debug, Clone)]
pub struct Case {
    /// Conjunction; empty means true.
    pub guard: Vec<Atom>,
    pub payload: Vec<NodeId>,
}

/// One case per execution path, over the variables `u0, u1, …`.
#[derive(Debug, Clone)]
pub struct GuardedForm {
    pub arena: Arena,
    pub cases: Vec<Case>,
    pub tau: u64,
    pub inputs: usize,
}

/// Variable name of input `U{i}` in compiled forms.
pub fn input_name(i: usize) -> String {
    format!("u{i}")
}

/// Variable name of base-`N` operand digit `i` in composed expressions.
pub fn operand_name(i: usize) -> String {
    format!("x{i}")
}

struct Path {
    pc: usize,
    acc: NodeId,
    buffers: Vec<NodeId>,
    guard: Vec<Atom>,
    steps: u64,
}

/// Enumerates every execution path of `program`. Branches whose outcome is
/// already fixed (identical operands, two constants, or an atom already on
/// the path) are not split.
pub fn symbolic_execute(program: &RestrictedProgram, tau: u64, mem: &Memory) -> Result<GuardedForm, TransformError> {
    program.output_arity()?;
    let mut arena = Arena::new();
    let inputs: Vec<NodeId> = (0..program.inputs).map(|i| arena.var(&input_name(i))).collect();
    let zero = arena.konst(0);
    let mut cases = Vec::new();
    let mut stack = vec![Path {
        pc: 0,
        acc: zero,
        buffers: vec![zero; program.buffers],
        guard: Vec::new(),
        steps: 0,
    }];
    while let Some(mut p) = stack.pop() {
        loop {
            p.steps += 1;
            if p.steps > tau {
                return Err(TransformError::PathTooLong { tau });
            }
            match &program.stmts[p.pc] {
                Stmt::Load(op) => {
                    p.acc = match op {
                        Operand::Input(i) => inputs[*i],
                        Operand::Const(c) => arena.konst(*c),
                        Operand::RefN => arena.refn(),
                        Operand::Address { segment, plus } => arena.konst(mem.offset(segment)? + plus),
                        Operand::Buffer(i) => p.buffers[*i],
                    }
                }
                Stmt::AddB0 => p.acc = arena.add(p.acc, p.buffers[0]),
                Stmt::Deref => p.acc = arena.mem(p.acc),
                Stmt::Store(i) => p.buffers[*i] = p.acc,
                Stmt::Goto(t) => {
                    p.pc = *t;
                    continue;
                }
                Stmt::IfEq { then_, else_ } => {
                    let (lhs, rhs) = (p.acc, p.buffers[0]);
                    match decided(&arena, &p.guard, lhs, rhs) {
                        Some(true) => p.pc = *then_,
                        Some(false) => p.pc = *else_,
                        None => {
                            let mut other = Path {
                                pc: *else_,
                                acc: p.acc,
                                buffers: p.buffers.clone(),
                                guard: p.guard.clone(),
                                steps: p.steps,
                            };
                            other.guard.push(Atom { lhs, rhs, equal: false });
                            stack.push(other);
                            p.guard.push(Atom { lhs, rhs, equal: true });
                            p.pc = *then_;
                        }
                    }
                    continue;
                }
                Stmt::Return(bs) => {
                    cases.push(Case {
                        guard: std::mem::take(&mut p.guard),
                        payload: bs.iter().map(|&i| p.buffers[i]).collect(),
                    });
                    break;
                }
            }
            p.pc += 1;
        }
    }
    Ok(GuardedForm {
        arena,
        cases,
        tau,
        inputs: program.inputs,
    })
}

fn decided(arena: &Arena, guard: &[Atom], lhs: NodeId, rhs: NodeId) -> Option<bool> {
    if lhs == rhs {
        return Some(true);
    }
    if let (Some(a), Some(b)) = (arena.as_const(lhs), arena.as_const(rhs)) {
        return Some(a == b);
    }
    guard
        .iter()
        .find(|a| (a.lhs, a.rhs) == (lhs, rhs) || (a.lhs, a.rhs) == (rhs, lhs))
        .map(|a| a.equal)
}

impl GuardedForm {
    /// Payload of the unique true case at input valuation `u`.
    pub fn eval(&self, u: &[u64], n: u64, mem: &Memory) -> Result<Vec<u64>, TransformError> {
        let mut roots: Vec<NodeId> = Vec::new();
        for c in &self.cases {
            for a in &c.guard {
                roots.extend([a.lhs, a.rhs]);
            }
            roots.extend(&c.payload);
        }
        let probe = Expression::tuple(self.arena.clone(), roots);
        let mut ev = Evaluator::new(&probe);
        let vars: Vec<Option<u64>> = self
            .arena
            .var_names()
            .iter()
            .map(|name| name[1..].parse::<usize>().ok().and_then(|i| u.get(i).copied()))
            .collect();
        let values = ev.eval(&vars, n, mem)?;
        let mut next = values.into_iter();
        let mut chosen = Vec::new();
        let mut truths = 0;
        for c in &self.cases {
            let mut holds = true;
            for a in &c.guard {
                let (l, r) = (next.next().unwrap_or(0), next.next().unwrap_or(0));
                holds &= (l == r) == a.equal;
            }
            let payload: Vec<u64> = next.by_ref().take(c.payload.len()).collect();
            if holds {
                truths += 1;
                chosen = payload;
            }
        }
        if truths != 1 {
            return Err(TransformError::PartitionViolated {
                input: u.to_vec(),
                true_guards: truths,
            });
        }
        Ok(chosen)
    }
}

/// `1 ∸ ((x ∸ y) + (y ∸ x))`
fn equal_selector(arena: &mut Arena, x: NodeId, y: NodeId) -> NodeId {
    let one = arena.konst(1);
    let d1 = arena.monus(x, y);
    let d2 = arena.monus(y, x);
    let s = arena.add(d1, d2);
    arena.monus(one, s)
}

/// Selector-sum form: output `j` is `Σ_k v(θ_k) × b_{j,k}`, each selector
/// the product of its atoms' indicators.
pub fn arithmetize(g: &GuardedForm) -> Expression {
    let mut arena = g.arena.clone();
    let one = arena.konst(1);
    let selectors: Vec<NodeId> = g
        .cases
        .iter()
        .map(|c| {
            c.guard.iter().fold(one, |acc, a| {
                let eq = equal_selector(&mut arena, a.lhs, a.rhs);
                let v = if a.equal { eq } else { arena.monus(one, eq) };
                arena.mul(acc, v)
            })
        })
        .collect();
    let width = g.cases.first().map_or(0, |c| c.payload.len());
    let zero = arena.konst(0);
    let roots = (0..width)
        .map(|j| {
            g.cases.iter().zip(&selectors).fold(zero, |acc, (c, &sel)| {
                let term = arena.mul(sel, c.payload[j]);
                arena.add(acc, term)
            })
        })
        .collect();
    Expression::tuple(arena, roots)
}

/// Placement of the tables that replace `∸` and `×`. Both are square
/// with row stride `2·base`, so every operand must stay below `2·base`.
#[derive(Debug, Clone, Copy)]
pub struct EliminationTables {
    /// Digit base `B` of the tables.
    pub base: u64,
    /// `MultB[x] = B·x` for `x < 2B`.
    pub mult: u64,
    /// `A_diff[2B·x + y] = x ∸ y` for `x, y < 2B`.
    pub diff: u64,
    /// `A_mul_wide[2B·x + y] = x·y` for `x, y < 2B`.
    pub mul: u64,
}

/// Segment name of the widened product table.
pub const WIDE_MUL: &str = "A_mul_wide";

impl EliminationTables {
    /// Locates `MultB` and `A_diff` in `mem` and appends the widened
    /// product table.
    pub fn install(mem: &mut Memory, base: u64) -> Result<Self, TransformError> {
        let (_, wide) = build_mul_table(2 * base, &mut Meter::new(u64::MAX))
            .map_err(|e| TransformError::Tables(e.to_string()))?;
        let mul = mem.add_segment(WIDE_MUL, &wide.data);
        Ok(EliminationTables {
            base,
            mult: mem.offset("MultB")?,
            diff: mem.offset("A_diff")?,
            mul,
        })
    }

    /// `2B·x`, folded when `x` is a constant.
    fn row(&self, arena: &mut Arena, x: NodeId) -> NodeId {
        match arena.as_const(x) {
            Some(c) => arena.konst(2 * c * self.base),
            None => {
                let r = arena.table_read(self.mult, x);
                arena.add(r, r)
            }
        }
    }
}

/// Valuations of a set of named variables.
#[derive(Debug, Clone)]
pub struct Domain {
    pub names: Vec<String>,
    pub points: Vec<Vec<u64>>,
}

impl Domain {
    /// Position in `names` of each arena variable, `usize::MAX` if absent.
    pub fn aligned(&self, arena: &Arena) -> Vec<usize> {
        arena
            .var_names()
            .iter()
            .map(|v| self.names.iter().position(|n| n == v).unwrap_or(usize::MAX))
            .collect()
    }

    pub fn valuation(slots: &[usize], point: &[u64]) -> Vec<Option<u64>> {
        slots.iter().map(|&s| point.get(s).copied()).collect()
    }
}

/// Replaces `x ∸ y` by `A_diff[MultB[x] + MultB[x] + y]` and `x × y` by
/// the same lookup into the widened product table, then sweeps `domain` to check operand ranges,
/// `value_bound` on every node of both forms, and pointwise equality.
pub fn eliminate_nonadditive(
    e: &Expression,
    tables: &EliminationTables,
    value_bound: u64,
    domain: &Domain,
    n: u64,
    mem: &Memory,
) -> Result<Expression, TransformError> {
    let mut arena = Arena::new();
    let mut map: HashMap<NodeId, NodeId> = HashMap::new();
    for id in e.arena.reachable(&e.roots) {
        let new = match *e.arena.node(id) {
            Node::Const(c) => arena.konst(c),
            Node::RefN => arena.refn(),
            Node::Var(v) => arena.var(&e.arena.var_names()[v as usize]),
            Node::Add(a, b) => arena.add(map[&a], map[&b]),
            Node::Mem(a) => arena.mem(map[&a]),
            Node::Monus(a, b) => {
                let r = tables.row(&mut arena, map[&a]);
                let idx = arena.add(r, map[&b]);
                arena.table_read(tables.diff, idx)
            }
            Node::Mul(a, b) => {
                let r = tables.row(&mut arena, map[&a]);
                let idx = arena.add(r, map[&b]);
                arena.table_read(tables.mul, idx)
            }
        };
        map.insert(id, new);
    }
    let roots = e.roots.iter().map(|r| map[r]).collect();
    let out = Expression {
        arena,
        roots,
        tuple: e.tuple,
    };

    let mut before = Evaluator::new(e);
    let mut after = Evaluator::new(&out);
    let (sb, sa) = (domain.aligned(&e.arena), domain.aligned(&out.arena));
    for point in &domain.points {
        let want = before.eval(&Domain::valuation(&sb, point), n, mem)?;
        let value_of: HashMap<NodeId, u64> = before.last_values().collect();
        for (id, v) in before.last_values() {
            let limit = match *e.arena.node(id) {
                Node::Monus(a, b) => Some((a, b, 2 * tables.base)),
                Node::Mul(a, b) => Some((a, b, 2 * tables.base)),
                _ => None,
            };
            if let Some((a, b, base)) = limit {
                for operand in [value_of[&a], value_of[&b]] {
                    if operand >= base {
                        return Err(TransformError::OperandTooLarge {
                            value: operand,
                            base,
                        });
                    }
                }
            }
            if v >= value_bound {
                return Err(TransformError::ValueBound { value: v, bound: value_bound });
            }
        }
        let got = after.eval(&Domain::valuation(&sa, point), n, mem)?;
        if let Some((_, v)) = after.last_values().find(|&(_, v)| v >= value_bound) {
            return Err(TransformError::ValueBound { value: v, bound: value_bound });
        }
        if got != want {
            return Err(TransformError::Mismatch {
                input: point.clone(),
                expected: want,
                got,
            });
        }
    }
    Ok(out)
}

/// Tables and memory image shared by every compilation at one reference
/// integer. Inputs of degree `d` are base-`N` digits `x0..x{d-1}`; the
/// restricted program sees each as two base-`B` digits, `B = ⌈√N⌉`.
#[derive(Debug, Clone)]
pub struct CompileContext {
    pub n: u64,
    pub tables: TableSet,
    /// Every named table, `K = [B, (N−1) mod B, (N−1) div B, B − 1]` and the
    /// widened product table.
    pub memory: Memory,
    pub elimination: EliminationTables,
    pub value_bound: u64,
}

impl CompileContext {
    pub fn new(n: u64) -> Result<Self, TransformError> {
        let tables = TableSet::build(n, 1).map_err(|e| TransformError::Tables(e.to_string()))?;
        let b = tables.b;
        let mut memory = Memory::new();
        memory.add_segment("K", &[b, (n - 1) % b, (n - 1) / b, b - 1]);
        for t in tables.named_tables() {
            memory.add_segment(t.name, &t.data);
        }
        let elimination = EliminationTables::install(&mut memory, b)?;
        let value_bound = tables.content_bound.max(memory.len() as u64);
        Ok(CompileContext {
            n,
            tables,
            memory,
            elimination,
            value_bound,
        })
    }

    pub fn b(&self) -> u64 {
        self.tables.b
    }

    /// Every base-`N` operand of `degree` digits, least significant first.
    pub fn operand_domain(&self, degree: usize) -> Domain {
        let total = self.n.pow(degree as u32);
        Domain {
            names: (0..degree).map(operand_name).collect(),
            points: (0..total)
                .map(|mut x| {
                    (0..degree)
                        .map(|_| {
                            let d = x % self.n;
                            x /= self.n;
                            d
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Base-`B` digit split: `u_{2i} = x_i mod B`, `u_{2i+1} = x_i div B`.
    pub fn split(&self, x: &[u64]) -> Vec<u64> {
        x.iter().flat_map(|&d| [d % self.b(), d / self.b()]).collect()
    }

    /// Host reference for the composed pipeline: split, interpret, and
    /// recombine output pairs, most significant digit first.
    pub fn reference(&self, program: &RestrictedProgram, x: &[u64]) -> Result<Vec<u64>, TransformError> {
        let (z, _) = program.run(&self.split(x), self.n, &self.memory, program.default_tau())?;
        Ok(z.chunks(2).map(|pair| pair[1] + self.b() * pair[0]).collect())
    }
}

/// Compiles a restricted program over `degree` base-`N` digits into an
/// addition expression `E₂ ∘ E₁ ∘ E₀` returning base-`N` digits, most
/// significant first. `E₁` is verified on every operand of the domain.
pub fn compile_to_expression(
    program: &RestrictedProgram,
    degree: usize,
    ctx: &CompileContext,
    tau: Option<u64>,
) -> Result<Expression, TransformError> {
    if program.inputs != 2 * degree {
        return Err(TransformError::InputCount {
            expected: 2 * degree,
            got: program.inputs,
        });
    }
    let outputs = program.output_arity()?;
    if outputs % 2 != 0 {
        return Err(TransformError::ReturnArity);
    }
    let tau = tau.unwrap_or_else(|| program.default_tau());
    let form = symbolic_execute(program, tau, &ctx.memory)?;

    let operands = ctx.operand_domain(degree);
    let digits = Domain {
        names: (0..2 * degree).map(input_name).collect(),
        points: operands.points.iter().map(|x| ctx.split(x)).collect(),
    };
    for u in &digits.points {
        form.eval(u, ctx.n, &ctx.memory)?;
    }
    let core = eliminate_nonadditive(
        &arithmetize(&form),
        &ctx.elimination,
        ctx.value_bound,
        &digits,
        ctx.n,
        &ctx.memory,
    )?;

    let mem = &ctx.memory;
    let (mod_b, div_b, mult_b) = (mem.offset("ModB")?, mem.offset("DivB")?, mem.offset("MultB")?);
    let mut arena = Arena::new();
    let mut subst = HashMap::new();
    for i in 0..degree {
        let x = arena.var(&operand_name(i));
        let lo = arena.table_read(mod_b, x);
        let hi = arena.table_read(div_b, x);
        subst.insert(input_name(2 * i), lo);
        subst.insert(input_name(2 * i + 1), hi);
    }
    let mut memo = HashMap::new();
    let z: Vec<NodeId> = core
        .roots
        .iter()
        .map(|&r| arena.import(&core.arena, r, &subst, &mut memo))
        .collect();
    let roots = z
        .chunks(2)
        .map(|pair| {
            let (hi, lo) = (pair[0], pair[1]);
            // ModB[a] + MultB[DivB[a]] is a itself
            if let (Some(a), Some(inner)) = (arena.match_table_read(lo, mod_b), arena.match_table_read(hi, div_b)) {
                if a == inner {
                    return a;
                }
            }
            let scaled = arena.table_read(mult_b, hi);
            arena.add(lo, scaled)
        })
        .collect();
    let out = Expression::tuple(arena, roots);
    if !super::expr::validate_addition_expr(&out) {
        return Err(TransformError::NotAdditive);
    }
    Ok(out)
}

/// The two-output multiplication expression `(t1, t0)` with
/// `t1·N + t0 = x·y` for `x, y < N`, over a memory image holding the
/// tables of one [`TableSet`] (see [`mul_memory`]).
pub fn build_mul_expression(mem: &Memory) -> Result<Expression, TransformError> {
    let off = |name| mem.offset(name);
    let (div_b, mod_b, mult_b, a_mul) = (off("DivB")?, off("ModB")?, off("MultB")?, off("A_mul")?);
    let (div_n, mod_n, t0, t1) = (off("DivN")?, off("ModN")?, off("T0")?, off("T1")?);
    let mut a = Arena::new();
    let x = a.var("x");
    let y = a.var("y");
    let x1 = a.table_read(div_b, x);
    let x0 = a.table_read(mod_b, x);
    let y1 = a.table_read(div_b, y);
    let y0 = a.table_read(mod_b, y);
    let prod = |a: &mut Arena, p: NodeId, q: NodeId| {
        let row = a.table_read(mult_b, p);
        let idx = a.add(row, q);
        a.table_read(a_mul, idx)
    };
    let p00 = prod(&mut a, x0, y0);
    let p10 = prod(&mut a, x1, y0);
    let p01 = prod(&mut a, x0, y1);
    let p11 = prod(&mut a, x1, y1);

    let z0 = a.table_read(mod_b, p00);
    let carry0 = a.table_read(div_b, p00);
    let u = a.add(carry0, p10);
    let u = a.add(u, p01);
    let z1 = a.table_read(mod_b, u);
    let carry1 = a.table_read(div_b, u);
    let u2 = a.add(carry1, p11);
    let z2 = a.table_read(mod_b, u2);
    let z3 = a.table_read(div_b, u2);

    let z3b = a.table_read(mult_b, z3);
    let v1 = a.add(z3b, z2);
    let t0v1 = a.table_read(t0, v1);
    let v2 = a.add(t0v1, z1);
    let t1v1 = a.table_read(t1, v1);
    let t1v2 = a.table_read(t1, v2);
    let t0v2 = a.table_read(t0, v2);
    let low = a.add(t0v2, z0);
    let hi_part = a.table_read(mult_b, t1v1);
    let r1 = a.add(hi_part, t1v2);
    let carry = a.table_read(div_n, low);
    let r1 = a.add(r1, carry);
    let r0 = a.table_read(mod_n, low);
    Ok(Expression::tuple(a, vec![r1, r0]))
}

/// Evaluates a compiled expression on every operand of `degree` digits and
/// compares with [`CompileContext::reference`]. Returns the number of
/// points checked.
pub fn verify_compiled(
    expr: &Expression,
    program: &RestrictedProgram,
    degree: usize,
    ctx: &CompileContext,
) -> Result<usize, TransformError> {
    let domain = ctx.operand_domain(degree);
    let slots = domain.aligned(&expr.arena);
    let mut ev = Evaluator::new(expr);
    for x in &domain.points {
        let got = ev.eval(&Domain::valuation(&slots, x), ctx.n, &ctx.memory)?;
        let expected = ctx.reference(program, x)?;
        if got != expected {
            return Err(TransformError::Mismatch {
                input: x.clone(),
                expected,
                got,
            });
        }
    }
    Ok(domain.points.len())
}

/// Checks `t1·N + t0 = x·y` for every `x, y < N`. Returns the number of
/// points checked.
pub fn verify_mul_expression(expr: &Expression, n: u64, mem: &Memory) -> Result<usize, TransformError> {
    let names = expr.arena.var_names().to_vec();
    let mut ev = Evaluator::new(expr);
    for x in 0..n {
        for y in 0..n {
            let vals: Vec<Option<u64>> = names
                .iter()
                .map(|v| match v.as_str() {
                    "x" => Some(x),
                    "y" => Some(y),
                    _ => None,
                })
                .collect();
            let got = ev.eval(&vals, n, mem)?;
            if got.len() != 2 || got[0] * n + got[1] != x * y {
                return Err(TransformError::Mismatch {
                    input: vec![x, y],
                    expected: vec![x * y / n, x * y % n],
                    got,
                });
            }
        }
    }
    Ok((n * n) as usize)
}

/// Memory image holding every named table of `t`.
pub fn mul_memory(t: &TableSet) -> Memory {
    Memory::from_tables(&t.named_tables())
}
