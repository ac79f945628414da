//! Expression DAGs over sums, memory reads and, before elimination, monus
//! and products.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::meter::{Table, UNDEFINED};

use super::TransformError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Const(u64),
    Var(u32),
    RefN,
    Add(NodeId, NodeId),
    Mem(NodeId),
    /// `max(0, a − b)`; removed by elimination.
    Monus(NodeId, NodeId),
    /// Removed by elimination.
    Mul(NodeId, NodeId),
}

/// Hash-consed node store. Children always precede their parents, so node
/// order is a topological order.
#[derive(Debug, Clone, Default)]
pub struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    vars: Vec<String>,
}

impl Arena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(n.clone());
        self.index.insert(n, id);
        id
    }

    pub fn konst(&mut self, c: u64) -> NodeId {
        self.intern(Node::Const(c))
    }

    pub fn var(&mut self, name: &str) -> NodeId {
        let i = match self.vars.iter().position(|v| v == name) {
            Some(i) => i,
            None => {
                self.vars.push(name.to_string());
                self.vars.len() - 1
            }
        };
        self.intern(Node::Var(i as u32))
    }

    pub fn refn(&mut self) -> NodeId {
        self.intern(Node::RefN)
    }

    pub fn as_const(&self, id: NodeId) -> Option<u64> {
        match self.node(id) {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Sum with constant folding.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.konst(x + y),
            (Some(0), _) => b,
            (_, Some(0)) => a,
            _ => self.intern(Node::Add(a, b)),
        }
    }

    pub fn mem(&mut self, addr: NodeId) -> NodeId {
        self.intern(Node::Mem(addr))
    }

    /// `T[index]` for a table placed at `offset`.
    pub fn table_read(&mut self, offset: u64, index: NodeId) -> NodeId {
        let base = self.konst(offset);
        let addr = self.add(base, index);
        self.mem(addr)
    }

    /// Inverse of [`table_read`](Self::table_read) for a known offset.
    pub fn match_table_read(&self, id: NodeId, offset: u64) -> Option<NodeId> {
        let Node::Mem(addr) = self.node(id) else {
            return None;
        };
        match self.node(*addr) {
            Node::Add(a, b) if self.as_const(*a) == Some(offset) => Some(*b),
            _ if offset == 0 => Some(*addr),
            _ => None,
        }
    }

    pub fn monus(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.konst(x.saturating_sub(y)),
            (_, Some(0)) => a,
            _ if a == b => self.konst(0),
            _ => self.intern(Node::Monus(a, b)),
        }
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.konst(x * y),
            (Some(0), _) | (_, Some(0)) => self.konst(0),
            (Some(1), _) => b,
            (_, Some(1)) => a,
            _ => self.intern(Node::Mul(a, b)),
        }
    }

    /// Nodes reachable from `roots`, in topological order.
    pub fn reachable(&self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id.0 as usize], true) {
                continue;
            }
            match *self.node(id) {
                Node::Add(a, b) | Node::Monus(a, b) | Node::Mul(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Node::Mem(a) => stack.push(a),
                _ => {}
            }
        }
        (0..self.nodes.len() as u32)
            .map(NodeId)
            .filter(|id| seen[id.0 as usize])
            .collect()
    }

    /// Copies `root` from `src`, replacing variables named in `subst`.
    pub fn import(
        &mut self,
        src: &Arena,
        root: NodeId,
        subst: &HashMap<String, NodeId>,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> NodeId {
        for id in src.reachable(&[root]) {
            let new = match *src.node(id) {
                Node::Const(c) => self.konst(c),
                Node::RefN => self.refn(),
                Node::Var(v) => {
                    let name = &src.vars[v as usize];
                    match subst.get(name) {
                        Some(&n) => n,
                        None => self.var(name),
                    }
                }
                Node::Add(a, b) => self.add(memo[&a], memo[&b]),
                Node::Mem(a) => self.mem(memo[&a]),
                Node::Monus(a, b) => self.monus(memo[&a], memo[&b]),
                Node::Mul(a, b) => self.mul(memo[&a], memo[&b]),
            };
            memo.insert(id, new);
        }
        memo[&root]
    }
}

/// A single expression or a top-level tuple of expressions.
#[derive(Debug, Clone)]
pub struct Expression {
    pub arena: Arena,
    pub roots: Vec<NodeId>,
    pub tuple: bool,
}

impl Expression {
    pub fn single(arena: Arena, root: NodeId) -> Self {
        Expression {
            arena,
            roots: vec![root],
            tuple: false,
        }
    }

    pub fn tuple(arena: Arena, roots: Vec<NodeId>) -> Self {
        Expression {
            arena,
            roots,
            tuple: true,
        }
    }

    /// Distinct nodes, counting shared subexpressions once.
    pub fn size(&self) -> usize {
        self.arena.reachable(&self.roots).len()
    }

    pub fn count_nodes(&self, pred: impl Fn(&Node) -> bool) -> usize {
        self.arena
            .reachable(&self.roots)
            .into_iter()
            .filter(|&id| pred(self.arena.node(id)))
            .count()
    }

    pub fn to_prefix(&self) -> String {
        let mut out = String::new();
        if self.tuple {
            out.push_str("(tuple");
            for &r in &self.roots {
                out.push(' ');
                write_prefix(&self.arena, r, &mut out);
            }
            out.push(')');
        } else {
            write_prefix(&self.arena, self.roots[0], &mut out);
        }
        out
    }
}

fn write_prefix(arena: &Arena, id: NodeId, out: &mut String) {
    let bin = |tag: &str, a: NodeId, b: NodeId, out: &mut String| {
        let _ = write!(out, "({tag} ");
        write_prefix(arena, a, out);
        out.push(' ');
        write_prefix(arena, b, out);
        out.push(')');
    };
    match *arena.node(id) {
        Node::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Node::Var(v) => out.push_str(&arena.vars[v as usize]),
        Node::RefN => out.push('N'),
        Node::Add(a, b) => bin("+", a, b, out),
        Node::Monus(a, b) => bin("monus", a, b, out),
        Node::Mul(a, b) => bin("*", a, b, out),
        Node::Mem(a) => {
            out.push_str("(mem ");
            write_prefix(arena, a, out);
            out.push(')');
        }
    }
}

/// Parses the prefix form written by [`Expression::to_prefix`].
pub fn parse_prefix(text: &str) -> Result<Expression, TransformError> {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    let mut arena = Arena::new();
    let mut pos = 0;
    let bad = |msg: &str| TransformError::ExprSyntax(msg.to_string());
    if tokens.len() >= 2 && tokens[0] == "(" && tokens[1] == "tuple" {
        pos = 2;
        let mut roots = Vec::new();
        while tokens.get(pos) != Some(&")") {
            if pos >= tokens.len() {
                return Err(bad("unterminated tuple"));
            }
            roots.push(parse_node(&tokens, &mut pos, &mut arena)?);
        }
        if pos + 1 != tokens.len() {
            return Err(bad("text after tuple"));
        }
        return Ok(Expression::tuple(arena, roots));
    }
    let root = parse_node(&tokens, &mut pos, &mut arena)?;
    if pos != tokens.len() {
        return Err(bad("text after expression"));
    }
    Ok(Expression::single(arena, root))
}

fn parse_node(tokens: &[&str], pos: &mut usize, arena: &mut Arena) -> Result<NodeId, TransformError> {
    let bad = |msg: String| TransformError::ExprSyntax(msg);
    let tok = *tokens.get(*pos).ok_or_else(|| bad("unexpected end".into()))?;
    *pos += 1;
    if tok != "(" {
        return Ok(if tok == "N" {
            arena.refn()
        } else if let Ok(c) = tok.parse::<u64>() {
            arena.konst(c)
        } else if tok == ")" {
            return Err(bad("unexpected `)`".into()));
        } else {
            arena.var(tok)
        });
    }
    let head = *tokens.get(*pos).ok_or_else(|| bad("unexpected end".into()))?;
    *pos += 1;
    let mut args = Vec::new();
    while tokens.get(*pos) != Some(&")") {
        if *pos >= tokens.len() {
            return Err(bad("unbalanced parentheses".into()));
        }
        args.push(parse_node(tokens, pos, arena)?);
    }
    *pos += 1;
    // Build raw nodes so that parsing is the exact inverse of printing.
    let raw = match (head, args.as_slice()) {
        ("+", [a, b]) => Node::Add(*a, *b),
        ("monus", [a, b]) => Node::Monus(*a, *b),
        ("*", [a, b]) => Node::Mul(*a, *b),
        ("mem", [a]) => Node::Mem(*a),
        ("tuple", _) => return Err(bad("nested tuple".into())),
        _ => return Err(bad(format!("bad form `{head}` with {} arguments", args.len()))),
    };
    Ok(arena.intern(raw))
}

/// True when every reachable node is a constant, variable, `N`, sum or
/// memory read. Tuples can only occur at the top level by construction.
pub fn validate_addition_expr(e: &Expression) -> bool {
    e.count_nodes(|n| matches!(n, Node::Monus(..) | Node::Mul(..))) == 0
}

/// Flat read-only memory assembled from named segments.
#[derive(Debug, Clone, Default)]
pub struct Memory {
    data: Vec<u64>,
    segments: BTreeMap<String, (u64, usize)>,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a segment and returns its offset.
    pub fn add_segment(&mut self, name: &str, values: &[u64]) -> u64 {
        let offset = self.data.len() as u64;
        self.data.extend_from_slice(values);
        self.segments.insert(name.to_string(), (offset, values.len()));
        offset
    }

    pub fn from_tables(tables: &[&Table]) -> Self {
        let mut m = Memory::new();
        for t in tables {
            m.add_segment(t.name, &t.data);
        }
        m
    }

    pub fn offset(&self, name: &str) -> Result<u64, TransformError> {
        self.segments
            .get(name)
            .map(|s| s.0)
            .ok_or_else(|| TransformError::UnknownSegment(name.to_string()))
    }

    pub fn segment_names(&self) -> impl Iterator<Item = &str> {
        self.segments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn read(&self, addr: u64) -> Result<u64, TransformError> {
        match self.data.get(addr as usize) {
            Some(&v) if v != UNDEFINED => Ok(v),
            _ => Err(TransformError::MemoryRead(addr)),
        }
    }
}

/// Precomputed evaluation order for repeated evaluation of one expression.
pub struct Evaluator<'a> {
    expr: &'a Expression,
    order: Vec<NodeId>,
    slot: Vec<u32>,
    values: Vec<u64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(expr: &'a Expression) -> Self {
        let order = expr.arena.reachable(&expr.roots);
        let mut slot = vec![u32::MAX; expr.arena.len()];
        for (i, id) in order.iter().enumerate() {
            slot[id.0 as usize] = i as u32;
        }
        Evaluator {
            expr,
            values: vec![0; order.len()],
            order,
            slot,
        }
    }

    /// Atomic steps per evaluation: one per distinct node.
    pub fn steps(&self) -> u64 {
        self.order.len() as u64
    }

    /// Evaluates with `vars` aligned to the arena's variable list.
    pub fn eval(&mut self, vars: &[Option<u64>], n: u64, mem: &Memory) -> Result<Vec<u64>, TransformError> {
        let arena = &self.expr.arena;
        for (i, &id) in self.order.iter().enumerate() {
            let get = |x: NodeId, values: &[u64]| values[self.slot[x.0 as usize] as usize];
            let v = match *arena.node(id) {
                Node::Const(c) => c,
                Node::RefN => n,
                Node::Var(v) => vars
                    .get(v as usize)
                    .copied()
                    .flatten()
                    .ok_or_else(|| TransformError::UnboundVariable(arena.vars[v as usize].clone()))?,
                Node::Add(a, b) => get(a, &self.values) + get(b, &self.values),
                Node::Mem(a) => mem.read(get(a, &self.values))?,
                Node::Monus(a, b) => get(a, &self.values).saturating_sub(get(b, &self.values)),
                Node::Mul(a, b) => get(a, &self.values) * get(b, &self.values),
            };
            self.values[i] = v;
        }
        Ok(self
            .expr
            .roots
            .iter()
            .map(|r| self.values[self.slot[r.0 as usize] as usize])
            .collect())
    }

    /// Every node value of the last evaluation, for bound sweeps.
    pub fn last_values(&self) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.order.iter().copied().zip(self.values.iter().copied())
    }
}

/// Evaluates `e` under `env`, returning the root values and the atomic
/// steps charged (one per distinct node).
pub fn eval_expression(
    e: &Expression,
    env: &BTreeMap<String, u64>,
    n: u64,
    mem: &Memory,
) -> Result<(Vec<u64>, u64), TransformError> {
    let vars: Vec<Option<u64>> = e.arena.var_names().iter().map(|v| env.get(v).copied()).collect();
    let mut ev = Evaluator::new(e);
    let out = ev.eval(&vars, n, mem)?;
    Ok((out, ev.steps()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_sum() {
        let mut a = Arena::new();
        let seven = a.konst(7);
        let e = Expression::single(a, seven);
        let mem = Memory::new();
        assert_eq!(eval_expression(&e, &BTreeMap::new(), 16, &mem).unwrap().0, vec![7]);

        let mut a = Arena::new();
        let x = a.var("x");
        let n = a.refn();
        let s = a.add(x, n);
        let e = Expression::single(a, s);
        let env = BTreeMap::from([("x".to_string(), 3)]);
        assert_eq!(eval_expression(&e, &env, 16, &mem).unwrap(), (vec![19], 3));
        assert!(matches!(
            eval_expression(&e, &BTreeMap::new(), 16, &mem),
            Err(TransformError::UnboundVariable(_))
        ));
    }

    #[test]
    fn validator() {
        let mut a = Arena::new();
        let v = a.var("a");
        let m = a.mem(v);
        let one = a.konst(1);
        let s = a.add(m, one);
        assert!(validate_addition_expr(&Expression::single(a.clone(), s)));
        let p = a.mul(v, m);
        assert!(!validate_addition_expr(&Expression::single(a, p)));
    }

    #[test]
    fn prefix_round_trip() {
        let text = "(tuple (+ (mem (+ 3 x)) N) (monus y 2) (* x (mem 0)))";
        let e = parse_prefix(text).unwrap();
        assert_eq!(e.to_prefix(), text);
        assert!(parse_prefix("(tuple (tuple 1))").is_err());
        assert!(parse_prefix("(+ 1").is_err());
    }

    #[test]
    fn shared_nodes_evaluate_once() {
        let mut a = Arena::new();
        let x = a.var("x");
        let m = a.mem(x);
        let s = a.add(m, m);
        let e = Expression::single(a, s);
        assert_eq!(e.size(), 3);
        let mut mem = Memory::new();
        mem.add_segment("T", &[5, 6]);
        let env = BTreeMap::from([("x".to_string(), 1)]);
        assert_eq!(eval_expression(&e, &env, 2, &mem).unwrap(), (vec![12], 3));
        let env = BTreeMap::from([("x".to_string(), 2)]);
        assert_eq!(eval_expression(&e, &env, 2, &mem), Err(TransformError::MemoryRead(2)));
    }
}
