//! Assembly text to [`Program`].
//!
//! ```text
//! # comment
//! .level array          # optional; otherwise inferred from the statements
//! .vars x y
//! .arrays PRED
//! .ops pred2            # primitives other than `+`
//! loop: jeq x N done body
//! body: PRED[x + 1] = x
//!       x = x + 1
//!       goto loop
//! done: halt
//! ```
//!
//! Branch targets are labels or statement numbers (counted before sugar is
//! expanded). `goto l` is `jzero 0 l l`; `jeq a b l0 l1` writes
//! `Equal[a] = 1; Equal[b] = 0` and branches on `Equal[a]`;
//! `return a, b` outputs each value and halts.

use std::collections::BTreeMap;

use super::program::{Expr, Instruction, Level, Program};
use super::{RamError, ADD, EQUAL_ARRAY};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, RamError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse().map_err(|_| RamError::Syntax {
                line: line_no,
                column: col,
                message: format!("integer literal `{text}` is too large"),
            })?;
            out.push(Token {
                tok: Tok::Int(v),
                col,
            });
        } else if c.is_ascii_alphabetic() || c == '_' || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || "_.".contains(chars[i])) {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if "[]()+=,:".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                col,
            });
            i += 1;
        } else {
            return Err(RamError::Syntax {
                line: line_no,
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Target {
    Label(String),
    Stmt(usize),
}

struct Stmt {
    line: usize,
    tokens: Vec<Token>,
    /// Column just past the last token, for end-of-line errors.
    end_col: usize,
}

#[derive(Default)]
struct Decls {
    level: Option<Level>,
    vars: Vec<String>,
    arrays: Vec<String>,
    ops: Vec<String>,
}

const R_MNEMONICS: [&str; 7] = ["cst", "move", "store", "load", "getn", "input", "op"];
const KEYWORDS: &[&str] = &[
    "cst", "move", "store", "load", "getn", "input", "op", "output", "jzero", "jeq", "goto",
    "halt", "read", "return", "N",
];

/// Parses and validates assembly text.
pub fn parse_program(text: &str) -> Result<Program, RamError> {
    let mut decls = Decls::default();
    let mut stmts: Vec<Stmt> = Vec::new();
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    let mut array_hint: Option<usize> = None;
    let mut r_hint: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let code = raw.split('#').next().unwrap_or("");
        let end_col = code.trim_end().chars().count() + 1;
        let mut tokens = tokenize(code, line)?;
        if tokens.is_empty() {
            continue;
        }
        if let Tok::Ident(first) = &tokens[0].tok {
            if first.starts_with('.') {
                directive(&mut decls, first, &tokens[1..], line, &mut array_hint)?;
                continue;
            }
        }
        while tokens.len() >= 2 && tokens[1].tok == Tok::Sym(':') {
            let Tok::Ident(name) = &tokens[0].tok else {
                return Err(syntax(line, tokens[0].col, "label must be a name"));
            };
            if labels.insert(name.clone(), stmts.len()).is_some() {
                return Err(syntax(line, tokens[0].col, format!("label `{name}` defined twice")));
            }
            tokens.drain(..2);
        }
        if tokens.is_empty() {
            continue;
        }
        match &tokens[0].tok {
            Tok::Ident(m) if R_MNEMONICS.contains(&m.as_str()) => {
                r_hint.get_or_insert(line);
            }
            Tok::Ident(m) if ["read", "jeq", "return"].contains(&m.as_str()) => {
                array_hint.get_or_insert(line);
            }
            _ if tokens.iter().any(|t| match &t.tok {
                Tok::Sym(c) => "[]()+=,".contains(*c),
                Tok::Ident(n) => n == "N",
                Tok::Int(_) => false,
            }) =>
            {
                array_hint.get_or_insert(line);
            }
            _ => {}
        }
        stmts.push(Stmt {
            line,
            tokens,
            end_col,
        });
    }

    let level = match (decls.level, array_hint, r_hint) {
        (Some(l), _, _) => l,
        (None, Some(a), Some(r)) => return Err(RamError::MixedLevels { line: a.max(r) }),
        (None, Some(_), None) => Level::Array,
        (None, None, _) => Level::R,
    };

    let mut builder = Builder {
        decls,
        instructions: Vec::new(),
        pending: Vec::new(),
        stmt_start: Vec::with_capacity(stmts.len()),
    };
    for stmt in &stmts {
        builder.stmt_start.push(builder.instructions.len());
        let mut cur = Cursor {
            tokens: &stmt.tokens,
            pos: 0,
            line: stmt.line,
            end_col: stmt.end_col,
        };
        match level {
            Level::R => builder.r_statement(&mut cur)?,
            Level::Array => builder.array_statement(&mut cur)?,
        }
        if let Some(t) = cur.peek() {
            return Err(syntax(stmt.line, t.col, "unexpected trailing tokens"));
        }
    }

    let len = builder.instructions.len();
    let resolve = |target: &Target, line: usize, at: usize| -> Result<usize, RamError> {
        match target {
            Target::Label(name) => labels
                .get(name)
                .and_then(|&s| builder.stmt_start.get(s).copied())
                .ok_or_else(|| RamError::UndefinedLabel {
                    line,
                    label: name.clone(),
                }),
            Target::Stmt(s) => builder
                .stmt_start
                .get(*s)
                .copied()
                .ok_or(RamError::UndefinedTarget { at, target: *s, len }),
        }
    };
    let mut instructions = builder.instructions.clone();
    for (at, line, t0, t1) in &builder.pending {
        let (a, b) = (resolve(t0, *line, *at)?, resolve(t1, *line, *at)?);
        match &mut instructions[*at] {
            Instruction::Jzero {
                if_zero, otherwise, ..
            }
            | Instruction::Branch {
                if_zero, otherwise, ..
            } => {
                *if_zero = a;
                *otherwise = b;
            }
            _ => unreachable!("pending entries point at branches"),
        }
    }
    let decls = builder.decls;
    let mut p = Program::new(level, instructions, decls.vars, decls.arrays, decls.ops)?;
    p.labels = labels
        .into_iter()
        .filter_map(|(name, s)| builder.stmt_start.get(s).map(|&i| (name, i)))
        .collect();
    Ok(p)
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> RamError {
    RamError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn directive(
    decls: &mut Decls,
    name: &str,
    args: &[Token],
    line: usize,
    array_hint: &mut Option<usize>,
) -> Result<(), RamError> {
    let mut names = Vec::new();
    for t in args {
        match &t.tok {
            Tok::Ident(n) if !KEYWORDS.contains(&n.as_str()) && !n.starts_with('.') => {
                names.push(n.clone())
            }
            Tok::Sym(',') => {}
            _ => return Err(syntax(line, t.col, "expected a name")),
        }
    }
    let col = 1;
    match name {
        ".vars" | ".arrays" => {
            array_hint.get_or_insert(line);
            let list = if name == ".vars" {
                &mut decls.vars
            } else {
                &mut decls.arrays
            };
            for n in names {
                if decls_contain(list, &n) {
                    return Err(syntax(line, col, format!("`{n}` declared twice")));
                }
                list.push(n);
            }
            let clash = decls.vars.iter().find(|v| decls.arrays.contains(v));
            if let Some(v) = clash {
                return Err(syntax(line, col, format!("`{v}` is both a variable and an array")));
            }
        }
        ".ops" => {
            for n in names {
                if !decls.ops.contains(&n) {
                    decls.ops.push(n);
                }
            }
        }
        ".level" => {
            decls.level = Some(match names.as_slice() {
                [l] if l == "r" => Level::R,
                [l] if l == "array" => Level::Array,
                _ => return Err(syntax(line, col, "expected `.level r` or `.level array`")),
            })
        }
        _ => return Err(syntax(line, col, format!("unknown directive `{name}`"))),
    }
    Ok(())
}

fn decls_contain(list: &[String], n: &str) -> bool {
    list.iter().any(|x| x == n)
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_sym(&self, c: char) -> bool {
        self.peek().is_some_and(|t| t.tok == Tok::Sym(c))
    }

    fn next(&mut self, what: &str) -> Result<&'a Token, RamError> {
        let t = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| syntax(self.line, self.end_col, format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_sym(&mut self, c: char) -> Result<(), RamError> {
        let t = self.next(&format!("`{c}`"))?;
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            Err(syntax(self.line, t.col, format!("expected `{c}`")))
        }
    }

    fn int(&mut self) -> Result<u64, RamError> {
        let t = self.next("an integer")?;
        match t.tok {
            Tok::Int(v) => Ok(v),
            _ => Err(syntax(self.line, t.col, "expected an integer")),
        }
    }

    fn ident(&mut self) -> Result<(&'a str, usize), RamError> {
        let t = self.next("a name")?;
        match &t.tok {
            Tok::Ident(s) => Ok((s.as_str(), t.col)),
            _ => Err(syntax(self.line, t.col, "expected a name")),
        }
    }

    fn target(&mut self) -> Result<Target, RamError> {
        let t = self.next("a branch target")?;
        match &t.tok {
            Tok::Int(v) => Ok(Target::Stmt(*v as usize)),
            Tok::Ident(s) => Ok(Target::Label(s.clone())),
            Tok::Sym(_) => Err(syntax(self.line, t.col, "expected a label or statement number")),
        }
    }
}

struct Builder {
    decls: Decls,
    instructions: Vec<Instruction>,
    /// (instruction, line, zero target, nonzero target)
    pending: Vec<(usize, usize, Target, Target)>,
    stmt_start: Vec<usize>,
}

impl Builder {
    fn push_branch(&mut self, ins: Instruction, line: usize, t0: Target, t1: Target) {
        self.pending.push((self.instructions.len(), line, t0, t1));
        self.instructions.push(ins);
    }

    fn r_statement(&mut self, cur: &mut Cursor) -> Result<(), RamError> {
        let (m, col) = cur.ident()?;
        let ins = match m {
            "cst" => Instruction::Cst {
                dst: cur.int()?,
                value: cur.int()?,
            },
            "move" => Instruction::Move {
                dst: cur.int()?,
                src: cur.int()?,
            },
            "store" => Instruction::Store {
                addr: cur.int()?,
                src: cur.int()?,
            },
            "load" => Instruction::Load {
                dst: cur.int()?,
                addr: cur.int()?,
            },
            "getn" => Instruction::GetN { dst: cur.int()? },
            "input" => Instruction::Input { dst: cur.int()? },
            "output" => Instruction::Output { src: cur.int()? },
            "halt" => Instruction::Halt,
            "op" => {
                let (name, _) = cur.ident()?;
                Instruction::Op {
                    op: self.op_index(name),
                }
            }
            "jzero" => {
                let reg = cur.int()?;
                let (t0, t1) = (cur.target()?, cur.target()?);
                let ins = Instruction::Jzero {
                    reg,
                    if_zero: 0,
                    otherwise: 0,
                };
                self.push_branch(ins, cur.line, t0, t1);
                return Ok(());
            }
            "goto" => {
                let t = cur.target()?;
                let ins = Instruction::Jzero {
                    reg: 0,
                    if_zero: 0,
                    otherwise: 0,
                };
                self.push_branch(ins, cur.line, t.clone(), t);
                return Ok(());
            }
            other => return Err(syntax(cur.line, col, format!("unknown R-level mnemonic `{other}`"))),
        };
        self.instructions.push(ins);
        Ok(())
    }

    fn op_index(&mut self, name: &str) -> usize {
        match self.decls.ops.iter().position(|o| o == name) {
            Some(i) => i,
            None => {
                self.decls.ops.push(name.to_string());
                self.decls.ops.len() - 1
            }
        }
    }

    fn var(&self, name: &str, line: usize) -> Result<usize, RamError> {
        self.decls
            .vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| RamError::Undeclared {
                line,
                name: name.into(),
                what: "variable",
            })
    }

    fn array(&self, name: &str, line: usize) -> Result<usize, RamError> {
        self.decls
            .arrays
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| RamError::Undeclared {
                line,
                name: name.into(),
                what: "array",
            })
    }

    fn array_statement(&mut self, cur: &mut Cursor) -> Result<(), RamError> {
        let (head, col) = cur.ident()?;
        match head {
            "halt" => self.instructions.push(Instruction::Halt),
            "output" => {
                let e = self.expr(cur)?;
                self.instructions.push(Instruction::OutputExpr(e));
            }
            "return" => loop {
                let e = self.expr(cur)?;
                self.instructions.push(Instruction::OutputExpr(e));
                if cur.peek_sym(',') {
                    cur.pos += 1;
                } else {
                    self.instructions.push(Instruction::Halt);
                    break;
                }
            },
            "read" => {
                let (name, _) = cur.ident()?;
                if cur.peek_sym('[') {
                    cur.expect_sym('[')?;
                    let array = self.array(name, cur.line)?;
                    let index = self.expr(cur)?;
                    cur.expect_sym(']')?;
                    self.instructions.push(Instruction::ReadCell { array, index });
                } else {
                    let var = self.var(name, cur.line)?;
                    self.instructions.push(Instruction::ReadVar { var });
                }
            }
            "jzero" => {
                let cond = self.expr(cur)?;
                let (t0, t1) = (cur.target()?, cur.target()?);
                let ins = Instruction::Branch {
                    cond,
                    if_zero: 0,
                    otherwise: 0,
                };
                self.push_branch(ins, cur.line, t0, t1);
            }
            "goto" => {
                let t = cur.target()?;
                let ins = Instruction::Branch {
                    cond: Expr::Const(0),
                    if_zero: 0,
                    otherwise: 0,
                };
                self.push_branch(ins, cur.line, t.clone(), t);
            }
            "jeq" => {
                let a = self.expr(cur)?;
                let b = self.expr(cur)?;
                let (t0, t1) = (cur.target()?, cur.target()?);
                let eq = match self.decls.arrays.iter().position(|x| x == EQUAL_ARRAY) {
                    Some(i) => i,
                    None => {
                        self.decls.arrays.push(EQUAL_ARRAY.into());
                        self.decls.arrays.len() - 1
                    }
                };
                self.instructions.push(Instruction::AssignCell {
                    array: eq,
                    index: a.clone(),
                    value: Expr::Const(1),
                });
                self.instructions.push(Instruction::AssignCell {
                    array: eq,
                    index: b,
                    value: Expr::Const(0),
                });
                let ins = Instruction::Branch {
                    cond: Expr::cell(eq, a),
                    if_zero: 0,
                    otherwise: 0,
                };
                self.push_branch(ins, cur.line, t0, t1);
            }
            name if KEYWORDS.contains(&name) => {
                return Err(syntax(cur.line, col, format!("`{name}` is not an array-level statement")))
            }
            name => {
                if cur.peek_sym('[') {
                    cur.expect_sym('[')?;
                    let array = self.array(name, cur.line)?;
                    let index = self.expr(cur)?;
                    cur.expect_sym(']')?;
                    cur.expect_sym('=')?;
                    let value = self.expr(cur)?;
                    self.instructions.push(Instruction::AssignCell {
                        array,
                        index,
                        value,
                    });
                } else {
                    let var = self.var(name, cur.line)?;
                    cur.expect_sym('=')?;
                    let value = self.expr(cur)?;
                    self.instructions.push(Instruction::AssignVar { var, value });
                }
            }
        }
        Ok(())
    }

    fn expr(&mut self, cur: &mut Cursor) -> Result<Expr, RamError> {
        let mut acc = self.term(cur)?;
        while cur.peek_sym('+') {
            cur.pos += 1;
            let rhs = self.term(cur)?;
            acc = Expr::Prim {
                op: self.op_index(ADD),
                args: vec![acc, rhs],
            };
        }
        Ok(acc)
    }

    fn term(&mut self, cur: &mut Cursor) -> Result<Expr, RamError> {
        let t = cur.next("an expression")?;
        match &t.tok {
            Tok::Int(v) => Ok(Expr::Const(*v)),
            Tok::Sym('(') => {
                let e = self.expr(cur)?;
                cur.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(n) if n == "N" => Ok(Expr::RefN),
            Tok::Ident(n) if cur.peek_sym('[') => {
                cur.pos += 1;
                let array = self.array(n, cur.line)?;
                let index = self.expr(cur)?;
                cur.expect_sym(']')?;
                Ok(Expr::cell(array, index))
            }
            Tok::Ident(n) if cur.peek_sym('(') => {
                cur.pos += 1;
                if !self.decls.ops.contains(n) {
                    return Err(RamError::Undeclared {
                        line: cur.line,
                        name: n.clone(),
                        what: "primitive",
                    });
                }
                let op = self.op_index(n);
                let mut args = Vec::new();
                if !cur.peek_sym(')') {
                    loop {
                        args.push(self.expr(cur)?);
                        if cur.peek_sym(',') {
                            cur.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                cur.expect_sym(')')?;
                Ok(Expr::Prim { op, args })
            }
            Tok::Ident(n) if KEYWORDS.contains(&n.as_str()) => {
                Err(syntax(cur.line, t.col, format!("`{n}` cannot start an expression")))
            }
            Tok::Ident(n) => Ok(Expr::Var(self.var(n, cur.line)?)),
            Tok::Sym(c) => Err(syntax(cur.line, t.col, format!("unexpected `{c}`"))),
        }
    }
}
