//! The accumulator language accepted by the expression compiler.
//!
//! One accumulator `A`, buffers `B0, B1, …` (all initially 0), read-only
//! inputs `U0, U1, …` and a read-only memory `R`. Statements:
//!
//! ```text
//! A <- U3          A <- 1           A <- A + B0      A <- R[A]
//! B2 <- A          A <- B2          if A = B0 goto yes else no
//! return B3 B2 B1 B0
//! ```
//!
//! Constant loads `A <- 7`, `A <- N` and `A <- @SEG + k` (the address of
//! cell `k` of a named memory segment) are also accepted, as is `goto l`.
//! None of them affects the shape of the compiled expression beyond adding
//! constants. Lines may carry a `label:` prefix; `#` starts a comment.

use std::collections::BTreeMap;

use super::expr::Memory;
use super::TransformError;

/// Where the accumulator load takes its value from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Input(usize),
    Const(u64),
    RefN,
    /// Offset of a memory segment plus a constant.
    Address { segment: String, plus: u64 },
    Buffer(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Load(Operand),
    /// `A ← A + B0`
    AddB0,
    /// `A ← R[A]`
    Deref,
    Store(usize),
    /// `if A = B0 goto then_ else else_`
    IfEq { then_: usize, else_: usize },
    Goto(usize),
    /// Returns the listed buffers, most significant first.
    Return(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedProgram {
    pub stmts: Vec<Stmt>,
    /// Number of inputs `U0..U{k-1}`.
    pub inputs: usize,
    pub buffers: usize,
}

impl RestrictedProgram {
    pub fn parse(src: &str) -> Result<Self, TransformError> {
        parse(src)
    }

    /// Default halting bound: the squared program length.
    pub fn default_tau(&self) -> u64 {
        (self.stmts.len() as u64).pow(2)
    }

    /// Length of the tuple returned, or an error when returns disagree.
    pub fn output_arity(&self) -> Result<usize, TransformError> {
        let mut arity = None;
        for s in &self.stmts {
            if let Stmt::Return(bs) = s {
                match arity {
                    None => arity = Some(bs.len()),
                    Some(a) if a != bs.len() => return Err(TransformError::ReturnArity),
                    _ => {}
                }
            }
        }
        arity.ok_or(TransformError::ReturnArity)
    }

    /// Direct interpretation. Returns the outputs and the number of
    /// statements executed.
    pub fn run(&self, inputs: &[u64], n: u64, mem: &Memory, tau: u64) -> Result<(Vec<u64>, u64), TransformError> {
        if inputs.len() != self.inputs {
            return Err(TransformError::InputCount {
                expected: self.inputs,
                got: inputs.len(),
            });
        }
        let mut a = 0u64;
        let mut b = vec![0u64; self.buffers];
        let mut pc = 0usize;
        let mut steps = 0u64;
        loop {
            steps += 1;
            if steps > tau {
                return Err(TransformError::PathTooLong { tau });
            }
            match &self.stmts[pc] {
                Stmt::Load(op) => {
                    a = match op {
                        Operand::Input(i) => inputs[*i],
                        Operand::Const(c) => *c,
                        Operand::RefN => n,
                        Operand::Address { segment, plus } => mem.offset(segment)? + plus,
                        Operand::Buffer(i) => b[*i],
                    }
                }
                Stmt::AddB0 => a += b[0],
                Stmt::Deref => a = mem.read(a)?,
                Stmt::Store(i) => b[*i] = a,
                Stmt::IfEq { then_, else_ } => {
                    pc = if a == b[0] { *then_ } else { *else_ };
                    continue;
                }
                Stmt::Goto(t) => {
                    pc = *t;
                    continue;
                }
                Stmt::Return(bs) => return Ok((bs.iter().map(|&i| b[i]).collect(), steps)),
            }
            pc += 1;
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> TransformError {
    TransformError::RestrictedSyntax {
        line,
        message: message.into(),
    }
}

fn indexed(tok: &str, prefix: char) -> Option<usize> {
    tok.strip_prefix(prefix)?.parse().ok()
}

enum Target {
    Label(String, usize),
}

fn parse(src: &str) -> Result<RestrictedProgram, TransformError> {
    let mut stmts = Vec::new();
    let mut labels = BTreeMap::new();
    let mut pending: Vec<(usize, Vec<Target>)> = Vec::new();
    let mut declared_inputs = None;
    let mut max_input = 0usize;
    let mut max_buffer = 0usize;

    for (lineno, raw) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let mut line = raw.split('#').next().unwrap_or("").trim();
        if let Some(rest) = line.strip_prefix(".inputs") {
            let k = rest
                .trim()
                .parse()
                .map_err(|_| syntax(line_no, "`.inputs` needs a count"))?;
            declared_inputs = Some(k);
            continue;
        }
        if let Some((label, rest)) = line.split_once(':') {
            let label = label.trim();
            if label.is_empty() || !label.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(syntax(line_no, format!("bad label `{label}`")));
            }
            if labels.insert(label.to_string(), stmts.len()).is_some() {
                return Err(syntax(line_no, format!("duplicate label `{label}`")));
            }
            line = rest.trim();
        }
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let buffer = |t: &str, max: &mut usize| -> Result<usize, TransformError> {
            let i = indexed(t, 'B').ok_or_else(|| syntax(line_no, format!("expected a buffer, found `{t}`")))?;
            *max = (*max).max(i + 1);
            Ok(i)
        };
        let stmt = match toks.as_slice() {
            ["A", "<-", "A", "+", "B0"] => Stmt::AddB0,
            ["A", "<-", "R[A]"] => Stmt::Deref,
            ["A", "<-", "N"] => Stmt::Load(Operand::RefN),
            ["A", "<-", src] if src.starts_with('@') => Stmt::Load(Operand::Address {
                segment: src[1..].to_string(),
                plus: 0,
            }),
            ["A", "<-", src, "+", k] if src.starts_with('@') => Stmt::Load(Operand::Address {
                segment: src[1..].to_string(),
                plus: k.parse().map_err(|_| syntax(line_no, format!("bad offset `{k}`")))?,
            }),
            ["A", "<-", src] => {
                if let Some(i) = indexed(src, 'U') {
                    max_input = max_input.max(i + 1);
                    Stmt::Load(Operand::Input(i))
                } else if let Ok(c) = src.parse() {
                    Stmt::Load(Operand::Const(c))
                } else {
                    Stmt::Load(Operand::Buffer(buffer(src, &mut max_buffer)?))
                }
            }
            [dst, "<-", "A"] => Stmt::Store(buffer(dst, &mut max_buffer)?),
            ["if", "A", "=", "B0", "goto", yes, "else", no] => {
                pending.push((
                    stmts.len(),
                    vec![
                        Target::Label(yes.to_string(), line_no),
                        Target::Label(no.to_string(), line_no),
                    ],
                ));
                Stmt::IfEq { then_: 0, else_: 0 }
            }
            ["goto", l] => {
                pending.push((stmts.len(), vec![Target::Label(l.to_string(), line_no)]));
                Stmt::Goto(0)
            }
            ["return", bs @ ..] if !bs.is_empty() => Stmt::Return(
                bs.iter()
                    .map(|t| buffer(t, &mut max_buffer))
                    .collect::<Result<_, _>>()?,
            ),
            _ => return Err(syntax(line_no, format!("not a restricted statement: `{line}`"))),
        };
        stmts.push(stmt);
    }

    for (at, targets) in pending {
        let mut resolved = Vec::new();
        for Target::Label(name, line) in targets {
            let t = *labels
                .get(&name)
                .ok_or_else(|| syntax(line, format!("undefined label `{name}`")))?;
            resolved.push(t);
        }
        stmts[at] = match (&stmts[at], resolved.as_slice()) {
            (Stmt::IfEq { .. }, [y, n]) => Stmt::IfEq { then_: *y, else_: *n },
            (_, [t]) => Stmt::Goto(*t),
            _ => unreachable!("targets recorded per statement kind"),
        };
    }
    match stmts.last() {
        Some(Stmt::Return(_)) | Some(Stmt::Goto(_)) | Some(Stmt::IfEq { .. }) => {}
        _ => return Err(syntax(src.lines().count(), "program must end with return or a jump")),
    }
    let inputs = declared_inputs.unwrap_or(max_input);
    if inputs < max_input {
        return Err(syntax(1, format!("`.inputs {inputs}` but U{} is used", max_input - 1)));
    }
    // B0 always exists so that `if` and `A + B0` have an operand.
    let p = RestrictedProgram {
        stmts,
        inputs,
        buffers: max_buffer.max(1),
    };
    p.output_arity()?;
    Ok(p)
}

/// A program of the corpus, written for inputs that are base-`B` digit
/// pairs of `degree` base-`N` digits.
#[derive(Debug, Clone, Copy)]
pub struct RestrictedSample {
    pub name: &'static str,
    pub source: &'static str,
    pub degree: usize,
}

impl RestrictedSample {
    pub fn parse(&self) -> Result<RestrictedProgram, TransformError> {
        RestrictedProgram::parse(self.source)
    }
}

const SAMPLES: &[RestrictedSample] = &[
    RestrictedSample {
        name: "identity",
        source: include_str!("../../programs/restricted/identity.acc"),
        degree: 1,
    },
    RestrictedSample {
        name: "swap_digits",
        source: include_str!("../../programs/restricted/swap_digits.acc"),
        degree: 1,
    },
    RestrictedSample {
        name: "digit_sum",
        source: include_str!("../../programs/restricted/digit_sum.acc"),
        degree: 1,
    },
    RestrictedSample {
        name: "is_zero",
        source: include_str!("../../programs/restricted/is_zero.acc"),
        degree: 1,
    },
    RestrictedSample {
        name: "pred",
        source: include_str!("../../programs/restricted/pred.acc"),
        degree: 1,
    },
    RestrictedSample {
        name: "increment",
        source: include_str!("../../programs/restricted/increment.acc"),
        degree: 1,
    },
    RestrictedSample {
        name: "increment2",
        source: include_str!("../../programs/restricted/increment2.acc"),
        degree: 2,
    },
];

/// The bundled restricted-form programs.
pub fn restricted_corpus() -> &'static [RestrictedSample] {
    SAMPLES
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let src = "\
.inputs 2
start: A <- U1
B0 <- A
A <- 1
A <- A + B0
A <- R[A]
B3 <- A
A <- B3
A <- N
A <- @T + 2
if A = B0 goto start else done
done: return B3 B0
";
        let p = RestrictedProgram::parse(src).unwrap();
        assert_eq!(p.inputs, 2);
        assert_eq!(p.buffers, 4);
        assert_eq!(p.stmts[9], Stmt::IfEq { then_: 0, else_: 10 });
        assert_eq!(
            p.stmts[8],
            Stmt::Load(Operand::Address {
                segment: "T".into(),
                plus: 2
            })
        );
    }

    #[test]
    fn rejects_other_forms() {
        for bad in ["A <- A * B0\nreturn B0", "A <- A + B1\nreturn B0", "B0 <- B1\nreturn B0", "A <- 1"] {
            assert!(
                matches!(RestrictedProgram::parse(bad), Err(TransformError::RestrictedSyntax { .. })),
                "{bad}"
            );
        }
        assert!(RestrictedProgram::parse("goto x\nreturn B0").is_err());
        assert_eq!(
            RestrictedProgram::parse("return B0\nreturn B0 B1"),
            Err(TransformError::ReturnArity)
        );
    }

    #[test]
    fn runs_with_memory() {
        let mut mem = Memory::new();
        mem.add_segment("T", &[10, 20, 30]);
        let p = RestrictedProgram::parse(
            "A <- @T\nB0 <- A\nA <- U0\nA <- A + B0\nA <- R[A]\nB1 <- A\nreturn B1",
        )
        .unwrap();
        assert_eq!(p.run(&[2], 4, &mem, 100).unwrap(), (vec![30], 7));
        assert_eq!(p.run(&[3], 4, &mem, 100), Err(TransformError::MemoryRead(3)));
    }

    #[test]
    fn loops_hit_tau() {
        let p = RestrictedProgram::parse("top: goto top\nreturn B0").unwrap();
        assert_eq!(
            p.run(&[], 4, &Memory::new(), 4),
            Err(TransformError::PathTooLong { tau: 4 })
        );
    }

    #[test]
    fn corpus_parses() {
        for s in restricted_corpus() {
            let p = s.parse().unwrap_or_else(|e| panic!("{}: {e}", s.name));
            assert_eq!(p.inputs, 2 * s.degree, "{}", s.name);
            assert_eq!(p.output_arity().unwrap() % 2, 0, "{}", s.name);
        }
    }
}
