//! Bundled assembly programs with sample inputs and host oracles.

use super::{parse_program, Program, RamError};

#[derive(Debug, Clone, Copy)]
pub struct CorpusProgram {
    pub name: &'static str,
    pub source: &'static str,
    /// Corpus programs that must run first on the same machine.
    pub requires: &'static [&'static str],
    /// Whether the program reads tables preloaded from a
    /// [`TableSet`](crate::tables::TableSet).
    pub host_tables: bool,
    inputs: fn(u64) -> Vec<u64>,
    oracle: fn(u64, &[u64]) -> Vec<u64>,
}

impl CorpusProgram {
    pub fn parse(&self) -> Result<Program, RamError> {
        parse_program(self.source)
    }

    /// A deterministic input stream for reference integer `n`.
    pub fn sample_inputs(&self, n: u64) -> Vec<u64> {
        (self.inputs)(n)
    }

    /// Expected outputs for `inputs`.
    pub fn expected(&self, n: u64, inputs: &[u64]) -> Vec<u64> {
        (self.oracle)(n, inputs)
    }

    /// Runs on a fresh machine without preloaded state.
    pub fn self_contained(&self) -> bool {
        self.requires.is_empty() && !self.host_tables
    }
}

fn pred2(n: u64, x1: u64, x0: u64) -> [u64; 2] {
    let x = (x1 * n + x0).saturating_sub(1);
    [x / n, x % n]
}

const PROGRAMS: &[CorpusProgram] = &[
    CorpusProgram {
        name: "echo_n",
        source: include_str!("../../programs/echo_n.ram"),
        requires: &[],
        host_tables: false,
        inputs: |_| vec![],
        oracle: |n, _| vec![n],
    },
    CorpusProgram {
        name: "linpp_pred",
        source: include_str!("../../programs/linpp_pred.ram"),
        requires: &[],
        host_tables: false,
        inputs: |_| vec![],
        oracle: |_, _| vec![],
    },
    CorpusProgram {
        name: "cstp_pred2",
        source: include_str!("../../programs/cstp_pred2.ram"),
        requires: &["linpp_pred"],
        host_tables: false,
        inputs: |n| vec![n - 1, 0],
        oracle: |n, i| pred2(n, i[0], i[1]).to_vec(),
    },
    CorpusProgram {
        name: "pred_service",
        source: include_str!("../../programs/pred_service.ram"),
        requires: &[],
        host_tables: false,
        inputs: |n| vec![1, 0, 0, 0, n - 1, n - 1, 0, 5 % n, n],
        oracle: |n, i| {
            i[..i.len() - 1]
                .chunks(2)
                .flat_map(|c| pred2(n, c[0], c[1]))
                .collect()
        },
    },
    CorpusProgram {
        name: "linpp_divmod_n",
        source: include_str!("../../programs/linpp_divmod_n.ram"),
        requires: &[],
        host_tables: false,
        inputs: |_| vec![],
        oracle: |_, _| vec![],
    },
    CorpusProgram {
        name: "add2",
        source: include_str!("../../programs/add2.ram"),
        requires: &["linpp_divmod_n"],
        host_tables: false,
        inputs: |n| vec![n - 1, n - 1, 0, 1],
        oracle: |n, i| {
            let s = (i[0] + i[2]) * n + i[1] + i[3];
            vec![s / (n * n), s / n % n, s % n]
        },
    },
    CorpusProgram {
        name: "mul1",
        source: include_str!("../../programs/mul1.ram"),
        requires: &[],
        host_tables: true,
        inputs: |n| vec![n - 1, n - 2],
        oracle: |n, i| vec![i[0] * i[1] / n, i[0] * i[1] % n],
    },
    CorpusProgram {
        name: "sum_inputs",
        source: include_str!("../../programs/sum_inputs.ram"),
        requires: &[],
        host_tables: false,
        inputs: |n| vec![3, 1, n - 1, 2],
        oracle: |_, i| vec![i[1..].iter().sum()],
    },
    CorpusProgram {
        name: "reverse",
        source: include_str!("../../programs/reverse.ram"),
        requires: &[],
        host_tables: false,
        inputs: |n| vec![4, 1, 2, n - 1, 0],
        oracle: |_, i| i[1..].iter().rev().copied().collect(),
    },
];

/// Every bundled program.
pub fn corpus() -> &'static [CorpusProgram] {
    PROGRAMS
}

/// Looks a program up by name.
pub fn find(name: &str) -> Option<&'static CorpusProgram> {
    PROGRAMS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ram::{execute, MachineState, Primitives};
    use crate::tables::TableSet;

    fn run_with_requirements(p: &CorpusProgram, n: u64) -> Vec<u64> {
        let tables = TableSet::build(n, 1).unwrap();
        let mut state = MachineState::new(n, tables.content_bound).unwrap();
        if p.host_tables {
            state.load_table_set(&tables);
        }
        let prims = Primitives::new();
        for dep in p.requires {
            let dep = find(dep).unwrap().parse().unwrap();
            execute(&mut state, &dep, &prims, &[]).unwrap();
        }
        let inputs = p.sample_inputs(n);
        execute(&mut state, &p.parse().unwrap(), &prims, &inputs)
            .unwrap()
            .outputs
    }

    #[test]
    fn every_program_matches_its_oracle() {
        for p in corpus() {
            for n in [5u64, 7, 16, 64] {
                let inputs = p.sample_inputs(n);
                assert_eq!(run_with_requirements(p, n), p.expected(n, &inputs), "{} at N={n}", p.name);
            }
        }
    }

    #[test]
    fn linpp_pred_fills_table() {
        let p = find("linpp_pred").unwrap().parse().unwrap();
        let mut state = MachineState::with_degree(5, 1).unwrap();
        execute(&mut state, &p, &Primitives::new(), &[]).unwrap();
        assert_eq!(state.array_values("PRED", 6)[1..], [0, 1, 2, 3, 4]);
    }
}
