//! Hardware-efficient RY/CNOT circuits.
//!
//! Three connectivities are built, each starting from a column of RY gates:
//!
//! * linear: per layer a CNOT chain `0→1, 1→2, …` then an RY column;
//! * full: per layer CNOTs on every pair `i→j`, `i < j` (ordered by `i`, then
//!   `j`) then an RY column;
//! * cascade: per layer a forward chain `0→1, …, n-2→n-1`, an RY column, the
//!   reverse chain `n-2→n-1, …, 0→1`, and another RY column.
//!
//! Controls are always the lower qubit index. RY slots are numbered in gate
//! order, so parameter `k` feeds the `k`-th RY gate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    /// `RY(params[slot])` on `target`.
    Ry { target: usize, slot: usize },
    Cnot { control: usize, target: usize },
    X { target: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_params: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            n_params: 0,
            gates: Vec::new(),
        }
    }

    /// Appends an RY gate bound to the next free parameter slot.
    pub fn ry(&mut self, target: usize) -> &mut Self {
        let slot = self.n_params;
        self.n_params += 1;
        self.gates.push(Gate::Ry { target, slot });
        self
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.gates.push(Gate::Cnot { control, target });
        self
    }

    pub fn x(&mut self, target: usize) -> &mut Self {
        self.gates.push(Gate::X { target });
        self
    }

    fn ry_column(&mut self) {
        for q in 0..self.n_qubits {
            self.ry(q);
        }
    }

    /// Checks qubit ranges, distinct control/target, and slot numbering.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n_params];
        for g in &self.gates {
            match *g {
                Gate::Ry { target, slot } => {
                    self.check_qubit(target)?;
                    if slot >= self.n_params {
                        return Err(Error::invalid(format!("RY slot {slot} >= {}", self.n_params)));
                    }
                    seen[slot] = true;
                }
                Gate::Cnot { control, target } => {
                    self.check_qubit(control)?;
                    self.check_qubit(target)?;
                    if control == target {
                        return Err(Error::invalid(format!("CNOT control equals target ({control})")));
                    }
                }
                Gate::X { target } => self.check_qubit(target)?,
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("circuit declares unused parameter slots"));
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n_qubits {
            Ok(())
        } else {
            Err(Error::invalid(format!("qubit {q} out of range for {} qubits", self.n_qubits)))
        }
    }

    /// `(single-qubit gates, CNOTs)`.
    pub fn tally(&self) -> (usize, usize) {
        self.gates.iter().fold((0, 0), |(s, c), g| match g {
            Gate::Cnot { .. } => (s, c + 1),
            _ => (s + 1, c),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaKind {
    RyLinear,
    RyFull,
    RyCascade,
}

impl fmt::Display for HeaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeaKind::RyLinear => "ry_linear",
            HeaKind::RyFull => "ry_full",
            HeaKind::RyCascade => "ry_cascade",
        })
    }
}

impl FromStr for HeaKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ry_linear" | "linear" => Ok(HeaKind::RyLinear),
            "ry_full" | "full" => Ok(HeaKind::RyFull),
            "ry_cascade" | "cascade" => Ok(HeaKind::RyCascade),
            other => Err(Error::invalid(format!("unknown ansatz kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaSpec {
    pub kind: HeaKind,
    pub n_qubits: usize,
    pub layers: usize,
}

impl HeaSpec {
    pub fn new(kind: HeaKind, n_qubits: usize, layers: usize) -> Result<Self> {
        let s = HeaSpec {
            kind,
            n_qubits,
            layers,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::invalid("hardware-efficient ansatz needs n_qubits >= 2"));
        }
        if self.layers < 1 {
            return Err(Error::invalid("hardware-efficient ansatz needs layers >= 1"));
        }
        Ok(())
    }
}

pub fn build_hea(spec: &HeaSpec) -> Result<Circuit> {
    spec.validate()?;
    let n = spec.n_qubits;
    let mut c = Circuit::new(n);
    c.ry_column();
    for _ in 0..spec.layers {
        match spec.kind {
            HeaKind::RyLinear => {
                for i in 0..n - 1 {
                    c.cnot(i, i + 1);
                }
                c.ry_column();
            }
            HeaKind::RyFull => {
                for i in 0..n {
                    for j in i + 1..n {
                        c.cnot(i, j);
                    }
                }
                c.ry_column();
            }
            HeaKind::RyCascade => {
                for i in 0..n - 1 {
                    c.cnot(i, i + 1);
                }
                c.ry_column();
                for i in (0..n - 1).rev() {
                    c.cnot(i, i + 1);
                }
                c.ry_column();
            }
        }
    }
    Ok(c)
}

pub fn param_count(spec: &HeaSpec) -> usize {
    let (n, l) = (spec.n_qubits, spec.layers);
    match spec.kind {
        HeaKind::RyLinear | HeaKind::RyFull => n * (l + 1),
        HeaKind::RyCascade => n * (2 * l + 1),
    }
}

/// `(single-qubit gates, CNOTs)` of [`build_hea`] without building it.
pub fn gate_count(spec: &HeaSpec) -> (usize, usize) {
    let (n, l) = (spec.n_qubits, spec.layers);
    let cnot = match spec.kind {
        HeaKind::RyLinear => (n - 1) * l,
        HeaKind::RyFull => n * (n - 1) / 2 * l,
        HeaKind::RyCascade => 2 * (n - 1) * l,
    };
    (param_count(spec), cnot)
}
