//! Dense statevector engine.
//!
//! Amplitude index bit `k` is qubit `k` (qubit 0 least significant). Basis
//! bitstrings are written like Pauli labels, highest qubit leftmost, so
//! `"10"` on two qubits is index 2.
//!
//! Measurement in a Pauli basis rotates each qubit to Z before sampling:
//! X is measured after `RY(-π/2)`, Y after `S†` followed by `RY(-π/2)`. Both
//! map the +1 eigenstate to |0⟩, so outcome bit `b` carries eigenvalue
//! `(-1)^b` on that qubit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::measurement::MeasurementGroup;
use crate::pauli::{Letter, PauliString, PauliSum};
use crate::rng::{self, Rng};

/// Default largest register the engine will allocate.
pub const MAX_QUBITS: usize = 16;

const NORM_TOL: f64 = 1e-10;
const FILE_NORM_TOL: f64 = 1e-6;
const HERMITIAN_TOL: f64 = 1e-10;

/// Outcome histogram keyed by basis index.
pub type Counts = BTreeMap<usize, u64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("statevector needs at least one qubit"));
    }
    if n > MAX_QUBITS {
        return Err(Error::Size {
            what: "statevector qubits",
            limit: MAX_QUBITS,
            got: n,
        });
    }
    Ok(())
}

/// Formats a basis index as a bitstring, highest qubit leftmost.
pub fn bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .rev()
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

impl Statevector {
    /// |0…0⟩.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::from_basis_index(n_qubits, 0)
    }

    pub fn from_basis_index(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    /// Basis state from an occupation bitstring (highest qubit leftmost).
    pub fn from_basis_state(n_qubits: usize, bits: &str) -> Result<Self> {
        if bits.chars().count() != n_qubits {
            return Err(Error::invalid(format!(
                "bitstring {bits:?} has {} characters, expected {n_qubits}",
                bits.chars().count()
            )));
        }
        let mut index = 0usize;
        for c in bits.chars() {
            index <<= 1;
            match c {
                '0' => {}
                '1' => index |= 1,
                _ => return Err(Error::invalid(format!("bad character {c:?} in bitstring"))),
            }
        }
        Self::from_basis_index(n_qubits, index)
    }

    /// Normalizes `amps` (length must be a power of two).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude count {len} is not a power of two >= 2")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("non-finite amplitude"));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("zero amplitude vector"));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Statevector { n_qubits, amps })
    }

    /// Loads an amplitude file; the listed norm must be within 1e-6 of one.
    pub fn from_amplitude_file<R: Read>(reader: R) -> Result<Self> {
        let file: AmplitudeFile = serde_json::from_reader(reader)?;
        if let Some(order) = &file.bit_order {
            if order != BIT_ORDER {
                return Err(Error::invalid(format!("unsupported bit_order {order:?}")));
            }
        }
        if file.amps.len() != 1usize.checked_shl(file.n_qubits as u32).unwrap_or(0) {
            return Err(Error::invalid(format!(
                "file lists {} amplitudes for {} qubits",
                file.amps.len(),
                file.n_qubits
            )));
        }
        let amps: Vec<Complex64> = file.amps.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 && (norm - 1.0).abs() > FILE_NORM_TOL {
            return Err(Error::invalid(format!("amplitude norm {norm} differs from 1 by more than 1e-6")));
        }
        Self::from_amplitudes(amps)
    }

    pub fn to_file(&self) -> AmplitudeFile {
        AmplitudeFile {
            n_qubits: self.n_qubits,
            bit_order: Some(BIT_ORDER.to_string()),
            amps: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_file())?;
        Ok(())
    }

    /// Tensor product with `fragments[0]` on the lowest qubits.
    pub fn product_state(fragments: &[Statevector]) -> Result<Self> {
        if fragments.is_empty() {
            return Err(Error::invalid("product of zero fragments"));
        }
        let total: usize = fragments.iter().map(|f| f.n_qubits).sum();
        check_qubits(total)?;
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for f in fragments {
            let mut next = Vec::with_capacity(amps.len() * f.amps.len());
            for hi in &f.amps {
                for lo in &amps {
                    next.push(hi * lo);
                }
            }
            amps = next;
        }
        Ok(Statevector { n_qubits: total, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn apply_ry(&mut self, target: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let bit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | bit];
                self.amps[i] = a0 * c - a1 * s;
                self.amps[i | bit] = a0 * s + a1 * c;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cb, tb) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    pub fn apply_x(&mut self, target: usize) {
        let bit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    /// Multiplies the |1⟩ component of `target` by `-i` (S†).
    fn apply_sdg(&mut self, target: usize) {
        let bit = 1usize << target;
        let mi = Complex64::new(0.0, -1.0);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= mi;
            }
        }
    }

    /// Runs `circuit` with RY angles taken from `params` by slot.
    pub fn apply_circuit(&self, circuit: &Circuit, params: &[f64]) -> Result<Statevector> {
        Error::check_dim(self.n_qubits, circuit.n_qubits)?;
        if params.len() != circuit.n_params {
            return Err(Error::contract(format!(
                "circuit has {} parameters, got {}",
                circuit.n_params,
                params.len()
            )));
        }
        let mut out = self.clone();
        for g in &circuit.gates {
            match *g {
                Gate::Ry { target, slot } => out.apply_ry(target, params[slot]),
                Gate::Cnot { control, target } => out.apply_cnot(control, target),
                Gate::X { target } => out.apply_x(target),
            }
        }
        Ok(out)
    }

    /// `⟨ψ|op|ψ⟩` without the Hermiticity check.
    pub fn expectation_complex(&self, op: &PauliSum) -> Result<Complex64> {
        Error::check_dim(self.n_qubits, op.n_qubits())?;
        Ok(op
            .terms()
            .iter()
            .map(|t| t.coeff * pauli_expectation_raw(&self.amps, &t.string))
            .sum())
    }

    /// Exact `Σ c_i ⟨P_i⟩` for a Hermitian operator.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        if !op.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::contract("expectation requires a Hermitian operator"));
        }
        let v = self.expectation_complex(op)?;
        if v.im.abs() > HERMITIAN_TOL * (1.0 + v.re.abs()) {
            return Err(Error::contract(format!("expectation has imaginary part {}", v.im)));
        }
        Ok(v.re)
    }

    /// Real expectation of one Pauli string.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        Error::check_dim(self.n_qubits, p.n_qubits())?;
        Ok(pauli_expectation_raw(&self.amps, p).re)
    }

    /// `op|ψ⟩` (unnormalized) and its norm.
    pub fn apply_operator(&self, op: &PauliSum) -> Result<(Vec<Complex64>, f64)> {
        Error::check_dim(self.n_qubits, op.n_qubits())?;
        let out = apply_operator_raw(&self.amps, op);
        let norm = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Ok((out, norm))
    }

    /// Outcome probabilities after rotating each qubit into `basis[q]`.
    pub fn basis_probabilities(&self, basis: &[Letter]) -> Result<Vec<f64>> {
        Error::check_dim(self.n_qubits, basis.len())?;
        let mut rotated = self.clone();
        for (q, l) in basis.iter().enumerate() {
            match l {
                Letter::I | Letter::Z => {}
                Letter::X => rotated.apply_ry(q, -std::f64::consts::FRAC_PI_2),
                Letter::Y => {
                    rotated.apply_sdg(q);
                    rotated.apply_ry(q, -std::f64::consts::FRAC_PI_2);
                }
            }
        }
        Ok(rotated.amps.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Samples `shots` outcomes in `basis` from `rng`.
    pub fn sample_basis(&self, basis: &[Letter], shots: u64, rng: &mut Rng) -> Result<Counts> {
        let probs = self.basis_probabilities(basis)?;
        Ok(sample_from_probabilities(&probs, shots, rng))
    }

    /// Samples a qubit-wise commuting group in its shared basis.
    pub fn sample_group(&self, group: &MeasurementGroup, shots: u64, seed: u64) -> Result<Counts> {
        let mut rng = rng::stream(seed, "sample_group", 0);
        self.sample_group_with(group, shots, &mut rng)
    }

    pub fn sample_group_with(&self, group: &MeasurementGroup, shots: u64, rng: &mut Rng) -> Result<Counts> {
        if shots == 0 {
            return Err(Error::contract("sample_group needs at least one shot"));
        }
        let basis = group.qwc_basis()?;
        self.sample_basis(&basis, shots, rng)
    }
}

/// Draws `shots` outcomes from `probs` as one multinomial sample.
pub(crate) fn sample_from_probabilities(probs: &[f64], shots: u64, rng: &mut Rng) -> Counts {
    crate::measurement::multinomial(shots, probs, rng)
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .collect()
}

pub(crate) fn pauli_expectation_raw(amps: &[Complex64], p: &PauliString) -> Complex64 {
    let x = p.x_mask() as usize;
    let z = p.z_mask();
    let mut acc = Complex64::new(0.0, 0.0);
    if x == 0 {
        let mut r = 0.0;
        for (k, a) in amps.iter().enumerate() {
            let s = if (k as u64 & z).count_ones() & 1 == 0 { 1.0 } else { -1.0 };
            r += s * a.norm_sqr();
        }
        return Complex64::new(r, 0.0);
    }
    for (k, a) in amps.iter().enumerate() {
        let s = if (k as u64 & z).count_ones() & 1 == 0 { 1.0 } else { -1.0 };
        acc += amps[k ^ x].conj() * a * s;
    }
    // i^{#Y}
    let ph = match p.y_count() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    acc * ph
}

pub(crate) fn apply_operator_raw(amps: &[Complex64], op: &PauliSum) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for t in op.terms() {
        for (k, a) in amps.iter().enumerate() {
            let (j, ph) = t.string.apply_to_index(k);
            out[j] += t.coeff * ph * a;
        }
    }
    out
}

/// Real part of `⟨u|op|u⟩` for an arbitrary (unnormalized) vector.
pub(crate) fn quadratic_form(amps: &[Complex64], op: &PauliSum) -> Complex64 {
    op.terms()
        .iter()
        .map(|t| t.coeff * pauli_expectation_raw(amps, &t.string))
        .sum()
}

pub const BIT_ORDER: &str = "qubit0_lsb";

/// On-disk amplitudes: `{"n_qubits", "bit_order": "qubit0_lsb", "amps": [[re, im], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFile {
    pub n_qubits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit_order: Option<String>,
    pub amps: Vec<[f64; 2]>,
}
