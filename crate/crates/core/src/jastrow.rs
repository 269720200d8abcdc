//! Diagonal Jastrow factors.
//!
//! The linearized factor is `J = 1 − Σ α_i Z_i − Σ_{i<j} λ_ij Z_i Z_j`. Pair
//! parameters are stored upper-triangle row-major: `(0,1), (0,2), …, (0,n−1),
//! (1,2), …, (n−2,n−1)`.

use num_complex::Complex64;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{sum_mul, PauliString, PauliSum, DEFAULT_DROP_TOL};
use crate::rng;
use crate::statevector::Statevector;

/// Default half-width of the initial parameter distribution.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JastrowParams {
    pub alpha: Vec<f64>,
    pub lambda_upper_triangle: Vec<f64>,
}

/// Number of Jastrow parameters on `n` qubits, `n(n+1)/2`.
pub fn param_count(n_qubits: usize) -> usize {
    n_qubits * (n_qubits + 1) / 2
}

/// Position of pair `(i, j)`, `i < j`, in the upper-triangle vector.
pub fn pair_index(n_qubits: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n_qubits);
    i * (2 * n_qubits - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)`, `i < j`, in storage order.
pub fn pairs(n_qubits: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_qubits).flat_map(move |i| (i + 1..n_qubits).map(move |j| (i, j)))
}

impl JastrowParams {
    pub fn zeros(n_qubits: usize) -> Self {
        JastrowParams {
            alpha: vec![0.0; n_qubits],
            lambda_upper_triangle: vec![0.0; n_qubits * n_qubits.saturating_sub(1) / 2],
        }
    }

    pub fn new(alpha: Vec<f64>, lambda_upper_triangle: Vec<f64>) -> Result<Self> {
        let p = JastrowParams {
            alpha,
            lambda_upper_triangle,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unpacks a flat vector laid out as `alpha ++ lambda`.
    pub fn from_flat(n_qubits: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != param_count(n_qubits) {
            return Err(Error::contract(format!(
                "expected {} Jastrow parameters, got {}",
                param_count(n_qubits),
                flat.len()
            )));
        }
        Self::new(flat[..n_qubits].to_vec(), flat[n_qubits..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.lambda_upper_triangle).copied().collect()
    }

    pub fn n_qubits(&self) -> usize {
        self.alpha.len()
    }

    pub fn lambda(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.lambda_upper_triangle[pair_index(self.n_qubits(), a, b)]
    }

    pub fn scaled(&self, t: f64) -> Self {
        JastrowParams {
            alpha: self.alpha.iter().map(|a| a * t).collect(),
            lambda_upper_triangle: self.lambda_upper_triangle.iter().map(|l| l * t).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alpha.len();
        if n == 0 {
            return Err(Error::invalid("Jastrow parameters need at least one qubit"));
        }
        if self.lambda_upper_triangle.len() != n * (n - 1) / 2 {
            return Err(Error::invalid(format!(
                "{} pair parameters for {n} qubits, expected {}",
                self.lambda_upper_triangle.len(),
                n * (n - 1) / 2
            )));
        }
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite Jastrow parameter"));
        }
        Ok(())
    }

    /// Exponent `−Σ α_i z_i − Σ λ_ij z_i z_j` at basis index `k`.
    pub fn exponent(&self, k: usize) -> f64 {
        let n = self.n_qubits();
        let z = |q: usize| if k >> q & 1 == 0 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for (i, a) in self.alpha.iter().enumerate() {
            e -= a * z(i);
        }
        for ((i, j), l) in pairs(n).zip(&self.lambda_upper_triangle) {
            e -= l * z(i) * z(j);
        }
        e
    }

    /// Diagonal of the linearized factor, `1 + exponent(k)` per basis index.
    pub fn linear_diagonal(&self) -> Vec<f64> {
        (0..1usize << self.n_qubits()).map(|k| 1.0 + self.exponent(k)).collect()
    }
}

/// Draws every parameter from `Uniform(−ε, ε)`.
pub fn sample_params(n_qubits: usize, epsilon: f64, seed: u64) -> Result<JastrowParams> {
    let mut r = rng::stream(seed, "jastrow", 0);
    sample_params_with(n_qubits, epsilon, &mut r)
}

pub fn sample_params_with(n_qubits: usize, epsilon: f64, r: &mut rng::Rng) -> Result<JastrowParams> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if n_qubits == 0 {
        return Err(Error::invalid("Jastrow parameters need at least one qubit"));
    }
    let total = param_count(n_qubits);
    let flat: Vec<f64> = if epsilon == 0.0 {
        vec![0.0; total]
    } else {
        let dist = Uniform::new(-epsilon, epsilon).map_err(|e| Error::invalid(e.to_string()))?;
        (0..total).map(|_| dist.sample(r)).collect()
    };
    JastrowParams::from_flat(n_qubits, &flat)
}

/// `1 − Σ α_i Z_i − Σ λ_ij Z_i Z_j` as a Pauli sum (zero coefficients dropped).
pub fn build_linear_jastrow(p: &JastrowParams) -> Result<PauliSum> {
    p.validate()?;
    let n = p.n_qubits();
    let mut terms = vec![(PauliString::identity(n)?, Complex64::new(1.0, 0.0))];
    for (i, a) in p.alpha.iter().enumerate() {
        if *a != 0.0 {
            terms.push((PauliString::from_masks(n, 0, 1 << i)?, Complex64::new(-a, 0.0)));
        }
    }
    for ((i, j), l) in pairs(n).zip(&p.lambda_upper_triangle) {
        if *l != 0.0 {
            terms.push((
                PauliString::from_masks(n, 0, (1 << i) | (1 << j))?,
                Complex64::new(-l, 0.0),
            ));
        }
    }
    PauliSum::from_terms(n, terms)
}

/// `(J·H·J, J·J)` for a real diagonal `J`, both simplified.
pub fn conjugate_pair(j: &PauliSum, h: &PauliSum) -> Result<(PauliSum, PauliSum)> {
    if !j.terms().iter().all(|t| t.string.is_diagonal()) {
        return Err(Error::contract("Jastrow operator must contain only I/Z strings"));
    }
    let jh = sum_mul(j, h, DEFAULT_DROP_TOL)?;
    let jhj = sum_mul(&jh, j, DEFAULT_DROP_TOL)?;
    let jj = sum_mul(j, j, DEFAULT_DROP_TOL)?;
    let jhj = jhj.hermitian_part(DEFAULT_DROP_TOL, 1e-9)?;
    let jj = jj.hermitian_part(DEFAULT_DROP_TOL, 1e-9)?;
    Ok((jhj, jj))
}

/// Multiplies amplitudes by `exp(−Σ α_i z_i − Σ λ_ij z_i z_j)`; result is unnormalized.
pub fn apply_exp_jastrow(state: &Statevector, p: &JastrowParams) -> Result<Vec<Complex64>> {
    p.validate()?;
    Error::check_dim(state.n_qubits(), p.n_qubits())?;
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a * p.exponent(k).exp())
        .collect())
}

/// Multiplies amplitudes by the linearized diagonal; result is unnormalized.
pub fn apply_linear_jastrow(state: &Statevector, p: &JastrowParams) -> Result<Vec<Complex64>> {
    p.validate()?;
    Error::check_dim(state.n_qubits(), p.n_qubits())?;
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a * (1.0 + p.exponent(k)))
        .collect())
}
