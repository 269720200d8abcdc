//! Exact-mode VQE and nuVQE cost functions and the multi-start driver.
//!
//! The nuVQE energy is the Rayleigh quotient `⟨ψ|JHJ|ψ⟩ / ⟨ψ|JJ|ψ⟩` for the
//! linearized Jastrow factor `J`. Because `J` is real and diagonal it is
//! evaluated as `⟨φ|H|φ⟩ / ⟨φ|φ⟩` with `φ = Jψ`; [`nuvqe_energy_from_operators`]
//! evaluates the same quantity from explicit `JHJ` and `JJ` sums.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::ansatz::Circuit;
use crate::error::{Error, Result};
use crate::jastrow::{self, JastrowParams};
use crate::optim::{self, OptimizerConfig};
use crate::par::{self, Exec};
use crate::pauli::PauliSum;
use crate::rng;
use crate::statevector::{apply_operator_raw, quadratic_form, Statevector};

/// Smallest admissible `⟨J†J⟩`.
pub const DENOM_TOL: f64 = 1e-8;
pub const DEFAULT_VQE_RESTARTS: usize = 1000;
pub const DEFAULT_NUVQE_RESTARTS: usize = 100;

const HERMITIAN_TOL: f64 = 1e-10;

/// `μ ⟨(C − c)²⟩` added to the energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    pub operator: PauliSum,
    pub target: f64,
    pub weight: f64,
    /// Evaluate on the Jastrow-dressed state instead of the bare circuit state.
    pub dressed: bool,
}

impl Penalty {
    pub fn new(operator: PauliSum, target: f64) -> Self {
        Penalty {
            operator,
            target,
            weight: 1.0,
            dressed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub hamiltonian: PauliSum,
    pub circuit: Circuit,
    pub initial_state: Statevector,
    pub jastrow: bool,
    pub penalty: Option<Penalty>,
}

impl CostSpec {
    pub fn new(hamiltonian: PauliSum, circuit: Circuit, initial_state: Statevector) -> Result<Self> {
        let s = CostSpec {
            hamiltonian,
            circuit,
            initial_state,
            jastrow: false,
            penalty: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_jastrow(mut self, on: bool) -> Self {
        self.jastrow = on;
        self
    }

    pub fn with_penalty(mut self, penalty: Penalty) -> Result<Self> {
        self.penalty = Some(penalty);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.initial_state.n_qubits();
        Error::check_dim(n, self.hamiltonian.n_qubits())?;
        Error::check_dim(n, self.circuit.n_qubits)?;
        self.circuit.validate()?;
        if !self.hamiltonian.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::contract("Hamiltonian is not Hermitian"));
        }
        if let Some(p) = &self.penalty {
            Error::check_dim(n, p.operator.n_qubits())?;
            if !p.operator.is_hermitian(HERMITIAN_TOL) {
                return Err(Error::contract("penalty operator is not Hermitian"));
            }
            if !p.target.is_finite() || !p.weight.is_finite() || p.weight < 0.0 {
                return Err(Error::invalid("penalty target and weight must be finite, weight >= 0"));
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.initial_state.n_qubits()
    }

    pub fn n_theta(&self) -> usize {
        self.circuit.n_params
    }

    /// Length of the flat parameter vector `θ ++ α ++ λ`.
    pub fn n_params(&self) -> usize {
        self.n_theta() + if self.jastrow { jastrow::param_count(self.n_qubits()) } else { 0 }
    }

    /// Splits a flat vector into `θ` and optional Jastrow parameters.
    pub fn split<'a>(&self, x: &'a [f64]) -> Result<(&'a [f64], Option<JastrowParams>)> {
        if x.len() != self.n_params() {
            return Err(Error::contract(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                x.len()
            )));
        }
        let (theta, rest) = x.split_at(self.n_theta());
        let p = if self.jastrow {
            Some(JastrowParams::from_flat(self.n_qubits(), rest)?)
        } else {
            None
        };
        Ok((theta, p))
    }

    pub fn prepare(&self, theta: &[f64]) -> Result<Statevector> {
        self.initial_state.apply_circuit(&self.circuit, theta)
    }
}

/// `⟨ψ(θ)|H|ψ(θ)⟩`.
pub fn vqe_energy(spec: &CostSpec, theta: &[f64]) -> Result<f64> {
    let psi = spec.prepare(theta)?;
    psi.expectation(&spec.hamiltonian)
}

fn dress(psi: &Statevector, p: &JastrowParams) -> Result<(Vec<Complex64>, f64)> {
    let phi = jastrow::apply_linear_jastrow(psi, p)?;
    let denom: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
    if !(denom > DENOM_TOL) {
        return Err(Error::DegenerateJastrow {
            value: denom,
            tol: DENOM_TOL,
        });
    }
    Ok((phi, denom))
}

/// `⟨ψ(θ)|JHJ|ψ(θ)⟩ / ⟨ψ(θ)|JJ|ψ(θ)⟩`.
pub fn nuvqe_energy(spec: &CostSpec, theta: &[f64], p: &JastrowParams) -> Result<f64> {
    let psi = spec.prepare(theta)?;
    let (phi, denom) = dress(&psi, p)?;
    Ok(quadratic_form(&phi, &spec.hamiltonian).re / denom)
}

/// Rayleigh quotient from explicit `JHJ` and `JJ` operators.
pub fn nuvqe_energy_from_operators(state: &Statevector, jhj: &PauliSum, jj: &PauliSum) -> Result<f64> {
    let num = state.expectation(jhj)?;
    let den = state.expectation(jj)?;
    if !(den > DENOM_TOL) {
        return Err(Error::DegenerateJastrow {
            value: den,
            tol: DENOM_TOL,
        });
    }
    Ok(num / den)
}

fn shifted_norm_sqr(amps: &[Complex64], op: &PauliSum, c: f64) -> f64 {
    let v = apply_operator_raw(amps, op);
    v.iter().zip(amps).map(|(a, b)| (a - b * c).norm_sqr()).sum()
}

/// `⟨(C − c)²⟩` on the bare circuit state, or on the dressed state when requested.
pub fn penalty_expectation(spec: &CostSpec, theta: &[f64], p: Option<&JastrowParams>) -> Result<f64> {
    let pen = spec
        .penalty
        .as_ref()
        .ok_or_else(|| Error::contract("no penalty configured"))?;
    let psi = spec.prepare(theta)?;
    match (pen.dressed, p) {
        (true, Some(p)) => {
            let (phi, denom) = dress(&psi, p)?;
            Ok(shifted_norm_sqr(&phi, &pen.operator, pen.target) / denom)
        }
        _ => Ok(shifted_norm_sqr(psi.amplitudes(), &pen.operator, pen.target)),
    }
}

/// Energy plus `μ ⟨(C − c)²⟩`.
pub fn penalized_cost(spec: &CostSpec, theta: &[f64], p: Option<&JastrowParams>) -> Result<f64> {
    let pen = spec
        .penalty
        .as_ref()
        .ok_or_else(|| Error::contract("no penalty configured"))?;
    let e = energy(spec, theta, p)?;
    Ok(e + pen.weight * penalty_expectation(spec, theta, p)?)
}

fn energy(spec: &CostSpec, theta: &[f64], p: Option<&JastrowParams>) -> Result<f64> {
    match p {
        Some(p) => nuvqe_energy(spec, theta, p),
        None => vqe_energy(spec, theta),
    }
}

/// Objective on a flat parameter vector: energy, plus penalty when configured.
pub fn cost(spec: &CostSpec, x: &[f64]) -> Result<f64> {
    let (theta, p) = spec.split(x)?;
    match spec.penalty {
        Some(_) => penalized_cost(spec, theta, p.as_ref()),
        None => energy(spec, theta, p.as_ref()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    pub restarts: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Start every `θ` at zero instead of `Uniform(−π, π)`.
    pub zero_start: bool,
    /// Start Jastrow parameters at zero instead of `Uniform(−ε, ε)`.
    pub jastrow_zero_start: bool,
    pub epsilon: f64,
    /// Flat start vector for restart 0.
    pub warm_start: Option<Vec<f64>>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            restarts: 10,
            seed: 0,
            optimizer: OptimizerConfig::default(),
            zero_start: false,
            jastrow_zero_start: false,
            epsilon: jastrow::DEFAULT_EPSILON,
            warm_start: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    /// Final objective; `None` when the restart failed.
    pub energy: Option<f64>,
    pub evals: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    /// Lowest objective over restarts (includes the penalty when configured).
    pub best_energy: f64,
    /// Hamiltonian energy (no penalty) at the best parameters.
    pub best_hamiltonian_energy: f64,
    pub best_penalty: Option<f64>,
    pub best_theta: Vec<f64>,
    pub best_jastrow: Option<JastrowParams>,
    pub best_restart: usize,
    pub n_restarts: usize,
    pub restart_energies: Vec<Option<f64>>,
    pub restarts: Vec<RestartRecord>,
    pub evaluations: usize,
    pub seed: u64,
}

impl OptResult {
    pub fn best_flat(&self) -> Vec<f64> {
        let mut x = self.best_theta.clone();
        if let Some(p) = &self.best_jastrow {
            x.extend(p.to_flat());
        }
        x
    }
}

fn start_point(spec: &CostSpec, cfg: &OptimizeConfig, index: usize) -> Result<Vec<f64>> {
    if index == 0 {
        if let Some(w) = &cfg.warm_start {
            if w.len() != spec.n_params() {
                return Err(Error::contract(format!(
                    "warm start has {} parameters, expected {}",
                    w.len(),
                    spec.n_params()
                )));
            }
            return Ok(w.clone());
        }
    }
    let mut r = rng::stream(cfg.seed, "optimize", index as u64);
    let mut x: Vec<f64> = if cfg.zero_start {
        vec![0.0; spec.n_theta()]
    } else {
        let u = Uniform::new(-PI, PI).map_err(|e| Error::invalid(e.to_string()))?;
        (0..spec.n_theta()).map(|_| u.sample(&mut r)).collect()
    };
    if spec.jastrow {
        let eps = if cfg.jastrow_zero_start { 0.0 } else { cfg.epsilon };
        x.extend(jastrow::sample_params_with(spec.n_qubits(), eps, &mut r)?.to_flat());
    }
    Ok(x)
}

struct RestartOutcome {
    record: RestartRecord,
    x: Option<Vec<f64>>,
}

fn run_restart(spec: &CostSpec, cfg: &OptimizeConfig, index: usize) -> RestartOutcome {
    let fail = |msg: String, evals| RestartOutcome {
        record: RestartRecord {
            index,
            energy: None,
            evals,
            converged: false,
            error: Some(msg),
        },
        x: None,
    };
    let x0 = match start_point(spec, cfg, index) {
        Ok(x) => x,
        Err(e) => return fail(e.to_string(), 0),
    };
    let mut first_error: Option<String> = None;
    let objective = |x: &[f64]| match cost(spec, x) {
        Ok(v) => v,
        Err(e) => {
            if first_error.is_none() {
                first_error = Some(e.to_string());
            }
            f64::NAN
        }
    };
    match optim::minimize(objective, &x0, &cfg.optimizer) {
        Ok(m) => RestartOutcome {
            record: RestartRecord {
                index,
                energy: Some(m.f),
                evals: m.evals,
                converged: m.converged,
                error: None,
            },
            x: Some(m.x),
        },
        Err(e) => fail(first_error.unwrap_or_else(|| e.to_string()), 1),
    }
}

/// Independent local minimizations; restart `i` draws from stream `i` of `seed`.
pub fn optimize(spec: &CostSpec, cfg: &OptimizeConfig) -> Result<OptResult> {
    spec.validate()?;
    cfg.optimizer.validate()?;
    if cfg.restarts == 0 {
        return Err(Error::invalid("restarts must be >= 1"));
    }
    let outcomes = par::map_indexed(cfg.exec, cfg.restarts, |i| run_restart(spec, cfg, i));
    let mut best: Option<(usize, f64)> = None;
    for o in &outcomes {
        if let Some(e) = o.record.energy {
            if best.is_none_or(|(_, b)| e < b) {
                best = Some((o.record.index, e));
            }
        }
    }
    let Some((bi, be)) = best else {
        let msg = outcomes
            .iter()
            .find_map(|o| o.record.error.clone())
            .unwrap_or_default();
        return Err(Error::Optimizer(format!("all {} restarts failed: {msg}", cfg.restarts)));
    };
    let x = outcomes[bi].x.clone().expect("successful restart has parameters");
    let (theta, p) = spec.split(&x)?;
    let best_hamiltonian_energy = energy(spec, theta, p.as_ref())?;
    let best_penalty = match spec.penalty {
        Some(_) => Some(penalty_expectation(spec, theta, p.as_ref())?),
        None => None,
    };
    let restarts: Vec<RestartRecord> = outcomes.into_iter().map(|o| o.record).collect();
    Ok(OptResult {
        best_energy: be,
        best_hamiltonian_energy,
        best_penalty,
        best_theta: theta.to_vec(),
        best_jastrow: p,
        best_restart: bi,
        n_restarts: cfg.restarts,
        restart_energies: restarts.iter().map(|r| r.energy).collect(),
        evaluations: restarts.iter().map(|r| r.evals).sum(),
        restarts,
        seed: cfg.seed,
    })
}

/// Normalized state reached at `x` (Jastrow-dressed when enabled).
pub fn final_state(spec: &CostSpec, x: &[f64]) -> Result<Statevector> {
    let (theta, p) = spec.split(x)?;
    let psi = spec.prepare(theta)?;
    match p {
        Some(p) => Statevector::from_amplitudes(dress(&psi, &p)?.0),
        None => Ok(psi),
    }
}

/// `(E_las − E_method) / (E_las − E_ref)`.
pub fn correlation_fraction(e_las: f64, e_method: f64, e_ref: f64) -> Result<f64> {
    if ![e_las, e_method, e_ref].iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("energies must be finite"));
    }
    if e_las == e_ref {
        return Err(Error::UndefinedFraction);
    }
    if e_las < e_ref {
        return Err(Error::contract(format!(
            "starting energy {e_las} lies below the reference {e_ref}"
        )));
    }
    Ok((e_las - e_method) / (e_las - e_ref))
}

/// Ascending eigenvalues of a Hermitian operator (dense; at most 12 qubits).
pub fn exact_spectrum(op: &PauliSum) -> Result<Vec<f64>> {
    const LIMIT: usize = 12;
    let n = op.n_qubits();
    if n > LIMIT {
        return Err(Error::Size {
            what: "dense diagonalization qubits",
            limit: LIMIT,
            got: n,
        });
    }
    if !op.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::contract("spectrum requires a Hermitian operator"));
    }
    let dim = 1usize << n;
    let dense = op.to_dense()?;
    let m = DMatrix::from_fn(dim, dim, |r, c| {
        let v = dense[r * dim + c];
        Complex::new(v.re, v.im)
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn exact_ground_energy(op: &PauliSum) -> Result<f64> {
    Ok(exact_spectrum(op)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_hea, HeaKind, HeaSpec};

    fn single_qubit_spec(h: &[(&str, f64)]) -> CostSpec {
        let mut c = Circuit::new(1);
        c.ry(0);
        CostSpec::new(
            PauliSum::from_labels(1, h).unwrap(),
            c,
            Statevector::zero(1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_qubit_energy_is_cosine() {
        let s = single_qubit_spec(&[("Z", 1.0)]);
        for t in [0.0, 0.4, 2.0, -1.3] {
            assert!((vqe_energy(&s, &[t]).unwrap() - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn jastrow_closed_form() {
        // RY(π/2)|0⟩ = |+⟩
        let s = single_qubit_spec(&[("X", 1.0)]).with_jastrow(true);
        let a = 0.3;
        let p = JastrowParams::new(vec![a], vec![]).unwrap();
        let e = nuvqe_energy(&s, &[PI / 2.0], &p).unwrap();
        assert!((e - (1.0 - a * a) / (1.0 + a * a)).abs() < 1e-14);
        let z = JastrowParams::zeros(1);
        assert!((nuvqe_energy(&s, &[0.7], &z).unwrap() - vqe_energy(&s, &[0.7]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_jastrow() {
        let s = single_qubit_spec(&[("Z", 1.0)]).with_jastrow(true);
        let p = JastrowParams::new(vec![1.0], vec![]).unwrap();
        assert!(matches!(
            nuvqe_energy(&s, &[0.0], &p),
            Err(Error::DegenerateJastrow { .. })
        ));
    }

    #[test]
    fn penalty_examples() {
        let z = PauliSum::from_labels(1, &[("Z", 1.0)]).unwrap();
        let s = single_qubit_spec(&[("X", 1.0)])
            .with_penalty(Penalty::new(z.clone(), 1.0))
            .unwrap();
        assert!(penalty_expectation(&s, &[0.0], None).unwrap().abs() < 1e-15);
        assert!((penalty_expectation(&s, &[PI], None).unwrap() - 4.0).abs() < 1e-12);
        let mut pen = Penalty::new(z, 1.0);
        pen.weight = 2.5;
        let s = single_qubit_spec(&[("X", 1.0)]).with_penalty(pen).unwrap();
        let c = penalized_cost(&s, &[PI], None).unwrap();
        assert!((c - (0.0 + 10.0)).abs() < 1e-12);
    }

    #[test]
    fn optimize_single_qubit() {
        let s = single_qubit_spec(&[("Z", 1.0)]);
        let cfg = OptimizeConfig {
            restarts: 4,
            seed: 11,
            ..Default::default()
        };
        let r = optimize(&s, &cfg).unwrap();
        assert!((r.best_energy + 1.0).abs() < 1e-8, "{r:?}");
        let min = r.restart_energies.iter().flatten().fold(f64::INFINITY, |a, b| a.min(*b));
        assert_eq!(min, r.best_energy);
    }

    #[test]
    fn optimize_two_qubit_toy() {
        let h = PauliSum::from_labels(2, &[("ZZ", 1.0), ("XI", 0.5)]).unwrap();
        let c = build_hea(&HeaSpec::new(HeaKind::RyLinear, 2, 2).unwrap()).unwrap();
        let s = CostSpec::new(h.clone(), c, Statevector::zero(2).unwrap()).unwrap();
        let cfg = OptimizeConfig {
            restarts: 6,
            seed: 5,
            ..Default::default()
        };
        let r = optimize(&s, &cfg).unwrap();
        let e0 = exact_ground_energy(&h).unwrap();
        assert!((r.best_energy - e0).abs() < 1e-6, "{} vs {e0}", r.best_energy);
    }

    #[test]
    fn deterministic_across_exec_modes() {
        let h = PauliSum::from_labels(2, &[("ZZ", 1.0), ("XI", 0.5), ("IY", 0.0), ("XX", 0.2)]).unwrap();
        let c = build_hea(&HeaSpec::new(HeaKind::RyLinear, 2, 1).unwrap()).unwrap();
        let s = CostSpec::new(h, c, Statevector::zero(2).unwrap()).unwrap().with_jastrow(true);
        let mut cfg = OptimizeConfig {
            restarts: 5,
            seed: 3,
            ..Default::default()
        };
        cfg.exec = Exec::Sequential;
        let a = optimize(&s, &cfg).unwrap();
        cfg.exec = Exec::Parallel;
        let b = optimize(&s, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(correlation_fraction(-1.0, -1.5, -1.5).unwrap(), 1.0);
        assert_eq!(correlation_fraction(-1.0, -1.0, -1.5).unwrap(), 0.0);
        assert_eq!(correlation_fraction(-1.0, -1.25, -1.5).unwrap(), 0.5);
        assert!(matches!(correlation_fraction(-1.0, -1.0, -1.0), Err(Error::UndefinedFraction)));
        assert!(matches!(correlation_fraction(-2.0, -1.0, -1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn spectrum_of_pauli() {
        let h = PauliSum::from_labels(2, &[("ZZ", 1.0), ("XI", 0.5)]).unwrap();
        let ev = exact_spectrum(&h).unwrap();
        let e = (1.0f64 + 0.25).sqrt();
        assert!((ev[0] + e).abs() < 1e-12 && (ev[3] - e).abs() < 1e-12);
    }
}
