//! Dense-matrix reference implementations used as independent oracles.
//!
//! Everything here is built from explicit Kronecker products and basis-index
//! arithmetic, never from the library's own dense conversion.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use nuvqe::ansatz::{Circuit, Gate};
use nuvqe::fermion::{MolecularIntegrals, OrbitalOrdering, Spin};
use nuvqe::pauli::{PauliString, PauliSum};
use nuvqe::statevector::Statevector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn single(letter: char) -> Mat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let m = match letter {
        'I' => [o, z, z, o],
        'X' => [z, o, o, z],
        'Y' => [z, -i, i, z],
        'Z' => [o, z, z, -o],
        _ => panic!("bad letter {letter}"),
    };
    DMatrix::from_row_slice(2, 2, &m)
}

/// Matrix of a label whose leftmost letter acts on the highest qubit.
pub fn label_matrix(label: &str) -> Mat {
    label
        .chars()
        .fold(DMatrix::identity(1, 1), |acc: Mat, ch| acc.kronecker(&single(ch)))
}

pub fn string_matrix(p: &PauliString) -> Mat {
    label_matrix(&p.label())
}

pub fn sum_matrix(op: &PauliSum) -> Mat {
    let d = 1usize << op.n_qubits();
    let mut m = Mat::zeros(d, d);
    for t in op.terms() {
        m += string_matrix(&t.string) * t.coeff;
    }
    m
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vec_of(s: &Statevector) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(s.amplitudes().len(), 1, s.amplitudes())
}

pub fn quad(m: &Mat, s: &Statevector) -> Complex64 {
    let v = vec_of(s);
    (v.adjoint() * m * &v)[(0, 0)]
}

pub fn random_label(r: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| ['I', 'X', 'Y', 'Z'][r.random_range(0..4)]).collect()
}

pub fn random_string(r: &mut impl Rng, n: usize) -> PauliString {
    PauliString::parse(&random_label(r, n)).unwrap()
}

pub fn random_sum(r: &mut impl Rng, n: usize, terms: usize, hermitian: bool) -> PauliSum {
    let mut s = PauliSum::zero(n);
    for _ in 0..terms {
        let re = r.random_range(-1.0..1.0);
        let im = if hermitian { 0.0 } else { r.random_range(-1.0..1.0) };
        s.push(random_string(r, n), c(re, im)).unwrap();
    }
    s
}

pub fn random_state(r: &mut impl Rng, n: usize) -> Statevector {
    let amps = (0..1usize << n)
        .map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    Statevector::from_amplitudes(amps).unwrap()
}

pub fn random_real_state(r: &mut impl Rng, n: usize) -> Statevector {
    let amps = (0..1usize << n).map(|_| c(r.random_range(-1.0..1.0), 0.0)).collect();
    Statevector::from_amplitudes(amps).unwrap()
}

fn ry_matrix(theta: f64) -> Mat {
    let (s, co) = (theta / 2.0).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// Embeds a one-qubit matrix on qubit `q` of `n`.
fn embed(n: usize, q: usize, g: &Mat) -> Mat {
    let mut m: Mat = DMatrix::identity(1, 1);
    for k in (0..n).rev() {
        m = if k == q { m.kronecker(g) } else { m.kronecker(&single('I')) };
    }
    m
}

fn cnot_matrix(n: usize, control: usize, target: usize) -> Mat {
    let d = 1usize << n;
    let mut m = Mat::zeros(d, d);
    for k in 0..d {
        let out = if k >> control & 1 == 1 { k ^ (1 << target) } else { k };
        m[(out, k)] = c(1.0, 0.0);
    }
    m
}

pub fn circuit_unitary(circ: &Circuit, params: &[f64]) -> Mat {
    let n = circ.n_qubits;
    let mut u: Mat = DMatrix::identity(1 << n, 1 << n);
    for g in &circ.gates {
        let step = match *g {
            Gate::Ry { target, slot } => embed(n, target, &ry_matrix(params[slot])),
            Gate::Cnot { control, target } => cnot_matrix(n, control, target),
            Gate::X { target } => embed(n, target, &single('X')),
        };
        u = step * u;
    }
    u
}

/// Annihilation operator on mode `j` from occupation-number arithmetic.
pub fn annihilator(n_modes: usize, j: usize) -> Mat {
    let d = 1usize << n_modes;
    let mut m = Mat::zeros(d, d);
    for k in 0..d {
        if k >> j & 1 == 1 {
            let sign = if (k & ((1 << j) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            m[(k ^ (1 << j), k)] = c(sign, 0.0);
        }
    }
    m
}

/// Second-quantized Hamiltonian assembled directly from ladder matrices.
pub fn fermionic_hamiltonian(ints: &MolecularIntegrals, ordering: OrbitalOrdering) -> Mat {
    let ns = ints.n_spatial();
    let nq = 2 * ns;
    let d = 1usize << nq;
    let a: Vec<Mat> = (0..nq).map(|j| annihilator(nq, j)).collect();
    let ad: Vec<Mat> = a.iter().map(|m| m.adjoint()).collect();
    let mode = |p: usize, s: Spin| ordering.qubit(ns, p, s);
    let spins = [Spin::Alpha, Spin::Beta];
    let mut h = Mat::identity(d, d) * c(ints.e_core(), 0.0);
    for p in 0..ns {
        for q in 0..ns {
            let v = ints.h1(p, q);
            if v == 0.0 {
                continue;
            }
            for &s in &spins {
                h += &ad[mode(p, s)] * &a[mode(q, s)] * c(v, 0.0);
            }
        }
    }
    for p in 0..ns {
        for q in 0..ns {
            for r in 0..ns {
                for s in 0..ns {
                    let v = ints.h2(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for &sg in &spins {
                        for &tau in &spins {
                            h += &ad[mode(p, sg)] * &ad[mode(r, tau)] * &a[mode(s, tau)] * &a[mode(q, sg)]
                                * c(0.5 * v, 0.0);
                        }
                    }
                }
            }
        }
    }
    h
}

/// Total spin S² = S₋S₊ + S_z² + S_z from ladder matrices.
pub fn fermionic_s2(n_spatial: usize, ordering: OrbitalOrdering) -> Mat {
    let nq = 2 * n_spatial;
    let d = 1usize << nq;
    let a: Vec<Mat> = (0..nq).map(|j| annihilator(nq, j)).collect();
    let mode = |p: usize, s: Spin| ordering.qubit(n_spatial, p, s);
    let mut sp = Mat::zeros(d, d);
    let mut sz = Mat::zeros(d, d);
    for p in 0..n_spatial {
        let (al, be) = (mode(p, Spin::Alpha), mode(p, Spin::Beta));
        sp += a[al].adjoint() * &a[be];
        sz += (a[al].adjoint() * &a[al] - a[be].adjoint() * &a[be]) * c(0.5, 0.0);
    }
    let sm = sp.adjoint();
    &sm * &sp + &sz * &sz + sz
}

/// Random integrals with full 8-fold symmetry.
pub fn random_integrals(r: &mut impl Rng, n_spatial: usize, n_electrons: usize) -> MolecularIntegrals {
    let mut ints = MolecularIntegrals::zeros(n_spatial, n_electrons).unwrap();
    ints.set_e_core(r.random_range(-1.0..1.0));
    for p in 0..n_spatial {
        for q in 0..=p {
            ints.set_h1(p, q, r.random_range(-1.0..1.0));
        }
    }
    for p in 0..n_spatial {
        for q in 0..n_spatial {
            for rr in 0..n_spatial {
                for s in 0..n_spatial {
                    ints.set_h2(p, q, rr, s, r.random_range(-0.5..0.5));
                }
            }
        }
    }
    ints
}

pub fn hermitian_eigenvalues(m: &Mat) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Smallest eigenvalue of the Hamiltonian restricted to a fixed particle number.
pub fn sector_ground(h: &Mat, n_electrons: usize) -> f64 {
    let idx: Vec<usize> = (0..h.nrows()).filter(|k| k.count_ones() as usize == n_electrons).collect();
    let sub = Mat::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
    hermitian_eigenvalues(&sub)[0]
}

/// Hand-computed deterministic apportionments: (strategy, weights, s_tot, allocation).
///
/// UDS: floor(s/N) each, remainder one by one to the largest weights (lower
/// index on ties). WDS: floors of s·w/M, remainder by largest fractional part
/// (then larger weight, then lower index).
pub const APPORTIONMENT_CASES: [(&str, &[f64], u64, &[u64]); 10] = [
    ("UDS", &[1.0, 1.0, 1.0, 1.0], 100, &[25, 25, 25, 25]),
    ("WDS", &[3.0, 1.0], 100, &[75, 25]),
    ("UDS", &[0.5, 2.0, 1.0], 10, &[3, 4, 3]),
    ("UDS", &[1.0, 1.0, 1.0], 11, &[4, 4, 3]),
    ("UDS", &[0.1, 0.9, 0.9, 0.1], 6, &[1, 2, 2, 1]),
    ("WDS", &[1.0, 1.0, 1.0], 10, &[4, 3, 3]),
    ("WDS", &[5.0, 3.0, 2.0], 7, &[4, 2, 1]),
    ("WDS", &[0.2, 0.3, 0.5], 1, &[0, 0, 1]),
    ("WDS", &[2.0, 2.0, 1.0], 4, &[2, 1, 1]),
    ("WDS", &[1.0, 0.0, 3.0], 9, &[2, 0, 7]),
];

/// Two-qubit operator and entangled state shared by the variance studies.
pub fn variance_fixture() -> (PauliSum, Statevector) {
    let op = PauliSum::from_labels(
        2,
        &[
            ("ZZ", 0.9),
            ("XI", 0.5),
            ("IX", -0.4),
            ("XX", 0.3),
            ("YY", 0.2),
            ("ZI", -0.15),
            ("IZ", 0.1),
            ("XY", 0.05),
            ("YZ", 0.02),
        ],
    )
    .unwrap();
    let mut circ = Circuit::new(2);
    circ.ry(0).ry(1).cnot(0, 1).ry(0).ry(1);
    let state = Statevector::zero(2).unwrap().apply_circuit(&circ, &[0.7, -1.1, 0.4, 0.9]).unwrap();
    (op, state)
}
