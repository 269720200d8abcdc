//! Electronic-structure integrals and their Jordan–Wigner qubit operators.
//!
//! Two spin-orbital layouts are supported, see [`OrbitalOrdering`]. The
//! annihilation operator on spin orbital `j` is
//! `a_j = Z_0 ⋯ Z_{j-1} (X_j + iY_j)/2`, so `a_j` lowers qubit `j` from |1⟩ to
//! |0⟩ and an occupied spin orbital is a set bit.
//!
//! The Hamiltonian is
//! `H = e_core + Σ h1[p][q] a†_{pσ} a_{qσ} + ½ Σ (pq|rs) a†_{pσ} a†_{rτ} a_{sτ} a_{qσ}`
//! with chemist-notation two-electron integrals.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString, PauliSum, DEFAULT_DROP_TOL};

/// Default largest spin-orbital count accepted by the mappers.
pub const DEFAULT_MAX_JW_QUBITS: usize = 16;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    n_spatial: usize,
    n_electrons: usize,
    ms2: i64,
    e_core: f64,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl MolecularIntegrals {
    /// All-zero integrals for `n_spatial` orbitals.
    pub fn zeros(n_spatial: usize, n_electrons: usize) -> Result<Self> {
        if n_spatial == 0 {
            return Err(Error::invalid("need at least one spatial orbital"));
        }
        if n_electrons > 2 * n_spatial {
            return Err(Error::invalid(format!(
                "{n_electrons} electrons do not fit in {n_spatial} spatial orbitals"
            )));
        }
        Ok(MolecularIntegrals {
            n_spatial,
            n_electrons,
            ms2: (n_electrons % 2) as i64,
            e_core: 0.0,
            h1: vec![0.0; n_spatial * n_spatial],
            h2: vec![0.0; n_spatial.pow(4)],
        })
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    /// Twice the spin projection of the reference state.
    pub fn ms2(&self) -> i64 {
        self.ms2
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    pub fn set_e_core(&mut self, e: f64) {
        self.e_core = e;
    }

    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.n_spatial + q]
    }

    pub fn h2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.h2[((p * n + q) * n + r) * n + s]
    }

    /// Sets `h1[p][q]` and `h1[q][p]`.
    pub fn set_h1(&mut self, p: usize, q: usize, v: f64) {
        let n = self.n_spatial;
        self.h1[p * n + q] = v;
        self.h1[q * n + p] = v;
    }

    /// Sets `(pq|rs)` and its eight permutational images.
    pub fn set_h2(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let n = self.n_spatial;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.h2[((a * n + b) * n + c) * n + d] = v;
        }
    }

    /// Checks the one- and two-body permutational symmetries.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_spatial;
        for v in self.h1.iter().chain(&self.h2).chain(std::iter::once(&self.e_core)) {
            if !v.is_finite() {
                return Err(Error::invalid("non-finite integral"));
            }
        }
        for p in 0..n {
            for q in 0..n {
                if (self.h1(p, q) - self.h1(q, p)).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!("h1 not symmetric at ({p},{q})")));
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h2(p, q, r, s);
                        let images = [
                            self.h2(q, p, r, s),
                            self.h2(p, q, s, r),
                            self.h2(r, s, p, q),
                        ];
                        if images.iter().any(|w| (w - v).abs() > SYMMETRY_TOL) {
                            return Err(Error::invalid(format!(
                                "h2 lacks 8-fold symmetry at ({p}{q}|{r}{s})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes the integrals in FCIDUMP form, one line per unique nonzero value.
    pub fn write_fcidump<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n_spatial;
        writeln!(w, " &FCI NORB={},NELEC={},MS2={},", n, self.n_electrons, self.ms2)?;
        writeln!(w, "  ORBSYM={}", vec!["1"; n].join(","))?;
        writeln!(w, "  ISYM=1,")?;
        writeln!(w, " &END")?;
        for p in 0..n {
            for q in 0..=p {
                for r in 0..n {
                    for s in 0..=r {
                        if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                            continue;
                        }
                        let v = self.h2(p, q, r, s);
                        if v != 0.0 {
                            writeln!(w, " {} {} {} {} {}", v, p + 1, q + 1, r + 1, s + 1)?;
                        }
                    }
                }
            }
        }
        for p in 0..n {
            for q in 0..=p {
                let v = self.h1(p, q);
                if v != 0.0 {
                    writeln!(w, " {} {} {} 0 0", v, p + 1, q + 1)?;
                }
            }
        }
        writeln!(w, " {} 0 0 0 0", self.e_core)?;
        Ok(())
    }
}

fn header_value(header: &str, key: &str) -> Option<String> {
    let upper = header.to_ascii_uppercase();
    let bytes = upper.as_bytes();
    let mut from = 0;
    while let Some(pos) = upper[from..].find(key) {
        let start = from + pos;
        let before_ok = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        let rest = upper[start + key.len()..].trim_start();
        if before_ok && rest.starts_with('=') {
            let value: String = rest[1..]
                .trim_start()
                .chars()
                .take_while(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
                .collect();
            return Some(value);
        }
        from = start + key.len();
    }
    None
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    tok.replace(['D', 'd'], "E")
        .parse::<f64>()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("non-numeric value {tok:?}"),
        })
}

/// Reads an FCIDUMP stream: a `&FCI ... &END` (or `/`) namelist header with
/// `NORB` and `NELEC`, followed by `value p q r s` lines with 1-based indices.
pub fn parse_fcidump<R: Read>(reader: R) -> Result<MolecularIntegrals> {
    let reader = BufReader::new(reader);
    let mut header = String::new();
    let mut in_header = true;
    let mut ints: Option<MolecularIntegrals> = None;
    let mut saw_begin = false;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if in_header {
            if !saw_begin {
                if trimmed.is_empty() {
                    continue;
                }
                if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "expected &FCI namelist header".into(),
                    });
                }
                saw_begin = true;
            }
            header.push_str(trimmed);
            header.push(' ');
            let up = trimmed.to_ascii_uppercase();
            if up.ends_with("&END") || up == "/" || up.ends_with("/") || up.contains("&END") {
                in_header = false;
                let norb = header_value(&header, "NORB")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse {
                        line: lineno,
                        msg: "header lacks a valid NORB".into(),
                    })?;
                let nelec = header_value(&header, "NELEC")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse {
                        line: lineno,
                        msg: "header lacks a valid NELEC".into(),
                    })?;
                let mut m = MolecularIntegrals::zeros(norb, nelec).map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
                if let Some(ms2) = header_value(&header, "MS2").and_then(|v| v.parse::<i64>().ok()) {
                    m.ms2 = ms2;
                }
                ints = Some(m);
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let m = ints.as_mut().expect("header parsed");
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 5 fields, found {}", toks.len()),
            });
        }
        let v = parse_real(toks[0], lineno)?;
        let mut idx4 = [0usize; 4];
        for (k, t) in toks[1..].iter().enumerate() {
            let i = t.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("non-integer index {t:?}"),
            })?;
            if i > m.n_spatial {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("index {i} out of range (NORB = {})", m.n_spatial),
                });
            }
            idx4[k] = i;
        }
        match idx4 {
            [0, 0, 0, 0] => m.e_core = v,
            [p, q, 0, 0] if p > 0 && q > 0 => m.set_h1(p - 1, q - 1, v),
            // orbital energies, not needed
            [_, 0, 0, 0] => {}
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => {
                m.set_h2(p - 1, q - 1, r - 1, s - 1, v)
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unrecognised index pattern {idx4:?}"),
                })
            }
        }
    }
    let m = ints.ok_or_else(|| Error::Parse {
        line: 0,
        msg: if saw_begin {
            "unterminated namelist header".into()
        } else {
            "empty input".into()
        },
    })?;
    Ok(m)
}

/// How spatial orbitals and spins map onto qubit indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitalOrdering {
    /// Qubit `p` is spatial `p` spin-α; qubit `n + p` is spin-β.
    Blocked,
    /// Qubit `2p` is spatial `p` spin-α; qubit `2p + 1` is spin-β.
    #[default]
    Interleaved,
}

impl fmt::Display for OrbitalOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrbitalOrdering::Blocked => "blocked",
            OrbitalOrdering::Interleaved => "interleaved",
        })
    }
}

impl FromStr for OrbitalOrdering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blocked" => Ok(OrbitalOrdering::Blocked),
            "interleaved" => Ok(OrbitalOrdering::Interleaved),
            other => Err(Error::invalid(format!("unknown orbital ordering {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Alpha,
    Beta,
}

impl OrbitalOrdering {
    pub fn qubit(self, n_spatial: usize, p: usize, spin: Spin) -> usize {
        match (self, spin) {
            (OrbitalOrdering::Interleaved, Spin::Alpha) => 2 * p,
            (OrbitalOrdering::Interleaved, Spin::Beta) => 2 * p + 1,
            (OrbitalOrdering::Blocked, Spin::Alpha) => p,
            (OrbitalOrdering::Blocked, Spin::Beta) => n_spatial + p,
        }
    }
}

fn check_size(n_qubits: usize, limit: usize) -> Result<()> {
    if n_qubits > limit {
        Err(Error::Size {
            what: "spin-orbital qubits",
            limit,
            got: n_qubits,
        })
    } else if n_qubits == 0 {
        Err(Error::invalid("operator needs at least one qubit"))
    } else {
        Ok(())
    }
}

/// Jordan–Wigner image of `a_j` (or `a_j†` when `dagger`).
pub fn ladder(n_qubits: usize, j: usize, dagger: bool) -> Result<PauliSum> {
    if j >= n_qubits {
        return Err(Error::invalid(format!("mode {j} out of range")));
    }
    let zmask = (1u64 << j) - 1;
    let x = PauliString::from_masks(n_qubits, 1 << j, zmask)?;
    let y = PauliString::from_masks(n_qubits, 1 << j, zmask | (1 << j))?;
    let sign = if dagger { -0.5 } else { 0.5 };
    PauliSum::from_terms(
        n_qubits,
        [(x, Complex64::new(0.5, 0.0)), (y, Complex64::new(0.0, sign))],
    )
}

/// `a_i† a_j` as a simplified Pauli sum.
fn excitation(n_qubits: usize, i: usize, j: usize) -> Result<PauliSum> {
    ladder(n_qubits, i, true)?.mul(&ladder(n_qubits, j, false)?)
}

struct Accumulator {
    n_qubits: usize,
    acc: HashMap<PauliString, Complex64>,
}

impl Accumulator {
    fn new(n_qubits: usize) -> Self {
        Accumulator {
            n_qubits,
            acc: HashMap::new(),
        }
    }

    fn add(&mut self, s: &PauliSum, w: f64) {
        for t in s.terms() {
            *self.acc.entry(t.string).or_default() += t.coeff * w;
        }
    }

    fn add_product(&mut self, a: &PauliSum, b: &PauliSum, w: f64) {
        for ta in a.terms() {
            for tb in b.terms() {
                let (ph, p) = ta.string.mul_unchecked(&tb.string);
                *self.acc.entry(p).or_default() += ta.coeff * tb.coeff * ph.to_complex() * w;
            }
        }
    }

    fn finish(self) -> Result<PauliSum> {
        PauliSum::from_terms(self.n_qubits, self.acc)?.hermitian_part(DEFAULT_DROP_TOL, 1e-10)
    }
}

/// Jordan–Wigner qubit Hamiltonian on `2·n_spatial` qubits.
pub fn jw_map(ints: &MolecularIntegrals, ordering: OrbitalOrdering) -> Result<PauliSum> {
    jw_map_with_limit(ints, ordering, DEFAULT_MAX_JW_QUBITS)
}

pub fn jw_map_with_limit(
    ints: &MolecularIntegrals,
    ordering: OrbitalOrdering,
    max_qubits: usize,
) -> Result<PauliSum> {
    let n = ints.n_spatial();
    let nq = 2 * n;
    check_size(nq, max_qubits)?;
    ints.validate()?;

    let mode = |p: usize, s: Spin| ordering.qubit(n, p, s);
    let spins = [Spin::Alpha, Spin::Beta];

    // E[i][j] = a_i† a_j over spin orbitals
    let mut exc: Vec<Vec<PauliSum>> = Vec::with_capacity(nq);
    for i in 0..nq {
        let mut row = Vec::with_capacity(nq);
        for j in 0..nq {
            row.push(excitation(nq, i, j)?);
        }
        exc.push(row);
    }

    let mut acc = Accumulator::new(nq);
    acc.add(&PauliSum::identity(nq, ints.e_core())?, 1.0);
    for p in 0..n {
        for q in 0..n {
            let h = ints.h1(p, q);
            if h == 0.0 {
                continue;
            }
            for s in spins {
                acc.add(&exc[mode(p, s)][mode(q, s)], h);
            }
        }
    }
    // a†_i a†_k a_l a_j = E_ij E_kl - δ_jk E_il
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = ints.h2(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for sig in spins {
                        for tau in spins {
                            let (i, j, k, l) = (mode(p, sig), mode(q, sig), mode(r, tau), mode(s, tau));
                            acc.add_product(&exc[i][j], &exc[k][l], 0.5 * v);
                            if j == k {
                                acc.add(&exc[i][l], -0.5 * v);
                            }
                        }
                    }
                }
            }
        }
    }
    acc.finish()
}

/// Total spin `S² = S₋S₊ + S_z² + S_z` (ħ = 1) on `2·n_spatial` qubits.
pub fn build_s2_operator(n_spatial: usize, ordering: OrbitalOrdering) -> Result<PauliSum> {
    let nq = 2 * n_spatial;
    check_size(nq, DEFAULT_MAX_JW_QUBITS)?;
    let mode = |p: usize, s: Spin| ordering.qubit(n_spatial, p, s);

    let mut sp = Accumulator::new(nq);
    let mut sm = Accumulator::new(nq);
    let mut sz = Accumulator::new(nq);
    for p in 0..n_spatial {
        let (a, b) = (mode(p, Spin::Alpha), mode(p, Spin::Beta));
        sp.add(&excitation(nq, a, b)?, 1.0);
        sm.add(&excitation(nq, b, a)?, 1.0);
        sz.add(&excitation(nq, a, a)?, 0.5);
        sz.add(&excitation(nq, b, b)?, -0.5);
    }
    let to_sum = |a: Accumulator| -> Result<PauliSum> {
        PauliSum::from_terms(a.n_qubits, a.acc).map(|s| s.simplify(DEFAULT_DROP_TOL))
    };
    let (sp, sm, sz) = (to_sum(sp)?, to_sum(sm)?, to_sum(sz)?);

    let mut acc = Accumulator::new(nq);
    acc.add_product(&sm, &sp, 1.0);
    acc.add_product(&sz, &sz, 1.0);
    acc.add(&sz, 1.0);
    acc.finish()
}

/// `S_z = ½ Σ_p (n_pα − n_pβ)`.
pub fn build_sz_operator(n_spatial: usize, ordering: OrbitalOrdering) -> Result<PauliSum> {
    let nq = 2 * n_spatial;
    check_size(nq, DEFAULT_MAX_JW_QUBITS)?;
    let mut sz = Accumulator::new(nq);
    for p in 0..n_spatial {
        let (a, b) = (ordering.qubit(n_spatial, p, Spin::Alpha), ordering.qubit(n_spatial, p, Spin::Beta));
        sz.add(&excitation(nq, a, a)?, 0.5);
        sz.add(&excitation(nq, b, b)?, -0.5);
    }
    sz.finish()
}

/// `N = Σ_i (I − Z_i)/2`.
pub fn build_number_operator(n_qubits: usize) -> Result<PauliSum> {
    if n_qubits == 0 {
        return Err(Error::invalid("number operator needs at least one qubit"));
    }
    let mut s = PauliSum::identity(n_qubits, n_qubits as f64 / 2.0)?;
    for q in 0..n_qubits {
        s.push(PauliString::single(n_qubits, q, Letter::Z)?, Complex64::new(-0.5, 0.0))?;
    }
    Ok(s.simplify(DEFAULT_DROP_TOL))
}

/// Occupation mask of the lowest-index determinant with the reference's
/// electron count and spin projection.
pub fn hartree_fock_occupation(ints: &MolecularIntegrals, ordering: OrbitalOrdering) -> Result<u64> {
    determinant_occupation(ints.n_spatial(), ints.n_electrons(), ints.ms2(), ordering)
}

/// Occupation mask filling the lowest `(N + 2S_z)/2` alpha and `(N − 2S_z)/2`
/// beta orbitals.
pub fn determinant_occupation(n_spatial: usize, n_electrons: usize, ms2: i64, ordering: OrbitalOrdering) -> Result<u64> {
    let n = n_spatial;
    let ne = n_electrons as i64;
    if (ne + ms2) % 2 != 0 || ms2.abs() > ne {
        return Err(Error::invalid(format!("inconsistent NELEC={ne}, MS2={ms2}")));
    }
    let n_alpha = ((ne + ms2) / 2) as usize;
    let n_beta = ((ne - ms2) / 2) as usize;
    if n_alpha > n || n_beta > n {
        return Err(Error::invalid("too many electrons of one spin"));
    }
    let mut mask = 0u64;
    for p in 0..n_alpha {
        mask |= 1 << ordering.qubit(n, p, Spin::Alpha);
    }
    for p in 0..n_beta {
        mask |= 1 << ordering.qubit(n, p, Spin::Beta);
    }
    Ok(mask)
}
