//! Pauli strings and weighted Pauli sums.
//!
//! A [`PauliString`] stores its letters symplectically as two bitmasks: bit `q`
//! of `x` is set for X or Y on qubit `q`, bit `q` of `z` for Z or Y. Qubit 0 is
//! the least significant bit everywhere in the crate.
//!
//! Text labels are written with the highest qubit index leftmost, so `"XI"` is
//! X on qubit 1 and identity on qubit 0. The same order is used by the JSON
//! file format ([`PauliSumFile`]) and by basis-state bitstrings.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register a single string can address.
pub const MAX_PAULI_QUBITS: usize = 64;

/// Default magnitude below which [`PauliSum::simplify`] drops a term.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// A power of `i`: the phase picked up when multiplying two Pauli strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Spreads the 64 bits of `v` to the even bit positions of a u128.
fn spread(v: u64) -> u128 {
    let mut x = v as u128;
    x = (x | (x << 32)) & 0x0000_0000_FFFF_FFFF_0000_0000_FFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF_0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF_00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F_0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333_3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555_5555_5555_5555_5555;
    x
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::from_masks(n_qubits, 0, 0)
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("Pauli string needs at least one qubit"));
        }
        if n_qubits > MAX_PAULI_QUBITS {
            return Err(Error::Size {
                what: "Pauli string qubits",
                limit: MAX_PAULI_QUBITS,
                got: n_qubits,
            });
        }
        let m = mask(n_qubits);
        if x & !m != 0 || z & !m != 0 {
            return Err(Error::invalid("Pauli mask has bits beyond n_qubits"));
        }
        Ok(PauliString {
            n: n_qubits as u8,
            x,
            z,
        })
    }

    /// Builds a string from letters indexed by qubit (`letters[0]` is qubit 0).
    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, l) in letters.iter().enumerate().take(MAX_PAULI_QUBITS) {
            let (xb, zb) = l.bits();
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
        }
        Self::from_masks(letters.len(), x, z)
    }

    /// A single non-identity letter on qubit `q`.
    pub fn single(n_qubits: usize, q: usize, letter: Letter) -> Result<Self> {
        if q >= n_qubits {
            return Err(Error::invalid(format!("qubit {q} out of range for {n_qubits} qubits")));
        }
        let (xb, zb) = letter.bits();
        Self::from_masks(n_qubits, (xb as u64) << q, (zb as u64) << q)
    }

    /// Parses a label such as `"XIZ"` (leftmost = highest qubit index).
    pub fn parse(label: &str) -> Result<Self> {
        let mut letters = Vec::with_capacity(label.len());
        for c in label.chars().rev() {
            letters.push(
                Letter::from_char(c)
                    .ok_or_else(|| Error::invalid(format!("bad Pauli letter {c:?} in {label:?}")))?,
            );
        }
        Self::from_letters(&letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n_qubits()).map(|q| self.letter(q)).collect()
    }

    /// Label with the highest qubit leftmost.
    pub fn label(&self) -> String {
        (0..self.n_qubits()).rev().map(|q| self.letter(q).as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the string contains only I and Z.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    /// Number of Y letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Sort key: two bits per qubit (I<X<Y<Z), highest qubit most significant.
    fn order_key(&self) -> u128 {
        (spread(self.z) << 1) | spread(self.x ^ self.z)
    }

    /// Product without the dimension check.
    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> (Phase, PauliString) {
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let (xa, ya, za) = (x1 & !z1, x1 & z1, !x1 & z1);
        let (xb, yb, zb) = (x2 & !z2, x2 & z2, !x2 & z2);
        // cyclic pairs XY, YZ, ZX give +i; anti-cyclic give -i
        let plus = (xa & yb) | (ya & zb) | (za & xb);
        let minus = (xa & zb) | (ya & xb) | (za & yb);
        let k = plus.count_ones() as i64 - minus.count_ones() as i64;
        (
            Phase::from_exponent(k),
            PauliString {
                n: self.n,
                x: x1 ^ x2,
                z: z1 ^ z2,
            },
        )
    }

    pub(crate) fn qwc_unchecked(&self, other: &PauliString) -> bool {
        let s1 = self.support();
        let s2 = other.support();
        let both = s1 & s2;
        (self.x ^ other.x) & both == 0 && (self.z ^ other.z) & both == 0
    }

    pub(crate) fn commutes_unchecked(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Action on a computational basis index: `P|k> = phase * |k ^ x>`.
    #[inline]
    pub fn apply_to_index(&self, k: usize) -> (usize, Complex64) {
        let sign = ((k as u64 & self.z).count_ones() & 1) as u8 * 2;
        let ph = Phase((self.y_count() as u8 + sign) % 4);
        (k ^ self.x as usize, ph.to_complex())
    }

    /// Eigenvalue of a diagonal string on basis index `k`.
    #[inline]
    pub fn diagonal_value(&self, k: usize) -> f64 {
        debug_assert!(self.is_diagonal());
        if (k as u64 & self.z).count_ones() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({})", self.label())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.order_key().cmp(&other.order_key()))
    }
}

/// Operator product `a·b = phase · product`.
pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<(Phase, PauliString)> {
    Error::check_dim(a.n_qubits(), b.n_qubits())?;
    Ok(a.mul_unchecked(b))
}

/// Letters commute index by index (equal, or at least one identity).
pub fn qubit_wise_commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    Error::check_dim(a.n_qubits(), b.n_qubits())?;
    Ok(a.qwc_unchecked(b))
}

/// The strings commute as operators: an even number of anticommuting sites.
pub fn fully_commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    Error::check_dim(a.n_qubits(), b.n_qubits())?;
    Ok(a.commutes_unchecked(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedTerm {
    pub string: PauliString,
    pub coeff: Complex64,
}

/// A weighted sum of Pauli strings on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<WeightedTerm>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Result<Self> {
        let mut s = Self::zero(n_qubits);
        s.push(PauliString::identity(n_qubits)?, Complex64::new(coeff, 0.0))?;
        Ok(s)
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut s = Self::zero(n_qubits);
        for (p, c) in terms {
            s.push(p, c)?;
        }
        Ok(s)
    }

    /// Convenience constructor from `(label, real coefficient)` pairs.
    pub fn from_labels(n_qubits: usize, terms: &[(&str, f64)]) -> Result<Self> {
        let mut s = Self::zero(n_qubits);
        for (label, c) in terms {
            s.push(PauliString::parse(label)?, Complex64::new(*c, 0.0))?;
        }
        Ok(s)
    }

    pub fn push(&mut self, string: PauliString, coeff: Complex64) -> Result<()> {
        Error::check_dim(self.n_qubits, string.n_qubits())?;
        if !coeff.re.is_finite() || !coeff.im.is_finite() {
            return Err(Error::invalid(format!("non-finite coefficient on {string}")));
        }
        self.terms.push(WeightedTerm { string, coeff });
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[WeightedTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Combines equal strings, drops terms with `|c| <= drop_tol` and sorts
    /// canonically.
    pub fn simplify(&self, drop_tol: f64) -> PauliSum {
        let mut acc: HashMap<PauliString, Complex64> = HashMap::with_capacity(self.terms.len());
        for t in &self.terms {
            *acc.entry(t.string).or_insert(Complex64::new(0.0, 0.0)) += t.coeff;
        }
        Self::from_accumulator(self.n_qubits, acc, drop_tol)
    }

    fn from_accumulator(n_qubits: usize, acc: HashMap<PauliString, Complex64>, drop_tol: f64) -> Self {
        let mut terms: Vec<WeightedTerm> = acc
            .into_iter()
            .filter(|(_, c)| c.norm() > drop_tol)
            .map(|(string, coeff)| WeightedTerm { string, coeff })
            .collect();
        terms.sort_by_key(|t| t.string);
        PauliSum { n_qubits, terms }
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| WeightedTerm {
                    string: t.string,
                    coeff: t.coeff * factor,
                })
                .collect(),
        }
    }

    /// Unsimplified concatenation of two sums.
    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        Error::check_dim(self.n_qubits, other.n_qubits)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms,
        })
    }

    /// Simplified product `self · other` with the default drop tolerance.
    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        sum_mul(self, other, DEFAULT_DROP_TOL)
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| WeightedTerm {
                    string: t.string,
                    coeff: t.coeff.conj(),
                })
                .collect(),
        }
    }

    /// True if, after combining equal strings, every coefficient is real
    /// within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.simplify(0.0).terms.iter().all(|t| t.coeff.im.abs() <= tol)
    }

    /// Simplifies and zeroes imaginary parts no larger than `tol`; errors if a
    /// larger imaginary part remains.
    pub fn hermitian_part(&self, drop_tol: f64, tol: f64) -> Result<PauliSum> {
        let mut s = self.simplify(drop_tol);
        for t in &mut s.terms {
            if t.coeff.im.abs() > tol {
                return Err(Error::contract(format!(
                    "operator is not Hermitian: term {} has coefficient {}",
                    t.string, t.coeff
                )));
            }
            t.coeff.im = 0.0;
        }
        s.terms.retain(|t| t.coeff.re.abs() > drop_tol);
        Ok(s)
    }

    /// Coefficient of the identity string (zero if absent).
    pub fn identity_coeff(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.string.is_identity())
            .map(|t| t.coeff)
            .sum()
    }

    /// Dense row-major `2^n × 2^n` matrix. Intended for small registers.
    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        if self.n_qubits > 14 {
            return Err(Error::Size {
                what: "dense matrix qubits",
                limit: 14,
                got: self.n_qubits,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for t in &self.terms {
            for col in 0..dim {
                let (row, ph) = t.string.apply_to_index(col);
                m[row * dim + col] += t.coeff * ph;
            }
        }
        Ok(m)
    }

    pub fn to_file(&self) -> PauliSumFile {
        PauliSumFile {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| TermRecord {
                    pauli: t.string.label(),
                    re: t.coeff.re,
                    im: t.coeff.im,
                })
                .collect(),
            metadata: None,
        }
    }

    pub fn from_file(file: &PauliSumFile) -> Result<PauliSum> {
        let mut s = PauliSum::zero(file.n_qubits);
        for rec in &file.terms {
            let p = PauliString::parse(&rec.pauli)?;
            if p.n_qubits() != file.n_qubits {
                return Err(Error::invalid(format!(
                    "term {:?} has {} letters, file declares {} qubits",
                    rec.pauli,
                    p.n_qubits(),
                    file.n_qubits
                )));
            }
            s.push(p, Complex64::new(rec.re, rec.im))?;
        }
        Ok(s)
    }

    pub fn read_json<R: Read>(reader: R) -> Result<PauliSum> {
        let file: PauliSumFile = serde_json::from_reader(reader)?;
        Self::from_file(&file)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.to_file())?;
        Ok(())
    }
}

/// Distributive product of two sums, simplified with `drop_tol`.
pub fn sum_mul(a: &PauliSum, b: &PauliSum, drop_tol: f64) -> Result<PauliSum> {
    Error::check_dim(a.n_qubits, b.n_qubits)?;
    let mut acc: HashMap<PauliString, Complex64> =
        HashMap::with_capacity(a.terms.len().saturating_mul(b.terms.len()).min(1 << 20));
    for ta in &a.terms {
        for tb in &b.terms {
            let (ph, p) = ta.string.mul_unchecked(&tb.string);
            *acc.entry(p).or_insert(Complex64::new(0.0, 0.0)) += ta.coeff * tb.coeff * ph.to_complex();
        }
    }
    Ok(PauliSum::from_accumulator(a.n_qubits, acc, drop_tol))
}

/// Combines equal strings and drops `|c| <= drop_tol`; canonical order.
pub fn simplify(a: &PauliSum, drop_tol: f64) -> PauliSum {
    a.simplify(drop_tol)
}

/// One record of the Pauli-sum JSON format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    /// Letters, highest qubit index leftmost.
    pub pauli: String,
    pub re: f64,
    pub im: f64,
}

/// On-disk Pauli sum: `{"n_qubits", "terms": [{"pauli","re","im"}], "metadata"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSumFile {
    pub n_qubits: usize,
    pub terms: Vec<TermRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    #[test]
    fn label_order_is_highest_qubit_first() {
        let s = p("XIZ");
        assert_eq!(s.letter(0), Letter::Z);
        assert_eq!(s.letter(1), Letter::I);
        assert_eq!(s.letter(2), Letter::X);
        assert_eq!(s.label(), "XIZ");
    }

    #[test]
    fn mul_examples() {
        let (ph, prod) = pauli_mul(&p("X"), &p("Y")).unwrap();
        assert_eq!(ph, Phase::I);
        assert_eq!(prod, p("Z"));

        let (ph, prod) = pauli_mul(&p("IIII"), &p("XYZI")).unwrap();
        assert_eq!(ph, Phase::ONE);
        assert_eq!(prod, p("XYZI"));

        let (ph, prod) = pauli_mul(&p("ZZ"), &p("ZI")).unwrap();
        assert_eq!(ph, Phase::ONE);
        assert_eq!(prod, p("IZ"));

        let (ph, _) = pauli_mul(&p("Y"), &p("X")).unwrap();
        assert_eq!(ph, Phase::MINUS_I);
        let (ph, prod) = pauli_mul(&p("Y"), &p("Y")).unwrap();
        assert_eq!((ph, prod), (Phase::ONE, p("I")));
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(pauli_mul(&p("X"), &p("XX")), Err(Error::Dimension { .. })));
        assert!(qubit_wise_commutes(&p("X"), &p("XX")).is_err());
        assert!(fully_commutes(&p("X"), &p("XX")).is_err());
        let a = PauliSum::from_labels(1, &[("X", 1.0)]).unwrap();
        let b = PauliSum::from_labels(2, &[("XX", 1.0)]).unwrap();
        assert!(sum_mul(&a, &b, 0.0).is_err());
    }

    #[test]
    fn commutation_examples() {
        assert!(qubit_wise_commutes(&p("XI"), &p("XZ")).unwrap());
        assert!(!qubit_wise_commutes(&p("XX"), &p("ZZ")).unwrap());
        assert!(qubit_wise_commutes(&p("XYZ"), &p("XYZ")).unwrap());
        assert!(fully_commutes(&p("XX"), &p("ZZ")).unwrap());
        assert!(!fully_commutes(&p("XI"), &p("ZI")).unwrap());
    }

    #[test]
    fn qwc_implies_fc_exhaustively_up_to_three_qubits() {
        for n in 1..=3usize {
            let all: Vec<PauliString> = (0..1u64 << n)
                .flat_map(|x| (0..1u64 << n).map(move |z| (x, z)))
                .map(|(x, z)| PauliString::from_masks(n, x, z).unwrap())
                .collect();
            for a in &all {
                for b in &all {
                    if a.qwc_unchecked(b) {
                        assert!(a.commutes_unchecked(b), "{a} {b}");
                    }
                    let (pab, sab) = a.mul_unchecked(b);
                    let (pba, sba) = b.mul_unchecked(a);
                    assert_eq!(sab, sba);
                    assert_eq!(pab == pba, a.commutes_unchecked(b));
                }
            }
        }
    }

    #[test]
    fn sum_mul_identity_and_square() {
        let h = PauliSum::from_labels(2, &[("XZ", 0.3), ("ZZ", -1.2), ("IY", 0.5)]).unwrap();
        let id = PauliSum::identity(2, 1.0).unwrap();
        assert_eq!(sum_mul(&id, &h, 0.0).unwrap(), h.simplify(0.0));

        let a = 0.37;
        let j = PauliSum::from_labels(1, &[("I", 1.0), ("Z", -a)]).unwrap();
        let sq = sum_mul(&j, &j, 0.0).unwrap();
        assert_eq!(sq.len(), 2);
        assert_eq!(sq.terms()[0].string, p("I"));
        assert!((sq.terms()[0].coeff.re - (1.0 + a * a)).abs() < 1e-15);
        assert!((sq.terms()[1].coeff.re + 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn simplify_examples() {
        let s = PauliSum::from_labels(1, &[("X", 1.0), ("X", -1.0)]).unwrap();
        assert!(s.simplify(DEFAULT_DROP_TOL).is_empty());
        let s = PauliSum::from_labels(1, &[("Z", 0.5), ("Z", 0.5)]).unwrap();
        let t = s.simplify(DEFAULT_DROP_TOL);
        assert_eq!(t.len(), 1);
        assert_eq!(t.terms()[0].coeff, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn canonical_order_is_lexicographic_on_label() {
        let s = PauliSum::from_labels(2, &[("ZI", 1.0), ("IZ", 1.0), ("XY", 1.0), ("II", 1.0), ("YX", 1.0)])
            .unwrap()
            .simplify(0.0);
        let labels: Vec<String> = s.terms().iter().map(|t| t.string.label()).collect();
        let mut sorted = labels.clone();
        // I < X < Y < Z matches ASCII order of the letters
        sorted.sort();
        assert_eq!(labels, sorted);
    }

    #[test]
    fn non_finite_coefficients_rejected() {
        let mut s = PauliSum::zero(1);
        assert!(s.push(p("X"), Complex64::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let h = PauliSum::from_terms(
            3,
            vec![
                (p("XIZ"), Complex64::new(0.25, 0.0)),
                (p("YYI"), Complex64::new(-1.5, 1e-3)),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        h.write_json(&mut buf).unwrap();
        let back = PauliSum::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn file_letter_count_must_match() {
        let f = PauliSumFile {
            n_qubits: 3,
            terms: vec![TermRecord {
                pauli: "XX".into(),
                re: 1.0,
                im: 0.0,
            }],
            metadata: None,
        };
        assert!(PauliSum::from_file(&f).is_err());
    }
}
