//! Commuting-group partitioning, shot allocation and sampled estimation.
//!
//! Grouping is greedy first-fit over terms sorted by descending `|c|` (ties in
//! canonical string order). Sampling treats identity terms as a constant
//! offset: only non-identity terms (or their QWC groups) are measurement
//! units and receive shots.
//!
//! For a unit `g` with observable `G_g = Σ c_i P_i`, shot count `s_g` and
//! weight `W_g`, the estimators are
//!
//! * UDS, WDS: `Σ_g mean(G_g)`;
//! * WRS: `Σ_g (M s_g / s_tot) · mean(G_g) / W_g` with `M = Σ W_g`.
//!
//! Model variances (`V_g = Var(G_g)` from exact moments):
//!
//! * UDS: `(N / s_tot) Σ V_g`;
//! * WDS: `(M / s_tot) Σ V_g / W_g`;
//! * WRS: the WDS value plus `(M / s_tot) Σ ⟨G_g⟩² / W_g − ⟨O⟩² / s_tot`.
//!
//! In term mode `V_g = c_i² σ_i²` and `W_g = |c_i|`. A unit that receives zero
//! shots contributes nothing to the estimate and is listed as starved.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::pauli::{Letter, PauliString, PauliSum, WeightedTerm, DEFAULT_DROP_TOL};
use crate::rng::{self, Rng};
use crate::statevector::Statevector;
use crate::vqe::DENOM_TOL;

const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Commutation {
    Qwc,
    Fc,
}

/// Measurement units used for sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    /// One unit per non-identity term.
    #[default]
    None,
    /// One unit per qubit-wise commuting group.
    Qwc,
}

impl FromStr for Grouping {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Grouping::None),
            "qwc" => Ok(Grouping::Qwc),
            "fc" => Err(Error::invalid("FC groups are counted but cannot be sampled")),
            other => Err(Error::invalid(format!("unknown grouping {other:?}"))),
        }
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grouping::None => "none",
            Grouping::Qwc => "qwc",
        })
    }
}

/// How a group's allocation weight is derived from its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupWeight {
    #[default]
    Sum,
    Max,
}

impl FromStr for GroupWeight {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(GroupWeight::Sum),
            "max" => Ok(GroupWeight::Max),
            other => Err(Error::invalid(format!("unknown group weight {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    pub members: Vec<WeightedTerm>,
    pub kind: Commutation,
    /// Shared per-qubit basis (QWC groups only).
    pub basis: Option<Vec<Letter>>,
    /// `Σ |c_i|` over members.
    pub weight: f64,
}

impl MeasurementGroup {
    pub fn single(string: PauliString, coeff: f64) -> Self {
        MeasurementGroup {
            members: vec![WeightedTerm {
                string,
                coeff: coeff.into(),
            }],
            kind: Commutation::Qwc,
            basis: Some(string.letters()),
            weight: coeff.abs(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.members.first().map_or(0, |t| t.string.n_qubits())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.members.iter().fold(0.0, |m, t| m.max(t.coeff.norm()))
    }

    pub fn allocation_weight(&self, rule: GroupWeight) -> f64 {
        match rule {
            GroupWeight::Sum => self.weight,
            GroupWeight::Max => self.max_abs_coeff(),
        }
    }

    /// Shared measurement basis; fails unless every pair is qubit-wise commuting.
    pub fn qwc_basis(&self) -> Result<Vec<Letter>> {
        let n = self.n_qubits();
        let mut basis = vec![Letter::I; n];
        for t in &self.members {
            for (q, b) in basis.iter_mut().enumerate() {
                let l = t.string.letter(q);
                if l == Letter::I {
                    continue;
                }
                if *b == Letter::I {
                    *b = l;
                } else if *b != l {
                    return Err(Error::contract(
                        "group is not qubit-wise commuting; only QWC groups can be sampled",
                    ));
                }
            }
        }
        Ok(basis)
    }

    pub fn labels(&self) -> Vec<String> {
        self.members.iter().map(|t| t.string.label()).collect()
    }
}

fn sorted_terms(op: &PauliSum) -> Vec<WeightedTerm> {
    let mut terms = op.terms().to_vec();
    terms.sort_by(|a, b| b.coeff.norm().total_cmp(&a.coeff.norm()).then(a.string.cmp(&b.string)));
    terms
}

/// Greedy first-fit partition of `op`'s terms under `kind`.
pub fn group_terms(op: &PauliSum, kind: Commutation) -> Vec<MeasurementGroup> {
    let terms = sorted_terms(op);
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    // (x, z) masks of each QWC group's basis
    let mut bases: Vec<(u64, u64)> = Vec::new();
    for t in terms {
        let s = t.string;
        let slot = match kind {
            Commutation::Qwc => bases.iter().position(|&(bx, bz)| {
                let both = s.support() & (bx | bz);
                (s.x_mask() ^ bx) & both == 0 && (s.z_mask() ^ bz) & both == 0
            }),
            Commutation::Fc => groups
                .iter()
                .position(|g| g.members.iter().all(|m| m.string.commutes_unchecked(&s))),
        };
        match slot {
            Some(i) => {
                let g = &mut groups[i];
                g.weight += t.coeff.norm();
                g.members.push(t);
                if kind == Commutation::Qwc {
                    bases[i].0 |= s.x_mask();
                    bases[i].1 |= s.z_mask();
                }
            }
            None => {
                groups.push(MeasurementGroup {
                    members: vec![t],
                    kind,
                    basis: None,
                    weight: t.coeff.norm(),
                });
                bases.push((s.x_mask(), s.z_mask()));
            }
        }
    }
    if kind == Commutation::Qwc {
        for g in &mut groups {
            g.basis = Some(g.qwc_basis().expect("greedy QWC groups share a basis"));
        }
    }
    groups
}

pub fn group_qwc(op: &PauliSum) -> Vec<MeasurementGroup> {
    group_terms(op, Commutation::Qwc)
}

pub fn group_fc(op: &PauliSum) -> Vec<MeasurementGroup> {
    group_terms(op, Commutation::Fc)
}

/// Row of a grouping summary: `operator, mapping, n_terms, n_qwc, n_fc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub operator: String,
    pub mapping: String,
    pub n_terms: usize,
    pub n_qwc: usize,
    pub n_fc: usize,
}

pub fn group_counts(operator: &str, mapping: &str, op: &PauliSum) -> GroupCounts {
    let op = op.simplify(DEFAULT_DROP_TOL);
    GroupCounts {
        operator: operator.to_string(),
        mapping: mapping.to_string(),
        n_terms: op.len(),
        n_qwc: group_qwc(&op).len(),
        n_fc: group_fc(&op).len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    Uds,
    Wds,
    Wrs,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Uds, Strategy::Wds, Strategy::Wrs];
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "UDS" => Ok(Strategy::Uds),
            "WDS" => Ok(Strategy::Wds),
            "WRS" => Ok(Strategy::Wrs),
            other => Err(Error::invalid(format!("unknown shot strategy {other:?}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Uds => "UDS",
            Strategy::Wds => "WDS",
            Strategy::Wrs => "WRS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub strategy: Strategy,
    pub s_tot: u64,
    pub allocation: Vec<u64>,
    /// Seed of the multinomial draw (WRS only).
    pub seed: Option<u64>,
}

/// Draws a multinomial sample by sequential binomials.
pub fn multinomial(n: u64, probs: &[f64], r: &mut Rng) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let Some(last) = probs.iter().rposition(|&p| p > 0.0) else {
        return out;
    };
    // tail[i] = Σ_{j >= i} p_j, summed from the back to limit rounding
    let mut tail = vec![0.0; last + 1];
    let mut acc = 0.0;
    for i in (0..=last).rev() {
        acc += probs[i].max(0.0);
        tail[i] = acc;
    }
    let mut left = n;
    for i in 0..=last {
        if left == 0 {
            break;
        }
        if i == last {
            out[i] = left;
            break;
        }
        let q = (probs[i].max(0.0) / tail[i]).clamp(0.0, 1.0);
        let k = if q <= 0.0 {
            0
        } else if q >= 1.0 {
            left
        } else {
            Binomial::new(left, q).expect("probability in [0, 1]").sample(r)
        };
        out[i] = k;
        left -= k;
    }
    out
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::contract("no measurement units to allocate shots to"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("shot weights must be finite and non-negative"));
    }
    let m: f64 = weights.iter().sum();
    if m == 0.0 {
        return Err(Error::contract("all shot weights are zero"));
    }
    Ok(m)
}

/// Indices ordered by descending weight, lower index first on ties.
fn by_weight(weights: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    idx
}

/// Splits `s_tot` shots over units with the given weights.
///
/// UDS gives `floor(s_tot / N)` to each unit and one more to the `s_tot mod N`
/// largest weights. WDS uses largest-remainder apportionment (ties: larger
/// weight, then lower index). WRS makes one multinomial draw with
/// `p_i = w_i / Σ w`.
pub fn allocate_shots(strategy: Strategy, weights: &[f64], s_tot: u64, seed: u64) -> Result<ShotPlan> {
    if s_tot == 0 {
        return Err(Error::invalid("s_tot must be >= 1"));
    }
    let m = check_weights(weights)?;
    let n = weights.len();
    let allocation = match strategy {
        Strategy::Uds => {
            let base = s_tot / n as u64;
            let rem = (s_tot % n as u64) as usize;
            let mut a = vec![base; n];
            for &i in by_weight(weights).iter().take(rem) {
                a[i] += 1;
            }
            a
        }
        Strategy::Wds => {
            let quotas: Vec<f64> = weights.iter().map(|w| s_tot as f64 * w / m).collect();
            let mut a: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
            let assigned: u64 = a.iter().sum();
            let mut rem = s_tot.saturating_sub(assigned);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| {
                let fi = quotas[i] - quotas[i].floor();
                let fj = quotas[j] - quotas[j].floor();
                fj.total_cmp(&fi)
                    .then(weights[j].total_cmp(&weights[i]))
                    .then(i.cmp(&j))
            });
            for &i in order.iter().cycle() {
                if rem == 0 {
                    break;
                }
                if weights[i] > 0.0 {
                    a[i] += 1;
                    rem -= 1;
                }
            }
            a
        }
        Strategy::Wrs => {
            let mut r = rng::stream(seed, "allocate", 0);
            multinomial(s_tot, weights, &mut r)
        }
    };
    debug_assert_eq!(allocation.iter().sum::<u64>(), s_tot);
    Ok(ShotPlan {
        strategy,
        s_tot,
        allocation,
        seed: (strategy == Strategy::Wrs).then_some(seed),
    })
}

#[derive(Debug, Clone)]
struct Unit {
    group: MeasurementGroup,
    /// Real member coefficients.
    coeffs: Vec<f64>,
    weight: f64,
    probs: Vec<f64>,
    /// `G(k) = Σ c_i (−1)^{|k ∧ supp_i|}` for each rotated outcome `k`.
    values: Vec<f64>,
    mean: f64,
    var: f64,
}

/// An observable prepared for repeated sampling against one state.
#[derive(Debug, Clone)]
pub struct PreparedObservable {
    grouping: Grouping,
    offset: f64,
    units: Vec<Unit>,
    exact: f64,
}

fn real_coeff(t: &WeightedTerm) -> Result<f64> {
    if t.coeff.im.abs() > IMAG_TOL * (1.0 + t.coeff.re.abs()) {
        return Err(Error::contract(format!(
            "term {} has complex coefficient; sampling needs a Hermitian operator",
            t.string
        )));
    }
    Ok(t.coeff.re)
}

/// Identity offset and measurement units of `op`.
pub fn measurement_units(op: &PauliSum, grouping: Grouping) -> Result<(f64, Vec<MeasurementGroup>)> {
    let op = op.simplify(0.0);
    let mut offset = 0.0;
    let mut rest = PauliSum::zero(op.n_qubits());
    for t in op.terms() {
        let c = real_coeff(t)?;
        if t.string.is_identity() {
            offset += c;
        } else {
            rest.push(t.string, c.into())?;
        }
    }
    let groups = match grouping {
        Grouping::None => sorted_terms(&rest)
            .into_iter()
            .map(|t| MeasurementGroup::single(t.string, t.coeff.re))
            .collect(),
        Grouping::Qwc => group_qwc(&rest),
    };
    Ok((offset, groups))
}

impl PreparedObservable {
    pub fn new(state: &Statevector, op: &PauliSum, grouping: Grouping, weight_rule: GroupWeight) -> Result<Self> {
        Error::check_dim(state.n_qubits(), op.n_qubits())?;
        let (offset, groups) = measurement_units(op, grouping)?;
        let mut units = Vec::with_capacity(groups.len());
        for g in groups {
            let basis = g.qwc_basis()?;
            let probs = state.basis_probabilities(&basis)?;
            let coeffs: Vec<f64> = g.members.iter().map(real_coeff).collect::<Result<_>>()?;
            let supports: Vec<u64> = g.members.iter().map(|t| t.string.support()).collect();
            let values: Vec<f64> = (0..probs.len())
                .map(|k| {
                    coeffs
                        .iter()
                        .zip(&supports)
                        .map(|(c, s)| if (k as u64 & s).count_ones() & 1 == 0 { *c } else { -c })
                        .sum()
                })
                .collect();
            let mean: f64 = probs.iter().zip(&values).map(|(p, v)| p * v).sum();
            let second: f64 = probs.iter().zip(&values).map(|(p, v)| p * v * v).sum();
            let weight = g.allocation_weight(weight_rule);
            units.push(Unit {
                group: g,
                coeffs,
                weight,
                probs,
                values,
                mean,
                var: (second - mean * mean).max(0.0),
            });
        }
        let exact = offset + units.iter().map(|u| u.mean).sum::<f64>();
        Ok(PreparedObservable {
            grouping,
            offset,
            units,
            exact,
        })
    }

    pub fn grouping(&self) -> Grouping {
        self.grouping
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.weight).collect()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Exact `⟨O⟩` from the state's amplitudes.
    pub fn exact(&self) -> f64 {
        self.exact
    }

    pub fn groups(&self) -> impl Iterator<Item = &MeasurementGroup> {
        self.units.iter().map(|u| &u.group)
    }

    /// Exact `(⟨G_g⟩, Var G_g)` per unit.
    pub fn unit_moments(&self) -> Vec<(f64, f64)> {
        self.units.iter().map(|u| (u.mean, u.var)).collect()
    }

    pub fn plan(&self, strategy: Strategy, s_tot: u64, seed: u64) -> Result<ShotPlan> {
        allocate_shots(strategy, &self.weights(), s_tot, seed)
    }

    /// Model variance of the estimator for `strategy` at `s_tot` shots.
    pub fn variance_model(&self, strategy: Strategy, s_tot: u64) -> f64 {
        let s = s_tot as f64;
        let n = self.units.len() as f64;
        let m: f64 = self.units.iter().map(|u| u.weight).sum();
        let weighted = |f: &dyn Fn(&Unit) -> f64| -> f64 {
            self.units.iter().filter(|u| u.weight > 0.0).map(|u| f(u) / u.weight).sum::<f64>()
        };
        match strategy {
            Strategy::Uds => n / s * self.units.iter().map(|u| u.var).sum::<f64>(),
            Strategy::Wds => m / s * weighted(&|u| u.var),
            Strategy::Wrs => {
                let o = self.exact - self.offset;
                m / s * weighted(&|u| u.var) + m / s * weighted(&|u| u.mean * u.mean) - o * o / s
            }
        }
    }

    /// `Σ V_g / s_g` for the concrete allocation (deterministic plans).
    pub fn allocated_variance(&self, plan: &ShotPlan) -> f64 {
        self.units
            .iter()
            .zip(&plan.allocation)
            .filter(|(_, s)| **s > 0)
            .map(|(u, s)| u.var / *s as f64)
            .sum()
    }

    fn sample_unit(&self, g: usize, shots: u64, seed: u64) -> (f64, Vec<f64>) {
        let u = &self.units[g];
        let mut r = rng::stream(seed, "estimate", g as u64);
        let counts = multinomial(shots, &u.probs, &mut r);
        let s = shots as f64;
        let group_mean = counts.iter().zip(&u.values).map(|(c, v)| *c as f64 * v).sum::<f64>() / s;
        let member_means = u
            .group
            .members
            .iter()
            .map(|t| {
                let supp = t.string.support();
                counts
                    .iter()
                    .enumerate()
                    .map(|(k, c)| if (k as u64 & supp).count_ones() & 1 == 0 { *c as f64 } else { -(*c as f64) })
                    .sum::<f64>()
                    / s
            })
            .collect();
        (group_mean, member_means)
    }

    /// Sampled estimate for `plan`; unit `g` draws from stream `g` of `seed`.
    pub fn estimate(&self, plan: &ShotPlan, seed: u64) -> Result<EstimateReport> {
        if plan.allocation.len() != self.units.len() {
            return Err(Error::contract(format!(
                "plan has {} entries for {} measurement units",
                plan.allocation.len(),
                self.units.len()
            )));
        }
        let m: f64 = self.units.iter().map(|u| u.weight).sum();
        let s_tot = plan.s_tot as f64;
        let mut estimate = self.offset;
        let mut units = Vec::with_capacity(self.units.len());
        let mut starved = Vec::new();
        for (g, (u, &shots)) in self.units.iter().zip(&plan.allocation).enumerate() {
            if shots == 0 {
                starved.push(StarvedUnit {
                    unit: g,
                    terms: u.group.labels(),
                    abs_coeff_mass: u.coeffs.iter().map(|c| c.abs()).sum(),
                    exact_contribution: u.mean,
                });
                continue;
            }
            let (mean, member_means) = self.sample_unit(g, shots, seed);
            let contribution = match plan.strategy {
                Strategy::Uds | Strategy::Wds => mean,
                Strategy::Wrs => {
                    if u.weight == 0.0 {
                        return Err(Error::contract("WRS unit with zero weight received shots"));
                    }
                    m * shots as f64 / s_tot * mean / u.weight
                }
            };
            estimate += contribution;
            units.push(UnitReport {
                unit: g,
                shots,
                sampled_mean: mean,
                exact_mean: u.mean,
                contribution,
                member_means,
            });
        }
        Ok(EstimateReport {
            estimate,
            exact: self.exact,
            variance_model: self.variance_model(plan.strategy, plan.s_tot),
            offset: self.offset,
            starved_mass: starved.iter().map(|s| s.abs_coeff_mass).sum(),
            starved,
            units,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    pub unit: usize,
    pub shots: u64,
    pub sampled_mean: f64,
    pub exact_mean: f64,
    pub contribution: f64,
    pub member_means: Vec<f64>,
}

/// A unit that received no shots and so contributes nothing to the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarvedUnit {
    pub unit: usize,
    pub terms: Vec<String>,
    pub abs_coeff_mass: f64,
    /// Exact value the unit would have contributed; this is the bias.
    pub exact_contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub exact: f64,
    pub variance_model: f64,
    pub offset: f64,
    pub units: Vec<UnitReport>,
    pub starved: Vec<StarvedUnit>,
    pub starved_mass: f64,
}

/// One-shot convenience wrapper around [`PreparedObservable::estimate`].
pub fn estimate_expectation(
    state: &Statevector,
    op: &PauliSum,
    grouping: Grouping,
    plan: &ShotPlan,
    seed: u64,
) -> Result<EstimateReport> {
    PreparedObservable::new(state, op, grouping, GroupWeight::Sum)?.estimate(plan, seed)
}

/// Sampled Rayleigh quotient `est⟨JHJ⟩ / est⟨JJ⟩` with `s_tot` shots per
/// operator; `None` gives the exact (infinite-shot) value.
pub fn nuvqe_sampled_energy(
    state: &Statevector,
    jhj: &PauliSum,
    jj: &PauliSum,
    grouping: Grouping,
    shots: Option<(Strategy, u64)>,
    seed: u64,
) -> Result<f64> {
    let num = PreparedObservable::new(state, jhj, grouping, GroupWeight::Sum)?;
    let den = PreparedObservable::new(state, jj, grouping, GroupWeight::Sum)?;
    match shots {
        Some((strategy, s_tot)) => ratio_estimate(&num, &den, strategy, s_tot, seed),
        None => {
            let d = den.exact();
            if !(d > DENOM_TOL) {
                return Err(Error::DegenerateJastrow {
                    value: d,
                    tol: DENOM_TOL,
                });
            }
            Ok(num.exact() / d)
        }
    }
}

/// Sampled `est⟨num⟩ / est⟨den⟩` with `s_tot` shots for each operator.
///
/// The numerator draws its plan and samples from `derive_seed(seed, "numerator")`,
/// the denominator from `derive_seed(seed, "denominator")`. An operator with no
/// measurement units contributes its offset.
pub fn ratio_estimate(
    num: &PreparedObservable,
    den: &PreparedObservable,
    strategy: Strategy,
    s_tot: u64,
    seed: u64,
) -> Result<f64> {
    let side = |obs: &PreparedObservable, label: &str| -> Result<f64> {
        if obs.n_units() == 0 {
            return Ok(obs.offset());
        }
        let s = rng::derive_seed(seed, label);
        obs.estimate(&obs.plan(strategy, s_tot, s)?, s).map(|r| r.estimate)
    };
    let d = side(den, "denominator")?;
    if !(d > DENOM_TOL) {
        return Err(Error::DegenerateJastrow {
            value: d,
            tol: DENOM_TOL,
        });
    }
    Ok(side(num, "numerator")? / d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub strategy: Strategy,
    pub grouping: Grouping,
    pub s_tot: u64,
    pub exact: f64,
    pub estimates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean: f64,
    pub empirical_variance: f64,
    pub variance_model: f64,
    pub median_abs_error: f64,
}

/// Estimator seed for repetition `i` of a study rooted at `seed`.
pub fn repetition_seed(seed: u64, i: usize) -> u64 {
    use rand::RngCore;
    rng::stream(seed, "repetition", i as u64).next_u64()
}

/// Repeats an estimate `reps` times; WRS redraws its allocation per repetition.
pub fn repetition_study(
    obs: &PreparedObservable,
    strategy: Strategy,
    s_tot: u64,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<StudyReport> {
    if reps == 0 {
        return Err(Error::invalid("repetitions must be >= 1"));
    }
    let seeds: Vec<u64> = (0..reps).map(|i| repetition_seed(seed, i)).collect();
    let results = par::map_slice(exec, &seeds, |&s| -> Result<f64> {
        let plan = obs.plan(strategy, s_tot, s)?;
        Ok(obs.estimate(&plan, s)?.estimate)
    });
    let estimates: Vec<f64> = results.into_iter().collect::<Result<_>>()?;
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let empirical_variance = if estimates.len() > 1 {
        estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut errs: Vec<f64> = estimates.iter().map(|e| (e - obs.exact()).abs()).collect();
    errs.sort_by(f64::total_cmp);
    Ok(StudyReport {
        strategy,
        grouping: obs.grouping(),
        s_tot,
        exact: obs.exact(),
        mean,
        empirical_variance,
        variance_model: obs.variance_model(strategy, s_tot),
        median_abs_error: median_sorted(&errs),
        estimates,
        seeds,
    })
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn labels(groups: &[MeasurementGroup]) -> Vec<Vec<String>> {
        groups.iter().map(|g| g.labels()).collect()
    }

    #[test]
    fn qwc_examples() {
        let op = PauliSum::from_labels(2, &[("XX", 1.0), ("ZZ", 0.5), ("XI", 0.25)]).unwrap();
        let g = group_qwc(&op);
        assert_eq!(labels(&g), vec![vec!["XX", "XI"], vec!["ZZ"]]);
        assert_eq!(g[0].basis, Some(vec![Letter::X, Letter::X]));
        assert!((g[0].weight - 1.25).abs() < 1e-15);

        let diag = PauliSum::from_labels(3, &[("ZZZ", 0.1), ("IIZ", 0.2), ("ZIZ", 0.3), ("III", 1.0)]).unwrap();
        assert_eq!(group_qwc(&diag).len(), 1);
    }

    #[test]
    fn fc_examples() {
        let op = PauliSum::from_labels(2, &[("XX", 1.0), ("ZZ", 0.5)]).unwrap();
        assert_eq!(group_fc(&op).len(), 1);
        assert_eq!(group_qwc(&op).len(), 2);
        let g = &group_fc(&op)[0];
        assert!(g.qwc_basis().is_err());
        assert_eq!(g.basis, None);
    }

    #[test]
    fn tie_break_is_canonical() {
        let op = PauliSum::from_labels(1, &[("Z", 1.0), ("X", -1.0), ("Y", 1.0)]).unwrap();
        assert_eq!(labels(&group_qwc(&op)), vec![vec!["X"], vec!["Y"], vec!["Z"]]);
    }

    #[test]
    fn allocations() {
        assert_eq!(allocate_shots(Strategy::Uds, &[1.0; 4], 100, 0).unwrap().allocation, vec![25; 4]);
        assert_eq!(allocate_shots(Strategy::Wds, &[3.0, 1.0], 100, 0).unwrap().allocation, vec![75, 25]);
        assert_eq!(
            allocate_shots(Strategy::Uds, &[1.0, 3.0, 2.0], 10, 0).unwrap().allocation,
            vec![3, 4, 3]
        );
        assert_eq!(
            allocate_shots(Strategy::Wds, &[1.0, 1.0, 1.0], 10, 0).unwrap().allocation,
            vec![4, 3, 3]
        );
        let p = allocate_shots(Strategy::Wrs, &[0.5, 0.2, 0.3], 1000, 9).unwrap();
        assert_eq!(p.allocation.iter().sum::<u64>(), 1000);
        assert_eq!(p.seed, Some(9));
        assert_eq!(p, allocate_shots(Strategy::Wrs, &[0.5, 0.2, 0.3], 1000, 9).unwrap());
        assert!(matches!(allocate_shots(Strategy::Uds, &[0.0, 0.0], 10, 0), Err(Error::Contract(_))));
        assert!(matches!(allocate_shots(Strategy::Uds, &[1.0], 0, 0), Err(Error::Invalid(_))));
    }

    #[test]
    fn multinomial_zero_probabilities() {
        let mut r = rng::stream(1, "t", 0);
        let c = multinomial(500, &[0.0, 1.0, 0.0], &mut r);
        assert_eq!(c, vec![0, 500, 0]);
    }

    #[test]
    fn eigenstate_estimates_are_exact() {
        let s = Statevector::from_basis_state(2, "01").unwrap();
        let op = PauliSum::from_labels(2, &[("II", 0.5), ("ZI", 0.3), ("IZ", -0.7), ("ZZ", 0.1)]).unwrap();
        let exact = s.expectation(&op).unwrap();
        for grouping in [Grouping::None, Grouping::Qwc] {
            let obs = PreparedObservable::new(&s, &op, grouping, GroupWeight::Sum).unwrap();
            for strat in [Strategy::Uds, Strategy::Wds] {
                let plan = obs.plan(strat, 100, 1).unwrap();
                let r = obs.estimate(&plan, 4).unwrap();
                assert!((r.estimate - exact).abs() < 1e-12, "{grouping} {strat}");
            }
        }
        let z = PauliSum::from_labels(1, &[("Z", 1.0)]).unwrap();
        let zero = Statevector::zero(1).unwrap();
        let plan = allocate_shots(Strategy::Wrs, &[1.0], 100, 3).unwrap();
        let r = estimate_expectation(&zero, &z, Grouping::None, &plan, 5).unwrap();
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn plan_length_checked() {
        let s = Statevector::zero(1).unwrap();
        let op = PauliSum::from_labels(1, &[("Z", 1.0), ("X", 1.0)]).unwrap();
        let plan = allocate_shots(Strategy::Uds, &[1.0], 10, 0).unwrap();
        assert!(matches!(
            estimate_expectation(&s, &op, Grouping::None, &plan, 0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn starved_units_are_reported() {
        let s = Statevector::zero(1).unwrap();
        let op = PauliSum::from_labels(1, &[("Z", 1.0), ("X", 1e-6)]).unwrap();
        let obs = PreparedObservable::new(&s, &op, Grouping::None, GroupWeight::Sum).unwrap();
        let plan = obs.plan(Strategy::Wds, 10, 0).unwrap();
        assert_eq!(plan.allocation, vec![10, 0]);
        let r = obs.estimate(&plan, 0).unwrap();
        assert_eq!(r.starved.len(), 1);
        assert_eq!(r.starved[0].terms, vec!["X"]);
        assert!((r.starved_mass - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn complex_coefficients_rejected() {
        let mut op = PauliSum::zero(1);
        op.push(PauliString::parse("X").unwrap(), Complex64::new(0.0, 1.0)).unwrap();
        assert!(measurement_units(&op, Grouping::None).is_err());
    }

    #[test]
    fn identity_jastrow_reduces_to_hamiltonian() {
        let s = Statevector::from_amplitudes(vec![0.6.into(), 0.0.into(), 0.0.into(), 0.8.into()]).unwrap();
        let h = PauliSum::from_labels(2, &[("ZZ", 0.4), ("XX", 0.3), ("IZ", -0.2)]).unwrap();
        let id = PauliSum::identity(2, 1.0).unwrap();
        let exact = nuvqe_sampled_energy(&s, &h, &id, Grouping::Qwc, None, 0).unwrap();
        assert!((exact - s.expectation(&h).unwrap()).abs() < 1e-12);
        let obs = PreparedObservable::new(&s, &h, Grouping::Qwc, GroupWeight::Sum).unwrap();
        let sampled = nuvqe_sampled_energy(&s, &h, &id, Grouping::Qwc, Some((Strategy::Uds, 1000)), 7).unwrap();
        let ks = rng::derive_seed(7, "numerator");
        let direct = obs.estimate(&obs.plan(Strategy::Uds, 1000, ks).unwrap(), ks).unwrap().estimate;
        assert_eq!(sampled, direct);
    }
}
