//! Wall-clock cost of one energy query.
//!
//! A query costs `T_prepare + T_sample + T_switch + T_cloud`:
//!
//! * superconducting: `g·p·c + M/s + r·c + l·c/b`;
//! * trapped ion / neutral atom: `M·t_shot + r·c + l·c/b`, where `t_shot`
//!   folds preparation and readout into one acquisition time.
//!
//! `c` is the number of distinct circuits (one per Pauli string or group),
//! `M = c × shots_per_circuit` (divided by the shot-frugal factor when
//! enabled) and `g` the gate count of a linear RY ansatz with as many layers
//! as qubits. Each Jastrow parameter of a nuVQE ansatz removes one
//! single-qubit gate.
//!
//! Circuit counts beyond the measured hydrogen-chain sizes come from a
//! power law `h(n) = a·n^p` fitted by least squares in log-log space.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::{gate_count, HeaKind, HeaSpec};
use crate::error::{Error, Result};
use crate::jastrow;

/// Julian year in seconds.
pub const YEAR_SECONDS: f64 = 3.1557e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Superconducting,
    TrappedIonNeutralAtom,
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::Superconducting => "superconducting",
            Platform::TrappedIonNeutralAtom => "trapped_ion_neutral_atom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub name: Platform,
    /// Shots per second (superconducting).
    pub sampling_rate: f64,
    /// Per-circuit switching overhead `r`, seconds.
    pub switch_overhead: f64,
    /// Network round trip `l`, seconds.
    pub network_roundtrip: f64,
    /// Mean gate time `p`, seconds (superconducting).
    pub gate_time: Option<f64>,
    /// Circuits per network submission `b`.
    pub batch_size: u64,
    /// Time per shot including preparation (ion/atom).
    pub combined_shot_time: Option<f64>,
}

impl PlatformProfile {
    pub fn superconducting() -> Self {
        PlatformProfile {
            name: Platform::Superconducting,
            sampling_rate: 1e5,
            switch_overhead: 0.1,
            network_roundtrip: 4.0,
            gate_time: Some(660e-9),
            batch_size: 100,
            combined_shot_time: None,
        }
    }

    pub fn trapped_ion_neutral_atom() -> Self {
        PlatformProfile {
            name: Platform::TrappedIonNeutralAtom,
            sampling_rate: 5.0,
            switch_overhead: 0.025,
            network_roundtrip: 4.0,
            gate_time: None,
            batch_size: 100,
            combined_shot_time: Some(0.2),
        }
    }

    pub fn for_platform(p: Platform) -> Self {
        match p {
            Platform::Superconducting => Self::superconducting(),
            Platform::TrappedIonNeutralAtom => Self::trapped_ion_neutral_atom(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.sampling_rate) || !pos(self.switch_overhead) || !pos(self.network_roundtrip) {
            return Err(Error::invalid("platform rates and times must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        match self.name {
            Platform::Superconducting => {
                if !self.gate_time.is_some_and(pos) {
                    return Err(Error::invalid("superconducting profile needs a positive gate_time"));
                }
            }
            Platform::TrappedIonNeutralAtom => {
                if !self.combined_shot_time.is_some_and(pos) {
                    return Err(Error::invalid("ion/atom profile needs a positive combined_shot_time"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    HeaVqe,
    Nuvqe,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::HeaVqe => "HEA_VQE",
            Method::Nuvqe => "NUVQE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CountGrouping {
    None,
    Qwc,
    Fc,
}

impl CountGrouping {
    pub const ALL: [CountGrouping; 3] = [CountGrouping::None, CountGrouping::Qwc, CountGrouping::Fc];
}

impl fmt::Display for CountGrouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountGrouping::None => "NONE",
            CountGrouping::Qwc => "QWC",
            CountGrouping::Fc => "FC",
        })
    }
}

impl FromStr for CountGrouping {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NONE" => Ok(CountGrouping::None),
            "QWC" => Ok(CountGrouping::Qwc),
            "FC" => Ok(CountGrouping::Fc),
            other => Err(Error::invalid(format!("unknown grouping {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mitigation {
    pub grouping: CountGrouping,
    pub shot_frugal: bool,
}

impl Mitigation {
    pub const NONE: Mitigation = Mitigation {
        grouping: CountGrouping::None,
        shot_frugal: false,
    };
}

impl fmt::Display for Mitigation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.grouping, self.shot_frugal) {
            (CountGrouping::None, false) => f.write_str("none"),
            (CountGrouping::None, true) => f.write_str("SF"),
            (g, false) => write!(f, "{g}"),
            (g, true) => write!(f, "{g}+SF"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Assumptions {
    pub shots_per_circuit: f64,
    /// Shot reduction applied when shot-frugal allocation is enabled.
    pub shot_frugal_factor: f64,
    /// Ansatz layers; `None` means as many layers as qubits.
    pub layers: Option<usize>,
}

impl Default for Assumptions {
    fn default() -> Self {
        Assumptions {
            shots_per_circuit: 1e4,
            shot_frugal_factor: 100.0,
            layers: None,
        }
    }
}

/// Distinct-circuit counts for the three operators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitCounts {
    pub h_h: Option<f64>,
    pub h_jhj: Option<f64>,
    pub h_jj: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryCostBreakdown {
    pub t_prepare: f64,
    pub t_sample: f64,
    pub t_switch: f64,
    pub t_cloud: f64,
    pub total: f64,
    /// Distinct circuits `c`.
    pub circuits: f64,
    /// Total shots `M`.
    pub measurements: f64,
    /// Gates per circuit `g`.
    pub gates: u64,
}

/// `(single-qubit gates, CNOTs)` per circuit for `method` on `n` qubits.
pub fn circuit_gates(method: Method, n_qubits: usize, layers: usize) -> Result<(u64, u64)> {
    let spec = HeaSpec::new(HeaKind::RyLinear, n_qubits, layers)?;
    let (sqg, cnot) = gate_count(&spec);
    let sqg = match method {
        Method::HeaVqe => sqg,
        Method::Nuvqe => sqg.saturating_sub(jastrow::param_count(n_qubits)),
    };
    Ok((sqg as u64, cnot as u64))
}

pub fn query_time(
    method: Method,
    n_qubits: usize,
    counts: &CircuitCounts,
    mitigation: Mitigation,
    profile: &PlatformProfile,
    assumptions: &Assumptions,
) -> Result<QueryCostBreakdown> {
    profile.validate()?;
    if !(assumptions.shots_per_circuit > 0.0) || !(assumptions.shot_frugal_factor > 0.0) {
        return Err(Error::invalid("shot assumptions must be positive"));
    }
    let need = |v: Option<f64>, what: &str| -> Result<f64> {
        match v {
            Some(x) if x.is_finite() && x > 0.0 => Ok(x),
            Some(x) => Err(Error::invalid(format!("{what} count must be positive, got {x}"))),
            None => Err(Error::invalid(format!("{method} needs the {what} circuit count"))),
        }
    };
    let c = match method {
        Method::HeaVqe => need(counts.h_h, "H")?,
        Method::Nuvqe => need(counts.h_jhj, "JHJ")? + need(counts.h_jj, "JJ")?,
    };
    let layers = assumptions.layers.unwrap_or(n_qubits);
    let (sqg, cnot) = circuit_gates(method, n_qubits, layers)?;
    let g = sqg + cnot;
    let mut m = c * assumptions.shots_per_circuit;
    if mitigation.shot_frugal {
        m /= assumptions.shot_frugal_factor;
    }
    let (t_prepare, t_sample) = match profile.name {
        Platform::Superconducting => (
            g as f64 * profile.gate_time.unwrap_or_default() * c,
            m / profile.sampling_rate,
        ),
        Platform::TrappedIonNeutralAtom => (0.0, m * profile.combined_shot_time.unwrap_or_default()),
    };
    let t_switch = profile.switch_overhead * c;
    let t_cloud = profile.network_roundtrip * c / profile.batch_size as f64;
    Ok(QueryCostBreakdown {
        t_prepare,
        t_sample,
        t_switch,
        t_cloud,
        total: t_prepare + t_sample + t_switch + t_cloud,
        circuits: c,
        measurements: m,
        gates: g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub p: f64,
    /// Root-mean-square residual in `ln h`.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.a * n.powf(self.p)
    }
}

/// Ordinary least squares of `ln h` on `ln n`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::invalid("power-law fit needs at least two points"));
    }
    if points.iter().any(|&(n, h)| !(n > 0.0) || !(h >= 1.0) || !n.is_finite() || !h.is_finite()) {
        return Err(Error::invalid("power-law points need n > 0 and counts >= 1"));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("power-law fit needs at least two distinct qubit counts"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    let ln_a = my - p * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - ln_a - p * x).powi(2)).sum::<f64>() / k).sqrt();
    Ok(PowerLawFit {
        a: ln_a.exp(),
        p,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Family {
    H,
    Jhj,
    Jj,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::H, Family::Jhj, Family::Jj];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::H => "H",
            Family::Jhj => "JHJ",
            Family::Jj => "JJ",
        })
    }
}

/// Measured circuit counts for one operator family under one grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSeries {
    pub family: Family,
    pub grouping: CountGrouping,
    pub points: Vec<(f64, f64)>,
}

/// Hydrogen chains H2…H6 (4–12 qubits). Grouped counts are measured up to
/// 10 qubits only.
pub fn hydrogen_chain_counts() -> Vec<CountSeries> {
    let s = |family, grouping, pts: &[(f64, f64)]| CountSeries {
        family,
        grouping,
        points: pts.to_vec(),
    };
    use CountGrouping::*;
    vec![
        s(Family::H, None, &[(4.0, 15.0), (6.0, 62.0), (8.0, 185.0), (10.0, 444.0), (12.0, 919.0)]),
        s(
            Family::Jhj,
            None,
            &[(4.0, 24.0), (6.0, 288.0), (8.0, 3147.0), (10.0, 23096.0), (12.0, 130346.0)],
        ),
        s(Family::Jj, None, &[(4.0, 16.0), (6.0, 57.0), (8.0, 163.0), (10.0, 186.0), (12.0, 794.0)]),
        s(Family::H, Qwc, &[(4.0, 5.0), (6.0, 13.0), (8.0, 46.0), (10.0, 82.0)]),
        s(Family::Jhj, Qwc, &[(4.0, 9.0), (6.0, 45.0), (8.0, 185.0), (10.0, 528.0)]),
        s(Family::Jj, Qwc, &[(4.0, 1.0), (6.0, 1.0), (8.0, 1.0), (10.0, 1.0)]),
        s(Family::H, Fc, &[(4.0, 3.0), (6.0, 6.0), (8.0, 9.0), (10.0, 28.0)]),
        s(Family::Jhj, Fc, &[(4.0, 2.0), (6.0, 8.0), (8.0, 29.0), (10.0, 112.0)]),
        s(Family::Jj, Fc, &[(4.0, 1.0), (6.0, 1.0), (8.0, 1.0), (10.0, 1.0)]),
    ]
}

/// Counts per (family, grouping): measured where available, fitted elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CountModel {
    series: Vec<(CountSeries, PowerLawFit)>,
}

impl CountModel {
    pub fn new(series: Vec<CountSeries>) -> Result<Self> {
        let series = series
            .into_iter()
            .map(|s| {
                let f = fit_power_law(&s.points)?;
                Ok((s, f))
            })
            .collect::<Result<_>>()?;
        Ok(CountModel { series })
    }

    pub fn hydrogen_chains() -> Self {
        Self::new(hydrogen_chain_counts()).expect("built-in data is valid")
    }

    pub fn fit(&self, family: Family, grouping: CountGrouping) -> Option<&PowerLawFit> {
        self.series
            .iter()
            .find(|(s, _)| s.family == family && s.grouping == grouping)
            .map(|(_, f)| f)
    }

    /// `(count, extrapolated)`; `None` when the family/grouping is unknown.
    pub fn count(&self, family: Family, grouping: CountGrouping, n: usize) -> Option<(f64, bool)> {
        let (s, f) = self
            .series
            .iter()
            .find(|(s, _)| s.family == family && s.grouping == grouping)?;
        match s.points.iter().find(|p| p.0 == n as f64) {
            Some(p) => Some((p.1, false)),
            None => Some((f.eval(n as f64).round().max(1.0), true)),
        }
    }

    pub fn circuit_counts(&self, grouping: CountGrouping, n: usize) -> (CircuitCounts, bool) {
        let mut extrapolated = false;
        let mut get = |fam| {
            self.count(fam, grouping, n).map(|(c, e)| {
                extrapolated |= e;
                c
            })
        };
        let counts = CircuitCounts {
            h_h: get(Family::H),
            h_jhj: get(Family::Jhj),
            h_jj: get(Family::Jj),
        };
        (counts, extrapolated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub method: Method,
    pub mitigation: Mitigation,
}

impl Scenario {
    pub const HEA: Scenario = Scenario {
        method: Method::HeaVqe,
        mitigation: Mitigation::NONE,
    };

    pub fn nuvqe(grouping: CountGrouping, shot_frugal: bool) -> Self {
        Scenario {
            method: Method::Nuvqe,
            mitigation: Mitigation { grouping, shot_frugal },
        }
    }

    /// HEA plus the five nuVQE variants: none, QWC, FC, QWC+SF, FC+SF.
    pub fn standard() -> Vec<Scenario> {
        vec![
            Scenario::HEA,
            Scenario::nuvqe(CountGrouping::None, false),
            Scenario::nuvqe(CountGrouping::Qwc, false),
            Scenario::nuvqe(CountGrouping::Fc, false),
            Scenario::nuvqe(CountGrouping::Qwc, true),
            Scenario::nuvqe(CountGrouping::Fc, true),
        ]
    }

    pub fn label(&self) -> String {
        match (self.method, self.mitigation) {
            (Method::HeaVqe, Mitigation::NONE) => "HEA".into(),
            (Method::Nuvqe, Mitigation::NONE) => "nuVQE".into(),
            (m, mit) => format!("{}+{mit}", if m == Method::HeaVqe { "HEA" } else { "nuVQE" }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub scenario: String,
    pub method: Method,
    pub grouping: CountGrouping,
    pub shot_frugal: bool,
    pub n_qubits: usize,
    pub platform: Platform,
    pub extrapolated: bool,
    pub circuits: f64,
    pub measurements: f64,
    pub gates: u64,
    pub t_prepare: f64,
    pub t_sample: f64,
    pub t_switch: f64,
    pub t_cloud: f64,
    pub total_seconds: f64,
    pub total_years: f64,
}

pub fn scaling_report(
    model: &CountModel,
    qubits: &[usize],
    scenarios: &[Scenario],
    profiles: &[PlatformProfile],
    assumptions: &Assumptions,
) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for profile in profiles {
        for sc in scenarios {
            for &n in qubits {
                let (counts, extrapolated) = model.circuit_counts(sc.mitigation.grouping, n);
                let b = query_time(sc.method, n, &counts, sc.mitigation, profile, assumptions)?;
                rows.push(ScalingRow {
                    scenario: sc.label(),
                    method: sc.method,
                    grouping: sc.mitigation.grouping,
                    shot_frugal: sc.mitigation.shot_frugal,
                    n_qubits: n,
                    platform: profile.name,
                    extrapolated,
                    circuits: b.circuits,
                    measurements: b.measurements,
                    gates: b.gates,
                    t_prepare: b.t_prepare,
                    t_sample: b.t_sample,
                    t_switch: b.t_switch,
                    t_cloud: b.t_cloud,
                    total_seconds: b.total,
                    total_years: b.total / YEAR_SECONDS,
                });
            }
        }
    }
    Ok(rows)
}
