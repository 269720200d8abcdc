mod common;

use std::fs;

use common::*;
use nuvqe::ansatz::{build_hea, HeaKind, HeaSpec};
use nuvqe::error::Error;
use nuvqe::fermion::{
    build_number_operator, build_s2_operator, determinant_occupation, jw_map, parse_fcidump, OrbitalOrdering,
};
use nuvqe::jastrow::{build_linear_jastrow, conjugate_pair, sample_params, JastrowParams};
use nuvqe::measurement::{
    allocate_shots, estimate_expectation, group_counts, group_fc, group_qwc, group_terms, nuvqe_sampled_energy,
    repetition_study, Commutation, GroupWeight, Grouping, MeasurementGroup, PreparedObservable, Strategy,
};
use nuvqe::pauli::{fully_commutes, qubit_wise_commutes};
use nuvqe::vqe::nuvqe_energy_from_operators;
use nuvqe::{Exec, PauliSum, Statevector};

fn h2() -> PauliSum {
    let ints = parse_fcidump(fs::read(fixture("h2_sto3g.fcidump")).unwrap().as_slice()).unwrap();
    jw_map(&ints, OrbitalOrdering::Interleaved).unwrap()
}

fn triplet() -> PauliSum {
    let ints = parse_fcidump(fs::read(fixture("two_site_triplet.fcidump")).unwrap().as_slice()).unwrap();
    jw_map(&ints, OrbitalOrdering::Interleaved).unwrap()
}

fn jastrow_pair(h: &PauliSum, seed: u64) -> (PauliSum, PauliSum) {
    let p = sample_params(h.n_qubits(), 0.1, seed).unwrap();
    conjugate_pair(&build_linear_jastrow(&p).unwrap(), h).unwrap()
}

/// HF determinant of H2 followed by a shallow rotation, so every term has a
/// non-trivial expectation.
fn h2_state() -> Statevector {
    let occ = determinant_occupation(2, 2, 0, OrbitalOrdering::Interleaved).unwrap();
    let circ = build_hea(&HeaSpec::new(HeaKind::RyLinear, 4, 1).unwrap()).unwrap();
    let params: Vec<f64> = (0..circ.n_params).map(|k| 0.3 * ((k as f64) * 1.7).sin()).collect();
    Statevector::from_basis_index(4, occ as usize).unwrap().apply_circuit(&circ, &params).unwrap()
}

fn corpus() -> Vec<(String, PauliSum)> {
    let h = h2();
    let t = triplet();
    let (jhj, jj) = jastrow_pair(&h, 5);
    let mut out = vec![
        ("h2".to_string(), h),
        ("triplet".to_string(), t),
        ("jhj".to_string(), jhj),
        ("jj".to_string(), jj),
        ("s2".to_string(), build_s2_operator(2, OrbitalOrdering::Interleaved).unwrap()),
        ("n".to_string(), build_number_operator(4).unwrap()),
    ];
    let mut r = rng(17);
    for k in 0..20 {
        let n = 2 + k % 4;
        out.push((format!("random{k}"), random_sum(&mut r, n, 3 + k, true).simplify(0.0)));
    }
    out
}

fn labels(groups: &[MeasurementGroup]) -> Vec<Vec<String>> {
    groups.iter().map(|g| g.labels()).collect()
}

#[test]
fn grouping_examples() {
    let op = PauliSum::from_labels(2, &[("XX", 1.0), ("ZZ", 0.5), ("XI", 0.25)]).unwrap();
    assert_eq!(labels(&group_qwc(&op)), vec![vec!["XX", "XI"], vec!["ZZ"]]);
    let op = PauliSum::from_labels(2, &[("XX", 1.0), ("ZZ", 1.0)]).unwrap();
    assert_eq!(group_qwc(&op).len(), 2);
    assert_eq!(group_fc(&op).len(), 1);
}

#[test]
fn jj_is_a_single_diagonal_group() {
    for n in [4, 6, 8, 10, 12] {
        let p = sample_params(n, 0.1, n as u64).unwrap();
        let j = build_linear_jastrow(&p).unwrap();
        let jj = nuvqe::pauli::sum_mul(&j, &j, 0.0).unwrap();
        let counts = group_counts("JJ", "jordan_wigner", &jj);
        assert_eq!((counts.n_qwc, counts.n_fc), (1, 1), "n = {n}");
        assert!(counts.n_terms > 1);
    }
}

#[test]
fn groupings_are_exact_partitions_of_commuting_sets() {
    for (name, op) in corpus() {
        let op = op.simplify(0.0);
        for kind in [Commutation::Qwc, Commutation::Fc] {
            let groups = group_terms(&op, kind);
            let mut seen: Vec<(String, (u64, u64))> = groups
                .iter()
                .flat_map(|g| g.members.iter())
                .map(|t| (t.string.label(), (t.coeff.re.to_bits(), t.coeff.im.to_bits())))
                .collect();
            let mut want: Vec<(String, (u64, u64))> = op
                .terms()
                .iter()
                .map(|t| (t.string.label(), (t.coeff.re.to_bits(), t.coeff.im.to_bits())))
                .collect();
            seen.sort();
            want.sort();
            assert_eq!(seen, want, "{name} {kind:?}");
            for g in &groups {
                for a in &g.members {
                    for b in &g.members {
                        let ok = match kind {
                            Commutation::Qwc => qubit_wise_commutes(&a.string, &b.string).unwrap(),
                            Commutation::Fc => fully_commutes(&a.string, &b.string).unwrap(),
                        };
                        assert!(ok, "{name}: {} and {} share a group", a.string, b.string);
                    }
                }
                let w: f64 = g.members.iter().map(|t| t.coeff.norm()).sum();
                assert!((g.weight - w).abs() < 1e-12);
            }
        }
        let counts = group_counts(&name, "jordan_wigner", &op);
        assert!(counts.n_fc <= counts.n_qwc && counts.n_qwc <= counts.n_terms, "{name}");
    }
}

#[test]
fn qwc_groups_are_measurable_in_their_shared_basis() {
    let mut r = rng(3);
    for (name, op) in corpus() {
        let state = random_state(&mut r, op.n_qubits());
        for g in group_qwc(&op) {
            let basis = g.basis.clone().unwrap();
            let probs = state.basis_probabilities(&basis).unwrap();
            for t in &g.members {
                let supp = t.string.support();
                let from_counts: f64 = probs
                    .iter()
                    .enumerate()
                    .map(|(k, p)| if (k as u64 & supp).count_ones().is_multiple_of(2) { *p } else { -*p })
                    .sum();
                let direct = quad(&string_matrix(&t.string), &state).re;
                assert!((from_counts - direct).abs() < 1e-10, "{name}: {}", t.string);
            }
        }
    }
}

/// Minimum clique cover of the commutation graph by dynamic programming over subsets.
fn min_clique_cover(op: &PauliSum, kind: Commutation) -> usize {
    let terms = op.terms();
    let n = terms.len();
    let ok = |a: usize, b: usize| match kind {
        Commutation::Qwc => qubit_wise_commutes(&terms[a].string, &terms[b].string).unwrap(),
        Commutation::Fc => fully_commutes(&terms[a].string, &terms[b].string).unwrap(),
    };
    let full = 1usize << n;
    let mut clique = vec![false; full];
    clique[0] = true;
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        clique[mask] = clique[rest] && (0..n).filter(|&j| rest >> j & 1 == 1).all(|j| ok(low, j));
    }
    let mut best = vec![usize::MAX; full];
    best[0] = 0;
    for mask in 1..full {
        let low = 1usize << mask.trailing_zeros();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let c = sub | low;
            if clique[c] && best[mask ^ c] != usize::MAX {
                best[mask] = best[mask].min(best[mask ^ c] + 1);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    best[full - 1]
}

#[test]
fn greedy_grouping_is_within_twice_the_minimum_cover() {
    let mut r = rng(44);
    for k in 0..30 {
        let n = 2 + k % 3;
        let op = random_sum(&mut r, n, 4 + k % 7, true).simplify(0.0);
        for kind in [Commutation::Qwc, Commutation::Fc] {
            let greedy = group_terms(&op, kind).len();
            let opt = min_clique_cover(&op, kind);
            assert!(opt <= greedy && greedy <= 2 * opt, "case {k} {kind:?}: greedy {greedy} min {opt}");
        }
    }
}

fn strategy(s: &str) -> Strategy {
    s.parse().unwrap()
}

#[test]
fn deterministic_apportionments() {
    for (s, w, s_tot, want) in APPORTIONMENT_CASES {
        let plan = allocate_shots(strategy(s), w, s_tot, 0).unwrap();
        assert_eq!(plan.allocation, want, "{s} {w:?} {s_tot}");
        assert_eq!(plan.allocation.iter().sum::<u64>(), s_tot);
        assert_eq!(plan.seed, None);
    }
}

#[test]
fn wrs_allocations_have_multinomial_moments() {
    let w = [0.5, 0.3, 0.15, 0.05];
    let s_tot = 100u64;
    let draws = 10_000u64;
    let mut sums = [0f64; 4];
    for seed in 0..draws {
        let plan = allocate_shots(Strategy::Wrs, &w, s_tot, seed).unwrap();
        assert_eq!(plan.allocation.iter().sum::<u64>(), s_tot);
        for (acc, a) in sums.iter_mut().zip(&plan.allocation) {
            *acc += *a as f64;
        }
    }
    for (k, p) in w.iter().enumerate() {
        let mean = sums[k] / draws as f64;
        let se = (s_tot as f64 * p * (1.0 - p) / draws as f64).sqrt();
        assert!((mean - s_tot as f64 * p).abs() < 3.0 * se, "component {k}: {mean}");
    }
    let a = allocate_shots(Strategy::Wrs, &w, s_tot, 9).unwrap();
    assert_eq!(a, allocate_shots(Strategy::Wrs, &w, s_tot, 9).unwrap());
}

#[test]
fn allocation_errors() {
    for s in Strategy::ALL {
        assert!(matches!(allocate_shots(s, &[], 10, 0), Err(Error::Contract(_))));
        assert!(matches!(allocate_shots(s, &[1.0, -0.5], 10, 0), Err(Error::Invalid(_))));
        assert!(matches!(allocate_shots(s, &[1.0, f64::NAN], 10, 0), Err(Error::Invalid(_))));
        assert!(matches!(allocate_shots(s, &[0.0, 0.0], 10, 0), Err(Error::Contract(_))));
        assert!(matches!(allocate_shots(s, &[1.0], 0, 0), Err(Error::Invalid(_))));
    }
}

#[test]
fn estimates_on_eigenstates_are_exact() {
    let zero = Statevector::zero(1).unwrap();
    let z = PauliSum::from_labels(1, &[("Z", 1.0)]).unwrap();
    for s in Strategy::ALL {
        let plan = allocate_shots(s, &[1.0], 1000, 1).unwrap();
        let rep = estimate_expectation(&zero, &z, Grouping::None, &plan, 2).unwrap();
        assert_eq!(rep.estimate, 1.0);
    }
    let state = Statevector::from_basis_state(2, "01").unwrap();
    let op = PauliSum::from_labels(2, &[("ZZ", 1.0), ("ZI", 0.5), ("II", 0.25)]).unwrap();
    for grouping in [Grouping::None, Grouping::Qwc] {
        let obs = PreparedObservable::new(&state, &op, grouping, GroupWeight::Sum).unwrap();
        assert_eq!(obs.offset(), 0.25);
        // WRS still carries allocation noise across several units.
        for s in [Strategy::Uds, Strategy::Wds] {
            let plan = obs.plan(s, 50, 3).unwrap();
            let rep = obs.estimate(&plan, 4).unwrap();
            assert!((rep.estimate - (-0.25)).abs() < 1e-12, "{s} {grouping:?}");
            assert!(rep.variance_model.abs() < 1e-12);
        }
    }
}

#[test]
fn starved_units_are_reported_and_contribute_nothing() {
    let state = Statevector::zero(2).unwrap();
    let op = PauliSum::from_labels(2, &[("ZI", 1.0), ("IZ", 0.5), ("ZZ", 0.25)]).unwrap();
    let obs = PreparedObservable::new(&state, &op, Grouping::None, GroupWeight::Sum).unwrap();
    let plan = allocate_shots(Strategy::Uds, &obs.weights(), 2, 0).unwrap();
    assert_eq!(plan.allocation, vec![1, 1, 0]);
    let rep = obs.estimate(&plan, 0).unwrap();
    assert_eq!(rep.estimate, 1.5);
    assert_eq!(rep.starved.len(), 1);
    assert_eq!(rep.starved[0].terms, vec!["ZZ"]);
    assert_eq!(rep.starved[0].exact_contribution, 0.25);
    assert_eq!(rep.starved_mass, 0.25);
}

#[test]
fn estimators_are_unbiased_and_match_their_variance_models() {
    let (op, state) = variance_fixture();
    let reps = 1000;
    for grouping in [Grouping::None, Grouping::Qwc] {
        let obs = PreparedObservable::new(&state, &op, grouping, GroupWeight::Sum).unwrap();
        let exact = quad(&sum_matrix(&op), &state).re;
        assert!((obs.exact() - exact).abs() < 1e-12);
        for s in Strategy::ALL {
            let study = repetition_study(&obs, s, 200, reps, 77, Exec::Parallel).unwrap();
            let se = (study.empirical_variance / reps as f64).sqrt();
            assert!((study.mean - exact).abs() < 4.0 * se, "{s} {grouping:?}: {} vs {exact}", study.mean);
            let model = match s {
                Strategy::Wrs => study.variance_model,
                _ => obs.allocated_variance(&obs.plan(s, 200, 0).unwrap()),
            };
            let ratio = study.empirical_variance / model;
            assert!((0.8..1.25).contains(&ratio), "{s} {grouping:?}: variance ratio {ratio}");
        }
    }
}

#[test]
fn wrs_excess_variance_has_the_modelled_sign() {
    let (op, state) = variance_fixture();
    let obs = PreparedObservable::new(&state, &op, Grouping::None, GroupWeight::Sum).unwrap();
    let s_tot = 300;
    let correction = obs.variance_model(Strategy::Wrs, s_tot) - obs.variance_model(Strategy::Wds, s_tot);
    assert!(correction > 0.2 * obs.variance_model(Strategy::Wds, s_tot));
    let wrs = repetition_study(&obs, Strategy::Wrs, s_tot, 2000, 5, Exec::Parallel).unwrap();
    let wds = repetition_study(&obs, Strategy::Wds, s_tot, 2000, 5, Exec::Parallel).unwrap();
    let diff = wrs.empirical_variance - wds.empirical_variance;
    assert_eq!(diff.signum(), correction.signum(), "empirical {diff} modelled {correction}");
}

#[test]
fn repetition_study_is_schedule_independent() {
    let (op, state) = variance_fixture();
    let obs = PreparedObservable::new(&state, &op, Grouping::Qwc, GroupWeight::Sum).unwrap();
    for s in Strategy::ALL {
        let a = repetition_study(&obs, s, 100, 50, 8, Exec::Sequential).unwrap();
        let b = repetition_study(&obs, s, 100, 50, 8, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
    assert!(repetition_study(&obs, Strategy::Uds, 100, 0, 8, Exec::Sequential).is_err());
}

#[test]
fn sampled_nuvqe_energy_exact_mode_and_identity_jastrow() {
    let h = h2();
    let state = h2_state();
    let (jhj, jj) = jastrow_pair(&h, 12);
    for grouping in [Grouping::None, Grouping::Qwc] {
        let exact = nuvqe_sampled_energy(&state, &jhj, &jj, grouping, None, 0).unwrap();
        let want = nuvqe_energy_from_operators(&state, &jhj, &jj).unwrap();
        assert!((exact - want).abs() < 1e-12);
    }

    let (ihi, ii) = conjugate_pair(&build_linear_jastrow(&JastrowParams::zeros(4)).unwrap(), &h).unwrap();
    let seed = 31;
    let sampled = nuvqe_sampled_energy(&state, &ihi, &ii, Grouping::Qwc, Some((Strategy::Wds, 5000)), seed).unwrap();
    let obs = PreparedObservable::new(&state, &h, Grouping::Qwc, GroupWeight::Sum).unwrap();
    let s = nuvqe::rng::derive_seed(seed, "numerator");
    let direct = obs.estimate(&obs.plan(Strategy::Wds, 5000, s).unwrap(), s).unwrap().estimate;
    assert!((sampled - direct).abs() < 1e-12);
}

#[test]
fn sampled_nuvqe_error_shrinks_with_shots() {
    let h = h2();
    let state = h2_state();
    let (jhj, jj) = jastrow_pair(&h, 12);
    let exact = nuvqe_energy_from_operators(&state, &jhj, &jj).unwrap();
    let median_error = |s_tot: u64| {
        let mut errs: Vec<f64> = (0..21)
            .map(|seed| {
                let e = nuvqe_sampled_energy(&state, &jhj, &jj, Grouping::Qwc, Some((Strategy::Wds, s_tot)), seed)
                    .unwrap();
                (e - exact).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[10]
    };
    assert!(median_error(10_000) < median_error(100));
}

#[test]
fn degenerate_sampled_denominator_is_an_error() {
    let h = PauliSum::from_labels(1, &[("Z", 1.0)]).unwrap();
    let p = JastrowParams::new(vec![1.0], vec![]).unwrap();
    let (jhj, jj) = conjugate_pair(&build_linear_jastrow(&p).unwrap(), &h).unwrap();
    let state = Statevector::zero(1).unwrap();
    let err = nuvqe_sampled_energy(&state, &jhj, &jj, Grouping::None, None, 0).unwrap_err();
    assert!(matches!(err, Error::DegenerateJastrow { .. }));
    let err = nuvqe_sampled_energy(&state, &jhj, &jj, Grouping::None, Some((Strategy::Uds, 100)), 0).unwrap_err();
    assert!(matches!(err, Error::DegenerateJastrow { .. }));
}
