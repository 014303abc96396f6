//! Witness-driven checks for the cutting algorithms: the per-proposition
//! counter bounds on constructed molecules, the G(q) values, certificate
//! arithmetic, and the exhaustive small-molecule master suite.

use cutting_algorithms::master::{at_least_g, g_squared};
use cutting_algorithms::{
    algorithm_transup, algorithm_up, check_transup_contract, check_up_contract,
    master_cut, select2, CutOutcome, MasterCase, MasterConfig,
};
use molecule::{ElementaryKind, HistoryBuilder, Molecule};
use num_bigint::BigUint;
use std::collections::BTreeSet;

/// The spec's frozen G(2): 5^10 * C(2,2) * (32 * 2^{3/2})^4 = 5^10 * 2^26.
#[test]
fn g_of_two_exact_value() {
    let expected: u64 = 655_360_000_000_000;
    assert!(at_least_g(expected, 2));
    assert!(!at_least_g(expected - 1, 2));
    let sq = g_squared(2);
    assert_eq!(sq, BigUint::from(expected) * BigUint::from(expected));
}

#[test]
fn g_of_one_is_zero() {
    // C(1,2) = 0
    assert_eq!(g_squared(1), BigUint::from(0u32));
    assert!(at_least_g(0, 1));
}

#[test]
fn up_full_two_atom_trace() {
    let m = HistoryBuilder::new(3).collide(0, 1).collide(1, 2).build();
    let out = algorithm_up(&m, 2).unwrap();
    assert_eq!(out.counters.four, 1);
    assert_eq!(out.counters.three, 1);
    check_up_contract(&m, &out).unwrap();
}

fn random_full_molecule(seed: u64, atoms: usize, gamma: usize) -> Molecule {
    cutting_algorithms::random_molecule(
        &cutting_algorithms::GeneratorParams::with_cycles(atoms, gamma),
        seed,
    )
    .unwrap()
}

#[test]
fn up_campaign_small() {
    // trimmed version of the acceptance campaign
    for seed in 0..300u64 {
        let atoms = 3 + (seed % 10) as usize;
        let gamma = (seed % 3) as usize;
        if gamma + 1 > atoms {
            continue;
        }
        let m = random_full_molecule(seed, atoms, gamma);
        let out = algorithm_up(&m, 2).unwrap();
        check_up_contract(&m, &out)
            .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", molecule::serialize::write_molecule(&m)));
    }
}

#[test]
fn down_campaign_small() {
    for seed in 0..150u64 {
        let atoms = 3 + (seed % 8) as usize;
        let gamma = (seed % 3) as usize;
        if gamma + 1 > atoms {
            continue;
        }
        let m = random_full_molecule(seed + 1000, atoms, gamma);
        let out = cutting_algorithms::algorithm_down(&m, 2).unwrap();
        out.validate(&m).unwrap();
        assert_eq!(out.counters.b33, 0);
        assert_eq!(out.counters.ff44, 0);
        assert_eq!(out.counters.four, 1, "full connected input: one {{4}}");
    }
}

/// The constructed TRANSUP witness: a path A of 8 atoms with four
/// tent atoms above it, each bonded to two A-atoms: |X_0^+(A)| = 4,
/// rho(A) = 0, so the bound demands at least one {33A}.
fn transup_witness() -> (Molecule, BTreeSet<u32>) {
    let mut b = HistoryBuilder::new(9);
    for i in 0..8 {
        b.push(i, i + 1, 1);
    }
    // tents
    b.push(0, 2, 1); // atom 8, children atoms 0 and 2
    b.push(1, 4, 1); // atom 9
    b.push(3, 6, 1); // atom 10
    b.push(5, 8, 1); // atom 11
    let m = b.build();
    let a: BTreeSet<u32> = (0..8).collect();
    (m, a)
}

#[test]
fn transup_witness_bound() {
    let (m, a) = transup_witness();
    assert!(m.validate().is_empty());
    assert_eq!(m.rho(&a), 0);
    let x0p = molecule::features::x0_plus(&m, &a);
    assert_eq!(x0p.len(), 4);
    assert!(molecule::features::is_transversal(&m, &a));
    let out = algorithm_transup(&m, &a, 2).unwrap();
    check_transup_contract(&m, &a, &out).unwrap();
    assert!(out.counters.a33 >= 1, "bound: >= |X0+|/2 - rho - 1 = 1");
}

#[test]
fn transup_single_atom_a_vacuous_bound() {
    // A = a single childless atom: X_0^+ may be empty; bound is vacuous but
    // the outcome must still be all-elementary.
    let m = HistoryBuilder::new(4)
        .collide(0, 1)
        .collide(1, 2)
        .collide(2, 3)
        .build();
    let a: BTreeSet<u32> = [0].into();
    let out = algorithm_transup(&m, &a, 2).unwrap();
    check_transup_contract(&m, &a, &out).unwrap();
}

#[test]
fn select2_trivial_and_distance2() {
    // proper tree with nothing to merge
    let m = HistoryBuilder::new(5)
        .collide(0, 1)
        .collide(1, 2)
        .collide(2, 3)
        .collide(3, 4)
        .build();
    let a = m.all_atoms();
    let empty = BTreeSet::new();
    let s = select2(&m, &a, &empty, &empty).unwrap();
    assert!(s.is_empty());

    // two "deg-3" markers at distance 2: merged along with the connector
    let z: BTreeSet<u32> = [0, 2].into();
    let s = select2(&m, &a, &z, &empty).unwrap();
    assert_eq!(s, [0, 1, 2].into());
    assert!(s.len() <= 10 * (z.len() + m.rho(&a).max(0) as usize));
}

#[test]
fn select2_cycle_self_merge() {
    // triangle + tail: Y breaks the cycle; the self-merge pulls the whole
    // cycle into S, certified against the rho budget
    let m = HistoryBuilder::new(4)
        .collide(0, 1) // 0
        .collide(1, 2) // 1
        .collide(0, 2) // 2 (closes the triangle)
        .collide(2, 3) // 3 tail
        .build();
    let a = m.all_atoms();
    assert_eq!(m.rho(&a), 1);
    let y: BTreeSet<u32> = [0].into();
    let z = BTreeSet::new();
    let s = select2(&m, &a, &z, &y).unwrap();
    // the cycle atoms all land in S
    assert!(s.is_superset(&[0, 1, 2].into()), "S = {s:?}");
    assert!(s.len() <= 10 * (y.len() + z.len() + m.rho(&a) as usize));
}

#[test]
fn maintrup_option1_no_weak_degeneracy() {
    let (m, a) = transup_witness();
    let out =
        cutting_algorithms::algorithm_maintrup(&m, &a, 2, cutting_algorithms::MaintrOption::One)
            .unwrap();
    out.validate(&m).unwrap();
    assert_eq!(out.counters.four, 1);
    assert_eq!(out.counters.b33, 0);
    assert_eq!(out.counters.ff44, 0);
    // rest of the components are {2}/{3}/{33A}
    assert_eq!(out.counters.triple_a, 0);
    assert_eq!(out.counters.triple_t, 0);
    cutting_algorithms::check_maintrup_contract(
        &m,
        &a,
        cutting_algorithms::MaintrOption::One,
        &out,
        2,
    )
    .unwrap();
}

#[test]
fn maintrup_option2_runs_and_validates() {
    let (m, a) = transup_witness();
    let out =
        cutting_algorithms::algorithm_maintrup(&m, &a, 2, cutting_algorithms::MaintrOption::Two)
            .unwrap();
    out.validate(&m).unwrap();
    cutting_algorithms::check_maintrup_contract(
        &m,
        &a,
        cutting_algorithms::MaintrOption::Two,
        &out,
        2,
    )
    .unwrap();
}

#[test]
fn maintrup_campaigns_with_weak_degeneracies() {
    use rand::{Rng, SeedableRng};
    let mut checked = 0;
    for seed in 0..200u64 {
        let atoms = 6 + (seed % 8) as usize;
        let gamma = 1 + (seed % 2) as usize;
        let params = cutting_algorithms::GeneratorParams {
            atoms,
            gamma,
            layers: 1,
            force_double_bond: false,
            force_long_bond_triangle: false,
            forbid_double_bond: true,
        };
        let Ok(mut m) = cutting_algorithms::random_molecule(&params, seed + 777) else {
            continue;
        };
        // random weak degeneracies
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let weak: Vec<u32> = m
            .atom_ids()
            .filter(|_| rng.random::<f64>() < 0.3)
            .collect();
        cutting_algorithms::runner::attach_weak_degeneracies(&mut m, &weak, &[], 2);
        // grow a transversal set from the earliest atom
        let order = m.effective_time_order();
        let Some(a) = molecule::features::grow_transversal(&m, order[0], 6) else {
            continue;
        };
        if m.components(&a).len() != 1 || a.len() == m.atom_count() {
            continue;
        }
        for option in [
            cutting_algorithms::MaintrOption::One,
            cutting_algorithms::MaintrOption::Two,
        ] {
            let out = cutting_algorithms::algorithm_maintrup(&m, &a, 2, option)
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            out.validate(&m)
                .unwrap_or_else(|e| panic!("seed {seed} {option:?}: {e}"));
            cutting_algorithms::check_maintrup_contract(&m, &a, option, &out, 2)
                .unwrap_or_else(|e| {
                    panic!(
                        "seed {seed} {option:?}: {e}\nA={a:?} weak={weak:?}\n{}",
                        molecule::serialize::write_molecule(&m)
                    )
                });
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} maintrup runs checked");
}

#[test]
fn certificate_exponent_example() {
    // d = 2, sigmas {eps, eps^{1+1/16}}: passes since 2 + 1/16 >= 1 + 1/30
    use molecule::{Excess, ExcessLedger};
    let mut ledger = ExcessLedger::default();
    ledger.entries.push(molecule::LedgerEntry {
        component: 0,
        kind: ElementaryKind::Four,
        tag: molecule::ExcessTag::DoubleRoot,
        sigma: Excess::eps_pow(1, 1),
    });
    ledger.entries.push(molecule::LedgerEntry {
        component: 1,
        kind: ElementaryKind::ThreeThreeA,
        tag: molecule::ExcessTag::Good,
        sigma: Excess::eps_pow(17, 16),
    });
    let outcome = CutOutcome {
        case: Some(MasterCase::Three),
        components: vec![],
        counters: Default::default(),
        ledger,
        branch: vec![],
        treat_33a_as_good: true,
    };
    // certificate arithmetic only (structure intentionally empty)
    assert!(outcome.verify_certificate(2).is_err()); // no {4} counted
    let product = outcome.ledger.product();
    assert_eq!(product.worst_case_eps_pow(), molecule::Rational::new(33, 16));
    assert!(
        product.worst_case_eps_pow()
            >= molecule::Rational::from_integer(1) + molecule::Rational::new(1, 30)
    );
}

#[test]
fn master_simple_case_strong_degeneracy() {
    // a molecule with gamma = 4 and an attached strong-degeneracy marker on
    // a primitive pair: case 1 certificate
    let mut m = random_full_molecule(11, 10, 4);
    // find a primitive pair
    let mut pair = None;
    'outer: for a in m.atom_ids() {
        for c in m.children(a).unwrap() {
            if molecule::features::is_primitive(&m, a, c) {
                pair = Some((a, c));
                break 'outer;
            }
        }
    }
    let (p, c) = pair.expect("some primitive pair exists");
    cutting_algorithms::master::attach_strong_degeneracy(&mut m, p, c);
    let cfg = MasterConfig::with_test_thresholds(2, 3);
    let outs = master_cut(&m, &cfg).unwrap();
    assert!(!outs.is_empty());
    for out in &outs {
        assert_eq!(out.case, Some(MasterCase::One));
        out.verify(&m, 2).unwrap();
    }
}

#[test]
fn master_simple_case_double_bond() {
    let params = cutting_algorithms::GeneratorParams {
        atoms: 10,
        gamma: 4,
        layers: 1,
        force_double_bond: true,
        force_long_bond_triangle: false,
        forbid_double_bond: false,
    };
    let m = cutting_algorithms::random_molecule(&params, 21).unwrap();
    let cfg = MasterConfig::with_test_thresholds(2, 3);
    let outs = master_cut(&m, &cfg).unwrap();
    for out in &outs {
        assert_eq!(out.case, Some(MasterCase::Three));
        out.verify(&m, 2).unwrap();
    }
}

#[test]
fn exhaustive_small_molecules_master() {
    // all full connected molecules with <= 6 atoms and gamma in {3,4,5}
    // (the precondition Gamma < gamma < 2 Gamma admits no integer Gamma for
    // gamma <= 2), up to isomorphism
    let mut total = 0;
    for atoms in 2..=6usize {
        for gamma in 3..=5usize {
            if gamma + 1 > atoms {
                continue;
            }
            for m in cutting_algorithms::generate::enumerate_small_molecules(atoms, gamma) {
                total += 1;
                let cfg = MasterConfig {
                    d: 2,
                    gamma_big: gamma as i64 - 1,
                    test: Some(cutting_algorithms::master::TestThresholds::small()),
                };
                let outs = master_cut(&m, &cfg).unwrap_or_else(|e| {
                    panic!(
                        "master failed on {} atoms gamma {gamma}: {e}\n{}",
                        atoms,
                        molecule::serialize::write_molecule(&m)
                    )
                });
                assert!(!outs.is_empty());
                for out in &outs {
                    out.verify_desk(&m, 2).unwrap_or_else(|e| {
                        panic!(
                            "invalid certificate ({e}) on:\n{}\n{}",
                            molecule::serialize::write_molecule(&m),
                            out.dump(1e-2)
                        )
                    });
                }
            }
        }
    }
    assert!(total > 10, "enumerated only {total} molecules");
}
