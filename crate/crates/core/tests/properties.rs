use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

use qew_core::networks::{entanglement_swap_all, generate_cluster, generate_cluster_channel_first, CpGate, NetworkSpec, Source};
use qew_core::oracle::{ppt_check, OracleWitness};
use qew_core::states::{apply_blind_channel, build_state, werner_mix};
use qew_core::witnesses::{
    battery_ghz, critical_visibility, evaluate_battery, witness_epr, witness_ghz, BatteryMode, Tolerances,
    VisibilityKind,
};
use qew_core::{BlindChannel, StateSpec};

fn channel(sites: usize) -> impl Strategy<Value = BlindChannel> {
    prop::collection::vec((0.01f64..1.0, prop::collection::vec((0.0..2.0 * PI, 0.0..2.0 * PI), sites)), 1..4)
        .prop_map(|terms| {
            let total: f64 = terms.iter().map(|t| t.0).sum();
            let terms: Vec<_> = terms.into_iter().map(|(p, ph)| (p / total, ph)).collect();
            BlindChannel::qubit(&terms).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blind_channels_keep_populations_and_shrink_coherences(
        (n, theta, ch) in (2usize..5).prop_flat_map(|n| (Just(n), 0.0..PI, channel(n)))
    ) {
        let rho = build_state::<f64>(&StateSpec::ghz(n, theta)).unwrap();
        let out = apply_blind_channel(&rho, &ch).unwrap();
        prop_assert!(out.invariants().holds());
        let dim = 1usize << n;
        for r in 0..dim {
            prop_assert!((out.entry(r, r) - rho.entry(r, r)).norm() < 1e-12);
            for c in 0..dim {
                prop_assert!(out.entry(r, c).norm() <= rho.entry(r, c).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn ghz_witness_sign_matches_coherence(n in 2usize..6, theta in 0.0..FRAC_PI_2, ch in channel(5)) {
        let rho = build_state::<f64>(&StateSpec::ghz(n, theta)).unwrap();
        let terms: Vec<_> = ch.terms().iter().map(|t| (t.p, t.phases[..n].iter().map(|v| (v[0], v[1])).collect())).collect();
        let img = apply_blind_channel(&rho, &BlindChannel::qubit(&terms).unwrap()).unwrap();
        let w = witness_ghz(&img, &Tolerances::default()).unwrap();
        let coh = img.entry(0, (1 << n) - 1).norm();
        prop_assert!((w.lhs - 2.0 * coh).abs() < 1e-12);
        prop_assert!(w.iff_valid);
        prop_assert_eq!(w.verdict.is_entangled(), coh > 0.5e-9);
    }

    #[test]
    fn epr_verdict_agrees_with_ppt_under_white_noise(theta in 0.05..FRAC_PI_2 - 0.05, v in 0.0..1.0f64, ch in channel(2)) {
        let rho = build_state::<f64>(&StateSpec::epr(theta)).unwrap();
        let noisy = werner_mix(&apply_blind_channel(&rho, &ch).unwrap(), v).unwrap();
        let w = witness_epr(&noisy, &Tolerances::default()).unwrap();
        let p = ppt_check(&noisy).unwrap();
        // Sound always; far from the boundary the two criteria agree.
        if w.verdict.is_entangled() {
            prop_assert!(!p.ppt);
        }
        if p.min_eigenvalue < -1e-6 && w.iff_valid {
            prop_assert!(w.verdict.is_entangled());
        }
    }

    #[test]
    fn ghz_battery_fails_once_dephased(n in 3usize..5, theta in 0.2..FRAC_PI_2 - 0.2) {
        let rho = build_state::<f64>(&StateSpec::ghz(n, theta)).unwrap();
        let b = battery_ghz(n, BatteryMode::WithoutCompanions).unwrap();
        prop_assert!(evaluate_battery(&rho, &b).unwrap().pass);
        prop_assert!(!evaluate_battery(&rho.dephased(), &b).unwrap().pass);
    }

    #[test]
    fn visibilities_are_nonincreasing(x in 0.0..0.5f64, dx in 0.0..0.1f64) {
        let y = (x + dx).min(0.5);
        for k in VisibilityKind::ALL {
            let a = critical_visibility(x, k).unwrap();
            let b = critical_visibility(y, k).unwrap();
            prop_assert!(b <= a + 1e-15);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn swap_branch_probabilities_sum_to_one(t1 in 0.1..1.4f64, t2 in 0.1..1.4f64) {
        let a = build_state::<f64>(&StateSpec::epr(t1)).unwrap();
        let b = build_state::<f64>(&StateSpec::epr(t2)).unwrap();
        let all = entanglement_swap_all(&a, &b, 1e-8).unwrap();
        let total: f64 = all.iter().map(|r| r.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for r in &all {
            prop_assert!(r.state.invariants().holds());
            let c = r.state.entry(0, 3).norm();
            let expected = t1.sin() * t1.cos() * t2.sin() * t2.cos() / (2.0 * r.probability);
            prop_assert!((c - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn gates_and_channels_commute(theta in 0.1..3.0f64, ch in channel(4)) {
        let spec = NetworkSpec {
            parties: vec!["A".into(), "B".into(), "C".into()],
            sources: vec![
                Source { state: StateSpec::epr(0.7), owners: vec!["A".into(), "B".into()] },
                Source { state: StateSpec::epr(0.4), owners: vec!["B".into(), "C".into()] },
            ],
            cp_gates: vec![CpGate { party: "B".into(), theta, qubits: [1, 2] }],
        };
        let a = generate_cluster::<f64>(&spec, &ch).unwrap();
        let b = generate_cluster_channel_first::<f64>(&spec, &ch).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }
}

#[test]
fn oracle_samples_are_valid_states() {
    for w in [
        OracleWitness::Epr,
        OracleWitness::Ghz { n: 4 },
        OracleWitness::W,
        OracleWitness::Qudit { n: 2, d: 3 },
        OracleWitness::Qudit { n: 3, d: 3 },
    ] {
        for i in 0..20 {
            let rho = w.sample(4, 99, i).unwrap();
            let inv = rho.invariants();
            assert!(inv.holds(), "{w:?} sample {i}: {inv:?}");
            assert!(w.lhs(&rho).unwrap() <= w.bound() + 1e-9);
        }
    }
}
