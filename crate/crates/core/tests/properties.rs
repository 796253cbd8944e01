use std::f64::consts::FRAC_PI_4;

use fpqft::angles::{alpha_from_theta_d1, LocalAngleTable, ThetaAngles, ThetaTable};
use fpqft::circuit::{build_alpha_circuit, build_theta_circuit, fidelity, simulate};
use fpqft::digitization::{build_statevector, exact_theta_angles, DEFAULT_MAX_QUBITS};
use fpqft::fixed_point::{exact_angle_table, fixed_point_angle_table};
use fpqft::lattice::{k_infinite_volume, periodic_k_row};
use fpqft::{Boundary, DigitizationSpec, KMode, LatticeSpec, Statevector};
use proptest::prelude::*;

fn nonnegative_state() -> impl Strategy<Value = Statevector<f64>> {
    (1usize..=8).prop_flat_map(|q| {
        prop::collection::vec(0.0f64..1.0, 1 << q).prop_filter_map("zero vector", |amps| {
            Statevector::from_amplitudes(amps).ok()?.normalized().ok()
        })
    })
}

fn ground_table(n: usize, n_q: usize) -> (Statevector<f64>, ThetaTable<f64>) {
    let digit = DigitizationSpec::new(n_q, 3.5).unwrap();
    let k = LatticeSpec::periodic_d1(n, 0.3).unwrap().preparation_matrix().unwrap();
    let state = build_statevector(&k, &digit, DEFAULT_MAX_QUBITS).unwrap();
    let table = exact_theta_angles(&state);
    (state, table)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_state_round_trip(state in nonnegative_state()) {
        let table = exact_theta_angles(&state);
        let circuit = build_theta_circuit(&table, state.n_qubits()).unwrap();
        let prepared = simulate(&circuit, DEFAULT_MAX_QUBITS).unwrap();
        for (a, b) in state.amplitudes().iter().zip(prepared.amplitudes()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_is_product_of_rotations(state in nonnegative_state()) {
        let table = exact_theta_angles(&state);
        let q = state.n_qubits();
        for (index, amp) in state.amplitudes().iter().enumerate() {
            let product: f64 = (0..q)
                .map(|ell| {
                    let theta = table.theta(ell, (index >> (q - ell)) as u64);
                    if (index >> (q - 1 - ell)) & 1 == 1 { theta.sin() } else { theta.cos() }
                })
                .product();
            prop_assert!((product - amp).abs() < 1e-12);
        }
    }

    #[test]
    fn same_target_gates_commute(state in nonnegative_state(), seed in any::<u64>()) {
        let q = state.n_qubits();
        let table = exact_theta_angles(&state);
        let reference = simulate(&build_theta_circuit(&table, q).unwrap(), DEFAULT_MAX_QUBITS).unwrap();
        let mut circuit = build_theta_circuit(&table, q).unwrap();
        // shuffle within each block of rotations sharing a target
        let mut s = seed;
        let mut start = 0;
        for ell in 0..q {
            let len = 1usize << ell;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                circuit.swap_gates(start + i, start + j);
            }
            start += len;
        }
        let shuffled = simulate(&circuit, DEFAULT_MAX_QUBITS).unwrap();
        for (a, b) in reference.amplitudes().iter().zip(shuffled.amplitudes()) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn random_angles_preserve_norm(angles in prop::collection::vec(-3.2f64..3.2, 63)) {
        let levels: Vec<Vec<f64>> = (0..6).map(|ell| angles[(1 << ell) - 1..(1 << (ell + 1)) - 1].to_vec()).collect();
        let table = ThetaTable::from_levels(levels).unwrap();
        let state = simulate(&build_theta_circuit(&table, 6).unwrap(), DEFAULT_MAX_QUBITS).unwrap();
        prop_assert!((state.norm() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn exact_ground_state_via_site_wise_circuit() {
    for (n, n_q) in [(3, 2), (5, 2), (3, 3)] {
        let (state, table) = ground_table(n, n_q);
        let local = LocalAngleTable::from_dense_d1(&table, n_q, 1e-10).unwrap();
        let alpha = alpha_from_theta_d1(&local).unwrap();
        let q = n * n_q;
        let site_wise = build_alpha_circuit(&alpha, q, n_q, 1).unwrap();
        let cascade = build_theta_circuit(&table, q).unwrap();
        assert!(site_wise.len() < cascade.len());
        assert!(site_wise.gates().iter().all(|g| g.controls.len() < 2 * n_q));
        let f = fidelity(&state, &simulate(&site_wise, DEFAULT_MAX_QUBITS).unwrap()).unwrap();
        assert!(f >= 1.0 - 1e-10, "N={n} nQ={n_q}: {f}");
    }
}

#[test]
fn fixed_point_cascade_and_site_wise_circuits_agree() {
    let digit = DigitizationSpec::new(2, 3.5).unwrap();
    let spec = LatticeSpec::periodic_d1(5, 0.3f64).unwrap();
    let table = fixed_point_angle_table(&spec, &digit, KMode::FiniteN).unwrap();
    let cascade = simulate(&build_theta_circuit(&table, 10).unwrap(), DEFAULT_MAX_QUBITS).unwrap();
    let alpha = alpha_from_theta_d1(&table).unwrap();
    let site_wise = simulate(&build_alpha_circuit(&alpha, 10, 2, 1).unwrap(), DEFAULT_MAX_QUBITS).unwrap();
    for (a, b) in cascade.amplitudes().iter().zip(site_wise.amplitudes()) {
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn mirrored_controls_give_complementary_angles() {
    let (_, exact) = ground_table(4, 2);
    let digit = DigitizationSpec::new(2, 3.5).unwrap();
    let spec = LatticeSpec::periodic_d1(4, 0.3).unwrap();
    let fixed = fixed_point_angle_table(&spec, &digit, KMode::FiniteN).unwrap();
    for ell in 0..8 {
        let all = (1u64 << ell) - 1;
        for k in 0..(1u64 << ell) {
            let e = exact.theta(ell, k) + exact.theta(ell, all ^ k);
            let f = fixed.theta(ell, k) + fixed.theta(ell, all ^ k);
            assert!((e - 2.0 * FRAC_PI_4).abs() < 1e-12, "exact ell={ell} k={k}");
            assert!((f - 2.0 * FRAC_PI_4).abs() < 1e-12, "fixed ell={ell} k={k}");
        }
    }
}

#[test]
fn finest_qubit_tends_to_even_split() {
    let mut previous = (f64::INFINITY, f64::INFINITY);
    let mut first = None;
    for n_q in 2..=4 {
        let (state, table) = ground_table(2, n_q);
        let ell = 2 * n_q - 1;
        let edge = (table.theta(ell, 0) - FRAC_PI_4).abs();
        // probability-weighted over all control strings
        let probs: Vec<f64> = state.amplitudes().iter().map(|a| a * a).collect();
        let weighted: f64 = (0..1u64 << ell)
            .map(|k| {
                let w = probs[2 * k as usize] + probs[2 * k as usize + 1];
                w * (table.theta(ell, k) - FRAC_PI_4).abs()
            })
            .sum();
        assert!(edge < previous.0 && weighted < previous.1, "nQ={n_q}");
        previous = (edge, weighted);
        first.get_or_insert(weighted);
    }
    assert!(previous.1 < 0.25 * first.unwrap());
}

#[test]
fn fixed_point_angles_track_exact_angles() {
    let digit = DigitizationSpec::new(2, 3.5).unwrap();
    let spec = LatticeSpec::periodic_d1(8, 0.3f64).unwrap();
    let exact = exact_angle_table(&spec, &digit, DEFAULT_MAX_QUBITS).unwrap();
    let fixed = fixed_point_angle_table(&spec, &digit, KMode::FiniteN).unwrap();
    let mut worst_abs = 0.0f64;
    let mut worst_rel = 0.0f64;
    for ell in 0..16 {
        for k in 0..(1u64 << ell) {
            let (e, f) = (exact.theta(ell, k), fixed.theta(ell, k));
            worst_abs = worst_abs.max((e - f).abs());
            if e >= 0.1 {
                worst_rel = worst_rel.max(((e - f) / e).abs());
            }
        }
    }
    assert!(worst_rel <= 0.05, "{worst_rel}");
    assert!(worst_abs <= 0.02, "{worst_abs}");
}

#[test]
fn long_range_elements_decay_exponentially() {
    let m = 0.3f64;
    let row = periodic_k_row(4096, m, 80).unwrap();
    // |K_0r| e^{mr} r^{3/2} is flat at large r
    let scaled: Vec<f64> = (5..=75).map(|r| row[r].abs() * (m * r as f64).exp() * (r as f64).powf(1.5)).collect();
    let mid = scaled[scaled.len() / 2];
    assert!(scaled.iter().all(|s| (s / mid - 1.0).abs() < 0.2));
    assert!(row[5..=75].iter().all(|v| *v < 0.0));
}

#[test]
fn finite_volume_corrections_decay_with_mass() {
    for (m, sizes) in [(0.3f64, 24..=64), (0.6, 12..=36)] {
        let (k00, _) = k_infinite_volume(m).unwrap();
        let points: Vec<(f64, f64)> = sizes
            .step_by(4)
            .map(|n| (n as f64, (periodic_k_row(n, m, 0).unwrap()[0] - k00).abs().ln()))
            .collect();
        let len = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / len;
        let my = points.iter().map(|p| p.1).sum::<f64>() / len;
        let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + m).abs() < 0.15 * m, "m={m}: slope {slope}");
    }
}

#[test]
fn open_and_periodic_boundaries_both_prepare() {
    let digit = DigitizationSpec::new(2, 3.5).unwrap();
    for boundary in [Boundary::Open, Boundary::Periodic] {
        let spec = LatticeSpec::new(4, 0.5, boundary, Some(1)).unwrap();
        let k = spec.preparation_matrix().unwrap();
        let state = build_statevector(&k, &digit, DEFAULT_MAX_QUBITS).unwrap();
        let table = exact_angle_table(&spec, &digit, DEFAULT_MAX_QUBITS).unwrap();
        let local = LocalAngleTable::from_dense_d1(&table, 2, 1e-10).unwrap();
        let circuit = build_alpha_circuit(&alpha_from_theta_d1(&local).unwrap(), 8, 2, 1).unwrap();
        let f = fidelity(&state, &simulate(&circuit, DEFAULT_MAX_QUBITS).unwrap()).unwrap();
        assert!(f >= 1.0 - 1e-10);
    }
}
