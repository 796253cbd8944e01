//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! binary exits non-zero if any check fails.

use std::time::Instant;

use fpqft::angles::{alpha_from_theta_d1, ThetaAngles};
use fpqft::circuit::{build_alpha_circuit, build_theta_circuit, fidelity, simulate};
use fpqft::digitization::{build_statevector, exact_theta_angles, DEFAULT_MAX_QUBITS};
use fpqft::digitization_error::{b1_discrete, b1_poisson, digitization_deviation_report, MarginalizationQuery};
use fpqft::elliptic::{elliptic_e, elliptic_k};
use fpqft::fixed_point::{convergence_sweep, fixed_point_angle_table, SweepMode, SweepRow};
use fpqft::lattice::{det_ratio, det_ratio_limit, k_infinite_volume, periodic_k_row, schur_correction};
use fpqft::{Boundary, DigitizationSpec, KMode, LatticeSpec, Statevector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: fpqft::Error) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn random_state_fidelity() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 1.0f64;
    for trial in 0..100 {
        let q = 4 + trial % 9;
        let amps: Vec<f64> = (0..1usize << q).map(|_| rng.gen::<f64>()).collect();
        let state = Statevector::from_amplitudes(amps).and_then(|s| s.normalized()).map_err(err)?;
        let circuit = build_theta_circuit(&exact_theta_angles(&state), q).map_err(err)?;
        let prepared = simulate(&circuit, DEFAULT_MAX_QUBITS).map_err(err)?;
        worst = worst.min(fidelity(&state, &prepared).map_err(err)?);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst >= 1.0 - 1e-10, || format!("worst fidelity {worst:.3e}"))?;
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("100 random states on 4..12 qubits, worst 1-F = {:.1e}, {secs:.2} s", 1.0 - worst))
}

fn curve(rows: &[SweepRow<f64>], mode: SweepMode) -> Vec<f64> {
    rows.iter().filter(|r| r.mode == mode).map(|r| r.angle).collect()
}

fn monotone(v: &[f64]) -> bool {
    let up = v.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let down = v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    up || down
}

/// Slope and coefficient of determination of `ln|y|` against `x`.
fn log_linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

fn centre_angle_coarse() -> Check {
    let digit = DigitizationSpec::new(2, 3.5).map_err(err)?;
    let sizes: Vec<usize> = (4..=10).collect();
    let rows = convergence_sweep(0.3, &digit, &sizes, &SweepMode::ALL, DEFAULT_MAX_QUBITS).map_err(err)?;
    let exact = curve(&rows, SweepMode::ExactDigitized);
    let exact_inf = curve(&rows, SweepMode::ExactDigitizedInfiniteK);
    let fp = curve(&rows, SweepMode::FixedPointFiniteK);
    let fp_inf = curve(&rows, SweepMode::FixedPointInfiniteK);
    let alpha = curve(&rows, SweepMode::AlphaInfinity);
    ensure(exact.len() == sizes.len(), || "statevector rows missing".into())?;
    let a = alpha[0];
    ensure(alpha.iter().all(|v| *v == a), || "alpha_infinity varies with N".into())?;

    let gap = rel(*exact.last().unwrap(), a);
    ensure(gap <= 0.02, || format!("N=10 gap {gap:.3e}"))?;
    for (name, c) in [("exact", &exact), ("exact_inf", &exact_inf), ("fp", &fp), ("fp_inf", &fp_inf)] {
        ensure(monotone(c), || format!("{name} curve not monotone: {c:?}"))?;
    }
    // continuum curves close in on α∞; digitized curves settle within the gap band
    for (name, c) in [("fp", &fp), ("fp_inf", &fp_inf)] {
        let dist: Vec<f64> = c.iter().map(|v| (v - a).abs()).collect();
        ensure(dist.windows(2).all(|w| w[1] <= w[0] + 1e-12), || format!("{name} moves away from alpha"))?;
    }
    for (name, c) in [("exact", &exact), ("exact_inf", &exact_inf)] {
        // x̄ = N − ⌊N/2⌋ − 1 repeats in pairs, so compare two-site steps
        let steps: Vec<f64> = c.windows(3).map(|w| (w[2] - w[0]).abs()).collect();
        ensure(steps.windows(2).all(|w| w[1] <= w[0] + 1e-12), || format!("{name} steps grow: {steps:?}"))?;
        ensure(c.iter().skip(2).all(|v| rel(*v, a) <= 0.02), || format!("{name} outside 2% band"))?;
    }
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let mut slopes = Vec::new();
    for (name, f, i) in [("fixed-point", &fp, &fp_inf), ("exact", &exact, &exact_inf)] {
        let diff: Vec<f64> = f.iter().zip(i.iter()).map(|(p, q)| p - q).collect();
        ensure(diff.windows(2).all(|w| w[1].abs() < w[0].abs()), || format!("{name} K modes not converging: {diff:?}"))?;
        let (slope, r2) = log_linear_fit(&x, &diff);
        ensure(slope < 0.0 && r2 > 0.95, || format!("{name} K-mode gap not exponential: slope {slope}, r2 {r2}"))?;
        slopes.push(slope);
    }
    Ok(format!(
        "N=10 exact {:.6} vs alpha {:.6}, gap {:.2}%; K-mode gaps decay as exp({:.2}N), exp({:.2}N)",
        exact.last().unwrap(),
        a,
        100.0 * gap,
        slopes[0],
        slopes[1]
    ))
}

fn centre_angle_fine() -> Check {
    let digit = DigitizationSpec::new(3, 3.5).map_err(err)?;
    let rows = convergence_sweep(
        0.3,
        &digit,
        &[4, 5, 6],
        &[SweepMode::ExactDigitized, SweepMode::FixedPointFiniteK],
        DEFAULT_MAX_QUBITS,
    )
    .map_err(err)?;
    let exact = curve(&rows, SweepMode::ExactDigitized);
    let fp = curve(&rows, SweepMode::FixedPointFiniteK);
    let worst = exact.iter().zip(&fp).map(|(e, f)| rel(*e, *f)).fold(0.0, f64::max);
    ensure(exact.len() == 3, || "missing rows".into())?;
    ensure(worst <= 5e-5, || format!("worst relative difference {worst:.3e}"))?;
    Ok(format!("N=4,5,6 at 3 qubits/site, worst relative difference {worst:.2e}"))
}

fn infinite_volume_elements() -> Check {
    let mut worst = 0.0f64;
    for m in [0.3f64, 0.5, 1.0] {
        let row = periodic_k_row(4096, m, 1).map_err(err)?;
        // independent evaluation straight from K(p) and E(p)
        let s = (4.0 + m * m).sqrt();
        let p = 4.0 / (4.0 + m * m);
        let (kk, ee) = (elliptic_k(p).map_err(err)?, elliptic_e(p).map_err(err)?);
        let k00 = 2.0 * s / std::f64::consts::PI * ee;
        let k01 = s / (3.0 * std::f64::consts::PI) * (m * m * kk - (2.0 + m * m) * ee);
        let (c00, c01) = k_infinite_volume(m).map_err(err)?;
        for (a, b) in [(row[0], k00), (row[1], k01), (c00, k00), (c01, k01)] {
            worst = worst.max(rel(a, b));
        }
    }
    ensure(worst <= 1e-8, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("N=4096 vs elliptic forms at m=0.3,0.5,1.0, worst {worst:.1e}"))
}

fn determinant_ratio() -> Check {
    let mut worst = 0.0f64;
    for m in [0.3, 0.5, 1.0] {
        let (k00, k01) = k_infinite_volume(m).map_err(err)?;
        // determinants of the uniform tridiagonal blocks
        let mut dets = vec![1.0f64, k00];
        for n in 2..=64 {
            dets.push(k00 * dets[n - 1] - k01 * k01 * dets[n - 2]);
        }
        for x_bar in 1..=64 {
            let r = det_ratio(k00, k01, x_bar).map_err(err)?;
            worst = worst.max(rel(r, dets[x_bar - 1] / dets[x_bar]));
        }
    }
    ensure(worst <= 1e-12, || format!("worst relative error {worst:.3e}"))?;
    let (k00, k01) = k_infinite_volume(0.3).map_err(err)?;
    let limit_gap = rel(det_ratio(k00, k01, 60).map_err(err)?, det_ratio_limit(k00, k01).map_err(err)?);
    ensure(limit_gap <= 1e-10, || format!("x̄=60 is {limit_gap:.3e} from the limit"))?;
    Ok(format!("x̄ ≤ 64 worst {worst:.1e}; x̄=60 within {limit_gap:.1e} of the limit"))
}

fn schur_locality() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for boundary in [Boundary::Periodic, Boundary::Open] {
        for n in 2..=10 {
            for d in 1..=3usize {
                if d >= n {
                    continue;
                }
                let k = LatticeSpec::new(n, 0.3f64, boundary, Some(d))
                    .and_then(|s| s.preparation_matrix())
                    .map_err(err)?;
                for x in 0..n - 1 {
                    let corr = schur_correction(&k, x).map_err(err)?;
                    let lo = (x + 1).saturating_sub(d);
                    for i in 0..=x {
                        for j in 0..=x {
                            if i < lo || j < lo {
                                worst = worst.max(corr[(i, j)].abs());
                            }
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    ensure(worst < 1e-12, || format!("largest entry outside the trailing block {worst:.3e}"))?;
    Ok(format!("{cases} splittings, largest entry outside the trailing block {worst:.1e}"))
}

fn poisson_bound() -> Check {
    let (k00, k01) = k_infinite_volume(0.3).map_err(err)?;
    let mut worst_ratio = 0.0f64;
    let mut max_rel = Vec::new();
    for n_q in [2, 3, 4] {
        let digit = DigitizationSpec::new(n_q, 3.5).map_err(err)?;
        let mut largest = 0.0f64;
        for i in 0..50 {
            let phi = -3.5 + 7.0 * i as f64 / 49.0;
            let sum = b1_discrete(&MarginalizationQuery::full_register(phi, k00, k01, &digit)).map_err(err)?;
            for n_max in [0, 1, 3] {
                let p = b1_poisson(phi, k00, k01, digit.delta_phi(), n_max).map_err(err)?;
                // a few ulps of rounding on top of the analytic bound
                let allowed = p.bound + sum.bound + 16.0 * f64::EPSILON * p.value.abs();
                let gap = (sum.value - p.value).abs();
                ensure(gap <= allowed, || format!("nQ={n_q} phi={phi} n_max={n_max}: {gap:.3e} > {allowed:.3e}"))?;
                worst_ratio = worst_ratio.max(gap / allowed);
            }
            let continuum = b1_poisson(phi, k00, k01, digit.delta_phi(), 0).map_err(err)?;
            largest = largest.max(rel(sum.value, continuum.value));
        }
        max_rel.push(largest);
    }
    let report = digitization_deviation_report(0.3, 3.5, &[2, 3, 4]).map_err(err)?;
    let predicted = report[0].deviation / report[1].deviation;
    let measured = max_rel[0] / max_rel[1];
    ensure(predicted >= 100.0, || format!("predicted shrink {predicted:.1}"))?;
    ensure(measured >= 100.0, || format!("measured shrink {measured:.1}"))?;
    Ok(format!(
        "150 sums within bound (worst {:.4} of allowance); shrink 2->3 qubits: predicted {predicted:.0}, measured {measured:.0}",
        worst_ratio
    ))
}

fn control_locality() -> Check {
    let mut worst = 0.0f64;
    for (n, n_q, boundary) in [(5, 2, Boundary::Periodic), (6, 2, Boundary::Open), (4, 3, Boundary::Periodic)] {
        let digit = DigitizationSpec::new(n_q, 3.5).map_err(err)?;
        let k = LatticeSpec::new(n, 0.3f64, boundary, Some(1))
            .and_then(|s| s.preparation_matrix())
            .map_err(err)?;
        let table: fpqft::ThetaTable64 = exact_theta_angles(&build_statevector(&k, &digit, DEFAULT_MAX_QUBITS).map_err(err)?);
        for ell in 0..table.n_qubits() {
            let (x, p) = (ell / n_q, ell % n_q);
            let local_bits = n_q * x.min(1) + p;
            let mask = (1u64 << local_bits) - 1;
            for k in 0..(1u64 << ell) {
                worst = worst.max((table.theta(ell, k) - table.theta(ell, k & mask)).abs());
            }
        }
    }
    ensure(worst < 1e-10, || format!("largest change {worst:.3e}"))?;
    Ok(format!("largest change under distant control flips {worst:.1e} rad"))
}

fn gate_count_scaling() -> Check {
    let mut notes = Vec::new();
    for n_q in [2usize, 3] {
        let digit = DigitizationSpec::new(n_q, 3.5).map_err(err)?;
        let bound = 1usize << (2 * n_q);
        let mut stored = Vec::new();
        let mut gates = Vec::new();
        let sizes: Vec<usize> = (4..=40).step_by(4).collect();
        for &n in &sizes {
            let spec = LatticeSpec::periodic_d1(n, 0.3).map_err(err)?;
            let table = fixed_point_angle_table(&spec, &digit, KMode::FiniteN).map_err(err)?;
            let alpha = alpha_from_theta_d1(&table).map_err(err)?;
            let circuit = build_alpha_circuit(&alpha, n * n_q, n_q, 1).map_err(err)?;
            stored.push(table.stored_count());
            gates.push(circuit.len());
        }
        let step = sizes[1] - sizes[0];
        let gate_steps: Vec<usize> = gates.windows(2).map(|w| w[1] - w[0]).collect();
        ensure(gate_steps.iter().all(|s| *s == gate_steps[0]), || format!("gate count not linear: {gates:?}"))?;
        let per_site = gate_steps[0] / step;
        ensure(per_site <= bound, || format!("{per_site} gates per site exceeds 2^(2nQ) = {bound}"))?;
        for (i, &n) in sizes.iter().enumerate() {
            ensure(stored[i] <= bound * n, || format!("{} stored angles at N={n}", stored[i]))?;
            ensure(gates[i] <= bound * n, || format!("{} gates at N={n}", gates[i]))?;
        }
        ensure(stored.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= bound * step), || {
            format!("stored angles grow faster than linearly: {stored:?}")
        })?;
        notes.push(format!("nQ={n_q}: {per_site} gates/site (bound {bound})"));
    }
    Ok(notes.join(", "))
}

fn main() {
    let checks: [Criterion; 9] = [
        ("circuit exactness on random states", random_state_fidelity),
        ("centre angle, 2 qubits per site", centre_angle_coarse),
        ("centre angle, 3 qubits per site", centre_angle_fine),
        ("infinite-volume K elements", infinite_volume_elements),
        ("determinant ratio", determinant_ratio),
        ("Schur complement locality", schur_locality),
        ("Poisson remainder bound", poisson_bound),
        ("locality of controls", control_locality),
        ("gate-count scaling", gate_count_scaling),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
