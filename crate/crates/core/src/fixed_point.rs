//! Fixed-point angles from localized effective operators.
//!
//! Sites below the rotation site are integrated out as continuous,
//! untruncated Gaussian variables. For a nearest-neighbour `K` the result is
//! a two-site weight
//!
//! ```text
//! Γ²_eff ∝ exp(−K₀₀ φ_{x−1}² − 2K₀₁ φ_{x−1} φ_x − (K₀₀ − K₀₁² ρ(x̄)) φ_x²)
//! ```
//!
//! with `ρ(x̄) = det K_{x̄−1} / det K_{x̄}` and `x̄ = N − (x + 1)`. The θ-angle
//! on a qubit of site `x` is the arctangent of the square root of the ratio
//! of this weight summed over the still-digitized lower bits of site `x`.
//! Longer-range bands use the general Schur complement instead.

use std::collections::HashMap;

use crate::angles::{LocalAngleTable, SiteAngles};
use crate::digitization::{exact_theta_angles, marginal_probability, DigitizationSpec, build_statevector};
use crate::error::{Error, Result};
use crate::lattice::{
    det_ratio_recurrence, det_ratio_limit, k_infinite_volume, k_infinite_volume_row, periodic_k_row,
    schur_effective, truncate_band_chain, Boundary, KMatrix, LatticeSpec,
};
use crate::scalar::{fmt17, Real};

/// Number of continuous sites integrated out below the rotation site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarginalizedSites {
    Finite(usize),
    Infinite,
}

/// Local two-site weight left after integrating out the trailing sites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveOperator<T> {
    /// Coefficient of `φ_{x−1}²`; cancels in every angle.
    pub c_prev: T,
    /// Coefficient of `φ_{x−1} φ_x`.
    pub c_cross: T,
    /// Coefficient of `φ_x²`.
    pub c_diag: T,
    pub x_bar: MarginalizedSites,
}

/// Nearest-neighbour effective operator for uniform couplings `K₀₀`, `K₀₁`.
///
/// `Finite(0)` means nothing is integrated out and leaves `c_diag = K₀₀`.
pub fn effective_gamma_sq<T: Real>(k00: T, k01: T, x_bar: MarginalizedSites) -> Result<EffectiveOperator<T>> {
    let ratio = match x_bar {
        MarginalizedSites::Finite(0) => T::zero(),
        MarginalizedSites::Finite(n) => det_ratio_recurrence(k00, k01, n)?,
        MarginalizedSites::Infinite => det_ratio_limit(k00, k01)?,
    };
    Ok(EffectiveOperator {
        c_prev: k00,
        c_cross: k01 + k01,
        c_diag: k00 - k01 * k01 * ratio,
        x_bar,
    })
}

/// General local weight `exp(−diag·φ_x² − Σᵢ couplings[i]·φ_{x−1−i}·φ_x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowOperator<T> {
    pub diag: T,
    /// `couplings[i]` multiplies `φ_{x−1−i} φ_x`.
    pub couplings: Vec<T>,
}

impl<T: Real> From<&EffectiveOperator<T>> for WindowOperator<T> {
    fn from(eff: &EffectiveOperator<T>) -> Self {
        Self {
            diag: eff.c_diag,
            couplings: vec![eff.c_cross],
        }
    }
}

impl<T: Real> WindowOperator<T> {
    /// Read the weight of site `x` from an effective exponent matrix on sites `0..=x`.
    pub fn from_effective_matrix(m: &crate::linalg::Matrix<T>, x: usize, reach: usize) -> Self {
        let couplings = (0..reach.min(x)).map(|i| m[(x, x - 1 - i)] + m[(x, x - 1 - i)]).collect();
        Self {
            diag: m[(x, x)],
            couplings,
        }
    }

    fn key(&self) -> Vec<u64> {
        std::iter::once(self.diag)
            .chain(self.couplings.iter().copied())
            .map(|v| v.as_f64().to_bits())
            .collect()
    }
}

/// Inner position `p` of qubit `ell` on site `x`, checked.
fn inner_position(x: usize, ell: usize, n_q: usize) -> Result<usize> {
    if ell / n_q != x {
        return Err(Error::Index(format!(
            "qubit {ell} lies on site {}, not site {x}",
            ell / n_q
        )));
    }
    Ok(ell % n_q)
}

/// Angle for the target at inner position `p` given the window field values.
///
/// `previous[i]` is `φ_{x−1−i}`; `inner` holds the `p` already-set bits of site `x`.
fn window_theta<T: Real>(
    op: &WindowOperator<T>,
    previous: &[T],
    p: usize,
    inner: usize,
    digit: &DigitizationSpec<T>,
    samples: &[T],
) -> T {
    let b = digit.n_q() - 1 - p;
    let lin: T = op
        .couplings
        .iter()
        .zip(previous)
        .map(|(c, phi)| *c * *phi)
        .sum();
    let log_weight = |q: T| -lin * q - op.diag * q * q;
    let log_sum = |base: usize| -> T {
        let logs: Vec<T> = (0..(1usize << b)).map(|j| log_weight(samples[base + j])).collect();
        let peak = logs.iter().copied().fold(T::neg_infinity(), T::max);
        peak + logs.iter().map(|l| (*l - peak).exp()).sum::<T>().ln()
    };
    let den = log_sum(inner << (b + 1));
    let num = log_sum((inner << (b + 1)) + (1 << b));
    ((num - den) * T::lit(0.5)).exp().atan()
}

/// Fixed-point `θ^x_{ℓ,k}` for a nearest-neighbour effective operator.
///
/// Only the low `n_q + p` bits of `k` are read: the previous site's address
/// followed by the `p` inner bits of site `x`. Site 0 has no previous site.
pub fn fixed_point_theta<T: Real>(
    x: usize,
    ell: usize,
    k: u64,
    eff: &EffectiveOperator<T>,
    digit: &DigitizationSpec<T>,
) -> Result<T> {
    let n_q = digit.n_q();
    let p = inner_position(x, ell, n_q)?;
    let inner = (k & ((1u64 << p) - 1)) as usize;
    let samples = digit.samples();
    let op = WindowOperator::from(eff);
    let previous = if x == 0 {
        Vec::new()
    } else {
        let kappa = ((k >> p) & ((1u64 << n_q) - 1)) as usize;
        vec![samples[kappa]]
    };
    let op = if x == 0 {
        WindowOperator {
            diag: op.diag,
            couplings: Vec::new(),
        }
    } else {
        op
    };
    Ok(window_theta(&op, &previous, p, inner, digit, &samples))
}

/// Source of the nearest-neighbour couplings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KMode {
    /// Elements of `K` for the actual lattice size.
    FiniteN,
    /// Infinite-volume closed-form elements.
    InfiniteVolume,
}

fn site_angles<T: Real>(
    op: &WindowOperator<T>,
    x: usize,
    reach: usize,
    digit: &DigitizationSpec<T>,
) -> Result<SiteAngles<T>> {
    let n_q = digit.n_q();
    let samples = digit.samples();
    let control_sites = x.min(reach);
    let site_mask = (1usize << n_q) - 1;
    let levels = (0..n_q)
        .map(|p| {
            let mut previous = vec![T::zero(); control_sites];
            (0..(1usize << (n_q * control_sites + p)))
                .map(|local| {
                    let inner = local & ((1 << p) - 1);
                    for (i, phi) in previous.iter_mut().enumerate() {
                        *phi = samples[(local >> (p + i * n_q)) & site_mask];
                    }
                    window_theta(op, &previous, p, inner, digit, &samples)
                })
                .collect()
        })
        .collect();
    SiteAngles::new(n_q, control_sites, levels)
}

fn assemble<T: Real>(
    n_sites: usize,
    reach: usize,
    digit: &DigitizationSpec<T>,
    ops: impl Iterator<Item = Result<WindowOperator<T>>>,
) -> Result<LocalAngleTable<T>> {
    let mut index: HashMap<(usize, Vec<u64>), usize> = HashMap::new();
    let mut classes = Vec::new();
    let mut site_class = Vec::with_capacity(n_sites);
    for (x, op) in ops.enumerate() {
        let op = op?;
        let key = (x.min(reach), op.key());
        let id = match index.get(&key) {
            Some(&id) => id,
            None => {
                classes.push(site_angles(&op, x, reach, digit)?);
                index.insert(key, classes.len() - 1);
                classes.len() - 1
            }
        };
        site_class.push(id);
    }
    LocalAngleTable::new(n_sites, digit.n_q(), reach, site_class, classes)
}

/// Nearest-neighbour couplings `(K₀₀, K₀₁)` for a periodic lattice in the given mode.
pub fn nearest_neighbour_couplings<T: Real>(n_sites: usize, mass: T, k_mode: KMode) -> Result<(T, T)> {
    match k_mode {
        KMode::FiniteN => {
            let row = periodic_k_row(n_sites, mass, 1)?;
            Ok((row[0], row[1]))
        }
        KMode::InfiniteVolume => k_infinite_volume(mass),
    }
}

/// Fixed-point angle table for the whole lattice, with the default memory guard.
pub fn fixed_point_angle_table<T: Real>(
    spec: &LatticeSpec<T>,
    digit: &DigitizationSpec<T>,
    k_mode: KMode,
) -> Result<LocalAngleTable<T>> {
    fixed_point_angle_table_guarded(spec, digit, k_mode, crate::digitization::DEFAULT_MAX_QUBITS)
}

/// Fixed-point angle table.
///
/// A periodic nearest-neighbour lattice uses the closed-form determinant
/// ratio. Any other band or boundary goes through [`schur_effective`] on the
/// chain-truncated `K`. The per-site window of `n_q·(d+1)` qubits is checked
/// against `max_qubits`.
pub fn fixed_point_angle_table_guarded<T: Real>(
    spec: &LatticeSpec<T>,
    digit: &DigitizationSpec<T>,
    k_mode: KMode,
    max_qubits: usize,
) -> Result<LocalAngleTable<T>> {
    let reach = spec.band_distance().ok_or_else(|| {
        Error::Contract("fixed-point angles need a band-truncated K".into())
    })?;
    let n = spec.n_sites();
    let window = digit.n_q() * (reach + 1);
    if window > max_qubits {
        return Err(Error::Resource(format!(
            "a {window}-qubit local window exceeds the {max_qubits}-qubit limit"
        )));
    }

    if reach == 1 && spec.boundary() == Boundary::Periodic {
        let (k00, k01) = nearest_neighbour_couplings(n, spec.mass(), k_mode)?;
        let ops = (0..n).map(|x| {
            effective_gamma_sq(k00, k01, MarginalizedSites::Finite(n - x - 1))
                .map(|eff| WindowOperator::from(&eff))
        });
        return assemble(n, reach, digit, ops);
    }

    let k = match k_mode {
        KMode::FiniteN => spec.preparation_matrix()?,
        KMode::InfiniteVolume => {
            if spec.boundary() == Boundary::Open {
                return Err(Error::Contract(
                    "infinite-volume couplings are translation invariant; use a periodic lattice".into(),
                ));
            }
            let row = k_infinite_volume_row(spec.mass(), reach)?;
            let full = KMatrix::from_matrix(
                crate::linalg::Matrix::from_fn(n, n, |i, j| {
                    row.get(i.abs_diff(j)).copied().unwrap_or_else(T::zero)
                }),
                Boundary::Open,
            )?;
            truncate_band_chain(&full, reach)?
        }
    };
    let ops = (0..n).map(|x| -> Result<WindowOperator<T>> {
        if x + 1 == n {
            return Ok(WindowOperator::from_effective_matrix(k.as_matrix(), x, reach));
        }
        let m = schur_effective(&k, x)?;
        Ok(WindowOperator::from_effective_matrix(&m, x, reach))
    });
    assemble(n, reach, digit, ops)
}

/// Curves of the lattice-centre angle study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepMode {
    /// Full digitized statevector with finite-size `K`.
    ExactDigitized,
    /// Full digitized statevector with infinite-volume `K₀₀`, `K₀₁`.
    ExactDigitizedInfiniteK,
    /// Continuous trailing sites, finite-size `K`.
    FixedPointFiniteK,
    /// Continuous trailing sites, infinite-volume `K`, finite `x̄`.
    FixedPointInfiniteK,
    /// Infinite-volume `K` and `x̄ → ∞`.
    AlphaInfinity,
}

impl SweepMode {
    pub const ALL: [SweepMode; 5] = [
        SweepMode::ExactDigitized,
        SweepMode::ExactDigitizedInfiniteK,
        SweepMode::FixedPointFiniteK,
        SweepMode::FixedPointInfiniteK,
        SweepMode::AlphaInfinity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepMode::ExactDigitized => "exact_digitized",
            SweepMode::ExactDigitizedInfiniteK => "exact_digitized_infinite_k",
            SweepMode::FixedPointFiniteK => "fixed_point_finite_k",
            SweepMode::FixedPointInfiniteK => "fixed_point_infinite_k",
            SweepMode::AlphaInfinity => "alpha_infinity",
        }
    }

    pub fn needs_statevector(self) -> bool {
        matches!(self, SweepMode::ExactDigitized | SweepMode::ExactDigitizedInfiniteK)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub n_sites: usize,
    pub mode: SweepMode,
    pub angle: T,
}

/// Qubit index and control string of the lattice-centre angle: last qubit
/// of site `⌊N/2⌋`, every control reading zero (`φ = +φ_max` upstream).
pub fn center_angle_address(n_sites: usize, n_q: usize) -> (usize, usize, u64) {
    let x = n_sites / 2;
    (x, n_q * (x + 1) - 1, 0)
}

/// Exact digitized centre angle from the full statevector of a tridiagonal chain.
pub fn exact_center_angle<T: Real>(
    k: &KMatrix<T>,
    digit: &DigitizationSpec<T>,
    max_qubits: usize,
) -> Result<T> {
    let state = build_statevector(k, digit, max_qubits)?;
    let (_, ell, _) = center_angle_address(k.dim(), digit.n_q());
    let mut prefix = vec![false; ell + 1];
    let p0 = marginal_probability(&state, &prefix)?;
    prefix[ell] = true;
    let p1 = marginal_probability(&state, &prefix)?;
    Ok(crate::digitization::ratio_angle(p1, p0))
}

/// Centre angle of the lattice-size study for one `(N, mode)` pair.
pub fn center_angle<T: Real>(
    n_sites: usize,
    mass: T,
    digit: &DigitizationSpec<T>,
    mode: SweepMode,
    max_qubits: usize,
) -> Result<T> {
    let (x, ell, k) = center_angle_address(n_sites, digit.n_q());
    let x_bar = MarginalizedSites::Finite(n_sites - x - 1);
    let fixed = |k00: T, k01: T, x_bar| -> Result<T> {
        let eff = effective_gamma_sq(k00, k01, x_bar)?;
        fixed_point_theta(x, ell, k, &eff, digit)
    };
    match mode {
        SweepMode::ExactDigitized => {
            let k = LatticeSpec::periodic_d1(n_sites, mass)?.preparation_matrix()?;
            exact_center_angle(&k, digit, max_qubits)
        }
        SweepMode::ExactDigitizedInfiniteK => {
            let (k00, k01) = k_infinite_volume(mass)?;
            exact_center_angle(&KMatrix::tridiagonal(n_sites, k00, k01), digit, max_qubits)
        }
        SweepMode::FixedPointFiniteK => {
            let (k00, k01) = nearest_neighbour_couplings(n_sites, mass, KMode::FiniteN)?;
            fixed(k00, k01, x_bar)
        }
        SweepMode::FixedPointInfiniteK => {
            let (k00, k01) = k_infinite_volume(mass)?;
            fixed(k00, k01, x_bar)
        }
        SweepMode::AlphaInfinity => {
            let (k00, k01) = k_infinite_volume(mass)?;
            fixed(k00, k01, MarginalizedSites::Infinite)
        }
    }
}

/// Lattice-centre angle for every `(N, mode)`; statevector modes skip sizes beyond `max_qubits`.
pub fn convergence_sweep<T: Real>(
    mass: T,
    digit: &DigitizationSpec<T>,
    n_list: &[usize],
    modes: &[SweepMode],
    max_qubits: usize,
) -> Result<Vec<SweepRow<T>>> {
    let mut rows = Vec::new();
    for &n in n_list {
        if n < 2 {
            return Err(Error::Domain(format!("lattice size {n} is below 2")));
        }
        for &mode in modes {
            if mode.needs_statevector() && n * digit.n_q() > max_qubits {
                continue;
            }
            rows.push(SweepRow {
                n_sites: n,
                mode,
                angle: center_angle(n, mass, digit, mode, max_qubits)?,
            });
        }
    }
    Ok(rows)
}

/// `N,mode,angle_radians` CSV.
pub fn sweep_csv<T: Real>(rows: &[SweepRow<T>]) -> String {
    let mut out = String::from("N,mode,angle_radians\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.n_sites, r.mode.name(), fmt17(r.angle)));
    }
    out
}

/// Conventional output file name for a sweep.
pub fn sweep_file_name<T: Real>(mass: T, n_q: usize, phi_max: T) -> String {
    format!("sweep_m{}_nq{}_pmax{}.csv", mass.as_f64(), n_q, phi_max.as_f64())
}

/// Exact θ table of the digitized ground state for a lattice, via the statevector.
pub fn exact_angle_table<T: Real>(
    spec: &LatticeSpec<T>,
    digit: &DigitizationSpec<T>,
    max_qubits: usize,
) -> Result<crate::angles::ThetaTable<T>> {
    let k = spec.preparation_matrix()?;
    let state = build_statevector(&k, digit, max_qubits)?;
    Ok(exact_theta_angles(&state))
}
