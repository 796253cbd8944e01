//! Digitization artifacts of a single marginalized site.
//!
//! `B₁(φ_ℓ) = Σ_{φ_c} exp(−(K₀₀ φ_c² + 2K₀₁ φ_ℓ φ_c))` over the symmetric comb
//! `φ_c = δ_φ (n + ½)`, the sample set of every `2^{n_q}` register. Poisson
//! resummation turns it into the continuum value times
//! `1 + 2 Σ_{n>0} exp(−n²π²/(K₀₀δ_φ²)) cos(nπ(1 + 2K₀₁φ_ℓ/(K₀₀δ_φ)))`,
//! so the relative deviation from the continuum is governed by
//! `exp(−π²/(K₀₀δ_φ²))`, double-exponentially small in `n_q`.

use crate::digitization::DigitizationSpec;
use crate::elliptic::elliptic_k;
use crate::error::{Error, Result};
use crate::lattice::k_infinite_volume;
use crate::scalar::{fmt17, CompensatedSum, Real};

/// Inputs of the single-site marginalization sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalizationQuery<T> {
    pub phi_ell: T,
    pub k00: T,
    pub k01: T,
    pub delta_phi: T,
    /// Samples `n ∈ [−W, W)`, i.e. `2W` comb points.
    pub half_width: usize,
}

impl<T: Real> MarginalizationQuery<T> {
    /// Query over exactly the `2^{n_q}` samples of a register.
    pub fn full_register(phi_ell: T, k00: T, k01: T, digit: &DigitizationSpec<T>) -> Self {
        Self {
            phi_ell,
            k00,
            k01,
            delta_phi: digit.delta_phi(),
            half_width: digit.levels() / 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.k00 > T::zero()) {
            return Err(Error::Domain(format!("K00 = {} makes the sum diverge", self.k00)));
        }
        if !(self.delta_phi > T::zero()) {
            return Err(Error::Domain("sample spacing must be positive".into()));
        }
        if self.half_width == 0 {
            return Err(Error::Domain("window must hold at least one sample pair".into()));
        }
        Ok(())
    }

    /// Centre `μ = −K₀₁φ_ℓ/K₀₀` and log-peak `K₀₁²φ_ℓ²/K₀₀` of the summand.
    fn gaussian(&self) -> (T, T) {
        let mu = -self.k01 * self.phi_ell / self.k00;
        let log_peak = self.k01 * self.k01 * self.phi_ell * self.phi_ell / self.k00;
        (mu, log_peak)
    }
}

/// A value with a certified absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounded<T> {
    pub value: T,
    pub bound: T,
}

/// Bound on `Σ_{φ ≥ a, comb} g(φ)` for `g = exp(log_peak − K(φ−μ)²)` decreasing beyond `a`.
fn one_sided_tail<T: Real>(a: T, mu: T, log_peak: T, k00: T, delta: T) -> T {
    let gap = a - mu;
    if !(gap > T::zero()) {
        return T::infinity();
    }
    let first = (log_peak - k00 * gap * gap).exp();
    // ∫_a^∞ exp(−K(φ−μ)²) dφ ≤ exp(−K gap²) / (2K gap)
    first + first / (T::lit(2.0) * k00 * gap * delta)
}

/// Direct sum over the `2W` central comb points, with a bound on the omitted tails.
pub fn b1_discrete<T: Real>(q: &MarginalizationQuery<T>) -> Result<Bounded<T>> {
    q.validate()?;
    let w = q.half_width as i64;
    let half = T::lit(0.5);
    let value = (-w..w)
        .map(|n| {
            let phi = q.delta_phi * (T::from_i64(n).expect("window index") + half);
            (-(q.k00 * phi * phi + (q.k01 + q.k01) * q.phi_ell * phi)).exp()
        })
        .collect::<CompensatedSum<T>>()
        .value();
    let (mu, log_peak) = q.gaussian();
    let edge = q.delta_phi * (T::from_usize_lossy(q.half_width) + half);
    let bound = one_sided_tail(edge, mu, log_peak, q.k00, q.delta_phi)
        + one_sided_tail(edge, -mu, log_peak, q.k00, q.delta_phi);
    Ok(Bounded { value, bound })
}

/// Smallest window whose tail bound is at most `tol`.
pub fn sufficient_half_width<T: Real>(q: &MarginalizationQuery<T>, tol: T) -> Result<usize> {
    q.validate()?;
    let mut probe = *q;
    probe.half_width = 1;
    loop {
        if b1_discrete(&probe)?.bound <= tol {
            return Ok(probe.half_width);
        }
        if probe.half_width > 1 << 24 {
            return Err(Error::Numerical("window tolerance unreachable".into()));
        }
        probe.half_width += 1;
    }
}

/// Exponent `π²/(K₀₀ δ_φ²)` of the first Fourier correction.
pub fn leading_exponent<T: Real>(k00: T, delta_phi: T) -> T {
    T::PI() * T::PI() / (k00 * delta_phi * delta_phi)
}

/// Poisson-resummed `B₁` with Fourier modes `n ≤ n_max`; `bound` covers the rest.
pub fn b1_poisson<T: Real>(phi_ell: T, k00: T, k01: T, delta_phi: T, n_max: usize) -> Result<Bounded<T>> {
    let q = MarginalizationQuery {
        phi_ell,
        k00,
        k01,
        delta_phi,
        half_width: 1,
    };
    q.validate()?;
    let a = leading_exponent(k00, delta_phi);
    let (_, log_peak) = q.gaussian();
    let prefactor = (T::PI() / (k00 * delta_phi * delta_phi)).sqrt() * log_peak.exp();
    let shift = T::one() + (k01 + k01) * phi_ell / (k00 * delta_phi);
    let two = T::lit(2.0);
    let mut bracket = CompensatedSum::new();
    bracket.add(T::one());
    for n in 1..=n_max {
        let nn = T::from_usize_lossy(n);
        bracket.add(two * (-nn * nn * a).exp() * (nn * T::PI() * shift).cos());
    }
    let first = T::from_usize_lossy(n_max + 1);
    let ratio = (-(two * first + T::one()) * a).exp();
    let remainder = two * (-first * first * a).exp() / (T::one() - ratio);
    Ok(Bounded {
        value: prefactor * bracket.value(),
        bound: prefactor * remainder,
    })
}

/// One row of the digitization report.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationRow<T> {
    pub n_q: usize,
    pub delta_phi: T,
    /// `π²/(K₀₀δ_φ²)`.
    pub exponent: T,
    /// `exp(−exponent)`, the relative size of the leading comb correction.
    pub deviation: T,
    /// Gaussian bound on the single-site probability outside `±φ_max`.
    pub truncation_tail: T,
    /// Sample spacing, not field truncation, dominates the error.
    pub spacing_dominated: bool,
}

/// Leading digitization deviation for each register size, using infinite-volume `K₀₀`.
///
/// The truncation column makes the `φ_max` tradeoff visible: larger bounds
/// shrink the tail but coarsen the spacing.
pub fn digitization_deviation_report<T: Real>(mass: T, phi_max: T, nq_list: &[usize]) -> Result<Vec<DeviationRow<T>>> {
    let (k00, _) = k_infinite_volume(mass)?;
    let four = T::lit(4.0);
    let parameter = four / (four + mass * mass);
    // (K⁻¹)₀₀ = (2/π) K(4/(4+m²)) / √(4+m²); the site marginal has variance (K⁻¹)₀₀/2.
    let inverse_diag = T::lit(2.0) / T::PI() * elliptic_k(parameter)? / (four + mass * mass).sqrt();
    let z = phi_max / inverse_diag.sqrt();
    let truncation_tail = (-z * z).exp() / (z * T::PI().sqrt());
    nq_list
        .iter()
        .map(|&n_q| {
            let digit = DigitizationSpec::new(n_q, phi_max)?;
            let exponent = leading_exponent(k00, digit.delta_phi());
            let deviation = (-exponent).exp();
            Ok(DeviationRow {
                n_q,
                delta_phi: digit.delta_phi(),
                exponent,
                deviation,
                truncation_tail,
                spacing_dominated: deviation > truncation_tail,
            })
        })
        .collect()
}

/// `nQ,delta_phi,exponent,deviation` CSV.
pub fn report_csv<T: Real>(rows: &[DeviationRow<T>]) -> String {
    let mut out = String::from("nQ,delta_phi,exponent,deviation\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n_q,
            fmt17(r.delta_phi),
            fmt17(r.exponent),
            fmt17(r.deviation)
        ));
    }
    out
}
