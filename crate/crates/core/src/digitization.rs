//! Digitized ground-state wavefunction and exact θ-angle extraction.
//!
//! Each site carries `n_q` qubits addressing `2^{n_q}` field samples
//! `φ(κ) = φ_max − δ_φ κ`. Basis states are indexed by concatenating the
//! site addresses with site 0 in the most significant position, and qubit 0
//! is the most significant bit of the whole register.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::angles::ThetaTable;
use crate::error::{Error, Result};
use crate::lattice::KMatrix;
use crate::scalar::{fmt17, two_sum, CompensatedSum, Real};

/// Default statevector guard: 2^26 amplitudes.
pub const DEFAULT_MAX_QUBITS: usize = 26;

const MAX_QUBITS_PER_SITE: usize = 6;
const PARALLEL_CHUNK: usize = 1 << 14;

/// Per-site field digitization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DigitizationSpec<T> {
    n_q: usize,
    phi_max: T,
    delta_phi: T,
}

impl<T: Real> DigitizationSpec<T> {
    pub fn new(n_q: usize, phi_max: T) -> Result<Self> {
        if n_q == 0 || n_q > MAX_QUBITS_PER_SITE {
            return Err(Error::Domain(format!(
                "qubits per site must be in 1..={MAX_QUBITS_PER_SITE}, got {n_q}"
            )));
        }
        if !(phi_max > T::zero() && phi_max.is_finite()) {
            return Err(Error::Domain(format!("field bound must be positive, got {phi_max}")));
        }
        let levels = T::from_usize_lossy((1usize << n_q) - 1);
        Ok(Self {
            n_q,
            phi_max,
            delta_phi: (phi_max + phi_max) / levels,
        })
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn phi_max(&self) -> T {
        self.phi_max
    }

    /// Sample spacing `2 φ_max / (2^{n_q} − 1)`.
    pub fn delta_phi(&self) -> T {
        self.delta_phi
    }

    /// Number of samples per site.
    pub fn levels(&self) -> usize {
        1 << self.n_q
    }

    /// All sample values in address order, `+φ_max` first.
    pub fn samples(&self) -> Vec<T> {
        (0..self.levels())
            .map(|k| self.phi_max - self.delta_phi * T::from_usize_lossy(k))
            .collect()
    }
}

/// Field value at a site address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldAddress(pub usize);

impl FieldAddress {
    pub fn value<T: Real>(self, digit: &DigitizationSpec<T>) -> Result<T> {
        field_value(self.0, digit)
    }

    /// Address of the reflected sample `φ → −φ`.
    pub fn mirrored<T: Real>(self, digit: &DigitizationSpec<T>) -> FieldAddress {
        FieldAddress(digit.levels() - 1 - self.0)
    }
}

/// `φ(κ) = φ_max − δ_φ κ`.
pub fn field_value<T: Real>(kappa: usize, digit: &DigitizationSpec<T>) -> Result<T> {
    if kappa >= digit.levels() {
        return Err(Error::Index(format!(
            "field address {kappa} outside 0..{}",
            digit.levels()
        )));
    }
    Ok(digit.phi_max - digit.delta_phi * T::from_usize_lossy(kappa))
}

/// Dense real statevector; qubit 0 is the most significant index bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector<T> {
    n_qubits: usize,
    amplitudes: Vec<T>,
}

pub(crate) fn check_guard(n_qubits: usize, max_qubits: usize) -> Result<()> {
    if n_qubits > max_qubits || n_qubits >= usize::BITS as usize - 1 {
        let bytes = (1u128 << n_qubits.min(120)) * 8;
        return Err(Error::Resource(format!(
            "{n_qubits} qubits need {bytes} bytes of amplitudes; limit is {max_qubits} qubits"
        )));
    }
    Ok(())
}

impl<T: Real> Statevector<T> {
    /// `|0…0⟩`.
    pub fn zero_state(n_qubits: usize, max_qubits: usize) -> Result<Self> {
        check_guard(n_qubits, max_qubits)?;
        let mut amplitudes = vec![T::zero(); 1 << n_qubits];
        amplitudes[0] = T::one();
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wrap raw amplitudes; the length must be a power of two. No normalization is applied.
    pub fn from_amplitudes(amplitudes: Vec<T>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Contract(format!("{len} amplitudes is not a power of two")));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Scale to unit 2-norm.
    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > T::zero()) {
            return Err(Error::Numerical("cannot normalize a zero vector".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a = *a / norm);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [T] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .map(|a| *a * *a)
            .collect::<CompensatedSum<T>>()
            .value()
            .sqrt()
    }

    /// Little-endian dump: `u64` qubit count followed by one `f64` per amplitude.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n_qubits as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.amplitudes.len());
        for a in &self.amplitudes {
            buf.extend_from_slice(&a.as_f64().to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R, max_qubits: usize) -> Result<Self> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let n_qubits = u64::from_le_bytes(word) as usize;
        check_guard(n_qubits, max_qubits)?;
        let mut amplitudes = Vec::with_capacity(1 << n_qubits);
        for _ in 0..(1usize << n_qubits) {
            input.read_exact(&mut word)?;
            let v = f64::from_le_bytes(word);
            amplitudes.push(T::from_f64(v).ok_or_else(|| Error::Numerical(format!("amplitude {v} not representable")))?);
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// `index,amplitude` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,amplitude\n");
        for (i, a) in self.amplitudes.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", fmt17(*a)));
        }
        out
    }
}

/// Normalized amplitudes `∝ exp(−½ φᵀ K φ)` over every digitized field configuration.
pub fn build_statevector<T: Real>(
    k: &KMatrix<T>,
    digit: &DigitizationSpec<T>,
    max_qubits: usize,
) -> Result<Statevector<T>> {
    let n_sites = k.dim();
    let n_q = digit.n_q();
    let n_qubits = n_sites * n_q;
    check_guard(n_qubits, max_qubits)?;

    // Upper-triangle couplings with the off-diagonal factor of two folded in.
    let mut couplings: Vec<(usize, usize, T)> = Vec::new();
    for i in 0..n_sites {
        for j in i..n_sites {
            let v = k.get(i, j);
            if v != T::zero() {
                let w = if i == j { v } else { v + v };
                couplings.push((i, j, w));
            }
        }
    }
    let samples = digit.samples();
    let site_mask = digit.levels() - 1;
    let half = T::lit(0.5);

    let mut amplitudes = vec![T::zero(); 1 << n_qubits];
    amplitudes
        .par_chunks_mut(PARALLEL_CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut phi = vec![T::zero(); n_sites];
            for (offset, slot) in out.iter_mut().enumerate() {
                let index = chunk * PARALLEL_CHUNK + offset;
                for (site, value) in phi.iter_mut().enumerate() {
                    let shift = (n_sites - 1 - site) * n_q;
                    *value = samples[(index >> shift) & site_mask];
                }
                let form: T = couplings.iter().map(|&(i, j, w)| w * phi[i] * phi[j]).sum();
                *slot = -half * form;
            }
        });

    let peak = amplitudes
        .par_iter()
        .copied()
        .reduce(|| T::neg_infinity(), |a, b| a.max(b));
    amplitudes.par_iter_mut().for_each(|a| *a = (*a - peak).exp());
    Statevector::from_amplitudes(amplitudes)?.normalized()
}

/// Probability that the leading `prefix.len()` qubits read `prefix` (`true` = 1).
///
/// This is the diagonal element of the reduced density matrix of those qubits.
pub fn marginal_probability<T: Real>(state: &Statevector<T>, prefix: &[bool]) -> Result<T> {
    let q = state.n_qubits();
    if prefix.len() > q {
        return Err(Error::Index(format!(
            "prefix of {} bits on a {q}-qubit state",
            prefix.len()
        )));
    }
    let value = prefix.iter().fold(0usize, |acc, b| (acc << 1) | usize::from(*b));
    let span = q - prefix.len();
    let start = value << span;
    let end = (value + 1) << span;
    Ok(state.amplitudes()[start..end]
        .iter()
        .map(|a| *a * *a)
        .collect::<CompensatedSum<T>>()
        .value())
}

/// `arctan √(P₁/P₀)`, with both-underflow mapped to zero.
#[inline]
pub(crate) fn ratio_angle<T: Real>(p_one: T, p_zero: T) -> T {
    if p_one < T::UNDERFLOW && p_zero < T::UNDERFLOW {
        return T::zero();
    }
    p_one.max(T::zero()).sqrt().atan2(p_zero.max(T::zero()).sqrt())
}

/// Exact θ-angles of the cascade circuit that prepares `state`.
///
/// `θ_{ℓ,k} = arctan √(⟨2k+1|ρ_ℓ|2k+1⟩ / ⟨2k|ρ_ℓ|2k⟩)` where `ρ_ℓ` is the
/// reduced density matrix of qubits `0..=ℓ`. Marginals are built bottom-up
/// by pairwise summation carrying a two-sum error term.
pub fn exact_theta_angles<T: Real>(state: &Statevector<T>) -> ThetaTable<T> {
    let q = state.n_qubits();
    let mut hi: Vec<T> = state.amplitudes().par_iter().map(|a| *a * *a).collect();
    let mut lo: Vec<T> = vec![T::zero(); hi.len()];
    let mut levels: Vec<Vec<T>> = vec![Vec::new(); q];

    for ell in (0..q).rev() {
        let pairs = hi.len() / 2;
        let angles: Vec<T> = (0..pairs)
            .into_par_iter()
            .map(|k| {
                ratio_angle(hi[2 * k + 1] + lo[2 * k + 1], hi[2 * k] + lo[2 * k])
            })
            .collect();
        levels[ell] = angles;

        let (next_hi, next_lo): (Vec<T>, Vec<T>) = (0..pairs)
            .into_par_iter()
            .map(|k| {
                let (s, e) = two_sum(hi[2 * k], hi[2 * k + 1]);
                (s, e + lo[2 * k] + lo[2 * k + 1])
            })
            .unzip();
        hi = next_hi;
        lo = next_lo;
    }
    ThetaTable::from_levels(levels).expect("levels have 2^ℓ entries by construction")
}
