//! Correlation matrix of the free scalar ground state on a one-dimensional lattice.
//!
//! The ground state of `H = ½ Σ π² + ½ φᵀ(−∇² + m²)φ` is the Gaussian
//! `ψ(φ) ∝ exp(−½ φᵀ K φ)` with `K = √(−∇² + m²)`, where `−∇²` is the
//! nearest-neighbour finite-difference Laplacian. This module builds `K`,
//! truncates it to a band, evaluates its infinite-volume elements in closed
//! form and provides the determinant ratios and Schur complements that appear
//! when trailing sites are integrated out as continuous variables.

use std::fmt;

use crate::elliptic::{elliptic_e, elliptic_k};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, spd_sqrt, Matrix};
use crate::scalar::{fmt17, Real};

/// Lattice boundary condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Open => f.write_str("open"),
        }
    }
}

/// Physical lattice: size, mass (lattice units), boundary and band truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec<T> {
    n_sites: usize,
    mass: T,
    boundary: Boundary,
    band_distance: Option<usize>,
}

impl<T: Real> LatticeSpec<T> {
    /// `band_distance = None` keeps the full matrix.
    pub fn new(n_sites: usize, mass: T, boundary: Boundary, band_distance: Option<usize>) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::Domain(format!("lattice needs at least 2 sites, got {n_sites}")));
        }
        check_mass(mass)?;
        if let Some(d) = band_distance {
            if d >= n_sites {
                return Err(Error::Domain(format!(
                    "band distance {d} must be smaller than the lattice size {n_sites}"
                )));
            }
        }
        Ok(Self {
            n_sites,
            mass,
            boundary,
            band_distance,
        })
    }

    /// Periodic lattice truncated at nearest neighbours.
    pub fn periodic_d1(n_sites: usize, mass: T) -> Result<Self> {
        Self::new(n_sites, mass, Boundary::Periodic, Some(1))
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn band_distance(&self) -> Option<usize> {
        self.band_distance
    }

    /// Full `K`, band-truncated with minimal-image distances when a band is set.
    pub fn correlation_matrix(&self) -> Result<KMatrix<T>> {
        let k = build_k_matrix(self)?;
        match self.band_distance {
            Some(d) => truncate_band(&k, d),
            None => Ok(k),
        }
    }

    /// `K` as used for state preparation: band-truncated along the site
    /// ordering, so the periodic wrap-around coupling between the last and
    /// first sites is dropped.
    pub fn preparation_matrix(&self) -> Result<KMatrix<T>> {
        let k = build_k_matrix(self)?;
        match self.band_distance {
            Some(d) => truncate_band_chain(&k, d),
            None => Ok(k),
        }
    }
}

fn check_mass<T: Real>(mass: T) -> Result<()> {
    if mass > T::zero() && mass.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "mass must be positive and finite, got {mass}; the massless case is not supported"
        )))
    }
}

/// Symmetric positive-definite exponent matrix of the Gaussian ground state.
#[derive(Clone, Debug, PartialEq)]
pub struct KMatrix<T> {
    entries: Matrix<T>,
    boundary: Boundary,
}

impl<T: Real> KMatrix<T> {
    /// Wrap an arbitrary symmetric matrix, e.g. for tests or externally supplied couplings.
    pub fn from_matrix(entries: Matrix<T>, boundary: Boundary) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Contract("K must be square".into()));
        }
        let tol = T::lit(1e-12) * entries.max_abs();
        if entries.asymmetry() > tol {
            return Err(Error::Contract("K must be symmetric".into()));
        }
        Ok(Self { entries, boundary })
    }

    /// Nearest-neighbour chain with uniform diagonal `k00` and coupling `k01`.
    pub fn tridiagonal(n: usize, k00: T, k01: T) -> Self {
        let entries = Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => k00,
            1 => k01,
            _ => T::zero(),
        });
        Self {
            entries,
            boundary: Boundary::Open,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn k00(&self) -> T {
        self.get(0, 0)
    }

    pub fn k01(&self) -> T {
        self.get(0, 1)
    }

    /// Site separation, minimal-image for periodic lattices.
    pub fn separation(&self, i: usize, j: usize) -> usize {
        let r = i.abs_diff(j);
        match self.boundary {
            Boundary::Periodic => r.min(self.dim() - r),
            Boundary::Open => r,
        }
    }

    /// Quadratic form `φᵀ K φ`, skipping exact zeros.
    pub fn quadratic_form(&self, phi: &[T]) -> T {
        let n = self.dim();
        let mut total = T::zero();
        for i in 0..n {
            let row = self.entries.row(i);
            let mut acc = T::zero();
            for j in 0..n {
                if row[j] != T::zero() {
                    acc = acc + row[j] * phi[j];
                }
            }
            total = total + phi[i] * acc;
        }
        total
    }

    /// Row-major CSV with a `k0,…,k{N−1}` header and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = (0..n).map(|j| format!("k{j}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for i in 0..n {
            let row: Vec<String> = self.entries.row(i).iter().map(|v| fmt17(*v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Frequencies `ω_n = √(4 sin²(πn/N) + m²)` of the periodic lattice.
fn periodic_frequencies<T: Real>(n: usize, mass: T) -> Vec<T> {
    let nn = T::from_usize_lossy(n);
    (0..n)
        .map(|k| {
            let s = (T::PI() * T::from_usize_lossy(k) / nn).sin();
            (T::lit(4.0) * s * s + mass * mass).sqrt()
        })
        .collect()
}

/// First row `K_{0r}`, `r = 0..=r_max`, of the periodic `K` at size `n`.
pub fn periodic_k_row<T: Real>(n: usize, mass: T, r_max: usize) -> Result<Vec<T>> {
    check_mass(mass)?;
    if n == 0 || r_max >= n {
        return Err(Error::Index(format!("row offset {r_max} outside a lattice of {n} sites")));
    }
    let omega = periodic_frequencies(n, mass);
    let nn = T::from_usize_lossy(n);
    let two_pi = T::PI() + T::PI();
    Ok((0..=r_max)
        .map(|r| {
            let sum: T = omega
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let phase = T::from_usize_lossy((k * r) % n);
                    *w * (two_pi * phase / nn).cos()
                })
                .sum();
            sum / nn
        })
        .collect())
}

fn laplacian<T: Real>(n: usize, mass: T, boundary: Boundary) -> Matrix<T> {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = T::lit(2.0) + mass * mass;
        if i + 1 < n {
            a[(i, i + 1)] = -T::one();
            a[(i + 1, i)] = -T::one();
        }
    }
    if boundary == Boundary::Periodic {
        let w = a[(0, n - 1)] - T::one();
        a[(0, n - 1)] = w;
        a[(n - 1, 0)] = w;
    }
    a
}

/// The lattice operator `−∇² + m²` whose principal square root is `K`.
pub fn lattice_operator<T: Real>(spec: &LatticeSpec<T>) -> Matrix<T> {
    laplacian(spec.n_sites, spec.mass, spec.boundary)
}

/// Untruncated `K = √(−∇² + m²)` for the given lattice.
///
/// Periodic lattices use the exact circulant momentum sum; open chains use a
/// symmetric eigen-decomposition. Band truncation is applied separately.
pub fn build_k_matrix<T: Real>(spec: &LatticeSpec<T>) -> Result<KMatrix<T>> {
    check_mass(spec.mass)?;
    let n = spec.n_sites;
    let entries = match spec.boundary {
        Boundary::Periodic => {
            let row = periodic_k_row(n, spec.mass, n - 1)?;
            Matrix::from_fn(n, n, |i, j| row[(j + n - i) % n])
        }
        Boundary::Open => {
            let mut root = spd_sqrt(&laplacian(n, spec.mass, Boundary::Open))?;
            // Eigen-solver round-off leaves a ~1e-16 asymmetry.
            for i in 0..n {
                for j in (i + 1)..n {
                    let avg = (root[(i, j)] + root[(j, i)]) * T::lit(0.5);
                    root[(i, j)] = avg;
                    root[(j, i)] = avg;
                }
            }
            root
        }
    };
    Ok(KMatrix {
        entries,
        boundary: spec.boundary,
    })
}

fn check_band<T: Real>(k: &KMatrix<T>, d: usize) -> Result<()> {
    if d >= k.dim() {
        return Err(Error::Domain(format!(
            "band distance {d} must be smaller than the dimension {}",
            k.dim()
        )));
    }
    Ok(())
}

/// Zero every entry whose site separation (minimal-image when periodic) exceeds `d`.
pub fn truncate_band<T: Real>(k: &KMatrix<T>, d: usize) -> Result<KMatrix<T>> {
    check_band(k, d)?;
    let n = k.dim();
    let entries = Matrix::from_fn(n, n, |i, j| {
        if k.separation(i, j) > d {
            T::zero()
        } else {
            k.get(i, j)
        }
    });
    Ok(KMatrix {
        entries,
        boundary: k.boundary,
    })
}

/// Zero every entry with `|i − j| > d`, ignoring periodic wrap-around.
///
/// The result is treated as an open chain.
pub fn truncate_band_chain<T: Real>(k: &KMatrix<T>, d: usize) -> Result<KMatrix<T>> {
    check_band(k, d)?;
    let n = k.dim();
    let entries = Matrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) > d {
            T::zero()
        } else {
            k.get(i, j)
        }
    });
    Ok(KMatrix {
        entries,
        boundary: Boundary::Open,
    })
}

/// Infinite-volume `(K₀₀, K₀₁)` from complete elliptic integrals with parameter `4/(4+m²)`.
pub fn k_infinite_volume<T: Real>(mass: T) -> Result<(T, T)> {
    check_mass(mass)?;
    let m2 = mass * mass;
    let four = T::lit(4.0);
    let root = (four + m2).sqrt();
    let parameter = four / (four + m2);
    let e = elliptic_e(parameter)?;
    let k = elliptic_k(parameter)?;
    let k00 = T::lit(2.0) * root / T::PI() * e;
    let k01 = root / (T::lit(3.0) * T::PI()) * (m2 * k - (T::lit(2.0) + m2) * e);
    Ok((k00, k01))
}

/// Infinite-volume row `K_{0r}^∞`, `r = 0..=r_max`.
///
/// Offsets 0 and 1 use the elliptic closed forms; larger offsets use a
/// periodic momentum sum on a lattice large enough that images are below
/// double precision.
pub fn k_infinite_volume_row<T: Real>(mass: T, r_max: usize) -> Result<Vec<T>> {
    let (k00, k01) = k_infinite_volume(mass)?;
    let mut row = vec![k00, k01];
    if r_max >= 2 {
        let span = (T::lit(40.0) / mass).ceil().to_usize().unwrap_or(usize::MAX);
        let n = (2 * (span + r_max)).max(4096);
        let far = periodic_k_row(n, mass, r_max)?;
        row.extend_from_slice(&far[2..]);
    }
    row.truncate(r_max + 1);
    Ok(row)
}

fn check_ratio_domain<T: Real>(k00: T, k01: T) -> Result<T> {
    let disc = k00 * k00 - T::lit(4.0) * k01 * k01;
    if !(k00 > T::zero() && disc > T::zero()) {
        return Err(Error::Domain(format!(
            "determinant ratio needs K00 > 2|K01| (got K00={k00}, K01={k01})"
        )));
    }
    Ok(disc.sqrt())
}

/// `det K_{x̄−1} / det K_{x̄}` for a uniform tridiagonal block, in closed form.
pub fn det_ratio<T: Real>(k00: T, k01: T, x_bar: usize) -> Result<T> {
    let eta = check_ratio_domain(k00, k01)?;
    if x_bar == 0 {
        return Err(Error::Domain("determinant ratio needs at least one marginalized site".into()));
    }
    let growth = (k00 + eta) / (k00 - eta);
    let power = growth.powf(T::from_usize_lossy(x_bar));
    let two = T::lit(2.0);
    Ok(two / (k00 + eta * (T::one() + two / (power - T::one()))))
}

/// `lim_{x̄→∞} det K_{x̄−1} / det K_{x̄}`.
pub fn det_ratio_limit<T: Real>(k00: T, k01: T) -> Result<T> {
    check_ratio_domain(k00, k01)?;
    let r = T::lit(4.0) * k01 * k01 / (k00 * k00);
    Ok(T::lit(2.0) / (k00 * (T::one() + (T::one() - r).sqrt())))
}

/// Determinant ratio by continued-fraction recurrence `r_n = 1/(K₀₀ − K₀₁² r_{n−1})`.
///
/// Once an iterate is within `1e-14` (relative) of the limit, the limit is
/// returned exactly, so every large `x̄` shares one bit-identical value.
/// Couplings with `K₀₀ ≤ 2|K₀₁|` have no limit; the recurrence then runs
/// unsnapped and fails only if the block stops being positive definite.
pub fn det_ratio_recurrence<T: Real>(k00: T, k01: T, x_bar: usize) -> Result<T> {
    if x_bar == 0 {
        return Err(Error::Domain("determinant ratio needs at least one marginalized site".into()));
    }
    if !(k00 > T::zero()) {
        return Err(Error::Domain(format!("K00 = {k00} is not positive")));
    }
    let limit = det_ratio_limit(k00, k01).ok();
    let snap = T::lit(1e-14).max(T::epsilon() * T::lit(4.0));
    let near = |r: T| limit.filter(|l| (r - *l).abs() <= snap * *l);
    let c = k01 * k01;
    let mut r = T::one() / k00;
    for _ in 1..x_bar {
        if let Some(l) = near(r) {
            return Ok(l);
        }
        let pivot = k00 - c * r;
        if !(pivot > T::zero()) {
            return Err(Error::Domain(format!(
                "tridiagonal block with K00={k00}, K01={k01} is not positive definite at {x_bar} sites"
            )));
        }
        r = T::one() / pivot;
    }
    Ok(near(r).unwrap_or(r))
}

/// Block correction `B C⁻¹ Bᵀ` from integrating out sites `x+1..N−1`.
///
/// `K` is partitioned with `A` the leading `(x+1)×(x+1)` block.
pub fn schur_correction<T: Real>(k: &KMatrix<T>, x: usize) -> Result<Matrix<T>> {
    let n = k.dim();
    if x + 1 >= n {
        return Err(Error::Index(format!(
            "site {x} leaves no trailing block in a {n}-site lattice"
        )));
    }
    let m = k.as_matrix();
    let b = m.block(0, x + 1, x + 1, n);
    let c = m.block(x + 1, n, x + 1, n);
    let l = cholesky(&c)?;
    let y = cholesky_solve(&l, &b.transpose())?;
    let mut corr = b.matmul(&y)?;
    let kept = x + 1;
    for i in 0..kept {
        for j in (i + 1)..kept {
            let avg = (corr[(i, j)] + corr[(j, i)]) * T::lit(0.5);
            corr[(i, j)] = avg;
            corr[(j, i)] = avg;
        }
    }
    Ok(corr)
}

/// Effective exponent `A − B C⁻¹ Bᵀ` on sites `0..=x` after integrating out the rest.
pub fn schur_effective<T: Real>(k: &KMatrix<T>, x: usize) -> Result<Matrix<T>> {
    let corr = schur_correction(k, x)?;
    let m = k.as_matrix();
    Ok(Matrix::from_fn(x + 1, x + 1, |i, j| m[(i, j)] - corr[(i, j)]))
}
