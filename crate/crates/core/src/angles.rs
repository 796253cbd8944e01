//! Angle tables for the multi-controlled `R_y` cascade.
//!
//! A θ-angle `θ_{ℓ,k}` belongs to the rotation on qubit `ℓ` controlled on the
//! previous `ℓ` qubits reading the binary string `k` (qubit 0 is the most
//! significant bit of `k`). Two storage layouts exist:
//!
//! * [`ThetaTable`] stores every `(ℓ, k)` densely, as produced from a statevector.
//! * [`LocalAngleTable`] stores, per site, only the angles that depend on the
//!   `reach` previous sites and the inner-site bits; identical sites share one
//!   entry. This is the layout of fixed-point circuits.
//!
//! [`AlphaTable`] is the site-wise view of a nearest-neighbour local table.

use crate::error::{Error, Result};
use crate::scalar::{fmt17, Real};

/// Anything that can answer `θ_{ℓ,k}`.
pub trait ThetaAngles<T> {
    fn n_qubits(&self) -> usize;

    /// Angle of the rotation on qubit `ell` with control string `k` (`k < 2^ell`).
    fn theta(&self, ell: usize, k: u64) -> T;
}

/// Dense table: `levels[ℓ][k]` for all `k < 2^ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaTable<T> {
    levels: Vec<Vec<T>>,
}

impl<T: Real> ThetaTable<T> {
    pub fn from_levels(levels: Vec<Vec<T>>) -> Result<Self> {
        for (ell, level) in levels.iter().enumerate() {
            if level.len() != 1usize << ell {
                return Err(Error::Contract(format!(
                    "level {ell} holds {} angles, expected {}",
                    level.len(),
                    1usize << ell
                )));
            }
        }
        Ok(Self { levels })
    }

    /// Materialize any angle source; only sensible for small registers.
    pub fn from_source(source: &impl ThetaAngles<T>) -> Self {
        let levels = (0..source.n_qubits())
            .map(|ell| (0..(1u64 << ell)).map(|k| source.theta(ell, k)).collect())
            .collect();
        Self { levels }
    }

    #[inline]
    pub fn get(&self, ell: usize, k: u64) -> T {
        self.levels[ell][k as usize]
    }

    pub fn level(&self, ell: usize) -> &[T] {
        &self.levels[ell]
    }

    pub fn stored_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// `ell,k,angle_radians` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ell,k,angle_radians\n");
        for (ell, level) in self.levels.iter().enumerate() {
            for (k, a) in level.iter().enumerate() {
                out.push_str(&format!("{ell},{k},{}\n", fmt17(*a)));
            }
        }
        out
    }
}

impl<T: Real> ThetaAngles<T> for ThetaTable<T> {
    fn n_qubits(&self) -> usize {
        self.levels.len()
    }

    fn theta(&self, ell: usize, k: u64) -> T {
        self.get(ell, k)
    }
}

/// Angles of one site class.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteAngles<T> {
    control_sites: usize,
    /// `levels[p]` covers inner position `p` and has `2^{n_q·control_sites + p}` entries.
    levels: Vec<Vec<T>>,
}

impl<T: Real> SiteAngles<T> {
    pub fn new(n_q: usize, control_sites: usize, levels: Vec<Vec<T>>) -> Result<Self> {
        if levels.len() != n_q {
            return Err(Error::Contract(format!("{} inner levels for {n_q} qubits per site", levels.len())));
        }
        for (p, level) in levels.iter().enumerate() {
            let expect = 1usize << (n_q * control_sites + p);
            if level.len() != expect {
                return Err(Error::Contract(format!(
                    "inner level {p} holds {} angles, expected {expect}",
                    level.len()
                )));
            }
        }
        Ok(Self {
            control_sites,
            levels,
        })
    }

    pub fn control_sites(&self) -> usize {
        self.control_sites
    }

    pub fn level(&self, p: usize) -> &[T] {
        &self.levels[p]
    }

    pub fn stored_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// Per-site table whose angles depend only on the `reach` preceding sites.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalAngleTable<T> {
    n_sites: usize,
    n_q: usize,
    reach: usize,
    site_class: Vec<usize>,
    classes: Vec<SiteAngles<T>>,
}

impl<T: Real> LocalAngleTable<T> {
    pub fn new(
        n_sites: usize,
        n_q: usize,
        reach: usize,
        site_class: Vec<usize>,
        classes: Vec<SiteAngles<T>>,
    ) -> Result<Self> {
        if site_class.len() != n_sites {
            return Err(Error::Contract("one class id per site required".into()));
        }
        for (x, &c) in site_class.iter().enumerate() {
            let class = classes
                .get(c)
                .ok_or_else(|| Error::Contract(format!("site {x} refers to missing class {c}")))?;
            if class.control_sites != x.min(reach) || class.levels.len() != n_q {
                return Err(Error::Contract(format!("class {c} does not fit site {x}")));
            }
        }
        Ok(Self {
            n_sites,
            n_q,
            reach,
            site_class,
            classes,
        })
    }

    /// Extract a nearest-neighbour table from a dense one, checking locality to `tol`.
    pub fn from_dense_d1(table: &ThetaTable<T>, n_q: usize, tol: T) -> Result<Self> {
        let q = table.n_qubits();
        if n_q == 0 || q % n_q != 0 {
            return Err(Error::Contract(format!("{q} qubits do not split into sites of {n_q}")));
        }
        let n_sites = q / n_q;
        let mut classes = Vec::with_capacity(n_sites);
        for x in 0..n_sites {
            let control_sites = x.min(1);
            let mut levels = Vec::with_capacity(n_q);
            for p in 0..n_q {
                let ell = x * n_q + p;
                let width = n_q * control_sites + p;
                let mask = (1u64 << width) - 1;
                let local: Vec<T> = (0..=mask).map(|k| table.get(ell, k)).collect();
                for (k, a) in table.level(ell).iter().enumerate() {
                    let diff = (*a - local[(k as u64 & mask) as usize]).abs();
                    if diff > tol {
                        return Err(Error::Contract(format!(
                            "θ({ell},{k}) depends on controls beyond the previous site (Δ={diff})"
                        )));
                    }
                }
                levels.push(local);
            }
            classes.push(SiteAngles::new(n_q, control_sites, levels)?);
        }
        Self::new(n_sites, n_q, 1, (0..n_sites).collect(), classes)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    /// Number of preceding sites the angles may depend on.
    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn site_class(&self, x: usize) -> usize {
        self.site_class[x]
    }

    pub fn classes(&self) -> &[SiteAngles<T>] {
        &self.classes
    }

    pub fn site(&self, x: usize) -> &SiteAngles<T> {
        &self.classes[self.site_class[x]]
    }

    /// Total number of distinct stored angles.
    pub fn stored_count(&self) -> usize {
        self.classes.iter().map(SiteAngles::stored_count).sum()
    }

    /// Angle for site `x`, inner position `p` and local control string `local_k`.
    #[inline]
    pub fn local(&self, x: usize, p: usize, local_k: usize) -> T {
        self.site(x).levels[p][local_k]
    }

    /// `site,ell,local_k,angle_radians` CSV, one block per site.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("site,ell,local_k,angle_radians\n");
        for x in 0..self.n_sites {
            let site = self.site(x);
            for (p, level) in site.levels.iter().enumerate() {
                let ell = x * self.n_q + p;
                for (k, a) in level.iter().enumerate() {
                    out.push_str(&format!("{x},{ell},{k},{}\n", fmt17(*a)));
                }
            }
        }
        out
    }
}

impl<T: Real> ThetaAngles<T> for LocalAngleTable<T> {
    fn n_qubits(&self) -> usize {
        self.n_sites * self.n_q
    }

    fn theta(&self, ell: usize, k: u64) -> T {
        let x = ell / self.n_q;
        let p = ell % self.n_q;
        let site = self.site(x);
        let width = self.n_q * site.control_sites + p;
        let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
        site.levels[p][(k & mask) as usize]
    }
}

/// Site-wise α-angles of a nearest-neighbour table.
///
/// Indices: target qubit `ℓ`, operator height `h` (number of controls),
/// control string `k < 2^h`; site `x = ⌊ℓ/n_q⌋` and range `r = ⌊h/n_q⌋`.
/// Operators of range one carry the θ-angles and longer ranges vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaTable<T> {
    theta: LocalAngleTable<T>,
}

/// One non-vanishing α operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaEntry<T> {
    pub ell: usize,
    pub height: usize,
    pub k: u64,
    pub angle: T,
}

impl<T: Real> AlphaTable<T> {
    pub fn n_q(&self) -> usize {
        self.theta.n_q
    }

    pub fn n_sites(&self) -> usize {
        self.theta.n_sites
    }

    pub fn n_qubits(&self) -> usize {
        self.theta.n_sites * self.theta.n_q
    }

    pub fn theta_table(&self) -> &LocalAngleTable<T> {
        &self.theta
    }

    /// Height of the range-`r` operator on qubit `ell`.
    pub fn height(&self, ell: usize, r: usize) -> usize {
        ell % self.n_q() + r * self.n_q()
    }

    /// `α^{x,r}_{ℓh,k}`.
    pub fn alpha(&self, ell: usize, height: usize, k: u64) -> Result<T> {
        let n_q = self.n_q();
        if ell >= self.n_qubits() {
            return Err(Error::Index(format!("qubit {ell} outside the register")));
        }
        if height > ell || height % n_q != ell % n_q {
            return Err(Error::Index(format!("height {height} is not an expansion height of qubit {ell}")));
        }
        if height < 64 && k >> height != 0 {
            return Err(Error::Index(format!("control string {k} exceeds height {height}")));
        }
        let x = ell / n_q;
        let r = height / n_q;
        match (x, r) {
            (0, 0) | (_, 1) => Ok(self.theta.theta(ell, k)),
            (_, 0) => Err(Error::Index(format!(
                "site {x} has no range-0 operator on qubit {ell}"
            ))),
            _ => Ok(T::zero()),
        }
    }

    /// All operators of range at most one, in circuit order.
    pub fn entries(&self) -> impl Iterator<Item = AlphaEntry<T>> + '_ {
        let n_q = self.n_q();
        (0..self.n_qubits()).flat_map(move |ell| {
            let x = ell / n_q;
            let height = self.height(ell, x.min(1));
            let level = self.theta.site(x).level(ell % n_q);
            level.iter().enumerate().map(move |(k, &angle)| AlphaEntry {
                ell,
                height,
                k: k as u64,
                angle,
            })
        })
    }
}

/// Site-wise expansion of a nearest-neighbour θ table.
pub fn alpha_from_theta_d1<T: Real>(theta: &LocalAngleTable<T>) -> Result<AlphaTable<T>> {
    if theta.reach != 1 {
        return Err(Error::Contract(format!(
            "α expansion is defined for nearest-neighbour tables, got reach {}",
            theta.reach
        )));
    }
    Ok(AlphaTable {
        theta: theta.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_d1(n_sites: usize, n_q: usize) -> LocalAngleTable<f64> {
        let mut classes = Vec::new();
        for x in 0..n_sites {
            let c = x.min(1);
            let levels = (0..n_q)
                .map(|p| {
                    (0..(1usize << (n_q * c + p)))
                        .map(|k| 0.01 * (x * 100 + p * 10 + k) as f64)
                        .collect()
                })
                .collect();
            classes.push(SiteAngles::new(n_q, c, levels).unwrap());
        }
        LocalAngleTable::new(n_sites, n_q, 1, (0..n_sites).collect(), classes).unwrap()
    }

    #[test]
    fn dense_levels_validated() {
        assert!(ThetaTable::from_levels(vec![vec![0.1f64], vec![0.2, 0.3]]).is_ok());
        assert!(ThetaTable::from_levels(vec![vec![0.1f64], vec![0.2]]).is_err());
    }

    #[test]
    fn local_lookup_ignores_distant_controls() {
        let t = table_d1(4, 2);
        // qubit 5 is site 2, p = 1: local width 3
        let base = t.theta(5, 0b101);
        for high in 0..4u64 {
            assert_eq!(t.theta(5, (high << 3) | 0b101), base);
        }
        assert_eq!(t.local(2, 1, 0b101), base);
        let dense = ThetaTable::from_source(&t);
        let back = LocalAngleTable::from_dense_d1(&dense, 2, 0.0).unwrap();
        for ell in 0..8 {
            for k in 0..(1u64 << ell) {
                assert_eq!(back.theta(ell, k), t.theta(ell, k));
            }
        }
    }

    #[test]
    fn dense_locality_violation_detected() {
        let mut levels: Vec<Vec<f64>> = (0..6).map(|l| vec![0.3; 1 << l]).collect();
        levels[4][0b0001] = 0.2;
        levels[4][0b1001] = 0.25;
        let dense = ThetaTable::from_levels(levels).unwrap();
        assert!(matches!(
            LocalAngleTable::from_dense_d1(&dense, 2, 1e-12),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn control_decoding_example() {
        // n_q = 2, target on the first qubit of site 2, k = 0110: κ₀ = 1, κ₁ = 2.
        let t = table_d1(3, 2);
        let k = 0b0110u64;
        assert_eq!(k >> 2, 1);
        assert_eq!(k & 0b11, 2);
        assert_eq!(t.theta(4, k), t.local(2, 0, 2));
    }

    #[test]
    fn alpha_cases() {
        let t = table_d1(4, 2);
        let a = alpha_from_theta_d1(&t).unwrap();
        for ell in 2..8 {
            let h = a.height(ell, 1);
            for k in 0..(1u64 << h) {
                assert_eq!(a.alpha(ell, h, k).unwrap(), t.theta(ell, k));
            }
            let x = ell / 2;
            for r in 2..=x {
                let h = a.height(ell, r);
                for k in (0..(1u64 << h)).step_by(7) {
                    assert_eq!(a.alpha(ell, h, k).unwrap(), 0.0);
                }
            }
            assert!(a.alpha(ell, ell % 2, 0).is_err());
        }
        assert_eq!(a.alpha(1, 1, 1).unwrap(), t.theta(1, 1));
        assert!(a.alpha(3, 2, 0).is_err());
        assert!(a.alpha(3, 3, 8).is_err());
        assert_eq!(a.entries().count(), t.stored_count());
    }

    #[test]
    fn alpha_rejects_longer_reach() {
        let mut t = table_d1(2, 1);
        t.reach = 2;
        assert!(matches!(alpha_from_theta_d1(&t), Err(Error::Contract(_))));
    }
}
