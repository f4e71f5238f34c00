//! Spin matrices, site lists and their embedding into the cluster Hilbert space.
//!
//! Global basis ordering: a-sites in index order, then b-sites in index order;
//! within one site the basis runs over descending `S^z` (`s, s-1, ..., -s`).
//! `hbar = 1`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

/// Default cap on the Hilbert-space dimension of a [`SiteList`].
pub const DEFAULT_DIM_CAP: usize = 16384;

/// A positive half-integer spin magnitude, stored as `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin(u32);

impl Spin {
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin("spin magnitude must be positive".into()));
        }
        Ok(Spin(twice))
    }

    /// Accepts a float only if it is a positive half-integer.
    pub fn from_f64(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !twice.is_finite() || twice < 0.5 || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::InvalidSpin(format!("{s} is not a positive half-integer")));
        }
        Spin::from_twice(twice.round() as u32)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// `2s + 1`
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for Spin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidSpin(format!("cannot parse {t:?} as a half-integer spin"));
        match t.split_once('/') {
            Some((num, den)) => {
                let num: u32 = num.trim().parse().map_err(|_| bad())?;
                let den: u32 = den.trim().parse().map_err(|_| bad())?;
                match den {
                    1 => Spin::from_twice(2 * num),
                    2 => Spin::from_twice(num),
                    _ => Err(bad()),
                }
            }
            None => {
                let whole: u32 = t.parse().map_err(|_| bad())?;
                Spin::from_twice(2 * whole)
            }
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which of the two spin species a site belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    A,
    B,
}

/// Total `S^z` eigenvalue stored as `2 S^z` so that half-integers compare exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sector(pub i64);

impl Sector {
    pub fn from_value(sz: f64) -> Self {
        Sector((2.0 * sz).round() as i64)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl Serialize for Sector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// The spin magnitudes of the `n` a-sites and `m` b-sites of a cluster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteList {
    a: Vec<Spin>,
    b: Vec<Spin>,
    dim: usize,
}

impl Serialize for SiteList {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Record<'a> {
            a: &'a [Spin],
            b: &'a [Spin],
        }
        Record { a: &self.a, b: &self.b }.serialize(serializer)
    }
}

impl SiteList {
    pub fn new(a: Vec<Spin>, b: Vec<Spin>) -> Result<Self> {
        Self::with_cap(a, b, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(a: Vec<Spin>, b: Vec<Spin>, cap: usize) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidSites(format!(
                "need at least one site of each species (got n={}, m={})",
                a.len(),
                b.len()
            )));
        }
        let mut dim: usize = 1;
        for s in a.iter().chain(&b) {
            dim = dim.saturating_mul(s.dim());
            if dim > cap {
                // keep multiplying only to report a meaningful number
                let full = a
                    .iter()
                    .chain(&b)
                    .fold(1usize, |acc, s| acc.saturating_mul(s.dim()));
                return Err(Error::Capacity { dim: full, cap });
            }
        }
        Ok(SiteList { a, b, dim })
    }

    /// `n` spin-1/2 a-sites and `m` spin-1/2 b-sites.
    pub fn spin_half(n: usize, m: usize) -> Result<Self> {
        Self::new(vec![Spin::HALF; n], vec![Spin::HALF; m])
    }

    pub fn a(&self) -> &[Spin] {
        &self.a
    }

    pub fn b(&self) -> &[Spin] {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn num_sites(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_a(&self) -> usize {
        self.a.iter().map(|s| s.dim()).product()
    }

    pub fn dim_b(&self) -> usize {
        self.b.iter().map(|s| s.dim()).product()
    }

    /// Spin at a global site index (a-sites first).
    pub fn spin(&self, site: usize) -> Result<Spin> {
        self.a
            .iter()
            .chain(&self.b)
            .nth(site)
            .copied()
            .ok_or(Error::SiteIndex {
                index: site,
                count: self.num_sites(),
            })
    }

    pub fn species(&self, site: usize) -> Species {
        if site < self.a.len() {
            Species::A
        } else {
            Species::B
        }
    }

    /// Global index of the `j`-th site (0-based) of a species.
    pub fn global_index(&self, species: Species, j: usize) -> usize {
        match species {
            Species::A => j,
            Species::B => self.a.len() + j,
        }
    }

    pub fn site_dims(&self) -> Vec<usize> {
        self.a.iter().chain(&self.b).map(|s| s.dim()).collect()
    }

    /// `M_a = sum_j s_aj`
    pub fn m_a(&self) -> f64 {
        self.a.iter().map(|s| s.value()).sum()
    }

    /// `M_b = sum_k s_bk`
    pub fn m_b(&self) -> f64 {
        self.b.iter().map(|s| s.value()).sum()
    }

    /// Twice the total `S^z` of every product-basis state, in basis order.
    pub fn basis_sectors(&self) -> Vec<Sector> {
        twice_sz_of_basis(&self.site_dims())
            .into_iter()
            .map(Sector)
            .collect()
    }
}

/// Twice the total `S^z` of each product-basis state over sites of the given dimensions.
pub(crate) fn twice_sz_of_basis(dims: &[usize]) -> Vec<i64> {
    let mut out = vec![0i64];
    for &d in dims {
        let twice_s = d as i64 - 1;
        let mut next = Vec::with_capacity(out.len() * d);
        for &acc in &out {
            for k in 0..d as i64 {
                next.push(acc + twice_s - 2 * k);
            }
        }
        out = next;
    }
    out
}

/// `S^z`, `S^+`, `S^-` of a single spin.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub sz: OperatorMatrix,
    pub splus: OperatorMatrix,
    pub sminus: OperatorMatrix,
}

impl SpinMatrices {
    /// `S^x = (S^+ + S^-)/2`
    pub fn sx(&self) -> OperatorMatrix {
        (&self.splus + &self.sminus).scale_real(0.5)
    }

    /// `S^y = (S^+ - S^-)/(2i)`
    pub fn sy(&self) -> OperatorMatrix {
        (&self.splus - &self.sminus).scale(Complex64::new(0.0, -0.5))
    }
}

pub fn spin_matrices(s: Spin) -> SpinMatrices {
    let d = s.dim();
    let sv = s.value();
    let m_of = |i: usize| sv - i as f64;
    let sz = OperatorMatrix::from_real_diagonal(&(0..d).map(m_of).collect::<Vec<_>>());
    let mut splus = OperatorMatrix::zeros(d);
    for i in 1..d {
        // |m> at index i is raised to |m+1> at index i-1
        let m = m_of(i);
        let amp = (sv * (sv + 1.0) - m * (m + 1.0)).sqrt();
        splus.set(i - 1, i, Complex64::new(amp, 0.0));
    }
    let sminus = splus.adjoint();
    SpinMatrices { sz, splus, sminus }
}

/// Kronecker embedding `I ⊗ … ⊗ op ⊗ … ⊗ I` over sites of the given dimensions.
pub(crate) fn embed_in_dims(op: &OperatorMatrix, site: usize, dims: &[usize]) -> Result<OperatorMatrix> {
    if site >= dims.len() {
        return Err(Error::SiteIndex {
            index: site,
            count: dims.len(),
        });
    }
    let d = dims[site];
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: op.dim(),
        });
    }
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    let total = left * d * right;
    let mut out = OperatorMatrix::zeros(total);
    for i in 0..d {
        for j in 0..d {
            let x = op.get(i, j);
            if x == crate::operator::ZERO {
                continue;
            }
            for l in 0..left {
                for r in 0..right {
                    out.set((l * d + i) * right + r, (l * d + j) * right + r, x);
                }
            }
        }
    }
    Ok(out)
}

/// Embeds a single-site operator at a global site index.
pub fn embed(op: &OperatorMatrix, site: usize, sites: &SiteList) -> Result<OperatorMatrix> {
    embed_in_dims(op, site, &sites.site_dims())
}

/// Embedded `S^z`, `S^+`, `S^-` for every site of a cluster.
#[derive(Clone, Debug)]
pub struct SiteOperators {
    pub sz: Vec<OperatorMatrix>,
    pub splus: Vec<OperatorMatrix>,
    pub sminus: Vec<OperatorMatrix>,
}

impl SiteOperators {
    pub fn new(sites: &SiteList) -> Self {
        let dims = sites.site_dims();
        Self::from_dims(&dims, sites.a().iter().chain(sites.b()))
    }

    pub(crate) fn from_dims<'a>(dims: &[usize], spins: impl Iterator<Item = &'a Spin>) -> Self {
        let mut sz = Vec::new();
        let mut splus = Vec::new();
        let mut sminus = Vec::new();
        for (site, s) in spins.enumerate() {
            let mats = spin_matrices(*s);
            // dims come from the same spins, so embedding cannot fail
            sz.push(embed_in_dims(&mats.sz, site, dims).expect("consistent dims"));
            splus.push(embed_in_dims(&mats.splus, site, dims).expect("consistent dims"));
            sminus.push(embed_in_dims(&mats.sminus, site, dims).expect("consistent dims"));
        }
        SiteOperators { sz, splus, sminus }
    }

    pub fn dim(&self) -> usize {
        self.sz[0].dim()
    }

    /// `sum_i w_i O_i` over the given global site indices.
    pub fn weighted_sum(
        ops: &[OperatorMatrix],
        sites: impl Iterator<Item = usize>,
        weights: impl Iterator<Item = f64>,
    ) -> OperatorMatrix {
        let mut out = OperatorMatrix::zeros(ops[0].dim());
        for (i, w) in sites.zip(weights) {
            out.axpy(Complex64::new(w, 0.0), &ops[i]);
        }
        out
    }
}

/// `S_T^z = sum_j S^z_aj + sum_k S^z_bk`, diagonal in the product basis.
pub fn total_sz(sites: &SiteList) -> OperatorMatrix {
    let diag: Vec<f64> = sites
        .basis_sectors()
        .into_iter()
        .map(|s| s.value())
        .collect();
    OperatorMatrix::from_real_diagonal(&diag)
}

/// `S_T^2 = (S_T^x)^2 + (S_T^y)^2 + (S_T^z)^2`.
pub fn total_spin_squared(sites: &SiteList) -> OperatorMatrix {
    let ops = SiteOperators::new(sites);
    let n = sites.num_sites();
    let ones = || std::iter::repeat(1.0);
    let sp = SiteOperators::weighted_sum(&ops.splus, 0..n, ones());
    let sm = SiteOperators::weighted_sum(&ops.sminus, 0..n, ones());
    let sz = total_sz(sites);
    // S^2 = (S+S- + S-S+)/2 + Sz^2
    let mut out = (&sp.matmul(&sm) + &sm.matmul(&sp)).scale_real(0.5);
    out += &sz.matmul(&sz);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn parses_rational_spins() {
        assert_eq!("1/2".parse::<Spin>().unwrap(), Spin::HALF);
        assert_eq!("1".parse::<Spin>().unwrap(), Spin::ONE);
        assert_eq!(" 3/2 ".parse::<Spin>().unwrap().twice(), 3);
        assert_eq!("2/1".parse::<Spin>().unwrap().twice(), 4);
        assert!("0".parse::<Spin>().is_err());
        assert!("1/3".parse::<Spin>().is_err());
        assert!("-1/2".parse::<Spin>().is_err());
        assert!("abc".parse::<Spin>().is_err());
        assert!(Spin::from_f64(0.75).is_err());
        assert!(Spin::from_f64(-0.5).is_err());
        assert_eq!(Spin::from_f64(1.5).unwrap().to_string(), "3/2");
    }

    #[test]
    fn spin_half_matrices() {
        let m = spin_matrices(Spin::HALF);
        assert_eq!(m.sz.diagonal(), vec![c(0.5), c(-0.5)]);
        assert_eq!(m.splus.get(0, 1), c(1.0));
        assert_eq!(m.splus.nnz(), 1);
        assert_eq!(m.sminus.get(1, 0), c(1.0));
    }

    #[test]
    fn spin_one_raising_entries() {
        let m = spin_matrices(Spin::ONE);
        let r2 = 2f64.sqrt();
        assert!((m.splus.get(0, 1) - c(r2)).norm() < 1e-15);
        assert!((m.splus.get(1, 2) - c(r2)).norm() < 1e-15);
        assert_eq!(m.splus.nnz(), 2);
    }

    #[test]
    fn su2_relations_hold_for_many_magnitudes() {
        for twice in 1..=9 {
            let m = spin_matrices(Spin::from_twice(twice).unwrap());
            let pm = m.splus.commutator(&m.sminus);
            assert!((&pm - &m.sz.scale_real(2.0)).max_abs() < 1e-13);
            assert!((&m.sz.commutator(&m.splus) - &m.splus).max_abs() < 1e-13);
            assert!((&m.sz.commutator(&m.sminus) + &m.sminus).max_abs() < 1e-13);
            // Casimir commutes with the ladder operators and equals s(s+1)
            let s = twice as f64 / 2.0;
            let (sx, sy) = (m.sx(), m.sy());
            let casimir = &(&sx.matmul(&sx) + &sy.matmul(&sy)) + &m.sz.matmul(&m.sz);
            assert!((&casimir - &OperatorMatrix::identity(m.sz.dim()).scale_real(s * (s + 1.0))).max_abs() < 1e-12);
            assert!(casimir.commutator(&m.splus).max_abs() < 1e-12);
            // [S^x, S^y] = i S^z and cyclic
            let i = Complex64::new(0.0, 1.0);
            assert!((&sx.commutator(&sy) - &m.sz.scale(i)).max_abs() < 1e-13);
            assert!((&sy.commutator(&m.sz) - &sx.scale(i)).max_abs() < 1e-13);
            assert!((&m.sz.commutator(&sx) - &sy.scale(i)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn embed_places_operator_on_its_factor() {
        let sites = SiteList::spin_half(1, 1).unwrap();
        let m = spin_matrices(Spin::HALF);
        let e = embed(&m.sz, 0, &sites).unwrap();
        assert_eq!(e.diagonal(), vec![c(0.5), c(0.5), c(-0.5), c(-0.5)]);
        let id = embed(&OperatorMatrix::identity(2), 1, &sites).unwrap();
        assert_eq!(id, OperatorMatrix::identity(4));
    }

    #[test]
    fn embed_rejects_bad_input() {
        let sites = SiteList::new(vec![Spin::ONE], vec![Spin::HALF]).unwrap();
        let half = spin_matrices(Spin::HALF);
        assert!(matches!(
            embed(&half.sz, 0, &sites),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(embed(&half.sz, 2, &sites), Err(Error::SiteIndex { .. })));
    }

    #[test]
    fn embedded_operators_on_distinct_sites_commute() {
        let sites = SiteList::new(vec![Spin::HALF, Spin::ONE], vec![Spin::from_twice(3).unwrap()]).unwrap();
        let ops = SiteOperators::new(&sites);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(ops.splus[i].commutator(&ops.sminus[j]).max_abs(), 0.0);
                    assert_eq!(ops.sz[i].commutator(&ops.splus[j]).max_abs(), 0.0);
                }
            }
        }
    }

    #[test]
    fn site_list_dimension_and_cap() {
        let sites = SiteList::new(vec![Spin::HALF, Spin::ONE], vec![Spin::HALF]).unwrap();
        assert_eq!(sites.dim(), 12);
        assert_eq!(sites.m_a(), 1.5);
        assert!(matches!(
            SiteList::with_cap(vec![Spin::HALF; 5], vec![Spin::HALF; 5], 512),
            Err(Error::Capacity { dim: 1024, cap: 512 })
        ));
        assert!(SiteList::new(vec![], vec![Spin::HALF]).is_err());
    }

    #[test]
    fn total_sz_two_halves() {
        let sites = SiteList::spin_half(1, 1).unwrap();
        assert_eq!(total_sz(&sites).diagonal(), vec![c(1.0), c(0.0), c(0.0), c(-1.0)]);
    }

    #[test]
    fn total_sz_trace_and_top_weight() {
        let sites = SiteList::new(vec![Spin::ONE, Spin::HALF], vec![Spin::from_twice(3).unwrap()]).unwrap();
        let sz = total_sz(&sites);
        assert!(sz.trace().norm() < 1e-14);
        assert_eq!(sz.get(0, 0), c(sites.m_a() + sites.m_b()));
    }

    #[test]
    fn total_spin_squared_two_halves() {
        let sites = SiteList::spin_half(1, 1).unwrap();
        let s2 = total_spin_squared(&sites);
        assert!(s2.hermiticity_defect() < 1e-15);
        assert!(s2.commutator(&total_sz(&sites)).max_abs() < 1e-15);
        // triplet S(S+1)=2 three times plus the singlet: trace 6
        assert!((s2.trace() - c(6.0)).norm() < 1e-14);
    }
}
