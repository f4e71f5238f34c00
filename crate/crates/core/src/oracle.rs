//! Exact diagonalization: full spectra, `S_T^z` sector decomposition and
//! matching of Bethe energies against the exact levels.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{OperatorMatrix, State};
use crate::spin::{Sector, SiteList, DEFAULT_DIM_CAP};

/// Relative Hermiticity tolerance for the Hermitian path.
pub const HERMITIAN_RTOL: f64 = 1e-10;
/// Relative `[H, S_T^z]` tolerance for sector decomposition.
pub const BLOCK_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Eigenvalues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Eigenvalues {
    pub fn len(&self) -> usize {
        match self {
            Eigenvalues::Real(v) => v.len(),
            Eigenvalues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Eigenvalues with optional eigenvectors (columns) and `S_T^z` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Eigenvalues,
    pub eigenvectors: Option<DMatrix<Complex64>>,
    pub sectors: Option<Vec<Sector>>,
}

impl Spectrum {
    /// Real eigenvalues; `None` on the general path.
    pub fn real(&self) -> Option<&[f64]> {
        match &self.eigenvalues {
            Eigenvalues::Real(v) => Some(v),
            Eigenvalues::Complex(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, i: usize) -> Option<State> {
        self.eigenvectors.as_ref().map(|v| v.column(i).into_owned())
    }

    /// `(sector, eigenvalue)` pairs of a real, labelled spectrum.
    pub fn labelled(&self) -> Vec<(Sector, f64)> {
        match (self.real(), &self.sectors) {
            (Some(vals), Some(secs)) => secs.iter().copied().zip(vals.iter().copied()).collect(),
            _ => Vec::new(),
        }
    }
}

fn check_cap(h: &OperatorMatrix) -> Result<()> {
    if h.dim() > DEFAULT_DIM_CAP {
        return Err(Error::Capacity {
            dim: h.dim(),
            cap: DEFAULT_DIM_CAP,
        });
    }
    Ok(())
}

/// Full eigendecomposition of `h`.
///
/// The Hermitian path checks `||H - H^†|| <= 1e-10 ||H||` and returns ascending
/// real eigenvalues with eigenvectors; the general path returns Schur
/// eigenvalues sorted by real then imaginary part.
pub fn exact_spectrum(h: &OperatorMatrix, hermitian: bool) -> Result<Spectrum> {
    check_cap(h)?;
    if hermitian {
        let scale = h.max_abs();
        let defect = h.hermiticity_defect();
        if defect > HERMITIAN_RTOL * scale {
            return Err(Error::NotHermitian(defect / scale));
        }
        let (vals, vecs) = hermitian_eigen(h.matrix());
        Ok(Spectrum {
            eigenvalues: Eigenvalues::Real(vals),
            eigenvectors: Some(vecs),
            sectors: None,
        })
    } else {
        let mut vals: Vec<Complex64> = if h.dim() == 0 {
            Vec::new()
        } else {
            Schur::new(h.matrix().clone())
                .eigenvalues()
                .ok_or_else(|| Error::Consistency("Schur form is not triangular".into()))?
                .iter()
                .copied()
                .collect()
        };
        vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(Spectrum {
            eigenvalues: Eigenvalues::Complex(vals),
            eigenvectors: None,
            sectors: None,
        })
    }
}

/// Ascending eigenvalues and matching eigenvector columns of the Hermitian part of `m`.
fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// One `S_T^z` block of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct SectorBlock {
    pub sector: Sector,
    /// Product-basis indices spanning the block.
    pub basis: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Block-local eigenvectors (columns indexed like `basis`).
    pub eigenvectors: DMatrix<Complex64>,
}

/// Splits a Hermitian `h` into `S_T^z` blocks and diagonalizes each.
///
/// Blocks come in descending sector order.
pub fn sector_decompose(h: &OperatorMatrix, sites: &SiteList) -> Result<Vec<SectorBlock>> {
    check_cap(h)?;
    if h.dim() != sites.dim() {
        return Err(Error::DimensionMismatch {
            expected: sites.dim(),
            got: h.dim(),
        });
    }
    let scale = h.max_abs();
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_RTOL * scale {
        return Err(Error::NotHermitian(defect / scale));
    }
    let labels = sites.basis_sectors();
    // [H, S^z] has entries (s_j - s_i) H_ij
    let mut comm = 0.0_f64;
    for j in 0..h.dim() {
        for i in 0..h.dim() {
            let ds = (labels[j].0 - labels[i].0) as f64 * 0.5;
            comm = comm.max((h.get(i, j) * ds).norm());
        }
    }
    if comm > BLOCK_RTOL * scale {
        return Err(Error::NotBlockDiagonal(comm / scale));
    }
    let mut sectors: Vec<Sector> = labels.clone();
    sectors.sort_by(|a, b| b.cmp(a));
    sectors.dedup();
    Ok(sectors
        .into_iter()
        .map(|sector| {
            let basis: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == sector).collect();
            let block = DMatrix::from_fn(basis.len(), basis.len(), |r, c| h.get(basis[r], basis[c]));
            let (eigenvalues, eigenvectors) = hermitian_eigen(&block);
            SectorBlock {
                sector,
                basis,
                eigenvalues,
                eigenvectors,
            }
        })
        .collect())
}

/// Full spectrum assembled from the sector blocks, labelled by sector.
///
/// Eigenvectors are block eigenvectors embedded in the full space, so each
/// is an exact `S_T^z` eigenstate even inside degenerate multiplets.
pub fn sector_spectrum(h: &OperatorMatrix, sites: &SiteList) -> Result<Spectrum> {
    let blocks = sector_decompose(h, sites)?;
    let dim = h.dim();
    let mut entries: Vec<(f64, Sector, usize, usize)> = Vec::with_capacity(dim);
    for (b, block) in blocks.iter().enumerate() {
        for (k, &e) in block.eigenvalues.iter().enumerate() {
            entries.push((e, block.sector, b, k));
        }
    }
    entries.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)).then(x.3.cmp(&y.3)));
    let mut vecs = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, &(_, _, b, k)) in entries.iter().enumerate() {
        let block = &blocks[b];
        for (r, &global) in block.basis.iter().enumerate() {
            vecs[(global, col)] = block.eigenvectors[(r, k)];
        }
    }
    Ok(Spectrum {
        eigenvalues: Eigenvalues::Real(entries.iter().map(|e| e.0).collect()),
        eigenvectors: Some(vecs),
        sectors: Some(entries.iter().map(|e| e.1).collect()),
    })
}

/// Trace identities `tr H = sum lambda` and `tr H^2 = sum lambda^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceCheck {
    pub trace: f64,
    pub eigenvalue_sum: f64,
    pub trace_of_square: f64,
    pub eigenvalue_square_sum: f64,
    pub passed: bool,
}

pub fn trace_check(h: &OperatorMatrix, eigenvalues: &[f64]) -> TraceCheck {
    let norm = h.max_abs();
    let trace = h.trace().re;
    let trace_of_square = h.matmul(h).trace().re;
    let eigenvalue_sum: f64 = eigenvalues.iter().sum();
    let eigenvalue_square_sum: f64 = eigenvalues.iter().map(|x| x * x).sum();
    let passed = (trace - eigenvalue_sum).abs() <= 1e-9 * norm.max(f64::MIN_POSITIVE) * h.dim() as f64
        && (trace_of_square - eigenvalue_square_sum).abs() <= 1e-8 * (norm * norm).max(f64::MIN_POSITIVE) * h.dim() as f64;
    TraceCheck {
        trace,
        eigenvalue_sum,
        trace_of_square,
        eigenvalue_square_sum,
        passed,
    }
}

/// Index ranges of an ascending sequence grouped by gaps above `tol`.
pub fn degenerate_groups(sorted: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            if i > start {
                groups.push(start..i);
            }
            start = i;
        }
    }
    groups
}

/// `2S + 1` copies of a highest-weight level with `top = 2S`, one per sector.
pub fn expand_multiplet(top: Sector, energy: f64) -> Vec<(Sector, f64)> {
    (0..=top.0.max(0) as usize)
        .map(|k| (Sector(top.0 - 2 * k as i64), energy))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchedLevel {
    pub sector: Sector,
    pub bethe: f64,
    pub oracle: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabelledLevel {
    pub sector: Sector,
    pub energy: f64,
}

/// Outcome of matching Bethe energies against exact levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchReport {
    pub tolerance: f64,
    pub matched: Vec<MatchedLevel>,
    /// Exact levels no Bethe energy was assigned to.
    pub unmatched_oracle: Vec<LabelledLevel>,
    /// Bethe energies without an exact partner.
    pub unmatched_bethe: Vec<LabelledLevel>,
    pub max_gap: f64,
}

impl MatchReport {
    pub fn complete(&self) -> bool {
        self.unmatched_oracle.is_empty() && self.unmatched_bethe.is_empty()
    }
}

/// Greedy nearest matching of `(sector, energy)` pairs against a labelled spectrum.
///
/// Bethe entries are processed in descending sector, ascending energy order;
/// each takes the nearest unused exact level of its own sector and counts
/// as matched when the gap is at most `tolerance`.
pub fn match_spectra(bethe: &[(Sector, f64)], oracle: &Spectrum, tolerance: f64) -> MatchReport {
    let levels: Vec<(Sector, f64)> = match (oracle.real(), &oracle.sectors) {
        (Some(vals), Some(secs)) => secs.iter().copied().zip(vals.iter().copied()).collect(),
        (Some(vals), None) => vals.iter().map(|&v| (Sector(0), v)).collect(),
        (None, _) => Vec::new(),
    };
    let ignore_sector = oracle.sectors.is_none();
    let mut used = vec![false; levels.len()];
    let mut order: Vec<&(Sector, f64)> = bethe.iter().collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut matched = Vec::new();
    let mut unmatched_bethe = Vec::new();
    for &(sector, energy) in order {
        let best = levels
            .iter()
            .enumerate()
            .filter(|(i, (s, _))| !used[*i] && (ignore_sector || *s == sector))
            .map(|(i, (_, e))| (i, (e - energy).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, gap)) if gap <= tolerance => {
                used[i] = true;
                matched.push(MatchedLevel {
                    sector,
                    bethe: energy,
                    oracle: levels[i].1,
                    gap,
                });
            }
            _ => unmatched_bethe.push(LabelledLevel { sector, energy }),
        }
    }
    let unmatched_oracle = levels
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(&(sector, energy), _)| LabelledLevel { sector, energy })
        .collect();
    let max_gap = matched.iter().fold(0.0_f64, |m, l| m.max(l.gap));
    MatchReport {
        tolerance,
        matched,
        unmatched_oracle,
        unmatched_bethe,
        max_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrable::ModelSpec;
    use crate::model::{build_hamiltonian, couplings_from_spec, CouplingSet};
    use crate::spin::{total_spin_squared, total_sz};

    fn dot_product_hamiltonian() -> (OperatorMatrix, SiteList) {
        let sites = SiteList::spin_half(1, 1).unwrap();
        let cs = couplings_from_spec(&ModelSpec::isotropic(sites.clone())).unwrap();
        (build_hamiltonian(&cs, &sites).unwrap(), sites)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn dot_product_spectrum() {
        let (h, _) = dot_product_hamiltonian();
        let s = exact_spectrum(&h, true).unwrap();
        assert!(close(s.real().unwrap(), &[-1.5, 0.5, 0.5, 0.5], 1e-14));
        let g = exact_spectrum(&h, false).unwrap();
        match g.eigenvalues {
            Eigenvalues::Complex(v) => {
                let re: Vec<f64> = v.iter().map(|z| z.re).collect();
                assert!(close(&re, &[-1.5, 0.5, 0.5, 0.5], 1e-12));
            }
            Eigenvalues::Real(_) => panic!("general path must be complex"),
        }
    }

    #[test]
    fn total_spin_squared_eigenvalues() {
        let sites = SiteList::spin_half(1, 1).unwrap();
        let s = exact_spectrum(&total_spin_squared(&sites), true).unwrap();
        assert!(close(s.real().unwrap(), &[0.0, 2.0, 2.0, 2.0], 1e-13));
    }

    #[test]
    fn zero_matrix() {
        let s = exact_spectrum(&OperatorMatrix::zeros(6), true).unwrap();
        assert!(s.real().unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn eigenpairs_satisfy_residual_bound() {
        let sites = SiteList::spin_half(2, 2).unwrap();
        let h = build_hamiltonian(&couplings_from_spec(&ModelSpec::isotropic(sites.clone())).unwrap(), &sites).unwrap();
        let s = exact_spectrum(&h, true).unwrap();
        for (i, &e) in s.real().unwrap().iter().enumerate() {
            let v = s.eigenvector(i).unwrap();
            assert!((h.apply(&v) - v.scale(e) * Complex64::new(1.0, 0.0)).norm() <= 1e-9 * h.max_abs());
        }
    }

    #[test]
    fn rejects_non_hermitian_and_oversized() {
        let mut h = OperatorMatrix::zeros(2);
        h.set(0, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(exact_spectrum(&h, true), Err(Error::NotHermitian(_))));
        assert!(exact_spectrum(&h, false).is_ok());
        let big = OperatorMatrix::zeros(DEFAULT_DIM_CAP + 1);
        assert!(matches!(exact_spectrum(&big, true), Err(Error::Capacity { .. })));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn ising_energies_match_enumeration() {
        // Jxy = 0: H is diagonal, eigenvalues are the classical energies
        let sites = SiteList::spin_half(2, 2).unwrap();
        let mut cs = CouplingSet::zeros(2, 2);
        cs.bz_a = vec![0.3, -0.2];
        cs.bz_b = vec![0.7, 0.1];
        cs.d_a = vec![0.5, 0.5];
        cs.jz_aa = vec![vec![0.0, 1.1], vec![1.1, 0.0]];
        cs.jz_bb = vec![vec![0.0, -0.4], vec![-0.4, 0.0]];
        cs.jz_ab = vec![vec![0.9, -1.3], vec![0.2, 0.6]];
        let h = build_hamiltonian(&cs, &sites).unwrap();
        let mut expect = Vec::new();
        for bits in 0..16u32 {
            // basis index bits, most significant = first site; 0 = up
            let s = |i: u32| if (bits >> (3 - i)) & 1 == 0 { 0.5 } else { -0.5 };
            let (a, b) = ([s(0), s(1)], [s(2), s(3)]);
            let mut e = 0.0;
            for j in 0..2 {
                e += cs.bz_a[j] * a[j] + cs.d_a[j] * a[j] * a[j] + cs.bz_b[j] * b[j] + cs.d_b[j] * b[j] * b[j];
                for k in 0..2 {
                    e += cs.jz_ab[j][k] * a[j] * b[k];
                }
            }
            e += cs.jz_aa[0][1] * a[0] * a[1] + cs.jz_bb[0][1] * b[0] * b[1];
            expect.push(e);
        }
        expect.sort_by(f64::total_cmp);
        let s = exact_spectrum(&h, true).unwrap();
        assert!(close(s.real().unwrap(), &expect, 1e-13));
    }

    #[test]
    fn two_spin_sector_dimensions() {
        let (h, sites) = dot_product_hamiltonian();
        let blocks = sector_decompose(&h, &sites).unwrap();
        let dims: Vec<(i64, usize)> = blocks.iter().map(|b| (b.sector.0, b.basis.len())).collect();
        assert_eq!(dims, vec![(2, 1), (0, 2), (-2, 1)]);
    }

    #[test]
    fn sector_union_equals_full_spectrum() {
        let sites = SiteList::spin_half(2, 2).unwrap();
        let spec = crate::sampling::random_spec(sites.clone(), &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3));
        let h = build_hamiltonian(&couplings_from_spec(&spec).unwrap(), &sites).unwrap();
        let full = exact_spectrum(&h, true).unwrap();
        let sec = sector_spectrum(&h, &sites).unwrap();
        let scale = h.max_abs();
        assert!(close(full.real().unwrap(), sec.real().unwrap(), 1e-9 * scale));
        let sz = total_sz(&sites);
        for (i, label) in sec.sectors.as_ref().unwrap().iter().enumerate() {
            let v = sec.eigenvector(i).unwrap();
            assert!((sz.expectation(&v).re - label.value()).abs() <= 1e-8);
        }
        let tc = trace_check(&h, full.real().unwrap());
        assert!(tc.passed, "{tc:?}");
    }

    #[test]
    fn sector_decompose_rejects_mixing() {
        let sites = SiteList::spin_half(1, 1).unwrap();
        let mut h = OperatorMatrix::zeros(4);
        h.set(0, 1, Complex64::new(1.0, 0.0));
        h.set(1, 0, Complex64::new(1.0, 0.0));
        assert!(matches!(sector_decompose(&h, &sites), Err(Error::NotBlockDiagonal(_))));
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let sites = SiteList::spin_half(3, 2).unwrap();
        let h = build_hamiltonian(&couplings_from_spec(&ModelSpec::isotropic(sites.clone())).unwrap(), &sites).unwrap();
        let a = exact_spectrum(&h, true).unwrap();
        let b = exact_spectrum(&h, true).unwrap();
        assert_eq!(a.real().unwrap(), b.real().unwrap());
    }

    #[test]
    fn matching_dot_product_with_multiplets() {
        let (h, sites) = dot_product_hamiltonian();
        let oracle = sector_spectrum(&h, &sites).unwrap();
        let mut bethe = expand_multiplet(Sector(2), 0.5);
        bethe.extend(expand_multiplet(Sector(0), -1.5));
        let report = match_spectra(&bethe, &oracle, 1e-9);
        assert!(report.complete());
        assert_eq!(report.matched.len(), 4);

        let exact = match_spectra(&bethe, &oracle, 0.0);
        assert!(exact.matched.iter().all(|m| m.gap == 0.0));

        let perturbed = vec![(Sector(0), -1.4)];
        let r = match_spectra(&perturbed, &oracle, 1e-6);
        assert_eq!(r.unmatched_bethe.len(), 1);
        assert_eq!(r.unmatched_oracle.len(), 4);
    }

    #[test]
    fn degenerate_grouping() {
        let g = degenerate_groups(&[-1.5, 0.5, 0.5 + 1e-12, 0.5, 2.0], 1e-8);
        assert_eq!(g, vec![0..1, 1..4, 4..5]);
    }
}
