//! The physical two-species Hamiltonian, the map from integrable parameters
//! to physical couplings, its inverse, and the interaction graph.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrable::{IntegrableModel, ModelSpec};
use crate::operator::OperatorMatrix;
use crate::spin::{SiteList, SiteOperators, Species, Spin};

/// Couplings with magnitude at or below this do not produce graph edges.
pub const EDGE_THRESHOLD: f64 = 1e-12;

/// Relative tolerance for the uniformity checks in [`fit_parameters`].
const FIT_RTOL: f64 = 1e-9;

/// Physical couplings: fields, single-ion anisotropies and exchange constants.
///
/// Intra-species `jz_aa`, `jz_bb` are symmetric with zero diagonal; entry
/// `(i, j)` is the coupling of the unordered pair `{i, j}` and enters the
/// Hamiltonian once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub bz_a: Vec<f64>,
    pub bz_b: Vec<f64>,
    pub d_a: Vec<f64>,
    pub d_b: Vec<f64>,
    pub jz_aa: Vec<Vec<f64>>,
    pub jz_bb: Vec<Vec<f64>>,
    pub jz_ab: Vec<Vec<f64>>,
    pub jxy_ab: Vec<Vec<f64>>,
    /// Coefficient of `C2` when the set came from a [`ModelSpec`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi2: Option<f64>,
}

impl CouplingSet {
    pub fn zeros(n: usize, m: usize) -> Self {
        CouplingSet {
            bz_a: vec![0.0; n],
            bz_b: vec![0.0; m],
            d_a: vec![0.0; n],
            d_b: vec![0.0; m],
            jz_aa: vec![vec![0.0; n]; n],
            jz_bb: vec![vec![0.0; m]; m],
            jz_ab: vec![vec![0.0; m]; n],
            jxy_ab: vec![vec![0.0; m]; n],
            xi2: None,
        }
    }

    pub fn n(&self) -> usize {
        self.bz_a.len()
    }

    pub fn m(&self) -> usize {
        self.bz_b.len()
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.bz_a
            .iter()
            .chain(&self.bz_b)
            .chain(&self.d_a)
            .chain(&self.d_b)
            .chain(self.jz_aa.iter().flatten())
            .chain(self.jz_bb.iter().flatten())
            .chain(self.jz_ab.iter().flatten())
            .chain(self.jxy_ab.iter().flatten())
            .copied()
    }

    /// Largest coupling magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Checks shapes against `(n, m)` and the symmetric/zero-diagonal invariants.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let mut problems = Vec::new();
        let vec_len = |name: &str, v: &Vec<f64>, want: usize, problems: &mut Vec<String>| {
            if v.len() != want {
                problems.push(format!("{name} has length {}, expected {want}", v.len()));
            }
        };
        vec_len("bz_a", &self.bz_a, n, &mut problems);
        vec_len("bz_b", &self.bz_b, m, &mut problems);
        vec_len("d_a", &self.d_a, n, &mut problems);
        vec_len("d_b", &self.d_b, m, &mut problems);
        let mat = |name: &str, v: &Vec<Vec<f64>>, rows: usize, cols: usize, problems: &mut Vec<String>| {
            if v.len() != rows || v.iter().any(|r| r.len() != cols) {
                problems.push(format!("{name} must be {rows}x{cols}"));
                false
            } else {
                true
            }
        };
        for (name, j, size) in [("jz_aa", &self.jz_aa, n), ("jz_bb", &self.jz_bb, m)] {
            if mat(name, j, size, size, &mut problems) {
                if j.iter().enumerate().any(|(i, row)| row[i] != 0.0) {
                    problems.push(format!("{name} must have a zero diagonal"));
                }
                let asym = (0..size)
                    .flat_map(|i| (0..size).map(move |k| (i, k)))
                    .any(|(i, k)| (j[i][k] - j[k][i]).abs() > 1e-12 * j[i][k].abs().max(1.0));
                if asym {
                    problems.push(format!("{name} must be symmetric"));
                }
            }
        }
        mat("jz_ab", &self.jz_ab, n, m, &mut problems);
        mat("jxy_ab", &self.jxy_ab, n, m, &mut problems);
        if self.values().any(|x| !x.is_finite()) {
            problems.push("couplings must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Shape(problems.join("; ")))
        }
    }
}

/// Physical couplings realised by an integrable parameter set.
pub fn couplings_from_spec(spec: &ModelSpec) -> Result<CouplingSet> {
    spec.validate()?;
    let (n, m) = (spec.sites.n(), spec.sites.m());
    let eta = spec.eta;
    let sigma = spec.sigma();
    let delta = spec.delta();
    let om = spec.omega_diff();
    let (xi0, xi1) = (spec.xi0, spec.xi1);
    let aniso = xi1 * eta * eta * delta * delta;
    let mut cs = CouplingSet::zeros(n, m);
    cs.bz_a = vec![eta * delta * (xi0 * spec.omega_b - 2.0 * xi1 * sigma * om - 1.0); n];
    cs.bz_b = vec![-eta * delta * (xi0 * spec.omega_a + 2.0 * xi1 * sigma * om + 1.0); m];
    cs.d_a = vec![aniso; n];
    cs.d_b = vec![aniso; m];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                cs.jz_aa[i][j] = 2.0 * aniso;
            }
        }
    }
    for k in 0..m {
        for l in 0..m {
            if k != l {
                cs.jz_bb[k][l] = 2.0 * aniso;
            }
        }
    }
    let jz = eta * eta * (xi0 * sigma + 2.0 * xi1 * delta * delta);
    for j in 0..n {
        for k in 0..m {
            cs.jz_ab[j][k] = jz;
            cs.jxy_ab[j][k] = 2.0 * xi0 * eta * eta * spec.alpha_a[j] * spec.beta_b[k];
        }
    }
    cs.xi2 = Some(spec.xi2());
    Ok(cs)
}

/// The Hamiltonian assembled term by term from physical couplings.
pub fn build_hamiltonian(couplings: &CouplingSet, sites: &SiteList) -> Result<OperatorMatrix> {
    let (n, m) = (sites.n(), sites.m());
    couplings.validate(n, m)?;
    let ops = SiteOperators::new(sites);
    let a = |j: usize| sites.global_index(Species::A, j);
    let b = |k: usize| sites.global_index(Species::B, k);
    let re = |x: f64| Complex64::new(x, 0.0);
    let mut h = OperatorMatrix::zeros(sites.dim());
    for j in 0..n {
        let sz = &ops.sz[a(j)];
        h.axpy(re(couplings.bz_a[j]), sz);
        h.axpy(re(couplings.d_a[j]), &sz.matmul(sz));
    }
    for k in 0..m {
        let sz = &ops.sz[b(k)];
        h.axpy(re(couplings.bz_b[k]), sz);
        h.axpy(re(couplings.d_b[k]), &sz.matmul(sz));
    }
    for i in 0..n {
        for j in i + 1..n {
            h.axpy(re(couplings.jz_aa[i][j]), &ops.sz[a(i)].matmul(&ops.sz[a(j)]));
        }
    }
    for k in 0..m {
        for l in k + 1..m {
            h.axpy(re(couplings.jz_bb[k][l]), &ops.sz[b(k)].matmul(&ops.sz[b(l)]));
        }
    }
    for j in 0..n {
        for k in 0..m {
            h.axpy(re(couplings.jz_ab[j][k]), &ops.sz[a(j)].matmul(&ops.sz[b(k)]));
            let flip = &ops.splus[a(j)].matmul(&ops.sminus[b(k)]) + &ops.sminus[a(j)].matmul(&ops.splus[b(k)]);
            h.axpy(re(0.5 * couplings.jxy_ab[j][k]), &flip);
        }
    }
    Ok(h)
}

impl IntegrableModel {
    /// `xi0 C0 + C1 + xi1 C1^2 - xi2 C2`.
    pub fn hamiltonian(&self) -> Result<OperatorMatrix> {
        let ch = self.charges()?;
        let s = self.spec();
        let mut h = ch.c0.scale_real(s.xi0);
        h += &ch.c1;
        h.axpy(Complex64::new(s.xi1, 0.0), &ch.c1.matmul(&ch.c1));
        h.axpy(Complex64::new(-s.xi2(), 0.0), &ch.c2);
        Ok(h)
    }
}

/// The Hamiltonian assembled from the conserved charges.
pub fn hamiltonian_from_charges(spec: &ModelSpec) -> Result<OperatorMatrix> {
    IntegrableModel::new(spec.clone())?.hamiltonian()
}

/// Result of inverting the parameter-to-coupling map.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FitOutcome {
    Feasible { spec: ModelSpec },
    Infeasible { reasons: Vec<String> },
}

impl FitOutcome {
    pub fn spec(&self) -> Option<&ModelSpec> {
        match self {
            FitOutcome::Feasible { spec } => Some(spec),
            FitOutcome::Infeasible { .. } => None,
        }
    }
}

/// Recovers integrable parameters reproducing `couplings`, or lists why none exist.
///
/// The map has gauge directions; they are fixed by `eta = 1`, `rho_a = rho_b = 1`
/// (hence `gamma_a = gamma_b`) and `alpha = beta` up to a sign on species b.
pub fn fit_parameters(couplings: &CouplingSet, sites: &SiteList) -> FitOutcome {
    if let Err(e) = couplings.validate(sites.n(), sites.m()) {
        return FitOutcome::Infeasible {
            reasons: vec![e.to_string()],
        };
    }
    let scale = couplings.max_abs().max(f64::MIN_POSITIVE);
    let tol = FIT_RTOL * scale;
    let mut reasons = Vec::new();
    let uniform = |vals: Vec<f64>| -> Option<f64> {
        let first = *vals.first()?;
        vals.iter().all(|v| (v - first).abs() <= tol).then_some(first)
    };
    let (n, m) = (sites.n(), sites.m());
    // Jxy[j][k] = J s_j t_k with signs s, t from the site coefficients
    let j00 = couplings.jxy_ab[0][0];
    let sign0 = if j00 < 0.0 { -1.0 } else { 1.0 };
    let row_signs: Vec<f64> = (0..n).map(|j| sign_of(couplings.jxy_ab[j][0]) * sign0).collect();
    let col_signs: Vec<f64> = (0..m).map(|k| sign_of(couplings.jxy_ab[0][k])).collect();
    let jxy = uniform(couplings.jxy_ab.iter().flatten().map(|x| x.abs()).collect()).map(|mag| sign0 * mag);
    if jxy.is_none() {
        reasons.push("Jxy must be uniform".to_string());
    } else {
        let factorises = (0..n).all(|j| {
            (0..m).all(|k| couplings.jxy_ab[j][k].abs() <= tol || sign_of(couplings.jxy_ab[j][k]) == row_signs[j] * col_signs[k])
        });
        if !factorises {
            reasons.push("Jxy sign pattern must factor into per-site signs".to_string());
        }
    }
    let jz = uniform(couplings.jz_ab.iter().flatten().copied().collect());
    if jz.is_none() {
        reasons.push("Jz between species must be uniform".to_string());
    }
    let bz_a = uniform(couplings.bz_a.clone());
    let bz_b = uniform(couplings.bz_b.clone());
    if bz_a.is_none() || bz_b.is_none() {
        reasons.push("Bz must be site-independent within each species".to_string());
    }
    let d = uniform(couplings.d_a.iter().chain(&couplings.d_b).copied().collect());
    if d.is_none() {
        reasons.push("D must be uniform across all sites".to_string());
    }
    if let Some(d) = d {
        let intra = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| couplings.jz_aa[i][j]))
            .chain((0..m).flat_map(|k| (0..m).filter(move |&l| l != k).map(move |l| couplings.jz_bb[k][l])));
        if intra.into_iter().any(|j| (j - 2.0 * d).abs() > tol) {
            reasons.push("intra-species Jz must equal 2D".to_string());
        }
    }
    let (Some(jxy), Some(jz), Some(bz_a), Some(bz_b), Some(d)) = (jxy, jz, bz_a, bz_b, d) else {
        return FitOutcome::Infeasible { reasons };
    };
    if !reasons.is_empty() {
        return FitOutcome::Infeasible { reasons };
    }
    if jxy.abs() <= tol {
        return FitOutcome::Infeasible {
            reasons: vec!["Jxy must be nonzero (xi0 != 0 and eta != 0)".into()],
        };
    }
    // xi0 sigma = Jz - 2D  and  Jxy = 2 xi0 alpha_a beta_b  with  (alpha_a beta_b)^2 = gamma_a gamma_b rho_a rho_b
    let p = jz - 2.0 * d;
    let ratio = 2.0 * p / jxy;
    let sign = if ratio < 0.0 { -1.0 } else { 1.0 };
    let r = ratio.abs();
    if r < 2.0 - 1e-9 {
        return FitOutcome::Infeasible {
            reasons: vec![format!(
                "|2 (Jz_ab - 2D) / Jxy| = {r} is below 2; no real gamma, rho reproduce it"
            )],
        };
    }
    let disc = (r * r - 4.0).max(0.0).sqrt();
    // sqrt(t) solves t + 1 = r sqrt(t); the two roots are reciprocal
    let roots = [(r + disc) / 2.0, 2.0 / (r + disc)];
    let mut last_reason = String::new();
    for root in roots {
        match fit_with_root(root, sign, p, d, bz_a, bz_b, sites, tol) {
            Ok(mut spec) => {
                for (j, s) in row_signs.iter().enumerate() {
                    spec.alpha_a[j] *= s;
                    spec.beta_a[j] *= s;
                }
                for (k, t) in col_signs.iter().enumerate() {
                    spec.alpha_b[k] *= t * sign0;
                    spec.beta_b[k] *= t * sign0;
                }
                if let Some(mismatch) = round_trip_mismatch(&spec, couplings) {
                    last_reason = format!("round trip reproduces couplings only to {mismatch:.3e}");
                    continue;
                }
                return FitOutcome::Feasible { spec };
            }
            Err(reason) => last_reason = reason,
        }
    }
    FitOutcome::Infeasible {
        reasons: vec![last_reason],
    }
}

fn sign_of(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_with_root(
    sqrt_t: f64,
    sign: f64,
    p: f64,
    d: f64,
    bz_a: f64,
    bz_b: f64,
    sites: &SiteList,
    tol: f64,
) -> std::result::Result<ModelSpec, String> {
    let t = sqrt_t * sqrt_t;
    let sigma = t + 1.0;
    let delta = t - 1.0;
    let xi0 = p / sigma;
    let (xi1, omega_a, omega_b) = if delta.abs() <= 1e-12 {
        if d.abs() > tol || bz_a.abs() > tol || bz_b.abs() > tol {
            return Err("Delta = 0 forces D = 0 and Bz = 0".into());
        }
        (0.0, 0.0, 0.0)
    } else {
        let xi1 = d / (delta * delta);
        // rows: coefficients of (omega_a, omega_b)
        let k = 2.0 * xi1 * sigma;
        let (m11, m12, r1) = (-k, xi0 + k, bz_a / delta + 1.0);
        let (m21, m22, r2) = (-xi0 - k, k, bz_b / delta + 1.0);
        let det = m11 * m22 - m12 * m21;
        if det.abs() <= 1e-12 * (m11.abs() + m12.abs()).max(1.0).powi(2) {
            return Err("field equations are degenerate for this parameter branch".into());
        }
        let omega_a = (r1 * m22 - m12 * r2) / det;
        let omega_b = (m11 * r2 - r1 * m21) / det;
        (xi1, omega_a, omega_b)
    };
    let quarter = sqrt_t.sqrt();
    let spec = ModelSpec {
        sites: sites.clone(),
        gamma_a: sqrt_t,
        rho_a: 1.0,
        gamma_b: sqrt_t,
        rho_b: 1.0,
        eta: 1.0,
        omega_a,
        omega_b,
        alpha_a: vec![quarter; sites.n()],
        beta_a: vec![quarter; sites.n()],
        alpha_b: vec![sign * quarter; sites.m()],
        beta_b: vec![sign * quarter; sites.m()],
        xi0,
        xi1,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Max relative coupling deviation if it exceeds `1e-8`.
fn round_trip_mismatch(spec: &ModelSpec, target: &CouplingSet) -> Option<f64> {
    let back = couplings_from_spec(spec).ok()?;
    let scale = target.max_abs().max(f64::MIN_POSITIVE);
    let worst = back
        .values()
        .zip(target.values())
        .fold(0.0_f64, |w, (x, y)| w.max((x - y).abs()));
    let rel = worst / scale;
    (rel > 1e-8).then_some(rel)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Aa,
    Bb,
    Ab,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub species: Species,
    /// 1-based index within the species.
    pub index: usize,
}

impl Vertex {
    pub fn name(&self) -> String {
        match self.species {
            Species::A => format!("a{}", self.index),
            Species::B => format!("b{}", self.index),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: Vertex,
    pub to: Vertex,
    pub kind: EdgeKind,
}

/// Which pairs of spins interact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

/// One vertex per site and one edge per nonzero two-spin coupling.
///
/// Ordering is deterministic: a-vertices, b-vertices; then aa edges, bb
/// edges and ab edges, each in lexicographic index order.
pub fn interaction_graph(couplings: &CouplingSet) -> InteractionGraph {
    let (n, m) = (couplings.n(), couplings.m());
    let va = |j: usize| Vertex { species: Species::A, index: j + 1 };
    let vb = |k: usize| Vertex { species: Species::B, index: k + 1 };
    let vertices = (0..n).map(va).chain((0..m).map(vb)).collect();
    let on = |x: f64| x.abs() > EDGE_THRESHOLD;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if on(couplings.jz_aa[i][j]) || on(couplings.jz_aa[j][i]) {
                edges.push(Edge { from: va(i), to: va(j), kind: EdgeKind::Aa });
            }
        }
    }
    for k in 0..m {
        for l in k + 1..m {
            if on(couplings.jz_bb[k][l]) || on(couplings.jz_bb[l][k]) {
                edges.push(Edge { from: vb(k), to: vb(l), kind: EdgeKind::Bb });
            }
        }
    }
    for j in 0..n {
        for k in 0..m {
            if on(couplings.jz_ab[j][k]) || on(couplings.jxy_ab[j][k]) {
                edges.push(Edge { from: va(j), to: vb(k), kind: EdgeKind::Ab });
            }
        }
    }
    InteractionGraph { vertices, edges }
}

impl InteractionGraph {
    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    /// Graphviz rendering: aa edges green dash-dotted, bb edges orange dashed, ab edges solid black.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph spin_cluster {\n");
        for v in &self.vertices {
            let color = match v.species {
                Species::A => "green",
                Species::B => "orange",
            };
            let _ = writeln!(out, "  {} [color={color}];", v.name());
        }
        for e in &self.edges {
            let attrs = match e.kind {
                EdgeKind::Aa => "style=\"dashed,dotted\", color=green",
                EdgeKind::Bb => "style=dashed, color=orange",
                EdgeKind::Ab => "style=solid, color=black",
            };
            let _ = writeln!(out, "  {} -- {} [{attrs}];", e.from.name(), e.to.name());
        }
        out.push_str("}\n");
        out
    }
}

/// Spin-1/2 site list helper used by graph export when only couplings are known.
pub fn spin_half_sites_for(couplings: &CouplingSet) -> Result<SiteList> {
    SiteList::new(vec![Spin::HALF; couplings.n()], vec![Spin::HALF; couplings.m()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrable::ModelParams;
    use crate::sampling::random_spec;
    use crate::spin::{total_spin_squared, total_sz};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_couplings() -> CouplingSet {
        couplings_from_spec(&ModelSpec::isotropic(SiteList::spin_half(1, 1).unwrap())).unwrap()
    }

    #[test]
    fn isotropic_couplings() {
        let cs = default_couplings();
        assert_eq!(cs.bz_a, vec![0.0]);
        assert_eq!(cs.bz_b, vec![0.0]);
        assert_eq!(cs.d_a, vec![0.0]);
        assert_eq!(cs.jz_ab, vec![vec![2.0]]);
        assert_eq!(cs.jxy_ab, vec![vec![2.0]]);
        assert_eq!(cs.xi2, Some(0.0));
    }

    #[test]
    fn xi1_zero_switches_off_anisotropy_and_intra_exchange() {
        let spec = ModelSpec::from_params(
            SiteList::spin_half(2, 2).unwrap(),
            ModelParams { gamma_a: 1.5, rho_a: 0.8, gamma_b: 1.2, rho_b: 1.0, omega_a: 0.3, ..Default::default() },
        )
        .unwrap();
        assert!(spec.delta() != 0.0);
        let cs = couplings_from_spec(&spec).unwrap();
        assert!(cs.d_a.iter().chain(&cs.d_b).all(|&x| x == 0.0));
        assert!(cs.jz_aa.iter().chain(&cs.jz_bb).flatten().all(|&x| x == 0.0));
        assert!(cs.bz_a[0] != 0.0);
    }

    #[test]
    fn gamma_b_equal_rho_a_turns_off_fields() {
        // gamma_b^2 = rho_a^2 together with gamma_a rho_a = gamma_b rho_b gives Delta = 0
        let spec = ModelSpec::from_params(
            SiteList::spin_half(2, 2).unwrap(),
            ModelParams { gamma_a: 2.0, rho_a: 0.5, gamma_b: 0.5, rho_b: 2.0, omega_a: 0.3, omega_b: 0.7, xi1: 0.8, ..Default::default() },
        )
        .unwrap();
        let cs = couplings_from_spec(&spec).unwrap();
        assert!(cs.bz_a.iter().chain(&cs.bz_b).chain(&cs.d_a).all(|&x| x == 0.0));
        assert!(cs.jz_aa.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn two_spin_hamiltonian_is_twice_the_dot_product() {
        let sites = SiteList::spin_half(1, 1).unwrap();
        let h = build_hamiltonian(&default_couplings(), &sites).unwrap();
        // 2 S_a.S_b in the basis |uu>, |ud>, |du>, |dd>
        let expect = OperatorMatrix::from_fn(4, |i, j| {
            let v = match (i, j) {
                (0, 0) | (3, 3) => 0.5,
                (1, 1) | (2, 2) => -0.5,
                (1, 2) | (2, 1) => 1.0,
                _ => 0.0,
            };
            Complex64::new(v, 0.0)
        });
        assert!((&h - &expect).max_abs() < 1e-15);
        assert!(h.commutator(&total_sz(&sites)).max_abs() <= 1e-12);
    }

    #[test]
    fn zero_couplings_give_zero_hamiltonian() {
        let sites = SiteList::spin_half(2, 1).unwrap();
        let h = build_hamiltonian(&CouplingSet::zeros(2, 1), &sites).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn build_rejects_wrong_shapes() {
        let sites = SiteList::spin_half(2, 1).unwrap();
        let mut cs = CouplingSet::zeros(2, 2);
        assert!(matches!(build_hamiltonian(&cs, &sites), Err(Error::Shape(_))));
        cs = CouplingSet::zeros(2, 1);
        cs.jz_aa[0][1] = 1.0;
        assert!(matches!(build_hamiltonian(&cs, &sites), Err(Error::Shape(_))));
        cs.jz_aa[1][0] = 1.0;
        cs.jz_aa[0][0] = 0.5;
        assert!(matches!(build_hamiltonian(&cs, &sites), Err(Error::Shape(_))));
    }

    #[test]
    fn charge_hamiltonian_matches_couplings_for_exchange_only_case() {
        let spec = ModelSpec::from_params(
            SiteList::spin_half(2, 1).unwrap(),
            ModelParams { gamma_a: 2.0, rho_a: 0.5, gamma_b: 0.5, rho_b: 2.0, omega_a: 0.3, omega_b: 0.9, xi0: 1.7, ..Default::default() },
        )
        .unwrap();
        let h1 = hamiltonian_from_charges(&spec).unwrap();
        let h2 = build_hamiltonian(&couplings_from_spec(&spec).unwrap(), &spec.sites).unwrap();
        assert!((&h1 - &h2).max_abs() <= 1e-10 * h1.max_abs());
        assert!(spec.identity_coefficient().abs() <= 1e-11);
    }

    #[test]
    fn fit_reports_non_uniform_exchange() {
        let sites = SiteList::spin_half(2, 1).unwrap();
        let spec = ModelSpec::isotropic(sites.clone());
        let mut cs = couplings_from_spec(&spec).unwrap();
        cs.jxy_ab[1][0] = 3.0;
        match fit_parameters(&cs, &sites) {
            FitOutcome::Infeasible { reasons } => assert!(reasons.contains(&"Jxy must be uniform".to_string())),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn fit_rejects_zero_couplings() {
        let sites = SiteList::spin_half(1, 2).unwrap();
        assert!(fit_parameters(&CouplingSet::zeros(1, 2), &sites).spec().is_none());
    }

    #[test]
    fn fit_rejects_site_dependent_anisotropy() {
        let sites = SiteList::spin_half(2, 1).unwrap();
        let mut cs = couplings_from_spec(&ModelSpec::isotropic(sites.clone())).unwrap();
        cs.d_a[0] = 0.3;
        assert!(fit_parameters(&cs, &sites).spec().is_none());
    }

    #[test]
    fn fit_round_trip_isotropic() {
        let sites = SiteList::spin_half(2, 2).unwrap();
        let cs = couplings_from_spec(&ModelSpec::isotropic(sites.clone())).unwrap();
        let spec = fit_parameters(&cs, &sites).spec().cloned().expect("feasible");
        let back = couplings_from_spec(&spec).unwrap();
        assert!(back.values().zip(cs.values()).all(|(x, y)| (x - y).abs() <= 1e-8 * cs.max_abs()));
    }

    #[test]
    fn charge_and_coupling_hamiltonians_agree_on_random_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mixed = SiteList::new(vec![Spin::ONE], vec![Spin::HALF, Spin::from_twice(3).unwrap()]).unwrap();
        for sites in [SiteList::spin_half(1, 1).unwrap(), SiteList::spin_half(3, 2).unwrap(), mixed] {
            for _ in 0..5 {
                let spec = random_spec(sites.clone(), &mut rng);
                let h1 = hamiltonian_from_charges(&spec).unwrap();
                let h2 = build_hamiltonian(&couplings_from_spec(&spec).unwrap(), &sites).unwrap();
                assert!((&h1 - &h2).max_abs() <= 1e-10 * h1.max_abs(), "{spec:?}");
                assert!(h1.hermiticity_defect() <= 1e-12 * h1.max_abs());
                assert!(spec.identity_coefficient().abs() <= 1e-11 * h1.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn isotropic_hamiltonian_commutes_with_total_spin() {
        let sites = SiteList::spin_half(2, 2).unwrap();
        let spec = ModelSpec::from_params(sites.clone(), ModelParams { omega_a: 0.4, omega_b: 0.4, ..Default::default() }).unwrap();
        assert!(spec.is_isotropic_point());
        let h = hamiltonian_from_charges(&spec).unwrap();
        assert!(h.commutator(&total_spin_squared(&sites)).max_abs() <= 1e-11 * h.max_abs());
    }

    #[test]
    fn fit_round_trip_random_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let sites = SiteList::spin_half(2, 2).unwrap();
            let spec = random_spec(sites.clone(), &mut rng);
            let cs = couplings_from_spec(&spec).unwrap();
            let fitted = fit_parameters(&cs, &sites);
            let fitted = fitted.spec().unwrap_or_else(|| panic!("{fitted:?} for {spec:?}"));
            assert!(round_trip_mismatch(fitted, &cs).is_none());
        }
    }

    #[test]
    fn graph_counts() {
        let one = interaction_graph(&default_couplings());
        assert_eq!(one.edges.len(), 1);
        assert_eq!(one.to_dot().lines().filter(|l| l.contains("--")).count(), 1);
        assert!(one.to_dot().contains("a1 -- b1 [style=solid, color=black];"));

        let spec = ModelSpec::from_params(
            SiteList::spin_half(4, 4).unwrap(),
            ModelParams { gamma_a: 1.5, rho_a: 0.8, gamma_b: 1.2, rho_b: 1.0, xi1: 0.5, ..Default::default() },
        )
        .unwrap();
        let g = interaction_graph(&couplings_from_spec(&spec).unwrap());
        assert_eq!(g.vertices.len(), 8);
        assert_eq!(g.edges.len(), 8 * 7 / 2);
        assert_eq!(g.edge_count(EdgeKind::Aa), 6);
        assert_eq!(g.edge_count(EdgeKind::Bb), 6);
        assert_eq!(g.edge_count(EdgeKind::Ab), 16);
        let dot = g.to_dot();
        assert!(dot.contains("a1 -- a2 [style=\"dashed,dotted\", color=green];"));
        assert!(dot.contains("b3 -- b4 [style=dashed, color=orange];"));
    }
}
