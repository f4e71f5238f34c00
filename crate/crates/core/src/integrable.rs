//! R-matrix, multi-spin Lax operators, monodromy, transfer matrix and the
//! conserved charges read off its polynomial expansion.

use nalgebra::{Matrix4, SMatrix};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{OperatorMatrix, ONE, ZERO};
use crate::spin::{SiteList, SiteOperators, Species};

/// Spectral parameters closer than this to a pole are rejected.
pub const POLE_GUARD: f64 = 1e-9;

/// Relative tolerance used when checking the algebraic constraints of a [`ModelSpec`].
const CONSTRAINT_RTOL: f64 = 1e-10;

/// Tolerance of the interpolation self-check in [`IntegrableModel::charges`].
const INTERPOLATION_RTOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Free parameters of the model with the site coefficients left implicit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub gamma_a: f64,
    pub rho_a: f64,
    pub gamma_b: f64,
    pub rho_b: f64,
    pub eta: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub xi0: f64,
    pub xi1: f64,
}

impl Default for ModelParams {
    /// The isotropic point `gamma = rho = eta = xi0 = 1`, `omega = xi1 = 0`.
    fn default() -> Self {
        ModelParams {
            gamma_a: 1.0,
            rho_a: 1.0,
            gamma_b: 1.0,
            rho_b: 1.0,
            eta: 1.0,
            omega_a: 0.0,
            omega_b: 0.0,
            xi0: 1.0,
            xi1: 0.0,
        }
    }
}

/// One integrable model instance: sites plus every parameter of the Lax
/// operators and of the Hamiltonian built from the charges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub sites: SiteList,
    pub gamma_a: f64,
    pub rho_a: f64,
    pub gamma_b: f64,
    pub rho_b: f64,
    pub eta: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub alpha_a: Vec<f64>,
    pub beta_a: Vec<f64>,
    pub alpha_b: Vec<f64>,
    pub beta_b: Vec<f64>,
    pub xi0: f64,
    pub xi1: f64,
}

impl ModelSpec {
    /// Builds a spec with the symmetric site coefficients `alpha = beta = sqrt(gamma rho)`.
    pub fn from_params(sites: SiteList, p: ModelParams) -> Result<Self> {
        let ka = p.gamma_a * p.rho_a;
        let kb = p.gamma_b * p.rho_b;
        if ka <= 0.0 || kb <= 0.0 {
            return Err(Error::Constraint(vec![
                "default site coefficients need gamma*rho > 0 for both species; give alpha/beta explicitly"
                    .into(),
            ]));
        }
        let (n, m) = (sites.n(), sites.m());
        let spec = ModelSpec {
            sites,
            gamma_a: p.gamma_a,
            rho_a: p.rho_a,
            gamma_b: p.gamma_b,
            rho_b: p.rho_b,
            eta: p.eta,
            omega_a: p.omega_a,
            omega_b: p.omega_b,
            alpha_a: vec![ka.sqrt(); n],
            beta_a: vec![ka.sqrt(); n],
            alpha_b: vec![kb.sqrt(); m],
            beta_b: vec![kb.sqrt(); m],
            xi0: p.xi0,
            xi1: p.xi1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The isotropic-point spec on the given sites.
    pub fn isotropic(sites: SiteList) -> Self {
        Self::from_params(sites, ModelParams::default()).expect("default parameters are valid")
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            gamma_a: self.gamma_a,
            rho_a: self.rho_a,
            gamma_b: self.gamma_b,
            rho_b: self.rho_b,
            eta: self.eta,
            omega_a: self.omega_a,
            omega_b: self.omega_b,
            xi0: self.xi0,
            xi1: self.xi1,
        }
    }

    /// Shape problems only: coefficient vectors must match the site counts.
    pub fn shape_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (n, m) = (self.sites.n(), self.sites.m());
        for (name, len, want) in [
            ("alpha_a", self.alpha_a.len(), n),
            ("beta_a", self.beta_a.len(), n),
            ("alpha_b", self.alpha_b.len(), m),
            ("beta_b", self.beta_b.len(), m),
        ] {
            if len != want {
                out.push(format!("{name} has length {len}, expected {want}"));
            }
        }
        out
    }

    /// Every violated model constraint, as human-readable reasons.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.shape_violations();
        if !out.is_empty() {
            return out;
        }
        let close = |x: f64, y: f64| (x - y).abs() <= CONSTRAINT_RTOL * x.abs().max(y.abs()).max(1.0);
        let all = [
            self.gamma_a, self.rho_a, self.gamma_b, self.rho_b, self.eta, self.omega_a, self.omega_b,
            self.xi0, self.xi1,
        ];
        if all
            .iter()
            .chain(&self.alpha_a)
            .chain(&self.beta_a)
            .chain(&self.alpha_b)
            .chain(&self.beta_b)
            .any(|x| !x.is_finite())
        {
            out.push("all parameters must be finite".into());
            return out;
        }
        for (name, x) in [
            ("gamma_a", self.gamma_a),
            ("rho_a", self.rho_a),
            ("gamma_b", self.gamma_b),
            ("rho_b", self.rho_b),
            ("eta", self.eta),
            ("xi0", self.xi0),
        ] {
            if x == 0.0 {
                out.push(format!("{name} must be nonzero"));
            }
        }
        let ka = self.gamma_a * self.rho_a;
        let kb = self.gamma_b * self.rho_b;
        for (j, (al, be)) in self.alpha_a.iter().zip(&self.beta_a).enumerate() {
            if !close(al * be, ka) {
                out.push(format!("alpha_a{0}*beta_a{0} = {1} differs from gamma_a*rho_a = {ka}", j + 1, al * be));
            }
        }
        for (k, (al, be)) in self.alpha_b.iter().zip(&self.beta_b).enumerate() {
            if !close(al * be, kb) {
                out.push(format!("alpha_b{0}*beta_b{0} = {1} differs from gamma_b*rho_b = {kb}", k + 1, al * be));
            }
        }
        if !close(ka, kb) {
            out.push(format!("gamma_a*rho_a = {ka} differs from gamma_b*rho_b = {kb}"));
        }
        let pairs: Vec<(f64, f64)> = self
            .alpha_a
            .iter()
            .zip(&self.beta_a)
            .chain(self.alpha_b.iter().zip(&self.beta_b))
            .map(|(a, b)| (*a, *b))
            .collect();
        if pairs.iter().any(|&(a, b)| a == 0.0 || b == 0.0) {
            out.push("site coefficients alpha, beta must be nonzero".into());
        } else {
            let (a0, b0) = pairs[0];
            // alpha_i/beta_i = alpha_0/beta_0  <=>  alpha_i beta_0 = alpha_0 beta_i
            if pairs.iter().any(|&(a, b)| !close(a * b0, a0 * b)) {
                out.push("alpha/beta must share one ratio across all sites".into());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint(v))
        }
    }

    /// `sigma_ab = gamma_a gamma_b + rho_a rho_b`
    pub fn sigma(&self) -> f64 {
        self.gamma_a * self.gamma_b + self.rho_a * self.rho_b
    }

    /// `Delta_ab = gamma_a gamma_b - rho_a rho_b`
    pub fn delta(&self) -> f64 {
        self.gamma_a * self.gamma_b - self.rho_a * self.rho_b
    }

    /// `Omega = omega_a - omega_b`
    pub fn omega_diff(&self) -> f64 {
        self.omega_a - self.omega_b
    }

    /// `Xi = omega_a omega_b`
    pub fn xi_cross(&self) -> f64 {
        self.omega_a * self.omega_b
    }

    /// Coefficient of `C2` in the Hamiltonian; chosen so that its identity part cancels.
    pub fn xi2(&self) -> f64 {
        let om = self.omega_diff();
        om * (1.0 + self.xi1 * self.sigma() * om) - self.xi0 * self.xi_cross()
    }

    /// Identity coefficient of `xi0 C0 + C1 + xi1 C1^2 - xi2 C2`; zero by construction of `xi2`.
    pub fn identity_coefficient(&self) -> f64 {
        let (s, om) = (self.sigma(), self.omega_diff());
        -self.xi0 * s * self.xi_cross() + s * om + self.xi1 * s * s * om * om - self.xi2() * s
    }

    /// `Delta_ab = 0`, `omega_a = omega_b`, `xi1 = 0`: the Hamiltonian is SU(2) invariant.
    pub fn is_isotropic_point(&self) -> bool {
        let scale = self.sigma().abs().max(1.0);
        self.delta().abs() <= 1e-12 * scale && self.omega_diff() == 0.0 && self.xi1 == 0.0
    }
}

/// A 2x2 auxiliary-space matrix with operator entries.
#[derive(Clone, Debug)]
pub struct AuxBlock {
    pub a: OperatorMatrix,
    pub b: OperatorMatrix,
    pub c: OperatorMatrix,
    pub d: OperatorMatrix,
}

impl AuxBlock {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Entry `(row, col)` of the auxiliary 2x2 structure.
    pub fn entry(&self, row: usize, col: usize) -> &OperatorMatrix {
        match (row, col) {
            (0, 0) => &self.a,
            (0, 1) => &self.b,
            (1, 0) => &self.c,
            (1, 1) => &self.d,
            _ => panic!("auxiliary index out of range"),
        }
    }

    /// Auxiliary-space product; quantum operators keep their order.
    pub fn mul(&self, rhs: &AuxBlock) -> AuxBlock {
        AuxBlock {
            a: &self.a.matmul(&rhs.a) + &self.b.matmul(&rhs.c),
            b: &self.a.matmul(&rhs.b) + &self.b.matmul(&rhs.d),
            c: &self.c.matmul(&rhs.a) + &self.d.matmul(&rhs.c),
            d: &self.c.matmul(&rhs.b) + &self.d.matmul(&rhs.d),
        }
    }

    pub fn trace(&self) -> OperatorMatrix {
        &self.a + &self.d
    }
}

/// The `gl(2)`-invariant R-matrix with `b(u) = u/(u+eta)`, `c(u) = eta/(u+eta)`.
pub fn r_matrix(u: Complex64, eta: f64) -> Result<Matrix4<Complex64>> {
    let den = u + eta;
    if den.norm() < POLE_GUARD {
        return Err(Error::Pole(format!("u = {u} (u + eta = 0)")));
    }
    let b = u / den;
    let cc = c(eta) / den;
    Ok(Matrix4::new(
        ONE, ZERO, ZERO, ZERO, //
        ZERO, b, cc, ZERO, //
        ZERO, cc, b, ZERO, //
        ZERO, ZERO, ZERO, ONE,
    ))
}

type M8 = SMatrix<Complex64, 8, 8>;

/// Embeds a two-space operator into three spaces, acting on factors `(i, j)`.
fn on_pair(r: &Matrix4<Complex64>, i: usize, j: usize) -> M8 {
    let bit = |x: usize, f: usize| (x >> (2 - f)) & 1;
    M8::from_fn(|row, col| {
        let spectator = 3 - i - j;
        if bit(row, spectator) != bit(col, spectator) {
            return ZERO;
        }
        r[(2 * bit(row, i) + bit(row, j), 2 * bit(col, i) + bit(col, j))]
    })
}

/// Max entry of `R12(u-v) R13(u) R23(v) - R23(v) R13(u) R12(u-v)`.
pub fn ybe_residual(u: Complex64, v: Complex64, eta: f64) -> Result<f64> {
    let r12 = on_pair(&r_matrix(u - v, eta)?, 0, 1);
    let r13 = on_pair(&r_matrix(u, eta)?, 0, 2);
    let r23 = on_pair(&r_matrix(v, eta)?, 1, 2);
    let diff = r12 * r13 * r23 - r23 * r13 * r12;
    Ok(diff.iter().fold(0.0, |m, z| m.max(z.norm())))
}

/// Max entry of `R12(u-v) L1(u) L2(v) - L2(v) L1(u) R12(u-v)` on aux ⊗ aux ⊗ quantum.
///
/// The 4x4 auxiliary structure is handled blockwise: entry `((i,k),(j,l))` of
/// `L1(u) L2(v)` is `L_ij(u) L_kl(v)`, of `L2(v) L1(u)` it is `L_kl(v) L_ij(u)`.
pub fn rll_residual<F>(u: Complex64, v: Complex64, eta: f64, lax: F) -> Result<f64>
where
    F: Fn(Complex64) -> Result<AuxBlock>,
{
    let r = r_matrix(u - v, eta)?;
    let lu = lax(u)?;
    let lv = lax(v)?;
    let idx = |i: usize, k: usize| 2 * i + k;
    let mut worst = 0.0_f64;
    // products[p][j][q][l] = L_pj(u) L_ql(v), swapped[k][q][i][p] = L_kq(v) L_ip(u)
    let mut fwd = vec![None; 16];
    let mut bwd = vec![None; 16];
    for p in 0..2 {
        for j in 0..2 {
            for q in 0..2 {
                for l in 0..2 {
                    fwd[8 * p + 4 * j + 2 * q + l] = Some(lu.entry(p, j).matmul(lv.entry(q, l)));
                    bwd[8 * p + 4 * j + 2 * q + l] = Some(lv.entry(p, j).matmul(lu.entry(q, l)));
                }
            }
        }
    }
    let fwd = |p: usize, j: usize, q: usize, l: usize| fwd[8 * p + 4 * j + 2 * q + l].as_ref().unwrap();
    let bwd = |k: usize, q: usize, i: usize, p: usize| bwd[8 * k + 4 * q + 2 * i + p].as_ref().unwrap();
    let dim = lu.dim();
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let mut diff = OperatorMatrix::zeros(dim);
                    for p in 0..2 {
                        for q in 0..2 {
                            let r_left = r[(idx(i, k), idx(p, q))];
                            if r_left != ZERO {
                                diff.axpy(r_left, fwd(p, j, q, l));
                            }
                            let r_right = r[(idx(p, q), idx(j, l))];
                            if r_right != ZERO {
                                diff.axpy(-r_right, bwd(k, q, i, p));
                            }
                        }
                    }
                    worst = worst.max(diff.max_abs());
                }
            }
        }
    }
    Ok(worst)
}

/// A multi-spin Lax operator of one species, embedded on the full cluster space:
///
/// ```text
/// [ gamma (u - eta Sz)   -eta sum alpha_j S+_j ]
/// [ -eta sum beta_j S-_j    rho (u + eta Sz)   ]
/// ```
#[derive(Clone, Debug)]
pub struct LaxOperator {
    gamma: f64,
    rho: f64,
    eta: f64,
    sz: OperatorMatrix,
    raise: OperatorMatrix,
    lower: OperatorMatrix,
}

impl LaxOperator {
    /// Builds the operator without checking `alpha beta = gamma rho`.
    pub fn for_species(spec: &ModelSpec, ops: &SiteOperators, species: Species) -> Self {
        let sites = &spec.sites;
        let (gamma, rho, alpha, beta, count) = match species {
            Species::A => (spec.gamma_a, spec.rho_a, &spec.alpha_a, &spec.beta_a, sites.n()),
            Species::B => (spec.gamma_b, spec.rho_b, &spec.alpha_b, &spec.beta_b, sites.m()),
        };
        let global = (0..count).map(|j| sites.global_index(species, j));
        let sz = SiteOperators::weighted_sum(&ops.sz, global.clone(), std::iter::repeat(1.0));
        let raise = SiteOperators::weighted_sum(&ops.splus, global.clone(), alpha.iter().copied());
        let lower = SiteOperators::weighted_sum(&ops.sminus, global, beta.iter().copied());
        LaxOperator {
            gamma,
            rho,
            eta: spec.eta,
            sz,
            raise,
            lower,
        }
    }

    pub fn at(&self, u: Complex64) -> AuxBlock {
        let dim = self.sz.dim();
        let id = OperatorMatrix::identity(dim);
        let eta = c(self.eta);
        let mut a = id.scale(u);
        a.axpy(-eta, &self.sz);
        let mut d = id.scale(u);
        d.axpy(eta, &self.sz);
        AuxBlock {
            a: a.scale_real(self.gamma),
            b: self.raise.scale(-eta),
            c: self.lower.scale(-eta),
            d: d.scale_real(self.rho),
        }
    }

    /// `sum_j S^z_j` over the species.
    pub fn sz(&self) -> &OperatorMatrix {
        &self.sz
    }

    /// `sum_j alpha_j S^+_j`
    pub fn raising(&self) -> &OperatorMatrix {
        &self.raise
    }

    /// `sum_j beta_j S^-_j`
    pub fn lowering(&self) -> &OperatorMatrix {
        &self.lower
    }
}

/// Coefficients of the quadratic transfer matrix `t(u) = C0 + C1 u + C2 u^2`.
#[derive(Clone, Debug)]
pub struct ChargeSet {
    pub c0: OperatorMatrix,
    pub c1: OperatorMatrix,
    pub c2: OperatorMatrix,
    pub sigma: f64,
    pub delta: f64,
    pub omega_diff: f64,
    pub xi_cross: f64,
}

impl ChargeSet {
    pub fn at(&self, u: Complex64) -> OperatorMatrix {
        let mut t = self.c0.clone();
        t.axpy(u, &self.c1);
        t.axpy(u * u, &self.c2);
        t
    }

    /// Max relative commutator `|[Cj, Ck]|_max / (|Cj|_max |Ck|_max)` over all pairs.
    pub fn max_relative_commutator(&self) -> f64 {
        let cs = [&self.c0, &self.c1, &self.c2];
        let mut worst = 0.0_f64;
        for j in 0..3 {
            for k in j + 1..3 {
                let scale = (cs[j].max_abs() * cs[k].max_abs()).max(f64::MIN_POSITIVE);
                worst = worst.max(cs[j].commutator(cs[k]).max_abs() / scale);
            }
        }
        worst
    }
}

/// A validated (or deliberately unchecked) model with its embedded operators cached.
#[derive(Clone, Debug)]
pub struct IntegrableModel {
    spec: ModelSpec,
    ops: SiteOperators,
    lax_a: LaxOperator,
    lax_b: LaxOperator,
}

impl IntegrableModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self::build(spec))
    }

    /// Skips the `alpha beta = gamma rho` family of checks; used for negative controls.
    pub fn new_unchecked(spec: ModelSpec) -> Result<Self> {
        let shape = spec.shape_violations();
        if !shape.is_empty() {
            return Err(Error::Constraint(shape));
        }
        Ok(Self::build(spec))
    }

    fn build(spec: ModelSpec) -> Self {
        let ops = SiteOperators::new(&spec.sites);
        let lax_a = LaxOperator::for_species(&spec, &ops, Species::A);
        let lax_b = LaxOperator::for_species(&spec, &ops, Species::B);
        IntegrableModel {
            spec,
            ops,
            lax_a,
            lax_b,
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn sites(&self) -> &SiteList {
        &self.spec.sites
    }

    pub fn dim(&self) -> usize {
        self.spec.sites.dim()
    }

    pub fn site_operators(&self) -> &SiteOperators {
        &self.ops
    }

    pub fn lax_operator(&self, species: Species) -> &LaxOperator {
        match species {
            Species::A => &self.lax_a,
            Species::B => &self.lax_b,
        }
    }

    pub fn lax_a(&self, u: Complex64) -> AuxBlock {
        self.lax_a.at(u)
    }

    pub fn lax_b(&self, u: Complex64) -> AuxBlock {
        self.lax_b.at(u)
    }

    /// `L_a(u + omega_a) L_b(u - omega_b)` in auxiliary space.
    pub fn monodromy(&self, u: Complex64) -> AuxBlock {
        self.lax_a(u + self.spec.omega_a).mul(&self.lax_b(u - self.spec.omega_b))
    }

    /// `A(u) + D(u)`.
    pub fn transfer(&self, u: Complex64) -> OperatorMatrix {
        let la = self.lax_a(u + self.spec.omega_a);
        let lb = self.lax_b(u - self.spec.omega_b);
        let mut t = la.a.matmul(&lb.a);
        t += &la.b.matmul(&lb.c);
        t += &la.c.matmul(&lb.b);
        t += &la.d.matmul(&lb.d);
        t
    }

    /// `C(u)`, the lowering entry of the monodromy.
    pub fn creation(&self, u: Complex64) -> OperatorMatrix {
        let la = self.lax_a(u + self.spec.omega_a);
        let lb = self.lax_b(u - self.spec.omega_b);
        &la.c.matmul(&lb.a) + &la.d.matmul(&lb.c)
    }

    /// Applies `C(u)` to a state without forming the operator product.
    pub fn apply_creation(&self, u: Complex64, psi: &crate::operator::State) -> crate::operator::State {
        let la = self.lax_a(u + self.spec.omega_a);
        let lb = self.lax_b(u - self.spec.omega_b);
        la.c.apply(&lb.a.apply(psi)) + la.d.apply(&lb.c.apply(psi))
    }

    /// Charges by exact quadratic interpolation at `u = 0, 1, -1`, certified at `u = 2`.
    pub fn charges(&self) -> Result<ChargeSet> {
        let t0 = self.transfer(c(0.0));
        let tp = self.transfer(c(1.0));
        let tm = self.transfer(c(-1.0));
        let c1 = (&tp - &tm).scale_real(0.5);
        let c2 = &(&tp + &tm).scale_real(0.5) - &t0;
        let sigma = self.spec.sigma();
        let c2_defect = (&c2 - &OperatorMatrix::identity(self.dim()).scale_real(sigma)).max_abs();
        let scale = tp.max_abs().max(tm.max_abs()).max(1.0);
        if c2_defect > INTERPOLATION_RTOL * scale {
            return Err(Error::Consistency(format!(
                "quadratic coefficient deviates from sigma*I by {c2_defect:.3e}"
            )));
        }
        let charges = ChargeSet {
            c0: t0,
            c1,
            c2,
            sigma,
            delta: self.spec.delta(),
            omega_diff: self.spec.omega_diff(),
            xi_cross: self.spec.xi_cross(),
        };
        let t2 = self.transfer(c(2.0));
        let defect = (&t2 - &charges.at(c(2.0))).max_abs();
        if defect > INTERPOLATION_RTOL * t2.max_abs().max(1.0) {
            return Err(Error::Consistency(format!(
                "transfer matrix is not quadratic in u (fourth-node defect {defect:.3e})"
            )));
        }
        Ok(charges)
    }
}

pub fn lax_a(u: Complex64, spec: &ModelSpec) -> Result<AuxBlock> {
    let spec = spec.clone();
    spec.validate()?;
    let ops = SiteOperators::new(&spec.sites);
    Ok(LaxOperator::for_species(&spec, &ops, Species::A).at(u))
}

pub fn lax_b(u: Complex64, spec: &ModelSpec) -> Result<AuxBlock> {
    let spec = spec.clone();
    spec.validate()?;
    let ops = SiteOperators::new(&spec.sites);
    Ok(LaxOperator::for_species(&spec, &ops, Species::B).at(u))
}

pub fn monodromy(u: Complex64, spec: &ModelSpec) -> Result<AuxBlock> {
    Ok(IntegrableModel::new(spec.clone())?.monodromy(u))
}

pub fn transfer(u: Complex64, spec: &ModelSpec) -> Result<OperatorMatrix> {
    Ok(IntegrableModel::new(spec.clone())?.transfer(u))
}

pub fn charges(spec: &ModelSpec) -> Result<ChargeSet> {
    IntegrableModel::new(spec.clone())?.charges()
}
