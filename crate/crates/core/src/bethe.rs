//! Algebraic Bethe ansatz: vacua, Bethe equations, the rapidity solver,
//! transfer-matrix eigenvalues, energies and Bethe vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrable::{IntegrableModel, ModelSpec, POLE_GUARD};
use crate::operator::{OperatorMatrix, State};
use crate::oracle::{expand_multiplet, Spectrum};
use crate::poly::{self, Poly};
use crate::spin::{twice_sz_of_basis, Sector, Species};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Relative division remainder above which a root set counts as off-shell.
pub const OFF_SHELL_RTOL: f64 = 1e-8;
/// Bound on `||t(u) psi - Lambda(u) psi|| / ||psi||` for a verified eigenpair.
pub const EIGENPAIR_TOL: f64 = 1e-8;

/// Newton multi-start settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Grid nodes per root along the real axis.
    pub grid_real: usize,
    /// Grid nodes per root along the imaginary axis.
    pub grid_imag: usize,
    pub max_seeds: usize,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Runs with any `|v|` above this are abandoned.
    pub divergence_radius: f64,
    /// Convergence: `max |F_i| <= residual_rtol * scale(F)`.
    pub residual_rtol: f64,
    /// Multiset identity tolerance, multiplied by `max(1, |eta|)`.
    pub dedup_rtol: f64,
    /// Singular-root tolerance, multiplied by `max(1, |eta|)`.
    pub singular_rtol: f64,
    /// Add seeds from the polynomial (Baxter) form of the eigenvalue relation.
    pub polynomial_seeds: bool,
    /// Extra user seeds as `[re, im]` lists; only those of length `N` are used.
    pub seeds: Vec<Vec<[f64; 2]>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_real: 9,
            grid_imag: 5,
            max_seeds: 2000,
            max_iterations: 200,
            max_halvings: 30,
            divergence_radius: 1e6,
            residual_rtol: 1e-10,
            dedup_rtol: 1e-7,
            singular_rtol: 1e-8,
            polynomial_seeds: true,
            seeds: Vec::new(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.grid_real == 0 || self.grid_imag == 0 {
            problems.push("grid sizes must be at least 1");
        }
        if self.max_seeds == 0 || self.max_iterations == 0 {
            problems.push("max_seeds and max_iterations must be at least 1");
        }
        for (x, name) in [
            (self.divergence_radius, "divergence_radius must be positive"),
            (self.residual_rtol, "residual_rtol must be positive"),
            (self.dedup_rtol, "dedup_rtol must be positive"),
            (self.singular_rtol, "singular_rtol must be positive"),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                problems.push(name);
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// A highest-weight reference state with its vacuum eigenvalue polynomials.
///
/// The product vacuum has all spins up. Inside a block of fixed collective
/// spins `(S_A, S_B)` the same construction works with `M_a = S_A`,
/// `M_b = S_B`; `copies` counts how many independent such blocks exist.
#[derive(Clone, Debug)]
pub struct VacuumData {
    pub state: State,
    pub m_a: f64,
    pub m_b: f64,
    /// `a(u)` coefficients, lowest degree first.
    pub a: [f64; 3],
    /// `d(u)` coefficients, lowest degree first.
    pub d: [f64; 3],
    pub copies: usize,
}

fn vacuum_polys(spec: &ModelSpec, m_a: f64, m_b: f64) -> ([f64; 3], [f64; 3]) {
    let eta = spec.eta;
    let quad = |w: f64, p: f64, q: f64| [w * p * q, w * (p + q), w];
    let a = quad(spec.gamma_a * spec.gamma_b, spec.omega_a - eta * m_a, -spec.omega_b - eta * m_b);
    let d = quad(spec.rho_a * spec.rho_b, spec.omega_a + eta * m_a, -spec.omega_b + eta * m_b);
    (a, d)
}

impl VacuumData {
    /// The all-up product state.
    pub fn product(spec: &ModelSpec) -> Self {
        let (m_a, m_b) = (spec.sites.m_a(), spec.sites.m_b());
        let mut state = State::zeros(spec.sites.dim());
        state[0] = ONE;
        let (a, d) = vacuum_polys(spec, m_a, m_b);
        VacuumData {
            state,
            m_a,
            m_b,
            a,
            d,
            copies: 1,
        }
    }

    pub fn a_poly(&self) -> Poly {
        poly::from_real(&self.a)
    }

    pub fn d_poly(&self) -> Poly {
        poly::from_real(&self.d)
    }

    /// `a(u) + d(u)`, the transfer-matrix eigenvalue on the vacuum.
    pub fn eigenvalue(&self, u: Complex64) -> Complex64 {
        poly::eval(&self.a_poly(), u) + poly::eval(&self.d_poly(), u)
    }

    /// Twice the `S_T^z` of the vacuum.
    pub fn top_sector(&self) -> Sector {
        Sector((2.0 * (self.m_a + self.m_b)).round() as i64)
    }

    /// Largest `N` with a nonempty sector.
    pub fn max_excitations(&self) -> usize {
        (2.0 * (self.m_a + self.m_b)).round() as usize
    }
}

/// Highest-weight vacua of every collective-spin block `(S_A, S_B)`.
///
/// Each is a common null vector of the two species raising operators with
/// fixed species magnetizations; the nullity is the block multiplicity.
/// The product vacuum is the first entry.
pub fn block_vacua(model: &IntegrableModel) -> Vec<VacuumData> {
    let spec = model.spec();
    let sites = &spec.sites;
    let dims = sites.site_dims();
    let (n, dim_b) = (sites.n(), sites.dim_b());
    let twice_a = twice_sz_of_basis(&dims[..n]);
    let twice_b = twice_sz_of_basis(&dims[n..]);
    let raise_a = model.lax_operator(Species::A).raising();
    let raise_b = model.lax_operator(Species::B).raising();
    let top_a = (2.0 * sites.m_a()).round() as i64;
    let top_b = (2.0 * sites.m_b()).round() as i64;
    let mut out = Vec::new();
    for sa in (0..=top_a).rev().filter(|s| (top_a - s) % 2 == 0) {
        for sb in (0..=top_b).rev().filter(|s| (top_b - s) % 2 == 0) {
            let basis: Vec<usize> = (0..sites.dim())
                .filter(|&i| twice_a[i / dim_b] == sa && twice_b[i % dim_b] == sb)
                .collect();
            let k = basis.len();
            if k == 0 {
                continue;
            }
            // Gram matrix of [R_a; R_b] restricted to the subspace
            let cols: Vec<(State, State)> = basis
                .iter()
                .map(|&i| {
                    let mut e = State::zeros(sites.dim());
                    e[i] = ONE;
                    (raise_a.apply(&e), raise_b.apply(&e))
                })
                .collect();
            let gram = DMatrix::from_fn(k, k, |r, s| cols[r].0.dotc(&cols[s].0) + cols[r].1.dotc(&cols[s].1));
            let eig = SymmetricEigen::new(gram);
            let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            let null: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * scale).collect();
            let Some(&first) = null.iter().min_by(|&&i, &&j| eig.eigenvalues[i].abs().total_cmp(&eig.eigenvalues[j].abs()).then(i.cmp(&j))) else {
                continue;
            };
            let mut state = State::zeros(sites.dim());
            for (r, &i) in basis.iter().enumerate() {
                state[i] = eig.eigenvectors[(r, first)];
            }
            let norm = state.norm();
            state /= c(norm);
            let (m_a, m_b) = (sa as f64 / 2.0, sb as f64 / 2.0);
            let (a, d) = vacuum_polys(spec, m_a, m_b);
            out.push(VacuumData {
                state,
                m_a,
                m_b,
                a,
                d,
                copies: null.len(),
            });
        }
    }
    out
}

/// N rapidities with solver metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetheRootSet {
    pub roots: Vec<Complex64>,
    /// `max_i |F_i|`.
    pub residual: f64,
    /// Size of the two terms of `F`, the reference for `residual`.
    pub scale: f64,
    pub singular: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
}

impl BetheRootSet {
    /// Wraps given roots, evaluating the residual against the product vacuum of `spec`.
    pub fn from_roots(roots: Vec<Complex64>, spec: &ModelSpec) -> Self {
        let system = BaeSystem::new(spec, &VacuumData::product(spec));
        system.root_set(roots, 0, &SolverConfig::default())
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn any_singular(&self) -> bool {
        self.singular.iter().any(|&s| s)
    }
}

/// Polynomial-cleared Bethe equations over one vacuum:
/// `F_i = a(v_i) prod_{j != i}(v_i - v_j + eta) - d(v_i) prod_{j != i}(v_i - v_j - eta)`.
#[derive(Clone, Debug)]
pub struct BaeSystem {
    a: Poly,
    d: Poly,
    da: Poly,
    dd: Poly,
    eta: f64,
    delta: f64,
    sigma: f64,
}

fn prod_except(v: &[Complex64], i: usize, skip: Option<usize>, shift: f64) -> Complex64 {
    v.iter()
        .enumerate()
        .filter(|&(j, _)| j != i && Some(j) != skip)
        .fold(ONE, |acc, (_, &vj)| acc * (v[i] - vj + shift))
}

impl BaeSystem {
    pub fn new(spec: &ModelSpec, vacuum: &VacuumData) -> Self {
        let a = vacuum.a_poly();
        let d = vacuum.d_poly();
        BaeSystem {
            da: poly::derivative(&a),
            dd: poly::derivative(&d),
            a,
            d,
            eta: spec.eta,
            delta: spec.delta(),
            sigma: spec.sigma(),
        }
    }

    fn terms(&self, v: &[Complex64]) -> Vec<(Complex64, Complex64)> {
        (0..v.len())
            .map(|i| {
                (
                    poly::eval(&self.a, v[i]) * prod_except(v, i, None, self.eta),
                    poly::eval(&self.d, v[i]) * prod_except(v, i, None, -self.eta),
                )
            })
            .collect()
    }

    pub fn residual(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.terms(v).into_iter().map(|(x, y)| x - y).collect()
    }

    /// `max_i (|a-term_i| + |d-term_i|)`.
    pub fn scale(&self, v: &[Complex64]) -> f64 {
        self.terms(v)
            .into_iter()
            .fold(f64::MIN_POSITIVE, |m, (x, y)| m.max(x.norm() + y.norm()))
    }

    pub fn jacobian(&self, v: &[Complex64]) -> DMatrix<Complex64> {
        let n = v.len();
        let eta = self.eta;
        DMatrix::from_fn(n, n, |i, k| {
            let av = poly::eval(&self.a, v[i]);
            let dv = poly::eval(&self.d, v[i]);
            if i == k {
                let mut sum_p = ZERO;
                let mut sum_m = ZERO;
                for l in (0..n).filter(|&l| l != i) {
                    sum_p += prod_except(v, i, Some(l), eta);
                    sum_m += prod_except(v, i, Some(l), -eta);
                }
                poly::eval(&self.da, v[i]) * prod_except(v, i, None, eta) + av * sum_p
                    - poly::eval(&self.dd, v[i]) * prod_except(v, i, None, -eta)
                    - dv * sum_m
            } else {
                -av * prod_except(v, i, Some(k), eta) + dv * prod_except(v, i, Some(k), -eta)
            }
        })
    }

    fn max_residual(&self, v: &[Complex64]) -> f64 {
        self.residual(v).iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    fn root_set(&self, roots: Vec<Complex64>, iterations: usize, config: &SolverConfig) -> BetheRootSet {
        let residual = self.max_residual(&roots);
        let scale = self.scale(&roots);
        let tol = config.singular_rtol * self.eta.abs().max(1.0);
        let singular = (0..roots.len())
            .map(|i| {
                roots[i].norm() <= tol
                    || (0..roots.len()).any(|j| {
                        j != i && ((roots[i] - roots[j] + self.eta).norm() <= tol || (roots[i] - roots[j] - self.eta).norm() <= tol)
                    })
            })
            .collect();
        BetheRootSet {
            converged: residual <= config.residual_rtol * scale,
            roots,
            residual,
            scale,
            singular,
            iterations,
        }
    }

    /// Damped Newton from one seed.
    fn newton(&self, seed: &[Complex64], config: &SolverConfig) -> Option<BetheRootSet> {
        let mut v = seed.to_vec();
        let mut res = self.max_residual(&v);
        let mut iterations = 0;
        let converged = |v: &[Complex64], r: f64| r <= config.residual_rtol * self.scale(v);
        while !converged(&v, res) {
            if iterations >= config.max_iterations {
                return None;
            }
            iterations += 1;
            let step = self.newton_step(&v)?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..=config.max_halvings {
                let trial: Vec<Complex64> = v.iter().zip(&step).map(|(x, s)| x + s * lambda).collect();
                let r = self.max_residual(&trial);
                if r < res {
                    v = trial;
                    res = r;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted || v.iter().any(|z| !z.is_finite() || z.norm() > config.divergence_radius) {
                return None;
            }
        }
        // a few undamped polishing steps while they help
        for _ in 0..3 {
            let Some(step) = self.newton_step(&v) else { break };
            let trial: Vec<Complex64> = v.iter().zip(&step).map(|(x, s)| x + s).collect();
            let r = self.max_residual(&trial);
            if r < res {
                v = trial;
                res = r;
            } else {
                break;
            }
        }
        Some(self.root_set(v, iterations, config))
    }

    fn newton_step(&self, v: &[Complex64]) -> Option<Vec<Complex64>> {
        let f = nalgebra::DVector::from_vec(self.residual(v));
        let step = self.jacobian(v).lu().solve(&(-f))?;
        step.iter().all(|z| z.is_finite()).then(|| step.iter().copied().collect())
    }

    /// Root sets read off polynomial solutions of `Lambda Q = a Q(u+eta) + d Q(u-eta)`.
    ///
    /// With `Lambda = sigma u^2 + Lambda_1 u + Lambda_0` and `Lambda_1` fixed by `N`,
    /// the relation is a linear eigenproblem for `Lambda_0` on polynomials of degree `<= N`.
    fn polynomial_seeds(&self, n: usize) -> Vec<Vec<Complex64>> {
        if n == 0 {
            return Vec::new();
        }
        let eta = self.eta;
        let lambda1 = self.a[1] + self.d[1] + c(n as f64 * eta * self.delta);
        let dim = n + 1;
        let mut t = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..dim {
            let mut mono = vec![ZERO; k + 1];
            mono[k] = ONE;
            let plus = poly::mul(&self.a, &poly::shift(&mono, c(eta)));
            let minus = poly::mul(&self.d, &poly::shift(&mono, c(-eta)));
            let lin = poly::mul(&[ZERO, lambda1, c(self.sigma)], &mono);
            let img = poly::add(&poly::add(&plus, &minus), &lin.iter().map(|z| -z).collect::<Vec<_>>());
            for (row, &val) in img.iter().enumerate().take(dim) {
                t[(row, k)] = val;
            }
        }
        let Some(eigs) = nalgebra::Schur::new(t.clone()).eigenvalues() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for lambda0 in eigs.iter() {
            let shifted = &t - DMatrix::<Complex64>::identity(dim, dim) * *lambda0;
            let svd = shifted.svd(false, true);
            let Some(vt) = svd.v_t else { continue };
            let smallest = (0..dim)
                .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
                .unwrap_or(0);
            let q: Vec<Complex64> = vt.row(smallest).iter().map(|z| z.conj()).collect();
            let qn = q[n];
            let qnorm = q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if qn.norm() <= 1e-8 * qnorm {
                continue;
            }
            let monic: Vec<Complex64> = q.iter().map(|z| z / qn).collect();
            if let Some(roots) = poly::roots(&monic) {
                if roots.iter().all(|z| z.is_finite()) {
                    out.push(roots);
                }
            }
        }
        out
    }
}

/// `F_i` over the product vacuum of `spec`.
pub fn bae_residual(roots: &[Complex64], spec: &ModelSpec) -> Vec<Complex64> {
    BaeSystem::new(spec, &VacuumData::product(spec)).residual(roots)
}

fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let mut out = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        out += (index % base) as f64 * f;
        index /= base;
        f /= base as f64;
    }
    out
}

const PRIMES: [usize; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn binomial_capped(n: usize, k: usize, cap: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 0..k.min(n) {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return cap;
        }
    }
    if k > n {
        0
    } else {
        acc as usize
    }
}

/// Deterministic Newton starting points for `n` roots.
///
/// Each root ranges over a `grid_real x grid_imag` lattice covering
/// `[c - 2|eta|M, c + 2|eta|M] x [-2|eta|, 2|eta|]` with `M = M_a + M_b` and
/// `c` midway between the inhomogeneities. `N = 1, 2` use the lattice (distinct
/// nodes for `N = 2`); larger `N` use a Halton sequence over the same box.
pub fn seed_lattice(n: usize, vacuum: &VacuumData, spec: &ModelSpec, config: &SolverConfig) -> Vec<Vec<Complex64>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let eta = spec.eta.abs();
    let center = 0.5 * (spec.omega_b - spec.omega_a);
    let half_re = 2.0 * eta * (vacuum.m_a + vacuum.m_b).max(0.5);
    let half_im = 2.0 * eta;
    let lin = |k: usize, count: usize, half: f64| {
        if count == 1 {
            0.0
        } else {
            -half + 2.0 * half * k as f64 / (count - 1) as f64
        }
    };
    let nodes: Vec<Complex64> = (0..config.grid_real)
        .flat_map(|i| (0..config.grid_imag).map(move |j| (i, j)))
        .map(|(i, j)| Complex64::new(center + lin(i, config.grid_real, half_re), lin(j, config.grid_imag, half_im)))
        .collect();
    let mut out = Vec::new();
    match n {
        1 => out.extend(nodes.iter().map(|&z| vec![z])),
        2 => {
            'outer: for i in 0..nodes.len() {
                for j in i + 1..nodes.len() {
                    if out.len() >= config.max_seeds {
                        break 'outer;
                    }
                    out.push(vec![nodes[i], nodes[j]]);
                }
            }
        }
        _ => {
            let count = binomial_capped(nodes.len(), n, config.max_seeds);
            for s in 1..=count {
                let seed = (0..n)
                    .map(|r| {
                        let (bx, by) = (PRIMES[(2 * r) % PRIMES.len()], PRIMES[(2 * r + 1) % PRIMES.len()]);
                        // past the prime table, decorrelate by offsetting the index
                        let idx = s + (2 * r / PRIMES.len()) * 7919;
                        let x = radical_inverse(idx, bx);
                        let y = radical_inverse(idx, by);
                        Complex64::new(center - half_re + 2.0 * half_re * x, -half_im + 2.0 * half_im * y)
                    })
                    .collect();
                out.push(seed);
            }
        }
    }
    out
}

fn same_multiset(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let hit = (0..b.len())
            .filter(|&j| !used[j] && (x - b[j]).norm() <= tol)
            .min_by(|&i, &j| (x - b[i]).norm().total_cmp(&(x - b[j]).norm()));
        match hit {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

/// Outcome of a multi-start solve for one `N`.
#[derive(Clone, Debug, Serialize)]
pub struct SolveOutcome {
    pub n: usize,
    pub solutions: Vec<BetheRootSet>,
    pub seeds_tried: usize,
    pub converged_runs: usize,
    pub coinciding_discarded: usize,
    pub diagnostics: Vec<String>,
}

/// Multi-start damped Newton on the Bethe equations over the product vacuum.
pub fn solve_bae(n: usize, spec: &ModelSpec, config: &SolverConfig) -> SolveOutcome {
    solve_bae_on(n, spec, &VacuumData::product(spec), config)
}

/// As [`solve_bae`], over an arbitrary vacuum.
pub fn solve_bae_on(n: usize, spec: &ModelSpec, vacuum: &VacuumData, config: &SolverConfig) -> SolveOutcome {
    let system = BaeSystem::new(spec, vacuum);
    let mut diagnostics = Vec::new();
    if n > vacuum.max_excitations() {
        diagnostics.push(format!("empty sector: N = {n} exceeds 2(M_a + M_b) = {}", vacuum.max_excitations()));
        return SolveOutcome {
            n,
            solutions: Vec::new(),
            seeds_tried: 0,
            converged_runs: 0,
            coinciding_discarded: 0,
            diagnostics,
        };
    }
    if n == 0 {
        return SolveOutcome {
            n,
            solutions: vec![system.root_set(Vec::new(), 0, config)],
            seeds_tried: 0,
            converged_runs: 1,
            coinciding_discarded: 0,
            diagnostics,
        };
    }
    let mut seeds = if config.polynomial_seeds {
        system.polynomial_seeds(n)
    } else {
        Vec::new()
    };
    seeds.extend(
        config
            .seeds
            .iter()
            .filter(|s| s.len() == n)
            .map(|s| s.iter().map(|p| Complex64::new(p[0], p[1])).collect::<Vec<_>>()),
    );
    seeds.extend(seed_lattice(n, vacuum, spec, config));
    let runs: Vec<Option<BetheRootSet>> = seeds.par_iter().map(|s| system.newton(s, config)).collect();
    let tol = config.dedup_rtol * spec.eta.abs().max(1.0);
    let mut solutions: Vec<BetheRootSet> = Vec::new();
    let mut converged_runs = 0;
    let mut coinciding = 0;
    for run in runs.into_iter().flatten() {
        converged_runs += 1;
        let r = &run.roots;
        let clash = (0..r.len()).any(|i| (i + 1..r.len()).any(|j| (r[i] - r[j]).norm() <= tol));
        if clash {
            coinciding += 1;
            continue;
        }
        if !solutions.iter().any(|s| same_multiset(&s.roots, r, tol)) {
            solutions.push(run);
        }
    }
    if solutions.is_empty() {
        diagnostics.push(format!("no admissible solution from {} seeds ({converged_runs} runs converged)", seeds.len()));
    }
    SolveOutcome {
        n,
        solutions,
        seeds_tried: seeds.len(),
        converged_runs,
        coinciding_discarded: coinciding,
        diagnostics,
    }
}

/// `Lambda(u) = Lambda_0 + Lambda_1 u + Lambda_2 u^2` from exact division of the
/// eigenvalue numerator by `prod (u - v_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenvaluePolynomial {
    pub coeffs: [Complex64; 3],
    /// Largest remainder coefficient relative to the numerator.
    pub remainder: f64,
}

impl EigenvaluePolynomial {
    pub fn eval(&self, u: Complex64) -> Complex64 {
        poly::eval(&self.coeffs, u)
    }

    pub fn on_shell(&self) -> bool {
        self.remainder <= OFF_SHELL_RTOL
    }
}

/// Numerator `a(u) prod (u - v_i + eta) + d(u) prod (u - v_i - eta)`.
fn numerator(roots: &[Complex64], vacuum: &VacuumData, eta: f64) -> Poly {
    let shifted = |s: f64| poly::from_roots(&roots.iter().map(|v| v - s).collect::<Vec<_>>());
    poly::add(&poly::mul(&vacuum.a_poly(), &shifted(eta)), &poly::mul(&vacuum.d_poly(), &shifted(-eta)))
}

pub fn eigenvalue_polynomial(roots: &[Complex64], vacuum: &VacuumData, eta: f64) -> EigenvaluePolynomial {
    let num = numerator(roots, vacuum, eta);
    let den = poly::from_roots(roots);
    let (quot, rem) = poly::div_monic(&num, &den);
    let mut coeffs = [ZERO; 3];
    for (k, q) in quot.iter().enumerate().take(3) {
        coeffs[k] = *q;
    }
    EigenvaluePolynomial {
        coeffs,
        remainder: poly::max_abs(&rem) / poly::max_abs(&num).max(f64::MIN_POSITIVE),
    }
}

/// Numerator of `Lambda` at each root; vanishes exactly when the Bethe equations hold.
pub fn pole_residues(roots: &[Complex64], vacuum: &VacuumData, eta: f64) -> Vec<Complex64> {
    let num = numerator(roots, vacuum, eta);
    roots.iter().map(|&v| poly::eval(&num, v)).collect()
}

/// `Lambda(u)` over the product vacuum via the polynomial extension.
pub fn transfer_eigenvalue(u: Complex64, roots: &BetheRootSet, spec: &ModelSpec) -> Result<Complex64> {
    transfer_eigenvalue_on(u, &roots.roots, &VacuumData::product(spec), spec.eta)
}

pub fn transfer_eigenvalue_on(u: Complex64, roots: &[Complex64], vacuum: &VacuumData, eta: f64) -> Result<Complex64> {
    let lam = eigenvalue_polynomial(roots, vacuum, eta);
    if lam.on_shell() {
        return Ok(lam.eval(u));
    }
    if roots.iter().any(|v| (u - v).norm() < POLE_GUARD) {
        return Err(Error::Pole(format!("u = {u} coincides with a rapidity of an off-shell set")));
    }
    Err(Error::OffShell(lam.remainder))
}

/// `xi0 Lambda_0 + Lambda_1 (1 + xi1 Lambda_1) - xi2 Lambda_2`, before the reality check.
pub fn energy_from_polynomial(lam: &EigenvaluePolynomial, spec: &ModelSpec) -> Result<Complex64> {
    if !lam.on_shell() {
        return Err(Error::OffShell(lam.remainder));
    }
    let [l0, l1, l2] = lam.coeffs;
    let sigma = spec.sigma();
    if (l2 - sigma).norm() > 1e-9 * sigma.abs().max(1.0) {
        return Err(Error::Consistency(format!("u^2 coefficient {l2} differs from sigma = {sigma}")));
    }
    Ok(l0 * spec.xi0 + l1 * (l1 * spec.xi1 + 1.0) - l2 * spec.xi2())
}

fn real_energy(e: Complex64) -> Result<f64> {
    if e.im.abs() > 1e-8 * e.re.abs().max(1.0) {
        return Err(Error::Consistency(format!("energy {e} is not real")));
    }
    Ok(e.re)
}

/// Energy of an on-shell root set over the product vacuum.
pub fn energy(roots: &BetheRootSet, spec: &ModelSpec) -> Result<f64> {
    energy_on(&roots.roots, &VacuumData::product(spec), spec)
}

pub fn energy_on(roots: &[Complex64], vacuum: &VacuumData, spec: &ModelSpec) -> Result<f64> {
    real_energy(energy_from_polynomial(&eigenvalue_polynomial(roots, vacuum, spec.eta), spec)?)
}

/// `C(v_1) ... C(v_N) |0>`, unnormalized.
#[derive(Clone, Debug)]
pub struct BetheVector {
    pub state: State,
    pub norm: f64,
    /// Norm negligible against the product of the creation-operator sizes.
    pub null: bool,
}

pub fn bethe_vector(model: &IntegrableModel, vacuum: &VacuumData, roots: &[Complex64]) -> BetheVector {
    let mut psi = vacuum.state.clone();
    let mut reference = vacuum.state.norm();
    for &v in roots.iter().rev() {
        reference *= model.creation(v).max_abs().max(f64::MIN_POSITIVE);
        psi = model.apply_creation(v, &psi);
    }
    let norm = psi.norm();
    BetheVector {
        null: norm <= 1e-10 * reference,
        state: psi,
        norm,
    }
}

/// Spectral parameters at which eigenpairs are checked, scaled by `|eta|`.
pub fn sample_points(eta: f64) -> Vec<Complex64> {
    [(0.31, 0.17), (-0.73, 0.05), (1.11, -0.42), (0.06, 0.93), (-1.29, -0.61)]
        .iter()
        .map(|&(x, y)| Complex64::new(x, y) * eta.abs())
        .collect()
}

/// Cached operators for repeated eigenpair checks on one model.
pub struct BetheContext<'m> {
    model: &'m IntegrableModel,
    transfers: Vec<(Complex64, OperatorMatrix)>,
    hamiltonian: OperatorMatrix,
    raising: OperatorMatrix,
}

impl<'m> BetheContext<'m> {
    pub fn new(model: &'m IntegrableModel) -> Result<Self> {
        let transfers = sample_points(model.spec().eta)
            .into_iter()
            .map(|u| (u, model.transfer(u)))
            .collect();
        let raising = model.lax_operator(Species::A).raising() + model.lax_operator(Species::B).raising();
        Ok(BetheContext {
            model,
            transfers,
            hamiltonian: model.hamiltonian()?,
            raising,
        })
    }

    pub fn model(&self) -> &IntegrableModel {
        self.model
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampledResidual {
    pub u: Complex64,
    pub eigenvalue: Complex64,
    pub residual: f64,
}

/// Everything checked about one root set.
#[derive(Clone, Debug, Serialize)]
pub struct EigenpairReport {
    pub n: usize,
    pub roots: BetheRootSet,
    pub bae_threshold: f64,
    pub division_remainder: f64,
    pub energy: Option<f64>,
    pub sector: Sector,
    pub bethe_norm: f64,
    pub null_vector: bool,
    pub eigenpair: Vec<SampledResidual>,
    pub max_eigenpair_residual: f64,
    pub eigenpair_threshold: f64,
    /// `||H psi - E psi|| / ||psi||`.
    pub energy_residual: Option<f64>,
    /// `||S^+ psi|| / ||psi||` with the Lax raising operators.
    pub raising_residual: f64,
    pub nearest_oracle: Option<f64>,
    pub oracle_gap: Option<f64>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl EigenpairReport {
    pub fn highest_weight(&self) -> bool {
        self.raising_residual <= 1e-7
    }
}

/// Checks a root set over `vacuum`: Bethe equations, polynomial division,
/// transfer-matrix eigenpair at sampled `u`, energy, and the nearest exact
/// level in the matching sector when `oracle` carries sector labels.
pub fn verify_eigenpair(ctx: &BetheContext<'_>, vacuum: &VacuumData, roots: &BetheRootSet, oracle: Option<&Spectrum>) -> EigenpairReport {
    let spec = ctx.model.spec();
    let n = roots.len();
    let sector = Sector(vacuum.top_sector().0 - 2 * n as i64);
    let mut notes = Vec::new();
    let lam = eigenvalue_polynomial(&roots.roots, vacuum, spec.eta);
    if roots.any_singular() {
        notes.push("singular rapidity present; eigenvalue taken from the polynomial extension".into());
    }
    let energy = match energy_from_polynomial(&lam, spec).and_then(real_energy) {
        Ok(e) => Some(e),
        Err(e) => {
            notes.push(format!("energy unavailable: {e}"));
            None
        }
    };
    let bv = bethe_vector(ctx.model, vacuum, &roots.roots);
    if bv.null {
        notes.push("Bethe vector vanishes".into());
    }
    let inv = if bv.norm > 0.0 { 1.0 / bv.norm } else { 0.0 };
    let eigenpair: Vec<SampledResidual> = ctx
        .transfers
        .iter()
        .map(|(u, t)| {
            let eigenvalue = lam.eval(*u);
            let r = t.apply(&bv.state) - bv.state.scale(1.0) * eigenvalue;
            SampledResidual {
                u: *u,
                eigenvalue,
                residual: r.norm() * inv,
            }
        })
        .collect();
    let max_eigenpair_residual = eigenpair.iter().fold(0.0_f64, |m, s| m.max(s.residual));
    let energy_residual = energy.map(|e| (ctx.hamiltonian.apply(&bv.state) - bv.state.scale(1.0) * c(e)).norm() * inv);
    let raising_residual = ctx.raising.apply(&bv.state).norm() * inv / ctx.raising.max_abs().max(1.0);
    let (nearest_oracle, oracle_gap) = match (energy, oracle) {
        (Some(e), Some(oracle)) => {
            let best = oracle
                .labelled()
                .into_iter()
                .filter(|(s, _)| *s == sector)
                .map(|(_, x)| x)
                .min_by(|x, y| (x - e).abs().total_cmp(&(y - e).abs()));
            (best, best.map(|x| (x - e).abs()))
        }
        _ => (None, None),
    };
    let passed = roots.converged
        && lam.on_shell()
        && energy.is_some()
        && !bv.null
        && max_eigenpair_residual <= EIGENPAIR_TOL;
    EigenpairReport {
        n,
        bae_threshold: SolverConfig::default().residual_rtol * roots.scale,
        roots: roots.clone(),
        division_remainder: lam.remainder,
        energy,
        sector,
        bethe_norm: bv.norm,
        null_vector: bv.null,
        eigenpair,
        max_eigenpair_residual,
        eigenpair_threshold: EIGENPAIR_TOL,
        energy_residual,
        raising_residual,
        nearest_oracle,
        oracle_gap,
        notes,
        passed,
    }
}

/// One accepted Bethe eigenstate.
#[derive(Clone, Debug, Serialize)]
pub struct BetheLevel {
    /// Collective spins `(S_A, S_B)` of the vacuum block.
    pub block: (f64, f64),
    pub copies: usize,
    pub n: usize,
    pub roots: BetheRootSet,
    pub energy: f64,
    pub sector: Sector,
    pub highest_weight: bool,
    pub eigenpair_residual: f64,
}

/// Bethe eigenstates collected over vacua and excitation numbers.
#[derive(Clone, Debug, Serialize)]
pub struct LevelScan {
    pub isotropic: bool,
    pub vacua: usize,
    pub levels: Vec<BetheLevel>,
    /// Converged root sets rejected as null, off-shell, failing the
    /// eigenpair check, or linearly dependent on an accepted state.
    pub rejected: usize,
    pub runs: Vec<SectorRun>,
}

/// Solver bookkeeping for one vacuum and one `N`.
#[derive(Clone, Debug, Serialize)]
pub struct SectorRun {
    pub block: (f64, f64),
    pub n: usize,
    pub sector: Sector,
    pub seeds_tried: usize,
    pub converged_runs: usize,
    pub distinct_solutions: usize,
    pub accepted: usize,
    pub diagnostics: Vec<String>,
}

impl LevelScan {
    /// `(sector, energy)` list with multiplicities: at the isotropic point each
    /// highest-weight level spans `2S + 1` sectors (descendants are skipped),
    /// elsewhere each level sits in its own sector; every entry repeats `copies` times.
    pub fn expanded(&self) -> Vec<(Sector, f64)> {
        let mut out = Vec::new();
        for level in &self.levels {
            let entries = if self.isotropic {
                if !level.highest_weight {
                    continue;
                }
                expand_multiplet(level.sector, level.energy)
            } else {
                vec![(level.sector, level.energy)]
            };
            for _ in 0..level.copies {
                out.extend(entries.iter().copied());
            }
        }
        out
    }

    /// Levels reached from the all-up product vacuum alone.
    pub fn product_vacuum_levels(&self) -> LevelScan {
        let top = self.levels.first().map(|l| l.block);
        LevelScan {
            isotropic: self.isotropic,
            vacua: 1,
            levels: self.levels.iter().filter(|l| Some(l.block) == top).cloned().collect(),
            rejected: 0,
            runs: self.runs.iter().filter(|r| Some(r.block) == top).cloned().collect(),
        }
    }
}

/// Solves the Bethe equations over each vacuum for `N = 0..=nmax` and keeps
/// verified, linearly independent eigenstates.
///
/// With `all_blocks` false only the product vacuum is used. Without `nmax`,
/// `N` runs over every nonempty sector, except at the isotropic point where it
/// stops at `2 min(S_A, S_B)`, the last highest-weight sector.
pub fn scan_levels(model: &IntegrableModel, config: &SolverConfig, all_blocks: bool, nmax: Option<usize>) -> Result<LevelScan> {
    let spec = model.spec();
    let ctx = BetheContext::new(model)?;
    let isotropic = spec.is_isotropic_point();
    let vacua = if all_blocks {
        block_vacua(model)
    } else {
        vec![VacuumData::product(spec)]
    };
    let mut levels = Vec::new();
    let mut runs = Vec::new();
    let mut rejected = 0;
    for vac in &vacua {
        let top = match nmax {
            Some(cap) => vac.max_excitations().min(cap),
            // spin S_A x spin S_B holds highest weights for N = 0..=2 min(S_A, S_B)
            None if isotropic => (2.0 * vac.m_a.min(vac.m_b)).round() as usize,
            None => vac.max_excitations(),
        };
        for n in 0..=top {
            let outcome = solve_bae_on(n, spec, vac, config);
            let mut basis: Vec<State> = Vec::new();
            let before = levels.len();
            let distinct = outcome.solutions.len();
            for roots in outcome.solutions {
                let report = verify_eigenpair(&ctx, vac, &roots, None);
                let Some(energy) = report.energy.filter(|_| report.passed) else {
                    rejected += 1;
                    continue;
                };
                let psi = bethe_vector(model, vac, &roots.roots).state;
                let mut rest = psi.clone() / c(psi.norm());
                for b in &basis {
                    let overlap = b.dotc(&rest);
                    rest -= b * overlap;
                }
                let left = rest.norm();
                if left <= 1e-6 {
                    rejected += 1;
                    continue;
                }
                basis.push(rest / c(left));
                levels.push(BetheLevel {
                    block: (vac.m_a, vac.m_b),
                    copies: vac.copies,
                    n,
                    highest_weight: report.highest_weight(),
                    eigenpair_residual: report.max_eigenpair_residual,
                    sector: report.sector,
                    roots,
                    energy,
                });
            }
            runs.push(SectorRun {
                block: (vac.m_a, vac.m_b),
                n,
                sector: Sector(vac.top_sector().0 - 2 * n as i64),
                seeds_tried: outcome.seeds_tried,
                converged_runs: outcome.converged_runs,
                distinct_solutions: distinct,
                accepted: levels.len() - before,
                diagnostics: outcome.diagnostics,
            });
        }
    }
    Ok(LevelScan {
        isotropic,
        vacua: vacua.len(),
        levels,
        rejected,
        runs,
    })
}
