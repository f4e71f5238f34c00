//! Command implementations behind the `twospin` binary.
//!
//! Each command reads a [`RunConfig`], writes its report files into the output
//! directory and returns an [`Outcome`] whose exit code is 0 or 1. Errors are
//! mapped to exit codes by [`exit_code`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bethe::{scan_levels, BetheContext, BetheLevel, SectorRun, VacuumData};
use crate::config::{read_couplings, RunConfig};
use crate::error::{Error, Result};
use crate::integrable::{rll_residual, ybe_residual, IntegrableModel, ModelSpec};
use crate::model::{build_hamiltonian, couplings_from_spec, fit_parameters, interaction_graph, CouplingSet, EdgeKind, FitOutcome};
use crate::operator::OperatorMatrix;
use crate::oracle::{match_spectra, sector_spectrum, trace_check, MatchReport, TraceCheck};
use crate::sampling::{random_complex, random_spectral_pair};
use crate::spin::{total_spin_squared, total_sz, Sector, SiteList};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Spectrum,
    Bethe,
    Graph,
    Fit,
}

#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub nmax: Option<usize>,
    pub from_couplings: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    /// Human-readable summary for stdout.
    pub summary: String,
    /// Non-fatal warnings for stderr.
    pub warnings: Vec<String>,
}

/// 2 for usage and parse problems, 1 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidSpin(_) | Error::InvalidSites(_) => 2,
        _ => 1,
    }
}

pub fn run(inv: &Invocation) -> Result<Outcome> {
    let cfg = RunConfig::from_path(&inv.config)?;
    let out = inv.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    let couplings = match &inv.from_couplings {
        Some(p) => Some(read_couplings(p)?),
        None => None,
    };
    match inv.command {
        Command::Verify => verify(&cfg, &out),
        Command::Spectrum => spectrum(&cfg, &out, couplings),
        Command::Bethe => bethe(&cfg, &out, inv.nmax.or(cfg.solver.nmax)),
        Command::Graph => graph(&cfg, &out, couplings),
        Command::Fit => fit(&cfg, &out, couplings),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Consistency(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

fn outcome(ok: bool, summary: String) -> Outcome {
    Outcome {
        exit_code: if ok { 0 } else { 1 },
        summary,
        warnings: Vec::new(),
    }
}

// ---------------------------------------------------------------- verify

/// One certification check in `verify.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub label: &'static str,
    pub samples: usize,
    /// `None` when the check could not be evaluated.
    pub residual: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn measured(name: &'static str, label: &'static str, samples: usize, residual: f64, threshold: f64) -> Self {
        Check {
            name,
            label,
            samples,
            residual: Some(residual),
            threshold,
            passed: residual.is_finite() && residual <= threshold,
            note: None,
        }
    }

    fn failed(name: &'static str, label: &'static str, err: &Error) -> Self {
        Check {
            name,
            label,
            samples: 0,
            residual: None,
            threshold: 0.0,
            passed: false,
            note: Some(err.to_string()),
        }
    }

    fn from_result(name: &'static str, label: &'static str, samples: usize, res: Result<(f64, f64)>) -> Self {
        match res {
            Ok((residual, threshold)) => Check::measured(name, label, samples, residual, threshold),
            Err(e) => Check::failed(name, label, &e),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub spec: ModelSpec,
    pub dim: usize,
    pub isotropic: bool,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub const YBE_TOL: f64 = 1e-12;
pub const RLL_TOL: f64 = 1e-11;
pub const COMMUTE_RTOL: f64 = 1e-10;
pub const HAMILTONIAN_RTOL: f64 = 1e-10;
pub const HERMITICITY_RTOL: f64 = 1e-12;
pub const CONSERVATION_RTOL: f64 = 1e-11;
pub const VACUUM_RTOL: f64 = 1e-11;

fn max_over<F>(samples: usize, mut f: F) -> Result<f64>
where
    F: FnMut() -> Result<f64>,
{
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        worst = worst.max(f()?);
    }
    Ok(worst)
}

/// Runs every algebraic check on a model built without the integrability
/// constraints, so a bad spec shows up as failing checks.
pub fn verify_model(spec: &ModelSpec, cfg: &RunConfig) -> Result<VerifyReport> {
    let v = &cfg.verify;
    let model = IntegrableModel::new_unchecked(spec.clone())?;
    let eta = spec.eta;
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
    let mut checks = Vec::new();

    let violations = spec.violations();
    checks.push(Check {
        name: "constraints",
        label: "integrability constraints on the parameters",
        samples: 1,
        residual: None,
        threshold: 0.0,
        passed: violations.is_empty(),
        note: (!violations.is_empty()).then(|| violations.join("; ")),
    });

    let ybe = max_over(v.ybe_samples, || {
        let (u, w) = random_spectral_pair(&mut rng, v.radius, eta);
        ybe_residual(u, w, eta)
    });
    checks.push(Check::from_result("ybe", "Yang-Baxter equation", v.ybe_samples, ybe.map(|r| (r, YBE_TOL))));

    let rll = |rng: &mut ChaCha8Rng, lax: &dyn Fn(Complex64) -> crate::integrable::AuxBlock| {
        max_over(v.rll_samples, || {
            let (u, w) = random_spectral_pair(rng, v.radius, eta);
            rll_residual(u, w, eta, |z| Ok(lax(z)))
        })
    };
    let res = rll(&mut rng, &|z| model.lax_a(z));
    checks.push(Check::from_result("rll_a", "RLL relation, species a", v.rll_samples, res.map(|r| (r, RLL_TOL))));
    let res = rll(&mut rng, &|z| model.lax_b(z));
    checks.push(Check::from_result("rll_b", "RLL relation, species b", v.rll_samples, res.map(|r| (r, RLL_TOL))));
    let res = rll(&mut rng, &|z| model.monodromy(z));
    checks.push(Check::from_result("rll_monodromy", "RLL relation, monodromy", v.rll_samples, res.map(|r| (r, RLL_TOL))));

    let mut worst = 0.0_f64;
    for _ in 0..v.commute_samples {
        let tu = model.transfer(random_complex(&mut rng, v.radius));
        let tv = model.transfer(random_complex(&mut rng, v.radius));
        let scale = (tu.max_abs() * tv.max_abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(tu.commutator(&tv).max_abs() / scale);
    }
    checks.push(Check::measured(
        "transfer_commute",
        "[t(u), t(v)] relative to |t(u)| |t(v)|",
        v.commute_samples,
        worst,
        COMMUTE_RTOL,
    ));

    let charges = model.charges();
    checks.push(Check::from_result(
        "charges_commute",
        "pairwise commutators of the transfer-matrix coefficients",
        1,
        charges.as_ref().map(|c| (c.max_relative_commutator(), COMMUTE_RTOL)).map_err(Clone::clone),
    ));

    let sz = total_sz(&spec.sites);
    let c1_closed = charges.as_ref().map_err(Clone::clone).map(|c| {
        let mut expected = OperatorMatrix::identity(model.dim()).scale_real(spec.sigma() * spec.omega_diff());
        expected.axpy(Complex64::new(-eta * spec.delta(), 0.0), &sz);
        let scale = c.c1.max_abs().max(1.0);
        ((&c.c1 - &expected).max_abs() / scale, HAMILTONIAN_RTOL)
    });
    checks.push(Check::from_result("linear_charge", "linear coefficient against its closed form", 1, c1_closed));

    let h_charges = model.hamiltonian();
    let h_couplings = couplings_from_spec(spec).and_then(|cs| build_hamiltonian(&cs, &spec.sites));
    let h_eq = match (&h_charges, &h_couplings) {
        (Ok(a), Ok(b)) => Ok(((a - b).max_abs(), HAMILTONIAN_RTOL * a.max_abs().max(1.0))),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    checks.push(Check::from_result("hamiltonian_equality", "charge form against coupling form", 1, h_eq));

    if let Ok(h) = &h_charges {
        let scale = h.max_abs().max(1.0);
        checks.push(Check::measured(
            "hermiticity",
            "|H - H^dagger|",
            1,
            h.hermiticity_defect(),
            HERMITICITY_RTOL * scale,
        ));
        checks.push(Check::measured(
            "conserve_sz",
            "[H, total S^z]",
            1,
            h.commutator(&sz).max_abs(),
            CONSERVATION_RTOL * scale,
        ));
        if spec.is_isotropic_point() {
            let s2 = total_spin_squared(&spec.sites);
            checks.push(Check::measured(
                "conserve_s2",
                "[H, total S^2] at the isotropic point",
                1,
                h.commutator(&s2).max_abs(),
                CONSERVATION_RTOL * scale * s2.max_abs().max(1.0),
            ));
        }
        let vac = VacuumData::product(spec);
        let psi = &vac.state;
        let mut worst = 0.0_f64;
        for _ in 0..v.vacuum_samples {
            let u = random_complex(&mut rng, v.radius);
            let lam = vac.eigenvalue(u);
            let t = model.transfer(u);
            let r = (t.apply(psi) - psi * lam).norm();
            worst = worst.max(r);
        }
        checks.push(Check::measured(
            "vacuum_eigenpair",
            "t(u) on the all-up state",
            v.vacuum_samples,
            worst,
            VACUUM_RTOL,
        ));
    } else if let Err(e) = &h_charges {
        checks.push(Check::failed("hermiticity", "|H - H^dagger|", e));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        dim: model.dim(),
        isotropic: spec.is_isotropic_point(),
        spec: spec.clone(),
        checks,
        passed,
    })
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.model.spec()?;
    let report = verify_model(&spec, cfg)?;
    write_json(&out.join("verify.json"), &report)?;
    let mut summary = String::new();
    for c in &report.checks {
        let res = c.residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
        let _ = writeln!(summary, "{:<4} {:<22} residual {res}", if c.passed { "ok" } else { "FAIL" }, c.name);
    }
    let _ = write!(summary, "wrote {}", out.join("verify.json").display());
    Ok(outcome(report.passed, summary))
}

// ---------------------------------------------------------------- spectrum

#[derive(Clone, Debug, Serialize)]
pub struct SectorSummary {
    pub sector: Sector,
    pub dim: usize,
    pub lowest: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub source: &'static str,
    pub dim: usize,
    pub ground_energy: f64,
    pub sectors: Vec<SectorSummary>,
    pub trace_check: TraceCheck,
    /// `|H_couplings - H_charges|_max`, absent without a parameter set.
    pub hamiltonian_mismatch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_spec: Option<ModelSpec>,
}

#[derive(Clone, Debug, Serialize)]
struct InfeasibleReport<'a> {
    status: &'static str,
    reasons: &'a [String],
}

fn spectrum(cfg: &RunConfig, out: &Path, couplings: Option<CouplingSet>) -> Result<Outcome> {
    let sites = cfg.model.sites()?;
    let (source, cs, spec) = match couplings {
        Some(cs) => match fit_parameters(&cs, &sites) {
            FitOutcome::Feasible { spec } => ("couplings", cs, spec),
            FitOutcome::Infeasible { reasons } => {
                let path = out.join("spectrum.json");
                write_json(
                    &path,
                    &InfeasibleReport {
                        status: "infeasible",
                        reasons: &reasons,
                    },
                )?;
                return Ok(outcome(false, format!("couplings are not integrable: {}", reasons.join("; "))));
            }
        },
        None => {
            let spec = cfg.model.spec()?;
            spec.validate()?;
            ("spec", couplings_from_spec(&spec)?, spec)
        }
    };
    let h = build_hamiltonian(&cs, &sites)?;
    let model = IntegrableModel::new(spec.clone())?;
    let mismatch = (&h - &model.hamiltonian()?).max_abs();
    let spec_out = sector_spectrum(&h, &sites)?;
    let labelled = spec_out.labelled();
    let values: Vec<f64> = labelled.iter().map(|&(_, e)| e).collect();

    let mut csv = String::from("index,sector,eigenvalue\n");
    for (i, (sec, e)) in labelled.iter().enumerate() {
        let _ = writeln!(csv, "{i},{sec},{e:.16e}");
    }
    write_file(&out.join("spectrum.csv"), &csv)?;

    let mut sectors: Vec<SectorSummary> = Vec::new();
    for &(sec, e) in &labelled {
        match sectors.iter_mut().find(|s| s.sector == sec) {
            Some(s) => {
                s.dim += 1;
                s.lowest = s.lowest.min(e);
            }
            None => sectors.push(SectorSummary { sector: sec, dim: 1, lowest: e }),
        }
    }
    let tc = trace_check(&h, &values);
    let ok = tc.passed && mismatch <= HAMILTONIAN_RTOL * h.max_abs().max(1.0);
    let report = SpectrumReport {
        source,
        dim: h.dim(),
        ground_energy: values.iter().copied().fold(f64::INFINITY, f64::min),
        sectors,
        trace_check: tc,
        hamiltonian_mismatch: Some(mismatch),
        fitted_spec: (source == "couplings").then_some(spec),
    };
    write_json(&out.join("spectrum.json"), &report)?;
    let summary = format!(
        "{} eigenvalues in {} sectors, ground energy {:.12}\nwrote {}",
        h.dim(),
        report.sectors.len(),
        report.ground_energy,
        out.join("spectrum.csv").display()
    );
    Ok(outcome(ok, summary))
}

// ---------------------------------------------------------------- bethe

#[derive(Clone, Debug, Serialize)]
pub struct LevelEntry {
    #[serde(flatten)]
    pub level: BetheLevel,
    pub nearest_oracle: Option<f64>,
    pub oracle_gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BetheReport {
    pub isotropic: bool,
    pub block_vacua: bool,
    pub nmax: Option<usize>,
    pub vacua: usize,
    pub levels: Vec<LevelEntry>,
    pub rejected: usize,
    pub runs: Vec<SectorRun>,
    pub matching: MatchReport,
    pub warnings: Vec<String>,
}

/// Bethe levels over the configured vacua, each compared with the nearest
/// exact level of its sector, plus a full matching against exact diagonalization.
pub fn bethe_report(spec: &ModelSpec, cfg: &RunConfig, nmax: Option<usize>) -> Result<BetheReport> {
    let model = IntegrableModel::new(spec.clone())?;
    let ctx = BetheContext::new(&model)?;
    let oracle = sector_spectrum(ctx.hamiltonian(), &spec.sites)?;
    let labelled = oracle.labelled();
    let scan = scan_levels(&model, &cfg.solver.newton, cfg.solver.block_vacua, nmax)?;

    let mut warnings = Vec::new();
    let top = VacuumData::product(spec).max_excitations();
    if let Some(cap) = nmax {
        for n in top + 1..=cap {
            warnings.push(format!("empty sector: N = {n} exceeds the {top} available excitations"));
        }
    }
    for run in &scan.runs {
        warnings.extend(run.diagnostics.iter().filter(|d| d.starts_with("empty sector")).cloned());
    }

    let levels = scan
        .levels
        .iter()
        .map(|level| {
            let nearest = labelled
                .iter()
                .filter(|(s, _)| *s == level.sector)
                .map(|&(_, e)| e)
                .min_by(|a, b| (a - level.energy).abs().total_cmp(&(b - level.energy).abs()));
            LevelEntry {
                level: level.clone(),
                nearest_oracle: nearest,
                oracle_gap: nearest.map(|e| (e - level.energy).abs()),
            }
        })
        .collect();
    let matching = match_spectra(&scan.expanded(), &oracle, cfg.solver.match_tolerance);
    Ok(BetheReport {
        isotropic: scan.isotropic,
        block_vacua: cfg.solver.block_vacua,
        nmax,
        vacua: scan.vacua,
        levels,
        rejected: scan.rejected,
        runs: scan.runs,
        matching,
        warnings,
    })
}

fn bethe(cfg: &RunConfig, out: &Path, nmax: Option<usize>) -> Result<Outcome> {
    let spec = cfg.model.spec()?;
    let report = bethe_report(&spec, cfg, nmax)?;
    write_json(&out.join("bethe.json"), &report)?;
    let mut summary = String::new();
    for e in &report.levels {
        let roots: Vec<String> = e.level.roots.roots.iter().map(|v| format!("{:.6}{:+.6}i", v.re, v.im)).collect();
        let _ = writeln!(
            summary,
            "N={} sector {} E={:.12} gap {} roots [{}]",
            e.level.n,
            e.level.sector,
            e.level.energy,
            e.oracle_gap.map_or_else(|| "-".into(), |g| format!("{g:.2e}")),
            roots.join(", ")
        );
    }
    let m = &report.matching;
    let _ = writeln!(
        summary,
        "matched {} levels, {} exact levels unmatched, {} Bethe levels unmatched",
        m.matched.len(),
        m.unmatched_oracle.len(),
        m.unmatched_bethe.len()
    );
    let _ = write!(summary, "wrote {}", out.join("bethe.json").display());
    let ok = report.matching.unmatched_bethe.is_empty();
    let mut o = outcome(ok, summary);
    o.warnings = report.warnings;
    Ok(o)
}

// ---------------------------------------------------------------- graph, fit

fn couplings_or_spec(cfg: &RunConfig, couplings: Option<CouplingSet>) -> Result<CouplingSet> {
    match couplings {
        Some(cs) => Ok(cs),
        None => {
            let spec = cfg.model.spec()?;
            spec.validate()?;
            couplings_from_spec(&spec)
        }
    }
}

fn graph(cfg: &RunConfig, out: &Path, couplings: Option<CouplingSet>) -> Result<Outcome> {
    let cs = couplings_or_spec(cfg, couplings)?;
    cs.validate(cs.n(), cs.m())?;
    let g = interaction_graph(&cs);
    let path = out.join("graph.dot");
    write_file(&path, &g.to_dot())?;
    let summary = format!(
        "{} vertices, {} edges ({} a-a, {} b-b, {} a-b)\nwrote {}",
        g.vertices.len(),
        g.edges.len(),
        g.edge_count(EdgeKind::Aa),
        g.edge_count(EdgeKind::Bb),
        g.edge_count(EdgeKind::Ab),
        path.display()
    );
    Ok(outcome(true, summary))
}

fn fit(cfg: &RunConfig, out: &Path, couplings: Option<CouplingSet>) -> Result<Outcome> {
    let sites: SiteList = cfg.model.sites()?;
    let cs = couplings_or_spec(cfg, couplings)?;
    let result = fit_parameters(&cs, &sites);
    let path = out.join("fit.json");
    write_json(&path, &result)?;
    Ok(match &result {
        FitOutcome::Feasible { .. } => outcome(true, format!("feasible\nwrote {}", path.display())),
        FitOutcome::Infeasible { reasons } => outcome(false, format!("infeasible: {}\nwrote {}", reasons.join("; "), path.display())),
    })
}
