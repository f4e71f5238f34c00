//! TOML run configuration: `[model]`, `[solver]`, `[verify]`, `[output]`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bethe::SolverConfig;
use crate::error::{Error, Result};
use crate::integrable::ModelSpec;
use crate::model::CouplingSet;
use crate::spin::{SiteList, Spin, DEFAULT_DIM_CAP};

fn one() -> f64 {
    1.0
}

/// Sites and parameters. Missing site coefficients default to
/// `alpha = beta = sqrt(gamma rho)` per species.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Species-a spin magnitudes, e.g. `["1/2", "1"]`.
    pub a: Vec<Spin>,
    pub b: Vec<Spin>,
    #[serde(default = "one")]
    pub gamma_a: f64,
    #[serde(default = "one")]
    pub rho_a: f64,
    #[serde(default = "one")]
    pub gamma_b: f64,
    #[serde(default = "one")]
    pub rho_b: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default)]
    pub omega_a: f64,
    #[serde(default)]
    pub omega_b: f64,
    #[serde(default = "one")]
    pub xi0: f64,
    #[serde(default)]
    pub xi1: f64,
    pub alpha_a: Option<Vec<f64>>,
    pub beta_a: Option<Vec<f64>>,
    pub alpha_b: Option<Vec<f64>>,
    pub beta_b: Option<Vec<f64>>,
    pub dim_cap: Option<usize>,
}

impl ModelSection {
    pub fn sites(&self) -> Result<SiteList> {
        SiteList::with_cap(self.a.clone(), self.b.clone(), self.dim_cap.unwrap_or(DEFAULT_DIM_CAP))
    }

    /// The spec as written; integrability constraints are not checked here.
    pub fn spec(&self) -> Result<ModelSpec> {
        let sites = self.sites()?;
        let default_coeff = |gamma: f64, rho: f64, given: &Option<Vec<f64>>, count: usize| -> Result<Vec<f64>> {
            match given {
                Some(v) => Ok(v.clone()),
                None if gamma * rho > 0.0 => Ok(vec![(gamma * rho).sqrt(); count]),
                None => Err(Error::Constraint(vec![
                    "gamma*rho <= 0: give alpha and beta explicitly".into(),
                ])),
            }
        };
        let (n, m) = (sites.n(), sites.m());
        let spec = ModelSpec {
            alpha_a: default_coeff(self.gamma_a, self.rho_a, &self.alpha_a, n)?,
            beta_a: default_coeff(self.gamma_a, self.rho_a, &self.beta_a, n)?,
            alpha_b: default_coeff(self.gamma_b, self.rho_b, &self.alpha_b, m)?,
            beta_b: default_coeff(self.gamma_b, self.rho_b, &self.beta_b, m)?,
            sites,
            gamma_a: self.gamma_a,
            rho_a: self.rho_a,
            gamma_b: self.gamma_b,
            rho_b: self.rho_b,
            eta: self.eta,
            omega_a: self.omega_a,
            omega_b: self.omega_b,
            xi0: self.xi0,
            xi1: self.xi1,
        };
        let shape = spec.shape_violations();
        if !shape.is_empty() {
            return Err(Error::Config(shape.join("; ")));
        }
        Ok(spec)
    }
}

/// Bethe-solver settings plus the excitation range and vacuum choice.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub nmax: Option<usize>,
    /// Also solve over the highest-weight vacua of every collective-spin block.
    #[serde(default)]
    pub block_vacua: bool,
    /// Energy tolerance for matching against exact diagonalization.
    #[serde(default = "default_match_tolerance")]
    pub match_tolerance: f64,
    #[serde(default)]
    pub newton: SolverConfig,
}

fn default_match_tolerance() -> f64 {
    1e-7
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            nmax: None,
            block_vacua: false,
            match_tolerance: default_match_tolerance(),
            newton: SolverConfig::default(),
        }
    }
}

/// Sample counts for the randomized certification sweeps.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub ybe_samples: usize,
    pub rll_samples: usize,
    pub commute_samples: usize,
    pub vacuum_samples: usize,
    pub seed: u64,
    /// Spectral parameters are drawn from the disc `|u| <= radius`.
    pub radius: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            ybe_samples: 100,
            rll_samples: 50,
            commute_samples: 20,
            vacuum_samples: 10,
            seed: 20240229,
            radius: 10.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("twospin-out"),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Positive tolerances and sample counts.
    pub fn validate(&self) -> Result<()> {
        self.solver.newton.validate()?;
        if !(self.solver.match_tolerance >= 0.0 && self.solver.match_tolerance.is_finite()) {
            return Err(Error::Config("match_tolerance must be a finite nonnegative number".into()));
        }
        let v = &self.verify;
        if v.ybe_samples == 0 || v.rll_samples == 0 || v.commute_samples == 0 || v.vacuum_samples == 0 {
            return Err(Error::Config("sample counts must be at least 1".into()));
        }
        if !(v.radius > 0.0 && v.radius.is_finite()) {
            return Err(Error::Config("radius must be positive".into()));
        }
        Ok(())
    }
}

/// Reads a coupling set from TOML, or JSON when the extension is `.json`.
pub fn read_couplings(path: &Path) -> Result<CouplingSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }
}
