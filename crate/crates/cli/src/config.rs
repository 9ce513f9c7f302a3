//! Run configuration: family selection, parameters, tolerances, and the
//! optional TOML file with polynomial tables for custom metrics.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use sqcurv_core::betaform::FormField;
use sqcurv_core::classify::{constant_curvature_family, FamilyParams};
use sqcurv_core::numkit::Poly;
use sqcurv_core::riemann::{space_form, MetricField};

/// Built-in metric families plus file-defined custom pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Flat metric with a constant 1-form; everything vanishes identically.
    EuclideanParallel,
    /// Constant-curvature metric with zero form; the Riemannian baseline.
    SpaceForm,
    /// The scalar-flag-curvature model family, parameterized by (mu, k, a).
    SquareScalar,
    /// The canonical zero-curvature pair on the unit ball, parameterized by a.
    SquareConstant,
    /// Conformally flat metric and polynomial form given by coefficient tables.
    Custom,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::EuclideanParallel => "euclidean-parallel",
            Family::SpaceForm => "space-form",
            Family::SquareScalar => "square-scalar",
            Family::SquareConstant => "square-constant",
            Family::Custom => "custom",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean-parallel" => Ok(Family::EuclideanParallel),
            "space-form" => Ok(Family::SpaceForm),
            "square-scalar" => Ok(Family::SquareScalar),
            "square-constant" => Ok(Family::SquareConstant),
            "custom" => Ok(Family::Custom),
            other => bail!(
                "unknown family `{other}` (expected euclidean-parallel, space-form, \
                 square-scalar, square-constant, or custom)"
            ),
        }
    }
}

/// Residual rows with their default tolerances. The first block is evaluated
/// per sample, the second once per run.
pub const ROW_DEFAULTS: &[(&str, f64)] = &[
    ("y1", 1e-6),
    ("y2", 1e-6),
    ("y3", 1e-6),
    ("qq", 1e-6),
    ("weyl", 1e-6),
    ("douglas", 1e-6),
    ("scalar-flag", 1e-6),
    ("proj-flat", 1e-7),
    ("spray-match", 1e-8),
    ("k-consistency", 1e-6),
    ("deform-constcurv", 1e-6),
    ("deform-conformal", 1e-8),
    ("delta-const", 1e-7),
    ("bounds", 1e-8),
    ("tau-exponent", 1e-7),
];

/// Canonical row order used by reports.
pub fn row_order() -> Vec<&'static str> {
    ROW_DEFAULTS.iter().map(|(name, _)| *name).collect()
}

pub fn default_tolerances() -> BTreeMap<String, f64> {
    ROW_DEFAULTS
        .iter()
        .map(|(name, tol)| (name.to_string(), *tol))
        .collect()
}

/// Parses `name=value,name=value` tolerance overrides.
pub fn parse_tolerance_overrides(list: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("tolerance entry `{part}` is not of the form name=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("tolerance value in `{part}`"))?;
        out.insert(name.trim().to_string(), value);
    }
    Ok(out)
}

/// Polynomial tables defining a custom pair: `a_ij = e^{2 phi} d_ij` and the
/// form components `b_i`, each of total degree at most 4.
#[derive(Debug, Clone)]
pub struct CustomTables {
    pub dim: usize,
    pub phi: Poly,
    pub b: Vec<Poly>,
}

/// Full configuration of a verification run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: Family,
    pub dim: usize,
    pub mu: Option<f64>,
    pub k: Option<f64>,
    pub a: Option<Vec<f64>>,
    /// Sign choice of the constant-curvature form.
    pub sign_plus: bool,
    pub samples: usize,
    pub seed: u64,
    /// Fraction of the chart radius used as the sampling ball.
    pub radius: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub custom: Option<CustomTables>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: Family::EuclideanParallel,
            dim: 3,
            mu: None,
            k: None,
            a: None,
            sign_plus: true,
            samples: 32,
            seed: 0,
            radius: 0.4,
            tolerances: default_tolerances(),
            custom: None,
        }
    }
}

/// Default constant-form coefficients for `euclidean-parallel`.
pub fn default_parallel_coefficients(dim: usize) -> Vec<f64> {
    const BASE: [f64; 6] = [0.3, 0.1, 0.2, 0.05, 0.15, 0.1];
    BASE.iter().cycle().take(dim).copied().collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        if !(self.radius > 0.0 && self.radius <= 1.0) {
            bail!("radius must lie in (0, 1]; it scales the chart radius");
        }
        if !(2..=6).contains(&self.dim) {
            bail!("dimension must lie in 2..=6");
        }
        let known = default_tolerances();
        for (name, tol) in &self.tolerances {
            if !known.contains_key(name.as_str()) {
                bail!(
                    "unknown tolerance name `{name}` (known: {})",
                    known.keys().cloned().collect::<Vec<_>>().join(", ")
                );
            }
            if !(*tol > 0.0 && tol.is_finite()) {
                bail!("tolerance `{name}` must be positive and finite");
            }
        }
        if let Some(a) = &self.a {
            if a.len() != self.dim {
                bail!("--a has {} entries but --dim is {}", a.len(), self.dim);
            }
        }
        match self.family {
            Family::EuclideanParallel => {
                self.forbid(self.mu.is_some(), "--mu")?;
                self.forbid(self.k.is_some(), "--k")?;
            }
            Family::SpaceForm => {
                self.require(self.mu.is_some(), "--mu")?;
                self.forbid(self.k.is_some(), "--k")?;
                self.forbid(self.a.is_some(), "--a")?;
            }
            Family::SquareScalar => {
                self.require(self.mu.is_some(), "--mu")?;
                self.require(self.k.is_some(), "--k")?;
                self.require(self.a.is_some(), "--a")?;
            }
            Family::SquareConstant => {
                self.forbid(self.mu.is_some(), "--mu")?;
                self.forbid(self.k.is_some(), "--k")?;
                self.require(self.a.is_some(), "--a")?;
                let norm: f64 = self.a.as_ref().unwrap().iter().map(|v| v * v).sum();
                if norm >= 1.0 {
                    bail!("square-constant needs |a| < 1, got |a|^2 = {norm}");
                }
            }
            Family::Custom => {
                self.forbid(self.mu.is_some(), "--mu")?;
                self.forbid(self.k.is_some(), "--k")?;
                self.forbid(self.a.is_some(), "--a")?;
                let tables = self
                    .custom
                    .as_ref()
                    .ok_or_else(|| anyhow!("custom family needs a --config file with tables"))?;
                if tables.dim != self.dim {
                    bail!(
                        "custom tables are {}-dimensional but --dim is {}",
                        tables.dim,
                        self.dim
                    );
                }
            }
        }
        Ok(())
    }

    fn require(&self, present: bool, flag: &str) -> Result<()> {
        if !present {
            bail!("family {} requires {flag}", self.family);
        }
        Ok(())
    }

    fn forbid(&self, present: bool, flag: &str) -> Result<()> {
        if present {
            bail!("family {} does not take {flag}", self.family);
        }
        Ok(())
    }

    /// Builds the `(alpha, beta)` pair and, for the model family, its
    /// parameter record.
    pub fn build_family(&self) -> Result<(MetricField, FormField, Option<FamilyParams>)> {
        self.validate()?;
        match self.family {
            Family::EuclideanParallel => {
                let coef = self
                    .a
                    .clone()
                    .unwrap_or_else(|| default_parallel_coefficients(self.dim));
                Ok((
                    MetricField::Euclidean { dim: self.dim },
                    FormField::Constant { coef },
                    None,
                ))
            }
            Family::SpaceForm => Ok((
                space_form(self.dim, self.mu.unwrap()),
                FormField::Zero { dim: self.dim },
                None,
            )),
            Family::SquareScalar => {
                let params =
                    FamilyParams::new(self.mu.unwrap(), self.k.unwrap(), self.a.clone().unwrap());
                let (alpha, beta) = params.model_family();
                Ok((alpha, beta, Some(params)))
            }
            Family::SquareConstant => {
                let (alpha, beta) =
                    constant_curvature_family(self.a.as_ref().unwrap(), self.sign_plus)?;
                Ok((alpha, beta, None))
            }
            Family::Custom => {
                let tables = self.custom.as_ref().unwrap();
                Ok((
                    MetricField::ConformalPoly {
                        phi: tables.phi.clone(),
                    },
                    FormField::PolyForm {
                        comps: tables.b.clone(),
                    },
                    None,
                ))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTerm {
    c: f64,
    exps: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCustom {
    #[serde(default)]
    phi: Vec<FileTerm>,
    b: Vec<Vec<FileTerm>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    family: Option<String>,
    dim: Option<usize>,
    mu: Option<f64>,
    k: Option<f64>,
    a: Option<Vec<f64>>,
    sign: Option<String>,
    samples: Option<usize>,
    seed: Option<u64>,
    radius: Option<f64>,
    tolerances: Option<BTreeMap<String, f64>>,
    custom: Option<FileCustom>,
}

const MAX_TABLE_DEGREE: usize = 4;

fn build_poly(dim: usize, terms: &[FileTerm], what: &str) -> Result<Poly> {
    let mut p = Poly::zero(dim);
    for term in terms {
        if term.exps.len() != dim {
            bail!(
                "{what}: term has {} exponents but the dimension is {dim}",
                term.exps.len()
            );
        }
        let degree: usize = term.exps.iter().sum();
        if degree > MAX_TABLE_DEGREE {
            bail!("{what}: total degree {degree} exceeds the cap of {MAX_TABLE_DEGREE}");
        }
        if !term.c.is_finite() {
            bail!("{what}: non-finite coefficient");
        }
        p = p.term(term.c, &term.exps);
    }
    Ok(p)
}

/// Applies a TOML config file on top of `base`; file values win over flags.
pub fn apply_config_file(base: &mut RunConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let file: FileConfig = toml::from_str(&text)
        .with_context(|| format!("parsing config file {}", path.display()))?;

    if let Some(family) = file.family {
        base.family = family.parse()?;
    }
    if let Some(dim) = file.dim {
        base.dim = dim;
    }
    if file.mu.is_some() {
        base.mu = file.mu;
    }
    if file.k.is_some() {
        base.k = file.k;
    }
    if file.a.is_some() {
        base.a = file.a;
    }
    if let Some(sign) = file.sign {
        base.sign_plus = match sign.as_str() {
            "plus" => true,
            "minus" => false,
            other => bail!("sign must be `plus` or `minus`, got `{other}`"),
        };
    }
    if let Some(samples) = file.samples {
        base.samples = samples;
    }
    if let Some(seed) = file.seed {
        base.seed = seed;
    }
    if let Some(radius) = file.radius {
        base.radius = radius;
    }
    if let Some(tols) = file.tolerances {
        for (name, tol) in tols {
            base.tolerances.insert(name, tol);
        }
    }
    if let Some(custom) = file.custom {
        let dim = base.dim;
        if custom.b.len() != dim {
            bail!(
                "custom tables define {} form components for dimension {dim}",
                custom.b.len()
            );
        }
        let phi = build_poly(dim, &custom.phi, "phi table")?;
        let b = custom
            .b
            .iter()
            .enumerate()
            .map(|(i, terms)| build_poly(dim, terms, &format!("b[{i}] table")))
            .collect::<Result<Vec<_>>>()?;
        base.custom = Some(CustomTables { dim, phi, b });
    }
    Ok(())
}
