//! Sweep configuration.
//!
//! A config is a flat TOML table. Unknown keys are rejected.
//!
//! ```toml
//! family = "two-bumps"
//! parameter = "d"          # defaults to the family's first parameter
//! range = [-0.3, 0.3, 7]   # start, stop, count; or `values = [...]`
//! K_big = 2.0              # fixed parameters of the family
//! K_small = 1.0
//! estimators = ["galerkin", "direct"]
//! M = 400
//! N = 4000
//! output = "two-bumps.csv"
//! ```
//!
//! | key | default | bounds |
//! |-----|---------|--------|
//! | `estimators` | `["galerkin"]` | nonempty |
//! | `M` | 1000 | 2..=20000 |
//! | `N` | 10000 | >= 1 |
//! | `seed` | none (grid sampling) | |
//! | `n_lser` | 500 | >= 1 |
//! | `n_galerkin` | min(200, M) | 1..=M |
//! | `quadrature_order` | 512 | >= 8 |
//! | `cutoff` | 50000 | > 0 |
//! | `radius` | 1 | > 0 |
//! | `gap_threshold` | 0.02 | >= 0 |
//! | `jobs` | all cores | >= 1 |
//! | `output`, `svg`, `cache_dir` | none | |

use std::path::PathBuf;

use knudsen_core::diffusivity::{DEFAULT_GALERKIN_N, DEFAULT_GAP_THRESHOLD, DEFAULT_LSER_N};
use knudsen_core::geometry::{DEFAULT_K_BIG, DEFAULT_K_SMALL, DEFAULT_WALL_RADIUS};
use knudsen_core::operator::SamplingMode;
use knudsen_core::{Estimator, FamilySpec};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: String,
    pub parameter: Option<String>,
    pub values: Option<Vec<f64>>,
    pub range: Option<(f64, f64, usize)>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub d: Option<f64>,
    #[serde(rename = "K_big")]
    pub k_big: Option<f64>,
    #[serde(rename = "K_small")]
    pub k_small: Option<f64>,
    pub w: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_n_lser")]
    pub n_lser: usize,
    pub n_galerkin: Option<usize>,
    #[serde(default = "default_quadrature_order")]
    pub quadrature_order: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::Galerkin]
}

pub fn default_m() -> usize {
    1000
}

pub fn default_n() -> usize {
    10_000
}

fn default_n_lser() -> usize {
    DEFAULT_LSER_N
}

/// The default Galerkin order, capped at the bin count.
pub fn default_n_galerkin(m: usize) -> usize {
    DEFAULT_GALERKIN_N.min(m)
}

pub fn default_quadrature_order() -> usize {
    512
}

pub fn default_cutoff() -> f64 {
    50_000.0
}

pub fn default_radius() -> f64 {
    1.0
}

pub fn default_gap_threshold() -> f64 {
    DEFAULT_GAP_THRESHOLD
}

/// Parameter names accepted by each family, first one swept by default.
fn family_parameters(family: &str) -> Result<&'static [&'static str], CliError> {
    Ok(match family {
        "bumps" => &["K"],
        "mixture" => &["alpha"],
        "flat" => &[],
        "two-bumps" => &["d", "K_big", "K_small"],
        "bumps-with-wall" => &["w", "d", "R"],
        other => return Err(CliError::Config(format!("unknown family {other:?}"))),
    })
}

/// Family parameters given by name; absent ones fall back to family defaults
/// where those exist.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FamilyParams {
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub d: Option<f64>,
    pub k_big: Option<f64>,
    pub k_small: Option<f64>,
    pub w: Option<f64>,
    pub r: Option<f64>,
}

impl FamilyParams {
    fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "K" => &mut self.k,
            "alpha" => &mut self.alpha,
            "d" => &mut self.d,
            "K_big" => &mut self.k_big,
            "K_small" => &mut self.k_small,
            "w" => &mut self.w,
            "R" => &mut self.r,
            _ => return None,
        })
    }

    fn given(&self) -> Vec<&'static str> {
        let all = [
            ("K", self.k),
            ("alpha", self.alpha),
            ("d", self.d),
            ("K_big", self.k_big),
            ("K_small", self.k_small),
            ("w", self.w),
            ("R", self.r),
        ];
        all.iter().filter(|(_, v)| v.is_some()).map(|(n, _)| *n).collect()
    }

    /// Builds the family spec, rejecting missing required and foreign
    /// parameters.
    pub fn spec(&self, family: &str) -> Result<FamilySpec, CliError> {
        let allowed = family_parameters(family)?;
        if let Some(extra) = self.given().into_iter().find(|n| !allowed.contains(n)) {
            return Err(CliError::Config(format!("family {family} has no parameter {extra}")));
        }
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("family {family} needs parameter {name}")))
        };
        Ok(match family {
            "bumps" => FamilySpec::Bumps { k: need("K", self.k)? },
            "mixture" => FamilySpec::Mixture { alpha: need("alpha", self.alpha)? },
            "flat" => FamilySpec::Flat,
            "two-bumps" => FamilySpec::TwoBumps {
                d: need("d", self.d)?,
                k_big: self.k_big.unwrap_or(DEFAULT_K_BIG),
                k_small: self.k_small.unwrap_or(DEFAULT_K_SMALL),
            },
            "bumps-with-wall" => FamilySpec::BumpsWithWall {
                w: need("w", self.w)?,
                d: need("d", self.d)?,
                r: self.r.unwrap_or(DEFAULT_WALL_RADIUS),
            },
            _ => unreachable!("family checked above"),
        })
    }
}

/// Numerical settings shared by all grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub m: usize,
    pub n: usize,
    pub sampling: SamplingMode,
    pub n_lser: usize,
    pub n_galerkin: usize,
    pub quadrature_order: usize,
    pub cutoff: f64,
    pub radius: f64,
    pub gap_threshold: f64,
}

impl Numerics {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        if !(2..=20_000).contains(&self.m) {
            return bad("M must lie in 2..=20000");
        }
        if self.n == 0 {
            return bad("N must be at least 1");
        }
        if self.n_lser == 0 {
            return bad("n_lser must be at least 1");
        }
        if self.n_galerkin == 0 || self.n_galerkin > self.m {
            return bad("n_galerkin must lie in 1..=M");
        }
        if self.quadrature_order < 8 {
            return bad("quadrature_order must be at least 8");
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return bad("cutoff must be positive");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if !(self.gap_threshold >= 0.0) {
            return bad("gap_threshold must be nonnegative");
        }
        Ok(())
    }
}

/// One point of the parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub value: f64,
    pub spec: FamilySpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn numerics(&self) -> Numerics {
        Numerics {
            m: self.m,
            n: self.n,
            sampling: match self.seed {
                Some(seed) => SamplingMode::Stratified { seed },
                None => SamplingMode::Grid,
            },
            n_lser: self.n_lser,
            n_galerkin: self.n_galerkin.unwrap_or(default_n_galerkin(self.m)),
            quadrature_order: self.quadrature_order,
            cutoff: self.cutoff,
            radius: self.radius,
            gap_threshold: self.gap_threshold,
        }
    }

    fn fixed(&self) -> FamilyParams {
        FamilyParams {
            k: self.k,
            alpha: self.alpha,
            d: self.d,
            k_big: self.k_big,
            k_small: self.k_small,
            w: self.w,
            r: self.r,
        }
    }

    /// Name of the swept parameter.
    pub fn parameter(&self) -> Result<String, CliError> {
        let allowed = family_parameters(&self.family)?;
        match &self.parameter {
            Some(p) if allowed.contains(&p.as_str()) => Ok(p.clone()),
            Some(p) => Err(CliError::Config(format!("family {} has no parameter {p}", self.family))),
            None => allowed
                .first()
                .map(|p| p.to_string())
                .ok_or_else(|| CliError::Config(format!("family {} has no parameter to sweep", self.family))),
        }
    }

    /// Swept values in grid order.
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let values = match (&self.values, self.range) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either values or range, not both".into())),
            (None, None) => return Err(CliError::Config("no parameter grid: set values or range".into())),
            (Some(v), None) => v.clone(),
            (None, Some((start, stop, count))) => match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => {
                    let step = (stop - start) / (count - 1) as f64;
                    // Rounded to 12 significant digits so 0.1 + 2 * 0.1 stays 0.3
                    // in parameter tags and cache keys.
                    let round = |v: f64| format!("{v:.11e}").parse().unwrap_or(v);
                    (0..count).map(|i| if i + 1 == count { stop } else { round(start + step * i as f64) }).collect()
                }
            },
        };
        if values.is_empty() {
            return Err(CliError::Config("parameter grid is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("grid value {v} is not finite")));
        }
        Ok(values)
    }

    /// Validates everything that can be checked without building profiles.
    pub fn grid(&self) -> Result<Vec<GridPoint>, CliError> {
        self.numerics().validate()?;
        if self.estimators.is_empty() {
            return Err(CliError::Config("estimator list is empty".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        let parameter = self.parameter()?;
        let fixed = self.fixed();
        if fixed.given().contains(&parameter.as_str()) {
            return Err(CliError::Config(format!("{parameter} is swept and cannot also be fixed")));
        }
        self.values()?
            .into_iter()
            .enumerate()
            .map(|(index, value)| {
                let mut p = fixed;
                *p.slot(&parameter).expect("parameter name checked") = Some(value);
                Ok(GridPoint { index, value, spec: p.spec(&self.family)? })
            })
            .collect()
    }
}
