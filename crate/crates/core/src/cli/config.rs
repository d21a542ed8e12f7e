//! TOML analysis configuration.
//!
//! ```toml
//! models = ["sphere"]
//! resolutions = [32, 64]
//! seed = 7
//! samples = 10
//! workers = 0
//!
//! [tolerances]
//! gap_ratio = 1e-3
//! confirm_ratio = 0.1
//! base_factor = 10.0
//! constraint_tol = 1e-6
//!
//! [output]
//! report = "report.json"
//! csv = "spectrum.csv"
//! fields_dir = "fields"
//! cache_dir = ".solitonkit-cache"
//! ```
//!
//! Every key is optional. Command-line flags override the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_spaces::{ModelName, Rational};
use crate::soliton_core::{GridModel, BASE_FACTOR, CONSTRAINT_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Fine-level gap ratio of kernel decisions, in `(0, 1)`.
    pub gap_ratio: f64,
    /// Coarse-level confirmation ratio, in `(0, 1)`.
    pub confirm_ratio: f64,
    /// Multiple of the refinement error estimate a base residual may reach.
    pub base_factor: f64,
    /// Relative tolerance of the normalization constraint.
    pub constraint_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { gap_ratio: 1e-3, confirm_ratio: 0.1, base_factor: BASE_FACTOR, constraint_tol: CONSTRAINT_TOL }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// Directory for binary field containers of computed bases.
    pub fields_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Grid or closed-form model selectors; the meaning depends on the command.
    pub models: Vec<String>,
    /// Strictly increasing.
    pub resolutions: Vec<usize>,
    pub seed: u64,
    /// Number of seeded random inputs per study.
    pub samples: usize,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub tolerances: Tolerances,
    pub output: OutputPaths,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            models: Vec::new(),
            resolutions: Vec::new(),
            seed: 7,
            samples: 10,
            workers: 0,
            tolerances: Tolerances::default(),
            output: OutputPaths::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("resolutions must be strictly increasing: {:?}", self.resolutions)));
        }
        let t = &self.tolerances;
        for (name, v) in [("gap_ratio", t.gap_ratio), ("confirm_ratio", t.confirm_ratio)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(t.base_factor > 0.0) || !(t.constraint_tol > 0.0) {
            return Err(Error::InvalidParameter("base_factor and constraint_tol must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be positive".into()));
        }
        Ok(())
    }

    /// Grid models of the `models` list, or `default` when it is empty.
    pub fn grid_models(&self, default: &str) -> Result<Vec<GridModel>> {
        if self.models.is_empty() {
            return Ok(vec![GridModel::parse(default)?]);
        }
        self.models.iter().map(|m| GridModel::parse(m)).collect()
    }

    /// `resolutions`, or `default` when empty.
    pub fn resolutions_or(&self, default: &[usize]) -> Vec<usize> {
        if self.resolutions.is_empty() {
            default.to_vec()
        } else {
            self.resolutions.clone()
        }
    }
}

fn integer(s: &str, what: &str) -> Result<u32> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("bad {what} '{s}'")))
}

/// Parses closed-form model selectors: `s2`, `s5`, `sphere:N[:R2]`,
/// `torus:N`, `cp1`, `cp3`, `cpn:3`, `hp2`, `hpn:2`, `cap2`.
pub fn parse_model_name(s: &str) -> Result<ModelName> {
    let lower = s.trim().to_ascii_lowercase();
    let parts: Vec<&str> = lower.split(':').collect();
    let tail = |prefix: &str| lower.strip_prefix(prefix).filter(|t| !t.is_empty() && t.chars().all(|c| c.is_ascii_digit()));
    let name = match parts.as_slice() {
        ["cp1"] | ["cp1-killing"] => ModelName::Cp1Killing,
        ["cap2"] => ModelName::Cap2Spectral,
        ["sphere", n] => ModelName::unit_sphere(integer(n, "dimension")?),
        ["sphere", n, r2] => {
            let r2: Rational = r2.parse().map_err(|_| Error::InvalidParameter(format!("bad squared radius '{r2}'")))?;
            ModelName::round_sphere(integer(n, "dimension")?, r2)
        }
        ["torus", n] => ModelName::standard_torus(integer(n, "dimension")?),
        ["cpn", n] => ModelName::CpnSymbolic { n: integer(n, "n")? },
        ["hpn", n] => ModelName::HpnSpectral { n: integer(n, "n")? },
        [_] => {
            if let Some(n) = tail("hp") {
                ModelName::HpnSpectral { n: integer(n, "n")? }
            } else if let Some(n) = tail("cp") {
                ModelName::CpnSymbolic { n: integer(n, "n")? }
            } else if let Some(n) = tail("s") {
                ModelName::unit_sphere(integer(n, "dimension")?)
            } else if let Some(n) = tail("t") {
                ModelName::standard_torus(integer(n, "dimension")?)
            } else {
                return Err(Error::InvalidParameter(format!("unknown model '{s}'")));
            }
        }
        _ => return Err(Error::InvalidParameter(format!("unknown model '{s}'"))),
    };
    Ok(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
            models = ["sphere"]
            resolutions = [32, 64]
            seed = 3
            [tolerances]
            gap_ratio = 1e-4
            [output]
            report = "out.json"
        "#;
        let cfg = AnalysisConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.tolerances.gap_ratio, 1e-4);
        assert_eq!(cfg.tolerances.confirm_ratio, 0.1);
        assert_eq!(cfg.output.report.as_deref(), Some(Path::new("out.json")));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(AnalysisConfig::from_toml("resolutions = [64, 32]").is_err());
        assert!(AnalysisConfig::from_toml("[tolerances]\ngap_ratio = 1.5").is_err());
        assert!(AnalysisConfig::from_toml("unknown = 1").is_err());
    }

    #[test]
    fn model_selectors() {
        assert_eq!(parse_model_name("hp2").unwrap(), ModelName::HpnSpectral { n: 2 });
        assert_eq!(parse_model_name("hpn:3").unwrap(), ModelName::HpnSpectral { n: 3 });
        assert_eq!(parse_model_name("CP3").unwrap(), ModelName::CpnSymbolic { n: 3 });
        assert_eq!(parse_model_name("s5").unwrap(), ModelName::unit_sphere(5));
        assert_eq!(parse_model_name("sphere:2:1/4").unwrap(), ModelName::round_sphere(2, Rational::new(1, 4)));
        assert_eq!(parse_model_name("cap2").unwrap(), ModelName::Cap2Spectral);
        assert!(parse_model_name("klein").is_err());
    }
}
