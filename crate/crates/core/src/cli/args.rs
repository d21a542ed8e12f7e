//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::AnalysisConfig;
use super::run::Command;
use crate::error::{Error, Result};
use crate::model_spaces::Rational;

#[derive(Debug, Parser)]
#[command(name = "solitonkit", version, about = "Deformations and rigidity of normalized shrinking Ricci solitons")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated, strictly increasing.
    #[arg(long, global = true, value_delimiter = ',')]
    pub resolutions: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Write kernel bases as binary field containers into this directory.
    #[arg(long, global = true)]
    pub fields_dir: Option<PathBuf>,
    /// Operator cache; SOLITONKIT_CACHE_DIR takes precedence.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub gap_ratio: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// List the closed-form and grid models.
    ModelList,
    /// Exact Laplace spectrum of a closed-form model.
    Spectrum {
        /// s2, sphere:N[:R2], torus:N, cp1, hpn, cap2, ...
        model: String,
        /// Dimension parameter for hpn, cpn, sphere and torus.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = 20)]
        kmax: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Soliton residuals and base certificate of a grid model.
    Residual {
        #[arg(long, default_value = "sphere")]
        model: String,
    },
    /// Linearization against finite differences.
    LinearizeCheck {
        #[arg(long, default_value = "sphere")]
        model: String,
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-4")]
        eps: Vec<f64>,
    },
    /// Twisted Bianchi identity under refinement.
    BianchiCheck {
        /// Defaults to a conformal torus seeded with --seed.
        #[arg(long)]
        model: Option<String>,
        /// Skip the coefficient calibration study.
        #[arg(long)]
        no_comp: bool,
    },
    /// Infinitesimal solitonic deformations.
    #[command(name = "kernel-Z", alias = "kernel-z")]
    KernelZ(KernelArgs),
    /// Infinitesimal Einstein deformations.
    #[command(name = "kernel-E", alias = "kernel-e")]
    KernelE(KernelArgs),
    /// Slice projection of seeded random tensors.
    SliceProject(KernelArgs),
    /// The deformation family on the Killing-normalized sphere.
    CpFamily,
    /// Rigidity criteria.
    Rigidity {
        /// Closed-form model for the full verdict.
        model: Option<String>,
        /// Grid model for a numerical diameter test.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
        /// `n,K_min,K_max` with rational bounds.
        #[arg(long)]
        pinching: Option<String>,
    },
    /// Multiplicity count and dim Z for CP^n.
    Repcount {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Concatenate JSON reports.
    ReportMerge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, default_value = "sphere")]
    pub model: String,
    #[arg(long)]
    pub resolution: Option<usize>,
}

fn rational(s: &str) -> Result<Rational> {
    s.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad rational '{s}'")))
}

fn pinching(s: &str) -> Result<(u32, Rational, Rational)> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [n, lo, hi] => Ok((
            n.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad dimension '{n}'")))?,
            rational(lo)?,
            rational(hi)?,
        )),
        _ => Err(Error::InvalidParameter(format!("--pinching expects n,K_min,K_max, got '{s}'"))),
    }
}

impl Cli {
    /// The configuration file (or defaults) with flags applied.
    pub fn config(&self) -> Result<AnalysisConfig> {
        let g = &self.global;
        let mut cfg = match &g.config {
            Some(path) => AnalysisConfig::load(path)?,
            None => AnalysisConfig::default(),
        };
        if let Some(r) = &g.resolutions {
            cfg.resolutions = r.clone();
        }
        cfg.seed = g.seed.unwrap_or(cfg.seed);
        cfg.samples = g.samples.unwrap_or(cfg.samples);
        cfg.workers = g.workers.unwrap_or(cfg.workers);
        cfg.tolerances.gap_ratio = g.gap_ratio.unwrap_or(cfg.tolerances.gap_ratio);
        for (slot, flag) in [
            (&mut cfg.output.report, &g.report),
            (&mut cfg.output.fields_dir, &g.fields_dir),
            (&mut cfg.output.cache_dir, &g.cache_dir),
        ] {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn command(&self) -> Result<Command> {
        Ok(match &self.command {
            Sub::ModelList => Command::ModelList,
            Sub::Spectrum { model, n, kmax, csv } => {
                let model = match n {
                    Some(n) => format!("{}:{n}", model.trim_end_matches(|c: char| c.is_ascii_digit())),
                    None => model.clone(),
                };
                Command::Spectrum { model, k_max: *kmax, csv: csv.clone() }
            }
            Sub::Residual { model } => Command::Residual { model: model.clone() },
            Sub::LinearizeCheck { model, eps } => Command::LinearizeCheck { model: model.clone(), eps: eps.clone() },
            Sub::BianchiCheck { model, no_comp } => Command::BianchiCheck { model: model.clone(), comp: !no_comp },
            Sub::KernelZ(k) => Command::KernelZ { model: k.model.clone(), resolution: k.resolution },
            Sub::KernelE(k) => Command::KernelE { model: k.model.clone(), resolution: k.resolution },
            Sub::SliceProject(k) => Command::SliceProject { model: k.model.clone(), resolution: k.resolution },
            Sub::CpFamily => Command::CpFamily,
            Sub::Rigidity { model, grid, resolution, pinching: p } => Command::Rigidity {
                model: model.clone(),
                grid: grid.clone(),
                resolution: *resolution,
                pinching: p.as_deref().map(pinching).transpose()?,
            },
            Sub::Repcount { n } => Command::Repcount { n: n.clone() },
            Sub::ReportMerge { inputs } => Command::ReportMerge { inputs: inputs.clone() },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("solitonkit").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn spectrum_dimension_flag() {
        let cli = parse(&["spectrum", "hpn", "--n", "2", "--kmax", "10"]);
        assert_eq!(cli.command().unwrap(), Command::Spectrum { model: "hpn:2".into(), k_max: 10, csv: None });
    }

    #[test]
    fn kernel_names_and_globals() {
        let cli = parse(&["kernel-e", "--resolution", "32", "--seed", "3", "--resolutions", "16,32"]);
        assert!(matches!(cli.command().unwrap(), Command::KernelE { resolution: Some(32), .. }));
        let cfg = cli.config().unwrap();
        assert_eq!((cfg.seed, cfg.resolutions), (3, vec![16, 32]));
        assert!(parse(&["--resolutions", "64,32", "model-list"]).config().is_err());
    }

    #[test]
    fn pinching_triple() {
        let cli = parse(&["rigidity", "--pinching", "4,1/4,1"]);
        match cli.command().unwrap() {
            Command::Rigidity { pinching: Some((4, lo, hi)), .. } => assert_eq!((lo, hi), (Rational::new(1, 4), Rational::from_integer(1))),
            other => panic!("{other:?}"),
        }
        assert!(parse(&["rigidity", "--pinching", "4,1/4"]).command().is_err());
    }
}
