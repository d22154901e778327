//! Experiment description shared by the config file and the command line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fme_core::models::MaternCsma;
use fme_core::{DppKernel, FadingModel, LinkConfig, PathLoss, PointProcess};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Series,
    Simulate,
    Compare,
    Sweep,
    Tables,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Series => "series",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
            Command::Tables => "tables",
        };
        f.write_str(s)
    }
}

/// Transmitter process as written in configs: `ppp`, `matern:P`, `ginibre`,
/// `ginibre-scaled:σ²`, `modified-ginibre:τ` or `sine`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Poisson,
    Matern { threshold: f64 },
    Ginibre,
    Dpp(DppKernel),
}

impl ModelSpec {
    /// Whether the process intensity is taken from the λ grid.
    pub fn uses_lambda(&self) -> bool {
        matches!(self, ModelSpec::Poisson | ModelSpec::Ginibre)
    }
}

fn parse_param(kind: &str, rest: Option<&str>) -> Result<f64> {
    let raw = rest.ok_or_else(|| CliError::config(format!("`{kind}` needs a parameter, e.g. `{kind}:1`")))?;
    raw.parse::<f64>()
        .map_err(|_| CliError::config(format!("bad parameter `{raw}` for `{kind}`")))
}

impl FromStr for ModelSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let no_param = |m: ModelSpec| match rest {
            None => Ok(m),
            Some(_) => Err(CliError::config(format!("model `{kind}` takes no parameter"))),
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "ppp" | "poisson" => no_param(ModelSpec::Poisson),
            "ginibre" => no_param(ModelSpec::Ginibre),
            "sine" => no_param(ModelSpec::Dpp(DppKernel::Sine2D)),
            "matern" => Ok(ModelSpec::Matern {
                threshold: parse_param(kind, rest)?,
            }),
            "ginibre-scaled" => Ok(ModelSpec::Dpp(DppKernel::GinibreScaled {
                sigma2: parse_param(kind, rest)?,
            })),
            "modified-ginibre" => Ok(ModelSpec::Dpp(DppKernel::ModifiedGinibre {
                tau: parse_param(kind, rest)?,
            })),
            _ => Err(CliError::config(format!(
                "unknown model `{s}`; expected ppp, matern:P, ginibre, ginibre-scaled:s2, modified-ginibre:tau or sine"
            ))),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Poisson => write!(f, "ppp"),
            ModelSpec::Matern { threshold } => write!(f, "matern:{threshold}"),
            ModelSpec::Ginibre => write!(f, "ginibre"),
            ModelSpec::Dpp(k) => write!(f, "{k}"),
        }
    }
}

/// `rayleigh`, `nakagami:m`, `lognormal:mu:sigma2` or `unit`.
pub fn parse_fading(s: &str) -> Result<FadingModel> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| CliError::config(format!("fading `{s}` is missing a parameter")))?
            .parse::<f64>()
            .map_err(|_| CliError::config(format!("bad number in fading `{s}`")))
    };
    let f = match (parts[0].to_ascii_lowercase().as_str(), parts.len()) {
        ("rayleigh", 1) => FadingModel::Rayleigh,
        ("unit", 1) | ("none", 1) => FadingModel::UnitPoint,
        ("nakagami", 2) => FadingModel::nakagami(num(1)?)?,
        ("lognormal", 3) => FadingModel::lognormal(num(1)?, num(2)?)?,
        _ => {
            return Err(CliError::config(format!(
                "unknown fading `{s}`; expected rayleigh, nakagami:m, lognormal:mu:sigma2 or unit"
            )))
        }
    };
    Ok(f)
}

/// `a:b:n` for `n` evenly spaced values, or a comma-separated list.
pub fn parse_lambda_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || CliError::config(format!("bad lambda grid `{s}`; use `start:stop:count` or `a,b,c`"));
    if s.contains(':') {
        let p: Vec<&str> = s.split(':').collect();
        if p.len() != 3 {
            return Err(bad());
        }
        let a: f64 = p[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = p[1].trim().parse().map_err(|_| bad())?;
        let n: usize = p[2].trim().parse().map_err(|_| bad())?;
        return match n {
            0 => Err(bad()),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
        };
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PathLossKind {
    #[default]
    Singular,
    Bounded,
}

/// Everything needed to run one experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Command,
    pub model: String,
    /// Interferer fading.
    pub fading: String,
    /// Desired-link fading; the interferer fading when absent.
    pub desired_fading: Option<String>,
    pub pathloss: PathLossKind,
    pub alpha: f64,
    pub nu: Option<f64>,
    pub theta: Option<f64>,
    pub link_distance: f64,
    pub noise: f64,
    pub lambda: Vec<f64>,
    /// Highest expansion order.
    pub order: usize,
    pub trials: usize,
    pub seed: u64,
    /// Initial Monte Carlo samples per expansion term.
    pub samples: usize,
    pub rmax: Option<f64>,
    pub target_rel_se: Option<f64>,
    /// Simulation window radius; chosen per model when absent.
    pub window: Option<f64>,
    pub table1_alpha: f64,
    pub table2_alpha: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            command: Command::Series,
            model: "ppp".into(),
            fading: "rayleigh".into(),
            desired_fading: None,
            pathloss: PathLossKind::Singular,
            alpha: 4.0,
            nu: None,
            theta: None,
            link_distance: 1.0,
            noise: 0.0,
            lambda: vec![0.05],
            order: 3,
            trials: 10_000,
            seed: 0,
            samples: 100_000,
            rmax: None,
            target_rel_se: None,
            window: None,
            table1_alpha: 5.0,
            table2_alpha: 7.0,
            out: None,
        }
    }
}

/// Validated, typed form of an [`ExperimentSpec`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: ModelSpec,
    pub interferer: FadingModel,
    pub desired: FadingModel,
    pub pathloss: PathLoss,
    pub link: LinkConfig,
    pub nu: f64,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::config(format!("cannot serialize config: {e}")))
    }

    /// Checks every field and builds the typed parameters. Runs before any
    /// computation.
    pub fn resolve(&self) -> Result<Resolved> {
        let model: ModelSpec = self.model.parse()?;
        let interferer = parse_fading(&self.fading)?;
        let desired = match &self.desired_fading {
            Some(s) => parse_fading(s)?,
            None => interferer,
        };
        let pathloss = match self.pathloss {
            PathLossKind::Singular => PathLoss::singular(self.alpha)?,
            PathLossKind::Bounded => PathLoss::bounded(self.alpha)?,
        };
        let link = match (self.nu, self.theta) {
            (Some(_), Some(_)) => return Err(CliError::config("give either nu or theta, not both")),
            (None, Some(theta)) => LinkConfig::new(theta, self.link_distance, self.noise)?,
            (nu, None) => LinkConfig::from_nu(nu.unwrap_or(1.0), self.link_distance, self.noise, &pathloss)?,
        };
        let nu = link.nu(&pathloss)?;
        if self.lambda.is_empty() && model.uses_lambda() {
            return Err(CliError::config("the lambda grid is empty"));
        }
        if let Some(l) = self.lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(CliError::config(format!("lambda must be finite and non-negative, got {l}")));
        }
        if self.trials == 0 {
            return Err(CliError::config("trials must be positive"));
        }
        if self.samples < 1000 {
            return Err(CliError::config(format!("samples must be at least 1000, got {}", self.samples)));
        }
        if let Some(r) = self.rmax {
            if !(r.is_finite() && r > self.link_distance) {
                return Err(CliError::config(format!("rmax must exceed the link distance, got {r}")));
            }
        }
        if let Some(t) = self.target_rel_se {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::config(format!("target_rel_se must lie in (0, 1), got {t}")));
            }
        }
        if let Some(w) = self.window {
            if !(w.is_finite() && w > self.link_distance) {
                return Err(CliError::config(format!("window must exceed the link distance, got {w}")));
            }
        }
        if self.command == Command::Tables {
            for a in [self.table1_alpha, self.table2_alpha] {
                if !(a.is_finite() && a > 2.0) {
                    return Err(CliError::config(format!("table path-loss exponents must exceed 2, got {a}")));
                }
            }
        }
        match model {
            ModelSpec::Matern { threshold } => {
                MaternCsma::new(threshold, interferer, pathloss)?;
            }
            ModelSpec::Dpp(k) => k.validate()?,
            _ => {}
        }
        Ok(Resolved {
            model,
            interferer,
            desired,
            pathloss,
            link,
            nu,
        })
    }

    /// Grid of λ values the experiment runs over. Models with a built-in
    /// intensity run once.
    pub fn lambda_points(&self, r: &Resolved) -> Vec<f64> {
        if r.model.uses_lambda() {
            self.lambda.clone()
        } else {
            vec![f64::NAN]
        }
    }
}

impl Resolved {
    /// Point process at intensity `lambda` (ignored for models that fix it).
    pub fn point_process(&self, lambda: f64) -> Result<PointProcess> {
        let p = match self.model {
            ModelSpec::Poisson => PointProcess::poisson(lambda)?,
            ModelSpec::Ginibre => PointProcess::determinantal(DppKernel::ginibre_with_density(lambda)?)?,
            ModelSpec::Dpp(k) => PointProcess::determinantal(k)?,
            ModelSpec::Matern { threshold } => {
                PointProcess::MaternCsma(MaternCsma::new(threshold, self.interferer, self.pathloss)?)
            }
        };
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_strings_round_trip() {
        for s in ["ppp", "matern:1", "ginibre", "ginibre-scaled:0.5", "modified-ginibre:0.3", "sine"] {
            let m: ModelSpec = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("matern".parse::<ModelSpec>().is_err());
        assert!("ppp:2".parse::<ModelSpec>().is_err());
        assert!("hawkes".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn fading_strings() {
        assert_eq!(parse_fading("rayleigh").unwrap(), FadingModel::Rayleigh);
        assert_eq!(parse_fading("nakagami:2").unwrap(), FadingModel::Nakagami { m: 2.0 });
        assert!(parse_fading("nakagami:0.1").is_err());
        assert!(parse_fading("nakagami").is_err());
        assert!(parse_fading("rician:3").is_err());
    }

    #[test]
    fn lambda_grids() {
        assert_eq!(parse_lambda_grid("0:0.2:3").unwrap(), vec![0.0, 0.1, 0.2]);
        assert_eq!(parse_lambda_grid("0.05, 0.1").unwrap(), vec![0.05, 0.1]);
        assert_eq!(parse_lambda_grid("0.3:1:1").unwrap(), vec![0.3]);
        assert!(parse_lambda_grid("0:1:0").is_err());
        assert!(parse_lambda_grid("a,b").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut s = ExperimentSpec::default();
        s.model = "matern:1".into();
        s.theta = Some(0.5);
        s.lambda = vec![0.01, 0.02];
        s.out = Some(PathBuf::from("out.csv"));
        let text = s.to_toml().unwrap();
        assert_eq!(ExperimentSpec::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentSpec::from_toml("model = \"ppp\"\nlamda = [0.1]\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn nu_and_theta_conflict() {
        let s = ExperimentSpec {
            nu: Some(1.0),
            theta: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(s.resolve(), Err(CliError::Config(_))));
    }

    #[test]
    fn theta_sets_nu() {
        let s = ExperimentSpec {
            theta: Some(2.0),
            link_distance: 2.0,
            ..Default::default()
        };
        let r = s.resolve().unwrap();
        assert!((r.nu - 2.0 * 16.0).abs() < 1e-12);
    }
}
