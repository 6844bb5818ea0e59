use std::path::{Path, PathBuf};

use cdp_core::{
    Alphabet, CdpError, Channel, DecisionRegion, DistortionMatrix, DivergenceKind, MixtureSource, ProbVector,
    ProblemInstanceF64,
};
use serde::Deserialize;

use crate::CliError;

/// A number or the string `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistortionSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceSpec {
    pub kind: String,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub priors: Vec<f64>,
    pub class1: Vec<f64>,
    pub class2: Vec<f64>,
    pub degradation: Vec<Vec<f64>>,
    pub distortion: DistortionSpec,
    pub divergence: DivergenceSpec,
    /// Restored symbols assigned to class 1.
    pub classifier: Vec<usize>,
    /// Restored alphabet size for named distortions, defaults to the source size.
    #[serde(default)]
    pub restore_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cdp,
    Scdp,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub instance: InstanceSpec,
    pub d_grid: Vec<Level>,
    pub p_grid: Vec<Level>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub oracle_check: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_mode() -> Mode {
    Mode::Both
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub instance: ProblemInstanceF64,
    pub d_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub mode: Mode,
    pub oracle_check: Option<f64>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

fn field_err(field: impl Into<String>, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", field.into()))
}

fn prob(field: &str, v: &[f64]) -> Result<ProbVector<f64>, CliError> {
    ProbVector::new(v.to_vec()).map_err(|e| field_err(field, e))
}

fn level(field: &str, i: usize, l: &Level) -> Result<f64, CliError> {
    let v = match l {
        Level::Number(v) => *v,
        Level::Text(s) if s.eq_ignore_ascii_case("inf") => f64::INFINITY,
        Level::Text(s) => return Err(field_err(format!("{field}[{i}]"), format!("expected a number or \"inf\", got {s:?}"))),
    };
    if v.is_nan() || v < 0.0 {
        return Err(field_err(format!("{field}[{i}]"), format!("must be nonnegative, got {v}")));
    }
    Ok(v)
}

fn grid(field: &str, raw: &[Level]) -> Result<Vec<f64>, CliError> {
    if raw.is_empty() {
        return Err(field_err(field, "grid is empty"));
    }
    let values = raw.iter().enumerate().map(|(i, l)| level(field, i, l)).collect::<Result<Vec<_>, _>>()?;
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(field_err(field, "grid must be sorted ascending"));
    }
    Ok(values)
}

fn divergence(spec: &DivergenceSpec) -> Result<DivergenceKind, CliError> {
    let f = "instance.divergence";
    let kind = match spec.kind.to_ascii_lowercase().as_str() {
        "tv" | "total_variation" => DivergenceKind::TotalVariation,
        "kl" | "kullback_leibler" => DivergenceKind::KullbackLeibler,
        "hellinger" => DivergenceKind::Hellinger,
        "renyi" => {
            let alpha = spec.alpha.ok_or_else(|| field_err(format!("{f}.alpha"), "required for renyi"))?;
            return DivergenceKind::renyi(alpha).map_err(|e| field_err(format!("{f}.alpha"), e));
        }
        other => return Err(field_err(format!("{f}.kind"), format!("unknown divergence {other:?}"))),
    };
    if spec.alpha.is_some() {
        return Err(field_err(format!("{f}.alpha"), "only meaningful for renyi"));
    }
    Ok(kind)
}

fn build_instance(spec: &InstanceSpec) -> Result<ProblemInstanceF64, CliError> {
    let [p1, p2] = spec.priors[..] else {
        return Err(field_err("instance.priors", format!("expected 2 priors, got {}", spec.priors.len())));
    };
    let class1 = prob("instance.class1", &spec.class1)?;
    let class2 = prob("instance.class2", &spec.class2)?;
    let n = class1.len();
    if class2.len() != n {
        return Err(field_err("instance.class2", format!("expected {n} entries, got {}", class2.len())));
    }
    let source = MixtureSource::new(p1, p2, class1, class2).map_err(|e| field_err("instance.priors", e))?;
    if spec.degradation.len() != n {
        return Err(field_err("instance.degradation", format!("expected {n} rows, got {}", spec.degradation.len())));
    }
    let width = spec.degradation[0].len();
    let rows = spec
        .degradation
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let f = format!("instance.degradation[{i}]");
            if r.len() != width {
                return Err(field_err(f, format!("expected {width} entries, got {}", r.len())));
            }
            prob(&f, r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let degrade = Channel::from_prob_rows(rows).map_err(|e| field_err("instance.degradation", e))?;

    let source_alphabet = source.alphabet();
    let restore = match spec.restore_size {
        Some(0) => return Err(field_err("instance.restore_size", "must be positive")),
        Some(k) => Alphabet::new(k).map_err(|e| field_err("instance.restore_size", e))?,
        None => source_alphabet,
    };
    let delta = match &spec.distortion {
        DistortionSpec::Named(name) => match name.to_ascii_lowercase().as_str() {
            "hamming" if restore == source_alphabet => DistortionMatrix::hamming(source_alphabet),
            "hamming" => return Err(field_err("instance.distortion", "hamming needs restore_size equal to the source size")),
            "squared" => DistortionMatrix::squared_index(source_alphabet, restore),
            other => return Err(field_err("instance.distortion", format!("unknown distortion {other:?}"))),
        },
        DistortionSpec::Matrix(m) => {
            if spec.restore_size.is_some() {
                return Err(field_err("instance.restore_size", "implied by an explicit distortion matrix"));
            }
            if m.len() != n {
                return Err(field_err("instance.distortion", format!("expected {n} rows, got {}", m.len())));
            }
            DistortionMatrix::new(m.clone()).map_err(|e| field_err("instance.distortion", e))?
        }
    };
    let classifier = DecisionRegion::from_symbols(delta.restored(), &spec.classifier)
        .map_err(|e| field_err("instance.classifier", e))?;
    ProblemInstanceF64::new(source, degrade, delta, divergence(&spec.divergence)?, classifier)
        .map_err(|e| field_err("instance", e))
}

impl RawConfig {
    pub fn validate(self) -> Result<RunConfig, CliError> {
        let instance = build_instance(&self.instance)?;
        let d_grid = grid("d_grid", &self.d_grid)?;
        let p_grid = grid("p_grid", &self.p_grid)?;
        if !instance.perception_defined() && p_grid.iter().any(|p| p.is_finite()) {
            return Err(field_err("p_grid", "finite perception bounds need the restored alphabet to equal the source alphabet"));
        }
        if let Some(step) = self.oracle_check {
            check_step("oracle_check", step)?;
        }
        Ok(RunConfig {
            instance,
            d_grid,
            p_grid,
            mode: self.mode,
            oracle_check: self.oracle_check,
            seed: self.seed,
            output_path: self.output_path.map(PathBuf::from),
        })
    }
}

pub fn check_step(field: &str, step: f64) -> Result<(), CliError> {
    let n = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || (n * step - 1.0).abs() > 1e-12 {
        return Err(field_err(field, format!("lattice step {step} must divide 1")));
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw: RawConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    raw.validate()
}

impl From<CdpError> for CliError {
    fn from(e: CdpError) -> Self {
        match e {
            CdpError::Size(m) => CliError::Size(m),
            other => CliError::Config(other.to_string()),
        }
    }
}
