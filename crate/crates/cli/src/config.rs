//! Run configuration: a TOML file, overridden by command-line flags, fully
//! validated before any computation starts.

use std::path::{Path, PathBuf};

use entropic_tail::numeric::{lin_space, log_space};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `count` points from `min` to `max` inclusive.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl GridSpec {
    pub fn log(min: f64, max: f64, count: usize) -> Self {
        GridSpec { min, max, count, spacing: Spacing::Log }
    }

    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        GridSpec { min, max, count, spacing: Spacing::Linear }
    }

    pub fn validate(&self, key: &str) -> Result<(), CliError> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::config(key, "min and max must be finite"));
        }
        if self.count == 0 || (self.count == 1 && self.min != self.max) {
            return Err(CliError::config(key, "count must be positive (1 only when min = max)"));
        }
        if self.count > 1 && !(self.max > self.min) {
            return Err(CliError::config(key, "max must exceed min"));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            return Err(CliError::config(key, "log spacing needs min > 0"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        match self.spacing {
            Spacing::Linear => lin_space(self.min, self.max, self.count),
            Spacing::Log => log_space(self.min, self.max, self.count),
        }
    }

    /// `min:max:count[:linear|:log]`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let f: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&f.len()) {
            return Err(format!("expected min:max:count[:linear|log], got {s:?}"));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let spacing = match f.get(3).map(|x| x.trim()) {
            None | Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some(other) => return Err(format!("unknown spacing {other:?}")),
        };
        let count = f[2].trim().parse::<usize>().map_err(|e| format!("{:?}: {e}", f[2]))?;
        Ok(GridSpec { min: num(f[0])?, max: num(f[1])?, count, spacing })
    }
}

/// Field or space to work on.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Centered Gaussian field on `points` equispaced circle points with a
    /// squared-exponential kernel in chord distance.
    GaussianCircle {
        #[serde(default = "default_circle_points")]
        points: usize,
        #[serde(default = "default_length_scale")]
        length_scale: f64,
    },
    /// Centered Gaussian field with a covariance read from CSV (header row
    /// of labels).
    Gaussian { covariance: PathBuf },
    /// The disjoint-peaks field `g_n = c_n f((x - a_{n+1})/Δ_n)`, truncated
    /// at `truncation` peaks plus the limit point.
    Peaks {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_truncation")]
        truncation: usize,
    },
    /// The peaks field with independent random signs.
    SymmetrizedPeaks {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_truncation")]
        truncation: usize,
        #[serde(default)]
        sign_seed: u64,
    },
    /// Observed paths, one per CSV row, header row of labels.
    Samples { path: PathBuf },
    /// A bare semi-metric space from a CSV distance matrix.
    Distance { path: PathBuf },
    /// Two points at distance `distance`.
    TwoPoint {
        #[serde(default = "default_one")]
        distance: f64,
    },
}

fn default_circle_points() -> usize {
    32
}
fn default_length_scale() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    1.0
}
fn default_truncation() -> usize {
    entropic_tail::counterexample::DEFAULT_TRUNCATION
}
fn default_one() -> f64 {
    1.0
}

impl ModelSpec {
    /// Built-in model with default parameters.
    pub fn named(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "gaussian_circle" => ModelSpec::GaussianCircle { points: 32, length_scale: 0.5 },
            "peaks" => ModelSpec::Peaks { beta: 1.0, truncation: default_truncation() },
            "symmetrized_peaks" => ModelSpec::SymmetrizedPeaks { beta: 1.0, truncation: default_truncation(), sign_seed: 0 },
            "two_point" => ModelSpec::TwoPoint { distance: 1.0 },
            other => {
                return Err(CliError::config(
                    "model.kind",
                    format!("unknown built-in model {other:?} (gaussian_circle, peaks, symmetrized_peaks, two_point)"),
                ))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::GaussianCircle { .. } => "gaussian_circle",
            ModelSpec::Gaussian { .. } => "gaussian",
            ModelSpec::Peaks { .. } => "peaks",
            ModelSpec::SymmetrizedPeaks { .. } => "symmetrized_peaks",
            ModelSpec::Samples { .. } => "samples",
            ModelSpec::Distance { .. } => "distance",
            ModelSpec::TwoPoint { .. } => "two_point",
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        match self {
            ModelSpec::GaussianCircle { points, length_scale } => {
                if *points < 1 {
                    return Err(CliError::config("model.points", "must be at least 1"));
                }
                if !(*length_scale > 0.0 && length_scale.is_finite()) {
                    return Err(CliError::config("model.length_scale", "must be positive"));
                }
            }
            ModelSpec::Peaks { beta, truncation } | ModelSpec::SymmetrizedPeaks { beta, truncation, .. } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(CliError::config("model.beta", "must be positive"));
                }
                if *truncation < 1 {
                    return Err(CliError::config("model.truncation", "must be at least 1"));
                }
            }
            ModelSpec::TwoPoint { distance } => {
                if !(*distance >= 0.0 && distance.is_finite()) {
                    return Err(CliError::config("model.distance", "must be finite and nonnegative"));
                }
            }
            ModelSpec::Gaussian { covariance: p } | ModelSpec::Samples { path: p } | ModelSpec::Distance { path: p } => {
                if !p.is_file() {
                    return Err(CliError::config("model.path", format!("no such file: {}", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// Generating function `ψ`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    /// `sup_t |ξ(t)|_p` on the p grid.
    Natural,
    SqrtP,
    Const {
        #[serde(default = "default_one")]
        value: f64,
        b: f64,
    },
    BetaB { beta: f64, b: f64 },
    /// CSV with columns `p, psi`.
    Tabulated {
        path: PathBuf,
        #[serde(default = "default_infinite_b")]
        b: f64,
    },
}

fn default_infinite_b() -> f64 {
    f64::INFINITY
}

impl PsiSpec {
    fn validate(&self) -> Result<(), CliError> {
        match self {
            PsiSpec::Const { value, b } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(CliError::config("psi.value", "must be positive"));
                }
                if !(*b > 1.0) {
                    return Err(CliError::config("psi.b", "must exceed 1"));
                }
            }
            PsiSpec::BetaB { beta, b } => {
                if !(*beta > 0.0) {
                    return Err(CliError::config("psi.beta", "must be positive"));
                }
                if !(*b > 1.0 && b.is_finite()) {
                    return Err(CliError::config("psi.b", "must be finite and exceed 1"));
                }
            }
            PsiSpec::Tabulated { path, b } => {
                if !path.is_file() {
                    return Err(CliError::config("psi.path", format!("no such file: {}", path.display())));
                }
                if !(*b > 1.0) {
                    return Err(CliError::config("psi.b", "must exceed 1"));
                }
            }
            PsiSpec::Natural | PsiSpec::SqrtP => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub p: Option<GridSpec>,
    pub u: Option<GridSpec>,
    pub delta: Option<GridSpec>,
    pub x: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    /// `sup_t ||ξ(t)||Gψ`; computed from the field when absent, 1 for a
    /// bare distance matrix.
    pub anchor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Evaluate this partition instead of searching.
    pub partition_file: Option<PathBuf>,
}

fn default_budget() -> usize {
    200
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection { budget: default_budget(), seed: 0, partition_file: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    /// Entropy bound with the natural `ψ` and distance.
    Entropy,
    /// Partition bound `Y` (singletons unless a partition file is given).
    Partition,
    /// `K ln u / u⁴` with `K` fitted to the exact peaks tail.
    LogPower,
    /// The exact tail law of the truncated peaks field.
    Exact,
}

impl BoundSource {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "entropy" => Ok(BoundSource::Entropy),
            "partition" => Ok(BoundSource::Partition),
            "log_power" => Ok(BoundSource::LogPower),
            "exact" => Ok(BoundSource::Exact),
            _ => Err(format!("unknown bound source {s:?} (entropy, partition, log_power, exact)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_source")]
    pub bound_source: BoundSource,
    /// Multiplies the bound curve; values below 1 give negative controls.
    #[serde(default = "default_one")]
    pub bound_scale: f64,
}

fn default_paths() -> usize {
    100_000
}
fn default_alpha() -> f64 {
    entropic_tail::simulate::DEFAULT_ALPHA
}
fn default_source() -> BoundSource {
    BoundSource::Entropy
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            paths: default_paths(),
            seed: 0,
            alpha: default_alpha(),
            bound_source: default_source(),
            bound_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuitySection {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    1e-2
}

impl Default for ContinuitySection {
    fn default() -> Self {
        ContinuitySection { threshold: default_threshold() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_prefactor")]
    pub theta_prefactor: f64,
    pub model: Option<ModelSpec>,
    pub psi: Option<PsiSpec>,
    #[serde(default)]
    pub grids: Grids,
    pub bound: Option<BoundSection>,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub continuity: ContinuitySection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_prefactor() -> f64 {
    entropic_tail::bounds::THETA_PREFACTOR
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {}", path.display(), e.to_string().trim_end())))?;
        Ok((cfg, text))
    }

    /// Checks every present section.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.theta_prefactor > 0.0 && self.theta_prefactor.is_finite()) {
            return Err(CliError::config("theta_prefactor", "must be positive"));
        }
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if let Some(p) = &self.psi {
            p.validate()?;
        }
        for (key, g) in [
            ("grids.p", &self.grids.p),
            ("grids.u", &self.grids.u),
            ("grids.delta", &self.grids.delta),
            ("grids.x", &self.grids.x),
        ] {
            if let Some(g) = g {
                g.validate(key)?;
            }
        }
        if let Some(p) = &self.grids.p {
            if p.min < 1.0 {
                return Err(CliError::config("grids.p", "moment indices start at 1"));
            }
        }
        if let Some(u) = &self.grids.u {
            if u.min <= 0.0 {
                return Err(CliError::config("grids.u", "u must be positive"));
            }
        }
        if let Some(d) = &self.grids.delta {
            if d.min < 0.0 {
                return Err(CliError::config("grids.delta", "delta must be nonnegative"));
            }
        }
        if let Some(b) = &self.bound {
            if let Some(a) = b.anchor {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(CliError::config("bound.anchor", "must be finite and nonnegative"));
                }
            }
        }
        if self.search.budget == 0 {
            return Err(CliError::config("search.budget", "must be positive"));
        }
        if let Some(p) = &self.search.partition_file {
            if !p.is_file() {
                return Err(CliError::config("search.partition_file", format!("no such file: {}", p.display())));
            }
        }
        if self.mc.paths == 0 {
            return Err(CliError::config("mc.paths", "must be positive"));
        }
        if !(self.mc.alpha > 0.0 && self.mc.alpha < 1.0) {
            return Err(CliError::config("mc.alpha", "must lie in (0, 1)"));
        }
        if !(self.mc.bound_scale > 0.0 && self.mc.bound_scale.is_finite()) {
            return Err(CliError::config("mc.bound_scale", "must be positive"));
        }
        if !(self.continuity.threshold > 0.0) {
            return Err(CliError::config("continuity.threshold", "must be positive"));
        }
        Ok(())
    }
}
