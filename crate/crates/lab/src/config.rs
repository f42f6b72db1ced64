//! Versioned JSON sweep configuration.

use std::path::{Path, PathBuf};

use gimlab_core::bayescrb::DetectionFamily;
use gimlab_core::superres::GridSpec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

/// `points` values from `min` to `max`, geometric unless `scale` is linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Range {
    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points, scale: Scale::Log }
    }

    pub fn linear(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points, scale: Scale::Linear }
    }

    pub fn validate(&self, field: &str) -> LabResult<()> {
        if self.points == 0 {
            return Err(invalid(field, "range is empty"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(invalid(field, format!("need finite min ≤ max, got [{}, {}]", self.min, self.max)));
        }
        if self.points == 1 && self.min != self.max {
            return Err(invalid(field, "a single point needs min = max"));
        }
        match self.scale {
            Scale::Log if self.min <= 0.0 => Err(invalid(field, "logarithmic range must be positive")),
            Scale::Linear if self.min < 0.0 => Err(invalid(field, "range must be nonnegative")),
            _ => Ok(()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / n;
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.points {
                    return self.max;
                }
                match self.scale {
                    Scale::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                    Scale::Linear => self.min + t * (self.max - self.min),
                }
            })
            .map(|v| v.clamp(self.min, self.max))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed excess of a numeric FIM entry over its bound.
    pub bound: f64,
    /// Relative agreement required between numeric and printed closed forms.
    pub closed_form: f64,
    /// Leading-order two-point bound is multiplied by `1 + allowance · L/σ`.
    pub two_point_allowance: f64,
    /// Relative agreement required between Monte Carlo MSE and the CRB.
    pub mc_relative: f64,
    /// Largest tolerated fraction of non-converged ML fits.
    pub ml_failure_rate: f64,
    /// Allowed deviation of a fitted log-log slope from its expected value.
    pub slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { bound: 1e-8, closed_form: 1e-8, two_point_allowance: 2.0, mc_relative: 0.1, ml_failure_rate: 0.01, slope: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoLensFamily {
    Heterodyne,
    HomodyneXx,
    HomodynePp,
    HomodyneXp,
    HomodynePx,
    PhotonCounting,
}

impl TwoLensFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Heterodyne => "heterodyne",
            Self::HomodyneXx => "homodyne_xx",
            Self::HomodynePp => "homodyne_pp",
            Self::HomodyneXp => "homodyne_xp",
            Self::HomodynePx => "homodyne_px",
            Self::PhotonCounting => "photon_counting",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormCheck {
    pub eps: Range,
    pub g_abs: Range,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDominance {
    pub count: usize,
    pub max_copies: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiLens {
    pub lenses: usize,
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometricConfig {
    pub eps: Range,
    pub g_abs: Vec<f64>,
    pub theta: Vec<f64>,
    /// Phase delay applied before photon counting.
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "one")]
    pub n_copies: usize,
    pub families: Vec<TwoLensFamily>,
    #[serde(default)]
    pub closed_form_check: Option<ClosedFormCheck>,
    #[serde(default)]
    pub random: Option<RandomDominance>,
    #[serde(default)]
    pub multi_lens: Option<MultiLens>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleLensConfig {
    pub sizes: Range,
    pub eps: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub n_copies: usize,
    #[serde(default)]
    pub random_per_size: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn three() -> usize {
    3
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperresConfig {
    pub sizes: Range,
    pub eps: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub n_copies: usize,
    /// Highest SPADE basis index.
    #[serde(default = "three")]
    pub spade_order: usize,
    /// Moments `t_1..t_{n_max}` estimated jointly by direct imaging and SPADE.
    #[serde(default = "two")]
    pub n_max: usize,
    /// Moment bounds are checked for `t_1..t_{bound_orders}`.
    #[serde(default = "three")]
    pub bound_orders: usize,
    #[serde(default)]
    pub random_per_size: usize,
    #[serde(default = "three")]
    pub max_copies: usize,
    #[serde(default = "one")]
    pub extra_vacuum: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn widths() -> f64 {
    12.0
}

fn eigen_grid() -> usize {
    2001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    pub n_copies: Vec<usize>,
    pub sigma: f64,
    pub families: Vec<DetectionFamily>,
    /// Domain length in units of the prior width `ω` (or `σ` for SPADE).
    #[serde(default = "widths")]
    pub l_max_widths: f64,
    #[serde(default = "eigen_grid")]
    pub n_grid: usize,
    #[serde(default)]
    pub export_priors: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum McFamily {
    PhotonCounting { eps: f64, g_abs: f64, theta: f64, delta: f64 },
    Heterodyne { eps: f64, g_abs: f64, theta: f64 },
    Bernoulli { p: f64 },
}

fn bootstrap() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub model: McFamily,
    pub n_samples: usize,
    pub n_trials: usize,
    #[serde(default = "bootstrap")]
    pub bootstrap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Interferometric(InterferometricConfig),
    SingleLens(SingleLensConfig),
    Superres(SuperresConfig),
    Bayes(BayesConfig),
    Mc(McConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Interferometric(_) => "interferometric",
            Self::SingleLens(_) => "single-lens",
            Self::Superres(_) => "superres",
            Self::Bayes(_) => "bayes",
            Self::Mc(_) => "mc",
        }
    }

    pub fn randomized(&self) -> bool {
        match self {
            Self::Interferometric(c) => c.random.is_some() || c.multi_lens.is_some(),
            Self::SingleLens(c) => c.random_per_size > 0,
            Self::Superres(c) => c.random_per_size > 0,
            Self::Bayes(_) => false,
            Self::Mc(_) => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    pub experiment: Experiment,
}

fn check_eps(field: &str, eps: f64) -> LabResult<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in (0, 1], got {eps}")))
    }
}

fn check_positive(field: &str, v: f64) -> LabResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn check_count(field: &str, v: usize) -> LabResult<()> {
    if v == 0 {
        Err(invalid(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_g(field: &str, g: &[f64]) -> LabResult<()> {
    if g.is_empty() {
        return Err(invalid(field, "list is empty"));
    }
    match g.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        Some(v) => Err(invalid(field, format!("|g| must lie in [0, 1], got {v}"))),
        None => Ok(()),
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| LabError::Json { path: PathBuf::from("<config>"), source: e })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io { path: path.into(), source: e })?;
        serde_json::from_str(&text).map_err(|e| LabError::Json { path: path.into(), source: e })
    }

    pub fn validate(&self) -> LabResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        if self.experiment.randomized() && self.seed.is_none() {
            return Err(invalid("seed", "required for randomized experiments"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.bound", t.bound),
            ("tolerances.closed_form", t.closed_form),
            ("tolerances.two_point_allowance", t.two_point_allowance),
            ("tolerances.mc_relative", t.mc_relative),
            ("tolerances.ml_failure_rate", t.ml_failure_rate),
            ("tolerances.slope", t.slope),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be nonnegative, got {v}")));
            }
        }
        match &self.experiment {
            Experiment::Interferometric(c) => {
                c.eps.validate("experiment.eps")?;
                check_eps("experiment.eps", c.eps.max)?;
                check_g("experiment.g_abs", &c.g_abs)?;
                if c.theta.is_empty() {
                    return Err(invalid("experiment.theta", "list is empty"));
                }
                check_count("experiment.n_copies", c.n_copies)?;
                if c.families.is_empty() {
                    return Err(invalid("experiment.families", "list is empty"));
                }
                if let Some(cf) = &c.closed_form_check {
                    cf.eps.validate("experiment.closed_form_check.eps")?;
                    check_eps("experiment.closed_form_check.eps", cf.eps.max)?;
                    cf.g_abs.validate("experiment.closed_form_check.g_abs")?;
                    if cf.g_abs.max >= 1.0 {
                        return Err(invalid("experiment.closed_form_check.g_abs", "must stay below 1"));
                    }
                }
                if let Some(r) = &c.random {
                    check_count("experiment.random.count", r.count)?;
                    check_count("experiment.random.max_copies", r.max_copies)?;
                }
                if let Some(m) = &c.multi_lens {
                    if m.lenses < 2 {
                        return Err(invalid("experiment.multi_lens.lenses", "need at least 2 lenses"));
                    }
                    check_count("experiment.multi_lens.count", m.count)?;
                }
            }
            Experiment::SingleLens(c) => {
                c.sizes.validate("experiment.sizes")?;
                check_eps("experiment.eps", c.eps)?;
                check_positive("experiment.sigma", c.sigma)?;
                check_count("experiment.n_copies", c.n_copies)?;
            }
            Experiment::Superres(c) => {
                c.sizes.validate("experiment.sizes")?;
                check_eps("experiment.eps", c.eps)?;
                check_positive("experiment.sigma", c.sigma)?;
                check_count("experiment.n_copies", c.n_copies)?;
                check_count("experiment.n_max", c.n_max)?;
                check_count("experiment.bound_orders", c.bound_orders)?;
                check_count("experiment.max_copies", c.max_copies)?;
                if c.spade_order < c.n_max.max(c.bound_orders) {
                    return Err(invalid("experiment.spade_order", "must be at least n_max and bound_orders"));
                }
            }
            Experiment::Bayes(c) => {
                if c.n_copies.is_empty() {
                    return Err(invalid("experiment.n_copies", "list is empty"));
                }
                if c.n_copies.contains(&0) {
                    return Err(invalid("experiment.n_copies", "entries must be at least 1"));
                }
                check_positive("experiment.sigma", c.sigma)?;
                if c.families.is_empty() {
                    return Err(invalid("experiment.families", "list is empty"));
                }
                for f in &c.families {
                    if let DetectionFamily::Gaussian { k } = f {
                        check_positive("experiment.families.k", *k)?;
                    }
                }
                check_positive("experiment.l_max_widths", c.l_max_widths)?;
                if c.n_grid < gimlab_core::bayescrb::MIN_EIGEN_GRID {
                    return Err(invalid("experiment.n_grid", format!("must be at least {}", gimlab_core::bayescrb::MIN_EIGEN_GRID)));
                }
            }
            Experiment::Mc(c) => {
                check_count("experiment.n_samples", c.n_samples)?;
                if c.n_trials < 2 {
                    return Err(invalid("experiment.n_trials", "need at least 2 trials"));
                }
                check_count("experiment.bootstrap", c.bootstrap)?;
                match c.model {
                    McFamily::PhotonCounting { eps, g_abs, .. } | McFamily::Heterodyne { eps, g_abs, .. } => {
                        check_eps("experiment.model.eps", eps)?;
                        check_g("experiment.model.g_abs", &[g_abs])?;
                    }
                    McFamily::Bernoulli { p } => {
                        if !(p > 0.0 && p < 1.0) {
                            return Err(invalid("experiment.model.p", format!("must lie in (0, 1), got {p}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring where output is written.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("config is always serializable");
        hex::encode(Sha256::digest(&bytes))
    }
}
