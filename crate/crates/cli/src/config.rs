//! Scenario configuration: JSON ingestion, defaults, and validation.
//!
//! A scenario names a surface (built-in or inline formulas), the metric
//! family samples to test, and the set of checks to run. Validation failures
//! here are configuration errors (process exit code 2); anything that goes
//! wrong while a check executes is recorded in the report instead.

use serde::{Deserialize, Serialize};
use twistor_core::corpus;
use twistor_core::geom::ManifoldModel;
use twistor_core::surface::{ImmersedSurface, SurfaceError};

/// Schema tag accepted in config files (optional there) and stamped on
/// reports.
pub const CONFIG_SCHEMA: &str = "twistor-scenario/1";
pub const REPORT_SCHEMA: &str = "twistor-report/1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
    #[error("config is not valid JSON: {0}")]
    Json(String),
    #[error("config schema {found:?} is not supported (expected {expected:?})")]
    Schema { found: String, expected: &'static str },
    #[error("no built-in surface named {0:?}; run `twistor list-corpus` for the available names")]
    UnknownBuiltin(String),
    #[error("surface formula for component {component} does not parse: {message}")]
    Formula { component: usize, message: String },
    #[error("lambda list must be nonempty with positive finite entries, got {0:?}")]
    BadLambdaList(Vec<f64>),
    #[error("signs must be a nonempty subset of plus/minus")]
    BadSigns,
    #[error("grid must be at least 4x4, got {0}x{1}")]
    GridTooSmall(usize, usize),
    #[error("grid spec {0:?} is not N or NxM")]
    BadGridSpec(String),
    #[error("n_theta must be at least 4, got {0}")]
    NThetaTooSmall(usize),
    #[error("checks must be a nonempty list")]
    NoChecks,
    #[error("check {0:?} requires a surface, but the config has none")]
    MissingSurface(String),
    #[error("unknown tolerance key {0:?}; known keys: {1}")]
    UnknownToleranceKey(String, String),
    #[error("tolerance {key} = {value} must be a finite value of at least machine epsilon")]
    BadToleranceValue { key: String, value: f64 },
    #[error("tolerance spec {0:?} is not key=value")]
    BadToleranceSpec(String),
    #[error("target {0:?} is neither a built-in surface nor a config file; run `twistor list-corpus` for the surface names")]
    TargetNotFound(String),
}

/// Which model chart a surface lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    FlatR4,
    RoundS4,
    FubiniStudyCp2,
}

impl ModelName {
    pub fn to_core(self) -> ManifoldModel {
        match self {
            ModelName::FlatR4 => ManifoldModel::FlatR4,
            ModelName::RoundS4 => ManifoldModel::RoundS4,
            ModelName::FubiniStudyCp2 => ManifoldModel::FubiniStudyCP2,
        }
    }

    pub fn from_core(model: ManifoldModel) -> Self {
        match model {
            ManifoldModel::FlatR4 => ModelName::FlatR4,
            ManifoldModel::RoundS4 => ModelName::RoundS4,
            ManifoldModel::FubiniStudyCP2 => ModelName::FubiniStudyCp2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelName::FlatR4 => "flat-r4",
            ModelName::RoundS4 => "round-s4",
            ModelName::FubiniStudyCp2 => "fubini-study-cp2",
        }
    }
}

/// The surface under test: a corpus name or an inline chart immersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceSpec {
    Builtin { builtin: String },
    Inline {
        name: String,
        model: ModelName,
        formulas: [String; 4],
        domain: [[f64; 2]; 2],
        grid: [usize; 2],
    },
}

impl SurfaceSpec {
    /// Build the immersed surface, applying a grid override if given.
    pub fn build(&self, grid: Option<[usize; 2]>) -> Result<ImmersedSurface, SurfaceError> {
        match self {
            SurfaceSpec::Builtin { builtin } => {
                let entry = corpus::entry(builtin).expect("validated");
                match grid {
                    Some(g) => entry.build_with_grid(g),
                    None => entry.build(),
                }
            }
            SurfaceSpec::Inline { name, model, formulas, domain, grid: own } => {
                ImmersedSurface::new(
                    name,
                    model.to_core(),
                    [&formulas[0], &formulas[1], &formulas[2], &formulas[3]]
                        .map(|s| s.as_str()),
                    *domain,
                    grid.unwrap_or(*own),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignName {
    Plus,
    Minus,
}

impl SignName {
    pub fn to_core(self) -> twistor_core::twistor::HermitianSign {
        match self {
            SignName::Plus => twistor_core::twistor::HermitianSign::Plus,
            SignName::Minus => twistor_core::twistor::HermitianSign::Minus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SignName::Plus => "plus",
            SignName::Minus => "minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Superminimal,
    Lagrangian,
    MinimalL,
    Converse,
    Lie,
}

impl CheckName {
    pub fn label(self) -> &'static str {
        match self {
            CheckName::Superminimal => "superminimal",
            CheckName::Lagrangian => "lagrangian",
            CheckName::MinimalL => "minimal-l",
            CheckName::Converse => "converse",
            CheckName::Lie => "lie",
        }
    }

    pub fn needs_surface(self) -> bool {
        !matches!(self, CheckName::Lie)
    }

    /// Fixed execution order.
    pub const ALL: [CheckName; 5] = [
        CheckName::Superminimal,
        CheckName::Lagrangian,
        CheckName::MinimalL,
        CheckName::Converse,
        CheckName::Lie,
    ];
}

/// Tolerance table: every defect in a report is compared against one of
/// these named thresholds.
pub const TOLERANCE_KEYS: [(&str, f64); 9] = [
    ("vertical", 1e-6),
    ("circularity", 1e-6),
    ("holonomy", 1e-5),
    ("lagrangian", 1e-5),
    ("mean-curvature-l", 1e-3),
    ("rank-drop", 1e-6),
    ("rank-keep", 1e-3),
    ("containment", 1e-6),
    ("lie", 1e-13),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances(pub std::collections::BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(
            TOLERANCE_KEYS
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        )
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        *self.0.get(key).expect("validated tolerance key")
    }

    /// Merge user overrides onto the defaults, validating keys and values.
    pub fn with_overrides(
        overrides: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self, ConfigError> {
        let mut out = Tolerances::default();
        for (key, value) in overrides {
            if !TOLERANCE_KEYS.iter().any(|(k, _)| *k == key) {
                let known = TOLERANCE_KEYS
                    .iter()
                    .map(|(k, _)| *k)
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(ConfigError::UnknownToleranceKey(key, known));
            }
            if !value.is_finite() || value < f64::EPSILON {
                return Err(ConfigError::BadToleranceValue { key, value });
            }
            out.0.insert(key, value);
        }
        Ok(out)
    }
}

fn default_lambda_list() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_signs() -> Vec<SignName> {
    vec![SignName::Plus, SignName::Minus]
}

fn default_n_theta() -> usize {
    16
}

/// A full scenario: what to test and how hard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default = "default_lambda_list")]
    pub lambda_list: Vec<f64>,
    #[serde(default = "default_signs")]
    pub signs: Vec<SignName>,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default)]
    pub tolerances: std::collections::BTreeMap<String, f64>,
    pub checks: Vec<CheckName>,
}

impl ScenarioConfig {
    /// Scenario with default sampling parameters for one surface.
    pub fn for_surface(surface: SurfaceSpec, checks: Vec<CheckName>) -> Self {
        ScenarioConfig {
            schema: None,
            surface: Some(surface),
            grid: None,
            lambda_list: default_lambda_list(),
            signs: default_signs(),
            n_theta: default_n_theta(),
            tolerances: Default::default(),
            checks,
        }
    }

    /// Scenario running only the exact algebra suite (no surface).
    pub fn lie_only() -> Self {
        ScenarioConfig {
            schema: None,
            surface: None,
            grid: None,
            lambda_list: default_lambda_list(),
            signs: default_signs(),
            n_theta: default_n_theta(),
            tolerances: Default::default(),
            checks: vec![CheckName::Lie],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// The effective tolerance table (defaults merged with overrides).
    pub fn tolerances(&self) -> Result<Tolerances, ConfigError> {
        Tolerances::with_overrides(self.tolerances.iter().map(|(k, v)| (k.clone(), *v)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(schema) = &self.schema {
            if schema != CONFIG_SCHEMA {
                return Err(ConfigError::Schema {
                    found: schema.clone(),
                    expected: CONFIG_SCHEMA,
                });
            }
        }
        if self.checks.is_empty() {
            return Err(ConfigError::NoChecks);
        }
        if self.lambda_list.is_empty()
            || self.lambda_list.iter().any(|l| !l.is_finite() || *l <= 0.0)
        {
            return Err(ConfigError::BadLambdaList(self.lambda_list.clone()));
        }
        if self.signs.is_empty() {
            return Err(ConfigError::BadSigns);
        }
        if self.n_theta < 4 {
            return Err(ConfigError::NThetaTooSmall(self.n_theta));
        }
        self.tolerances()?;

        let needs_surface = self.checks.iter().find(|c| c.needs_surface());
        match (&self.surface, needs_surface) {
            (None, Some(check)) => {
                return Err(ConfigError::MissingSurface(check.label().to_string()))
            }
            (Some(spec), _) => self.validate_surface(spec)?,
            (None, None) => {}
        }

        for grid in [self.grid, self.inline_grid()].into_iter().flatten() {
            if grid[0] < 4 || grid[1] < 4 {
                return Err(ConfigError::GridTooSmall(grid[0], grid[1]));
            }
        }
        Ok(())
    }

    fn inline_grid(&self) -> Option<[usize; 2]> {
        match &self.surface {
            Some(SurfaceSpec::Inline { grid, .. }) => Some(*grid),
            _ => None,
        }
    }

    fn validate_surface(&self, spec: &SurfaceSpec) -> Result<(), ConfigError> {
        match spec {
            SurfaceSpec::Builtin { builtin } => {
                if corpus::entry(builtin).is_none() {
                    return Err(ConfigError::UnknownBuiltin(builtin.clone()));
                }
            }
            SurfaceSpec::Inline { formulas, .. } => {
                // Formula syntax is a configuration concern; geometric
                // validity (immersion, chart containment) is a check-time
                // concern recorded in the report.
                for (component, src) in formulas.iter().enumerate() {
                    if let Err(e) = twistor_core::expr::parse(src) {
                        return Err(ConfigError::Formula {
                            component,
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parse a `--grid` argument: `N` (square) or `NxM`.
pub fn parse_grid_spec(spec: &str) -> Result<[usize; 2], ConfigError> {
    let bad = || ConfigError::BadGridSpec(spec.to_string());
    match spec.split_once(['x', 'X']) {
        Some((a, b)) => {
            let nu = a.trim().parse().map_err(|_| bad())?;
            let nv = b.trim().parse().map_err(|_| bad())?;
            Ok([nu, nv])
        }
        None => {
            let n = spec.trim().parse().map_err(|_| bad())?;
            Ok([n, n])
        }
    }
}

/// Parse a `--tolerance key=value` argument.
pub fn parse_tolerance_spec(spec: &str) -> Result<(String, f64), ConfigError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::BadToleranceSpec(spec.to_string()))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| ConfigError::BadToleranceSpec(spec.to_string()))?;
    Ok((key.trim().to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_round_trips() {
        let config = ScenarioConfig::from_json(
            r#"{"surface": {"builtin": "plane_r4"}, "checks": ["superminimal"]}"#,
        )
        .unwrap();
        assert_eq!(config.lambda_list, vec![0.5, 1.0, 2.0]);
        assert_eq!(config.n_theta, 16);
        let text = serde_json::to_string(&config).unwrap();
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn inline_surface_parses() {
        let config = ScenarioConfig::from_json(
            r#"{
                "surface": {
                    "name": "tilted",
                    "model": "flat-r4",
                    "formulas": ["u", "v", "u + v", "0"],
                    "domain": [[-1, 1], [-1, 1]],
                    "grid": [6, 6]
                },
                "checks": ["superminimal", "lagrangian"]
            }"#,
        )
        .unwrap();
        let surface = config.surface.unwrap().build(None).unwrap();
        assert_eq!(surface.grid, [6, 6]);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            (r#"{"checks": []}"#, "no checks"),
            (r#"{"checks": ["lagrangian"]}"#, "missing surface"),
            (
                r#"{"surface": {"builtin": "nope"}, "checks": ["superminimal"]}"#,
                "unknown builtin",
            ),
            (
                r#"{"surface": {"builtin": "plane_r4"}, "lambda_list": [0.0], "checks": ["lagrangian"]}"#,
                "bad lambda",
            ),
            (
                r#"{"surface": {"builtin": "plane_r4"}, "grid": [3, 8], "checks": ["superminimal"]}"#,
                "small grid",
            ),
            (
                r#"{"surface": {"builtin": "plane_r4"}, "n_theta": 2, "checks": ["lagrangian"]}"#,
                "small n_theta",
            ),
            (
                r#"{"surface": {"builtin": "plane_r4"}, "tolerances": {"nope": 1.0}, "checks": ["superminimal"]}"#,
                "unknown tolerance",
            ),
            (
                r#"{"surface": {"builtin": "plane_r4"}, "tolerances": {"vertical": 0.0}, "checks": ["superminimal"]}"#,
                "tolerance below epsilon",
            ),
            (
                r#"{"schema": "other/9", "surface": {"builtin": "plane_r4"}, "checks": ["superminimal"]}"#,
                "wrong schema",
            ),
        ];
        for (text, label) in cases {
            assert!(ScenarioConfig::from_json(text).is_err(), "{label} must be rejected");
        }
    }

    #[test]
    fn formula_errors_name_the_component() {
        let err = ScenarioConfig::from_json(
            r#"{
                "surface": {
                    "name": "broken",
                    "model": "flat-r4",
                    "formulas": ["u", "v", "u +", "0"],
                    "domain": [[-1, 1], [-1, 1]],
                    "grid": [6, 6]
                },
                "checks": ["superminimal"]
            }"#,
        )
        .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("component 2"), "{message}");
        assert!(message.contains("at byte"), "parse errors carry a location: {message}");
    }

    #[test]
    fn grid_and_tolerance_flag_parsing() {
        assert_eq!(parse_grid_spec("16").unwrap(), [16, 16]);
        assert_eq!(parse_grid_spec("8x12").unwrap(), [8, 12]);
        assert!(parse_grid_spec("axb").is_err());
        let (k, v) = parse_tolerance_spec("lagrangian=2e-5").unwrap();
        assert_eq!(k, "lagrangian");
        assert!((v - 2e-5).abs() < 1e-20);
        assert!(parse_tolerance_spec("lagrangian").is_err());
    }
}
