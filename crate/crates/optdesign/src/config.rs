//! Experiment configuration: a versioned JSON key-tree describing the model,
//! the design-space grid, the criterion, the algorithm, and output options.
//!
//! Configs are validated before any computation; unknown keys are rejected
//! with line-precise messages, and all defaults are materialized so the
//! echoed effective config is complete and diffable.

use crate::adaptive::{
    DeltaBarRule, DeltaUnderRule, RunOptions, ScanOrder, ToleranceSchedule, Variant,
};
use crate::criteria::{CriterionError, CriterionSpec, Family};
use crate::design_space::DesignSpace;
use crate::matcone::SymMatrix;
use crate::models::{
    benzene_cstr, build_atoms, grid_points, williams_otto, BenzeneConstants, LinearModel, Model,
    ModelError, NoiseSpec, WilliamsOttoConstants,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub criterion: CriterionConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// "linear", "benzene_cstr", or "williams_otto".
    pub name: String,
    #[serde(default)]
    pub constants: ModelConstants,
    pub theta_bar: Vec<f64>,
    /// Output-noise covariance ς (rows); identity when omitted.
    #[serde(default)]
    pub noise_covariance: Option<Vec<Vec<f64>>>,
}

/// Model constants; fields not set fall back to the model's documented
/// defaults. Only the fields relevant to the chosen model are consulted.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConstants {
    pub v_a: Option<f64>,
    pub v_b: Option<f64>,
    pub v_c: Option<f64>,
    pub f_fa: Option<f64>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub a: Option<[f64; 3]>,
    pub b: Option<[f64; 3]>,
    pub steps_per_unit: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Per-dimension equidistant specs; exclusive with `points`.
    #[serde(default)]
    pub dimensions: Option<Vec<GridDim>>,
    /// Explicit design points; exclusive with `dimensions`.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDim {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionConfig {
    /// "D", "A", "P:p", "PQ:p", "WA", "E", or "TildeP:p".
    pub name: String,
    /// Orthogonal-direction matrix Q (rows), required for "PQ:p".
    #[serde(default)]
    pub q: Option<Vec<Vec<f64>>>,
    /// Weight matrix W (rows), required for "WA".
    #[serde(default)]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub two_stage: Option<TwoStageConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStageConfig {
    pub alpha: f64,
    /// First-stage information matrix M⁰ (rows).
    pub m0: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// "no_exchange_strict", "no_exchange_relaxed", "exchange_strict",
    /// "exchange_relaxed", or "vertex_direction".
    pub variant: String,
    /// Initial discretization: explicit points, or "corners" for the 2^d
    /// grid extreme points.
    #[serde(default)]
    pub x0: X0Config,
    pub eps: f64,
    #[serde(default)]
    pub delta_bar: ScheduleConfig,
    #[serde(default)]
    pub delta_under: ScheduleConfig,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_w_min")]
    pub w_min: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub literal_paper_update: bool,
    /// "index" or "seeded" (relaxed variants only).
    #[serde(default = "default_scan_order")]
    pub scan_order: String,
}

fn default_max_outer() -> usize {
    1000
}

fn default_w_min() -> f64 {
    1e-9
}

fn default_scan_order() -> String {
    "index".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Config {
    Shorthand(String),
    Points(Vec<Vec<f64>>),
}

impl Default for X0Config {
    fn default() -> Self {
        X0Config::Shorthand("corners".to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// "zero", "constant", "quadratic_decay" (δ̄) or "harmonic_decay" (δ̲).
    pub rule: String,
    #[serde(default)]
    pub c: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { rule: "zero".to_string(), c: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_directory() -> String {
    ".".to_string()
}

fn default_formats() -> Vec<String> {
    vec!["json".to_string(), "csv".to_string()]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), formats: default_formats() }
    }
}

/// Which driver the algorithm block selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Adaptive(Variant),
    VertexDirection,
}

impl ExperimentConfig {
    pub fn from_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| {
            ConfigError::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.model.name.as_str() {
            "linear" | "benzene_cstr" | "williams_otto" => {}
            other => {
                return Err(ConfigError::Invalid(format!("unknown model name {other:?}")));
            }
        }
        match (&self.grid.dimensions, &self.grid.points) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "grid: set exactly one of `dimensions` and `points`, not both".into(),
                ));
            }
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "grid: set one of `dimensions` or `points`".into(),
                ));
            }
            _ => {}
        }
        if let Some(dims) = &self.grid.dimensions {
            for (i, d) in dims.iter().enumerate() {
                if d.count == 0 {
                    return Err(ConfigError::Invalid(format!(
                        "grid.dimensions[{i}].count must be positive"
                    )));
                }
            }
        }
        self.criterion_spec()?;
        self.algorithm_kind()?;
        match self.algorithm.scan_order.as_str() {
            "index" | "seeded" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "algorithm.scan_order must be \"index\" or \"seeded\", got {other:?}"
                )));
            }
        }
        for sched in [&self.algorithm.delta_bar, &self.algorithm.delta_under] {
            match sched.rule.as_str() {
                "zero" | "constant" | "quadratic_decay" | "harmonic_decay" => {}
                other => {
                    return Err(ConfigError::Invalid(format!("unknown schedule rule {other:?}")));
                }
            }
            if sched.c < 0.0 {
                return Err(ConfigError::Invalid("schedule constant c must be >= 0".into()));
            }
        }
        if !(self.algorithm.eps > 0.0) {
            return Err(ConfigError::Invalid("algorithm.eps must be positive".into()));
        }
        Ok(())
    }

    /// Serialized effective config with every default materialized.
    pub fn effective_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn design_points(&self) -> Result<Vec<Vec<f64>>, ConfigError> {
        if let Some(points) = &self.grid.points {
            if points.is_empty() {
                return Err(ConfigError::Invalid("grid.points is empty".into()));
            }
            return Ok(points.clone());
        }
        let dims: Vec<(f64, f64, usize)> = self
            .grid
            .dimensions
            .as_ref()
            .expect("validated")
            .iter()
            .map(|d| (d.min, d.max, d.count))
            .collect();
        Ok(grid_points(&dims)?)
    }

    fn build_model(&self) -> Result<Box<dyn Model>, ConfigError> {
        let c = &self.model.constants;
        Ok(match self.model.name.as_str() {
            "linear" => {
                let dim = self.model.theta_bar.len();
                if dim == 0 {
                    return Err(ConfigError::Invalid("linear model needs theta_bar".into()));
                }
                Box::new(LinearModel { dim })
            }
            "benzene_cstr" => {
                let mut k = BenzeneConstants::default();
                if let Some(v) = c.v_a {
                    k.v_a = v;
                }
                if let Some(v) = c.v_b {
                    k.v_b = v;
                }
                if let Some(v) = c.v_c {
                    k.v_c = v;
                }
                Box::new(benzene_cstr(k))
            }
            "williams_otto" => {
                let mut k = WilliamsOttoConstants::default();
                if let Some(v) = c.f_fa {
                    k.f_fa = v;
                }
                if let Some(v) = c.mu {
                    k.mu = v;
                }
                if let Some(v) = c.eta {
                    k.eta = v;
                }
                if let Some(v) = c.a {
                    k.a = v;
                }
                if let Some(v) = c.b {
                    k.b = v;
                }
                if let Some(v) = c.steps_per_unit {
                    k.steps_per_unit = v;
                }
                Box::new(williams_otto(k))
            }
            _ => unreachable!("validated"),
        })
    }

    fn noise(&self, d_y: usize) -> Result<NoiseSpec, ConfigError> {
        match &self.model.noise_covariance {
            None => Ok(NoiseSpec::identity(d_y)),
            Some(rows) => {
                let m = rows_to_sym(rows, "model.noise_covariance")?;
                Ok(NoiseSpec::new(m)?)
            }
        }
    }

    /// Builds the finite design space: grid points with model atoms.
    pub fn build_space(&self) -> Result<DesignSpace, ConfigError> {
        let model = self.build_model()?;
        if self.model.theta_bar.len() != model.d_theta() {
            return Err(ConfigError::Invalid(format!(
                "model.theta_bar has length {}, model expects {}",
                self.model.theta_bar.len(),
                model.d_theta()
            )));
        }
        let noise = self.noise(model.d_y())?;
        let points = self.design_points()?;
        Ok(build_atoms(model.as_ref(), &noise, points, &self.model.theta_bar)?)
    }

    pub fn criterion_spec(&self) -> Result<CriterionSpec, ConfigError> {
        let name = self.criterion.name.as_str();
        let family = if name == "D" {
            Family::D
        } else if name == "A" {
            Family::P(1.0)
        } else if name == "E" {
            Family::E
        } else if name == "WA" {
            let rows = self.criterion.w.as_ref().ok_or_else(|| {
                ConfigError::Invalid("criterion \"WA\" requires the `w` matrix".into())
            })?;
            Family::WeightedA(rows_to_sym(rows, "criterion.w")?)
        } else if let Some(p) = name.strip_prefix("P:") {
            Family::P(parse_p(p)?)
        } else if let Some(p) = name.strip_prefix("TildeP:") {
            Family::TildeP(parse_p(p)?)
        } else if let Some(p) = name.strip_prefix("PQ:") {
            let rows = self.criterion.q.as_ref().ok_or_else(|| {
                ConfigError::Invalid("criterion \"PQ:p\" requires the `q` matrix".into())
            })?;
            Family::PQ { p: parse_p(p)?, q: rows_to_dmatrix(rows, "criterion.q")? }
        } else {
            return Err(ConfigError::Invalid(format!("unknown criterion name {name:?}")));
        };
        let two_stage = match &self.criterion.two_stage {
            None => None,
            Some(ts) => Some((ts.alpha, rows_to_sym(&ts.m0, "criterion.two_stage.m0")?)),
        };
        Ok(CriterionSpec::new(family, two_stage)?)
    }

    pub fn algorithm_kind(&self) -> Result<AlgorithmKind, ConfigError> {
        Ok(match self.algorithm.variant.as_str() {
            "no_exchange_strict" => AlgorithmKind::Adaptive(Variant::NoExchangeStrict),
            "no_exchange_relaxed" => AlgorithmKind::Adaptive(Variant::NoExchangeRelaxed),
            "exchange_strict" => AlgorithmKind::Adaptive(Variant::ExchangeStrict),
            "exchange_relaxed" => AlgorithmKind::Adaptive(Variant::ExchangeRelaxed),
            "vertex_direction" => AlgorithmKind::VertexDirection,
            other => {
                return Err(ConfigError::Invalid(format!("unknown algorithm variant {other:?}")));
            }
        })
    }

    pub fn schedule(&self) -> Result<ToleranceSchedule, ConfigError> {
        let delta_bar_rule = match self.algorithm.delta_bar.rule.as_str() {
            "zero" => DeltaBarRule::Zero,
            "constant" => DeltaBarRule::Constant(self.algorithm.delta_bar.c),
            "quadratic_decay" => DeltaBarRule::QuadraticDecay(self.algorithm.delta_bar.c),
            other => {
                return Err(ConfigError::Invalid(format!(
                    "delta_bar rule {other:?} not applicable (use zero/constant/quadratic_decay)"
                )));
            }
        };
        let delta_under_rule = match self.algorithm.delta_under.rule.as_str() {
            "zero" => DeltaUnderRule::Zero,
            "constant" => DeltaUnderRule::Constant(self.algorithm.delta_under.c),
            "harmonic_decay" => DeltaUnderRule::HarmonicDecay(self.algorithm.delta_under.c),
            other => {
                return Err(ConfigError::Invalid(format!(
                    "delta_under rule {other:?} not applicable (use zero/constant/harmonic_decay)"
                )));
            }
        };
        Ok(ToleranceSchedule { eps: self.algorithm.eps, delta_bar_rule, delta_under_rule })
    }

    pub fn run_options(&self, variant: Variant) -> RunOptions {
        let mut opts = RunOptions::new(variant);
        opts.max_outer = self.algorithm.max_outer;
        opts.w_min = self.algorithm.w_min;
        opts.literal_paper_update = self.algorithm.literal_paper_update;
        opts.scan_order = match self.algorithm.scan_order.as_str() {
            "seeded" => ScanOrder::Seeded(self.algorithm.seed),
            _ => ScanOrder::Index,
        };
        opts.solve.w_min = self.algorithm.w_min;
        opts
    }

    /// Resolves X⁰ to indices into the design space; "corners" expands to
    /// the 2^d grid extreme points.
    pub fn x0_indices(&self, space: &DesignSpace) -> Result<Vec<usize>, ConfigError> {
        let points: Vec<Vec<f64>> = match &self.algorithm.x0 {
            X0Config::Shorthand(s) if s == "corners" => {
                let dims = self.grid.dimensions.as_ref().ok_or_else(|| {
                    ConfigError::Invalid(
                        "x0 \"corners\" requires a `grid.dimensions` block".into(),
                    )
                })?;
                let mut corners = vec![Vec::new()];
                for d in dims {
                    let values = if d.count == 1 { vec![d.min] } else { vec![d.min, d.max] };
                    let mut next = Vec::new();
                    for c in &corners {
                        for v in &values {
                            let mut cc = c.clone();
                            cc.push(*v);
                            next.push(cc);
                        }
                    }
                    corners = next;
                }
                corners
            }
            X0Config::Shorthand(s) => {
                return Err(ConfigError::Invalid(format!("unknown x0 shorthand {s:?}")));
            }
            X0Config::Points(pts) => pts.clone(),
        };
        points.iter().map(|p| find_point(space, p)).collect()
    }
}

/// Index of the grid point matching `p` (tolerance 1e-12 per coordinate).
pub fn find_point(space: &DesignSpace, p: &[f64]) -> Result<usize, ConfigError> {
    for i in 0..space.len() {
        let q = space.point(i);
        if q.len() == p.len() && q.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-12) {
            return Ok(i);
        }
    }
    Err(ConfigError::Invalid(format!("point {p:?} is not on the configured grid")))
}

fn parse_p(s: &str) -> Result<f64, ConfigError> {
    s.parse::<f64>()
        .map_err(|_| ConfigError::Invalid(format!("invalid criterion exponent {s:?}")))
}

fn rows_to_dmatrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, ConfigError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(ConfigError::Invalid(format!("{what}: empty matrix")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ConfigError::Invalid(format!("{what}: ragged rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

fn rows_to_sym(rows: &[Vec<f64>], what: &str) -> Result<SymMatrix, ConfigError> {
    let m = rows_to_dmatrix(rows, what)?;
    if m.nrows() != m.ncols() {
        return Err(ConfigError::Invalid(format!("{what}: must be square")));
    }
    Ok(SymMatrix::from_dmatrix(&m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config_json() -> String {
        r#"{
            "schema_version": 1,
            "model": {"name": "linear", "theta_bar": [0.0, 0.0]},
            "grid": {"points": [[1.0, 0.0], [0.0, 1.0]]},
            "criterion": {"name": "D"},
            "algorithm": {
                "variant": "no_exchange_strict",
                "x0": [[1.0, 0.0], [0.0, 1.0]],
                "eps": 1e-8
            }
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_materializes_defaults() {
        let cfg = ExperimentConfig::from_str(&toy_config_json()).unwrap();
        assert_eq!(cfg.algorithm.max_outer, 1000);
        assert_eq!(cfg.algorithm.w_min, 1e-9);
        assert_eq!(cfg.output.directory, ".");
        let echoed = cfg.effective_json();
        assert!(echoed.contains("\"max_outer\": 1000"));
        assert!(echoed.contains("\"w_min\": 1e-9"));
        // Round-trip through the echoed form.
        let again = ExperimentConfig::from_str(&echoed).unwrap();
        assert_eq!(again.algorithm.eps, cfg.algorithm.eps);
    }

    #[test]
    fn rejects_unknown_keys_with_position() {
        let bad = toy_config_json().replace("\"eps\"", "\"epzilon\"");
        let err = ExperimentConfig::from_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
        assert!(msg.contains("epzilon"), "{msg}");
    }

    #[test]
    fn rejects_bad_schema_version() {
        let bad = toy_config_json().replace("\"schema_version\": 1", "\"schema_version\": 99");
        assert!(matches!(
            ExperimentConfig::from_str(&bad),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn rejects_zero_count_grid_naming_field() {
        let bad = r#"{
            "schema_version": 1,
            "model": {"name": "linear", "theta_bar": [0.0]},
            "grid": {"dimensions": [{"min": 0.0, "max": 1.0, "count": 0}]},
            "criterion": {"name": "D"},
            "algorithm": {"variant": "no_exchange_strict", "eps": 1e-4}
        }"#;
        let err = ExperimentConfig::from_str(bad).unwrap_err();
        assert!(err.to_string().contains("count"), "{err}");
    }

    #[test]
    fn criterion_name_parsing() {
        let mut cfg = ExperimentConfig::from_str(&toy_config_json()).unwrap();
        for (name, ok) in [
            ("D", true),
            ("A", true),
            ("E", true),
            ("P:2", true),
            ("TildeP:1.5", true),
            ("P:x", false),
            ("Bogus", false),
            ("WA", false), // missing w matrix
        ] {
            cfg.criterion.name = name.to_string();
            assert_eq!(cfg.criterion_spec().is_ok(), ok, "{name}");
        }
        cfg.criterion.name = "WA".to_string();
        cfg.criterion.w = Some(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(cfg.criterion_spec().is_ok());
    }

    #[test]
    fn corners_expansion() {
        let cfg = ExperimentConfig::from_str(
            r#"{
            "schema_version": 1,
            "model": {"name": "benzene_cstr", "theta_bar": [0.4, 0.0555]},
            "grid": {"dimensions": [
                {"min": 60.0, "max": 70.0, "count": 3},
                {"min": 10.0, "max": 20.0, "count": 3}
            ]},
            "criterion": {"name": "A"},
            "algorithm": {"variant": "exchange_strict", "eps": 1e-4}
        }"#,
        )
        .unwrap();
        let space = cfg.build_space().unwrap();
        assert_eq!(space.len(), 9);
        let idx = cfg.x0_indices(&space).unwrap();
        assert_eq!(idx.len(), 4);
        let mut corner_pts: Vec<Vec<f64>> = idx.iter().map(|&i| space.point(i).to_vec()).collect();
        corner_pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            corner_pts,
            vec![
                vec![60.0, 10.0],
                vec![60.0, 20.0],
                vec![70.0, 10.0],
                vec![70.0, 20.0]
            ]
        );
    }

    #[test]
    fn explicit_x0_points_resolve_and_off_grid_fails() {
        let cfg = ExperimentConfig::from_str(&toy_config_json()).unwrap();
        let space = cfg.build_space().unwrap();
        assert_eq!(cfg.x0_indices(&space).unwrap(), vec![0, 1]);
        assert!(find_point(&space, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn grid_blocks_are_exclusive() {
        let bad = toy_config_json().replace(
            r#""grid": {"points": [[1.0, 0.0], [0.0, 1.0]]}"#,
            r#""grid": {"points": [[1.0, 0.0]], "dimensions": [{"min": 0.0, "max": 1.0, "count": 2}]}"#,
        );
        assert!(ExperimentConfig::from_str(&bad).is_err());
        let none = toy_config_json()
            .replace(r#""grid": {"points": [[1.0, 0.0], [0.0, 1.0]]}"#, r#""grid": {}"#);
        assert!(ExperimentConfig::from_str(&none).is_err());
    }

    #[test]
    fn schedule_construction() {
        let mut cfg = ExperimentConfig::from_str(&toy_config_json()).unwrap();
        cfg.algorithm.delta_bar = ScheduleConfig { rule: "quadratic_decay".into(), c: 2.0 };
        cfg.algorithm.delta_under = ScheduleConfig { rule: "harmonic_decay".into(), c: 1.0 };
        let s = cfg.schedule().unwrap();
        assert!((s.delta_bar(0) - 2.0).abs() < 1e-15);
        assert!((s.delta_bar(1) - 0.5).abs() < 1e-15);
        assert!((s.delta_under(0) - 0.5).abs() < 1e-15);
        // Mixed-up rules rejected.
        cfg.algorithm.delta_bar = ScheduleConfig { rule: "harmonic_decay".into(), c: 1.0 };
        assert!(cfg.schedule().is_err());
    }

    #[test]
    fn model_constants_override() {
        let cfg = ExperimentConfig::from_str(
            r#"{
            "schema_version": 1,
            "model": {
                "name": "benzene_cstr",
                "constants": {"v_a": 0.09, "v_b": 0.1, "v_c": 0.11},
                "theta_bar": [0.4, 0.0555]
            },
            "grid": {"points": [[60.0, 20.0], [70.0, 10.0]]},
            "criterion": {"name": "D"},
            "algorithm": {"variant": "no_exchange_strict", "eps": 1e-4}
        }"#,
        )
        .unwrap();
        let space = cfg.build_space().unwrap();
        // Different constants give a measurably different atom than defaults.
        let mut cfg2 = cfg.clone();
        cfg2.model.constants = ModelConstants::default();
        let space2 = cfg2.build_space().unwrap();
        let diff = space.atom(0).add_scaled(space2.atom(0), -1.0).frobenius_norm();
        assert!(diff > 1e-6);
    }
}
