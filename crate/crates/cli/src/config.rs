//! Scenario files: a single TOML document with `system`, `classifier`,
//! `synth`, `simulation` and `output` tables. Every table except `system`
//! is optional.

use std::path::{Path, PathBuf};

use sdstab::classifier::{Grid, SystemDef, DEFAULT_EPS0, DEFAULT_N_MAX};
use sdstab::liealg::{BracketConvention, VectorField};
use sdstab::simloop::{LoopParams, PartitionRule};
use sdstab::symexpr::parse;
use sdstab::synth::SynthParams;
use sdstab::templates::Corollary2;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    /// `ẋ1 = a·x3^L, ẋ2 = b·x3, ẋ3 = u`.
    Corollary2 {
        #[serde(default = "one")]
        a: String,
        #[serde(default = "one")]
        b: String,
        #[serde(rename = "L")]
        l: u32,
    },
    /// Raw drift, input field and Lyapunov candidate.
    Custom {
        f: Vec<String>,
        g: Vec<String>,
        #[serde(rename = "V")]
        v: String,
    },
}

fn one() -> String {
    "1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub eps0: f64,
    pub n_max: usize,
    pub grid: GridConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            eps0: DEFAULT_EPS0,
            n_max: DEFAULT_N_MAX,
            grid: GridConfig::default(),
        }
    }
}

/// Cube `[-half_width, half_width]^n` unless `lower`/`upper` are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    pub step: f64,
    pub exclude_radius: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            lower: None,
            upper: None,
            step: 0.25,
            exclude_radius: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// State for the `synth` command.
    pub x0: Vec<f64>,
    pub cap: f64,
    #[serde(flatten)]
    pub params: SynthParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            x0: vec![1.0, 1.0, 0.0],
            cap: 0.25,
            params: SynthParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub partition: PartitionRule,
    pub horizon: f64,
    pub radius: f64,
    pub convergence_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_bound: Option<f64>,
    /// Initial state for `simulate`.
    pub x0: Vec<f64>,
    /// Sphere radii and tolerances for `sweep`.
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            partition: PartitionRule::Uniform { delta: 0.25 },
            horizon: 20.0,
            radius: 2.0,
            convergence_radius: 1e-2,
            divergence_bound: None,
            x0: vec![0.5, 0.5, 0.5],
            deltas: vec![0.1, 0.5, 1.0],
            epsilons: vec![0.5, 1.0, 2.0],
            samples: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parses and validates; any content problem is a precondition error.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Precondition(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Precondition(m));
        match &self.system {
            SystemConfig::Corollary2 { a, b, l } => {
                Corollary2::new(a.clone(), b.clone(), *l)
                    .map_err(|e| CliError::Precondition(e.to_string()))?;
                for (name, src) in [("a", a), ("b", b)] {
                    parse(src, 3)
                        .map_err(|e| CliError::Precondition(format!("system.{name}: {e}")))?;
                }
            }
            SystemConfig::Custom { f, g, .. } => {
                if f.is_empty() || f.len() != g.len() {
                    return bad(format!(
                        "system.f and system.g must be nonempty and of equal length, got {} and {}",
                        f.len(),
                        g.len()
                    ));
                }
                self.fields()?;
            }
        }
        if !(self.classifier.eps0 > 0.0) || self.classifier.n_max == 0 {
            return bad("classifier.eps0 and classifier.n_max must be positive".into());
        }
        if !(self.classifier.grid.step > 0.0) {
            return bad("classifier.grid.step must be positive".into());
        }
        self.synth
            .params
            .validate()
            .map_err(|e| CliError::Precondition(format!("synth: {e}")))?;
        if !(self.synth.cap > 0.0) {
            return bad("synth.cap must be positive".into());
        }
        let sim = &self.simulation;
        if !(sim.horizon > 0.0 && sim.radius > 0.0 && sim.convergence_radius > 0.0) {
            return bad(
                "simulation.horizon, radius and convergence_radius must be positive".into(),
            );
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.system {
            SystemConfig::Corollary2 { .. } => 3,
            SystemConfig::Custom { f, .. } => f.len(),
        }
    }

    fn fields(&self) -> Result<(VectorField, VectorField, sdstab::symexpr::ScalarField), CliError> {
        let pre = |what: &str, e: String| CliError::Precondition(format!("system.{what}: {e}"));
        match &self.system {
            SystemConfig::Corollary2 { .. } => self
                .corollary2()
                .expect("template")
                .fields()
                .map_err(|e| CliError::Precondition(e.to_string())),
            SystemConfig::Custom { f, g, v } => {
                fn refs(xs: &[String]) -> Vec<&str> {
                    xs.iter().map(String::as_str).collect()
                }
                let f = VectorField::parse(&refs(f)).map_err(|e| pre("f", e.to_string()))?;
                let g = VectorField::parse(&refs(g)).map_err(|e| pre("g", e.to_string()))?;
                let v = parse(v, f.dim()).map_err(|e| pre("V", e.to_string()))?;
                Ok((f, g, v))
            }
        }
    }

    pub fn corollary2(&self) -> Option<Corollary2> {
        match &self.system {
            SystemConfig::Corollary2 { a, b, l } => Some(Corollary2 {
                a: a.clone(),
                b: b.clone(),
                l: *l,
            }),
            SystemConfig::Custom { .. } => None,
        }
    }

    pub fn system(&self, convention: BracketConvention) -> Result<SystemDef, CliError> {
        let (f, g, v) = self.fields()?;
        SystemDef::with_options(
            f,
            g,
            v,
            self.classifier.eps0,
            self.classifier.n_max,
            convention,
        )
        .map_err(|e| CliError::Precondition(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.classifier.grid;
        let n = self.dim();
        let lower = g.lower.clone().unwrap_or_else(|| vec![-g.half_width; n]);
        let upper = g.upper.clone().unwrap_or_else(|| vec![g.half_width; n]);
        if lower.len() != n || upper.len() != n {
            return Err(CliError::Precondition(format!(
                "classifier.grid bounds must have {n} entries"
            )));
        }
        Ok(Grid {
            lower,
            upper,
            step: g.step,
            exclude_radius: g.exclude_radius,
        })
    }

    pub fn loop_params(&self) -> LoopParams {
        let s = &self.simulation;
        let mut p = LoopParams::new(s.partition.clone(), s.horizon, s.radius);
        p.convergence_radius = s.convergence_radius;
        p.divergence_bound = s.divergence_bound;
        p.synth = self.synth.params.clone();
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[system]
template = "corollary2"
a = "2 + sin(x1)"
b = "1 + x2^2"
L = 3

[classifier.grid]
step = 0.5

[synth]
x0 = [1.0, 0.0, 0.0]
rhos = [1.0, 2.0]

[simulation]
partition = { rule = "random", min = 0.1, max = 0.3, seed = 9 }
horizon = 5.0

[output]
format = "json"
"#;

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = ScenarioConfig::from_toml(SAMPLE).unwrap();
        let once = cfg.to_toml();
        let again = ScenarioConfig::from_toml(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), once);
    }

    #[test]
    fn defaults_fill_missing_tables() {
        let cfg =
            ScenarioConfig::from_toml("[system]\ntemplate = \"corollary2\"\nL = 5\n").unwrap();
        assert_eq!(cfg.classifier, ClassifierConfig::default());
        assert_eq!(cfg.output.format, Format::Csv);
        assert_eq!(cfg.corollary2().unwrap().a, "1");
    }

    #[test]
    fn even_exponent_is_a_precondition_error() {
        let err =
            ScenarioConfig::from_toml("[system]\ntemplate = \"corollary2\"\nL = 2\n").unwrap_err();
        assert!(matches!(err, CliError::Precondition(_)), "{err:?}");
    }

    #[test]
    fn custom_system_builds() {
        let cfg = ScenarioConfig::from_toml(
            "[system]\ntemplate = \"custom\"\nf = [\"x2\", \"-x1\"]\ng = [\"0\", \"1\"]\nV = \"x1^2 + x2^2\"\n",
        )
        .unwrap();
        assert_eq!(cfg.dim(), 2);
        assert_eq!(cfg.grid().unwrap().lower, vec![-1.0, -1.0]);
        cfg.system(BracketConvention::Standard).unwrap();
    }

    #[test]
    fn bad_expression_is_rejected() {
        let err = ScenarioConfig::from_toml(
            "[system]\ntemplate = \"custom\"\nf = [\"x2\", \"x3\"]\ng = [\"0\", \"1\"]\nV = \"x1^2\"\n",
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Precondition(_)));
    }
}
