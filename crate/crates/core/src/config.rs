//! Run configuration: JSON parsing with field-path errors, dot-path
//! overrides, validation and model/datum construction.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::EngineOptions;
use crate::error::{Error, Result};
use crate::fractional::{StepConfig, MIN_UPDATE_JUMP};
use crate::functionals::DEFAULT_C1;
use crate::model::{CattaneoParams, SourceTerm, State, SystemModel};
use crate::profile::Profile;
use crate::structure::ParityRule;

/// A state given as a number (scalar models) or a vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl StateSpec {
    pub fn to_state(&self) -> State {
        match self {
            StateSpec::Scalar(v) => vec![*v],
            StateSpec::Vector(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    Riemann {
        #[serde(rename = "uL")]
        u_l: StateSpec,
        #[serde(rename = "uR")]
        u_r: StateSpec,
        #[serde(default)]
        x0: f64,
    },
    Staircase {
        positions: Vec<f64>,
        states: Vec<StateSpec>,
    },
    /// A profile CSV in the snapshot format.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    None,
    Relaxation {
        rate: f64,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    ElasticDamping {
        alpha: f64,
    },
    /// The model's own relaxation (Cattaneo).
    Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Characteristic speeds of `linear_diag`.
    pub speeds: Vec<f64>,
    /// Ascending flux coefficients of `scalar_poly`.
    pub coeffs: Vec<f64>,
    pub cattaneo_rho: f64,
    pub cattaneo_a: f64,
    pub cattaneo_b: f64,
    pub cattaneo_n: f64,
    pub cattaneo_gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        let c = CattaneoParams::default();
        Self {
            speeds: vec![1.0, 2.0],
            coeffs: vec![0.0, 0.0, 0.5],
            cattaneo_rho: c.rho,
            cattaneo_a: c.a,
            cattaneo_b: c.b,
            cattaneo_n: c.n,
            cattaneo_gamma: c.gamma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzerOptions {
    pub betas: Vec<f64>,
    pub families: Vec<usize>,
    pub parity: ParityRule,
    /// Half-length of the rarefaction curve scanned for inflection manifolds.
    pub gnl_span: f64,
}

impl Default for AnalyzerOptions {
    fn default() -> Self {
        Self {
            betas: vec![0.2, 0.1, 0.05],
            families: vec![0],
            parity: ParityRule::Either,
            gnl_span: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default)]
    pub model_params: ModelParams,
    #[serde(default = "default_source")]
    pub source: SourceSpec,
    pub datum: DatumSpec,
    pub eps: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub analyzer: AnalyzerOptions,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_delta_bar")]
    pub delta_bar: f64,
    #[serde(default = "default_delta_h")]
    pub delta_h: f64,
    #[serde(default = "default_min_update_jump")]
    pub min_update_jump: f64,
    #[serde(default)]
    pub engine: EngineOptions,
    /// `(eps, tau)` refinements for `sweep`.
    #[serde(default)]
    pub sweep: Vec<(f64, f64)>,
}

fn default_source() -> SourceSpec {
    SourceSpec::None
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_c1() -> f64 {
    DEFAULT_C1
}
fn default_delta_bar() -> f64 {
    0.1
}
fn default_delta_h() -> f64 {
    0.5
}
fn default_min_update_jump() -> f64 {
    MIN_UPDATE_JUMP
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.step_config().validate()?;
        for t in &self.snapshots {
            if !(*t >= 0.0 && *t <= self.t_end) {
                return Err(Error::Constraint(format!(
                    "snapshot time {t} outside [0, {}]",
                    self.t_end
                )));
            }
        }
        if self.analyzer.betas.iter().any(|b| b.is_nan() || *b <= 0.0) {
            return Err(Error::Constraint("analyzer betas must be positive".into()));
        }
        for (e, t) in &self.sweep {
            if !(*t > 0.0 && t <= e) {
                return Err(Error::Constraint(format!(
                    "sweep pair (eps {e}, tau {t}) violates 0 < tau <= eps"
                )));
            }
        }
        Ok(())
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            eps: self.eps,
            tau: self.tau,
            t_end: self.t_end,
            c1: self.c1,
            delta_bar: self.delta_bar,
            delta_h: self.delta_h,
            min_update_jump: self.min_update_jump,
            engine: self.engine.clone(),
        }
    }

    pub fn build_model(&self) -> Result<SystemModel> {
        let p = &self.model_params;
        let cat = CattaneoParams {
            rho: p.cattaneo_rho,
            a: p.cattaneo_a,
            b: p.cattaneo_b,
            n: p.cattaneo_n,
            gamma: p.cattaneo_gamma,
        };
        let model = match self.model.as_str() {
            "burgers" => SystemModel::burgers(),
            "quintic" => SystemModel::quintic(),
            "scalar_poly" => SystemModel::scalar_poly(p.coeffs.clone()),
            "linear_diag" => SystemModel::linear_diag(p.speeds.clone())?,
            "elasticity" => SystemModel::elasticity(0.0),
            "cattaneo" => SystemModel::cattaneo(cat)?,
            other => {
                return Err(Error::Schema {
                    path: "model".into(),
                    message: format!(
                        "unknown model `{other}`, expected one of burgers, quintic, scalar_poly, linear_diag, elasticity, cattaneo"
                    ),
                })
            }
        };
        let source = match &self.source {
            SourceSpec::None => SourceTerm::None,
            SourceSpec::Relaxation { rate } => SourceTerm::Relaxation { rate: *rate },
            SourceSpec::Linear { matrix } => {
                if matrix.len() != model.dim() || matrix.iter().any(|r| r.len() != model.dim()) {
                    return Err(Error::Constraint(format!("source matrix must be {0}x{0}", model.dim())));
                }
                SourceTerm::Linear { matrix: matrix.clone() }
            }
            SourceSpec::ElasticDamping { alpha } => {
                if model.dim() != 2 {
                    return Err(Error::Constraint("elastic damping needs a 2x2 system".into()));
                }
                SourceTerm::ElasticDamping { alpha: *alpha }
            }
            SourceSpec::Model => model.source().clone(),
        };
        Ok(model.with_source(source))
    }

    /// Initial profile; relative file paths resolve against `base`.
    pub fn build_datum(&self, model: &SystemModel, base: &Path) -> Result<Profile> {
        let p = match &self.datum {
            DatumSpec::Riemann { u_l, u_r, x0 } => Profile::riemann(*x0, u_l.to_state(), u_r.to_state()),
            DatumSpec::Staircase { positions, states } => {
                if states.len() != positions.len() + 1 {
                    return Err(Error::Constraint(
                        "staircase needs one more state than positions".into(),
                    ));
                }
                if positions.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Constraint("staircase positions must be ordered".into()));
                }
                Profile::new(positions.clone(), states.iter().map(StateSpec::to_state).collect())
            }
            DatumSpec::File { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                crate::output::read_profile(&full)?
            }
        };
        for u in &p.states {
            if u.len() != model.dim() {
                return Err(Error::Constraint(format!(
                    "datum state {u:?} has dimension {}, model `{}` has {}",
                    u.len(),
                    model.name(),
                    model.dim()
                )));
            }
            model.check_state(u)?;
        }
        Ok(p)
    }
}

/// Sets `path` (dot-separated) in a JSON document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| Error::Schema {
        path: assignment.into(),
        message: "override must look like KEY=VALUE".into(),
    })?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| Error::Schema {
            path: parts[..i].join("."),
            message: "cannot override inside a non-object".into(),
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses and validates a configuration document with overrides applied.
pub fn parse_config(document: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: Value = serde_json::from_str(document).map_err(|e| Error::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model":"burgers","datum":{"kind":"riemann","uL":1,"uR":0},"eps":0.05,"tau":0.05,"T":1}"#;

    #[test]
    fn minimal_config_is_valid() {
        let c = parse_config(MINIMAL, &[]).unwrap();
        assert_eq!(c.model, "burgers");
        assert_eq!(c.c1, 10.0);
        let m = c.build_model().unwrap();
        let p = c.build_datum(&m, Path::new(".")).unwrap();
        assert_eq!(p, Profile::riemann(0.0, vec![1.0], vec![0.0]));
    }

    #[test]
    fn tau_above_eps_is_a_constraint_error() {
        let e = parse_config(MINIMAL, &["tau=0.1".into()]).unwrap_err();
        assert!(matches!(e, Error::Constraint(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_key_names_the_key() {
        let doc = MINIMAL.replace("\"eps\"", "\"epsilonn\"");
        match parse_config(&doc, &[]).unwrap_err() {
            Error::Schema { message, .. } => assert!(message.contains("epsilonn"), "{message}"),
            e => panic!("unexpected {e:?}"),
        }
        match parse_config(MINIMAL, &["engine.tol_evnt=1".into()]).unwrap_err() {
            Error::Schema { path, message } => {
                assert!(path.starts_with("engine"), "{path}");
                assert!(message.contains("tol_evnt"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn effective_config_round_trips() {
        let c = parse_config(
            MINIMAL,
            &["engine.riemann.tol_rp=1e-9".into(), "snapshots=[0.5,1]".into()],
        )
        .unwrap();
        assert_eq!(c.engine.riemann.tol_rp, 1e-9);
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(parse_config(&text, &[]).unwrap(), c);
    }
}
