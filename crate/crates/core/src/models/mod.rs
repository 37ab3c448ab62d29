//! Bundled case-study models, each a pure step function over the world,
//! registered by name with a parameter schema and a color mapping for frame
//! export.

pub mod researchers;
pub mod wolfsheep;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::engine::{EngineError, ParamValue, Params, SimAgent, World};
use crate::vomas::{ModelSchema, Ty};

/// Allowed domain of one model parameter.
#[derive(Debug, Clone, Copy)]
pub enum Domain {
    /// Integer >= the bound.
    IntAtLeast(i64),
    /// Probability in [0, 1].
    Probability,
    /// Real > 0.
    PositiveReal,
    /// Real >= 0.
    NonNegativeReal,
}

impl Domain {
    pub fn describe(&self) -> String {
        match self {
            Domain::IntAtLeast(min) => format!("an integer >= {min}"),
            Domain::Probability => "a probability in [0, 1]".to_string(),
            Domain::PositiveReal => "a real > 0".to_string(),
            Domain::NonNegativeReal => "a real >= 0".to_string(),
        }
    }

    pub fn admits(&self, value: ParamValue) -> bool {
        match self {
            Domain::IntAtLeast(min) => matches!(value, ParamValue::Int(n) if n >= *min),
            Domain::Probability => {
                let x = value.as_f64();
                (0.0..=1.0).contains(&x)
            }
            Domain::PositiveReal => value.as_f64() > 0.0,
            Domain::NonNegativeReal => value.as_f64() >= 0.0,
        }
    }
}

/// One declared parameter: name, default, domain.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: ParamValue,
    pub domain: Domain,
}

/// A registered model.
pub struct ModelDef {
    pub name: &'static str,
    pub params: Vec<ParamSpec>,
    pub init: fn(&mut World) -> Result<(), EngineError>,
    pub step: fn(&mut World) -> Result<(), EngineError>,
    pub color_of: fn(&SimAgent) -> &'static str,
    /// Attribute name -> type, unioned over the model's kinds.
    pub attrs: Vec<(&'static str, Ty)>,
    pub kinds: Vec<&'static str>,
}

impl ModelDef {
    /// Apply defaults, reject unknown names and out-of-domain values.
    pub fn resolve_params(&self, user: &Params) -> Result<Params, EngineError> {
        let mut resolved = Params::new();
        for spec in &self.params {
            resolved.set(spec.name, spec.default);
        }
        for (name, value) in user.iter() {
            let spec = self.params.iter().find(|s| s.name == name).ok_or_else(|| {
                EngineError::Parameter {
                    name: name.clone(),
                    expected: format!("a parameter of model `{}`", self.name),
                    value: value.to_string(),
                }
            })?;
            if !spec.domain.admits(*value) {
                return Err(EngineError::Parameter {
                    name: name.clone(),
                    expected: spec.domain.describe(),
                    value: value.to_string(),
                });
            }
            resolved.set(name, *value);
        }
        Ok(resolved)
    }

    /// Schema used to validate specs before running.
    pub fn schema(&self, width: f64, height: f64) -> ModelSchema {
        ModelSchema {
            attrs: self
                .attrs
                .iter()
                .map(|(name, ty)| (name.to_string(), *ty))
                .collect(),
            kinds: self.kinds.iter().map(|k| k.to_string()).collect(),
            width,
            height,
        }
    }
}

pub struct ModelRegistry {
    models: Vec<ModelDef>,
}

impl ModelRegistry {
    pub fn find(&self, name: &str) -> Option<&ModelDef> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.iter().map(|m| m.name).collect()
    }
}

/// The built-in model registry.
pub fn registry() -> &'static ModelRegistry {
    static REGISTRY: OnceLock<ModelRegistry> = OnceLock::new();
    REGISTRY.get_or_init(|| ModelRegistry {
        models: vec![researchers::model_def(), wolfsheep::model_def()],
    })
}

/// World-geometry parameters shared by every model.
pub fn base_params() -> Vec<ParamSpec> {
    vec![
        ParamSpec {
            name: "width",
            default: ParamValue::Real(50.0),
            domain: Domain::PositiveReal,
        },
        ParamSpec {
            name: "height",
            default: ParamValue::Real(50.0),
            domain: Domain::PositiveReal,
        },
    ]
}

pub(crate) fn attrs_map(agent_attrs: &[(&str, crate::engine::AttrValue)]) -> BTreeMap<String, crate::engine::AttrValue> {
    agent_attrs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}
