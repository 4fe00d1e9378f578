//! Twin-type definitions.
//!
//! A model document is a small JSON dialect modelled on DTDL interfaces:
//!
//! ```json
//! {
//!   "@id": "dtmi:boltwin:AcmeBolt;1",
//!   "displayName": "ACME Bolt",
//!   "contents": [
//!     { "@type": "Property", "name": "Max_Load", "schema": "float", "unit": "lbf" }
//!   ]
//! }
//! ```
//!
//! Only `Property` entries are supported. Schema names are matched
//! case-insensitively. Unknown envelope keys are logged and ignored.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Conventional file suffix for model documents.
pub const MODEL_FILE_SUFFIX: &str = ".twin.json";

const ENVELOPE_KEYS: [&str; 4] = ["@id", "@context", "displayName", "contents"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("invalid model document: {0}")]
    InvalidDocument(String),
    #[error("unsupported schema `{schema}` for property `{property}`")]
    UnsupportedSchema { property: String, schema: String },
    #[error("unsupported content type `{0}`; only Property entries are accepted")]
    UnsupportedContent(String),
    #[error("duplicate property `{0}`")]
    DuplicateProperty(String),
    #[error("model declares no properties")]
    EmptyModel,
    #[error("property `{property}` expects {expected}, got {found}")]
    KindMismatch {
        property: String,
        expected: ValueKind,
        found: &'static str,
    },
    #[error("property `{0}` received a non-finite float")]
    NonFiniteFloat(String),
}

/// Value kinds a property may declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Float,
    Boolean,
    Integer,
    String,
}

impl ValueKind {
    pub fn parse(schema: &str) -> Option<Self> {
        match schema.to_ascii_lowercase().as_str() {
            "float" | "double" => Some(Self::Float),
            "boolean" => Some(Self::Boolean),
            "integer" => Some(Self::Integer),
            "string" => Some(Self::String),
            _ => None,
        }
    }

    pub fn schema_name(self) -> &'static str {
        match self {
            Self::Float => "float",
            Self::Boolean => "boolean",
            Self::Integer => "integer",
            Self::String => "string",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.schema_name())
    }
}

/// A scalar property value.
///
/// Serialized untagged, so JSON `true`, `3`, `3.5` and `"x"` map onto the
/// four variants directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Boolean(bool),
    Integer(i64),
    Float(f64),
    String(String),
}

impl Scalar {
    pub fn type_name(&self) -> &'static str {
        match self {
            Self::Boolean(_) => "boolean",
            Self::Integer(_) => "integer",
            Self::Float(_) => "float",
            Self::String(_) => "string",
        }
    }

    /// Numeric view; integers widen to `f64`.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Self::Float(v) => Some(v),
            Self::Integer(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Self::Boolean(b) => Some(b),
            _ => None,
        }
    }

    /// Convert a JSON scalar. Arrays, objects and null are rejected.
    pub fn from_json(value: &Value) -> Option<Self> {
        match value {
            Value::Bool(b) => Some(Self::Boolean(*b)),
            Value::Number(n) => n
                .as_i64()
                .map(Self::Integer)
                .or_else(|| n.as_f64().map(Self::Float)),
            Value::String(s) => Some(Self::String(s.clone())),
            _ => None,
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Self::Boolean(v)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Self::Integer(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Self::String(v.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub name: String,
    pub kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl PropertySpec {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> Self {
        Self {
            name: name.into(),
            kind,
            unit: None,
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinModel {
    pub model_id: String,
    pub display_name: String,
    pub properties: Vec<PropertySpec>,
}

impl TwinModel {
    /// Build a model from already-typed parts, enforcing the same invariants
    /// as [`parse_model`].
    pub fn new(
        model_id: impl Into<String>,
        display_name: impl Into<String>,
        properties: Vec<PropertySpec>,
    ) -> Result<Self, ModelError> {
        let model = Self {
            model_id: model_id.into(),
            display_name: display_name.into(),
            properties,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.model_id.is_empty() {
            return Err(ModelError::InvalidDocument("empty @id".into()));
        }
        if self.properties.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        let mut seen = HashSet::new();
        for p in &self.properties {
            if p.name.is_empty() {
                return Err(ModelError::InvalidDocument("property with empty name".into()));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(ModelError::DuplicateProperty(p.name.clone()));
            }
        }
        Ok(())
    }

    pub fn property(&self, name: &str) -> Option<&PropertySpec> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// Render back into the document dialect accepted by [`parse_model`].
    pub fn to_document(&self) -> String {
        let contents: Vec<Value> = self
            .properties
            .iter()
            .map(|p| {
                let mut entry = Map::new();
                entry.insert("@type".into(), Value::from("Property"));
                entry.insert("name".into(), Value::from(p.name.clone()));
                entry.insert("schema".into(), Value::from(p.kind.schema_name()));
                if let Some(unit) = &p.unit {
                    entry.insert("unit".into(), Value::from(unit.clone()));
                }
                Value::Object(entry)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("@id".into(), Value::from(self.model_id.clone()));
        doc.insert("displayName".into(), Value::from(self.display_name.clone()));
        doc.insert("contents".into(), Value::Array(contents));
        serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialize")
    }
}

/// Parse a model document.
pub fn parse_model(document: &str) -> Result<TwinModel, ModelError> {
    let value: Value =
        serde_json::from_str(document).map_err(|e| ModelError::MalformedJson(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ModelError::InvalidDocument("top level must be an object".into()))?;

    for key in obj.keys() {
        if !ENVELOPE_KEYS.contains(&key.as_str()) && !key.starts_with("@") {
            log::warn!("ignoring unrecognized model key `{key}`");
        }
    }

    let model_id = obj
        .get("@id")
        .and_then(Value::as_str)
        .ok_or_else(|| ModelError::InvalidDocument("missing string @id".into()))?;
    let display_name = match obj.get("displayName") {
        None => model_id,
        Some(v) => v
            .as_str()
            .ok_or_else(|| ModelError::InvalidDocument("displayName must be a string".into()))?,
    };
    let contents = obj
        .get("contents")
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::InvalidDocument("missing contents array".into()))?;

    let mut properties = Vec::with_capacity(contents.len());
    for entry in contents {
        properties.push(parse_entry(entry)?);
    }
    TwinModel::new(model_id, display_name, properties)
}

fn parse_entry(entry: &Value) -> Result<PropertySpec, ModelError> {
    let obj = entry
        .as_object()
        .ok_or_else(|| ModelError::InvalidDocument("contents entries must be objects".into()))?;
    let is_property = match obj.get("@type") {
        Some(Value::String(t)) => t == "Property",
        // DTDL allows semantic co-types: ["Property", "Length"].
        Some(Value::Array(types)) => types.iter().any(|t| t == "Property"),
        Some(other) => return Err(ModelError::UnsupportedContent(other.to_string())),
        None => return Err(ModelError::InvalidDocument("content entry without @type".into())),
    };
    if !is_property {
        return Err(ModelError::UnsupportedContent(obj["@type"].to_string()));
    }
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| ModelError::InvalidDocument("property without string name".into()))?;
    let schema = obj.get("schema").and_then(Value::as_str).ok_or_else(|| {
        ModelError::InvalidDocument(format!("property `{name}` has no string schema"))
    })?;
    let kind = ValueKind::parse(schema).ok_or_else(|| ModelError::UnsupportedSchema {
        property: name.to_owned(),
        schema: schema.to_owned(),
    })?;
    let unit = match obj.get("unit") {
        None | Some(Value::Null) => None,
        Some(Value::String(u)) => Some(u.clone()),
        Some(_) => {
            return Err(ModelError::InvalidDocument(format!(
                "unit of `{name}` must be a string"
            )))
        }
    };
    Ok(PropertySpec {
        name: name.to_owned(),
        kind,
        unit,
    })
}

/// Check a value against a property's declared kind.
///
/// Float properties accept integers (widened) but never NaN or infinities.
pub fn validate_value(spec: &PropertySpec, value: &Scalar) -> Result<Scalar, ModelError> {
    let mismatch = || ModelError::KindMismatch {
        property: spec.name.clone(),
        expected: spec.kind,
        found: value.type_name(),
    };
    match (spec.kind, value) {
        (ValueKind::Float, Scalar::Float(v)) => {
            if v.is_finite() {
                Ok(Scalar::Float(*v))
            } else {
                Err(ModelError::NonFiniteFloat(spec.name.clone()))
            }
        }
        (ValueKind::Float, Scalar::Integer(v)) => Ok(Scalar::Float(*v as f64)),
        (ValueKind::Boolean, Scalar::Boolean(b)) => Ok(Scalar::Boolean(*b)),
        (ValueKind::Integer, Scalar::Integer(v)) => Ok(Scalar::Integer(*v)),
        (ValueKind::String, Scalar::String(s)) => Ok(Scalar::String(s.clone())),
        _ => Err(mismatch()),
    }
}
