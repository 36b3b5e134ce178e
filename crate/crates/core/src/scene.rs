//! Versioned scene document and its canonical JSON form.
//!
//! Canonical JSON has object keys sorted at every level, no insignificant
//! whitespace and numbers in shortest round-trip form, so equal documents
//! always serialize to equal bytes.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::encoder::{GardenEntity, Hsl};
use crate::layout::{Bounds, LayoutResult, Position};
use crate::mapping::Legend;
use crate::survey::SurveySchema;

pub const SCENE_VERSION: &str = "datagarden-scene/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("entity `{0}` has no position in the layout")]
    MissingPosition(String),
    #[error("duplicate entity id `{0}`")]
    DuplicateId(String),
    #[error("entity `{0}` has a non-finite number")]
    NonFinite(String),
    #[error("malformed scene JSON: {0}")]
    Malformed(String),
    #[error("unsupported version `{0}` (expected `{SCENE_VERSION}`)")]
    UnsupportedVersion(String),
    #[error("count mismatch: meta.entity_count is {declared} but the scene has {actual} entities")]
    CountMismatch { declared: u64, actual: usize },
}

/// A positioned garden entity as stored in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntity {
    pub id: String,
    pub archetype: String,
    pub position: Position,
    pub color: Hsl,
    pub satellites: BTreeMap<String, u32>,
    pub scale: f64,
    pub tooltip: Vec<(String, String)>,
}

impl SceneEntity {
    pub fn new(entity: GardenEntity, position: Position) -> Self {
        Self {
            id: entity.id,
            archetype: entity.archetype,
            position,
            color: entity.color,
            satellites: entity.satellites,
            scale: entity.scale,
            tooltip: entity.tooltip,
        }
    }

    fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.scale.is_finite()
            && [self.color.h, self.color.s, self.color.l].iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub title: String,
    pub entity_count: u64,
    pub generated_from: Vec<String>,
}

/// Immutable scene: entities sorted by id, each with a position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneDocument {
    version: String,
    bounds: Bounds,
    entities: Vec<SceneEntity>,
    legend: Legend,
    meta: SceneMeta,
    schema: SurveySchema,
}

#[derive(Deserialize)]
struct RawScene {
    version: String,
    bounds: Bounds,
    entities: Vec<SceneEntity>,
    legend: Legend,
    meta: SceneMeta,
    schema: SurveySchema,
}

impl SceneDocument {
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn entities(&self) -> &[SceneEntity] {
        &self.entities
    }

    pub fn legend(&self) -> &Legend {
        &self.legend
    }

    pub fn meta(&self) -> &SceneMeta {
        &self.meta
    }

    pub fn schema(&self) -> &SurveySchema {
        &self.schema
    }

    pub fn entity(&self, id: &str) -> Option<&SceneEntity> {
        self.entities
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entities[i])
    }

    /// Current entity positions as a layout.
    pub fn layout(&self) -> LayoutResult {
        LayoutResult {
            positions: self
                .entities
                .iter()
                .map(|e| (e.id.clone(), e.position))
                .collect(),
        }
    }

    fn checked(mut entities: Vec<SceneEntity>) -> Result<Vec<SceneEntity>, SceneError> {
        let mut ids = HashSet::new();
        for e in &entities {
            if !ids.insert(e.id.as_str()) {
                return Err(SceneError::DuplicateId(e.id.clone()));
            }
            if !e.is_finite() {
                return Err(SceneError::NonFinite(e.id.clone()));
            }
        }
        entities.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(entities)
    }
}

/// Title and provenance recorded in the scene metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneInfo {
    pub title: String,
    pub generated_from: Vec<String>,
}

pub fn assemble_scene(
    entities: Vec<GardenEntity>,
    layout: &LayoutResult,
    legend: Legend,
    bounds: Bounds,
    schema: SurveySchema,
    info: SceneInfo,
) -> Result<SceneDocument, SceneError> {
    let placed = entities
        .into_iter()
        .map(|e| {
            let pos = *layout
                .get(&e.id)
                .ok_or_else(|| SceneError::MissingPosition(e.id.clone()))?;
            Ok(SceneEntity::new(e, pos))
        })
        .collect::<Result<Vec<_>, SceneError>>()?;
    let entities = SceneDocument::checked(placed)?;
    Ok(SceneDocument {
        version: SCENE_VERSION.to_string(),
        bounds,
        meta: SceneMeta {
            title: info.title,
            entity_count: entities.len() as u64,
            generated_from: info.generated_from,
        },
        entities,
        legend,
        schema,
    })
}

/// Writes `value` as canonical JSON.
pub fn to_canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null | Value::Bool(_) | Value::Number(_) => out.push_str(&value.to_string()),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
    }
}

/// Serializes any value through the canonical writer.
pub fn canonical_string<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    Ok(to_canonical_json(&serde_json::to_value(value)?))
}

pub fn serialize_scene(doc: &SceneDocument) -> String {
    canonical_string(doc).expect("scene documents contain only finite numbers and string keys")
}

pub fn parse_scene(text: &str) -> Result<SceneDocument, SceneError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
    match value.get("version") {
        Some(Value::String(v)) if v == SCENE_VERSION => {}
        Some(Value::String(v)) => return Err(SceneError::UnsupportedVersion(v.clone())),
        _ => return Err(SceneError::Malformed("missing string field `version`".into())),
    }
    let raw: RawScene = serde_json::from_value(value).map_err(|e| SceneError::Malformed(e.to_string()))?;
    if raw.meta.entity_count != raw.entities.len() as u64 {
        return Err(SceneError::CountMismatch {
            declared: raw.meta.entity_count,
            actual: raw.entities.len(),
        });
    }
    Ok(SceneDocument {
        version: raw.version,
        bounds: raw.bounds,
        entities: SceneDocument::checked(raw.entities)?,
        legend: raw.legend,
        meta: raw.meta,
        schema: raw.schema,
    })
}
