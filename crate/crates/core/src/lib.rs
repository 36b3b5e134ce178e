//! Turns questionnaire responses into a garden scene.
//!
//! The pipeline runs survey ingestion ([`survey`]), visual mapping
//! ([`mapping`]), per-respondent encoding ([`encoder`]), placement
//! ([`layout`]) and finally assembles a canonical [`scene`] document.
//! [`pipeline`] chains these steps for the common case.

pub mod encoder;
pub mod layout;
pub mod lex;
pub mod mapping;
pub mod pipeline;
pub mod scene;
pub mod survey;

pub use encoder::{encode, palette_color, tooltip_payload, EncodeError, GardenEntity, Hsl};
pub use layout::{
    grouped_layout, organic_layout, plan_transition, smoothstep, Bounds, LayoutError, LayoutResult, Position,
    TransitionPlan,
};
pub use mapping::{derive_legend, parse_mapping, validate_mapping, Legend, MappingError, MappingSpec};
pub use scene::{assemble_scene, parse_scene, serialize_scene, SceneDocument, SceneError, SCENE_VERSION};
pub use survey::{
    parse_responses, parse_schema, validate_records, Answer, DataError, ResponseRecord, SchemaError,
    SurveySchema,
};
