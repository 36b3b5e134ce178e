//! End-to-end build: schema + mapping + responses → scene document.

use thiserror::Error;

use crate::encoder::{encode, EncodeError};
use crate::layout::{organic_layout, Bounds, LayoutError};
use crate::mapping::{derive_legend, parse_mapping, validate_mapping, MappingDiagnostic, MappingError, MappingSpec};
use crate::scene::{assemble_scene, SceneDocument, SceneError, SceneInfo};
use crate::survey::{
    parse_responses, parse_schema, validate_records, DataError, RecordDiagnostic, ResponseRecord, SchemaError,
    SurveySchema,
};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("schema: {0}")]
    Schema(#[from] SchemaError),
    #[error("mapping: {0}")]
    Mapping(#[from] MappingError),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("mapping does not fit the schema: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidMapping(Vec<MappingDiagnostic>),
    #[error("invalid records: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidRecords(Vec<RecordDiagnostic>),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub bounds: Bounds,
    pub min_sep: f64,
    pub seed: u64,
    pub title: String,
    pub generated_from: Vec<String>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            bounds: Bounds::new(40.0, 40.0).expect("positive bounds"),
            min_sep: 1.5,
            seed: 42,
            title: "DataGarden".to_string(),
            generated_from: Vec::new(),
        }
    }
}

/// Parsed inputs of one garden.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub schema: SurveySchema,
    pub spec: MappingSpec,
    pub records: Vec<ResponseRecord>,
}

impl Bundle {
    pub fn parse(schema_text: &str, mapping_text: &str, data_text: &str) -> Result<Self, BuildError> {
        let schema = parse_schema(schema_text)?;
        let spec = parse_mapping(mapping_text)?;
        let records = parse_responses(data_text, &schema)?;
        Ok(Self { schema, spec, records })
    }

    /// Encodes, lays out organically and assembles the scene.
    pub fn build(&self, opts: &BuildOptions) -> Result<SceneDocument, BuildError> {
        let mapping_diags = validate_mapping(&self.spec, &self.schema);
        if !mapping_diags.is_empty() {
            return Err(BuildError::InvalidMapping(mapping_diags));
        }
        let record_diags = validate_records(&self.records, &self.schema);
        if !record_diags.is_empty() {
            return Err(BuildError::InvalidRecords(record_diags));
        }
        let entities = encode(&self.records, &self.spec, &self.schema)?;
        let ids: Vec<&str> = entities.iter().map(|e| e.id.as_str()).collect();
        let layout = organic_layout(&ids, opts.bounds, opts.min_sep, opts.seed)?;
        let legend = derive_legend(&self.spec, &self.schema, &self.records);
        Ok(assemble_scene(
            entities,
            &layout,
            legend,
            opts.bounds,
            self.schema.clone(),
            SceneInfo {
                title: opts.title.clone(),
                generated_from: opts.generated_from.clone(),
            },
        )?)
    }
}
