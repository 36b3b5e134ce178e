//! Python bindings. Built with maturin as the `datagarden` module.
//!
//! Positions cross the boundary as `(x, y, z)` tuples, colors as `(h, s, l)`,
//! and layouts as `{id: position}` dicts. Every core error surfaces as
//! `DataGardenError`, a `ValueError` subclass.

use std::collections::BTreeMap;
use std::fmt::Display;

use datagarden_core::layout::{self, Bounds, LayoutResult, Position, TransitionPlan};
use datagarden_core::mapping::{self, MappingSpec};
use datagarden_core::pipeline::{BuildOptions, Bundle};
use datagarden_core::scene::{self, canonical_string, SceneDocument, SceneEntity};
use datagarden_core::survey::{self, Answer, ResponseRecord, SurveySchema};
use datagarden_core::{encoder, GardenEntity};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(datagarden, DataGardenError, PyValueError);

type Xyz = (f64, f64, f64);
type Hsl = (f64, f64, f64);

fn err(e: impl Display) -> PyErr {
    DataGardenError::new_err(e.to_string())
}

fn xyz(p: &Position) -> Xyz {
    (p[0], p[1], p[2])
}

fn to_py_layout(layout: &LayoutResult) -> BTreeMap<String, Xyz> {
    layout.positions.iter().map(|(id, p)| (id.clone(), xyz(p))).collect()
}

fn from_py_layout(positions: BTreeMap<String, Xyz>) -> LayoutResult {
    LayoutResult {
        positions: positions.into_iter().map(|(id, (x, y, z))| (id, [x, y, z])).collect(),
    }
}

fn hsl(c: &encoder::Hsl) -> Hsl {
    (c.h, c.s, c.l)
}

/// A parsed questionnaire schema.
#[pyclass(frozen, name = "Schema", module = "datagarden")]
pub struct PySchema(pub SurveySchema);

#[pymethods]
impl PySchema {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        survey::parse_schema(text).map(Self).map_err(err)
    }

    /// Question names in declaration order.
    #[getter]
    fn questions(&self) -> Vec<String> {
        self.0.questions().iter().map(|q| q.name.clone()).collect()
    }

    /// `"categorical"`, `"ordinal"`, `"numeric"`, `"text"`, or None.
    fn kind(&self, question: &str) -> Option<&'static str> {
        self.0.question(question).map(|q| q.kind.name())
    }

    /// Declared categories or levels, None for numeric and text questions.
    fn declared_values(&self, question: &str) -> Option<Vec<String>> {
        self.0.question(question)?.kind.declared_values().map(<[String]>::to_vec)
    }

    fn to_json(&self) -> PyResult<String> {
        canonical_string(&self.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.questions().len()
    }

    fn __repr__(&self) -> String {
        format!("Schema({})", self.questions().join(", "))
    }
}

/// A parsed visual mapping.
#[pyclass(frozen, name = "Mapping", module = "datagarden")]
pub struct PyMapping(pub MappingSpec);

#[pymethods]
impl PyMapping {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        mapping::parse_mapping(text).map(Self).map_err(err)
    }

    /// Channel names in declaration order, e.g. `"satellites cloud"`.
    #[getter]
    fn channels(&self) -> Vec<String> {
        self.0.bindings().iter().map(|b| b.channel().to_string()).collect()
    }

    /// Canonical text; parsing it yields an equal mapping.
    fn to_text(&self) -> String {
        mapping::print_mapping(&self.0)
    }

    /// Problems with this mapping against `schema`; empty when compatible.
    fn validate(&self, schema: &PySchema) -> Vec<String> {
        mapping::validate_mapping(&self.0, &schema.0)
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Mapping({})", self.channels().join(", "))
    }
}

fn answer_to_py<'py>(py: Python<'py>, a: &Answer) -> PyResult<Bound<'py, PyAny>> {
    Ok(match a {
        Answer::Missing => py.None().into_bound(py),
        Answer::Number(v) => v.into_pyobject(py)?.into_any(),
        Answer::Category(s) | Answer::Level(s) | Answer::Text(s) => s.into_pyobject(py)?.into_any(),
    })
}

fn record_to_py<'py>(py: Python<'py>, r: &ResponseRecord) -> PyResult<Bound<'py, PyDict>> {
    let answers = PyDict::new(py);
    for (q, a) in &r.values {
        answers.set_item(q, answer_to_py(py, a)?)?;
    }
    let d = PyDict::new(py);
    d.set_item("id", &r.id)?;
    d.set_item("answers", answers)?;
    Ok(d)
}

/// Parses a responses CSV into `[{"id": ..., "answers": {question: value}}]`.
/// Skipped answers are None, numeric answers floats, everything else str.
#[pyfunction]
fn parse_responses<'py>(py: Python<'py>, text: &str, schema: &PySchema) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let records = survey::parse_responses(text, &schema.0).map_err(err)?;
    records.iter().map(|r| record_to_py(py, r)).collect()
}

/// Every problem in a schema/mapping/responses triple, one message each;
/// empty when the triple can be built.
#[pyfunction]
fn validate(schema_text: &str, mapping_text: &str, data_text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let schema = survey::parse_schema(schema_text).map_err(|e| out.push(e.to_string())).ok();
    let spec = mapping::parse_mapping(mapping_text).map_err(|e| out.push(e.to_string())).ok();
    let Some(schema) = schema else { return out };
    if let Some(spec) = &spec {
        out.extend(mapping::validate_mapping(spec, &schema).iter().map(ToString::to_string));
    }
    match survey::parse_responses(data_text, &schema) {
        Ok(records) => out.extend(survey::validate_records(&records, &schema).iter().map(ToString::to_string)),
        Err(e) => out.push(e.to_string()),
    }
    out
}

fn entity_dict<'py>(
    py: Python<'py>,
    e: &GardenEntity,
    position: Option<&Position>,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", &e.id)?;
    d.set_item("archetype", &e.archetype)?;
    d.set_item("color", hsl(&e.color))?;
    d.set_item("satellites", &e.satellites)?;
    d.set_item("scale", e.scale)?;
    d.set_item("tooltip", &e.tooltip)?;
    if let Some(p) = position {
        d.set_item("position", xyz(p))?;
    }
    Ok(d)
}

fn scene_entity_dict<'py>(py: Python<'py>, e: &SceneEntity) -> PyResult<Bound<'py, PyDict>> {
    let g = GardenEntity {
        id: e.id.clone(),
        archetype: e.archetype.clone(),
        color: e.color,
        satellites: e.satellites.clone(),
        scale: e.scale,
        tooltip: e.tooltip.clone(),
    };
    entity_dict(py, &g, Some(&e.position))
}

/// Encodes every response into an unplaced entity dict, in row order.
#[pyfunction]
fn encode<'py>(
    py: Python<'py>,
    schema: &PySchema,
    mapping: &PyMapping,
    data_text: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let records = survey::parse_responses(data_text, &schema.0).map_err(err)?;
    let entities = encoder::encode(&records, &mapping.0, &schema.0).map_err(err)?;
    entities.iter().map(|e| entity_dict(py, e, None)).collect()
}

/// Color assigned to `category` among `categories`.
#[pyfunction]
fn palette_color(category: &str, categories: Vec<String>) -> PyResult<Hsl> {
    encoder::palette_color(category, &categories).map(|c| hsl(&c)).map_err(err)
}

#[pyfunction]
fn smoothstep(t: f64) -> f64 {
    layout::smoothstep(t)
}

/// Seeded random placement with a minimum separation on the ground plane.
#[pyfunction]
#[pyo3(signature = (ids, width, depth, min_sep, seed=42))]
fn organic_layout(ids: Vec<String>, width: f64, depth: f64, min_sep: f64, seed: u64) -> PyResult<BTreeMap<String, Xyz>> {
    let bounds = Bounds::new(width, depth).map_err(err)?;
    layout::organic_layout(&ids, bounds, min_sep, seed)
        .map(|l| to_py_layout(&l))
        .map_err(err)
}

/// Grid blocks of a scene's entities, one block per answer to `group_by`.
#[pyfunction]
#[pyo3(signature = (scene, group_by, spacing=2.0))]
fn grouped_layout(scene: &PyScene, group_by: &str, spacing: f64) -> PyResult<BTreeMap<String, Xyz>> {
    layout::grouped_layout(scene.0.entities(), group_by, scene.0.schema(), spacing)
        .map(|l| to_py_layout(&l))
        .map_err(err)
}

/// A staggered, eased move between two layouts.
#[pyclass(frozen, name = "Transition", module = "datagarden")]
pub struct PyTransition(pub TransitionPlan);

#[pymethods]
impl PyTransition {
    /// Position of `id` at `t` seconds, None for an unknown id.
    fn position_at(&self, id: &str, t: f64) -> Option<Xyz> {
        self.0.position_at(id, t).as_ref().map(xyz)
    }

    #[getter]
    fn total_time(&self) -> f64 {
        self.0.total_time()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.entities.keys().cloned().collect()
    }

    fn to_json(&self) -> PyResult<String> {
        canonical_string(&self.0).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (start, end, duration=1.5, stagger=0.01))]
fn plan_transition(
    start: BTreeMap<String, Xyz>,
    end: BTreeMap<String, Xyz>,
    duration: f64,
    stagger: f64,
) -> PyResult<PyTransition> {
    layout::plan_transition(&from_py_layout(start), &from_py_layout(end), duration, stagger)
        .map(PyTransition)
        .map_err(err)
}

/// An immutable scene document.
#[pyclass(frozen, name = "Scene", module = "datagarden")]
pub struct PyScene(pub SceneDocument);

#[pymethods]
impl PyScene {
    /// Validates, encodes, lays out and assembles a scene from the three documents.
    #[staticmethod]
    #[pyo3(signature = (schema_text, mapping_text, data_text, *, width=40.0, depth=40.0, min_sep=1.5, seed=42, title="DataGarden".to_string(), generated_from=Vec::new()))]
    #[allow(clippy::too_many_arguments)]
    fn build(
        schema_text: &str,
        mapping_text: &str,
        data_text: &str,
        width: f64,
        depth: f64,
        min_sep: f64,
        seed: u64,
        title: String,
        generated_from: Vec<String>,
    ) -> PyResult<Self> {
        let opts = BuildOptions {
            bounds: Bounds::new(width, depth).map_err(err)?,
            min_sep,
            seed,
            title,
            generated_from,
        };
        Bundle::parse(schema_text, mapping_text, data_text)
            .and_then(|b| b.build(&opts))
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        scene::parse_scene(text).map(Self).map_err(err)
    }

    /// Canonical serialization; byte-stable across parse and re-serialize.
    fn to_json(&self) -> String {
        scene::serialize_scene(&self.0)
    }

    fn legend_json(&self) -> PyResult<String> {
        canonical_string(self.0.legend()).map_err(err)
    }

    #[getter]
    fn version(&self) -> &str {
        self.0.version()
    }

    #[getter]
    fn title(&self) -> &str {
        &self.0.meta().title
    }

    /// `(width, depth)`.
    #[getter]
    fn bounds(&self) -> (f64, f64) {
        (self.0.bounds().width(), self.0.bounds().depth())
    }

    #[getter]
    fn schema(&self) -> PySchema {
        PySchema(self.0.schema().clone())
    }

    /// Entity ids in sorted order.
    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.entities().iter().map(|e| e.id.clone()).collect()
    }

    fn entity<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Option<Bound<'py, PyDict>>> {
        self.0.entity(id).map(|e| scene_entity_dict(py, e)).transpose()
    }

    fn positions(&self) -> BTreeMap<String, Xyz> {
        to_py_layout(&self.0.layout())
    }

    fn __len__(&self) -> usize {
        self.0.entities().len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Scene({:?}, {} entities)", self.0.meta().title, self.0.entities().len())
    }
}

#[pymodule]
pub fn datagarden(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DataGardenError", m.py().get_type::<DataGardenError>())?;
    m.add("SCENE_VERSION", scene::SCENE_VERSION)?;
    m.add_class::<PySchema>()?;
    m.add_class::<PyMapping>()?;
    m.add_class::<PyScene>()?;
    m.add_class::<PyTransition>()?;
    m.add_function(wrap_pyfunction!(parse_responses, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(palette_color, m)?)?;
    m.add_function(wrap_pyfunction!(smoothstep, m)?)?;
    m.add_function(wrap_pyfunction!(organic_layout, m)?)?;
    m.add_function(wrap_pyfunction!(grouped_layout, m)?)?;
    m.add_function(wrap_pyfunction!(plan_transition, m)?)?;
    Ok(())
}
