//! Ground-plane placement of garden entities.
//!
//! Two layouts are provided: an organic scatter with a guaranteed minimum
//! separation, and an axis-aligned grid that partitions entities by the answer
//! to one categorical or ordinal question. [`plan_transition`] describes the
//! animated move between any two layouts of the same entities.
//!
//! Positions are `[x, y, z]` with `y = 0`; the ground plane is x/z.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::GardenEntity;
use crate::survey::{Answer, QuestionKind, ResponseRecord, SurveySchema};

/// Consecutive rejected candidates after which organic placement gives up.
pub const MAX_CONSECUTIVE_REJECTIONS: u32 = 1000;

pub type Position = [f64; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("bounds must be positive and finite, got {width}x{depth}")]
    InvalidBounds { width: f64, depth: f64 },
    #[error("minimum separation must be positive and finite, got {0}")]
    InvalidSeparation(f64),
    #[error("spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("capacity exceeded: placed {placed} of {requested} entities before {MAX_CONSECUTIVE_REJECTIONS} consecutive rejections")]
    Capacity { requested: usize, placed: usize },
    #[error("duplicate entity id `{0}`")]
    DuplicateId(String),
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("question {question} is not groupable: {kind} questions cannot partition entities")]
    NotGroupable { question: String, kind: &'static str },
    #[error("transition endpoints cover different entities (e.g. `{0}`)")]
    MismatchedEntities(String),
    #[error("transition duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("transition stagger must be non-negative and finite, got {0}")]
    InvalidStagger(f64),
}

/// Axis-aligned ground rectangle `[0, width] x [0, depth]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundsRepr", into = "BoundsRepr")]
pub struct Bounds {
    width: f64,
    depth: f64,
}

#[derive(Serialize, Deserialize)]
struct BoundsRepr {
    width: f64,
    depth: f64,
}

impl TryFrom<BoundsRepr> for Bounds {
    type Error = LayoutError;

    fn try_from(r: BoundsRepr) -> Result<Self, LayoutError> {
        Bounds::new(r.width, r.depth)
    }
}

impl From<Bounds> for BoundsRepr {
    fn from(b: Bounds) -> Self {
        BoundsRepr {
            width: b.width,
            depth: b.depth,
        }
    }
}

impl Bounds {
    pub fn new(width: f64, depth: f64) -> Result<Self, LayoutError> {
        if width > 0.0 && depth > 0.0 && width.is_finite() && depth.is_finite() {
            Ok(Self { width, depth })
        } else {
            Err(LayoutError::InvalidBounds { width, depth })
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p[0]) && p[1] == 0.0 && (0.0..=self.depth).contains(&p[2])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayoutResult {
    pub positions: BTreeMap<String, Position>,
}

impl LayoutResult {
    pub fn get(&self, id: &str) -> Option<&Position> {
        self.positions.get(id)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Ground-plane distance between two positions.
pub fn ground_distance(a: &Position, b: &Position) -> f64 {
    let dx = a[0] - b[0];
    let dz = a[2] - b[2];
    (dx * dx + dz * dz).sqrt()
}

/// Seeded dart throwing.
///
/// Candidates are drawn uniformly from the bounds with a ChaCha8 generator
/// seeded from `seed` (`ChaCha8Rng::seed_from_u64`), x first then z. A
/// candidate closer than `min_sep` to an accepted point is rejected; after
/// [`MAX_CONSECUTIVE_REJECTIONS`] rejections in a row the layout fails with
/// [`LayoutError::Capacity`]. Accepted points are assigned to `entity_ids` in
/// order.
pub fn organic_layout<S: AsRef<str>>(
    entity_ids: &[S],
    bounds: Bounds,
    min_sep: f64,
    seed: u64,
) -> Result<LayoutResult, LayoutError> {
    if !(min_sep > 0.0 && min_sep.is_finite()) {
        return Err(LayoutError::InvalidSeparation(min_sep));
    }
    let mut seen = HashSet::new();
    for id in entity_ids {
        if !seen.insert(id.as_ref()) {
            return Err(LayoutError::DuplicateId(id.as_ref().to_string()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Cells are min_sep wide, so any conflicting point lies in the 3x3 block.
    let cell_of = |p: &Position| ((p[0] / min_sep).floor() as i64, (p[2] / min_sep).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut accepted: Vec<Position> = Vec::with_capacity(entity_ids.len());
    let mut rejections = 0;

    while accepted.len() < entity_ids.len() {
        let x = rng.random::<f64>() * bounds.width;
        let z = rng.random::<f64>() * bounds.depth;
        let candidate = [x, 0.0, z];
        let (cx, cz) = cell_of(&candidate);
        let conflict = (cx - 1..=cx + 1).any(|i| {
            (cz - 1..=cz + 1).any(|j| {
                grid.get(&(i, j)).is_some_and(|members| {
                    members
                        .iter()
                        .any(|&m| ground_distance(&accepted[m], &candidate) < min_sep)
                })
            })
        });
        if conflict {
            rejections += 1;
            if rejections >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(LayoutError::Capacity {
                    requested: entity_ids.len(),
                    placed: accepted.len(),
                });
            }
            continue;
        }
        rejections = 0;
        grid.entry((cx, cz)).or_default().push(accepted.len());
        accepted.push(candidate);
    }

    Ok(LayoutResult {
        positions: entity_ids
            .iter()
            .map(|id| id.as_ref().to_string())
            .zip(accepted)
            .collect(),
    })
}

/// Something that can be placed by a grouped layout.
pub trait Groupable {
    fn entity_id(&self) -> &str;
    /// The categorical or ordinal answer to `question`, if given.
    fn group_value(&self, question: &str) -> Option<&str>;
}

impl Groupable for ResponseRecord {
    fn entity_id(&self) -> &str {
        &self.id
    }

    fn group_value(&self, question: &str) -> Option<&str> {
        match self.get(question) {
            Answer::Category(s) | Answer::Level(s) => Some(s),
            _ => None,
        }
    }
}

fn tooltip_value<'a>(tooltip: &'a [(String, String)], question: &str) -> Option<&'a str> {
    tooltip
        .iter()
        .find(|(q, _)| q == question)
        .map(|(_, v)| v.as_str())
}

/// Tooltips carry categorical and ordinal answers verbatim.
impl Groupable for GardenEntity {
    fn entity_id(&self) -> &str {
        &self.id
    }

    fn group_value(&self, question: &str) -> Option<&str> {
        tooltip_value(&self.tooltip, question)
    }
}

impl Groupable for crate::scene::SceneEntity {
    fn entity_id(&self) -> &str {
        &self.id
    }

    fn group_value(&self, question: &str) -> Option<&str> {
        tooltip_value(&self.tooltip, question)
    }
}

/// Smallest `c` with `c * c >= n`.
fn ceil_sqrt(n: usize) -> usize {
    let mut c = (n as f64).sqrt() as usize;
    while c * c < n {
        c += 1;
    }
    while c > 0 && (c - 1) * (c - 1) >= n {
        c -= 1;
    }
    c
}

/// A group's value (None for the trailing group) and its member ids.
pub type Group = (Option<String>, Vec<String>);

/// Groups of entity ids in block order: declared values first (declaration or
/// level order), then one trailing group for missing or undeclared answers.
/// Empty groups are dropped. Members are sorted by id.
pub fn group_members<G: Groupable>(
    entities: &[G],
    group_question: &str,
    schema: &SurveySchema,
) -> Result<Vec<Group>, LayoutError> {
    let q = schema
        .question(group_question)
        .ok_or_else(|| LayoutError::UnknownQuestion(group_question.to_string()))?;
    let declared = match &q.kind {
        QuestionKind::Categorical { values } => values,
        QuestionKind::Ordinal { levels } => levels,
        other => {
            return Err(LayoutError::NotGroupable {
                question: q.name.clone(),
                kind: other.name(),
            })
        }
    };
    let mut groups: Vec<(Option<String>, Vec<String>)> =
        declared.iter().map(|v| (Some(v.clone()), Vec::new())).collect();
    groups.push((None, Vec::new()));
    let mut seen = HashSet::new();
    for e in entities {
        let id = e.entity_id();
        if !seen.insert(id) {
            return Err(LayoutError::DuplicateId(id.to_string()));
        }
        let slot = e
            .group_value(group_question)
            .and_then(|v| declared.iter().position(|d| d == v))
            .unwrap_or(declared.len());
        groups[slot].1.push(id.to_string());
    }
    groups.retain(|(_, members)| !members.is_empty());
    for (_, members) in &mut groups {
        members.sort();
    }
    Ok(groups)
}

/// Axis-aligned grouped grid.
///
/// Blocks run left to right along x. A block of `n` members has
/// `cols = ceil(sqrt(n))`; member `m` sits at column `m % cols`, row
/// `m / cols`. Consecutive blocks are separated by `2 * spacing`.
pub fn grouped_layout<G: Groupable>(
    entities: &[G],
    group_question: &str,
    schema: &SurveySchema,
    spacing: f64,
) -> Result<LayoutResult, LayoutError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(LayoutError::InvalidSpacing(spacing));
    }
    let groups = group_members(entities, group_question, schema)?;
    let mut positions = BTreeMap::new();
    let mut offset = 0.0;
    for (_, members) in &groups {
        let cols = ceil_sqrt(members.len());
        for (m, id) in members.iter().enumerate() {
            let col = (m % cols) as f64;
            let row = (m / cols) as f64;
            positions.insert(id.clone(), [offset + col * spacing, 0.0, row * spacing]);
        }
        offset += (cols - 1) as f64 * spacing + 2.0 * spacing;
    }
    Ok(LayoutResult { positions })
}

/// Easing polynomial `3t² − 2t³`, clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Easing {
    Smoothstep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionStep {
    pub start: Position,
    pub end: Position,
    pub delay: f64,
    pub duration: f64,
}

impl TransitionStep {
    pub fn position_at(&self, t: f64) -> Position {
        if t >= self.delay + self.duration {
            return self.end;
        }
        if t <= self.delay {
            return self.start;
        }
        let s = smoothstep((t - self.delay) / self.duration);
        std::array::from_fn(|i| self.start[i] + s * (self.end[i] - self.start[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPlan {
    pub easing: Easing,
    pub entities: BTreeMap<String, TransitionStep>,
}

impl TransitionPlan {
    pub fn position_at(&self, id: &str, t: f64) -> Option<Position> {
        self.entities.get(id).map(|s| s.position_at(t))
    }

    /// Time at which every entity has arrived.
    pub fn total_time(&self) -> f64 {
        self.entities
            .values()
            .map(|s| s.delay + s.duration)
            .fold(0.0, f64::max)
    }
}

/// Plans a staggered move from `from` to `to`. Entity `i` in lexicographic id
/// order starts after `stagger * i` seconds.
pub fn plan_transition(
    from: &LayoutResult,
    to: &LayoutResult,
    duration: f64,
    stagger: f64,
) -> Result<TransitionPlan, LayoutError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(LayoutError::InvalidDuration(duration));
    }
    if !(stagger >= 0.0 && stagger.is_finite()) {
        return Err(LayoutError::InvalidStagger(stagger));
    }
    if let Some(id) = from
        .positions
        .keys()
        .find(|k| !to.positions.contains_key(*k))
        .or_else(|| to.positions.keys().find(|k| !from.positions.contains_key(*k)))
    {
        return Err(LayoutError::MismatchedEntities(id.clone()));
    }
    let entities = from
        .positions
        .iter()
        .enumerate()
        .map(|(rank, (id, start))| {
            (
                id.clone(),
                TransitionStep {
                    start: *start,
                    end: to.positions[id],
                    delay: stagger * rank as f64,
                    duration,
                },
            )
        })
        .collect();
    Ok(TransitionPlan {
        easing: Easing::Smoothstep,
        entities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::parse_schema;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    fn schema() -> SurveySchema {
        parse_schema(
            "question g : categorical { A, B, C }\n\
             question lvl : ordinal { lo < hi }\n\
             question age : numeric [0, 99]\n\
             question note : text",
        )
        .unwrap()
    }

    fn member(id: &str, g: &str) -> ResponseRecord {
        ResponseRecord::new(id).with("g", Answer::Category(g.into()))
    }

    #[test]
    fn organic_empty() {
        let b = Bounds::new(10.0, 10.0).unwrap();
        assert!(organic_layout::<String>(&[], b, 1.0, 0).unwrap().is_empty());
    }

    #[test]
    fn organic_is_deterministic() {
        let b = Bounds::new(40.0, 40.0).unwrap();
        let a = organic_layout(&ids(100), b, 1.5, 7).unwrap();
        let c = organic_layout(&ids(100), b, 1.5, 7).unwrap();
        assert_eq!(a, c);
        let d = organic_layout(&ids(100), b, 1.5, 8).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn organic_200_pairwise_oracle() {
        let b = Bounds::new(40.0, 40.0).unwrap();
        let layout = organic_layout(&ids(200), b, 1.5, 42).unwrap();
        let pts: Vec<&Position> = layout.positions.values().collect();
        assert_eq!(pts.len(), 200);
        for i in 0..pts.len() {
            assert!(b.contains(pts[i]));
            for j in i + 1..pts.len() {
                let d = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][2] - pts[j][2]).powi(2)).sqrt();
                assert!(d >= 1.5, "pair {i},{j} at {d}");
            }
        }
    }

    #[test]
    fn organic_capacity_error() {
        let b = Bounds::new(40.0, 40.0).unwrap();
        match organic_layout(&ids(100), b, 30.0, 42).unwrap_err() {
            LayoutError::Capacity { requested, placed } => {
                assert_eq!(requested, 100);
                assert!((1..10).contains(&placed), "placed {placed}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn organic_rejects_bad_input() {
        let b = Bounds::new(4.0, 4.0).unwrap();
        assert!(matches!(
            organic_layout(&ids(1), b, 0.0, 1).unwrap_err(),
            LayoutError::InvalidSeparation(_)
        ));
        assert!(matches!(
            organic_layout(&["a", "a"], b, 1.0, 1).unwrap_err(),
            LayoutError::DuplicateId(_)
        ));
        assert!(Bounds::new(0.0, 1.0).is_err());
        assert!(Bounds::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn grouped_hand_example() {
        let ents = vec![member("a1", "A"), member("b1", "B"), member("a3", "A"), member("a2", "A")];
        let layout = grouped_layout(&ents, "g", &schema(), 2.0).unwrap();
        assert_eq!(layout.get("a1"), Some(&[0.0, 0.0, 0.0]));
        assert_eq!(layout.get("a2"), Some(&[2.0, 0.0, 0.0]));
        assert_eq!(layout.get("a3"), Some(&[0.0, 0.0, 2.0]));
        assert_eq!(layout.get("b1"), Some(&[6.0, 0.0, 0.0]));
    }

    #[test]
    fn grouped_single() {
        let layout = grouped_layout(&[member("x", "C")], "g", &schema(), 3.0).unwrap();
        assert_eq!(layout.get("x"), Some(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn grouped_rejects_numeric_and_text() {
        let err = grouped_layout(&[member("x", "A")], "age", &schema(), 2.0).unwrap_err();
        assert!(err.to_string().contains("not groupable"));
        assert!(matches!(
            grouped_layout(&[member("x", "A")], "note", &schema(), 2.0).unwrap_err(),
            LayoutError::NotGroupable { .. }
        ));
        assert!(matches!(
            grouped_layout(&[member("x", "A")], "nope", &schema(), 2.0).unwrap_err(),
            LayoutError::UnknownQuestion(_)
        ));
        assert!(matches!(
            grouped_layout(&[member("x", "A")], "g", &schema(), 0.0).unwrap_err(),
            LayoutError::InvalidSpacing(_)
        ));
    }

    #[test]
    fn grouped_missing_goes_last_and_ordinal_uses_level_order() {
        let ents = vec![
            ResponseRecord::new("m"),
            ResponseRecord::new("h").with("lvl", Answer::Level("hi".into())),
            ResponseRecord::new("l").with("lvl", Answer::Level("lo".into())),
        ];
        let groups = group_members(&ents, "lvl", &schema()).unwrap();
        let order: Vec<Option<&str>> = groups.iter().map(|(v, _)| v.as_deref()).collect();
        assert_eq!(order, vec![Some("lo"), Some("hi"), None]);
        let layout = grouped_layout(&ents, "lvl", &schema(), 1.0).unwrap();
        assert_eq!(layout.get("l").unwrap()[0], 0.0);
        assert_eq!(layout.get("h").unwrap()[0], 2.0);
        assert_eq!(layout.get("m").unwrap()[0], 4.0);
    }

    #[test]
    fn ceil_sqrt_values() {
        let expect = [0, 1, 2, 2, 2, 3, 3, 3, 3, 3, 4];
        for (n, c) in expect.iter().enumerate() {
            assert_eq!(ceil_sqrt(n), *c, "n={n}");
        }
        assert_eq!(ceil_sqrt(1_000_000), 1000);
        assert_eq!(ceil_sqrt(1_000_001), 1001);
    }

    #[test]
    fn smoothstep_values() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
        assert_eq!(smoothstep(0.25), 0.15625);
    }

    fn two_layouts() -> (LayoutResult, LayoutResult) {
        let from = LayoutResult {
            positions: BTreeMap::from([
                ("b".to_string(), [0.0, 0.0, 0.0]),
                ("a".to_string(), [4.0, 0.0, 4.0]),
            ]),
        };
        let to = LayoutResult {
            positions: BTreeMap::from([
                ("a".to_string(), [0.0, 0.0, 0.0]),
                ("b".to_string(), [8.0, 0.0, 0.0]),
            ]),
        };
        (from, to)
    }

    #[test]
    fn transition_interpolation() {
        let (from, to) = two_layouts();
        let plan = plan_transition(&from, &to, 2.0, 0.5).unwrap();
        assert_eq!(plan.entities["a"].delay, 0.0);
        assert_eq!(plan.entities["b"].delay, 0.5);
        assert_eq!(plan.position_at("b", 0.0), Some([0.0, 0.0, 0.0]));
        assert_eq!(plan.position_at("b", 0.5), Some([0.0, 0.0, 0.0]));
        assert_eq!(plan.position_at("b", 1.5), Some([4.0, 0.0, 0.0]));
        assert_eq!(plan.position_at("b", 1.0), Some([8.0 * 0.15625, 0.0, 0.0]));
        assert_eq!(plan.position_at("b", 2.5), Some([8.0, 0.0, 0.0]));
        assert_eq!(plan.position_at("a", 100.0), Some([0.0, 0.0, 0.0]));
        assert_eq!(plan.total_time(), 2.5);
        assert_eq!(plan.position_at("zz", 0.0), None);
    }

    #[test]
    fn transition_errors() {
        let (from, mut to) = two_layouts();
        assert!(matches!(
            plan_transition(&from, &to, 0.0, 0.0).unwrap_err(),
            LayoutError::InvalidDuration(_)
        ));
        assert!(matches!(
            plan_transition(&from, &to, 1.0, -1.0).unwrap_err(),
            LayoutError::InvalidStagger(_)
        ));
        to.positions.remove("b");
        to.positions.insert("c".into(), [0.0; 3]);
        assert!(matches!(
            plan_transition(&from, &to, 1.0, 0.0).unwrap_err(),
            LayoutError::MismatchedEntities(_)
        ));
    }

    #[test]
    fn transition_json_shape() {
        let (from, to) = two_layouts();
        let plan = plan_transition(&from, &to, 1.5, 0.01).unwrap();
        let v = serde_json::to_value(&plan).unwrap();
        assert_eq!(v["easing"], "smoothstep");
        assert_eq!(v["entities"]["b"]["end"], serde_json::json!([8.0, 0.0, 0.0]));
        let back: TransitionPlan = serde_json::from_value(v).unwrap();
        assert_eq!(back, plan);
    }
}
