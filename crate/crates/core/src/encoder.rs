//! Applies a validated mapping to response records.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapping::{ArmKey, Encoding, MappingSpec};
use crate::survey::{Answer, QuestionKind, ResponseRecord, SurveySchema};

/// Saturation used for every palette color, in percent.
pub const PALETTE_SATURATION: f64 = 70.0;
/// Lightness used for every palette color, in percent.
pub const PALETTE_LIGHTNESS: f64 = 50.0;
/// Color of entities whose color question was skipped.
pub const MISSING_COLOR: Hsl = Hsl {
    h: 0.0,
    s: 0.0,
    l: 50.0,
};

/// Hue in degrees `[0, 360)`, saturation and lightness in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsl {
    pub h: f64,
    pub s: f64,
    pub l: f64,
}

impl fmt::Display for Hsl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "hsl({}, {}%, {}%)", self.h, self.s, self.l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("category `{0}` is not in the palette")]
pub struct UnknownCategory(pub String);

/// Evenly spaced hue for `category` among `all_categories`.
///
/// Categories are ranked in lexicographic order (duplicates ignored); the
/// category at rank `i` of `k` gets hue `360 * i / k`.
pub fn palette_color<S: AsRef<str>>(category: &str, all_categories: &[S]) -> Result<Hsl, UnknownCategory> {
    let mut sorted: Vec<&str> = all_categories.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let index = sorted
        .binary_search(&category)
        .map_err(|_| UnknownCategory(category.to_string()))?;
    Ok(hue_color(index, sorted.len()))
}

fn hue_color(index: usize, k: usize) -> Hsl {
    Hsl {
        h: 360.0 * index as f64 / k as f64,
        s: PALETTE_SATURATION,
        l: PALETTE_LIGHTNESS,
    }
}

/// Number of thresholds at or below `v`.
pub fn bin_count(v: f64, thresholds: &[f64]) -> usize {
    thresholds.partition_point(|&t| t <= v)
}

/// Clamped linear map of `v` from `[in_lo, in_hi]` onto `[lo, hi]`.
pub fn scale_linear(v: f64, in_lo: f64, in_hi: f64, lo: f64, hi: f64) -> f64 {
    let t = if in_hi > in_lo {
        ((v - in_lo) / (in_hi - in_lo)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    (lo + t * (hi - lo)).clamp(lo, hi)
}

/// Scale for the level at `rank` among `levels` ordinal levels.
pub fn scale_for_rank(rank: usize, levels: usize, lo: f64, hi: f64) -> f64 {
    scale_linear(rank as f64, 0.0, levels.saturating_sub(1) as f64, lo, hi)
}

/// One respondent's visual realization, before placement.
#[derive(Debug, Clone, PartialEq)]
pub struct GardenEntity {
    pub id: String,
    pub archetype: String,
    pub color: Hsl,
    pub satellites: BTreeMap<String, u32>,
    pub scale: f64,
    pub tooltip: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("record {record}: value `{value}` of question {question} matches no archetype arm and there is no default arm")]
    UnmatchedValue {
        record: String,
        question: String,
        value: String,
    },
    #[error("record {record}: question {question} is missing and there is no default archetype arm")]
    MissingArchetype { record: String, question: String },
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("incompatible kind: {channel} cannot be driven by question {question}")]
    IncompatibleKind { channel: String, question: String },
    #[error("record {record}: answer to {question} does not match its declared kind")]
    BadAnswer { record: String, question: String },
    #[error("no such entity `{0}`")]
    NoSuchEntity(String),
}

enum Compiled<'a> {
    Archetype {
        arms: HashMap<&'a str, &'a str>,
        default: Option<&'a str>,
    },
    Color {
        sorted: Vec<&'a str>,
    },
    Satellites {
        name: &'a str,
        thresholds: &'a [f64],
    },
    Scale {
        lo: f64,
        hi: f64,
        in_lo: f64,
        in_hi: f64,
    },
}

struct Channel<'a> {
    question: &'a str,
    kind: &'a QuestionKind,
    compiled: Compiled<'a>,
}

fn compile<'a>(spec: &'a MappingSpec, schema: &'a SurveySchema) -> Result<Vec<Channel<'a>>, EncodeError> {
    spec.bindings()
        .iter()
        .map(|b| {
            let q = schema
                .question(&b.question)
                .ok_or_else(|| EncodeError::UnknownQuestion(b.question.clone()))?;
            if !crate::mapping::compatible(&b.channel(), &q.kind) {
                return Err(EncodeError::IncompatibleKind {
                    channel: b.channel().to_string(),
                    question: q.name.clone(),
                });
            }
            let compiled = match &b.encoding {
                Encoding::Archetype { arms } => {
                    let mut map = HashMap::new();
                    let mut default = None;
                    for arm in arms {
                        match &arm.key {
                            ArmKey::Value(v) => {
                                map.insert(v.as_str(), arm.archetype.as_str());
                            }
                            ArmKey::Default => default = Some(arm.archetype.as_str()),
                        }
                    }
                    Compiled::Archetype { arms: map, default }
                }
                Encoding::Color { .. } => {
                    let mut sorted: Vec<&str> = q
                        .kind
                        .declared_values()
                        .unwrap_or_default()
                        .iter()
                        .map(String::as_str)
                        .collect();
                    sorted.sort_unstable();
                    sorted.dedup();
                    Compiled::Color { sorted }
                }
                Encoding::Satellites { name, thresholds } => Compiled::Satellites { name, thresholds },
                Encoding::Scale { lo, hi } => {
                    let (in_lo, in_hi) = match &q.kind {
                        QuestionKind::Numeric { lo, hi } => (*lo, *hi),
                        QuestionKind::Ordinal { levels } => (0.0, levels.len().saturating_sub(1) as f64),
                        _ => unreachable!("checked by compatible()"),
                    };
                    Compiled::Scale {
                        lo: *lo,
                        hi: *hi,
                        in_lo,
                        in_hi,
                    }
                }
            };
            Ok(Channel {
                question: &q.name,
                kind: &q.kind,
                compiled,
            })
        })
        .collect()
}

fn numeric_value(record: &ResponseRecord, question: &str, kind: &QuestionKind) -> Result<Option<f64>, EncodeError> {
    let bad = || EncodeError::BadAnswer {
        record: record.id.clone(),
        question: question.to_string(),
    };
    match (record.get(question), kind) {
        (Answer::Missing, _) => Ok(None),
        (Answer::Number(v), QuestionKind::Numeric { .. }) => Ok(Some(*v)),
        (Answer::Level(l), QuestionKind::Ordinal { levels }) => levels
            .iter()
            .position(|x| x == l)
            .map(|r| Some(r as f64))
            .ok_or_else(bad),
        _ => Err(bad()),
    }
}

fn label_value<'r>(record: &'r ResponseRecord, question: &str) -> Result<Option<&'r str>, EncodeError> {
    match record.get(question) {
        Answer::Missing => Ok(None),
        Answer::Category(s) | Answer::Level(s) => Ok(Some(s)),
        _ => Err(EncodeError::BadAnswer {
            record: record.id.clone(),
            question: question.to_string(),
        }),
    }
}

/// Encodes every record into a garden entity, preserving order.
///
/// Skipped questions degrade one channel: satellites fall back to 0, scale to
/// the midpoint of its output range, color to neutral gray. A skipped
/// archetype question needs a `default` arm.
pub fn encode(
    records: &[ResponseRecord],
    spec: &MappingSpec,
    schema: &SurveySchema,
) -> Result<Vec<GardenEntity>, EncodeError> {
    let channels = compile(spec, schema)?;
    records
        .iter()
        .map(|rec| encode_one(rec, &channels, schema))
        .collect()
}

fn encode_one(rec: &ResponseRecord, channels: &[Channel<'_>], schema: &SurveySchema) -> Result<GardenEntity, EncodeError> {
    let mut entity = GardenEntity {
        id: rec.id.clone(),
        archetype: String::new(),
        color: MISSING_COLOR,
        satellites: BTreeMap::new(),
        scale: 1.0,
        tooltip: tooltip_for(rec, schema),
    };
    for ch in channels {
        match &ch.compiled {
            Compiled::Archetype { arms, default } => {
                let value = label_value(rec, ch.question)?;
                let resolved = value.and_then(|v| arms.get(v).copied()).or(*default);
                entity.archetype = match (resolved, value) {
                    (Some(a), _) => a.to_string(),
                    (None, Some(v)) => {
                        return Err(EncodeError::UnmatchedValue {
                            record: rec.id.clone(),
                            question: ch.question.to_string(),
                            value: v.to_string(),
                        })
                    }
                    (None, None) => {
                        return Err(EncodeError::MissingArchetype {
                            record: rec.id.clone(),
                            question: ch.question.to_string(),
                        })
                    }
                };
            }
            Compiled::Color { sorted } => {
                if let Some(v) = label_value(rec, ch.question)? {
                    let index = sorted.binary_search(&v).map_err(|_| EncodeError::BadAnswer {
                        record: rec.id.clone(),
                        question: ch.question.to_string(),
                    })?;
                    entity.color = hue_color(index, sorted.len());
                }
            }
            Compiled::Satellites { name, thresholds } => {
                let count = numeric_value(rec, ch.question, ch.kind)?.map_or(0, |v| bin_count(v, thresholds));
                entity.satellites.insert(name.to_string(), count as u32);
            }
            Compiled::Scale { lo, hi, in_lo, in_hi } => {
                entity.scale = match numeric_value(rec, ch.question, ch.kind)? {
                    Some(v) => scale_linear(v, *in_lo, *in_hi, *lo, *hi),
                    None => lo + (hi - lo) / 2.0,
                };
            }
        }
    }
    Ok(entity)
}

fn tooltip_for(rec: &ResponseRecord, schema: &SurveySchema) -> Vec<(String, String)> {
    schema
        .questions()
        .iter()
        .filter_map(|q| rec.get(&q.name).display().map(|d| (q.name.clone(), d)))
        .collect()
}

/// Tooltip pairs for the record with id `entity_id`, in schema question order.
pub fn tooltip_payload(
    entity_id: &str,
    records: &[ResponseRecord],
    schema: &SurveySchema,
) -> Result<Vec<(String, String)>, EncodeError> {
    records
        .iter()
        .find(|r| r.id == entity_id)
        .map(|r| tooltip_for(r, schema))
        .ok_or_else(|| EncodeError::NoSuchEntity(entity_id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::parse_mapping;
    use crate::survey::parse_schema;

    const MBTI: [&str; 16] = [
        "INTJ", "INTP", "ENTJ", "ENTP", "INFJ", "INFP", "ENFJ", "ENFP", "ISTJ", "ISFJ", "ESTJ", "ESFJ", "ISTP",
        "ISFP", "ESTP", "ESFP",
    ];

    fn schema() -> SurveySchema {
        parse_schema(&format!(
            "question role : categorical {{ student, faculty }}\n\
             question mbti : categorical {{ {} }}\n\
             question outlook : ordinal {{ gloomy < neutral < bright }}\n\
             question plastic_usage : numeric [0, 10]\n\
             question story : text\n",
            MBTI.join(", ")
        ))
        .unwrap()
    }

    fn spec() -> MappingSpec {
        parse_mapping(
            "map archetype by role { student -> flower ; faculty -> tree }\n\
             map color by mbti palette distinct\n\
             map satellites cloud by plastic_usage bins [2, 4, 6]\n\
             map scale by outlook range [0.8, 1.4]\n",
        )
        .unwrap()
    }

    fn rec(id: &str, role: &str) -> ResponseRecord {
        ResponseRecord::new(id).with("role", Answer::Category(role.into()))
    }

    #[test]
    fn palette_examples() {
        assert_eq!(palette_color("a", &["a", "b"]).unwrap().h, 0.0);
        assert_eq!(palette_color("b", &["a", "b"]).unwrap().h, 180.0);
        assert_eq!(palette_color("only", &["only"]).unwrap().h, 0.0);
        let intj = palette_color("INTJ", &MBTI).unwrap();
        assert_eq!(intj, Hsl { h: 225.0, s: 70.0, l: 50.0 });
        assert_eq!(
            palette_color("XXXX", &MBTI).unwrap_err(),
            UnknownCategory("XXXX".into())
        );
    }

    #[test]
    fn faculty_becomes_tree() {
        let e = encode(&[rec("f", "faculty")], &spec(), &schema()).unwrap();
        assert_eq!(e[0].archetype, "tree");
        let e = encode(&[rec("s", "student")], &spec(), &schema()).unwrap();
        assert_eq!(e[0].archetype, "flower");
    }

    #[test]
    fn cloud_counts() {
        let r5 = rec("a", "student").with("plastic_usage", Answer::Number(5.0));
        let r1 = rec("b", "student").with("plastic_usage", Answer::Number(1.0));
        let r6 = rec("c", "student").with("plastic_usage", Answer::Number(6.0));
        let e = encode(&[r5, r1, r6], &spec(), &schema()).unwrap();
        assert_eq!(e[0].satellites, BTreeMap::from([("cloud".to_string(), 2)]));
        assert_eq!(e[1].satellites["cloud"], 0);
        assert_eq!(e[2].satellites["cloud"], 3);
    }

    #[test]
    fn missing_fallbacks() {
        let e = encode(&[rec("a", "student")], &spec(), &schema()).unwrap();
        assert_eq!(e[0].color, MISSING_COLOR);
        assert_eq!(e[0].satellites["cloud"], 0);
        assert!((e[0].scale - 1.1).abs() < 1e-12);
        assert_eq!(e[0].tooltip, vec![("role".to_string(), "student".to_string())]);
    }

    #[test]
    fn no_scale_binding_means_unit_scale() {
        let spec = parse_mapping("map archetype by role { default -> shrub }").unwrap();
        let e = encode(&[ResponseRecord::new("x")], &spec, &schema()).unwrap();
        assert_eq!(e[0].scale, 1.0);
        assert_eq!(e[0].archetype, "shrub");
        assert!(e[0].satellites.is_empty());
    }

    #[test]
    fn archetype_errors() {
        let spec = parse_mapping("map archetype by role { student -> flower }").unwrap();
        let err = encode(&[rec("x", "faculty")], &spec, &schema()).unwrap_err();
        assert_eq!(
            err,
            EncodeError::UnmatchedValue {
                record: "x".into(),
                question: "role".into(),
                value: "faculty".into()
            }
        );
        let err = encode(&[ResponseRecord::new("y")], &spec, &schema()).unwrap_err();
        assert!(matches!(err, EncodeError::MissingArchetype { .. }));
    }

    #[test]
    fn unvalidated_spec_is_rejected() {
        let spec = parse_mapping("map archetype by zodiac { default -> x }").unwrap();
        assert_eq!(
            encode(&[], &spec, &schema()).unwrap_err(),
            EncodeError::UnknownQuestion("zodiac".into())
        );
        let spec = parse_mapping("map archetype by plastic_usage { default -> x }").unwrap();
        assert!(matches!(
            encode(&[], &spec, &schema()).unwrap_err(),
            EncodeError::IncompatibleKind { .. }
        ));
    }

    #[test]
    fn ordinal_scale_and_clamping() {
        let r = rec("a", "student").with("outlook", Answer::Level("bright".into()));
        let e = encode(&[r], &spec(), &schema()).unwrap();
        assert_eq!(e[0].scale, 1.4);
        assert_eq!(scale_linear(-5.0, 0.0, 10.0, 1.0, 2.0), 1.0);
        assert_eq!(scale_linear(50.0, 0.0, 10.0, 1.0, 2.0), 2.0);
        assert_eq!(scale_linear(5.0, 0.0, 10.0, 1.0, 2.0), 1.5);
        assert_eq!(scale_for_rank(0, 1, 1.0, 3.0), 2.0);
    }

    #[test]
    fn tooltip_examples() {
        let s = schema();
        let recs = vec![
            ResponseRecord::new("a")
                .with("mbti", Answer::Category("INTJ".into()))
                .with("role", Answer::Category("student".into())),
            ResponseRecord::new("b").with("role", Answer::Missing),
            ResponseRecord::new("c").with("plastic_usage", Answer::Number(4.56789)),
        ];
        assert_eq!(
            tooltip_payload("a", &recs, &s).unwrap(),
            vec![
                ("role".to_string(), "student".to_string()),
                ("mbti".to_string(), "INTJ".to_string())
            ]
        );
        assert!(tooltip_payload("b", &recs, &s).unwrap().is_empty());
        assert_eq!(
            tooltip_payload("c", &recs, &s).unwrap(),
            vec![("plastic_usage".to_string(), "4.568".to_string())]
        );
        let err = tooltip_payload("zzz", &recs, &s).unwrap_err();
        assert!(err.to_string().contains("no such entity"));
    }

    #[test]
    fn bin_count_matches_definition() {
        let t = [2.0, 4.0, 6.0];
        for i in -20..=100 {
            let v = i as f64 * 0.1;
            let oracle = t.iter().filter(|&&b| v >= b).count();
            assert_eq!(bin_count(v, &t), oracle, "v={v}");
        }
    }
}
