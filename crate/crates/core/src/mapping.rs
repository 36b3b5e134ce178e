//! Declarative visual mapping: the binding language, its validation against a
//! survey schema, and legend derivation.
//!
//! ```text
//! map archetype by role { student -> flower ; faculty -> tree }
//! map color by mbti palette distinct
//! map satellites cloud by plastic_usage bins [2, 4, 6]
//! map scale by outlook range [0.8, 1.4]
//! ```

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{bin_count, palette_color, Hsl};
use crate::lex::{Pos, SyntaxError, Tok, TokenStream};
use crate::survey::{Answer, QuestionKind, ResponseRecord, SurveySchema};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ArmKey {
    Value(String),
    Default,
}

impl fmt::Display for ArmKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmKey::Value(v) => f.write_str(v),
            ArmKey::Default => f.write_str("default"),
        }
    }
}

/// `value -> archetype` case of an archetype binding.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub key: ArmKey,
    pub archetype: String,
}

impl Arm {
    pub fn new(key: ArmKey, archetype: impl Into<String>) -> Self {
        Self {
            key,
            archetype: archetype.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaletteMode {
    Distinct,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoding {
    Archetype { arms: Vec<Arm> },
    Color { palette: PaletteMode },
    Satellites { name: String, thresholds: Vec<f64> },
    Scale { lo: f64, hi: f64 },
}

/// Identity of a visual channel; a spec binds each identity at most once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChannelId {
    Archetype,
    Color,
    Scale,
    Satellites(String),
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelId::Archetype => f.write_str("archetype"),
            ChannelId::Color => f.write_str("color"),
            ChannelId::Scale => f.write_str("scale"),
            ChannelId::Satellites(name) => write!(f, "satellites {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBinding {
    pub question: String,
    pub encoding: Encoding,
}

impl ChannelBinding {
    pub fn new(question: impl Into<String>, encoding: Encoding) -> Self {
        Self {
            question: question.into(),
            encoding,
        }
    }

    pub fn channel(&self) -> ChannelId {
        match &self.encoding {
            Encoding::Archetype { .. } => ChannelId::Archetype,
            Encoding::Color { .. } => ChannelId::Color,
            Encoding::Scale { .. } => ChannelId::Scale,
            Encoding::Satellites { name, .. } => ChannelId::Satellites(name.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("duplicate channel `{channel}`")]
    DuplicateChannel { channel: String, pos: Option<Pos> },
    #[error("missing archetype binding")]
    MissingArchetype,
    #[error("thresholds not ascending: [{}]", join_numbers(thresholds))]
    ThresholdsNotAscending {
        thresholds: Vec<f64>,
        pos: Option<Pos>,
    },
    #[error("scale output range must satisfy 0 < a < b, got [{lo}, {hi}]")]
    BadScaleRange { lo: f64, hi: f64, pos: Option<Pos> },
    #[error("archetype arm `{key}` appears more than once")]
    DuplicateArm { key: String, pos: Option<Pos> },
    #[error("archetype binding has no arms")]
    NoArms { pos: Option<Pos> },
}

fn join_numbers(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

impl MappingError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            MappingError::Syntax(e) => Some(e.pos),
            MappingError::MissingArchetype => None,
            MappingError::DuplicateChannel { pos, .. }
            | MappingError::ThresholdsNotAscending { pos, .. }
            | MappingError::BadScaleRange { pos, .. }
            | MappingError::DuplicateArm { pos, .. }
            | MappingError::NoArms { pos } => *pos,
        }
    }
}

fn check_binding(b: &ChannelBinding, pos: Option<Pos>) -> Result<(), MappingError> {
    match &b.encoding {
        Encoding::Archetype { arms } => {
            if arms.is_empty() {
                return Err(MappingError::NoArms { pos });
            }
            let mut keys = HashSet::new();
            for arm in arms {
                if !keys.insert(&arm.key) {
                    return Err(MappingError::DuplicateArm {
                        key: arm.key.to_string(),
                        pos,
                    });
                }
            }
        }
        Encoding::Satellites { thresholds, .. } => {
            let ascending = thresholds.windows(2).all(|w| w[0] < w[1]);
            if thresholds.is_empty() || !ascending || thresholds.iter().any(|t| !t.is_finite()) {
                return Err(MappingError::ThresholdsNotAscending {
                    thresholds: thresholds.clone(),
                    pos,
                });
            }
        }
        Encoding::Scale { lo, hi } => {
            if !(*lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(MappingError::BadScaleRange {
                    lo: *lo,
                    hi: *hi,
                    pos,
                });
            }
        }
        Encoding::Color { .. } => {}
    }
    Ok(())
}

/// Validated list of channel bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingSpec {
    bindings: Vec<ChannelBinding>,
}

impl MappingSpec {
    pub fn new(bindings: Vec<ChannelBinding>) -> Result<Self, MappingError> {
        Self::with_positions(bindings.into_iter().map(|b| (b, None)).collect())
    }

    fn with_positions(bindings: Vec<(ChannelBinding, Option<Pos>)>) -> Result<Self, MappingError> {
        let mut seen = HashSet::new();
        for (b, pos) in &bindings {
            check_binding(b, *pos)?;
            let channel = b.channel();
            if !seen.insert(channel.clone()) {
                return Err(MappingError::DuplicateChannel {
                    channel: channel.to_string(),
                    pos: *pos,
                });
            }
        }
        if !seen.contains(&ChannelId::Archetype) {
            return Err(MappingError::MissingArchetype);
        }
        Ok(Self {
            bindings: bindings.into_iter().map(|(b, _)| b).collect(),
        })
    }

    pub fn bindings(&self) -> &[ChannelBinding] {
        &self.bindings
    }

    pub fn archetype(&self) -> &ChannelBinding {
        self.bindings
            .iter()
            .find(|b| matches!(b.encoding, Encoding::Archetype { .. }))
            .expect("validated spec has an archetype binding")
    }
}

/// Parses a mapping document.
pub fn parse_mapping(text: &str) -> Result<MappingSpec, MappingError> {
    parse_mapping_with_lines(text).map(|(spec, _)| spec)
}

/// Like [`parse_mapping`], also returning the source line of each binding.
pub fn parse_mapping_with_lines(text: &str) -> Result<(MappingSpec, Vec<usize>), MappingError> {
    let mut ts = TokenStream::new(text)?;
    let mut bindings = Vec::new();
    while !ts.at_eof() {
        let pos = ts.keyword("map")?;
        bindings.push((parse_binding(&mut ts)?, Some(pos)));
    }
    let lines = bindings
        .iter()
        .map(|(_, p): &(ChannelBinding, Option<Pos>)| p.map_or(0, |p| p.line))
        .collect();
    Ok((MappingSpec::with_positions(bindings)?, lines))
}

enum ChannelTag {
    Archetype,
    Color,
    Scale,
    Satellites(String),
}

fn parse_binding(ts: &mut TokenStream) -> Result<ChannelBinding, MappingError> {
    let (channel, pos) = ts.ident()?;
    let tag = match channel.as_str() {
        "archetype" => ChannelTag::Archetype,
        "color" => ChannelTag::Color,
        "scale" => ChannelTag::Scale,
        "satellites" => ChannelTag::Satellites(ts.ident()?.0),
        other => {
            return Err(SyntaxError::new(
                pos,
                format!("unknown channel `{other}` (expected archetype, color, scale or satellites)"),
            )
            .into())
        }
    };
    ts.keyword("by")?;
    let (question, _) = ts.ident()?;
    let encoding = match tag {
        ChannelTag::Archetype => {
            ts.expect(Tok::LBrace)?;
            let mut arms = vec![parse_arm(ts)?];
            while ts.eat(&Tok::Semi) {
                if ts.peek().tok == Tok::RBrace {
                    break;
                }
                arms.push(parse_arm(ts)?);
            }
            ts.expect(Tok::RBrace)?;
            Encoding::Archetype { arms }
        }
        ChannelTag::Color => {
            ts.keyword("palette")?;
            ts.keyword("distinct")?;
            Encoding::Color {
                palette: PaletteMode::Distinct,
            }
        }
        ChannelTag::Satellites(name) => {
            ts.keyword("bins")?;
            ts.expect(Tok::LBracket)?;
            let mut thresholds = vec![ts.number()?.0];
            while ts.eat(&Tok::Comma) {
                thresholds.push(ts.number()?.0);
            }
            ts.expect(Tok::RBracket)?;
            Encoding::Satellites { name, thresholds }
        }
        ChannelTag::Scale => {
            ts.keyword("range")?;
            ts.expect(Tok::LBracket)?;
            let (lo, _) = ts.number()?;
            ts.expect(Tok::Comma)?;
            let (hi, _) = ts.number()?;
            ts.expect(Tok::RBracket)?;
            Encoding::Scale { lo, hi }
        }
    };
    Ok(ChannelBinding { question, encoding })
}

fn parse_arm(ts: &mut TokenStream) -> Result<Arm, MappingError> {
    let (key, _) = ts.ident()?;
    ts.expect(Tok::Arrow)?;
    let (archetype, _) = ts.ident()?;
    let key = if key == "default" {
        ArmKey::Default
    } else {
        ArmKey::Value(key)
    };
    Ok(Arm { key, archetype })
}

/// Prints a spec in canonical text form; [`parse_mapping`] reads it back unchanged.
pub fn print_mapping(spec: &MappingSpec) -> String {
    let mut out = String::new();
    for b in spec.bindings() {
        let _ = match &b.encoding {
            Encoding::Archetype { arms } => {
                let arms: Vec<String> = arms
                    .iter()
                    .map(|a| format!("{} -> {}", a.key, a.archetype))
                    .collect();
                writeln!(out, "map archetype by {} {{ {} }}", b.question, arms.join(" ; "))
            }
            Encoding::Color { .. } => writeln!(out, "map color by {} palette distinct", b.question),
            Encoding::Satellites { name, thresholds } => {
                writeln!(
                    out,
                    "map satellites {name} by {} bins [{}]",
                    b.question,
                    join_numbers(thresholds)
                )
            }
            Encoding::Scale { lo, hi } => {
                writeln!(out, "map scale by {} range [{lo}, {hi}]", b.question)
            }
        };
    }
    out
}

/// Problem found when checking a spec against a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingDiagnostic {
    /// Index into [`MappingSpec::bindings`].
    pub binding: usize,
    pub channel: String,
    pub question: String,
    pub reason: String,
}

impl fmt::Display for MappingDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} by {}: {}", self.channel, self.question, self.reason)
    }
}

/// Whether a channel can be driven by a question of the given kind.
pub fn compatible(channel: &ChannelId, kind: &QuestionKind) -> bool {
    match channel {
        ChannelId::Archetype | ChannelId::Color => matches!(
            kind,
            QuestionKind::Categorical { .. } | QuestionKind::Ordinal { .. }
        ),
        ChannelId::Satellites(_) | ChannelId::Scale => matches!(
            kind,
            QuestionKind::Numeric { .. } | QuestionKind::Ordinal { .. }
        ),
    }
}

pub fn validate_mapping(spec: &MappingSpec, schema: &SurveySchema) -> Vec<MappingDiagnostic> {
    let mut out = Vec::new();
    for (i, b) in spec.bindings().iter().enumerate() {
        let channel = b.channel();
        let mut push = |reason: String| {
            out.push(MappingDiagnostic {
                binding: i,
                channel: channel.to_string(),
                question: b.question.clone(),
                reason,
            })
        };
        let Some(q) = schema.question(&b.question) else {
            push(format!("unknown question {}", b.question));
            continue;
        };
        if !compatible(&channel, &q.kind) {
            push(format!(
                "incompatible kind: {} cannot be driven by {} question {}",
                channel,
                q.kind.name(),
                q.name
            ));
            continue;
        }
        if let Encoding::Archetype { arms } = &b.encoding {
            let declared = q.kind.declared_values().unwrap_or_default();
            for arm in arms {
                if let ArmKey::Value(v) = &arm.key {
                    if !declared.contains(v) {
                        push(format!("arm value {v} is not declared for question {}", q.name));
                    }
                }
            }
            if !arms.iter().any(|a| a.key == ArmKey::Default) {
                let uncovered: Vec<&str> = declared
                    .iter()
                    .filter(|v| !arms.iter().any(|a| a.key == ArmKey::Value((*v).clone())))
                    .map(String::as_str)
                    .collect();
                if !uncovered.is_empty() {
                    push(format!(
                        "archetype arms do not cover {} and there is no default arm",
                        uncovered.join(", ")
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendItem {
    /// Input value, arm key or value range, e.g. `student`, `[2, 4)`.
    pub input: String,
    /// Human-readable visual value, e.g. `flower`, `hsl(225, 70%, 50%)`.
    pub visual: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Hsl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satellites: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Number of respondents that fall under this item.
    pub respondents: u64,
}

impl LegendItem {
    fn new(input: impl Into<String>, visual: impl Into<String>, respondents: u64) -> Self {
        Self {
            input: input.into(),
            visual: visual.into(),
            color: None,
            satellites: None,
            scale: None,
            respondents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub channel: String,
    pub question: String,
    pub items: Vec<LegendItem>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Legend {
    pub entries: Vec<LegendEntry>,
}

/// Builds one legend entry per binding. Categorical items enumerate the
/// declared categories, whether or not any respondent chose them.
///
/// Expects `validate_mapping(spec, schema)` to be empty; bindings that do not
/// resolve against the schema produce entries without items.
pub fn derive_legend(spec: &MappingSpec, schema: &SurveySchema, records: &[ResponseRecord]) -> Legend {
    let entries = spec
        .bindings()
        .iter()
        .map(|b| {
            let items = schema
                .question(&b.question)
                .map(|q| legend_items(b, &q.kind, records))
                .unwrap_or_default();
            LegendEntry {
                channel: b.channel().to_string(),
                question: b.question.clone(),
                items,
            }
        })
        .collect();
    Legend { entries }
}

fn answer_value(a: &Answer, kind: &QuestionKind) -> Option<f64> {
    match (a, kind) {
        (Answer::Number(v), _) => Some(*v),
        (Answer::Level(l), QuestionKind::Ordinal { levels }) => {
            levels.iter().position(|x| x == l).map(|r| r as f64)
        }
        _ => None,
    }
}

fn answer_label(a: &Answer) -> Option<&str> {
    match a {
        Answer::Category(s) | Answer::Level(s) => Some(s),
        _ => None,
    }
}

fn legend_items(b: &ChannelBinding, kind: &QuestionKind, records: &[ResponseRecord]) -> Vec<LegendItem> {
    let answers: Vec<&Answer> = records.iter().map(|r| r.get(&b.question)).collect();
    let count_label = |v: &str| answers.iter().filter(|a| answer_label(a) == Some(v)).count() as u64;
    match &b.encoding {
        Encoding::Archetype { arms } => arms
            .iter()
            .map(|arm| {
                let n = match &arm.key {
                    ArmKey::Value(v) => count_label(v),
                    ArmKey::Default => answers
                        .iter()
                        .filter(|a| {
                            let label = answer_label(a);
                            !arms.iter().any(|x| match (&x.key, label) {
                                (ArmKey::Value(v), Some(l)) => v == l,
                                _ => false,
                            })
                        })
                        .count() as u64,
                };
                LegendItem::new(arm.key.to_string(), &arm.archetype, n)
            })
            .collect(),
        Encoding::Color { .. } => {
            let declared = kind.declared_values().unwrap_or_default();
            declared
                .iter()
                .filter_map(|v| {
                    let hsl = palette_color(v, declared).ok()?;
                    let mut item = LegendItem::new(v.clone(), hsl.to_string(), count_label(v));
                    item.color = Some(hsl);
                    Some(item)
                })
                .collect()
        }
        Encoding::Satellites { name, thresholds } => {
            let values: Vec<f64> = answers.iter().filter_map(|a| answer_value(a, kind)).collect();
            let missing = answers.len() - values.len();
            (0..=thresholds.len())
                .map(|k| {
                    let input = if k == 0 {
                        format!("< {}", thresholds[0])
                    } else if k == thresholds.len() {
                        format!(">= {}", thresholds[k - 1])
                    } else {
                        format!("[{}, {})", thresholds[k - 1], thresholds[k])
                    };
                    let mut n = values.iter().filter(|v| bin_count(**v, thresholds) == k).count();
                    if k == 0 {
                        n += missing;
                    }
                    let mut item = LegendItem::new(input, format!("{k} {name}"), n as u64);
                    item.satellites = Some(k as u32);
                    item
                })
                .collect()
        }
        Encoding::Scale { lo, hi } => match kind {
            QuestionKind::Ordinal { levels } => levels
                .iter()
                .enumerate()
                .map(|(rank, level)| {
                    let s = crate::encoder::scale_for_rank(rank, levels.len(), *lo, *hi);
                    let mut item = LegendItem::new(level.clone(), format!("scale {s}"), count_label(level));
                    item.scale = Some(s);
                    item
                })
                .collect(),
            QuestionKind::Numeric { lo: qlo, hi: qhi } => {
                let n = answers.iter().filter(|a| !a.is_missing()).count() as u64;
                vec![LegendItem::new(
                    format!("[{qlo}, {qhi}]"),
                    format!("scale [{lo}, {hi}]"),
                    n,
                )]
            }
            _ => Vec::new(),
        },
    }
}
