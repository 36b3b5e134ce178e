//! Questionnaire schema and response ingestion.
//!
//! A schema document declares the questions; the responses arrive as a CSV
//! export with a header row whose columns name those questions (plus an
//! optional `id` column).

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lex::{Pos, SyntaxError, Tok, TokenStream};

/// Column name that carries respondent identifiers.
pub const ID_COLUMN: &str = "id";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuestionKind {
    Categorical { values: Vec<String> },
    Ordinal { levels: Vec<String> },
    Numeric { lo: f64, hi: f64 },
    Text,
}

impl QuestionKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuestionKind::Categorical { .. } => "categorical",
            QuestionKind::Ordinal { .. } => "ordinal",
            QuestionKind::Numeric { .. } => "numeric",
            QuestionKind::Text => "text",
        }
    }

    /// Declared values in declaration order, for categorical and ordinal kinds.
    pub fn declared_values(&self) -> Option<&[String]> {
        match self {
            QuestionKind::Categorical { values } => Some(values),
            QuestionKind::Ordinal { levels } => Some(levels),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub name: String,
    #[serde(flatten)]
    pub kind: QuestionKind,
}

impl Question {
    pub fn new(name: impl Into<String>, kind: QuestionKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    /// 0-based rank of an ordinal level.
    pub fn level_rank(&self, level: &str) -> Option<usize> {
        match &self.kind {
            QuestionKind::Ordinal { levels } => levels.iter().position(|l| l == level),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("no questions declared")]
    NoQuestions,
    #[error("duplicate question name `{name}`")]
    DuplicateQuestion { name: String, pos: Option<Pos> },
    #[error("question name `{name}` is reserved for the respondent id column")]
    ReservedName { name: String, pos: Option<Pos> },
    #[error("empty value list for question `{name}`")]
    EmptyValueList { name: String, pos: Option<Pos> },
    #[error("duplicate value `{value}` in question `{name}`")]
    DuplicateValue {
        name: String,
        value: String,
        pos: Option<Pos>,
    },
    #[error("numeric range inverted for question `{name}`: [{lo}, {hi}]")]
    InvertedRange {
        name: String,
        lo: f64,
        hi: f64,
        pos: Option<Pos>,
    },
}

impl SchemaError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            SchemaError::Syntax(e) => Some(e.pos),
            SchemaError::NoQuestions => None,
            SchemaError::DuplicateQuestion { pos, .. }
            | SchemaError::ReservedName { pos, .. }
            | SchemaError::EmptyValueList { pos, .. }
            | SchemaError::DuplicateValue { pos, .. }
            | SchemaError::InvertedRange { pos, .. } => *pos,
        }
    }
}

/// Ordered, validated set of questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct SurveySchema {
    questions: Vec<Question>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    questions: Vec<Question>,
}

impl TryFrom<SchemaRepr> for SurveySchema {
    type Error = SchemaError;

    fn try_from(r: SchemaRepr) -> Result<Self, SchemaError> {
        SurveySchema::new(r.questions)
    }
}

impl From<SurveySchema> for SchemaRepr {
    fn from(s: SurveySchema) -> Self {
        SchemaRepr {
            questions: s.questions,
        }
    }
}

fn check_question(q: &Question, pos: Option<Pos>) -> Result<(), SchemaError> {
    if q.name == ID_COLUMN {
        return Err(SchemaError::ReservedName {
            name: q.name.clone(),
            pos,
        });
    }
    match &q.kind {
        QuestionKind::Categorical { values: list } | QuestionKind::Ordinal { levels: list } => {
            if list.is_empty() {
                return Err(SchemaError::EmptyValueList {
                    name: q.name.clone(),
                    pos,
                });
            }
            let mut seen = HashSet::new();
            for v in list {
                if !seen.insert(v.as_str()) {
                    return Err(SchemaError::DuplicateValue {
                        name: q.name.clone(),
                        value: v.clone(),
                        pos,
                    });
                }
            }
        }
        QuestionKind::Numeric { lo, hi } => {
            if lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less) {
                return Err(SchemaError::InvertedRange {
                    name: q.name.clone(),
                    lo: *lo,
                    hi: *hi,
                    pos,
                });
            }
        }
        QuestionKind::Text => {}
    }
    Ok(())
}

impl SurveySchema {
    pub fn new(questions: Vec<Question>) -> Result<Self, SchemaError> {
        Self::with_positions(questions.into_iter().map(|q| (q, None)).collect())
    }

    fn with_positions(questions: Vec<(Question, Option<Pos>)>) -> Result<Self, SchemaError> {
        if questions.is_empty() {
            return Err(SchemaError::NoQuestions);
        }
        let mut names = HashSet::new();
        for (q, pos) in &questions {
            if !names.insert(q.name.clone()) {
                return Err(SchemaError::DuplicateQuestion {
                    name: q.name.clone(),
                    pos: *pos,
                });
            }
            check_question(q, *pos)?;
        }
        Ok(Self {
            questions: questions.into_iter().map(|(q, _)| q).collect(),
        })
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn question(&self, name: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.name == name)
    }
}

/// Parses a schema document.
///
/// ```text
/// question role : categorical { student, faculty }
/// question outlook : ordinal { gloomy < neutral < bright }
/// question plastic_usage : numeric [0, 10]
/// question story : text
/// ```
pub fn parse_schema(text: &str) -> Result<SurveySchema, SchemaError> {
    let mut ts = TokenStream::new(text)?;
    let mut questions = Vec::new();
    while !ts.at_eof() {
        let kw_pos = ts.keyword("question")?;
        let (name, _) = ts.ident()?;
        ts.expect(Tok::Colon)?;
        let (kind_name, kind_pos) = ts.ident()?;
        let kind = match kind_name.as_str() {
            "categorical" => QuestionKind::Categorical {
                values: parse_value_list(&mut ts, &name, kw_pos, Tok::Comma)?,
            },
            "ordinal" => QuestionKind::Ordinal {
                levels: parse_value_list(&mut ts, &name, kw_pos, Tok::Lt)?,
            },
            "numeric" => {
                ts.expect(Tok::LBracket)?;
                let (lo, _) = ts.number()?;
                ts.expect(Tok::Comma)?;
                let (hi, _) = ts.number()?;
                ts.expect(Tok::RBracket)?;
                QuestionKind::Numeric { lo, hi }
            }
            "text" => QuestionKind::Text,
            other => {
                return Err(SyntaxError::new(
                    kind_pos,
                    format!("unknown question kind `{other}` (expected categorical, ordinal, numeric or text)"),
                )
                .into())
            }
        };
        questions.push((Question { name, kind }, Some(kw_pos)));
    }
    SurveySchema::with_positions(questions)
}

fn parse_value_list(
    ts: &mut TokenStream,
    question: &str,
    pos: Pos,
    sep: Tok,
) -> Result<Vec<String>, SchemaError> {
    ts.expect(Tok::LBrace)?;
    if ts.eat(&Tok::RBrace) {
        return Err(SchemaError::EmptyValueList {
            name: question.to_string(),
            pos: Some(pos),
        });
    }
    let mut values = vec![ts.ident()?.0];
    while ts.eat(&sep) {
        values.push(ts.ident()?.0);
    }
    ts.expect(Tok::RBrace)?;
    Ok(values)
}

/// One typed cell of a response.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Missing,
    Category(String),
    Level(String),
    Number(f64),
    Text(String),
}

impl Answer {
    pub fn is_missing(&self) -> bool {
        matches!(self, Answer::Missing)
    }

    /// Display form used in tooltips; `None` for missing answers.
    pub fn display(&self) -> Option<String> {
        match self {
            Answer::Missing => None,
            Answer::Category(s) | Answer::Level(s) | Answer::Text(s) => Some(s.clone()),
            Answer::Number(v) => Some(format_number(*v)),
        }
    }
}

/// Renders a number with at most three decimals, trailing zeros dropped.
pub fn format_number(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s.as_str()
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseRecord {
    pub id: String,
    pub values: BTreeMap<String, Answer>,
}

impl ResponseRecord {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, question: impl Into<String>, answer: Answer) -> Self {
        self.values.insert(question.into(), answer);
        self
    }

    /// Answer for `question`; absent keys read as missing.
    pub fn get(&self, question: &str) -> &Answer {
        self.values.get(question).unwrap_or(&Answer::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("line {line}: malformed CSV: {message}")]
    Csv { line: u64, message: String },
    #[error("unknown column `{column}`")]
    UnknownColumn { column: String },
    #[error("duplicate column `{column}`")]
    DuplicateColumn { column: String },
    #[error("row {row}, column \"{column}\": value `{value}` not in declared set")]
    NotInDeclaredSet {
        row: usize,
        column: String,
        value: String,
        line: u64,
    },
    #[error("row {row}, column \"{column}\": value {value} out of range [{lo}, {hi}]")]
    OutOfRange {
        row: usize,
        column: String,
        value: String,
        lo: f64,
        hi: f64,
        line: u64,
    },
    #[error("row {row}, column \"{column}\": cannot parse `{value}` as a number")]
    Unparseable {
        row: usize,
        column: String,
        value: String,
        line: u64,
    },
}

impl DataError {
    pub fn line(&self) -> u64 {
        match self {
            DataError::Csv { line, .. }
            | DataError::NotInDeclaredSet { line, .. }
            | DataError::OutOfRange { line, .. }
            | DataError::Unparseable { line, .. } => *line,
            DataError::UnknownColumn { .. } | DataError::DuplicateColumn { .. } => 1,
        }
    }
}

fn csv_error(e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line());
    DataError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Parses the CSV export into typed records, one per data row, in file order.
pub fn parse_responses(text: &str, schema: &SurveySchema) -> Result<Vec<ResponseRecord>, DataError> {
    Ok(parse_responses_with_lines(text, schema)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

/// Like [`parse_responses`], also returning the 1-based source line of each row.
pub fn parse_responses_with_lines(
    text: &str,
    schema: &SurveySchema,
) -> Result<Vec<(ResponseRecord, u64)>, DataError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashSet::new();
    let mut columns = Vec::with_capacity(header.len());
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(DataError::DuplicateColumn {
                column: name.clone(),
            });
        }
        if name == ID_COLUMN {
            columns.push(None);
        } else {
            let q = schema.question(name).ok_or_else(|| DataError::UnknownColumn {
                column: name.clone(),
            })?;
            columns.push(Some(q));
        }
    }

    let mut out = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut record = ResponseRecord::new(format!("r{row}"));
        for (cell, column) in rec.iter().zip(&columns) {
            match column {
                None => {
                    if !cell.is_empty() {
                        record.id = cell.to_string();
                    }
                }
                Some(q) => {
                    let answer = parse_cell(cell, q, row, line)?;
                    record.values.insert(q.name.clone(), answer);
                }
            }
        }
        out.push((record, line));
    }
    Ok(out)
}

fn parse_cell(cell: &str, q: &Question, row: usize, line: u64) -> Result<Answer, DataError> {
    if cell.is_empty() {
        return Ok(Answer::Missing);
    }
    let not_declared = || DataError::NotInDeclaredSet {
        row,
        column: q.name.clone(),
        value: cell.to_string(),
        line,
    };
    match &q.kind {
        QuestionKind::Categorical { values } => values
            .iter()
            .any(|v| v == cell)
            .then(|| Answer::Category(cell.to_string()))
            .ok_or_else(not_declared),
        QuestionKind::Ordinal { levels } => levels
            .iter()
            .any(|v| v == cell)
            .then(|| Answer::Level(cell.to_string()))
            .ok_or_else(not_declared),
        QuestionKind::Numeric { lo, hi } => {
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::Unparseable {
                    row,
                    column: q.name.clone(),
                    value: cell.to_string(),
                    line,
                })?;
            if v < *lo || v > *hi {
                return Err(DataError::OutOfRange {
                    row,
                    column: q.name.clone(),
                    value: cell.to_string(),
                    lo: *lo,
                    hi: *hi,
                    line,
                });
            }
            Ok(Answer::Number(v))
        }
        QuestionKind::Text => Ok(Answer::Text(cell.to_string())),
    }
}

/// Problem found in a response record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDiagnostic {
    /// Position of the record in the validated list.
    pub index: usize,
    pub record: String,
    pub question: Option<String>,
    pub reason: String,
}

impl fmt::Display for RecordDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.question {
            Some(q) => write!(f, "record {}, question {}: {}", self.record, q, self.reason),
            None => write!(f, "record {}: {}", self.record, self.reason),
        }
    }
}

pub fn validate_records(records: &[ResponseRecord], schema: &SurveySchema) -> Vec<RecordDiagnostic> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (index, rec) in records.iter().enumerate() {
        let diag = |question: Option<&str>, reason: String| RecordDiagnostic {
            index,
            record: rec.id.clone(),
            question: question.map(str::to_string),
            reason,
        };
        if !ids.insert(rec.id.as_str()) {
            out.push(diag(None, "duplicate id".into()));
        }
        for (name, answer) in &rec.values {
            let Some(q) = schema.question(name) else {
                out.push(diag(Some(name), "unknown question".into()));
                continue;
            };
            if let Some(reason) = answer_problem(answer, &q.kind) {
                out.push(diag(Some(name), reason));
            }
        }
    }
    out
}

fn answer_problem(answer: &Answer, kind: &QuestionKind) -> Option<String> {
    match (answer, kind) {
        (Answer::Missing, _) => None,
        (Answer::Category(v), QuestionKind::Categorical { values })
        | (Answer::Level(v), QuestionKind::Ordinal { levels: values }) => (!values.contains(v))
            .then(|| format!("value `{v}` not in declared set")),
        (Answer::Number(v), QuestionKind::Numeric { lo, hi }) => {
            if !v.is_finite() {
                Some("non-finite number".into())
            } else if v < lo || v > hi {
                Some(format!("out of range: {} not in [{lo}, {hi}]", format_number(*v)))
            } else {
                None
            }
        }
        (Answer::Text(_), QuestionKind::Text) => None,
        (_, kind) => Some(format!("kind mismatch: expected {} answer", kind.name())),
    }
}
