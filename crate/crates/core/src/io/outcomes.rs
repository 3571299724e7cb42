//! Clinical outcome table: event times (days from radiation start) and event
//! indicators for the four survival endpoints.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COLUMNS: [&str; 9] = [
    "course_id",
    "os_time",
    "os_event",
    "pfs_time",
    "pfs_event",
    "lffs_time",
    "lffs_event",
    "ilffs_time",
    "ilffs_event",
];

#[derive(Debug, Error)]
pub enum OutcomeError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("outcome parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("negative time {value} in column {column} for course {course:?}")]
    NegativeTime {
        course: String,
        column: String,
        value: f64,
    },
    #[error("event indicator {value:?} in column {column} for course {course:?} is not 0 or 1")]
    NonBinaryEvent {
        course: String,
        column: String,
        value: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Endpoint {
    #[serde(rename = "OS")]
    Os,
    #[serde(rename = "PFS")]
    Pfs,
    #[serde(rename = "LFFS")]
    Lffs,
    #[serde(rename = "iLFFS", alias = "ILFFS")]
    Ilffs,
}

impl Endpoint {
    pub const ALL: [Endpoint; 4] = [Self::Os, Self::Pfs, Self::Lffs, Self::Ilffs];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Os => "OS",
            Self::Pfs => "PFS",
            Self::Lffs => "LFFS",
            Self::Ilffs => "iLFFS",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Endpoint {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "OS" => Ok(Self::Os),
            "PFS" => Ok(Self::Pfs),
            "LFFS" => Ok(Self::Lffs),
            "ILFFS" => Ok(Self::Ilffs),
            _ => Err(format!("unknown endpoint {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointOutcome {
    pub time: f64,
    pub event: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    pub course_id: String,
    outcomes: [EndpointOutcome; 4],
}

impl OutcomeRow {
    pub fn new(course_id: impl Into<String>, outcomes: [EndpointOutcome; 4]) -> Self {
        Self {
            course_id: course_id.into(),
            outcomes,
        }
    }

    pub fn get(&self, e: Endpoint) -> EndpointOutcome {
        self.outcomes[e.slot()]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeTable {
    pub rows: Vec<OutcomeRow>,
}

impl OutcomeTable {
    pub fn get(&self, course_id: &str) -> Option<&OutcomeRow> {
        self.rows.iter().find(|r| r.course_id == course_id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema_version=1\n");
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.course_id);
            for e in Endpoint::ALL {
                let o = r.get(e);
                out.push_str(&format!(",{},{}", o.time, u8::from(o.event)));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the outcomes CSV. Lines starting with `#` are ignored.
pub fn parse_outcomes(text: &str) -> Result<OutcomeTable, OutcomeError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| OutcomeError::ParseError {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names != COLUMNS {
        return Err(OutcomeError::ParseError {
            line: header.position().map_or(1, |p| p.line() as usize),
            message: format!(
                "expected columns {}, found {}",
                COLUMNS.join(","),
                names.join(",")
            ),
        });
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| OutcomeError::ParseError {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let course = record[0].to_string();
        if course.is_empty() {
            return Err(OutcomeError::ParseError {
                line,
                message: "empty course_id".into(),
            });
        }
        let mut outcomes = [EndpointOutcome {
            time: 0.0,
            event: false,
        }; 4];
        for (slot, out) in outcomes.iter_mut().enumerate() {
            let tcol = COLUMNS[1 + 2 * slot];
            let ecol = COLUMNS[2 + 2 * slot];
            let time: f64 = record[1 + 2 * slot]
                .parse()
                .map_err(|_| OutcomeError::ParseError {
                    line,
                    message: format!("{tcol} {:?} is not a number", &record[1 + 2 * slot]),
                })?;
            if !time.is_finite() {
                return Err(OutcomeError::ParseError {
                    line,
                    message: format!("{tcol} is not finite"),
                });
            }
            if time < 0.0 {
                return Err(OutcomeError::NegativeTime {
                    course: course.clone(),
                    column: tcol.into(),
                    value: time,
                });
            }
            let event = match &record[2 + 2 * slot] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(OutcomeError::NonBinaryEvent {
                        course: course.clone(),
                        column: ecol.into(),
                        value: other.into(),
                    })
                }
            };
            *out = EndpointOutcome { time, event };
        }
        rows.push(OutcomeRow {
            course_id: course,
            outcomes,
        });
    }
    Ok(OutcomeTable { rows })
}

pub fn load_outcomes(path: &Path) -> Result<OutcomeTable, OutcomeError> {
    let text = std::fs::read_to_string(path).map_err(|source| OutcomeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_outcomes(&text)
}
