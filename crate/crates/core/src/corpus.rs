//! FNC-1 style CSV loading and the headline/body join.
//!
//! Bodies live in `Body ID,articleBody` files and stance rows in
//! `Headline,Body ID[,Stance]` files. Text is kept exactly as read; cleaning
//! happens in [`crate::textprep`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const BODIES_HEADER: [&str; 2] = ["Body ID", "articleBody"];
pub const LABELED_STANCES_HEADER: [&str; 3] = ["Headline", "Body ID", "Stance"];
pub const UNLABELED_STANCES_HEADER: [&str; 2] = ["Headline", "Body ID"];

/// Relation of a headline to an article body. The declaration order is the
/// class index order used by the classifier and the confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stance {
    Agree,
    Disagree,
    Discuss,
    Unrelated,
}

impl Stance {
    pub const ALL: [Stance; 4] = [
        Stance::Agree,
        Stance::Disagree,
        Stance::Discuss,
        Stance::Unrelated,
    ];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Stance> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Agree => "agree",
            Stance::Disagree => "disagree",
            Stance::Discuss => "discuss",
            Stance::Unrelated => "unrelated",
        }
    }

    pub fn is_related(self) -> bool {
        self != Stance::Unrelated
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|stance| s.eq_ignore_ascii_case(stance.as_str()))
            .ok_or_else(|| Error::UnknownStance(s.to_string()))
    }
}

/// Article bodies keyed by body id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BodyTable {
    bodies: BTreeMap<u64, String>,
}

impl BodyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a body, refusing to overwrite an existing id.
    pub fn insert(&mut self, id: u64, text: impl Into<String>) -> std::result::Result<(), u64> {
        use std::collections::btree_map::Entry;
        match self.bodies.entry(id) {
            Entry::Occupied(_) => Err(id),
            Entry::Vacant(slot) => {
                slot.insert(text.into());
                Ok(())
            }
        }
    }

    pub fn get(&self, id: u64) -> Option<&str> {
        self.bodies.get(&id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    /// Bodies in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &str)> {
        self.bodies.iter().map(|(id, text)| (*id, text.as_str()))
    }
}

/// One row of a stances file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StanceRow {
    pub headline: String,
    pub body_id: u64,
    pub stance: Option<Stance>,
}

/// A stance row joined with the text of the body it references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StancePair {
    pub headline: String,
    pub body_id: u64,
    pub body_text: String,
    pub stance: Option<Stance>,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let message = err.to_string();
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        _ => Error::Csv {
            path: path.to_path_buf(),
            message,
        },
    }
}

fn check_header<R: Read>(path: &Path, reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    let found: Vec<&str> = header
        .iter()
        .enumerate()
        // tolerate a UTF-8 byte-order mark on the first column
        .map(|(i, f)| if i == 0 { f.trim_start_matches('\u{feff}') } else { f })
        .collect();
    if found != expected {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn parse_body_id(path: &Path, record: usize, value: &str) -> Result<u64> {
    value.trim().parse::<u64>().map_err(|_| Error::BodyId {
        path: path.to_path_buf(),
        record,
        value: value.to_string(),
    })
}

/// Loads a `Body ID,articleBody` file.
pub fn load_bodies(path: impl AsRef<Path>) -> Result<BodyTable> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    check_header(path, &mut reader, &BODIES_HEADER)?;

    let mut table = BodyTable::new();
    for (record, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let id = parse_body_id(path, record + 1, &row[0])?;
        table
            .insert(id, &row[1])
            .map_err(|id| Error::DuplicateBodyId {
                path: path.to_path_buf(),
                id,
            })?;
    }
    Ok(table)
}

/// Loads a stances file. Labeled files carry a `Stance` column.
pub fn load_stances(path: impl AsRef<Path>, labeled: bool) -> Result<Vec<StanceRow>> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let header: &[&str] = if labeled {
        &LABELED_STANCES_HEADER
    } else {
        &UNLABELED_STANCES_HEADER
    };
    check_header(path, &mut reader, header)?;

    let mut rows = Vec::new();
    for (record, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let body_id = parse_body_id(path, record + 1, &row[1])?;
        let stance = if labeled {
            let stance = row[2].trim().parse::<Stance>().map_err(|e| Error::Record {
                path: path.to_path_buf(),
                record: record + 1,
                message: e.to_string(),
            })?;
            Some(stance)
        } else {
            None
        };
        rows.push(StanceRow {
            headline: row[0].to_string(),
            body_id,
            stance,
        });
    }
    Ok(rows)
}

/// Resolves every row's body id against `bodies`, keeping row order.
pub fn join_pairs(stances: &[StanceRow], bodies: &BodyTable) -> Result<Vec<StancePair>> {
    let mut dangling: Vec<u64> = stances
        .iter()
        .filter(|row| bodies.get(row.body_id).is_none())
        .map(|row| row.body_id)
        .collect();
    if !dangling.is_empty() {
        dangling.sort_unstable();
        dangling.dedup();
        return Err(Error::DanglingBodyIds(dangling));
    }

    Ok(stances
        .iter()
        .map(|row| StancePair {
            headline: row.headline.clone(),
            body_id: row.body_id,
            body_text: bodies.get(row.body_id).unwrap_or_default().to_string(),
            stance: row.stance,
        })
        .collect())
}

/// Writes a body table in the same format [`load_bodies`] reads.
pub fn write_bodies<W: Write>(table: &BodyTable, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Csv {
        path: "<output>".into(),
        message: e.to_string(),
    };
    out.write_record(BODIES_HEADER).map_err(to_err)?;
    for (id, text) in table.iter() {
        out.write_record([id.to_string().as_str(), text]).map_err(to_err)?;
    }
    out.flush().map_err(|e| Error::Io {
        path: "<output>".into(),
        source: e,
    })
}

/// Writes stance rows; the `Stance` column is emitted when every row is labeled.
pub fn write_stances<W: Write>(rows: &[StanceRow], writer: W) -> Result<()> {
    let labeled = rows.iter().all(|r| r.stance.is_some());
    let mut out = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Csv {
        path: "<output>".into(),
        message: e.to_string(),
    };
    if labeled {
        out.write_record(LABELED_STANCES_HEADER).map_err(to_err)?;
    } else {
        out.write_record(UNLABELED_STANCES_HEADER).map_err(to_err)?;
    }
    for row in rows {
        let id = row.body_id.to_string();
        match (labeled, row.stance) {
            (true, Some(stance)) => out.write_record([row.headline.as_str(), &id, stance.as_str()]),
            _ => out.write_record([row.headline.as_str(), &id]),
        }
        .map_err(to_err)?;
    }
    out.flush().map_err(|e| Error::Io {
        path: "<output>".into(),
        source: e,
    })
}
