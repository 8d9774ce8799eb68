//! Reading and writing dependency matrices.
//!
//! * CSV: header `client,<lib>,<lib>,...`, one row per client, cells `0`/`1`
//!   (an empty cell reads as `0`).
//! * JSON: object mapping each client id to an array of library ids.
//! * Manifest directory: every `<client>.xml` file is one client's manifest.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use cousage_core::corpus::MatrixBuilder;
use cousage_core::{ClientId, DependencyMatrix, LibraryId};
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::manifest::parse_manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixFormat {
    Csv,
    Json,
    ManifestDir,
}

impl MatrixFormat {
    /// Directories are manifest dirs, `.csv` files are CSV, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        if path.is_dir() {
            MatrixFormat::ManifestDir
        } else if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        {
            MatrixFormat::Csv
        } else {
            MatrixFormat::Json
        }
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DependencyMatrix> {
    match format {
        MatrixFormat::Csv => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            read_csv_matrix(file, path)
        }
        MatrixFormat::Json => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_json_matrix(&text, path)
        }
        MatrixFormat::ManifestDir => {
            let (m, warnings) = load_manifest_dir(path)?;
            for w in &warnings {
                log::warn!("{w}");
            }
            Ok(m)
        }
    }
}

fn data_error(path: &Path) -> impl Fn(cousage_core::Error) -> Error + '_ {
    move |e| Error::format(path, e.to_string())
}

pub fn read_csv_matrix<R: Read>(reader: R, path: &Path) -> Result<DependencyMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::format(path, "empty file")),
        Some(r) => r.map_err(|e| Error::format(path, e.to_string()))?,
    };
    if header.get(0).map(str::trim) != Some("client") {
        return Err(Error::format(path, "first header cell must be \"client\""));
    }
    let mut b = MatrixBuilder::new();
    let libs: Vec<LibraryId> = header
        .iter()
        .skip(1)
        .map(LibraryId::new)
        .collect::<Result<_, _>>()
        .map_err(data_error(path))?;
    for lib in &libs {
        b.declare_library(lib.clone()).map_err(data_error(path))?;
    }
    for record in records {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::format(
                path,
                format!(
                    "row {line}: expected {} cells, found {}",
                    header.len(),
                    record.len()
                ),
            ));
        }
        let client = ClientId::new(&record[0])
            .map_err(|e| Error::format(path, format!("row {line}: {e}")))?;
        let mut used = Vec::new();
        for (cell, lib) in record.iter().skip(1).zip(&libs) {
            match cell.trim() {
                "1" => used.push(lib.clone()),
                "0" | "" => {}
                other => {
                    return Err(Error::format(
                        path,
                        format!("row {line}: cell for {lib} must be 0 or 1, found {other:?}"),
                    ))
                }
            }
        }
        b.add_client(client, used)
            .map_err(|e| Error::format(path, format!("row {line}: {e}")))?;
    }
    Ok(b.build())
}

/// Client rows in file order, duplicates kept so they can be reported.
struct Rows(Vec<(String, Vec<String>)>);

impl<'de> Deserialize<'de> for Rows {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RowsVisitor;
        impl<'de> Visitor<'de> for RowsVisitor {
            type Value = Rows;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping client ids to arrays of library ids")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Rows, A::Error> {
                let mut rows = Vec::new();
                while let Some(entry) = map.next_entry()? {
                    rows.push(entry);
                }
                Ok(Rows(rows))
            }
        }
        d.deserialize_map(RowsVisitor)
    }
}

pub fn parse_json_matrix(text: &str, path: &Path) -> Result<DependencyMatrix> {
    if text.trim().is_empty() {
        return Err(Error::format(path, "empty file"));
    }
    let Rows(rows) = serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
    if rows.is_empty() {
        return Err(Error::format(path, "no clients"));
    }
    let mut b = MatrixBuilder::new();
    for (client, libs) in rows {
        let client = ClientId::new(&client).map_err(data_error(path))?;
        let libs = libs
            .iter()
            .map(|l| LibraryId::new(l))
            .collect::<Result<Vec<_>, _>>()
            .map_err(data_error(path))?;
        b.add_client(client, libs).map_err(data_error(path))?;
    }
    Ok(b.build())
}

/// Loads every `*.xml` file in `dir` (sorted by file name) as one client
/// named after the file stem. Returns the matrix and the skipped-dependency
/// warnings, each prefixed with its file.
pub fn load_manifest_dir(dir: &Path) -> Result<(DependencyMatrix, Vec<String>)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")));
    files.sort();
    if files.is_empty() {
        return Err(Error::format(dir, "no .xml manifests found"));
    }

    let mut b = MatrixBuilder::new();
    let mut warnings = Vec::new();
    for file in &files {
        let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
        let manifest = parse_manifest(&text).map_err(|e| Error::Xml {
            path: file.clone(),
            line: e.line,
            column: e.column,
            message: e.message,
        })?;
        warnings.extend(
            manifest
                .warnings
                .iter()
                .map(|w| format!("{}: {w}", file.display())),
        );
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy())
            .unwrap_or_default();
        let client = ClientId::new(&stem).map_err(data_error(file))?;
        b.add_client(client, manifest.dependencies)
            .map_err(data_error(file))?;
    }
    Ok((b.build(), warnings))
}

pub fn matrix_to_csv(m: &DependencyMatrix) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header = std::iter::once("client").chain(m.libraries().iter().map(LibraryId::as_str));
    w.write_record(header).expect("write to memory");
    for (c, client) in m.clients().iter().enumerate() {
        let cells = (0..m.library_count()).map(|l| if m.usage(l).contains(c) { "1" } else { "0" });
        w.write_record(std::iter::once(client.as_str()).chain(cells))
            .expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv of utf-8 ids")
}

pub fn matrix_to_json(m: &DependencyMatrix) -> String {
    let mut obj = serde_json::Map::new();
    for (client, row) in m.clients().iter().zip(m.client_rows()) {
        let libs = row
            .iter()
            .map(|&l| serde_json::Value::from(m.libraries()[l].as_str()))
            .collect();
        obj.insert(client.as_str().to_owned(), serde_json::Value::Array(libs));
    }
    let mut text = serde_json::to_string_pretty(&obj).expect("json of strings");
    text.push('\n');
    text
}

pub fn write_matrix(m: &DependencyMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let text = match format {
        MatrixFormat::Csv => matrix_to_csv(m),
        MatrixFormat::Json => matrix_to_json(m),
        MatrixFormat::ManifestDir => {
            return Err(Error::Usage(
                "matrices cannot be written as manifest directories".into(),
            ))
        }
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
