use std::fmt;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use hkperiod::ErrorKind;
use serde_json::json;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Lib(hkperiod::Error),
    /// Unreadable or invalid configuration and arguments.
    Config(String),
    /// Output directory or file problems.
    Io(String),
}

impl From<hkperiod::Error> for CliError {
    fn from(e: hkperiod::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.kind() == ErrorKind::Numeric => 3,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (tag, kind) = match self {
            CliError::Lib(e) => (
                e.tag(),
                match e.kind() {
                    ErrorKind::Precondition => "precondition",
                    ErrorKind::Numeric => "numeric",
                },
            ),
            CliError::Config(_) => ("config", "precondition"),
            CliError::Io(_) => ("io", "precondition"),
        };
        json!({ "error": tag, "kind": kind, "message": self.to_string() })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A CSV file with a header row.
pub struct Table {
    writer: csv::Writer<File>,
    width: usize,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_path(dir.join(name))?;
        writer.write_record(header)?;
        Ok(Self {
            writer,
            width: header.len(),
        })
    }

    pub fn row(&mut self, cells: Vec<String>) -> CliResult<()> {
        debug_assert_eq!(cells.len(), self.width);
        self.writer.write_record(&cells)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub fn r(x: f64) -> String {
    hkperiod::io::fmt_real(x)
}

pub fn c(z: hkperiod::C64) -> String {
    hkperiod::io::fmt_complex(z)
}
