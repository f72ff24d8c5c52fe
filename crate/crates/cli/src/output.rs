use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Exit codes: 2 configuration, 3 data or I/O, 4 numeric failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<hofs::Error> for CliError {
    fn from(e: hofs::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(io_err(path))?;
    }
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// CSV whose first line is a `#` comment holding the configuration.
pub struct CsvOut {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new<C: Serialize>(config: &C, header: &[String]) -> Self {
        let buf = format!("# config: {}\n", serde_json::to_string(config).expect("config serializes")).into_bytes();
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(header).expect("writing to memory");
        CsvOut { writer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("writing to memory");
    }

    pub fn write(self, path: &Path) -> CliResult<()> {
        let bytes = self.writer.into_inner().expect("writing to memory");
        write_atomic(path, &bytes)
    }
}
