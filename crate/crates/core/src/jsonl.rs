//! Line-delimited JSON helpers shared by every stage.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let io_err = |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

/// Reads the file if it exists, otherwise returns an empty list.
pub fn read_optional<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    if path.exists() {
        read(path)
    } else {
        Ok(Vec::new())
    }
}

pub fn write<'a, T, I>(path: &Path, records: I) -> Result<(), JsonlError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut writer = Writer::create(path)?;
    for r in records {
        writer.push(r)?;
    }
    writer.finish()
}

/// A single serialized writer for one output file.
pub struct Writer {
    path: PathBuf,
    inner: BufWriter<File>,
    written: usize,
}

impl Writer {
    pub fn create(path: &Path) -> Result<Self, JsonlError> {
        Self::open(path, false)
    }

    pub fn append(path: &Path) -> Result<Self, JsonlError> {
        Self::open(path, true)
    }

    fn open(path: &Path, append: bool) -> Result<Self, JsonlError> {
        let io_err = |source| JsonlError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(path)
            .map_err(io_err)?;
        Ok(Writer {
            path: path.to_path_buf(),
            inner: BufWriter::new(file),
            written: 0,
        })
    }

    pub fn push<T: Serialize>(&mut self, record: &T) -> Result<(), JsonlError> {
        let line = serde_json::to_string(record).expect("records serialize");
        self.inner
            .write_all(line.as_bytes())
            .and_then(|_| self.inner.write_all(b"\n"))
            .map_err(|source| JsonlError::Io {
                path: self.path.clone(),
                source,
            })?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> Result<(), JsonlError> {
        self.inner.flush().map_err(|source| JsonlError::Io {
            path: self.path.clone(),
            source,
        })
    }
}
