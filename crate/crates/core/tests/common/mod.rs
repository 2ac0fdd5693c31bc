#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use devforge::imports::LanguageId;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn mini() -> PathBuf {
    fixtures().join("mini")
}

/// One source file and its expected import list per language directory.
pub struct ImportFixture {
    pub language: LanguageId,
    pub source: PathBuf,
    pub expected: Vec<String>,
}

pub fn import_fixtures() -> Vec<ImportFixture> {
    let mut out = Vec::new();
    let mut dirs: Vec<PathBuf> = fs::read_dir(fixtures().join("imports"))
        .expect("imports fixtures")
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        let language: LanguageId = name.parse().unwrap_or_else(|e| panic!("{name}: {e}"));
        let source = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.file_name().unwrap() != "expected.txt")
            .unwrap_or_else(|| panic!("{name}: no source file"));
        let expected = fs::read_to_string(dir.join("expected.txt"))
            .unwrap()
            .lines()
            .map(str::to_string)
            .collect();
        out.push(ImportFixture {
            language,
            source,
            expected,
        });
    }
    out
}

pub fn devforge<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_devforge"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn devforge")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small models so end-to-end runs take seconds.
pub const FAST_CONFIG: &str = r#"{
  "repos": {"vector_size": 16, "epochs": 3},
  "issues": {"vector_size": 12, "epochs": 3},
  "apis": {"vector_size": 8, "epochs": 2, "window": 5},
  "pca_dims": [4, 8]
}"#;

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}
