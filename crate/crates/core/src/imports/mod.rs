//! Import extraction for the 17 supported source languages.
//!
//! Each language is described by a [`LanguageSpec`]: its canonical file
//! extensions and a list of regular expressions whose designated capture
//! group yields an imported library name. The table lives in
//! `language_specs.json` next to this module so that pattern changes show
//! up as plain diffs.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

const SPEC_TABLE: &str = include_str!("language_specs.json");

/// Default wall-clock budget for extracting imports from a single file.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(2);

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("import extraction exceeded its {budget:?} budget")]
    PatternTimeout { budget: Duration },
    #[error("malformed notebook: {0}")]
    MalformedNotebook(String),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("invalid language spec table: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LanguageId {
    C,
    CSharp,
    Java,
    Fortran,
    Go,
    JavaScript,
    Python,
    R,
    Rust,
    Scala,
    Perl,
    Ruby,
    Dart,
    Kotlin,
    TypeScript,
    Julia,
    JupyterNotebook,
}

impl LanguageId {
    pub const ALL: [LanguageId; 17] = [
        LanguageId::C,
        LanguageId::CSharp,
        LanguageId::Java,
        LanguageId::Fortran,
        LanguageId::Go,
        LanguageId::JavaScript,
        LanguageId::Python,
        LanguageId::R,
        LanguageId::Rust,
        LanguageId::Scala,
        LanguageId::Perl,
        LanguageId::Ruby,
        LanguageId::Dart,
        LanguageId::Kotlin,
        LanguageId::TypeScript,
        LanguageId::Julia,
        LanguageId::JupyterNotebook,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LanguageId::C => "C",
            LanguageId::CSharp => "CSharp",
            LanguageId::Java => "Java",
            LanguageId::Fortran => "Fortran",
            LanguageId::Go => "Go",
            LanguageId::JavaScript => "JavaScript",
            LanguageId::Python => "Python",
            LanguageId::R => "R",
            LanguageId::Rust => "Rust",
            LanguageId::Scala => "Scala",
            LanguageId::Perl => "Perl",
            LanguageId::Ruby => "Ruby",
            LanguageId::Dart => "Dart",
            LanguageId::Kotlin => "Kotlin",
            LanguageId::TypeScript => "TypeScript",
            LanguageId::Julia => "Julia",
            LanguageId::JupyterNotebook => "JupyterNotebook",
        }
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LanguageId {
    type Err = ImportError;

    /// Accepts the canonical name case-insensitively, plus a few common aliases.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let alias = match lower.as_str() {
            "c#" | "cs" => Some(LanguageId::CSharp),
            "js" => Some(LanguageId::JavaScript),
            "ts" => Some(LanguageId::TypeScript),
            "py" => Some(LanguageId::Python),
            "jupyter" | "ipynb" | "notebook" => Some(LanguageId::JupyterNotebook),
            _ => None,
        };
        alias
            .or_else(|| {
                LanguageId::ALL
                    .into_iter()
                    .find(|l| l.name().eq_ignore_ascii_case(&lower))
            })
            .ok_or_else(|| ImportError::UnknownLanguage(s.to_string()))
    }
}

/// One extraction rule: a regex and the capture group holding the import name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDescriptor {
    pub pattern: String,
    pub group: usize,
    /// Split the captured text on this separator into several names.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    /// Characters trimmed from the front of each name (Python relative dots).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_leading: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageSpec {
    pub language: LanguageId,
    pub extensions: Vec<String>,
    pub patterns: Vec<PatternDescriptor>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecTable {
    version: u32,
    languages: Vec<LanguageSpec>,
}

struct CompiledPattern {
    regex: Regex,
    descriptor: PatternDescriptor,
}

struct CompiledSpec {
    spec: LanguageSpec,
    patterns: Vec<CompiledPattern>,
}

/// The compiled pattern table for all supported languages.
pub struct ImportExtractor {
    version: u32,
    specs: HashMap<LanguageId, CompiledSpec>,
    by_extension: HashMap<String, LanguageId>,
    budget: Duration,
}

impl ImportExtractor {
    /// Builds an extractor from a JSON table in the `language_specs.json` schema.
    pub fn from_json(json: &str) -> Result<Self, ImportError> {
        let table: SpecTable =
            serde_json::from_str(json).map_err(|e| ImportError::InvalidSpec(e.to_string()))?;
        let mut specs = HashMap::new();
        let mut by_extension = HashMap::new();
        for spec in table.languages {
            let mut patterns = Vec::with_capacity(spec.patterns.len());
            for descriptor in &spec.patterns {
                let regex = Regex::new(&descriptor.pattern).map_err(|e| {
                    ImportError::InvalidSpec(format!("{}: {e}", spec.language))
                })?;
                // Group 0 is the whole match; the designated group must exist.
                if descriptor.group == 0 || descriptor.group >= regex.captures_len() {
                    return Err(ImportError::InvalidSpec(format!(
                        "{}: pattern `{}` has no capture group {}",
                        spec.language, descriptor.pattern, descriptor.group
                    )));
                }
                patterns.push(CompiledPattern {
                    regex,
                    descriptor: descriptor.clone(),
                });
            }
            for ext in &spec.extensions {
                if !ext.starts_with('.') || ext.to_ascii_lowercase() != *ext {
                    return Err(ImportError::InvalidSpec(format!(
                        "{}: extension `{ext}` must be lowercase and dot-prefixed",
                        spec.language
                    )));
                }
                if let Some(prev) = by_extension.insert(ext.clone(), spec.language) {
                    return Err(ImportError::InvalidSpec(format!(
                        "extension `{ext}` claimed by both {prev} and {}",
                        spec.language
                    )));
                }
            }
            let lang = spec.language;
            if specs.insert(lang, CompiledSpec { spec, patterns }).is_some() {
                return Err(ImportError::InvalidSpec(format!("{lang} listed twice")));
            }
        }
        if let Some(missing) = LanguageId::ALL.iter().find(|l| !specs.contains_key(l)) {
            return Err(ImportError::InvalidSpec(format!("{missing} has no spec")));
        }
        Ok(ImportExtractor {
            version: table.version,
            specs,
            by_extension,
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.budget = budget;
        self
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn spec(&self, language: LanguageId) -> &LanguageSpec {
        &self.specs[&language].spec
    }

    /// Case-insensitive lookup of the file's extension.
    pub fn detect_language(&self, file_path: &str) -> Option<LanguageId> {
        let file_name = file_path.rsplit(['/', '\\']).next()?;
        let dot = file_name.rfind('.')?;
        let ext = file_name[dot..].to_ascii_lowercase();
        self.by_extension.get(&ext).copied()
    }

    /// Extracts import names in textual order, duplicates preserved.
    pub fn extract_imports(
        &self,
        content: &str,
        language: LanguageId,
    ) -> Result<Vec<String>, ImportError> {
        if language == LanguageId::JupyterNotebook {
            return self.extract_from_notebook(content);
        }
        let started = Instant::now();
        let compiled = &self.specs[&language];
        let mut found: Vec<(usize, String)> = Vec::new();
        for pattern in &compiled.patterns {
            if started.elapsed() >= self.budget {
                return Err(ImportError::PatternTimeout {
                    budget: self.budget,
                });
            }
            for caps in pattern.regex.captures_iter(content) {
                let Some(group) = caps.get(pattern.descriptor.group) else {
                    continue;
                };
                collect_names(group.as_str(), group.start(), &pattern.descriptor, &mut found);
            }
        }
        if started.elapsed() > self.budget {
            return Err(ImportError::PatternTimeout {
                budget: self.budget,
            });
        }
        // Patterns run one after another; restore source order.
        found.sort_by_key(|(offset, _)| *offset);
        Ok(found.into_iter().map(|(_, name)| name).collect())
    }

    /// Python imports of every code cell, in cell order.
    pub fn extract_from_notebook(&self, content: &str) -> Result<Vec<String>, ImportError> {
        let notebook: serde_json::Value = serde_json::from_str(content)
            .map_err(|e| ImportError::MalformedNotebook(e.to_string()))?;
        let cells = notebook
            .get("cells")
            .and_then(|c| c.as_array())
            .ok_or_else(|| ImportError::MalformedNotebook("missing `cells` array".into()))?;
        let mut names = Vec::new();
        for cell in cells {
            if cell.get("cell_type").and_then(|t| t.as_str()) != Some("code") {
                continue;
            }
            let source = match cell.get("source") {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(serde_json::Value::Array(lines)) => lines
                    .iter()
                    .map(|l| {
                        l.as_str().ok_or_else(|| {
                            ImportError::MalformedNotebook("non-string source line".into())
                        })
                    })
                    .collect::<Result<String, _>>()?,
                Some(serde_json::Value::Null) | None => String::new(),
                Some(_) => {
                    return Err(ImportError::MalformedNotebook(
                        "cell source is neither string nor list".into(),
                    ))
                }
            };
            names.extend(self.extract_imports(&source, LanguageId::Python)?);
        }
        Ok(names)
    }

    /// The table serialized back to JSON, in canonical language order.
    pub fn to_json(&self) -> String {
        let languages: Vec<&LanguageSpec> =
            LanguageId::ALL.iter().map(|l| self.spec(*l)).collect();
        let value = serde_json::json!({ "version": self.version, "languages": languages });
        serde_json::to_string_pretty(&value).expect("spec table serializes")
    }
}

fn collect_names(
    captured: &str,
    base_offset: usize,
    descriptor: &PatternDescriptor,
    out: &mut Vec<(usize, String)>,
) {
    let pieces: Vec<(usize, &str)> = match &descriptor.split {
        Some(sep) => {
            let mut offset = 0;
            captured
                .split(sep.as_str())
                .map(|piece| {
                    let at = offset;
                    offset += piece.len() + sep.len();
                    (at, piece)
                })
                .collect()
        }
        None => vec![(0, captured)],
    };
    for (at, piece) in pieces {
        if let Some(name) = clean_name(piece, descriptor.strip_leading.as_deref()) {
            out.push((base_offset + at, name));
        }
    }
}

fn clean_name(piece: &str, strip_leading: Option<&str>) -> Option<String> {
    let piece = piece.trim();
    if piece.is_empty() || piece.starts_with("//") || piece.starts_with('#') {
        return None;
    }
    // A quoted string wins over surrounding aliases (Go `f "fmt"`);
    // otherwise the first word (Python `a as b`).
    let core = match piece.find(['"', '\'']) {
        Some(open) => {
            let quote = piece[open..].chars().next()?;
            let rest = &piece[open + 1..];
            let close = rest.find(quote).unwrap_or(rest.len());
            &rest[..close]
        }
        None => piece.split_whitespace().next()?,
    };
    let mut name = core
        .trim_matches(|c: char| c.is_whitespace() || matches!(c, '"' | '\'' | ';' | ',' | '`'))
        .trim_end_matches(['.', ':']);
    if let Some(chars) = strip_leading {
        name = name.trim_start_matches(|c: char| chars.contains(c));
    }
    loop {
        if let Some(rest) = name.strip_prefix("./") {
            name = rest;
        } else if let Some(rest) = name.strip_prefix("../") {
            name = rest;
        } else {
            break;
        }
    }
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        None
    } else {
        Some(name.to_string())
    }
}

/// The extractor built from the shipped pattern table.
pub fn default_extractor() -> &'static ImportExtractor {
    static EXTRACTOR: OnceLock<ImportExtractor> = OnceLock::new();
    EXTRACTOR.get_or_init(|| {
        ImportExtractor::from_json(SPEC_TABLE).expect("shipped language_specs.json is valid")
    })
}

pub fn detect_language(file_path: &str) -> Option<LanguageId> {
    default_extractor().detect_language(file_path)
}

pub fn extract_imports(content: &str, language: LanguageId) -> Result<Vec<String>, ImportError> {
    default_extractor().extract_imports(content, language)
}

pub fn extract_from_notebook(content: &str) -> Result<Vec<String>, ImportError> {
    default_extractor().extract_from_notebook(content)
}

/// The raw shipped table, as bundled into the binary.
pub fn language_specs_json() -> &'static str {
    SPEC_TABLE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_covers_every_language() {
        let ex = default_extractor();
        for lang in LanguageId::ALL {
            assert_eq!(ex.spec(lang).language, lang);
            assert!(!ex.spec(lang).extensions.is_empty(), "{lang}");
        }
    }

    #[test]
    fn detects_by_extension() {
        assert_eq!(detect_language("src/a.py"), Some(LanguageId::Python));
        assert_eq!(detect_language("README.md"), None);
        assert_eq!(detect_language("Model.ipynb"), Some(LanguageId::JupyterNotebook));
        assert_eq!(detect_language("LIB/Main.JAVA"), Some(LanguageId::Java));
        assert_eq!(detect_language("analysis.R"), Some(LanguageId::R));
        assert_eq!(detect_language("Makefile"), None);
        assert_eq!(detect_language("dir.v2/noext"), None);
    }

    #[test]
    fn python_from_and_import() {
        let got = extract_imports("from foo.bar import baz\nimport qux", LanguageId::Python).unwrap();
        assert_eq!(got, vec!["foo.bar", "qux"]);
    }

    #[test]
    fn python_comma_alias_and_relative() {
        let src = "import os.path as osp, sys  # io\nfrom ..pkg.mod import x\nfrom . import y\n";
        let got = extract_imports(src, LanguageId::Python).unwrap();
        assert_eq!(got, vec!["os.path", "sys", "pkg.mod"]);
    }

    #[test]
    fn empty_content_yields_nothing() {
        for lang in LanguageId::ALL {
            if lang == LanguageId::JupyterNotebook {
                continue;
            }
            assert!(extract_imports("", lang).unwrap().is_empty(), "{lang}");
        }
    }

    #[test]
    fn c_include() {
        assert_eq!(
            extract_imports("#include <stdio.h>", LanguageId::C).unwrap(),
            vec!["stdio.h"]
        );
        assert_eq!(
            extract_imports("#include \"../util/log.h\"\n", LanguageId::C).unwrap(),
            vec!["util/log.h"]
        );
    }

    #[test]
    fn go_block_with_alias_and_comment() {
        let src = "package main\n\nimport (\n\t\"fmt\"\n\t// \"skipped\"\n\tf \"path/filepath\"\n)\nimport \"os\"\n";
        assert_eq!(
            extract_imports(src, LanguageId::Go).unwrap(),
            vec!["fmt", "path/filepath", "os"]
        );
    }

    #[test]
    fn duplicates_preserved() {
        let got = extract_imports("import a\nimport a\n", LanguageId::Python).unwrap();
        assert_eq!(got, vec!["a", "a"]);
    }

    #[test]
    fn notebook_cells() {
        let nb = r##"{"cells":[
            {"cell_type":"markdown","source":["import nothing\n"]},
            {"cell_type":"code","source":["import numpy as np\n","from pandas import DataFrame\n"]},
            {"cell_type":"code","source":"import foo"}
        ]}"##;
        assert_eq!(extract_from_notebook(nb).unwrap(), vec!["numpy", "pandas", "foo"]);
        assert!(extract_from_notebook(r#"{"cells":[]}"#).unwrap().is_empty());
        assert!(matches!(
            extract_from_notebook("not json"),
            Err(ImportError::MalformedNotebook(_))
        ));
        assert!(matches!(
            extract_imports("{", LanguageId::JupyterNotebook),
            Err(ImportError::MalformedNotebook(_))
        ));
    }

    #[test]
    fn zero_budget_times_out() {
        let ex = ImportExtractor::from_json(SPEC_TABLE)
            .unwrap()
            .with_budget(Duration::ZERO);
        assert!(matches!(
            ex.extract_imports("import a", LanguageId::Python),
            Err(ImportError::PatternTimeout { .. })
        ));
    }

    #[test]
    fn rejects_pattern_without_group() {
        let bad = r#"{"version":1,"languages":[{"language":"C","extensions":[".c"],"patterns":[{"pattern":"include","group":1}]}]}"#;
        assert!(matches!(
            ImportExtractor::from_json(bad),
            Err(ImportError::InvalidSpec(_))
        ));
    }

    #[test]
    fn table_round_trips_through_json() {
        let ex = default_extractor();
        let again = ImportExtractor::from_json(&ex.to_json()).unwrap();
        assert_eq!(again.version(), ex.version());
        assert_eq!(
            again.detect_language("x.kt"),
            Some(LanguageId::Kotlin)
        );
    }

    #[test]
    fn language_names_parse() {
        for lang in LanguageId::ALL {
            assert_eq!(lang.name().parse::<LanguageId>().unwrap(), lang);
        }
        assert_eq!("c#".parse::<LanguageId>().unwrap(), LanguageId::CSharp);
        assert!("cobol".parse::<LanguageId>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn names_are_nonempty_without_whitespace(content in "(import|from|use|#include|require)?[ a-z._'\"<>(),;\n]{0,80}") {
            for lang in LanguageId::ALL {
                if lang == LanguageId::JupyterNotebook { continue; }
                let names = extract_imports(&content, lang).unwrap();
                for n in &names {
                    proptest::prop_assert!(!n.is_empty());
                    proptest::prop_assert!(!n.chars().any(char::is_whitespace));
                }
                proptest::prop_assert_eq!(names, extract_imports(&content, lang).unwrap());
            }
        }
    }
}
