//! Binary model container.
//!
//! Layout: `DV2V`, a `u16` format version, a `u32` header length, the header
//! as canonical JSON, the matrices as little-endian `f32` in row-major order,
//! and a CRC32 of every preceding byte. All integers are little-endian.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{EmbeddingModel, Hyperparams, Matrix, PvError, Vocabulary};

pub const MAGIC: &[u8; 4] = b"DV2V";
pub const FORMAT_VERSION: u16 = 1;

const PV_KIND: &str = "pv";

/// Header plus matrices; the matrix shapes are stored in the header under
/// `shapes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: Value,
    pub matrices: Vec<Matrix>,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = self.header.clone();
        let shapes: Vec<[usize; 2]> = self.matrices.iter().map(|m| [m.rows(), m.cols()]).collect();
        if let Value::Object(map) = &mut header {
            map.insert("shapes".into(), json!(shapes));
        } else {
            header = json!({ "value": header, "shapes": shapes });
        }
        // serde_json sorts object keys, so this is canonical.
        let header = serde_json::to_vec(&header).expect("json value serializes");
        let floats: usize = self.matrices.iter().map(|m| m.as_slice().len()).sum();
        let mut out = Vec::with_capacity(14 + header.len() + 4 * floats);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for m in &self.matrices {
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PvError> {
        let corrupt = |m: &str| PvError::CorruptModel(m.to_string());
        if bytes.len() < 6 || &bytes[..4] != MAGIC {
            return Err(corrupt("missing DV2V magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(PvError::FormatVersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        if bytes.len() < 14 {
            return Err(corrupt("file truncated"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
        if crc32fast::hash(body) != stored {
            return Err(corrupt("checksum mismatch"));
        }
        let header_len = u32::from_le_bytes(body[6..10].try_into().expect("four bytes")) as usize;
        let header_end = 10usize
            .checked_add(header_len)
            .filter(|&e| e <= body.len())
            .ok_or_else(|| corrupt("header length exceeds file"))?;
        let header: Value = serde_json::from_slice(&body[10..header_end])
            .map_err(|e| PvError::CorruptModel(format!("header: {e}")))?;
        let shapes: Vec<[usize; 2]> = header
            .get("shapes")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| PvError::CorruptModel(format!("shapes: {e}")))?
            .ok_or_else(|| corrupt("header has no shapes"))?;
        let mut pos = header_end;
        let mut matrices = Vec::with_capacity(shapes.len());
        for [rows, cols] in shapes {
            let n = rows.checked_mul(cols).ok_or_else(|| corrupt("matrix too large"))?;
            let end = n
                .checked_mul(4)
                .and_then(|b| b.checked_add(pos))
                .filter(|&e| e <= body.len())
                .ok_or_else(|| corrupt("matrix data exceeds file"))?;
            let data = body[pos..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
                .collect();
            matrices.push(Matrix::from_vec(rows, cols, data));
            pos = end;
        }
        if pos != body.len() {
            return Err(corrupt("trailing bytes after matrices"));
        }
        Ok(Container { header, matrices })
    }

    pub fn kind(&self) -> Option<&str> {
        self.header.get("kind").and_then(Value::as_str)
    }
}

pub fn write_container(path: &Path, container: &Container) -> Result<(), PvError> {
    fs::write(path, container.to_bytes())?;
    Ok(())
}

pub fn read_container(path: &Path) -> Result<Container, PvError> {
    Container::from_bytes(&fs::read(path)?)
}

#[derive(Deserialize)]
struct PvHeader {
    hyper: Hyperparams,
    vocab: Vec<(String, u64)>,
    tags: Vec<String>,
}

impl EmbeddingModel {
    pub fn to_container(&self) -> Container {
        let vocab: Vec<(&str, u64)> = self.vocab.entries().collect();
        Container {
            header: json!({
                "kind": PV_KIND,
                "hyper": self.hyper,
                "vocab": vocab,
                "tags": self.tags,
            }),
            matrices: vec![self.word_in.clone(), self.word_out.clone(), self.docs.clone()],
        }
    }

    pub fn from_container(c: Container) -> Result<Self, PvError> {
        if c.kind() != Some(PV_KIND) {
            return Err(PvError::CorruptModel(format!(
                "expected a `{PV_KIND}` model, found {:?}",
                c.kind()
            )));
        }
        let h: PvHeader = serde_json::from_value(c.header)
            .map_err(|e| PvError::CorruptModel(format!("header: {e}")))?;
        let [word_in, word_out, docs]: [Matrix; 3] = c
            .matrices
            .try_into()
            .map_err(|_| PvError::CorruptModel("expected three matrices".into()))?;
        EmbeddingModel::from_parts(h.hyper, Vocabulary::from_entries(h.vocab), word_in, word_out, docs, h.tags)
    }

    pub fn save(&self, path: &Path) -> Result<(), PvError> {
        write_container(path, &self.to_container())
    }

    pub fn load(path: &Path) -> Result<Self, PvError> {
        Self::from_container(read_container(path)?)
    }
}
