//! Benchmark manifest: one JSON document listing every sample's precomputed
//! artifacts.
//!
//! ```json
//! {
//!   "version": 1,
//!   "samples": [{
//!     "sample_id": "s1", "prompt_id": "p1", "n_refs": 2,
//!     "ref_embeddings": {"dim": 512, "data": [...]},
//!     "ref_attributes": [{"age": "aged", "gender": "male", ...}, ...],
//!     "gen_embeddings": {"dim": 512, "rows": 2, "file": "s1_gen.f32"},
//!     "hps": 0.27,
//!     "qa_items": [{"kind": "simple", "score": 10}]
//!   }]
//! }
//! ```
//!
//! Embedding sets are either inline (`data` holds `rows * dim` numbers,
//! row-major) or external (`file` names a sidecar of little-endian `f32`s,
//! resolved relative to the manifest's directory).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::embedding::{Embedding, EmbeddingRole, EmbeddingSet};
use crate::error::{Error, Result};
use crate::labels::AttributeLabel;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaKind {
    Simple,
    Complex,
}

/// One MLLM answer on the 1..=10 choice scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub kind: QaKind,
    pub score: u8,
}

impl QaItem {
    pub fn new(kind: QaKind, score: u8) -> Result<Self> {
        if !(1..=10).contains(&score) {
            return Err(Error::invalid("score", "score out of range"));
        }
        Ok(QaItem { kind, score })
    }
}

/// Precomputed artifacts for one generated image.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    sample_id: String,
    prompt_id: String,
    refs: EmbeddingSet,
    ref_attributes: Vec<AttributeLabel>,
    gens: EmbeddingSet,
    hps: Option<f64>,
    qa_items: Vec<QaItem>,
}

impl SampleRecord {
    pub fn new(
        sample_id: impl Into<String>,
        prompt_id: impl Into<String>,
        refs: EmbeddingSet,
        ref_attributes: Vec<AttributeLabel>,
        gens: EmbeddingSet,
        hps: Option<f64>,
        qa_items: Vec<QaItem>,
    ) -> Result<Self> {
        let record = SampleRecord {
            sample_id: sample_id.into(),
            prompt_id: prompt_id.into(),
            refs,
            ref_attributes,
            gens,
            hps,
            qa_items,
        };
        record
            .validate()
            .map_err(|e| e.within(&format!("sample {}", record.sample_id)))?;
        Ok(record)
    }

    fn validate(&self) -> Result<()> {
        if self.refs.is_empty() {
            return Err(Error::invalid("ref_embeddings", "at least one reference is required"));
        }
        if self.ref_attributes.len() != self.refs.len() {
            return Err(Error::invalid(
                "ref_attributes",
                format!(
                    "expected {} labels, got {}",
                    self.refs.len(),
                    self.ref_attributes.len()
                ),
            ));
        }
        if self.gens.dim() != self.refs.dim() {
            return Err(Error::invalid(
                "gen_embeddings.dim",
                format!(
                    "dimension mismatch: references have {}, generated faces have {}",
                    self.refs.dim(),
                    self.gens.dim()
                ),
            ));
        }
        if let Some(h) = self.hps {
            if !(0.0..=1.0).contains(&h) {
                return Err(Error::invalid("hps", format!("hps {h} outside [0, 1]")));
            }
        }
        for (i, item) in self.qa_items.iter().enumerate() {
            if !(1..=10).contains(&item.score) {
                return Err(Error::invalid(format!("qa_items[{i}]"), "score out of range"));
            }
        }
        Ok(())
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn prompt_id(&self) -> &str {
        &self.prompt_id
    }

    /// Declared number of reference identities `N`.
    pub fn n_refs(&self) -> usize {
        self.refs.len()
    }

    pub fn refs(&self) -> &EmbeddingSet {
        &self.refs
    }

    pub fn ref_attributes(&self) -> &[AttributeLabel] {
        &self.ref_attributes
    }

    pub fn gens(&self) -> &EmbeddingSet {
        &self.gens
    }

    pub fn hps(&self) -> Option<f64> {
        self.hps
    }

    pub fn qa_items(&self) -> &[QaItem] {
        &self.qa_items
    }

    /// Raw scores of one question kind, in file order.
    pub fn qa_scores(&self, kind: QaKind) -> Vec<u8> {
        self.qa_items
            .iter()
            .filter(|q| q.kind == kind)
            .map(|q| q.score)
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmbeddings {
    dim: usize,
    #[serde(default)]
    rows: Option<usize>,
    #[serde(default)]
    data: Option<Vec<f64>>,
    #[serde(default)]
    file: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQa {
    kind: QaKind,
    score: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    sample_id: String,
    prompt_id: String,
    n_refs: usize,
    ref_embeddings: RawEmbeddings,
    ref_attributes: Vec<Value>,
    gen_embeddings: RawEmbeddings,
    #[serde(default)]
    hps: Option<f64>,
    #[serde(default)]
    qa_items: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    version: u32,
    samples: Vec<Value>,
}

/// Result of a lenient parse: valid records plus the per-sample failures.
#[derive(Debug, Default)]
pub struct ParsedManifest {
    pub records: Vec<SampleRecord>,
    pub rejected: Vec<(String, Error)>,
}

/// Reads and validates a manifest file. Any invalid sample fails the whole
/// parse.
pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_manifest_bytes(&bytes, path.parent())
}

/// Parses manifest bytes. `base_dir` resolves sidecar files; without it any
/// external embedding set is an error.
pub fn parse_manifest_bytes(bytes: &[u8], base_dir: Option<&Path>) -> Result<Vec<SampleRecord>> {
    let parsed = parse_inner(bytes, base_dir, true)?;
    Ok(parsed.records)
}

/// Like [`parse_manifest`], but invalid samples are collected instead of
/// aborting. Document-level errors (bad JSON, wrong version) still fail.
pub fn parse_manifest_lenient(path: impl AsRef<Path>) -> Result<ParsedManifest> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_inner(&bytes, path.parent(), false)
}

fn parse_inner(bytes: &[u8], base_dir: Option<&Path>, strict: bool) -> Result<ParsedManifest> {
    let raw: RawManifest =
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    if raw.version != MANIFEST_VERSION {
        return Err(Error::invalid(
            "version",
            format!("unsupported manifest version {}", raw.version),
        ));
    }
    let mut out = ParsedManifest::default();
    let mut seen = HashSet::new();
    for (index, value) in raw.samples.into_iter().enumerate() {
        let label = value
            .get("sample_id")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .unwrap_or_else(|| format!("#{index}"));
        let result = parse_sample(value, base_dir)
            .map_err(|e| e.within(&format!("sample {label}")))
            .and_then(|record| {
                if seen.insert(record.sample_id.clone()) {
                    Ok(record)
                } else {
                    Err(Error::DuplicateId(record.sample_id))
                }
            });
        match result {
            Ok(record) => out.records.push(record),
            Err(e) if strict => return Err(e),
            Err(e) => out.rejected.push((label, e)),
        }
    }
    Ok(out)
}

fn parse_sample(value: Value, base_dir: Option<&Path>) -> Result<SampleRecord> {
    let raw: RawSample =
        serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
    let refs = load_embeddings(&raw.ref_embeddings, EmbeddingRole::Reference, base_dir)
        .map_err(|e| e.within("ref_embeddings"))?;
    if raw.n_refs != refs.len() {
        return Err(Error::invalid(
            "n_refs",
            format!("n_refs = {} but ref_embeddings has {} rows", raw.n_refs, refs.len()),
        ));
    }
    let gens = load_embeddings(&raw.gen_embeddings, EmbeddingRole::Generated, base_dir)
        .map_err(|e| e.within("gen_embeddings"))?;
    let ref_attributes = raw
        .ref_attributes
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value::<AttributeLabel>(v)
                .map_err(|e| Error::invalid(format!("ref_attributes[{i}]"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let qa_items = raw
        .qa_items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let location = format!("qa_items[{i}]");
            let qa: RawQa =
                serde_json::from_value(v).map_err(|e| Error::invalid(&location, e.to_string()))?;
            if qa.score.fract() != 0.0 {
                return Err(Error::invalid(location, "score is not an integer"));
            }
            if !(1.0..=10.0).contains(&qa.score) {
                return Err(Error::invalid(location, "score out of range"));
            }
            Ok(QaItem {
                kind: qa.kind,
                score: qa.score as u8,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let record = SampleRecord {
        sample_id: raw.sample_id,
        prompt_id: raw.prompt_id,
        refs,
        ref_attributes,
        gens,
        hps: raw.hps,
        qa_items,
    };
    record.validate()?;
    Ok(record)
}

fn load_embeddings(
    raw: &RawEmbeddings,
    role: EmbeddingRole,
    base_dir: Option<&Path>,
) -> Result<EmbeddingSet> {
    if raw.dim == 0 {
        return Err(Error::invalid("dim", "dimension must be >= 1"));
    }
    let flat = match (&raw.data, &raw.file) {
        (Some(data), None) => {
            if data.len() % raw.dim != 0 {
                return Err(Error::invalid(
                    "data",
                    format!(
                        "dimension mismatch: {} values is not a multiple of dim {}",
                        data.len(),
                        raw.dim
                    ),
                ));
            }
            if let Some(rows) = raw.rows {
                if rows.checked_mul(raw.dim) != Some(data.len()) {
                    return Err(Error::invalid(
                        "rows",
                        format!("rows = {rows} disagrees with {} values", data.len()),
                    ));
                }
            }
            data.clone()
        }
        (None, Some(file)) => {
            let rows = raw
                .rows
                .ok_or_else(|| Error::invalid("rows", "external embeddings need rows"))?;
            read_sidecar(file, rows, raw.dim, base_dir)?
        }
        _ => {
            return Err(Error::invalid(
                "data",
                "exactly one of data or file must be given",
            ))
        }
    };
    let items = flat
        .chunks(raw.dim)
        .enumerate()
        .map(|(i, row)| {
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("row {i} column {c}")));
            }
            Embedding::new(row.to_vec()).map_err(|_| Error::ZeroNorm(format!("row {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingSet::new(role, raw.dim, items)
}

fn read_sidecar(file: &str, rows: usize, dim: usize, base_dir: Option<&Path>) -> Result<Vec<f64>> {
    let rel = Path::new(file);
    if rel.is_absolute() {
        return Err(Error::invalid("file", "sidecar path must be relative"));
    }
    let base = base_dir.ok_or_else(|| {
        Error::invalid("file", "external embeddings need a manifest directory")
    })?;
    let path: PathBuf = base.join(rel);
    let floats = read_f32_file(&path)?;
    let want = rows
        .checked_mul(dim)
        .ok_or_else(|| Error::invalid("rows", "rows * dim overflows"))?;
    if floats.len() != want {
        return Err(Error::invalid(
            "file",
            format!(
                "{} holds {} floats, expected {rows} x {dim}",
                path.display(),
                floats.len()
            ),
        ));
    }
    Ok(floats.into_iter().map(f64::from).collect())
}

/// Reads a raw little-endian `f32` array.
pub fn read_f32_file(path: &Path) -> Result<Vec<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Malformed(format!(
            "{} has {} bytes, not a whole number of f32 values",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Writes a raw little-endian `f32` array.
pub fn write_f32_file(path: &Path, values: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct CanonicalEmbeddings {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Serialize)]
struct CanonicalSample<'a> {
    sample_id: &'a str,
    prompt_id: &'a str,
    n_refs: usize,
    ref_embeddings: CanonicalEmbeddings,
    ref_attributes: &'a [AttributeLabel],
    gen_embeddings: CanonicalEmbeddings,
    #[serde(skip_serializing_if = "Option::is_none")]
    hps: Option<f64>,
    qa_items: &'a [QaItem],
}

#[derive(Serialize)]
struct CanonicalManifest<'a> {
    version: u32,
    samples: Vec<CanonicalSample<'a>>,
}

/// Canonical JSON form: every embedding set inline, absent `hps` omitted.
pub fn serialize_manifest(records: &[SampleRecord]) -> String {
    let doc = CanonicalManifest {
        version: MANIFEST_VERSION,
        samples: records
            .iter()
            .map(|r| CanonicalSample {
                sample_id: &r.sample_id,
                prompt_id: &r.prompt_id,
                n_refs: r.n_refs(),
                ref_embeddings: CanonicalEmbeddings {
                    dim: r.refs.dim(),
                    data: r.refs.flat(),
                },
                ref_attributes: &r.ref_attributes,
                gen_embeddings: CanonicalEmbeddings {
                    dim: r.gens.dim(),
                    data: r.gens.flat(),
                },
                hps: r.hps,
                qa_items: &r.qa_items,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("manifest serializes")
}
