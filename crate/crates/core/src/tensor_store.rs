//! HOT ("head output tensor") files and corpus manifests.
//!
//! A HOT file is a fixed 32-byte little-endian header followed by the
//! row-major `f32` payload:
//!
//! ```text
//! 0..8    magic "HOTv0001"
//! 8..12   u32 layer
//! 12..16  u32 head
//! 16..20  u32 S (rows)
//! 20..24  u32 D' (columns)
//! 24..32  u64 payload byte length (= 4 * S * D')
//! 32..    S * D' f32 values
//! ```
//!
//! Sample ids are not stored in the file; they live in the manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelGeometry;

pub const HOT_MAGIC: &[u8; 8] = b"HOTv0001";
pub const HOT_HEADER_LEN: usize = 32;

/// One sample's output matrix of one attention head, `seq_len × head_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    pub layer: usize,
    pub head: usize,
    pub sample_id: String,
    pub seq_len: usize,
    pub head_dim: usize,
    /// Row-major, `seq_len * head_dim` entries.
    pub data: Vec<f32>,
}

impl HeadOutput {
    pub fn new(
        layer: usize,
        head: usize,
        sample_id: impl Into<String>,
        seq_len: usize,
        head_dim: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let out = Self {
            layer,
            head,
            sample_id: sample_id.into(),
            seq_len,
            head_dim,
            data,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 || self.head_dim == 0 {
            return Err(Error::Shape(format!(
                "empty head output {}x{}",
                self.seq_len, self.head_dim
            )));
        }
        if self.data.len() != self.seq_len * self.head_dim {
            return Err(Error::Shape(format!(
                "{} values for a {}x{} matrix",
                self.data.len(),
                self.seq_len,
                self.head_dim
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn row(&self, s: usize) -> &[f32] {
        &self.data[s * self.head_dim..(s + 1) * self.head_dim]
    }

    /// Widened copy of the payload for computation.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }
}

fn u32_field(v: usize, name: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Shape(format!("{name} = {v} does not fit in u32")))
}

pub fn encode_head_output(out: &HeadOutput) -> Result<Vec<u8>> {
    out.validate()?;
    let payload_len = 4 * out.data.len();
    let mut buf = Vec::with_capacity(HOT_HEADER_LEN + payload_len);
    buf.extend_from_slice(HOT_MAGIC);
    buf.extend_from_slice(&u32_field(out.layer, "layer")?.to_le_bytes());
    buf.extend_from_slice(&u32_field(out.head, "head")?.to_le_bytes());
    buf.extend_from_slice(&u32_field(out.seq_len, "S")?.to_le_bytes());
    buf.extend_from_slice(&u32_field(out.head_dim, "D'")?.to_le_bytes());
    buf.extend_from_slice(&(payload_len as u64).to_le_bytes());
    for v in &out.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

pub fn write_head_output(path: impl AsRef<Path>, out: &HeadOutput) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_head_output(out)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Decodes a HOT buffer. `path` is only used for error messages.
pub fn decode_head_output(bytes: &[u8], path: &Path) -> Result<HeadOutput> {
    if bytes.len() < HOT_MAGIC.len() || &bytes[..8] != HOT_MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if bytes.len() < HOT_HEADER_LEN {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: HOT_HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
    let layer = u32_at(8);
    let head = u32_at(12);
    let seq_len = u32_at(16);
    let head_dim = u32_at(20);
    let payload_len = u64::from_le_bytes(bytes[24..32].try_into().unwrap());

    let expected_payload = 4 * (seq_len as u64) * (head_dim as u64);
    if payload_len != expected_payload {
        return Err(Error::InconsistentHeader {
            path: path.to_path_buf(),
            reason: format!(
                "payload length {payload_len} but dims {seq_len}x{head_dim} need {expected_payload}"
            ),
        });
    }
    if seq_len == 0 || head_dim == 0 {
        return Err(Error::InconsistentHeader {
            path: path.to_path_buf(),
            reason: format!("zero dimension {seq_len}x{head_dim}"),
        });
    }
    let total = HOT_HEADER_LEN as u64 + payload_len;
    let found = bytes.len() as u64;
    if found < total {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: total,
            found,
        });
    }
    if found > total {
        return Err(Error::InconsistentHeader {
            path: path.to_path_buf(),
            reason: format!("{} trailing bytes after payload", found - total),
        });
    }
    let data: Vec<f32> = bytes[HOT_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let out = HeadOutput {
        layer,
        head,
        sample_id: String::new(),
        seq_len,
        head_dim,
        data,
    };
    out.validate()?;
    Ok(out)
}

/// Reads a HOT file. The returned `sample_id` is empty; use
/// [`iter_samples`] to get outputs labelled from a manifest.
pub fn read_head_output(path: impl AsRef<Path>) -> Result<HeadOutput> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_head_output(&bytes, path)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryKey {
    pub layer: usize,
    pub head: usize,
    pub sample_id: String,
}

/// A corpus of head outputs: `L × H × n` HOT files.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub geometry: ModelGeometry,
    pub samples: Vec<String>,
    /// Paths are resolved against the manifest's directory at load time.
    pub entries: BTreeMap<EntryKey, PathBuf>,
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntryDoc {
    layer: usize,
    head: usize,
    sample_id: String,
    path: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestDoc {
    geometry: ModelGeometry,
    samples: Vec<String>,
    entries: Vec<ManifestEntryDoc>,
    #[serde(default)]
    metadata: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn path_of(&self, layer: usize, head: usize, sample_id: &str) -> Option<&Path> {
        self.entries
            .get(&EntryKey {
                layer,
                head,
                sample_id: sample_id.to_string(),
            })
            .map(PathBuf::as_path)
    }

    /// Structural checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.samples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::new();
        for s in &self.samples {
            if !seen.insert(s.as_str()) {
                return Err(Error::IncompleteCorpus(format!(
                    "duplicate sample id {s:?}"
                )));
            }
        }
        for key in self.entries.keys() {
            self.geometry.check_layer(key.layer)?;
            self.geometry.check_head(key.head)?;
            if !seen.contains(key.sample_id.as_str()) {
                return Err(Error::IncompleteCorpus(format!(
                    "entry references unknown sample {:?}",
                    key.sample_id
                )));
            }
        }
        let g = &self.geometry;
        let expected = g.num_layers * g.num_heads * self.samples.len();
        if self.entries.len() != expected {
            return Err(Error::IncompleteCorpus(format!(
                "{} entries, expected L*H*n = {expected}",
                self.entries.len()
            )));
        }
        Ok(())
    }

    /// Writes the manifest JSON. Entry paths under the manifest's directory are
    /// stored relative to it; entries are listed layer-major in sample order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let mut entries = Vec::with_capacity(self.entries.len());
        for layer in 0..self.geometry.num_layers {
            for head in 0..self.geometry.num_heads {
                for sid in &self.samples {
                    let Some(p) = self.path_of(layer, head, sid) else {
                        continue;
                    };
                    let rel = p.strip_prefix(base).unwrap_or(p);
                    entries.push(ManifestEntryDoc {
                        layer,
                        head,
                        sample_id: sid.clone(),
                        path: rel.to_string_lossy().replace('\\', "/"),
                    });
                }
            }
        }
        let doc = ManifestDoc {
            geometry: self.geometry,
            samples: self.samples.clone(),
            entries,
            metadata: self.metadata.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ManifestDoc = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = BTreeMap::new();
    for e in doc.entries {
        let key = EntryKey {
            layer: e.layer,
            head: e.head,
            sample_id: e.sample_id,
        };
        let p = Path::new(&e.path);
        let resolved = if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        };
        if entries.insert(key.clone(), resolved).is_some() {
            return Err(Error::IncompleteCorpus(format!(
                "duplicate entry for layer {}, head {}, sample {:?}",
                key.layer, key.head, key.sample_id
            )));
        }
    }
    let manifest = Manifest {
        geometry: doc.geometry,
        samples: doc.samples,
        entries,
        metadata: doc.metadata,
    };
    manifest.validate()?;
    for p in manifest.entries.values() {
        if !p.is_file() {
            return Err(Error::DanglingPath(p.clone()));
        }
    }
    Ok(manifest)
}

/// Enumerates the `n` outputs of one head in manifest sample order.
pub fn iter_samples(
    manifest: &Manifest,
    layer: usize,
    head: usize,
) -> Result<impl Iterator<Item = Result<HeadOutput>> + '_> {
    manifest.geometry.check_layer(layer)?;
    manifest.geometry.check_head(head)?;
    Ok(manifest
        .samples
        .iter()
        .map(move |sid| load_sample(manifest, layer, head, sid)))
}

/// Reads and checks one entry against the manifest geometry, labelling
/// any failure with its (layer, head, sample id).
pub fn load_sample(
    manifest: &Manifest,
    layer: usize,
    head: usize,
    sample_id: &str,
) -> Result<HeadOutput> {
    let wrap = |source: Error| Error::Sample {
        layer,
        head,
        sample_id: sample_id.to_string(),
        source: Box::new(source),
    };
    let path = manifest
        .path_of(layer, head, sample_id)
        .ok_or_else(|| wrap(Error::IncompleteCorpus("missing entry".into())))?;
    let mut out = read_head_output(path).map_err(wrap)?;
    let g = &manifest.geometry;
    if out.layer != layer || out.head != head {
        return Err(wrap(Error::InconsistentHeader {
            path: path.to_path_buf(),
            reason: format!(
                "header says layer {}, head {}; manifest says layer {layer}, head {head}",
                out.layer, out.head
            ),
        }));
    }
    if out.head_dim != g.head_dim {
        return Err(wrap(Error::Shape(format!(
            "D' = {} but geometry has {}",
            out.head_dim, g.head_dim
        ))));
    }
    if out.seq_len > g.max_seq_len {
        return Err(wrap(Error::Shape(format!(
            "S = {} exceeds max_seq_len {}",
            out.seq_len, g.max_seq_len
        ))));
    }
    out.sample_id = sample_id.to_string();
    Ok(out)
}
