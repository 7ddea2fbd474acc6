//! Two-file embedding bundles.
//!
//! The manifest is UTF-8 text:
//!
//! ```text
//! count=2
//! dim=3
//! dtype=f32
//! byte_order=little
//! ids:
//! ch:0:par:0
//! ch:0:par:1
//! ```
//!
//! The blob holds `count * dim` IEEE-754 single-precision floats, little-endian,
//! row-major, in manifest id order.

use std::collections::HashMap;
use std::path::Path;

use super::CorpusError;

/// Norms this close to 1 are kept as stored (a few f32 ulps).
const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle {
    ids: Vec<String>,
    dim: usize,
    vectors: Vec<Vec<f32>>,
    zero: Vec<bool>,
    index: HashMap<String, usize>,
}

impl EmbeddingBundle {
    /// Builds a bundle, normalizing every non-zero vector to unit length.
    pub fn from_vectors(
        ids: Vec<String>,
        dim: usize,
        vectors: Vec<Vec<f32>>,
    ) -> Result<EmbeddingBundle, CorpusError> {
        if dim == 0 {
            return Err(CorpusError::Manifest("dim must be positive".into()));
        }
        if ids.len() != vectors.len() {
            return Err(CorpusError::Manifest(format!(
                "{} ids but {} vectors",
                ids.len(),
                vectors.len()
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(id.clone()));
            }
        }
        let mut zero = Vec::with_capacity(ids.len());
        let mut normalized = Vec::with_capacity(ids.len());
        for (id, v) in ids.iter().zip(vectors) {
            if v.len() != dim {
                return Err(CorpusError::Manifest(format!(
                    "vector {id:?} has length {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CorpusError::NonFinite(id.clone()));
            }
            let n = v.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            if n == 0.0 {
                zero.push(true);
                normalized.push(v);
            } else if (n - 1.0).abs() <= UNIT_TOLERANCE {
                // already unit length; dividing again would perturb the last bit
                zero.push(false);
                normalized.push(v);
            } else {
                zero.push(false);
                normalized.push(v.iter().map(|&x| (f64::from(x) / n) as f32).collect());
            }
        }
        Ok(EmbeddingBundle {
            ids,
            dim,
            vectors: normalized,
            zero,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.vectors[i].as_slice())
    }

    /// Looks up a vector, failing on unknown ids and zero vectors.
    pub fn require(&self, id: &str) -> Result<&[f32], CorpusError> {
        let &i = self
            .index
            .get(id)
            .ok_or_else(|| CorpusError::UnresolvedId(id.to_string()))?;
        if self.zero[i] {
            return Err(CorpusError::ZeroEmbedding(id.to_string()));
        }
        Ok(&self.vectors[i])
    }

    pub fn is_zero(&self, id: &str) -> bool {
        self.index.get(id).is_some_and(|&i| self.zero[i])
    }

    pub fn manifest_text(&self) -> String {
        let mut out = format!(
            "count={}\ndim={}\ndtype=f32\nbyte_order=little\nids:\n",
            self.ids.len(),
            self.dim
        );
        for id in &self.ids {
            out.push_str(id);
            out.push('\n');
        }
        out
    }

    pub fn blob(&self) -> Vec<u8> {
        self.vectors
            .iter()
            .flatten()
            .flat_map(|x| x.to_le_bytes())
            .collect()
    }

    pub fn write(&self, manifest_path: &Path, blob_path: &Path) -> std::io::Result<()> {
        std::fs::write(manifest_path, self.manifest_text())?;
        std::fs::write(blob_path, self.blob())
    }
}

/// Parses a manifest/blob pair already in memory.
pub fn parse_embeddings(manifest: &str, blob: &[u8]) -> Result<EmbeddingBundle, CorpusError> {
    let mut count = None;
    let mut dim = None;
    let mut ids = Vec::new();
    let mut in_ids = false;
    for line in manifest.lines() {
        let line = line.trim_end_matches('\r');
        if in_ids {
            if !line.trim().is_empty() {
                ids.push(line.trim().to_string());
            }
            continue;
        }
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "ids:" {
            in_ids = true;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CorpusError::Manifest(format!("unexpected line {line:?}")))?;
        let value = value.trim();
        let bad = || CorpusError::Manifest(format!("bad value for {key}: {value:?}"));
        match key.trim() {
            "count" => count = Some(value.parse::<usize>().map_err(|_| bad())?),
            "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad())?),
            "dtype" if value == "f32" => {}
            "byte_order" if value == "little" => {}
            "dtype" | "byte_order" => return Err(bad()),
            other => return Err(CorpusError::Manifest(format!("unknown key {other:?}"))),
        }
    }
    let count = count.ok_or_else(|| CorpusError::Manifest("missing count".into()))?;
    let dim = dim.ok_or_else(|| CorpusError::Manifest("missing dim".into()))?;
    if ids.len() != count {
        return Err(CorpusError::Manifest(format!(
            "count={count} but {} ids listed",
            ids.len()
        )));
    }
    let expected = count * dim * 4;
    if blob.len() != expected {
        return Err(CorpusError::SizeMismatch {
            expected,
            actual: blob.len(),
        });
    }
    let vectors = if dim == 0 {
        Vec::new()
    } else {
        blob.chunks_exact(dim * 4)
            .map(|row| {
                row.chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect()
            })
            .collect()
    };
    EmbeddingBundle::from_vectors(ids, dim, vectors)
}

pub fn load_embeddings(manifest_path: &Path, blob_path: &Path) -> Result<EmbeddingBundle, CorpusError> {
    let manifest = std::fs::read_to_string(manifest_path)?;
    let blob = std::fs::read(blob_path)?;
    parse_embeddings(&manifest, &blob)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(values: &[f32]) -> Vec<u8> {
        values.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    const MANIFEST: &str = "count=2\ndim=3\ndtype=f32\nbyte_order=little\nids:\na\nb\n";

    #[test]
    fn two_vectors_normalized() {
        let b = parse_embeddings(MANIFEST, &blob(&[3.0, 4.0, 0.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.dim(), 3);
        let a = b.get("a").unwrap();
        assert!((a[0] - 0.6).abs() < 1e-7 && (a[1] - 0.8).abs() < 1e-7 && a[2] == 0.0);
        assert_eq!(b.get("b").unwrap(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn size_mismatch() {
        let err = parse_embeddings(MANIFEST, &[0u8; 23]).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::SizeMismatch {
                expected: 24,
                actual: 23
            }
        ));
    }

    #[test]
    fn duplicate_ids_and_zero_vectors() {
        let dup = "count=2\ndim=1\nids:\na\na\n";
        assert!(matches!(
            parse_embeddings(dup, &blob(&[1.0, 2.0])),
            Err(CorpusError::DuplicateId(id)) if id == "a"
        ));
        let b = parse_embeddings("count=1\ndim=2\nids:\nz\n", &blob(&[0.0, 0.0])).unwrap();
        assert!(b.is_zero("z"));
        assert_eq!(b.get("z").unwrap(), [0.0, 0.0]);
        assert!(matches!(b.require("z"), Err(CorpusError::ZeroEmbedding(_))));
        assert!(matches!(b.require("q"), Err(CorpusError::UnresolvedId(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let err = parse_embeddings("count=1\ndim=1\nids:\nx\n", &blob(&[f32::NAN])).unwrap_err();
        assert!(matches!(err, CorpusError::NonFinite(_)));
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let b = EmbeddingBundle::from_vectors(
            vec!["x".into(), "y".into()],
            2,
            vec![vec![1.0, 1.0], vec![0.0, -2.0]],
        )
        .unwrap();
        let (m, bl) = (dir.path().join("e.manifest"), dir.path().join("e.bin"));
        b.write(&m, &bl).unwrap();
        assert_eq!(load_embeddings(&m, &bl).unwrap(), b);
    }
}
