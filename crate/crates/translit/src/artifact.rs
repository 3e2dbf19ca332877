//! Trained-model serialization: a versioned, checksummed binary container
//! with a one-line textual header, extension `.tlm`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: u32 = 1;

/// Serialized state of one trained component-function classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub component_kind: String,
    pub learner_kind: String,
    pub window_k: u32,
    pub label_inventory: Vec<String>,
    pub payload: Vec<u8>,
}

fn push_len_prefixed(buf: &mut Vec<u8>, bytes: &[u8]) {
    buf.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    buf.extend_from_slice(bytes);
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Corrupt("truncated model file".into()));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn take_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn take_len_prefixed(&mut self) -> Result<&'a [u8]> {
        let len = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        self.take(len as usize)
    }
}

pub fn save_model(artifact: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    buf.extend_from_slice(
        format!(
            "#tlm v{} component={} learner={} k={}\n",
            artifact.version, artifact.component_kind, artifact.learner_kind, artifact.window_k
        )
        .as_bytes(),
    );
    buf.extend_from_slice(&artifact.version.to_le_bytes());
    buf.extend_from_slice(&artifact.window_k.to_le_bytes());
    push_len_prefixed(&mut buf, artifact.component_kind.as_bytes());
    push_len_prefixed(&mut buf, artifact.learner_kind.as_bytes());
    buf.extend_from_slice(&(artifact.label_inventory.len() as u32).to_le_bytes());
    for label in &artifact.label_inventory {
        push_len_prefixed(&mut buf, label.as_bytes());
    }
    push_len_prefixed(&mut buf, &artifact.payload);
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.len() < 32 {
        return Err(Error::Corrupt("file shorter than checksum".into()));
    }
    let (body, checksum) = data.split_at(data.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != checksum {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }
    let header_end = body
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Corrupt("missing header line".into()))?;
    let mut r = Reader { data: body, pos: header_end + 1 };
    let version = r.take_u32()?;
    if version != ARTIFACT_VERSION {
        return Err(Error::VersionMismatch { found: version, supported: ARTIFACT_VERSION });
    }
    let window_k = r.take_u32()?;
    let utf8 = |bytes: &[u8]| {
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Corrupt("non-UTF-8 field".into()))
    };
    let component_kind = utf8(r.take_len_prefixed()?)?;
    let learner_kind = utf8(r.take_len_prefixed()?)?;
    let n_labels = r.take_u32()?;
    let mut label_inventory = Vec::with_capacity(n_labels as usize);
    for _ in 0..n_labels {
        label_inventory.push(utf8(r.take_len_prefixed()?)?);
    }
    let payload = r.take_len_prefixed()?.to_vec();
    Ok(ModelArtifact { version, component_kind, learner_kind, window_k, label_inventory, payload })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelArtifact {
        ModelArtifact {
            version: ARTIFACT_VERSION,
            component_kind: "SPT".into(),
            learner_kind: "MEM".into(),
            window_k: 3,
            label_inventory: vec!["b".into(), "o".into(), "~".into()],
            payload: vec![1, 2, 3, 250, 0, 7],
        }
    }

    #[test]
    fn roundtrip_identity() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let art = sample();
        save_model(&art, f.path()).unwrap();
        assert_eq!(load_model(f.path()).unwrap(), art);
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let mut art = sample();
        save_model(&art, f.path()).unwrap();
        // Rewrite with a bumped version but a valid checksum.
        art.version = ARTIFACT_VERSION + 1;
        save_model(&art, f.path()).unwrap();
        assert!(matches!(load_model(f.path()), Err(Error::VersionMismatch { found: 2, .. })));
    }

    #[test]
    fn truncation_fails_checksum() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&sample(), f.path()).unwrap();
        let mut data = std::fs::read(f.path()).unwrap();
        data.truncate(data.len() - 5);
        std::fs::write(f.path(), data).unwrap();
        assert!(matches!(load_model(f.path()), Err(Error::Corrupt(_))));
    }

    #[test]
    fn bitflip_fails_checksum() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&sample(), f.path()).unwrap();
        let mut data = std::fs::read(f.path()).unwrap();
        let mid = data.len() / 2;
        data[mid] ^= 0x40;
        std::fs::write(f.path(), data).unwrap();
        assert!(load_model(f.path()).is_err());
    }
}
