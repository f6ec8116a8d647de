//! Parameter checkpoints: a flat little-endian `f64` blob plus a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::BlockInfo;
use super::ParamStore;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// What kind of network the parameters belong to (e.g. `"q-network"`, `"fle"`).
    pub kind: String,
    /// File name of the parameter blob, relative to the manifest.
    pub data: String,
    pub n_params: usize,
    pub blocks: Vec<BlockInfo>,
    pub seed: u64,
    pub step: u64,
    /// Free-form model description needed to rebuild the network.
    #[serde(default)]
    pub meta: serde_json::Value,
}

fn blob_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

/// Write `store` next to `manifest_path` (`x.json` + `x.bin`).
pub fn save(
    manifest_path: &Path,
    kind: &str,
    store: &ParamStore,
    seed: u64,
    step: u64,
    meta: serde_json::Value,
) -> Result<Manifest> {
    let blob = blob_path(manifest_path);
    let mut bytes = Vec::with_capacity(store.len() * 8);
    for v in &store.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&blob, bytes)?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind: kind.to_string(),
        data: blob
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        n_params: store.len(),
        blocks: store.blocks().to_vec(),
        seed,
        step,
        meta,
    };
    fs::write(manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load(manifest_path: &Path) -> Result<(Manifest, ParamStore)> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(manifest_path)?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            manifest.format_version
        )));
    }
    let blob = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.data);
    let bytes = fs::read(blob)?;
    if bytes.len() != manifest.n_params * 8 {
        return Err(Error::Format(format!(
            "expected {} bytes of parameters, found {}",
            manifest.n_params * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let store = ParamStore::from_parts(values, manifest.blocks.clone());
    Ok((manifest, store))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DuelingQNet;
    use crate::seed;

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seed::rng(1, 1);
        let mut store = ParamStore::new();
        let _ = DuelingQNet::new(&mut store, 5, 4, 3, &mut rng);
        let path = dir.path().join("q.json");
        save(&path, "q-network", &store, 1, 42, serde_json::json!({"hidden": 4})).unwrap();
        let (m, loaded) = load(&path).unwrap();
        assert_eq!(loaded, store);
        assert_eq!(m.step, 42);
        assert_eq!(m.meta["hidden"], 4);
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seed::rng(1, 2);
        let mut store = ParamStore::new();
        let _ = DuelingQNet::new(&mut store, 5, 4, 3, &mut rng);
        let path = dir.path().join("q.json");
        save(&path, "q-network", &store, 1, 0, serde_json::Value::Null).unwrap();
        fs::write(dir.path().join("q.bin"), [0u8; 12]).unwrap();
        assert!(matches!(load(&path), Err(Error::Format(_))));
    }
}
