//! Run manifests, verdict reports and atomic file output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Everything needed to rerun a command.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> RunManifest {
        self.parameters.insert(
            key.to_string(),
            serde_json::to_value(value).expect("parameter serializes"),
        );
        self
    }
}

/// A check verdict, serialized as `{check, n, grid, residual, verdict}` plus
/// optional details.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub n: usize,
    pub grid: Option<usize>,
    pub residual: f64,
    pub verdict: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Verdict {
    pub fn new(check: &str, n: usize, grid: Option<usize>, residual: f64, verdict: bool) -> Verdict {
        Verdict {
            check: check.to_string(),
            n,
            grid,
            residual,
            verdict,
            details: BTreeMap::new(),
        }
    }

    pub fn detail(mut self, key: &str, value: impl Serialize) -> Verdict {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).expect("detail serializes"),
        );
        self
    }
}

/// Write via a sibling temp file and rename, so readers never see partial
/// output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/manifest.json");
        let m = RunManifest::new("evolve").param("n", 3).param("dt", 1e-3);
        write_json(&p, &m).unwrap();
        let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
