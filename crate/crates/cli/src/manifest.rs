use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes).as_slice()),
        })
    }
}

/// Provenance record written next to every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[&Path], outputs: &[&Path]) -> std::io::Result<Self> {
        let digest_all = |paths: &[&Path]| -> std::io::Result<Vec<FileDigest>> {
            let mut out: Vec<FileDigest> = paths.iter().map(|p| FileDigest::of(p)).collect::<Result<_, _>>()?;
            out.dedup();
            Ok(out)
        };
        Ok(Self {
            tool: "taxolex".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            inputs: digest_all(inputs)?,
            outputs: digest_all(outputs)?,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}
