use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Git-style content digest: SHA-256 over `blob <len>\0` followed by the
/// bytes.
pub fn content_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: content_digest(bytes),
        }
    }
}

/// Record of one command run. The digest covers everything that determines
/// the outputs (command, version, parameters, seed, input contents) and
/// nothing else, so repeating a run reproduces it.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub digest: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(
        command: &str,
        parameters: Value,
        seed: Option<u64>,
        inputs: Vec<FileDigest>,
    ) -> Self {
        let tool_version = env!("CARGO_PKG_VERSION").to_string();
        let input_digests: Vec<&str> = inputs.iter().map(|f| f.sha256.as_str()).collect();
        let core = json!({
            "command": command,
            "tool_version": tool_version,
            "parameters": parameters,
            "seed": seed,
            "inputs": input_digests,
        });
        let digest = hex::encode(Sha256::digest(core.to_string().as_bytes()));
        Self {
            command: command.to_string(),
            tool_version,
            parameters,
            seed,
            inputs,
            outputs: Vec::new(),
            digest,
            started_unix: now(),
            finished_unix: 0,
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix = now();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn git_blob_digest() {
        // `git hash-object --object-format=sha256` of an empty file.
        assert_eq!(
            content_digest(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn digest_ignores_input_paths_and_time() {
        let a = RunManifest::new(
            "census",
            json!({"L": 10}),
            Some(1),
            vec![FileDigest::of(Path::new("a"), b"x")],
        );
        let b = RunManifest::new(
            "census",
            json!({"L": 10}),
            Some(1),
            vec![FileDigest::of(Path::new("b"), b"x")],
        );
        let c = RunManifest::new("census", json!({"L": 11}), Some(1), vec![]);
        assert_eq!(a.digest, b.digest);
        assert_ne!(a.digest, c.digest);
    }
}
