use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance written into every output. Thread counts are left out so
/// runs that differ only in parallelism produce identical files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub version: String,
}

impl RunManifest {
    pub fn new(
        config_path: &Path,
        config_text: &str,
        seed: Option<u64>,
        out: Option<&Path>,
    ) -> Self {
        RunManifest {
            command: command_line(std::env::args().skip(1)),
            config_path: config_path.display().to_string(),
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
            output_path: out.map(|p| p.display().to_string()),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("command: skbd {}", self.command),
            format!("config: {}", self.config_path),
            format!("config_sha256: {}", self.config_sha256),
        ];
        if let Some(s) = self.seed {
            v.push(format!("seed: {s}"));
        }
        if let Some(o) = &self.output_path {
            v.push(format!("output: {o}"));
        }
        v.push(format!("version: {}", self.version));
        v
    }
}

/// Arguments joined by spaces, without any `--threads` option.
fn command_line(args: impl Iterator<Item = String>) -> String {
    let mut out = Vec::new();
    let mut skip_next = false;
    for a in args {
        if skip_next {
            skip_next = false;
        } else if a == "--threads" {
            skip_next = true;
        } else if !a.starts_with("--threads=") {
            out.push(a);
        }
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_option_is_dropped() {
        let args = ["simulate", "--threads", "4", "--seed", "42", "--threads=2"].map(String::from);
        assert_eq!(command_line(args.into_iter()), "simulate --seed 42");
    }

    #[test]
    fn hash_of_config_text() {
        let m = RunManifest::new(Path::new("c.json"), "", Some(1), None);
        assert_eq!(
            m.config_sha256,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert!(m.lines().contains(&"seed: 1".to_string()));
    }
}
