//! Run manifest: everything needed to replay a run bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mahler::construct::ConstructionConfig;
use mahler::{Error, Result};

pub const HEADER: &str = "mahler-manifest v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunManifest {
    pub tool: String,
    pub config: ConstructionConfig,
    /// `(stage, path, checksum)` for every stage file written.
    pub stages: Vec<(usize, PathBuf, String)>,
}

impl RunManifest {
    pub fn new(config: ConstructionConfig) -> Self {
        RunManifest { tool: format!("mahler {}", env!("CARGO_PKG_VERSION")), config, stages: Vec::new() }
    }

    pub fn path_for(stage_file: &Path) -> PathBuf {
        let mut s = stage_file.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    }

    /// Later records for the same stage replace earlier ones.
    pub fn record(&mut self, stage: usize, path: &Path, checksum: &str) {
        self.stages.retain(|(k, _, _)| *k < stage);
        self.stages.push((stage, path.to_path_buf(), checksum.to_string()));
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\ntool = {}\n", self.tool);
        let _ = writeln!(out, "seed = {}", self.config.seed);
        let _ = writeln!(out, "precision = {}..{}", self.config.policy.start, self.config.policy.ceiling);
        for (k, p, c) in &self.stages {
            let _ = writeln!(out, "stage {k} {c} {}", p.display());
        }
        out += "[config]\n";
        out += &self.config.to_text();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("manifest: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("missing header"));
        }
        let mut tool = String::new();
        let mut stages = Vec::new();
        let mut config = None;
        while let Some(l) = lines.next() {
            if l == "[config]" {
                let rest: Vec<&str> = lines.by_ref().collect();
                config = Some(rest.join("\n").parse::<ConstructionConfig>()?);
                break;
            }
            if let Some(t) = l.strip_prefix("tool = ") {
                tool = t.to_string();
            } else if let Some(s) = l.strip_prefix("stage ") {
                let mut it = s.splitn(3, ' ');
                let k = it.next().and_then(|k| k.parse().ok()).ok_or_else(|| bad("stage index"))?;
                let c = it.next().ok_or_else(|| bad("stage checksum"))?;
                let p = it.next().ok_or_else(|| bad("stage path"))?;
                stages.push((k, PathBuf::from(p), c.to_string()));
            }
            // seed and precision are informational; the config is authoritative
        }
        Ok(RunManifest { tool, config: config.ok_or_else(|| bad("no [config] section"))?, stages })
    }

    /// A config file may be a plain config or a manifest to replay.
    pub fn config_from(text: &str) -> Result<ConstructionConfig> {
        if text.starts_with(HEADER) {
            Ok(Self::from_text(text)?.config)
        } else {
            text.parse()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = RunManifest::new("sigma = 2:1\nseed = 5".parse().unwrap());
        m.record(1, Path::new("a.state"), "ab");
        m.record(2, Path::new("a.state"), "cd");
        m.record(2, Path::new("a.state"), "ef");
        let back = RunManifest::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.stages.len(), 2);
        assert_eq!(RunManifest::config_from(&m.to_text()).unwrap().seed, 5);
    }
}
