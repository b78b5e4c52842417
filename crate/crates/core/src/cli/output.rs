use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::grid::io::{write_field, write_pgm, write_sinogram};
use crate::grid::scenario::ScenarioSpec;
use crate::grid::{ScalarField2D, Sinogram};

pub const MANIFEST: &str = "manifest.json";

/// Files written by one run, collected for the manifest.
pub struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
    params: BTreeMap<String, Value>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            params: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.params
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn track(&mut self, path: PathBuf) {
        if !self.files.contains(&path) {
            self.files.push(path);
        }
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        self.track(path);
        Ok(())
    }

    /// Header, raw sidecar and PGM preview.
    pub fn field(&mut self, stem: &str, f: &ScalarField2D) -> Result<()> {
        for p in write_field(&self.path(&format!("{stem}.json")), f)? {
            self.track(p);
        }
        let pgm = self.path(&format!("{stem}.pgm"));
        write_pgm(&pgm, f.grid().nx, f.grid().ny, f.values())?;
        self.track(pgm);
        Ok(())
    }

    pub fn sinogram(&mut self, stem: &str, s: &Sinogram) -> Result<()> {
        for p in write_sinogram(&self.path(&format!("{stem}.json")), s)? {
            self.track(p);
        }
        let pgm = self.path(&format!("{stem}.pgm"));
        write_pgm(&pgm, s.geometry().np, s.geometry().ntheta, s.values())?;
        self.track(pgm);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let mut text = String::from(header);
        text.push('\n');
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(text, "{}", line.join(","));
        }
        self.attach(name, text.as_bytes())
    }

    pub fn attach(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes)?;
        self.track(path);
        Ok(())
    }

    /// Registers a file written by other means.
    pub fn adopt(&mut self, name: &str) {
        let path = self.path(name);
        self.track(path);
    }

    /// Writes the manifest: scenario hash, parameters, tool version and the
    /// hash of every output. No timestamps, so identical runs give identical bytes.
    pub fn finish(self, command: &str, spec: &ScenarioSpec, status: &str) -> Result<PathBuf> {
        let scenario = spec.canonical_json();
        let mut outputs = Vec::with_capacity(self.files.len());
        for p in &self.files {
            let bytes = fs::read(p)?;
            let name = p.strip_prefix(&self.dir).unwrap_or(p).to_string_lossy().into_owned();
            outputs.push(json!({ "file": name, "sha256": sha256_hex(&bytes), "bytes": bytes.len() }));
        }
        outputs.sort_by(|a, b| a["file"].as_str().cmp(&b["file"].as_str()));
        let manifest = json!({
            "tool": "idxray",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "status": status,
            "scenario_sha256": sha256_hex(scenario.as_bytes()),
            "scenario": serde_json::from_str::<Value>(&scenario)?,
            "seed": spec.seed,
            "parameters": self.params,
            "outputs": outputs,
        });
        let path = self.dir.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_outputs_with_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Output::new(dir.path()).unwrap();
        out.attach("a.txt", b"abc").unwrap();
        out.param("k", 3);
        let spec = ScenarioSpec::from_json("{}").unwrap();
        let path = out.finish("test", &spec, "ok").unwrap();
        let m: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(
            m["outputs"][0]["sha256"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(m["parameters"]["k"], 3);
    }
}
