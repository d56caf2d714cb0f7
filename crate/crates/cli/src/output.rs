use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::time::Instant;

/// Writes the artifacts of one run. Every CSV row and every JSON document
/// carries the config hash.
pub struct Output {
    dir: PathBuf,
    hash: String,
    command: String,
    files: Vec<String>,
    started: Instant,
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

impl Output {
    pub fn new(dir: PathBuf, hash: String, command: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Output { dir, hash, command: command.into(), files: Vec::new(), started: Instant::now() })
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        let mut h = vec!["config_hash"];
        h.extend_from_slice(header);
        w.write_record(&h)?;
        for r in rows {
            let mut rec = vec![self.hash.clone()];
            rec.extend(r.iter().cloned());
            w.write_record(&rec)?;
        }
        w.flush()?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let body = json!({ "config_hash": self.hash, "command": self.command, "result": value });
        std::fs::write(self.dir.join(name), serde_json::to_string_pretty(&body)? + "\n")?;
        self.files.push(name.into());
        Ok(())
    }

    /// `manifest.json`: tool version, command, config hash, files, wall time.
    pub fn finish(self, status: &str, threads: usize, config: &Value) -> anyhow::Result<()> {
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_hash": self.hash,
            "config": config,
            "status": status,
            "threads": threads,
            "files": self.files,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        });
        std::fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}
