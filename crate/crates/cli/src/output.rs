use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Timestamped events for one command run, kept apart from the
/// deterministic outputs. Rewritten on every run.
pub struct RunLog {
    command: String,
    lines: Vec<String>,
}

impl RunLog {
    pub fn new(command: &str) -> Self {
        let mut log = RunLog {
            command: command.to_string(),
            lines: Vec::new(),
        };
        log.event("start", serde_json::json!({}));
        log
    }

    pub fn event(&mut self, event: &str, detail: serde_json::Value) {
        let line = serde_json::json!({
            "at_ms": now_ms(),
            "command": self.command,
            "event": event,
            "detail": detail,
        });
        self.lines.push(line.to_string());
    }

    pub fn finish(mut self, output_dir: &Path) -> Result<()> {
        self.event("finish", serde_json::json!({}));
        let mut text = self.lines.join("\n");
        text.push('\n');
        write_atomic(&output_dir.join("logs").join(format!("{}.jsonl", self.command)), text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }
}
