//! Run directories: `<out>/<timestamp>-<label>/` with a manifest, traces,
//! checkpoints and a plain-text report.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use yardsale::{Error, Result};

use crate::config::{Config, RunInfo};

pub struct RunDir {
    path: PathBuf,
}

fn sanitize(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}

impl RunDir {
    /// Creates a fresh directory under `out`, adding a numeric suffix when
    /// the name is taken.
    pub fn create(out: &Path, label: &str) -> Result<Self> {
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = format!("{stamp}-{}", sanitize(label));
        fs::create_dir_all(out)?;
        for k in 0..1000 {
            let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
            let path = out.join(name);
            match fs::create_dir(&path) {
                Ok(()) => return Ok(Self { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(Error::Parse(format!("no free run directory name under {}", out.display())))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        Ok(fs::write(self.path.join(name), text)?)
    }

    pub fn write_manifest(&self, config: &Config, command: &str) -> Result<()> {
        let mut manifest = config.clone();
        manifest.run = Some(RunInfo {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        });
        self.write_text("manifest.toml", &manifest.to_toml())
    }
}
