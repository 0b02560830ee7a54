//! Artifact emission: UTF-8 CSV with a header row and 17-significant-digit
//! floats, and pretty-printed JSON. Both are byte-deterministic for a given
//! run configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// 17 significant digits round-trips every f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn write_csv(
        &self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = String>,
    ) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = String::new();
        out.push_str(header);
        out.push('\n');
        for row in rows {
            out.push_str(&row);
            out.push('\n');
        }
        fs::File::create(&path)?.write_all(out.as_bytes())?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("serializable value");
        text.push('\n');
        fs::File::create(&path)?.write_all(text.as_bytes())?;
        Ok(path)
    }
}
