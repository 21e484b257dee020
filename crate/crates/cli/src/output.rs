//! Output directory that remembers the checksum of every file it writes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

/// Shortest round-trip decimal; `NaN` for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    fn write(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, data).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileRecord {
            name: name.to_string(),
            bytes: data.len(),
            sha256: hex::encode(Sha256::digest(data)),
        });
        Ok(())
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(&row)?;
        }
        let data = w.into_inner().map_err(|e| e.into_error())?;
        self.write(name, &data)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.write(name, &data)
    }
}
