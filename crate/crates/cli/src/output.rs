//! Output files. Every write goes through [`OutputDir`], lands in a
//! temporary file first and is renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub apcl_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self { apcl_version: VERSION.into(), config_hash, seed }
    }

    pub fn comment_line(&self) -> String {
        format!("# apcl_version={} config_hash={} seed={}\n", self.apcl_version, self.config_hash, self.seed)
    }
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    header: Header,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, header: Header) -> std::io::Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root, header, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn atomic(&mut self, rel: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.root.join(rel);
        let dir = path.parent().unwrap_or(&self.root).to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV body behind one `#` comment line with the header fields.
    pub fn csv(&mut self, rel: &str, body: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> anyhow::Result<PathBuf> {
        let mut buf = self.header.comment_line().into_bytes();
        body(&mut buf)?;
        Ok(self.atomic(rel, &buf)?)
    }

    /// NDJSON whose first line is the header object.
    pub fn ndjson(&mut self, rel: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> anyhow::Result<PathBuf> {
        let mut buf = serde_json::to_vec(&self.header)?;
        buf.push(b'\n');
        body(&mut buf)?;
        Ok(self.atomic(rel, &buf)?)
    }

    /// `{"header": …, "report": …}`, pretty printed.
    pub fn json<S: Serialize>(&mut self, rel: &str, report: &S) -> anyhow::Result<PathBuf> {
        #[derive(Serialize)]
        struct Wrapped<'a, S> {
            header: &'a Header,
            report: &'a S,
        }
        let mut buf = serde_json::to_vec_pretty(&Wrapped { header: &self.header, report })?;
        buf.push(b'\n');
        Ok(self.atomic(rel, &buf)?)
    }
}
