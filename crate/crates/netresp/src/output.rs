//! Staged output: files are written into a hidden temporary directory
//! inside the output directory and renamed into place only once the whole
//! command has succeeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::sha256_hex;
use crate::error::{CliError, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Written as `manifest.json` next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_sha256: String) -> Self {
        Self {
            tool: "netresp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_sha256,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).at(path)?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }
}

/// Checks the output directory, creating it when `create` is set.
pub fn prepare_out_dir(out: &Path, create: bool) -> Result<()> {
    if out.is_dir() {
        return Ok(());
    }
    if out.exists() {
        return Err(CliError::Usage(format!("{} is not a directory", out.display())));
    }
    if !create {
        return Err(CliError::Usage(format!(
            "output directory {} does not exist (pass --create to make it)",
            out.display()
        )));
    }
    std::fs::create_dir_all(out).at(out)
}

pub struct Staging {
    out: PathBuf,
    tmp: tempfile::TempDir,
    files: Vec<(String, String)>,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self> {
        let tmp = tempfile::Builder::new().prefix(".netresp-staging-").tempdir_in(out).at(out)?;
        Ok(Self { out: out.to_path_buf(), tmp, files: Vec::new() })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Stages `bytes` under the relative name `name` (may contain `/`).
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.tmp.path().join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).at(parent)?;
        }
        std::fs::write(&path, bytes).at(&path)?;
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Adds the manifest and moves every staged file into the output directory.
    pub fn commit(mut self, mut manifest: Manifest) -> Result<()> {
        manifest.outputs = self.files.iter().map(|(p, h)| FileDigest { path: p.clone(), sha256: h.clone() }).collect();
        self.write_json("manifest.json", &manifest)?;
        for (name, _) in &self.files {
            let from = self.tmp.path().join(name);
            let to = self.out.join(name);
            if let Some(parent) = to.parent() {
                std::fs::create_dir_all(parent).at(parent)?;
            }
            std::fs::rename(&from, &to).at(&to)?;
        }
        Ok(())
    }
}

/// Writes one file atomically: temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).at(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).at(dir)?;
    tmp.write_all(bytes).at(path)?;
    tmp.as_file().sync_all().at(path)?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_lands_before_commit() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut s = Staging::new(dir.path()).unwrap();
            s.write("a.txt", b"x").unwrap();
        }
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        let mut s = Staging::new(dir.path()).unwrap();
        s.write("a.txt", b"x").unwrap();
        s.write("sub/b.txt", b"y").unwrap();
        s.commit(Manifest::new("test", 1, "h".into())).unwrap();
        assert_eq!(std::fs::read(dir.path().join("sub/b.txt")).unwrap(), b"y");
        let m: Manifest = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.outputs.len(), 2);
        let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 3, "{names:?}");
    }

    #[test]
    fn out_dir_rules() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("new");
        assert!(prepare_out_dir(&missing, false).is_err());
        assert!(!missing.exists());
        prepare_out_dir(&missing, true).unwrap();
        assert!(missing.is_dir());
    }
}
