//! Run bookkeeping: the run record, the output lock and failure cleanup.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::frames::write_atomic;

pub const RECORD_FILE: &str = "run_record.json";
pub const CONFIG_FILE: &str = "config.json";
const LOCK_FILE: &str = ".radarsim.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: Vec<String>,
    pub config_hash: String,
    pub version: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

/// Exclusive use of an output directory for one command.
///
/// Holds an advisory lock file while alive. Unless [`OutputDir::commit`] is
/// called, dropping it removes everything the command added: the whole
/// directory if it did not exist before, otherwise the new entries.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    created: bool,
    before: BTreeSet<PathBuf>,
    committed: bool,
    started: Instant,
}

fn listing(dir: &Path) -> Result<BTreeSet<PathBuf>> {
    fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect()
}

impl OutputDir {
    pub fn acquire(path: &Path) -> Result<Self> {
        let created = !path.exists();
        fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
        let lock = path.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => return Err(Error::Locked(path.to_path_buf())),
            Err(e) => return Err(Error::io(&lock, e)),
        }
        let mut before = listing(path)?;
        before.remove(&lock);
        Ok(Self {
            path: path.to_path_buf(),
            created,
            before,
            committed: false,
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the config echo and the run record, then keeps the outputs.
    pub fn commit(mut self, command: Vec<String>, config: &RunConfig, seeds: Vec<u64>) -> Result<RunRecord> {
        write_atomic(&self.path.join(CONFIG_FILE), config.to_json().as_bytes())?;
        let lock = self.path.join(LOCK_FILE);
        let mut outputs: Vec<String> = listing(&self.path)?
            .into_iter()
            .filter(|p| *p != lock)
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        outputs.push(RECORD_FILE.into());
        outputs.sort();
        outputs.dedup();
        let record = RunRecord {
            command,
            config_hash: config.hash(),
            version: format!("radarsim {}", env!("CARGO_PKG_VERSION")),
            seeds,
            outputs,
            duration_s: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_vec_pretty(&record).expect("record serializes");
        write_atomic(&self.path.join(RECORD_FILE), &json)?;
        self.committed = true;
        Ok(record)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.path.join(LOCK_FILE));
        if self.committed {
            return;
        }
        if self.created {
            let _ = fs::remove_dir_all(&self.path);
            return;
        }
        if let Ok(now) = listing(&self.path) {
            for p in now.difference(&self.before) {
                let _ = if p.is_dir() { fs::remove_dir_all(p) } else { fs::remove_file(p) };
            }
        }
    }
}
