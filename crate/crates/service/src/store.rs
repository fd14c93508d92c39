use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use thiserror::Error;

use crate::types::TaskState;

pub const LOG_FILE: &str = "annotations.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

/// Append-only log of task snapshots, one JSON line per write.
pub struct Store {
    path: PathBuf,
    file: Mutex<File>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Latest state per dialog. A torn final line is ignored.
pub fn load_tasks(dir: &Path) -> Result<BTreeMap<String, TaskState>, StoreError> {
    let path = dir.join(LOG_FILE);
    let mut tasks = BTreeMap::new();
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(tasks),
        Err(e) => return Err(io(&path)(e)),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>().map_err(io(&path))?;
    let last = lines.len();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TaskState>(line) {
            Ok(t) => {
                tasks.insert(t.dialog_id.clone(), t);
            }
            Err(_) if i + 1 == last => break,
            Err(e) => return Err(StoreError::Corrupt { path, line: i + 1, message: e.to_string() }),
        }
    }
    Ok(tasks)
}

impl Store {
    /// Loads the log, rewrites it with one line per task, and opens it for appends.
    pub fn open(dir: &Path) -> Result<(Self, BTreeMap<String, TaskState>), StoreError> {
        fs::create_dir_all(dir).map_err(io(dir))?;
        let tasks = load_tasks(dir)?;
        let path = dir.join(LOG_FILE);
        let tmp = dir.join(format!("{LOG_FILE}.tmp"));
        {
            let mut f = File::create(&tmp).map_err(io(&tmp))?;
            for t in tasks.values() {
                let line = serde_json::to_string(t).expect("task state serializes");
                writeln!(f, "{line}").map_err(io(&tmp))?;
            }
            f.sync_all().map_err(io(&tmp))?;
        }
        fs::rename(&tmp, &path).map_err(io(&path))?;
        let file = OpenOptions::new().append(true).open(&path).map_err(io(&path))?;
        Ok((Self { path, file: Mutex::new(file) }, tasks))
    }

    pub fn append(&self, task: &TaskState) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(task).expect("task state serializes");
        line.push('\n');
        let mut f = self.file.lock();
        f.write_all(line.as_bytes()).map_err(io(&self.path))?;
        f.sync_data().map_err(io(&self.path))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
