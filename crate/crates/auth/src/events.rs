//! Append-only JSON-lines log of Auth state transitions.
//!
//! Every mutation of the Auth tables is first written here and then applied
//! in memory; on startup the log is replayed to rebuild the tables.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{CachedSessionKey, CommunicationPolicy, Owner, PolicyId, RegisteredEntity, SessionKeyId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AuthEvent {
    EntityRegistered { entity: RegisteredEntity },
    PolicyAdded { id: PolicyId, policy: CommunicationPolicy },
    PolicyRemoved { id: PolicyId },
    KeyCreated { key: CachedSessionKey },
    OwnerRegistered { id: SessionKeyId, owner: Owner },
    KeyPurged { id: SessionKeyId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub event: AuthEvent,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("event log io error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt event log {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug)]
pub struct EventLog {
    sink: Option<(PathBuf, File)>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self { sink: None }
    }

    /// Opens (creating if needed) the log at `path` and returns the records
    /// already in it. An unterminated final line left by a crash mid-write
    /// is dropped and truncated away.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<LogRecord>), LogError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| LogError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .read(true)
            .write(true)
            .open(&path)
            .map_err(io_err)?;
        let mut contents = String::new();
        file.read_to_string(&mut contents).map_err(io_err)?;

        let mut records = Vec::new();
        let mut good_len = 0usize;
        let mut offset = 0usize;
        for (idx, line) in contents.split_inclusive('\n').enumerate() {
            offset += line.len();
            let terminated = line.ends_with('\n');
            let text = line.trim_end();
            if text.is_empty() {
                good_len = offset;
                continue;
            }
            match (serde_json::from_str::<LogRecord>(text), terminated) {
                (Ok(rec), true) => {
                    records.push(rec);
                    good_len = offset;
                }
                (_, false) => {
                    tracing::warn!(path = %path.display(), "dropping torn final log line");
                }
                (Err(e), true) => {
                    return Err(LogError::Corrupt {
                        path,
                        line: idx + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        if good_len < contents.len() {
            file.set_len(good_len as u64).map_err(io_err)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io_err)?;
        Ok((
            Self {
                sink: Some((path, file)),
            },
            records,
        ))
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        let Some((path, file)) = self.sink.as_mut() else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(record).expect("log records always serialize");
        line.push(b'\n');
        file.write_all(&line)
            .and_then(|_| file.sync_data())
            .map_err(|source| LogError::Io {
                path: path.clone(),
                source,
            })
    }
}
