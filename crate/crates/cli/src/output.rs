//! CSV output: a timestamp comment, a settings comment, a header, then rows
//! in grid order. Rows may finish out of order; the sink holds them back
//! until every earlier row has been written.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

pub fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("# generated_unix={secs}")
}

/// Rows of a previous run, by key, if it was produced with `settings`.
#[derive(Debug, Default)]
pub struct Previous {
    rows: HashMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ResumeError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("cannot resume {path}: it was produced with different settings ({found:?}, now {expected:?})")]
    SettingsMismatch { path: String, found: String, expected: String },
}

/// Key of a result row: its first `key_fields` comma-separated fields.
pub fn row_key(row: &str, key_fields: usize) -> String {
    row.split(',').take(key_fields).collect::<Vec<_>>().join(",")
}

impl Previous {
    /// Reads `path` for resumption. A missing file resumes nothing.
    pub fn load(path: &Path, settings: &str, header: &str, key_fields: usize) -> Result<Self, ResumeError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(source) => return Err(ResumeError::Io { path: path.display().to_string(), source }),
        };
        let found = text.lines().find(|l| l.starts_with("# settings:")).unwrap_or("").to_string();
        if found != settings {
            return Err(ResumeError::SettingsMismatch {
                path: path.display().to_string(),
                found,
                expected: settings.to_string(),
            });
        }
        let n_fields = header.split(',').count();
        let rows = text
            .lines()
            .filter(|l| !l.starts_with('#') && *l != header && !l.trim().is_empty())
            // a row cut short by an interrupted write is recomputed
            .filter(|l| l.split(',').count() == n_fields)
            .map(|l| (row_key(l, key_fields), l.to_string()))
            .collect();
        Ok(Self { rows })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.rows.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

struct SinkState {
    out: BufWriter<File>,
    next: usize,
    pending: BTreeMap<usize, String>,
}

/// Serialized writer that emits row `i` only after rows `0..i`.
pub struct OrderedSink {
    state: Mutex<SinkState>,
}

impl OrderedSink {
    pub fn create(path: &Path, settings: &str, header: &str) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", timestamp_line())?;
        writeln!(out, "{settings}")?;
        writeln!(out, "{header}")?;
        out.flush()?;
        Ok(Self {
            state: Mutex::new(SinkState { out, next: 0, pending: BTreeMap::new() }),
        })
    }

    pub fn push(&self, index: usize, row: String) -> io::Result<()> {
        let mut s = self.state.lock().expect("sink lock poisoned");
        s.pending.insert(index, row);
        loop {
            let next = s.next;
            let Some(row) = s.pending.remove(&next) else { break };
            writeln!(s.out, "{row}")?;
            s.next += 1;
        }
        s.out.flush()
    }

    /// Number of rows written so far.
    pub fn written(&self) -> usize {
        self.state.lock().expect("sink lock poisoned").next
    }
}
