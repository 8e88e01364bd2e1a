//! Append-only feedback log: one JSON record per line, numbered from 1.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use reqrank_core::eval::{aggregate_likert, likert_value, LikertSummary};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackInput {
    pub request_text: String,
    pub model_tag: String,
    pub k: usize,
    pub rating: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub seq: u64,
    pub request_text: String,
    pub model_tag: String,
    pub k: usize,
    pub rating: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSummary {
    pub model_tag: Option<String>,
    pub n: usize,
    /// Mean and sample standard deviation of ratings mapped to -1/0/+1;
    /// absent when there are no ratings.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub negative: usize,
    pub neutral: usize,
    pub positive: usize,
}

pub fn summarize<'a>(
    records: impl IntoIterator<Item = &'a FeedbackRecord>,
    model_tag: Option<&str>,
) -> FeedbackSummary {
    let ratings: Vec<i64> = records
        .into_iter()
        .filter(|r| model_tag.is_none_or(|t| r.model_tag == t))
        .map(|r| r.rating)
        .collect();
    let count = |v: i8| ratings.iter().filter(|&&r| likert_value(r).ok() == Some(v)).count();
    let stats: Option<LikertSummary> = aggregate_likert(ratings.iter().copied()).ok();
    FeedbackSummary {
        model_tag: model_tag.map(str::to_string),
        n: ratings.len(),
        mean: stats.map(|s| s.mean),
        sd: stats.map(|s| s.sd),
        negative: count(-1),
        neutral: count(0),
        positive: count(1),
    }
}

struct State {
    file: File,
    records: Vec<FeedbackRecord>,
}

pub struct FeedbackStore {
    path: PathBuf,
    state: Mutex<State>,
}

impl FeedbackStore {
    /// Opens or creates the log. A torn final line left by a crash mid-write
    /// is cut off; any other unreadable line is an error.
    pub fn open(path: &Path) -> Result<Self, CliError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| io_error(path, e))?;
        let (records, good_len) = read_records(path, &file)?;
        let len = file.metadata().map_err(|e| io_error(path, e))?.len();
        if good_len < len {
            file.set_len(good_len).map_err(|e| io_error(path, e))?;
        }
        file.seek(SeekFrom::End(0)).map_err(|e| io_error(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            state: Mutex::new(State { file, records }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates, numbers and durably appends one record.
    pub fn append(&self, input: FeedbackInput) -> Result<FeedbackRecord, CliError> {
        likert_value(input.rating).map_err(|e| CliError::usage(e.to_string()))?;
        if input.k == 0 {
            return Err(CliError::usage("k must be at least 1"));
        }
        let mut st = self.state.lock().expect("feedback lock poisoned");
        let rec = FeedbackRecord {
            seq: st.records.last().map_or(1, |r| r.seq + 1),
            request_text: input.request_text,
            model_tag: input.model_tag,
            k: input.k,
            rating: input.rating,
        };
        let mut line = serde_json::to_vec(&rec).map_err(CliError::runtime)?;
        line.push(b'\n');
        st.file.write_all(&line).map_err(|e| io_error(&self.path, e))?;
        st.file.sync_data().map_err(|e| io_error(&self.path, e))?;
        st.records.push(rec.clone());
        Ok(rec)
    }

    pub fn records(&self) -> Vec<FeedbackRecord> {
        self.state.lock().expect("feedback lock poisoned").records.clone()
    }

    pub fn summary(&self, model_tag: Option<&str>) -> FeedbackSummary {
        summarize(&self.state.lock().expect("feedback lock poisoned").records, model_tag)
    }
}

/// Records plus the byte length of the well-formed prefix.
fn read_records(path: &Path, file: &File) -> Result<(Vec<FeedbackRecord>, u64), CliError> {
    let mut reader = BufReader::new(file);
    let mut records: Vec<FeedbackRecord> = Vec::new();
    let mut good = 0u64;
    let mut line = String::new();
    let mut n = 0;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| io_error(path, e))?;
        if read == 0 {
            break;
        }
        n += 1;
        let complete = line.ends_with('\n');
        match serde_json::from_str::<FeedbackRecord>(line.trim_end()) {
            Ok(r) if complete => {
                if records.last().is_some_and(|p| p.seq >= r.seq) {
                    return Err(CliError::usage(format!(
                        "{}:{n}: sequence numbers must increase",
                        path.display()
                    )));
                }
                records.push(r);
                good += read as u64;
            }
            _ if !complete => break,
            Err(e) => return Err(CliError::usage(format!("{}:{n}: {e}", path.display()))),
            Ok(_) => unreachable!(),
        }
    }
    Ok((records, good))
}

/// Reads a feedback log without opening it for writing.
pub fn load_records(path: &Path) -> Result<Vec<FeedbackRecord>, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    Ok(read_records(path, &file)?.0)
}
