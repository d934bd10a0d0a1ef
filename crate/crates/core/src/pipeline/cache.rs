//! Append-only fitness cache.
//!
//! One TSV line per evaluated slice:
//! `context  configuration  slice  rho  n_scored  n_total  pairs  wall_ms`.
//! `context` identifies the extraction, trainer and dataset inputs; `slice`
//! names the class and fold (`V:a`). Values are written once per key and
//! stored with full precision so reruns see exactly the same numbers.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::PipelineError;

pub const CACHE_HEADER: &str = "context\tconfiguration\tslice\trho\tn_scored\tn_total\tpairs\twall_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessRecord {
    pub context: String,
    pub configuration: String,
    pub slice: String,
    /// NaN when the correlation was undefined (too few scored pairs).
    pub rho: f64,
    pub n_scored: usize,
    pub n_total: usize,
    pub pairs: u64,
    pub wall_ms: u64,
}

impl FitnessRecord {
    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.context,
            self.configuration,
            self.slice,
            self.rho,
            self.n_scored,
            self.n_total,
            self.pairs,
            self.wall_ms
        )
    }

    fn parse(line: &str) -> Option<FitnessRecord> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return None;
        }
        Some(FitnessRecord {
            context: f[0].to_owned(),
            configuration: f[1].to_owned(),
            slice: f[2].to_owned(),
            rho: f[3].parse().ok()?,
            n_scored: f[4].parse().ok()?,
            n_total: f[5].parse().ok()?,
            pairs: f[6].parse().ok()?,
            wall_ms: f[7].parse().ok()?,
        })
    }

    fn key(&self) -> (String, String, String) {
        (
            self.context.clone(),
            self.configuration.clone(),
            self.slice.clone(),
        )
    }
}

#[derive(Debug)]
pub struct FitnessCache {
    path: PathBuf,
    records: Vec<FitnessRecord>,
    index: HashMap<(String, String, String), usize>,
}

impl FitnessCache {
    /// Opens (or creates) the cache file. Unreadable lines, such as a line
    /// truncated by an interrupted run, are skipped with a warning.
    pub fn open(path: &Path) -> Result<Self, PipelineError> {
        let mut cache = FitnessCache {
            path: path.to_owned(),
            records: Vec::new(),
            index: HashMap::new(),
        };
        if !path.exists() {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
            }
            fs::write(path, format!("{}\n", CACHE_HEADER)).map_err(|e| PipelineError::io(path, e))?;
            return Ok(cache);
        }
        let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| PipelineError::io(path, e))?;
            if i == 0 && line == CACHE_HEADER || line.trim().is_empty() {
                continue;
            }
            match FitnessRecord::parse(&line) {
                Some(r) => cache.remember(r),
                None => log::warn!("{} line {}: ignoring malformed cache entry", path.display(), i + 1),
            }
        }
        Ok(cache)
    }

    fn remember(&mut self, record: FitnessRecord) {
        let key = record.key();
        if !self.index.contains_key(&key) {
            self.index.insert(key, self.records.len());
            self.records.push(record);
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, context: &str, configuration: &str, slice: &str) -> Option<&FitnessRecord> {
        self.index
            .get(&(context.to_owned(), configuration.to_owned(), slice.to_owned()))
            .map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[FitnessRecord] {
        &self.records
    }

    /// Appends records whose key is not cached yet; existing keys keep
    /// their first value.
    pub fn insert(&mut self, records: Vec<FitnessRecord>) -> Result<(), PipelineError> {
        let fresh: Vec<FitnessRecord> = records
            .into_iter()
            .filter(|r| !self.index.contains_key(&r.key()))
            .collect();
        if fresh.is_empty() {
            return Ok(());
        }
        let mut text = String::new();
        for r in &fresh {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        let mut file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| PipelineError::io(&self.path, e))?;
        file.write_all(text.as_bytes())
            .map_err(|e| PipelineError::io(&self.path, e))?;
        for r in fresh {
            self.remember(r);
        }
        Ok(())
    }
}
