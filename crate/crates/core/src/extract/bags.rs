//! On-disk context bags: one `word<TAB>context` file per bag plus a
//! manifest with per-bag pair counts and the extraction parameters.
//!
//! A `.partial` marker exists while files are being written; a directory
//! holding the marker (or lacking a manifest) is never read back.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::{
    extract_bow_pairs, extract_posit_pairs, extract_sentence, BagMappingTable, ContextPair,
    ExtractionConfig, BOW_BAG, POSIT_BAG,
};
use crate::conllu::{ParseError, Sentence};
use crate::hash::hash_fields;
use crate::search::Configuration;

pub const MANIFEST_FILE: &str = "manifest.txt";
const PARTIAL_MARKER: &str = ".partial";
const BATCH_SIZE: usize = 2048;

#[derive(Debug, Error)]
pub enum BagError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid extraction config: {0}")]
    Config(String),
    #[error("bag directory {0} is incomplete (interrupted extraction?)")]
    Incomplete(PathBuf),
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("unknown context bag '{0}'")]
    UnknownBag(String),
    #[error("{path} line {line}: expected 'word<TAB>context'")]
    MalformedPair { path: PathBuf, line: usize },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BagError + '_ {
    move |source| BagError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Per-bag counts and the parameters that produced them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub config_hash: String,
    pub params: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    pub sentences: u64,
}

impl Manifest {
    pub fn count(&self, bag: &str) -> Option<u64> {
        self.counts.get(bag).copied()
    }

    /// Total number of pairs in a configuration (sum of member bags).
    pub fn pair_count(&self, config: &Configuration) -> Result<u64, BagError> {
        config
            .bags()
            .map(|b| self.count(b).ok_or_else(|| BagError::UnknownBag(b.to_owned())))
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# context bag manifest\n");
        out.push_str(&format!("config_hash = {}\n", self.config_hash));
        for (k, v) in &self.params {
            out.push_str(&format!("param.{} = {}\n", k, v));
        }
        out.push_str(&format!("sentences = {}\n", self.sentences));
        for (bag, n) in &self.counts {
            out.push_str(&format!("bag.{} = {}\n", bag, n));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, BagError> {
        let mut manifest = Manifest::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| BagError::Manifest {
                line: i + 1,
                reason: reason.to_owned(),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "config_hash" {
                manifest.config_hash = value.to_owned();
            } else if key == "sentences" {
                manifest.sentences = value.parse().map_err(|_| err("invalid sentence count"))?;
            } else if let Some(param) = key.strip_prefix("param.") {
                manifest.params.insert(param.to_owned(), value.to_owned());
            } else if let Some(bag) = key.strip_prefix("bag.") {
                let n = value.parse().map_err(|_| err("invalid pair count"))?;
                manifest.counts.insert(bag.to_owned(), n);
            } else {
                return Err(err("unknown key"));
            }
        }
        Ok(manifest)
    }

    pub fn load(dir: &Path) -> Result<Self, BagError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Self::parse(&text)
    }
}

/// Hash identifying an extraction run: parameters, mapping table and the
/// caller-supplied source (corpus) hash.
pub fn extraction_hash(table: &BagMappingTable, config: &ExtractionConfig, source: &str) -> String {
    let mut fields = config.describe();
    fields.push(("table".into(), table.to_text()));
    fields.push(("source".into(), source.to_owned()));
    hash_fields(&fields)
}

fn bag_file(dir: &Path, bag: &str) -> PathBuf {
    dir.join(format!("{}.pairs", bag))
}

/// Extracts every sentence into per-bag pair files under `out_dir` and
/// writes the manifest.
///
/// Sentences are processed in parallel batches but written in input order,
/// so the output is byte-identical for identical input.
pub fn write_bag_files<I>(
    sentences: I,
    table: &BagMappingTable,
    config: &ExtractionConfig,
    out_dir: &Path,
    source_hash: &str,
) -> Result<Manifest, BagError>
where
    I: IntoIterator<Item = Result<Sentence, ParseError>>,
{
    config.validate().map_err(BagError::Config)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let marker = out_dir.join(PARTIAL_MARKER);
    File::create(&marker).map_err(io_err(&marker))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(io_err(&manifest_path))?;
    }

    let mut bags: Vec<String> = table.bag_labels().into_iter().collect();
    if config.baselines {
        bags.push(BOW_BAG.to_owned());
        bags.push(POSIT_BAG.to_owned());
    }
    let bag_index: BTreeMap<&str, usize> =
        bags.iter().enumerate().map(|(i, b)| (b.as_str(), i)).collect();

    let mut writers = Vec::with_capacity(bags.len());
    for bag in &bags {
        let path = bag_file(out_dir, bag);
        let file = File::create(&path).map_err(io_err(&path))?;
        writers.push((path, BufWriter::new(file)));
    }
    let mut counts = vec![0u64; bags.len()];
    let mut n_sentences = 0u64;

    let sentence_lines = |sentence: &Sentence| -> Vec<(usize, String)> {
        let mut lines = Vec::new();
        for pair in extract_sentence(sentence, table, config) {
            if let Some(&i) = bag_index.get(pair.bag.as_str()) {
                lines.push((i, format!("{}\t{}\n", pair.word, pair.bag_context())));
            }
        }
        if config.baselines {
            let bow = bag_index[BOW_BAG];
            for p in extract_bow_pairs(sentence, config.window) {
                lines.push((bow, format!("{}\t{}\n", p.word, p.context)));
            }
            let posit = bag_index[POSIT_BAG];
            for p in extract_posit_pairs(sentence, config.window) {
                lines.push((posit, format!("{}\t{}\n", p.word, p.context)));
            }
        }
        lines
    };

    let mut batch = Vec::with_capacity(BATCH_SIZE);
    let mut iter = sentences.into_iter();
    loop {
        batch.clear();
        for item in iter.by_ref().take(BATCH_SIZE) {
            batch.push(item?);
        }
        if batch.is_empty() {
            break;
        }
        n_sentences += batch.len() as u64;
        let extracted: Vec<Vec<(usize, String)>> = batch.par_iter().map(sentence_lines).collect();
        for lines in extracted {
            for (i, line) in lines {
                let (path, writer) = &mut writers[i];
                writer.write_all(line.as_bytes()).map_err(io_err(path))?;
                counts[i] += 1;
            }
        }
    }
    for (path, mut writer) in writers {
        writer.flush().map_err(io_err(&path))?;
    }

    let mut params: BTreeMap<String, String> = config.describe().into_iter().collect();
    params.insert("table_hash".into(), hash_fields(&[("table", table.to_text())]));
    params.insert("source_hash".into(), source_hash.to_owned());
    let manifest = Manifest {
        config_hash: extraction_hash(table, config, source_hash),
        params,
        counts: bags.into_iter().zip(counts).collect(),
        sentences: n_sentences,
    };
    fs::write(&manifest_path, manifest.to_text()).map_err(io_err(&manifest_path))?;
    fs::remove_file(&marker).map_err(io_err(&marker))?;
    Ok(manifest)
}

/// A completed bag directory.
#[derive(Clone, Debug)]
pub struct BagStore {
    dir: PathBuf,
    manifest: Manifest,
}

impl BagStore {
    pub fn open(dir: &Path) -> Result<Self, BagError> {
        if dir.join(PARTIAL_MARKER).exists() || !dir.join(MANIFEST_FILE).exists() {
            return Err(BagError::Incomplete(dir.to_owned()));
        }
        Ok(BagStore {
            dir: dir.to_owned(),
            manifest: Manifest::load(dir)?,
        })
    }

    /// True when `dir` holds a complete extraction with the given hash.
    pub fn is_complete(dir: &Path, config_hash: &str) -> bool {
        BagStore::open(dir)
            .map(|s| s.manifest.config_hash == config_hash)
            .unwrap_or(false)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn bag_path(&self, bag: &str) -> PathBuf {
        bag_file(&self.dir, bag)
    }

    /// Lazily streams the multiset union of the member bags.
    pub fn compose(&self, config: &Configuration) -> Result<PairStream, BagError> {
        let mut files = Vec::with_capacity(config.len());
        for bag in config.bags() {
            if self.manifest.count(bag).is_none() {
                return Err(BagError::UnknownBag(bag.to_owned()));
            }
            files.push(self.bag_path(bag));
        }
        Ok(PairStream {
            files,
            next_file: 0,
            current: None,
            line_no: 0,
            buf: String::new(),
        })
    }

    /// Pair stream for a configuration given as bag labels; the empty set
    /// is rejected.
    pub fn compose_bags<S: AsRef<str>>(&self, bags: &[S]) -> Result<PairStream, BagError> {
        let config = Configuration::new(bags.iter().map(|b| b.as_ref().to_owned()))
            .map_err(|e| BagError::Config(e.to_string()))?;
        self.compose(&config)
    }
}

/// Iterator over the pairs of several bag files, one after the other.
pub struct PairStream {
    files: Vec<PathBuf>,
    next_file: usize,
    current: Option<(PathBuf, BufReader<File>)>,
    line_no: usize,
    buf: String,
}

impl Iterator for PairStream {
    type Item = Result<ContextPair, BagError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.current.is_none() {
                let path = self.files.get(self.next_file)?.clone();
                self.next_file += 1;
                self.line_no = 0;
                match File::open(&path) {
                    Ok(f) => self.current = Some((path, BufReader::new(f))),
                    Err(e) => return Some(Err(io_err(&path)(e))),
                }
            }
            let (path, reader) = self.current.as_mut().expect("open file");
            self.buf.clear();
            match reader.read_line(&mut self.buf) {
                Ok(0) => {
                    self.current = None;
                    continue;
                }
                Ok(_) => {
                    self.line_no += 1;
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    return Some(match line.split_once('\t') {
                        Some((w, c)) if !w.is_empty() && !c.is_empty() => {
                            Ok(ContextPair::new(w, c))
                        }
                        _ => Err(BagError::MalformedPair {
                            path: path.clone(),
                            line: self.line_no,
                        }),
                    });
                }
                Err(e) => return Some(Err(io_err(path)(e))),
            }
        }
    }
}
