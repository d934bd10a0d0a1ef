//! Embedding matrices and the word2vec text format
//! (`count dim` header, then `word v1 ... vd` per line).

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingIoError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Row-major matrix of vectors with a string index.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f32>,
}

impl Embeddings {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f32>) -> Self {
        assert_eq!(words.len() * dim, data.len(), "matrix shape mismatch");
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Embeddings {
            words,
            index,
            dim,
            data,
        }
    }

    pub fn empty(dim: usize) -> Self {
        Embeddings::new(Vec::new(), dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Applies `f` to every row in place.
    pub fn map_rows(&mut self, mut f: impl FnMut(&mut [f32])) {
        if self.dim == 0 {
            return;
        }
        for row in self.data.chunks_mut(self.dim) {
            f(row);
        }
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            out.write_all(word.as_bytes())?;
            for v in self.row(i) {
                write!(out, " {}", v)?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self, EmbeddingIoError> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => {
                return Err(EmbeddingIoError::Format {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse = |s: &str| s.parse::<usize>().ok();
        let (count, dim) = match fields.as_slice() {
            [c, d] => match (parse(c), parse(d)) {
                (Some(c), Some(d)) => (c, d),
                _ => {
                    return Err(EmbeddingIoError::Format {
                        line: 1,
                        reason: format!("invalid header '{}'", header),
                    })
                }
            },
            _ => {
                return Err(EmbeddingIoError::Format {
                    line: 1,
                    reason: format!("expected 'count dim' header, got '{}'", header),
                })
            }
        };

        let mut words = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default().to_owned();
            let before = data.len();
            for f in fields {
                let v: f32 = f.parse().map_err(|_| EmbeddingIoError::Format {
                    line: line_no,
                    reason: format!("invalid number '{}'", f),
                })?;
                data.push(v);
            }
            let found = data.len() - before;
            if found != dim {
                return Err(EmbeddingIoError::Format {
                    line: line_no,
                    reason: format!("expected {} values, found {}", dim, found),
                });
            }
            words.push(word);
        }
        if words.len() != count {
            return Err(EmbeddingIoError::Format {
                line: 1,
                reason: format!("header announces {} vectors, found {}", count, words.len()),
            });
        }
        Ok(Embeddings::new(words, dim, data))
    }
}

/// Word and context matrices produced by training.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    pub words: Embeddings,
    pub contexts: Embeddings,
}

pub fn save_embeddings(embeddings: &Embeddings, path: &Path) -> io::Result<()> {
    embeddings.write_text(BufWriter::new(File::create(path)?))
}

pub fn load_embeddings(path: &Path) -> Result<Embeddings, EmbeddingIoError> {
    Embeddings::read_text(BufReader::new(File::open(path)?))
}

/// `vectors.txt` -> `vectors_ctx.txt`.
pub fn context_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{}_ctx.{}", stem, ext.to_string_lossy()),
        None => format!("{}_ctx", stem),
    };
    path.with_file_name(name)
}

/// Saves the word side to `path` and the context side next to it.
pub fn save_store(store: &EmbeddingStore, path: &Path, with_contexts: bool) -> io::Result<()> {
    save_embeddings(&store.words, path)?;
    if with_contexts {
        save_embeddings(&store.contexts, &context_path(path))?;
    }
    Ok(())
}
