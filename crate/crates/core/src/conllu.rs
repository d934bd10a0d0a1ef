//! Streaming reader for dependency-annotated corpora in CoNLL-U layout.
//!
//! Sentences are yielded one at a time, so memory use is bounded by the
//! largest sentence rather than by the corpus. Multiword token ranges
//! (`3-4`) and empty nodes (`5.1`) are dropped; surface forms are
//! lowercased, lemmas and tags are kept verbatim.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: invalid {field} value '{value}'")]
    InvalidNumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: empty dependency relation")]
    EmptyRelation { line: usize },
    #[error("sentence ending at line {line}: {reason}")]
    InvalidSentence { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl ParseError {
    /// Line number the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::ColumnCount { line, .. }
            | ParseError::InvalidNumber { line, .. }
            | ParseError::EmptyRelation { line }
            | ParseError::InvalidSentence { line, .. } => Some(*line),
            ParseError::Io(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position within the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Head position, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at a 1-based position.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    /// Checks the structural invariants: consecutive indices, heads in range,
    /// no self loops, non-empty relations and a single root.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.tokens.len();
        let mut roots = 0;
        for (i, token) in self.tokens.iter().enumerate() {
            if token.index != i + 1 {
                return Err(format!(
                    "token indices are not consecutive: expected {}, found {}",
                    i + 1,
                    token.index
                ));
            }
            if token.head > n {
                return Err(format!(
                    "token {} has head {} beyond sentence length {}",
                    token.index, token.head, n
                ));
            }
            if token.head == token.index {
                return Err(format!("token {} is its own head", token.index));
            }
            if token.deprel.is_empty() {
                return Err(format!("token {} has an empty relation", token.index));
            }
            if token.head == 0 {
                roots += 1;
            }
        }
        if n > 0 && roots != 1 {
            return Err(format!("expected exactly one root, found {}", roots));
        }
        Ok(())
    }

    /// Serializes the sentence as a CoNLL-U block, terminated by a blank line.
    /// Columns that are not modelled are written as `_`.
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                t.index, t.form, t.lemma, t.upos, t.head, t.deprel
            );
        }
        out.push('\n');
        out
    }
}

/// What to do with a malformed sentence block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorMode {
    /// Drop the offending sentence, count it and keep going.
    #[default]
    SkipSentence,
    /// Yield the error and stop.
    Abort,
}

/// Lazy sentence iterator over a CoNLL-U stream.
pub struct ConlluReader<R> {
    reader: R,
    mode: ErrorMode,
    line_no: usize,
    buf: String,
    skipped: usize,
    done: bool,
}

impl<R: BufRead> ConlluReader<R> {
    pub fn new(reader: R) -> Self {
        Self::with_mode(reader, ErrorMode::default())
    }

    pub fn with_mode(reader: R, mode: ErrorMode) -> Self {
        ConlluReader {
            reader,
            mode,
            line_no: 0,
            buf: String::new(),
            skipped: 0,
            done: false,
        }
    }

    /// Number of sentences dropped in skip mode so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Reads one block. `Ok(None)` signals end of input.
    fn read_block(&mut self) -> Result<Option<Sentence>, ParseError> {
        let mut tokens = Vec::new();
        let mut error: Option<ParseError> = None;
        let mut seen_any = false;

        loop {
            self.buf.clear();
            let read = self.reader.read_line(&mut self.buf)?;
            if read == 0 {
                break;
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                if seen_any {
                    break;
                }
                continue;
            }
            seen_any = true;
            if line.starts_with('#') || error.is_some() {
                continue;
            }
            match parse_token_line(line, self.line_no) {
                Ok(Some(token)) => tokens.push(token),
                Ok(None) => {}
                Err(e) => error = Some(e),
            }
        }

        if let Some(e) = error {
            return Err(e);
        }
        if !seen_any {
            return Ok(None);
        }
        let sentence = Sentence::new(tokens);
        sentence
            .validate()
            .map_err(|reason| ParseError::InvalidSentence {
                line: self.line_no,
                reason,
            })?;
        Ok(Some(sentence))
    }
}

impl<R: BufRead> Iterator for ConlluReader<R> {
    type Item = Result<Sentence, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.read_block() {
                Ok(Some(sentence)) if sentence.is_empty() => continue,
                Ok(Some(sentence)) => return Some(Ok(sentence)),
                Ok(None) => self.done = true,
                Err(ParseError::Io(e)) => {
                    self.done = true;
                    return Some(Err(ParseError::Io(e)));
                }
                Err(e) => match self.mode {
                    ErrorMode::SkipSentence => {
                        log::warn!("skipping malformed sentence: {}", e);
                        self.skipped += 1;
                    }
                    ErrorMode::Abort => {
                        self.done = true;
                        return Some(Err(e));
                    }
                },
            }
        }
        None
    }
}

fn parse_token_line(line: &str, line_no: usize) -> Result<Option<Token>, ParseError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(ParseError::ColumnCount {
            line: line_no,
            found: cols.len(),
        });
    }
    let id = cols[0];
    if id.contains('-') || id.contains('.') {
        return Ok(None);
    }
    let index = parse_number(id, "ID", line_no)?;
    if index == 0 {
        return Err(ParseError::InvalidNumber {
            line: line_no,
            field: "ID",
            value: id.to_owned(),
        });
    }
    let head = parse_number(cols[6], "HEAD", line_no)?;
    let deprel = cols[7];
    if deprel.is_empty() || deprel == "_" {
        return Err(ParseError::EmptyRelation { line: line_no });
    }
    Ok(Some(Token {
        index,
        form: cols[1].to_lowercase(),
        lemma: cols[2].to_owned(),
        upos: cols[3].to_owned(),
        head,
        deprel: deprel.to_owned(),
    }))
}

fn parse_number(value: &str, field: &'static str, line: usize) -> Result<usize, ParseError> {
    value.parse().map_err(|_| ParseError::InvalidNumber {
        line,
        field,
        value: value.to_owned(),
    })
}

/// Opens a corpus file, transparently decompressing gzip input
/// (detected by its magic bytes rather than the file extension).
pub fn open_corpus(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let mut reader = BufReader::new(File::open(path)?);
    let is_gzip = {
        let head = reader.fill_buf()?;
        head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b
    };
    if is_gzip {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

/// Parses a whole in-memory string; convenient for tests and bindings.
pub fn parse_str(text: &str, mode: ErrorMode) -> Result<Vec<Sentence>, ParseError> {
    ConlluReader::with_mode(text.as_bytes(), mode).collect()
}

/// Parses any reader in the given mode.
pub fn parse_conllu<R: Read>(reader: R, mode: ErrorMode) -> ConlluReader<BufReader<R>> {
    ConlluReader::with_mode(BufReader::new(reader), mode)
}
