//! Word-similarity scoring: cosine similarity, Spearman correlation,
//! 2-fold splits per word class and TOEFL-style multiple choice.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sgns::Embeddings;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("no dataset entries match the class filter")]
    EmptySelection,
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WordClass {
    Adjective,
    Verb,
    Noun,
}

impl WordClass {
    pub const ALL: [WordClass; 3] = [WordClass::Adjective, WordClass::Verb, WordClass::Noun];

    pub fn tag(self) -> &'static str {
        match self {
            WordClass::Adjective => "A",
            WordClass::Verb => "V",
            WordClass::Noun => "N",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for WordClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" | "ADJ" => Ok(WordClass::Adjective),
            "V" | "v" | "VERB" => Ok(WordClass::Verb),
            "N" | "n" | "NOUN" => Ok(WordClass::Noun),
            other => Err(format!("unknown word class '{}'", other)),
        }
    }
}

/// Which dataset entries to score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassFilter {
    Only(WordClass),
    All,
}

impl ClassFilter {
    pub fn accepts(self, class: WordClass) -> bool {
        match self {
            ClassFilter::Only(c) => c == class,
            ClassFilter::All => true,
        }
    }
}

impl fmt::Display for ClassFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassFilter::Only(c) => c.fmt(f),
            ClassFilter::All => f.write_str("ALL"),
        }
    }
}

impl FromStr for ClassFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("all") {
            Ok(ClassFilter::All)
        } else {
            s.parse().map(ClassFilter::Only)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordPair {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
    pub class: WordClass,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WordPairDataset {
    pub entries: Vec<WordPair>,
}

impl WordPairDataset {
    /// Parses `word1<TAB>word2<TAB>score<TAB>class` lines after a header.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let err = |reason: String| EvalError::Format {
                line: line_no,
                reason,
            };
            if fields.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", fields.len())));
            }
            let gold: f64 = fields[2]
                .parse()
                .map_err(|_| err(format!("invalid score '{}'", fields[2])))?;
            if !gold.is_finite() {
                return Err(err("score is not finite".into()));
            }
            let class = fields[3].parse().map_err(err)?;
            entries.push(WordPair {
                word1: fields[0].to_lowercase(),
                word2: fields[1].to_lowercase(),
                gold,
                class,
            });
        }
        Ok(WordPairDataset { entries })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {}", path.display(), e)))?;
        Self::parse(&text)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("word1\tword2\tscore\tclass\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.word1, e.word2, e.gold, e.class));
        }
        out
    }

    /// Indices of the entries accepted by the filter, in dataset order.
    pub fn indices(&self, filter: ClassFilter) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| filter.accepts(e.class))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Converts the SimLex-999 distribution file (`word1 word2 POS SimLex999
/// ...` with a header) into the dataset format.
pub fn convert_simlex(text: &str) -> Result<WordPairDataset, EvalError> {
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.split('\t').map(str::trim).collect(),
        None => return Ok(WordPairDataset::default()),
    };
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| EvalError::Format {
                line: 1,
                reason: format!("missing column '{}'", name),
            })
    };
    let (w1, w2, pos, score) = (col("word1")?, col("word2")?, col("POS")?, col("SimLex999")?);
    let mut entries = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let err = |reason: String| EvalError::Format { line: i + 1, reason };
        let get = |c: usize| fields.get(c).copied().ok_or_else(|| err("missing column".into()));
        entries.push(WordPair {
            word1: get(w1)?.to_lowercase(),
            word2: get(w2)?.to_lowercase(),
            gold: get(score)?
                .parse()
                .map_err(|_| err("invalid score".into()))?,
            class: get(pos)?.parse().map_err(err)?,
        });
    }
    Ok(WordPairDataset { entries })
}

/// Cosine similarity; `zero_vector` is set when either operand has zero
/// norm, in which case `value` is 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cosine {
    pub value: f64,
    pub zero_vector: bool,
}

pub fn cosine(u: &[f32], v: &[f32]) -> Result<Cosine, EvalError> {
    if u.len() != v.len() {
        return Err(EvalError::DimensionMismatch(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0f64, 0f64, 0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(Cosine {
            value: 0.0,
            zero_vector: true,
        });
    }
    Ok(Cosine {
        value: (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0),
        zero_vector: false,
    })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::UndefinedCorrelation("zero rank variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation (Pearson over average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::DimensionMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::UndefinedCorrelation(format!(
            "need at least 2 observations, got {}",
            xs.len()
        )));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub rho: f64,
    /// Pairs with both words in the vocabulary.
    pub n_scored: usize,
    pub n_total: usize,
}

impl EvalResult {
    pub fn coverage(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.n_scored as f64 / self.n_total as f64
        }
    }
}

/// Scores the embeddings on the selected entries. `subset` holds dataset
/// indices (e.g. one fold); entries outside the class filter are ignored.
/// Pairs with an out-of-vocabulary word are skipped and reported through
/// `n_scored < n_total`.
pub fn evaluate(
    embeddings: &Embeddings,
    dataset: &WordPairDataset,
    filter: ClassFilter,
    subset: Option<&[usize]>,
) -> Result<EvalResult, EvalError> {
    let selected: Vec<usize> = match subset {
        Some(idx) => idx
            .iter()
            .copied()
            .filter(|&i| i < dataset.entries.len() && filter.accepts(dataset.entries[i].class))
            .collect(),
        None => dataset.indices(filter),
    };
    if selected.is_empty() {
        return Err(EvalError::EmptySelection);
    }
    let mut gold = Vec::with_capacity(selected.len());
    let mut predicted = Vec::with_capacity(selected.len());
    for &i in &selected {
        let e = &dataset.entries[i];
        if let (Some(u), Some(v)) = (embeddings.get(&e.word1), embeddings.get(&e.word2)) {
            gold.push(e.gold);
            predicted.push(cosine(u, v)?.value);
        }
    }
    let rho = spearman(&predicted, &gold)?;
    Ok(EvalResult {
        rho,
        n_scored: gold.len(),
        n_total: selected.len(),
    })
}

/// Two disjoint halves of a class subset, as dataset indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold_a: Vec<usize>,
    pub fold_b: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fold {
    A,
    B,
}

impl Fold {
    pub fn other(self) -> Fold {
        match self {
            Fold::A => Fold::B,
            Fold::B => Fold::A,
        }
    }
}

impl fmt::Display for Fold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fold::A => "a",
            Fold::B => "b",
        })
    }
}

impl FromStr for Fold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "A" => Ok(Fold::A),
            "b" | "B" => Ok(Fold::B),
            other => Err(format!("unknown fold '{}'", other)),
        }
    }
}

impl FoldSplit {
    pub fn fold(&self, fold: Fold) -> &[usize] {
        match fold {
            Fold::A => &self.fold_a,
            Fold::B => &self.fold_b,
        }
    }
}

/// Random 2-fold split of the class subset; the first fold gets the extra
/// entry when the size is odd.
pub fn split_folds(
    dataset: &WordPairDataset,
    filter: ClassFilter,
    seed: u64,
) -> Result<FoldSplit, EvalError> {
    let mut idx = dataset.indices(filter);
    if idx.len() < 2 {
        return Err(EvalError::EmptySelection);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let half = idx.len().div_ceil(2);
    let mut fold_b = idx.split_off(half);
    let mut fold_a = idx;
    fold_a.sort_unstable();
    fold_b.sort_unstable();
    Ok(FoldSplit { fold_a, fold_b })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeflQuestion {
    pub prompt: String,
    pub candidates: [String; 4],
    /// 0-based index of the correct candidate.
    pub gold: usize,
    pub class: Option<WordClass>,
}

/// Parses `prompt cand1 cand2 cand3 cand4 gold_index [class]` lines
/// (whitespace separated, 0-based gold index).
pub fn parse_toefl(text: &str) -> Result<Vec<ToeflQuestion>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let err = |reason: String| EvalError::Format { line: i + 1, reason };
        if f.len() != 6 && f.len() != 7 {
            return Err(err(format!("expected 6 or 7 fields, found {}", f.len())));
        }
        let gold: usize = f[5]
            .parse()
            .ok()
            .filter(|g| *g < 4)
            .ok_or_else(|| err(format!("invalid gold index '{}'", f[5])))?;
        let class = match f.get(6) {
            Some(c) => Some(c.parse().map_err(err)?),
            None => None,
        };
        out.push(ToeflQuestion {
            prompt: f[0].to_lowercase(),
            candidates: [f[1], f[2], f[3], f[4]].map(str::to_lowercase),
            gold,
            class,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ToeflScore {
    pub correct: usize,
    pub total: usize,
}

/// Answers each question with the in-vocabulary candidate closest to the
/// prompt (lowest index wins ties). OOV prompts and questions without any
/// known candidate count as wrong. Scores are grouped by class; untagged
/// questions are grouped under `None`.
pub fn toefl_evaluate(
    embeddings: &Embeddings,
    questions: &[ToeflQuestion],
) -> BTreeMap<Option<WordClass>, ToeflScore> {
    let mut scores: BTreeMap<Option<WordClass>, ToeflScore> = BTreeMap::new();
    for q in questions {
        let entry = scores.entry(q.class).or_default();
        entry.total += 1;
        if toefl_answer(embeddings, q) == Some(q.gold) {
            entry.correct += 1;
        }
    }
    scores
}

pub fn toefl_answer(embeddings: &Embeddings, q: &ToeflQuestion) -> Option<usize> {
    let prompt = embeddings.get(&q.prompt)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, cand) in q.candidates.iter().enumerate() {
        let Some(v) = embeddings.get(cand) else { continue };
        let sim = cosine(prompt, v).ok()?.value;
        if best.is_none_or(|(_, s)| sim > s) {
            best = Some((i, sim));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value, 0.0);
        let expected = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        let c = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap().value;
        assert!((c - expected).abs() < 1e-12);
        assert!((c - 0.974631).abs() < 1e-6);
        let z = cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(z.zero_vector && z.value == 0.0);
        assert_eq!(cosine(&[1.0], &[1.0, 2.0]), Err(EvalError::DimensionMismatch(1, 2)));
    }

    #[test]
    fn spearman_cases() {
        let xs = [3.0, 1.0, 4.0, 1.5, 9.0];
        assert!((spearman(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((spearman(&xs, &rev).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(EvalError::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn spearman_with_ties() {
        // ranks: (1,2,3,4) vs (1.5,1.5,3,4)
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 3.0, 4.0]).unwrap();
        let ry = [1.5, 1.5, 3.0, 4.0];
        let my = 2.5;
        let sxy: f64 = [1.0f64, 2.0, 3.0, 4.0]
            .iter()
            .zip(ry)
            .map(|(x, y)| (x - 2.5) * (y - my))
            .sum();
        let expected = sxy / (5f64.sqrt() * 4.5f64.sqrt());
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    fn dataset(n: usize, class: WordClass) -> WordPairDataset {
        WordPairDataset {
            entries: (0..n)
                .map(|i| WordPair {
                    word1: format!("a{}", i),
                    word2: format!("b{}", i),
                    gold: i as f64,
                    class,
                })
                .collect(),
        }
    }

    #[test]
    fn fold_sizes() {
        let verbs = dataset(222, WordClass::Verb);
        let s = split_folds(&verbs, ClassFilter::Only(WordClass::Verb), 1).unwrap();
        assert_eq!((s.fold_a.len(), s.fold_b.len()), (111, 111));
        let adj = dataset(111, WordClass::Adjective);
        let s = split_folds(&adj, ClassFilter::Only(WordClass::Adjective), 1).unwrap();
        assert_eq!((s.fold_a.len(), s.fold_b.len()), (56, 55));
        let mut all: Vec<usize> = s.fold_a.iter().chain(&s.fold_b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..111).collect::<Vec<_>>());
        assert_eq!(s, split_folds(&adj, ClassFilter::Only(WordClass::Adjective), 1).unwrap());
        assert_ne!(s, split_folds(&adj, ClassFilter::Only(WordClass::Adjective), 2).unwrap());
    }

    #[test]
    fn evaluate_perfect_and_oov() {
        let data = dataset(5, WordClass::Noun);
        // cosine(a_i, b_i) = cos(angle_i), angles decreasing with i
        let mut words = Vec::new();
        let mut vecs = Vec::new();
        for i in 0..5 {
            let angle = 1.5 - 0.3 * i as f32;
            words.push(format!("a{}", i));
            vecs.extend([1.0, 0.0]);
            words.push(format!("b{}", i));
            vecs.extend([angle.cos(), angle.sin()]);
        }
        let emb = Embeddings::new(words, 2, vecs);
        let r = evaluate(&emb, &data, ClassFilter::All, None).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12);
        assert_eq!((r.n_scored, r.n_total), (5, 5));

        let empty = Embeddings::new(vec!["zzz".into()], 2, vec![1.0, 0.0]);
        assert!(matches!(
            evaluate(&empty, &data, ClassFilter::All, None),
            Err(EvalError::UndefinedCorrelation(_))
        ));
        assert_eq!(
            evaluate(&emb, &data, ClassFilter::Only(WordClass::Verb), None),
            Err(EvalError::EmptySelection)
        );
    }

    #[test]
    fn dataset_parsing() {
        let text = "word1\tword2\tscore\tclass\nOld\tnew\t1.58\tA\nsmart\tintelligent\t9.2\tA\n";
        let d = WordPairDataset::parse(text).unwrap();
        assert_eq!(d.entries.len(), 2);
        assert_eq!(d.entries[0].word1, "old");
        assert_eq!(WordPairDataset::parse(&d.to_tsv()).unwrap(), d);
        assert!(WordPairDataset::parse("h\na\tb\tx\tA\n").is_err());
        assert!(WordPairDataset::parse("h\na\tb\t1\tQ\n").is_err());
    }

    #[test]
    fn simlex_conversion() {
        let text = "word1\tword2\tPOS\tSimLex999\tconc(w1)\nold\tnew\tA\t1.58\t2.72\nbelieve\tguess\tV\t6.4\t1.5\n";
        let d = convert_simlex(text).unwrap();
        assert_eq!(d.entries[1].class, WordClass::Verb);
        assert_eq!(d.entries[1].gold, 6.4);
    }

    fn toefl_embeddings() -> Embeddings {
        Embeddings::new(
            vec!["p".into(), "x".into(), "y".into(), "z".into(), "w".into()],
            2,
            vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.7, 0.7],
        )
    }

    fn question(prompt: &str, c: [&str; 4], gold: usize) -> ToeflQuestion {
        ToeflQuestion {
            prompt: prompt.into(),
            candidates: c.map(String::from),
            gold,
            class: Some(WordClass::Noun),
        }
    }

    #[test]
    fn toefl_rules() {
        let e = toefl_embeddings();
        assert_eq!(toefl_answer(&e, &question("p", ["y", "x", "z", "w"], 1)), Some(1));
        assert_eq!(toefl_answer(&e, &question("p", ["q1", "q2", "q3", "q4"], 0)), None);
        assert_eq!(toefl_answer(&e, &question("oov", ["x", "y", "z", "w"], 0)), None);
        // tie between two identical candidates -> lowest index
        assert_eq!(toefl_answer(&e, &question("p", ["z", "x", "x", "y"], 1)), Some(1));
        let scores = toefl_evaluate(
            &e,
            &[question("p", ["y", "x", "z", "w"], 1), question("oov", ["x", "y", "z", "w"], 0)],
        );
        assert_eq!(scores[&Some(WordClass::Noun)], ToeflScore { correct: 1, total: 2 });
    }

    #[test]
    fn toefl_parsing() {
        let qs = parse_toefl("enormous tremendous appropriate unique decidedly 0 A\nx a b c d 3\n").unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].class, Some(WordClass::Adjective));
        assert_eq!(qs[1].class, None);
        assert!(parse_toefl("x a b c d 4\n").is_err());
    }
}
