//! Pair corpora: tokenization, typed instances and the on-disk formats.
//!
//! Two formats are read:
//! - `pairs-tsv`: header `id\tlabel\tcategory\tsource_text\tsuspicious_text`, one pair per line.
//! - `msrp-tsv`: the MSRP distribution layout (`quality`, `id1`, `id2`, `string1`, `string2`),
//!   quality `1`/`0` mapped to plagiarism/not-plagiarism, category always unlabeled.

use std::borrow::{Borrow, Cow};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAIRS_TSV_HEADER: &str = "id\tlabel\tcategory\tsource_text\tsuspicious_text";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: invalid UTF-8")]
    InvalidUtf8 { line: usize },
    #[error("missing or unexpected header, expected `{expected}`")]
    BadHeader { expected: String },
    #[error("line {line}: expected {expected} tab-separated columns, found {found}")]
    Malformed {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown label `{value}`")]
    UnknownLabel { line: usize, value: String },
    #[error("line {line}: unknown category `{value}`")]
    UnknownCategory { line: usize, value: String },
    #[error("pair `{id}`: {side} text is empty after tokenization")]
    EmptyText { id: String, side: &'static str },
    #[error("duplicate pair id `{id}`")]
    DuplicateId { id: String },
    #[error("corpus contains no pairs")]
    NoPairs,
    #[error("invalid token `{0}`")]
    InvalidToken(String),
}

/// A case-folded word: non-empty and free of whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Result<Self, CorpusError> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidToken(surface));
        }
        Ok(Token(surface))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered token sequence plus its vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    tokens: Vec<Token>,
    vocab: BTreeSet<Token>,
}

impl Document {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        let vocab = tokens.iter().cloned().collect();
        Document { tokens, vocab }
    }

    /// Builds a document from words that are already tokens.
    pub fn from_words<I, S>(words: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = words
            .into_iter()
            .map(Token::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_tokens(tokens))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn vocab(&self) -> &BTreeSet<Token> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined tokens; re-tokenizing it yields the same sequence.
    pub fn text(&self) -> String {
        let words: Vec<&str> = self.tokens.iter().map(Token::as_str).collect();
        words.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub case_fold: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig { case_fold: true }
    }
}

/// Case-folds, then keeps the maximal alphanumeric runs. No stemming, no stopword removal.
pub fn tokenize(raw: &str, config: &TokenizerConfig) -> Document {
    let folded: Cow<'_, str> = if config.case_fold {
        Cow::Owned(raw.to_lowercase())
    } else {
        Cow::Borrowed(raw)
    };
    let tokens = folded
        .split(|c: char| !c.is_alphanumeric())
        .filter(|run| !run.is_empty())
        .map(|run| Token(run.to_owned()))
        .collect();
    Document::from_tokens(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Plagiarism,
    NotPlagiarism,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Plagiarism, Label::NotPlagiarism];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Plagiarism => "plagiarism",
            Label::NotPlagiarism => "not-plagiarism",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Plagiarism
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParaphraseCategory {
    Morphological,
    Lexical,
    Syntactical,
    Discourse,
    Semantic,
    Miscellaneous,
    Unlabeled,
}

impl ParaphraseCategory {
    pub const ALL: [ParaphraseCategory; 7] = [
        ParaphraseCategory::Morphological,
        ParaphraseCategory::Lexical,
        ParaphraseCategory::Syntactical,
        ParaphraseCategory::Discourse,
        ParaphraseCategory::Semantic,
        ParaphraseCategory::Miscellaneous,
        ParaphraseCategory::Unlabeled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParaphraseCategory::Morphological => "morphological",
            ParaphraseCategory::Lexical => "lexical",
            ParaphraseCategory::Syntactical => "syntactical",
            ParaphraseCategory::Discourse => "discourse",
            ParaphraseCategory::Semantic => "semantic",
            ParaphraseCategory::Miscellaneous => "miscellaneous",
            ParaphraseCategory::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for ParaphraseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParaphraseCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParaphraseCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_owned())
    }
}

/// One corpus instance. Both documents are non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextPair {
    id: String,
    source: Document,
    suspicious: Document,
    label: Label,
    category: ParaphraseCategory,
}

impl TextPair {
    pub fn new(
        id: impl Into<String>,
        source: Document,
        suspicious: Document,
        label: Label,
        category: ParaphraseCategory,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if source.is_empty() {
            return Err(CorpusError::EmptyText { id, side: "source" });
        }
        if suspicious.is_empty() {
            return Err(CorpusError::EmptyText {
                id,
                side: "suspicious",
            });
        }
        Ok(TextPair {
            id,
            source,
            suspicious,
            label,
            category,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn source(&self) -> &Document {
        &self.source
    }

    pub fn suspicious(&self) -> &Document {
        &self.suspicious
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn category(&self) -> ParaphraseCategory {
        self.category
    }

    /// Same pair with another gold label.
    pub fn with_label(&self, label: Label) -> TextPair {
        TextPair {
            label,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    pairs: Vec<TextPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub pairs: usize,
    pub positives: usize,
    pub negatives: usize,
    /// Pair counts per category, over both labels.
    pub per_category: BTreeMap<ParaphraseCategory, usize>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, pairs: Vec<TextPair>) -> Result<Self, CorpusError> {
        if pairs.is_empty() {
            return Err(CorpusError::NoPairs);
        }
        let mut seen = BTreeSet::new();
        for p in &pairs {
            if !seen.insert(p.id.as_str()) {
                return Err(CorpusError::DuplicateId { id: p.id.clone() });
            }
        }
        Ok(Corpus {
            name: name.into(),
            pairs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pairs(&self) -> &[TextPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.pairs.iter().map(TextPair::label).collect()
    }

    pub fn stats(&self) -> CorpusStats {
        let positives = self.pairs.iter().filter(|p| p.label.is_positive()).count();
        let mut per_category = BTreeMap::new();
        for p in &self.pairs {
            *per_category.entry(p.category).or_insert(0) += 1;
        }
        CorpusStats {
            pairs: self.pairs.len(),
            positives,
            negatives: self.pairs.len() - positives,
            per_category,
        }
    }

    /// True when any pair carries a category other than `Unlabeled`.
    pub fn has_categories(&self) -> bool {
        self.pairs
            .iter()
            .any(|p| p.category != ParaphraseCategory::Unlabeled)
    }

    /// Distinct words over every source and suspicious document.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.pairs
            .iter()
            .flat_map(|p| p.source.vocab().iter().chain(p.suspicious.vocab()))
            .map(Token::as_str)
            .collect()
    }

    /// Sub-corpus of the pairs at `indices`, in the given order.
    pub fn subset(
        &self,
        name: impl Into<String>,
        indices: &[usize],
    ) -> Result<Corpus, CorpusError> {
        Corpus::new(
            name,
            indices.iter().map(|&i| self.pairs[i].clone()).collect(),
        )
    }
}

/// Fraction of pairs labeled plagiarism.
pub fn class_balance(corpus: &Corpus) -> f64 {
    let stats = corpus.stats();
    stats.positives as f64 / stats.pairs as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    #[default]
    PairsTsv,
    MsrpTsv,
}

pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    tokenizer: &TokenizerConfig,
) -> Result<Corpus, CorpusError> {
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let text = decode_utf8(&bytes)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_corpus(&name, text, format, tokenizer)
}

fn decode_utf8(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| CorpusError::InvalidUtf8 {
        line: 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
    })
}

/// Parses corpus text already held in memory. Blank lines are skipped.
pub fn parse_corpus(
    name: &str,
    text: &str,
    format: CorpusFormat,
    tokenizer: &TokenizerConfig,
) -> Result<Corpus, CorpusError> {
    let mut lines = text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));

    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    if format == CorpusFormat::PairsTsv && header != PAIRS_TSV_HEADER {
        return Err(CorpusError::BadHeader {
            expected: PAIRS_TSV_HEADER.to_owned(),
        });
    }
    if format == CorpusFormat::MsrpTsv && header.split('\t').count() != 5 {
        return Err(CorpusError::BadHeader {
            expected: "Quality\t#1 ID\t#2 ID\t#1 String\t#2 String".to_owned(),
        });
    }

    let mut pairs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line, row) in lines {
        if row.is_empty() {
            continue;
        }
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != 5 {
            return Err(CorpusError::Malformed {
                line,
                expected: 5,
                found: cols.len(),
            });
        }
        let (id, label, category, source, suspicious) = match format {
            CorpusFormat::PairsTsv => {
                let label = cols[1]
                    .parse::<Label>()
                    .map_err(|value| CorpusError::UnknownLabel { line, value })?;
                let category = cols[2]
                    .parse::<ParaphraseCategory>()
                    .map_err(|value| CorpusError::UnknownCategory { line, value })?;
                (cols[0].to_owned(), label, category, cols[3], cols[4])
            }
            CorpusFormat::MsrpTsv => {
                let label = match cols[0].trim() {
                    "1" => Label::Plagiarism,
                    "0" => Label::NotPlagiarism,
                    other => {
                        return Err(CorpusError::UnknownLabel {
                            line,
                            value: other.to_owned(),
                        })
                    }
                };
                let id = format!("{}_{}", cols[1].trim(), cols[2].trim());
                (id, label, ParaphraseCategory::Unlabeled, cols[3], cols[4])
            }
        };
        if seen.insert(id.clone(), line).is_some() {
            return Err(CorpusError::DuplicateId { id });
        }
        pairs.push(TextPair::new(
            id,
            tokenize(source, tokenizer),
            tokenize(suspicious, tokenizer),
            label,
            category,
        )?);
    }
    Corpus::new(name, pairs)
}

/// Writes the corpus in `pairs-tsv`, texts as space-joined tokens.
pub fn write_pairs_tsv<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    writeln!(out, "{PAIRS_TSV_HEADER}")?;
    for p in corpus.pairs() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.id,
            p.label,
            p.category,
            p.source.text(),
            p.suspicious.text()
        )?;
    }
    Ok(())
}
