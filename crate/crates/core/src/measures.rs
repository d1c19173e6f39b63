//! The four pair measures: Jaccard, semantically-informed Jaccard, normalized
//! Levenshtein and the semantically-informed edit distance.
//!
//! All measures work on tokens. Jaccard variants use vocabularies (sets), edit
//! distances use token sequences.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document, TextPair, Token};
use crate::par;
use crate::wordsim::SimilarityBackend;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("both documents are empty")]
    EmptyDocuments,
    #[error("pair `{id}`: {source}")]
    Pair {
        id: String,
        #[source]
        source: Box<MeasureError>,
    },
}

/// How many mutual-best passes softmatch makes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SoftmatchRounds {
    /// Single pass: a word whose mutual best was taken contributes nothing.
    #[default]
    #[serde(rename = "1")]
    #[value(name = "1")]
    One,
    /// Repeat on the still-unmatched words until no pair is added.
    Iterate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair<'a> {
    pub x: &'a str,
    pub y: &'a str,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SoftMatchResult<'a> {
    /// Accepted pairs in acceptance order.
    pub pairs: Vec<MatchedPair<'a>>,
    pub total: f64,
}

/// Retains one-to-one mutual-best word pairs and sums their similarities.
///
/// A pair qualifies when its similarity is positive and maximal in both its row
/// and its column. Qualifying pairs are visited by (similarity desc, x asc,
/// y asc) and accepted while both words are still free.
pub fn softmatch<'a, X, Y>(
    xs: X,
    ys: Y,
    backend: &dyn SimilarityBackend,
    rounds: SoftmatchRounds,
) -> SoftMatchResult<'a>
where
    X: IntoIterator<Item = &'a str>,
    Y: IntoIterator<Item = &'a str>,
{
    let xs: Vec<&str> = xs
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ys: Vec<&str> = ys
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let matrix: Vec<f64> = xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| backend.sim(x, y).clamp(0.0, 1.0)))
        .collect();
    let accepted = mutual_best(&matrix, xs.len(), ys.len(), rounds);
    let total = accepted.iter().map(|&(_, _, s)| s).sum();
    SoftMatchResult {
        pairs: accepted
            .into_iter()
            .map(|(i, j, similarity)| MatchedPair {
                x: xs[i],
                y: ys[j],
                similarity,
            })
            .collect(),
        total,
    }
}

/// Greedy mutual-best matching on a row-major `rows x cols` similarity matrix.
/// Row and column indices must already be in lexicographic word order.
fn mutual_best(
    m: &[f64],
    rows: usize,
    cols: usize,
    rounds: SoftmatchRounds,
) -> Vec<(usize, usize, f64)> {
    let mut row_taken = vec![false; rows];
    let mut col_taken = vec![false; cols];
    let mut accepted = Vec::new();
    loop {
        let mut row_best = vec![0.0f64; rows];
        let mut col_best = vec![0.0f64; cols];
        for i in (0..rows).filter(|&i| !row_taken[i]) {
            for j in (0..cols).filter(|&j| !col_taken[j]) {
                let s = m[i * cols + j];
                row_best[i] = row_best[i].max(s);
                col_best[j] = col_best[j].max(s);
            }
        }
        let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
        for i in (0..rows).filter(|&i| !row_taken[i]) {
            for j in (0..cols).filter(|&j| !col_taken[j]) {
                let s = m[i * cols + j];
                if s > 0.0 && s == row_best[i] && s == col_best[j] {
                    candidates.push((i, j, s));
                }
            }
        }
        candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        let before = accepted.len();
        for (i, j, s) in candidates {
            if !row_taken[i] && !col_taken[j] {
                row_taken[i] = true;
                col_taken[j] = true;
                accepted.push((i, j, s));
            }
        }
        if rounds == SoftmatchRounds::One || accepted.len() == before {
            return accepted;
        }
    }
}

/// `|A ∩ B| / |A ∪ B|` from the two counts.
pub fn jaccard_ratio(intersection: usize, union: usize) -> f64 {
    intersection as f64 / union as f64
}

/// Soft Jaccard: the softmatch mass is added to the intersection and removed from the union.
pub fn soft_jaccard_ratio(intersection: usize, union: usize, softmatch_total: f64) -> f64 {
    ((intersection as f64 + softmatch_total) / (union as f64 - softmatch_total)).clamp(0.0, 1.0)
}

fn overlap_counts(a: &Document, b: &Document) -> Result<(usize, usize), MeasureError> {
    let inter = a.vocab().intersection(b.vocab()).count();
    let union = a.vocab().len() + b.vocab().len() - inter;
    if union == 0 {
        return Err(MeasureError::EmptyDocuments);
    }
    Ok((inter, union))
}

pub fn jaccard(a: &Document, b: &Document) -> Result<f64, MeasureError> {
    let (inter, union) = overlap_counts(a, b)?;
    Ok(jaccard_ratio(inter, union))
}

pub fn semantic_jaccard(
    a: &Document,
    b: &Document,
    backend: &dyn SimilarityBackend,
    rounds: SoftmatchRounds,
) -> Result<f64, MeasureError> {
    let (inter, union) = overlap_counts(a, b)?;
    let a_only = a.vocab().difference(b.vocab()).map(Token::as_str);
    let b_only = b.vocab().difference(a.vocab()).map(Token::as_str);
    let total = softmatch(a_only, b_only, backend, rounds).total;
    Ok(soft_jaccard_ratio(inter, union, total))
}

/// Unit-cost token edit distance.
pub fn levenshtein_raw<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance divided by the longer length.
pub fn levenshtein(a: &Document, b: &Document) -> Result<f64, MeasureError> {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return Err(MeasureError::EmptyDocuments);
    }
    Ok(levenshtein_raw(a.tokens(), b.tokens()) as f64 / longest as f64)
}

/// Raw semantic edit cost. Substitution costs `dist(a_i, b_j)` (zero for
/// identical tokens); inserting or deleting a token costs its `tau_dist`.
pub fn semantic_edit_cost<S: AsRef<str>>(a: &[S], b: &[S], backend: &dyn SimilarityBackend) -> f64 {
    let tau_a: Vec<f64> = a
        .iter()
        .map(|t| backend.tau_dist(t.as_ref()).clamp(0.0, 1.0))
        .collect();
    let tau_b: Vec<f64> = b
        .iter()
        .map(|t| backend.tau_dist(t.as_ref()).clamp(0.0, 1.0))
        .collect();

    let mut prev = Vec::with_capacity(b.len() + 1);
    prev.push(0.0);
    for (j, t) in tau_b.iter().enumerate() {
        prev.push(prev[j] + t);
    }
    let mut cur = vec![0.0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        let x = x.as_ref();
        cur[0] = prev[0] + tau_a[i];
        for (j, y) in b.iter().enumerate() {
            let y = y.as_ref();
            let sub_cost = if x == y {
                0.0
            } else {
                backend.dist(x, y).clamp(0.0, 1.0)
            };
            let delete = prev[j + 1] + tau_a[i];
            let insert = cur[j] + tau_b[j];
            let substitute = prev[j] + sub_cost;
            cur[j + 1] = delete.min(insert).min(substitute);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Semantic edit cost divided by the longer length.
pub fn semantic_edit_distance(
    a: &Document,
    b: &Document,
    backend: &dyn SimilarityBackend,
) -> Result<f64, MeasureError> {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return Err(MeasureError::EmptyDocuments);
    }
    let raw = semantic_edit_cost(a.tokens(), b.tokens(), backend);
    Ok((raw / longest as f64).clamp(0.0, 1.0))
}

/// Feature vector of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub j: f64,
    pub sj: f64,
    pub ed: f64,
    pub sed: f64,
}

pub fn score_documents(
    a: &Document,
    b: &Document,
    backend: &dyn SimilarityBackend,
    rounds: SoftmatchRounds,
) -> Result<PairScores, MeasureError> {
    Ok(PairScores {
        j: jaccard(a, b)?,
        sj: semantic_jaccard(a, b, backend, rounds)?,
        ed: levenshtein(a, b)?,
        sed: semantic_edit_distance(a, b, backend)?,
    })
}

pub fn score_pair(
    pair: &TextPair,
    backend: &dyn SimilarityBackend,
    rounds: SoftmatchRounds,
) -> Result<PairScores, MeasureError> {
    score_documents(pair.source(), pair.suspicious(), backend, rounds).map_err(|e| {
        MeasureError::Pair {
            id: pair.id().to_owned(),
            source: Box::new(e),
        }
    })
}

/// Scores every pair, in corpus order. Runs on the rayon pool when the
/// `parallel` feature is enabled.
pub fn score_corpus(
    corpus: &Corpus,
    backend: &dyn SimilarityBackend,
    rounds: SoftmatchRounds,
) -> Result<Vec<PairScores>, MeasureError> {
    par::map(corpus.pairs(), |p| score_pair(p, backend, rounds))
        .into_iter()
        .collect()
}

/// Single-threaded `score_corpus`.
pub fn score_corpus_sequential(
    corpus: &Corpus,
    backend: &dyn SimilarityBackend,
    rounds: SoftmatchRounds,
) -> Result<Vec<PairScores>, MeasureError> {
    corpus
        .pairs()
        .iter()
        .map(|p| score_pair(p, backend, rounds))
        .collect()
}

impl PairScores {
    /// True when every component lies in `[0, 1]`.
    pub fn in_unit_range(&self) -> bool {
        [self.j, self.sj, self.ed, self.sed]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }
}
