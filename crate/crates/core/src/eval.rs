//! Evaluation: confusion counts and macro-F1, stratified k-fold
//! cross-validation with per-category breakdown, lexical concordance of a
//! corpus, and rank/linear correlation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{train_model, ClassifyError, Method, Model, TrainOptions};
use crate::corpus::{Corpus, Label, ParaphraseCategory, TextPair};
use crate::measures::{jaccard, score_corpus, MeasureError, PairScores, SoftmatchRounds};
use crate::par;
use crate::wordsim::SimilarityBackend;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no instances to evaluate")]
    Empty,
    #[error("cannot build {k} folds from {positives} positives and {negatives} negatives")]
    FoldCount {
        k: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least two values")]
    TooShort,
    #[error("correlation undefined for a constant sequence")]
    Constant,
    #[error("non-finite value")]
    NonFinite,
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Plagiarism is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl ConfusionCounts {
    pub fn from_labels(gold: &[Label], predicted: &[Label]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&g, &p) in gold.iter().zip(predicted) {
            c.record(g, p);
        }
        c
    }

    pub fn record(&mut self, gold: Label, predicted: Label) {
        match (gold, predicted) {
            (Label::Plagiarism, Label::Plagiarism) => self.tp += 1,
            (Label::NotPlagiarism, Label::Plagiarism) => self.fp += 1,
            (Label::NotPlagiarism, Label::NotPlagiarism) => self.tn += 1,
            (Label::Plagiarism, Label::NotPlagiarism) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// F1 of one class; 0 when its precision and recall are both 0.
    pub fn f1(&self, class: Label) -> f64 {
        match class {
            Label::Plagiarism => f1(self.tp, self.fp, self.fn_),
            Label::NotPlagiarism => f1(self.tn, self.fn_, self.fp),
        }
    }

    pub fn macro_f1(&self) -> Result<f64, EvalError> {
        macro_f1(self)
    }

    pub fn accuracy(&self) -> Result<f64, EvalError> {
        match self.total() {
            0 => Err(EvalError::Empty),
            n => Ok((self.tp + self.tn) as f64 / n as f64),
        }
    }
}

/// Mean of the two per-class F1 values.
pub fn macro_f1(counts: &ConfusionCounts) -> Result<f64, EvalError> {
    if counts.total() == 0 {
        return Err(EvalError::Empty);
    }
    Ok((counts.f1(Label::Plagiarism) + counts.f1(Label::NotPlagiarism)) / 2.0)
}

/// Stratified fold assignment, aligned with corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn by_id<'a>(&self, corpus: &'a Corpus) -> BTreeMap<&'a str, usize> {
        corpus
            .pairs()
            .iter()
            .map(TextPair::id)
            .zip(self.assignments.iter().copied())
            .collect()
    }
}

/// Shuffles each class with the seed and deals it round-robin, negatives
/// continuing where positives stopped, so fold sizes differ by at most one.
pub fn make_folds_for_labels(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    let mut positives: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i].is_positive())
        .collect();
    let mut negatives: Vec<usize> = (0..labels.len())
        .filter(|&i| !labels[i].is_positive())
        .collect();
    if k < 2 || k > positives.len() || k > negatives.len() {
        return Err(EvalError::FoldCount {
            k,
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let mut assignments = vec![0; labels.len()];
    for (slot, &i) in positives.iter().chain(&negatives).enumerate() {
        assignments[i] = slot % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}

pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    make_folds_for_labels(&corpus.labels(), k, seed)
}

/// How per-category F1 is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoryMode {
    /// Reuse the pooled held-out predictions of the global run.
    #[default]
    Pooled,
    /// Run a separate cross-validation per category sub-corpus.
    Retune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub train: TrainOptions,
    pub categories: CategoryMode,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k: 10,
            seed: 42,
            train: TrainOptions::default(),
            categories: CategoryMode::Pooled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: Method,
    pub macro_f1: f64,
    pub per_class_f1: BTreeMap<Label, f64>,
    /// Each category's positives evaluated together with every negative.
    pub per_category: BTreeMap<ParaphraseCategory, f64>,
    pub confusion: ConfusionCounts,
    pub fold_count: usize,
    pub seed: u64,
    pub thresholds_used: Vec<Model>,
    /// Held-out prediction for every pair, in corpus order.
    #[serde(skip)]
    pub predictions: Vec<Label>,
}

/// Scores the corpus with `backend` and cross-validates `method`.
pub fn cross_validate(
    corpus: &Corpus,
    backend: &dyn SimilarityBackend,
    rounds: SoftmatchRounds,
    method: Method,
    options: &CvOptions,
) -> Result<EvalReport, EvalError> {
    let scores = score_corpus(corpus, backend, rounds)?;
    cross_validate_scores(corpus, &scores, method, options)
}

/// Cross-validation over precomputed scores. Every pair is held out exactly once;
/// models are trained on the remaining folds only.
pub fn cross_validate_scores(
    corpus: &Corpus,
    scores: &[PairScores],
    method: Method,
    options: &CvOptions,
) -> Result<EvalReport, EvalError> {
    if scores.len() != corpus.len() {
        return Err(EvalError::LengthMismatch(scores.len(), corpus.len()));
    }
    let labels = corpus.labels();
    let (predictions, models) = run_folds(&labels, scores, method, options)?;
    let confusion = ConfusionCounts::from_labels(&labels, &predictions);

    let mut per_category = BTreeMap::new();
    for (category, members) in category_members(corpus) {
        let f1 = match options.categories {
            CategoryMode::Pooled => {
                let gold: Vec<Label> = members.iter().map(|&i| labels[i]).collect();
                let pred: Vec<Label> = members.iter().map(|&i| predictions[i]).collect();
                ConfusionCounts::from_labels(&gold, &pred).macro_f1()?
            }
            CategoryMode::Retune => {
                let sub_labels: Vec<Label> = members.iter().map(|&i| labels[i]).collect();
                let sub_scores: Vec<PairScores> = members.iter().map(|&i| scores[i]).collect();
                let (pred, _) = run_folds(&sub_labels, &sub_scores, method, options)?;
                ConfusionCounts::from_labels(&sub_labels, &pred).macro_f1()?
            }
        };
        per_category.insert(category, f1);
    }

    Ok(EvalReport {
        method,
        macro_f1: confusion.macro_f1()?,
        per_class_f1: Label::ALL.iter().map(|&l| (l, confusion.f1(l))).collect(),
        per_category,
        confusion,
        fold_count: options.k,
        seed: options.seed,
        thresholds_used: models,
        predictions,
    })
}

fn run_folds(
    labels: &[Label],
    scores: &[PairScores],
    method: Method,
    options: &CvOptions,
) -> Result<(Vec<Label>, Vec<Model>), EvalError> {
    let plan = make_folds_for_labels(labels, options.k, options.seed)?;
    let folds: Vec<usize> = (0..options.k).collect();
    let outcomes = par::map(
        &folds,
        |&fold| -> Result<(Model, Vec<(usize, Label)>), EvalError> {
            let (train, test): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| plan.assignments[i] != fold);
            let train_scores: Vec<PairScores> = train.iter().map(|&i| scores[i]).collect();
            let train_labels: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
            let model = train_model(method, &train_scores, &train_labels, &options.train)?;
            let held_out = test
                .iter()
                .map(|&i| (i, model.predict(&scores[i])))
                .collect();
            Ok((model, held_out))
        },
    );

    let mut predictions = vec![Label::NotPlagiarism; labels.len()];
    let mut models = Vec::with_capacity(options.k);
    for outcome in outcomes {
        let (model, held_out) = outcome?;
        for (i, label) in held_out {
            predictions[i] = label;
        }
        models.push(model);
    }
    Ok((predictions, models))
}

/// For each labeled category with positives: its positive pair indices plus all negatives.
pub fn category_members(corpus: &Corpus) -> BTreeMap<ParaphraseCategory, Vec<usize>> {
    let pairs = corpus.pairs();
    let negatives: Vec<usize> = (0..pairs.len())
        .filter(|&i| !pairs[i].label().is_positive())
        .collect();
    let mut out: BTreeMap<ParaphraseCategory, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.label().is_positive() && p.category() != ParaphraseCategory::Unlabeled {
            out.entry(p.category()).or_default().push(i);
        }
    }
    for members in out.values_mut() {
        members.extend_from_slice(&negatives);
        members.sort_unstable();
    }
    out
}

/// Sum of the Jaccard similarity of each pair's own two documents.
pub fn overlap_sum<'a, I>(pairs: I) -> f64
where
    I: IntoIterator<Item = &'a TextPair>,
{
    pairs
        .into_iter()
        .map(|p| jaccard(p.source(), p.suspicious()).expect("pair documents are non-empty"))
        .sum()
}

/// `(|neg| - O(neg) + O(pos)) / |C|` over the given pairs; `None` when empty.
pub fn lexical_concordance_of<'a, I>(pairs: I) -> Option<f64>
where
    I: IntoIterator<Item = &'a TextPair>,
{
    let (pos, neg): (Vec<&TextPair>, Vec<&TextPair>) =
        pairs.into_iter().partition(|p| p.label().is_positive());
    let n = pos.len() + neg.len();
    if n == 0 {
        return None;
    }
    let value = (neg.len() as f64 - overlap_sum(neg) + overlap_sum(pos)) / n as f64;
    Some(value.clamp(0.0, 1.0))
}

/// Lexical concordance: near 1 for verbatim positives and unrelated negatives,
/// near 0 for a hard corpus.
pub fn lexical_concordance(corpus: &Corpus) -> f64 {
    lexical_concordance_of(corpus.pairs()).expect("corpus is non-empty")
}

/// Concordance of each category's positives together with all negatives.
pub fn category_concordance(corpus: &Corpus) -> BTreeMap<ParaphraseCategory, f64> {
    category_members(corpus)
        .into_iter()
        .filter_map(|(c, members)| {
            lexical_concordance_of(members.iter().map(|&i| &corpus.pairs()[i])).map(|lc| (c, lc))
        })
        .collect()
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooShort);
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(())
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson_unchecked(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::Constant);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    check_pair(xs, ys)?;
    pearson_unchecked(xs, ys)
}

/// Pearson correlation of average ranks.
///
/// Doubled average ranks are integers, so the moment sums are computed exactly;
/// perfectly monotone inputs give exactly 1 or -1.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    check_pair(xs, ys)?;
    let doubled = |v: &[f64]| -> Vec<i128> {
        average_ranks(v)
            .iter()
            .map(|&r| (2.0 * r) as i128)
            .collect()
    };
    let (rx, ry) = (doubled(xs), doubled(ys));
    let n = rx.len() as i128;
    let (sx, sy): (i128, i128) = (rx.iter().sum(), ry.iter().sum());
    let sxy: i128 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let sxx: i128 = rx.iter().map(|a| a * a).sum();
    let syy: i128 = ry.iter().map(|b| b * b).sum();
    // n^2 times the covariance and variances
    let cov = n * sxy - sx * sy;
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0 || vy == 0 {
        return Err(EvalError::Constant);
    }
    if let (Some(c2), Some(v2)) = (cov.checked_mul(cov), vx.checked_mul(vy)) {
        if c2 == v2 {
            return Ok(cov.signum() as f64);
        }
    }
    Ok((cov as f64 / ((vx as f64).sqrt() * (vy as f64).sqrt())).clamp(-1.0, 1.0))
}

impl EvalReport {
    /// Plain-text layout: one headline row, then per-class and per-category rows.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method\tmacro-F1");
        let _ = writeln!(out, "{}\t{:.4}", self.method, self.macro_f1);
        let _ = writeln!(out);
        let _ = writeln!(out, "class\tF1");
        for (label, f1) in &self.per_class_f1 {
            let _ = writeln!(out, "{label}\t{f1:.4}");
        }
        let c = &self.confusion;
        let _ = writeln!(out);
        let _ = writeln!(out, "tp\tfp\ttn\tfn");
        let _ = writeln!(out, "{}\t{}\t{}\t{}", c.tp, c.fp, c.tn, c.fn_);
        if !self.per_category.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "category\tmacro-F1");
            for (category, f1) in &self.per_category {
                let _ = writeln!(out, "{category}\t{f1:.4}");
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "folds\t{}\tseed\t{}", self.fold_count, self.seed);
        out
    }
}
