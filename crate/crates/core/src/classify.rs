//! Plagiarism decisions from pair scores: tuned single-feature thresholds and
//! a small CART tree over (SJ, SED).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::eval::ConfusionCounts;
use crate::measures::PairScores;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("training data contains only one label")]
    SingleLabel,
    #[error("training data is empty")]
    Empty,
    #[error("max depth must be at least 1")]
    InvalidDepth,
    #[error("non-finite score in training data")]
    NonFinite,
    #[error("{scores} score rows but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("expected {expected} feature values, found {found}")]
    FeatureCount { expected: usize, found: usize },
}

/// One of the four measure outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    J,
    Sj,
    Ed,
    Sed,
}

impl Feature {
    pub fn value(self, scores: &PairScores) -> f64 {
        match self {
            Feature::J => scores.j,
            Feature::Sj => scores.sj,
            Feature::Ed => scores.ed,
            Feature::Sed => scores.sed,
        }
    }

    /// Similarities vote plagiarism when high, distances when low.
    pub fn polarity(self) -> Polarity {
        match self {
            Feature::J | Feature::Sj => Polarity::HighIsPositive,
            Feature::Ed | Feature::Sed => Polarity::LowIsPositive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::J => "j",
            Feature::Sj => "sj",
            Feature::Ed => "ed",
            Feature::Sed => "sed",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification method: one thresholded feature or the combined tree.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    J,
    Sj,
    Ed,
    Sed,
    Combined,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::J,
        Method::Sj,
        Method::Ed,
        Method::Sed,
        Method::Combined,
    ];

    pub fn feature(self) -> Option<Feature> {
        match self {
            Method::J => Some(Feature::J),
            Method::Sj => Some(Feature::Sj),
            Method::Ed => Some(Feature::Ed),
            Method::Sed => Some(Feature::Sed),
            Method::Combined => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::J => "j",
            Method::Sj => "sj",
            Method::Ed => "ed",
            Method::Sed => "sed",
            Method::Combined => "combined",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    HighIsPositive,
    LowIsPositive,
}

/// What threshold tuning maximizes on the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    MacroF1,
    Accuracy,
}

impl Objective {
    pub fn score(self, counts: &ConfusionCounts) -> f64 {
        match self {
            Objective::MacroF1 => counts.macro_f1().unwrap_or(0.0),
            Objective::Accuracy => counts.accuracy().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdClassifier {
    pub feature: Feature,
    pub polarity: Polarity,
    pub threshold: f64,
}

impl ThresholdClassifier {
    /// Strict comparison: a value equal to the threshold is never "above" it.
    pub fn predict_value(&self, value: f64) -> Label {
        predict(self.polarity, self.threshold, value)
    }

    pub fn classify(&self, scores: &PairScores) -> Label {
        self.predict_value(self.feature.value(scores))
    }
}

fn predict(polarity: Polarity, threshold: f64, value: f64) -> Label {
    let above = value > threshold;
    match (polarity, above) {
        (Polarity::HighIsPositive, true) | (Polarity::LowIsPositive, false) => Label::Plagiarism,
        _ => Label::NotPlagiarism,
    }
}

pub fn classify_threshold(clf: &ThresholdClassifier, scores: &PairScores) -> Label {
    clf.classify(scores)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedThreshold {
    pub threshold: f64,
    pub polarity: Polarity,
    /// Objective value reached on the training scores.
    pub training_score: f64,
}

/// Strictly between `lo` and `hi` whenever the two differ.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Picks the threshold maximizing `objective` on the training scores.
///
/// Candidates are 0, 1 and the midpoints between consecutive distinct scores;
/// ties go to the smallest candidate.
pub fn tune_threshold(
    scores: &[(f64, Label)],
    polarity: Polarity,
    objective: Objective,
) -> Result<TunedThreshold, ClassifyError> {
    if scores.is_empty() {
        return Err(ClassifyError::Empty);
    }
    if scores.iter().any(|(v, _)| !v.is_finite()) {
        return Err(ClassifyError::NonFinite);
    }
    let total_pos = scores.iter().filter(|(_, l)| l.is_positive()).count();
    if total_pos == 0 || total_pos == scores.len() {
        return Err(ClassifyError::SingleLabel);
    }

    let mut sorted: Vec<(f64, Label)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = sorted.iter().map(|s| s.0).collect();
    // pos_prefix[k] = positives among the k smallest scores
    let mut pos_prefix = Vec::with_capacity(sorted.len() + 1);
    pos_prefix.push(0usize);
    for (_, l) in &sorted {
        pos_prefix.push(pos_prefix.last().unwrap() + usize::from(l.is_positive()));
    }

    let mut candidates = vec![0.0, 1.0];
    candidates.extend(
        values
            .windows(2)
            .filter(|w| w[0] < w[1])
            .map(|w| midpoint(w[0], w[1])),
    );
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let n = values.len();
    let mut best: Option<TunedThreshold> = None;
    for t in candidates {
        let at_or_below = values.partition_point(|&v| v <= t);
        let pos_below = pos_prefix[at_or_below];
        let counts = match polarity {
            Polarity::HighIsPositive => {
                let tp = total_pos - pos_below;
                ConfusionCounts {
                    tp,
                    fp: (n - at_or_below) - tp,
                    tn: at_or_below - pos_below,
                    fn_: pos_below,
                }
            }
            Polarity::LowIsPositive => {
                let fn_ = total_pos - pos_below;
                ConfusionCounts {
                    tp: pos_below,
                    fp: at_or_below - pos_below,
                    tn: (n - at_or_below) - fn_,
                    fn_,
                }
            }
        };
        let score = objective.score(&counts);
        if best.is_none_or(|b| score > b.training_score) {
            best = Some(TunedThreshold {
                threshold: t,
                polarity,
                training_score: score,
            });
        }
    }
    Ok(best.expect("candidate list is never empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        label: Label,
    },
    /// `value <= threshold` goes left.
    Split {
        feature: Feature,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Binary CART tree. Feature values are passed in the order of `features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub features: Vec<Feature>,
    pub max_depth: usize,
    pub root: Node,
}

impl DecisionTree {
    pub fn classify(&self, values: &[f64]) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let slot = self
                        .features
                        .iter()
                        .position(|f| f == feature)
                        .expect("split feature belongs to the tree");
                    node = if values[slot] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn classify_scores(&self, scores: &PairScores) -> Label {
        let values: Vec<f64> = self.features.iter().map(|f| f.value(scores)).collect();
        self.classify(&values)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

pub fn classify_tree(tree: &DecisionTree, values: &[f64]) -> Label {
    tree.classify(values)
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Majority label; ties go to `NotPlagiarism`.
fn majority(pos: usize, n: usize) -> Label {
    if 2 * pos > n {
        Label::Plagiarism
    } else {
        Label::NotPlagiarism
    }
}

struct Trainer<'a> {
    features: &'a [Feature],
    data: &'a [(Vec<f64>, Label)],
    max_depth: usize,
}

impl Trainer<'_> {
    fn grow(&self, rows: &[usize], depth: usize) -> Node {
        let n = rows.len();
        let pos = rows
            .iter()
            .filter(|&&r| self.data[r].1.is_positive())
            .count();
        let leaf = Node::Leaf {
            label: majority(pos, n),
        };
        if pos == 0 || pos == n || depth >= self.max_depth {
            return leaf;
        }
        let parent = gini(pos, n);

        // (impurity, feature slot, threshold)
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = rows.to_vec();
        for slot in 0..self.features.len() {
            order.sort_by(|&a, &b| {
                self.data[a].0[slot]
                    .total_cmp(&self.data[b].0[slot])
                    .then(a.cmp(&b))
            });
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(self.data[order[k - 1]].1.is_positive());
                let (lo, hi) = (self.data[order[k - 1]].0[slot], self.data[order[k]].0[slot]);
                if lo == hi {
                    continue;
                }
                let impurity = (k as f64 * gini(left_pos, k)
                    + (n - k) as f64 * gini(pos - left_pos, n - k))
                    / n as f64;
                if best.is_none_or(|b| impurity < b.0) {
                    best = Some((impurity, slot, midpoint(lo, hi)));
                }
            }
        }
        match best {
            Some((impurity, slot, threshold)) if impurity < parent - 1e-12 => {
                let (left, right): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&r| self.data[r].0[slot] <= threshold);
                Node::Split {
                    feature: self.features[slot],
                    threshold,
                    left: Box::new(self.grow(&left, depth + 1)),
                    right: Box::new(self.grow(&right, depth + 1)),
                }
            }
            _ => leaf,
        }
    }
}

/// Greedy top-down induction with Gini impurity; no pruning.
pub fn train_tree(
    features: &[Feature],
    data: &[(Vec<f64>, Label)],
    max_depth: usize,
) -> Result<DecisionTree, ClassifyError> {
    if data.is_empty() {
        return Err(ClassifyError::Empty);
    }
    if max_depth == 0 {
        return Err(ClassifyError::InvalidDepth);
    }
    for (values, _) in data {
        if values.len() != features.len() {
            return Err(ClassifyError::FeatureCount {
                expected: features.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite);
        }
    }
    let trainer = Trainer {
        features,
        data,
        max_depth,
    };
    let rows: Vec<usize> = (0..data.len()).collect();
    Ok(DecisionTree {
        features: features.to_vec(),
        max_depth,
        root: trainer.grow(&rows, 0),
    })
}

/// Features of the combined classifier.
pub const COMBINED_FEATURES: [Feature; 2] = [Feature::Sj, Feature::Sed];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Threshold(ThresholdClassifier),
    Tree(DecisionTree),
}

impl Model {
    pub fn predict(&self, scores: &PairScores) -> Label {
        match self {
            Model::Threshold(t) => t.classify(scores),
            Model::Tree(t) => t.classify_scores(scores),
        }
    }

    /// The method this model implements, if it matches one.
    pub fn method(&self) -> Option<Method> {
        match self {
            Model::Threshold(t) => Some(match t.feature {
                Feature::J => Method::J,
                Feature::Sj => Method::Sj,
                Feature::Ed => Method::Ed,
                Feature::Sed => Method::Sed,
            }),
            Model::Tree(t) if t.features == COMBINED_FEATURES => Some(Method::Combined),
            Model::Tree(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub objective: Objective,
    pub max_depth: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            objective: Objective::MacroF1,
            max_depth: 3,
        }
    }
}

pub fn train_model(
    method: Method,
    scores: &[PairScores],
    labels: &[Label],
    options: &TrainOptions,
) -> Result<Model, ClassifyError> {
    if scores.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    match method.feature() {
        Some(feature) => {
            let data: Vec<(f64, Label)> = scores
                .iter()
                .zip(labels)
                .map(|(s, &l)| (feature.value(s), l))
                .collect();
            let tuned = tune_threshold(&data, feature.polarity(), options.objective)?;
            Ok(Model::Threshold(ThresholdClassifier {
                feature,
                polarity: tuned.polarity,
                threshold: tuned.threshold,
            }))
        }
        None => {
            if labels.iter().all(|&l| l == labels[0]) && !labels.is_empty() {
                return Err(ClassifyError::SingleLabel);
            }
            let data: Vec<(Vec<f64>, Label)> = scores
                .iter()
                .zip(labels)
                .map(|(s, &l)| (COMBINED_FEATURES.iter().map(|f| f.value(s)).collect(), l))
                .collect();
            Ok(Model::Tree(train_tree(
                &COMBINED_FEATURES,
                &data,
                options.max_depth,
            )?))
        }
    }
}
