//! Reference implementations and generators shared by the integration suites.
//!
//! The oracles are deliberately naive: exhaustive enumeration or literal
//! transcriptions of the definitions, written without reusing library internals.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use semsim::classify::{Objective, Polarity};
use semsim::corpus::{Corpus, Document, Label, ParaphraseCategory, TextPair};
use semsim::eval::ConfusionCounts;
use semsim::wordsim::{SimilarityBackend, TableBackend};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn doc(words: &[&str]) -> Document {
    Document::from_words(words.iter().copied()).unwrap()
}

/// Random token sequence of length `len` over `w0..w{vocab-1}`.
pub fn random_words(rng: &mut ChaCha8Rng, len: usize, vocab: usize) -> Vec<String> {
    (0..len)
        .map(|_| format!("w{}", rng.gen_range(0..vocab)))
        .collect()
}

pub fn random_document(
    rng: &mut ChaCha8Rng,
    min_len: usize,
    max_len: usize,
    vocab: usize,
) -> Document {
    let len = rng.gen_range(min_len..=max_len);
    Document::from_words(random_words(rng, len, vocab)).unwrap()
}

/// Symmetric similarity table over `w0..w{vocab-1}` with random tau distances.
/// Values are drawn from a coarse grid so that ties occur.
pub fn random_table(rng: &mut ChaCha8Rng, vocab: usize, density: f64) -> TableBackend {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut table = TableBackend::new();
    for i in 0..vocab {
        table.set_tau(&format!("w{i}"), rng.gen::<f64>());
        for j in i + 1..vocab {
            if rng.gen_bool(density) {
                let v = if rng.gen_bool(0.5) {
                    *grid.choose(rng).unwrap()
                } else {
                    rng.gen::<f64>()
                };
                table.set_sim(&format!("w{i}"), &format!("w{j}"), v);
            }
        }
    }
    table
}

/// Minimum edit-script cost by enumerating every order-preserving alignment:
/// choose k positions of `a` and k of `b` (as bitmasks) to pair up in order,
/// delete or insert the rest.
pub fn brute_force_edit_cost(a: &[&str], b: &[&str], backend: &dyn SimilarityBackend) -> f64 {
    assert!(a.len() <= 16 && b.len() <= 16);
    let mut best = f64::INFINITY;
    for ma in 0u32..(1 << a.len()) {
        for mb in (0u32..(1 << b.len())).filter(|mb| mb.count_ones() == ma.count_ones()) {
            let mut cost = 0.0;
            let picked_a = (0..a.len()).filter(|i| ma & (1 << i) != 0);
            let picked_b = (0..b.len()).filter(|j| mb & (1 << j) != 0);
            for (i, j) in picked_a.zip(picked_b) {
                if a[i] != b[j] {
                    cost += 1.0 - backend.sim(a[i], b[j]);
                }
            }
            for (i, t) in a.iter().enumerate() {
                if ma & (1 << i) == 0 {
                    cost += backend.tau_dist(t);
                }
            }
            for (j, t) in b.iter().enumerate() {
                if mb & (1 << j) == 0 {
                    cost += backend.tau_dist(t);
                }
            }
            best = best.min(cost);
        }
    }
    best
}

/// Literal mutual-best rule: a pair survives when its similarity is positive,
/// no other y scores higher with x and no other x scores higher with y. Survivors
/// are taken greedily by (similarity desc, x asc, y asc) while both words are free.
pub fn reference_softmatch(
    xs: &BTreeSet<String>,
    ys: &BTreeSet<String>,
    backend: &dyn SimilarityBackend,
) -> Vec<(String, String, f64)> {
    let mut survivors = Vec::new();
    for x in xs {
        for y in ys {
            let s = backend.sim(x, y);
            if s <= 0.0 {
                continue;
            }
            let beaten_for_x = ys.iter().any(|other| backend.sim(x, other) > s);
            let beaten_for_y = xs.iter().any(|other| backend.sim(other, y) > s);
            if !beaten_for_x && !beaten_for_y {
                survivors.push((x.clone(), y.clone(), s));
            }
        }
    }
    survivors.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    let mut used_x = HashSet::new();
    let mut used_y = HashSet::new();
    let mut kept = Vec::new();
    for (x, y, s) in survivors {
        if !used_x.contains(&x) && !used_y.contains(&y) {
            used_x.insert(x.clone());
            used_y.insert(y.clone());
            kept.push((x, y, s));
        }
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    kept
}

/// Taxonomy edges as (child, parent).
pub type Edges = Vec<(String, String)>;

/// Depth by exhaustive enumeration of upward paths: 1 + length of the shortest path to the root.
pub fn brute_depth(edges: &Edges, node: &str, root: &str) -> u32 {
    fn walk(edges: &Edges, node: &str, root: &str, len: u32, best: &mut u32) {
        if node == root {
            *best = (*best).min(len);
            return;
        }
        for (c, p) in edges {
            if c == node {
                walk(edges, p, root, len + 1, best);
            }
        }
    }
    let mut best = u32::MAX;
    walk(edges, node, root, 1, &mut best);
    best
}

pub fn brute_ancestors(edges: &Edges, node: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![node.to_owned()];
    while let Some(n) = stack.pop() {
        if seen.insert(n.clone()) {
            for (c, p) in edges {
                if *c == n {
                    stack.push(p.clone());
                }
            }
        }
    }
    seen
}

/// Wu-Palmer similarity over the deepest common ancestor, capped at 1.
pub fn brute_wup(edges: &Edges, root: &str, a: &str, b: &str) -> f64 {
    let common: BTreeSet<String> = brute_ancestors(edges, a)
        .intersection(&brute_ancestors(edges, b))
        .cloned()
        .collect();
    let mcs = common
        .iter()
        .map(|n| brute_depth(edges, n, root))
        .max()
        .unwrap();
    let denom = brute_depth(edges, a, root) + brute_depth(edges, b, root);
    (2.0 * f64::from(mcs) / f64::from(denom)).min(1.0)
}

/// Random rooted DAG over `n` nodes; node i > 0 gets 1–2 parents among lower indices.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize) -> Edges {
    let mut edges = Vec::new();
    for i in 1..n {
        let parents = if i > 1 && rng.gen_bool(0.3) { 2 } else { 1 };
        let mut chosen = BTreeSet::new();
        while chosen.len() < parents.min(i) {
            chosen.insert(rng.gen_range(0..i));
        }
        for p in chosen {
            edges.push((format!("n{i}"), format!("n{p}")));
        }
    }
    edges
}

/// Objective value of a threshold, counted directly from the definition.
pub fn objective_at(
    scores: &[(f64, Label)],
    polarity: Polarity,
    threshold: f64,
    objective: Objective,
) -> f64 {
    let gold: Vec<Label> = scores.iter().map(|s| s.1).collect();
    let predicted: Vec<Label> = scores
        .iter()
        .map(|&(v, _)| {
            let positive = match polarity {
                Polarity::HighIsPositive => v > threshold,
                Polarity::LowIsPositive => v <= threshold,
            };
            if positive {
                Label::Plagiarism
            } else {
                Label::NotPlagiarism
            }
        })
        .collect();
    let counts = ConfusionCounts::from_labels(&gold, &predicted);
    objective.score(&counts)
}

/// Every threshold in [0, 1] that can produce a distinct partition, plus points just around each score.
pub fn exhaustive_thresholds(scores: &[(f64, Label)]) -> Vec<f64> {
    let mut out = vec![0.0, 1.0];
    for &(v, _) in scores {
        out.extend([v, v - 1e-9, v + 1e-9]);
    }
    out.retain(|t| (0.0..=1.0).contains(t));
    out
}

/// Synthetic paraphrase corpus with a known synonym table.
///
/// Content words come in topics, each word paired with a synonym (similarity 0.9).
/// Function words are cheap to insert or delete. Four pair shapes, 50 each:
/// - reordered synonym paraphrase (positive): soft overlap high, order lost
/// - padded in-order paraphrase (positive): order kept, vocabulary diluted by fillers
/// - shared scaffolding (negative): different topics on the same function-word frame
/// - topic shuffle (negative): same topic, unrelated words
pub struct Synthetic {
    pub corpus: Corpus,
    pub backend: TableBackend,
}

const TOPICS: usize = 10;
const TOPIC_WORDS: usize = 16;
const FUNCTION_WORDS: usize = 12;

fn content(topic: usize, i: usize) -> String {
    format!("t{topic}w{i}")
}

fn synonym(topic: usize, i: usize) -> String {
    format!("t{topic}s{i}")
}

fn function(i: usize) -> String {
    format!("f{i}")
}

pub fn synonym_backend() -> TableBackend {
    let mut table = TableBackend::new().with_default_tau(0.9);
    for t in 0..TOPICS {
        for i in 0..TOPIC_WORDS {
            table.set_sim(&content(t, i), &synonym(t, i), 0.9);
            table.set_tau(&content(t, i), 0.9);
            table.set_tau(&synonym(t, i), 0.9);
        }
    }
    for f in 0..FUNCTION_WORDS {
        table.set_tau(&function(f), 0.15);
    }
    table
}

fn pick(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

fn with_function_words(rng: &mut ChaCha8Rng, words: Vec<String>, rate: f64) -> Vec<String> {
    let mut out = Vec::new();
    for w in words {
        out.push(w);
        if rng.gen_bool(rate) {
            out.push(function(rng.gen_range(0..FUNCTION_WORDS)));
        }
    }
    out
}

pub fn synthetic_corpus(seed: u64, per_shape: usize) -> Synthetic {
    let mut rng = rng(seed);
    let mut pairs = Vec::new();
    let mut push =
        |id: String, a: Vec<String>, b: Vec<String>, label: Label, cat: ParaphraseCategory| {
            pairs.push(
                TextPair::new(
                    id,
                    Document::from_words(a).unwrap(),
                    Document::from_words(b).unwrap(),
                    label,
                    cat,
                )
                .unwrap(),
            );
        };

    for n in 0..per_shape {
        // reordered synonym paraphrase
        let t = rng.gen_range(0..TOPICS);
        let k = rng.gen_range(5..=9);
        let idx = pick(&mut rng, TOPIC_WORDS, k);
        let src: Vec<String> = idx.iter().map(|&i| content(t, i)).collect();
        let mut sus: Vec<String> = idx
            .iter()
            .map(|&i| {
                if rng.gen_bool(0.75) {
                    synonym(t, i)
                } else {
                    content(t, i)
                }
            })
            .collect();
        sus.shuffle(&mut rng);
        let src = with_function_words(&mut rng, src, 0.1);
        let sus = with_function_words(&mut rng, sus, 0.1);
        push(
            format!("reorder-{n}"),
            src,
            sus,
            Label::Plagiarism,
            ParaphraseCategory::Syntactical,
        );

        // padded in-order paraphrase
        let t = rng.gen_range(0..TOPICS);
        let k = rng.gen_range(5..=9);
        let idx = pick(&mut rng, TOPIC_WORDS, k);
        let src: Vec<String> = idx.iter().map(|&i| content(t, i)).collect();
        let sus: Vec<String> = idx
            .iter()
            .map(|&i| {
                if rng.gen_bool(0.6) {
                    synonym(t, i)
                } else {
                    content(t, i)
                }
            })
            .collect();
        let rate = rng.gen_range(0.6..=1.0);
        let sus = with_function_words(&mut rng, sus, rate);
        let sus = with_function_words(&mut rng, sus, rate / 2.0);
        push(
            format!("padded-{n}"),
            src,
            sus,
            Label::Plagiarism,
            ParaphraseCategory::Lexical,
        );

        // shared scaffolding
        let (ta, tb) = loop {
            let (a, b) = (rng.gen_range(0..TOPICS), rng.gen_range(0..TOPICS));
            if a != b {
                break (a, b);
            }
        };
        let k = rng.gen_range(4..=7);
        let ia = pick(&mut rng, TOPIC_WORDS, k);
        let ib = pick(&mut rng, TOPIC_WORDS, k);
        let mut src = Vec::new();
        let mut sus = Vec::new();
        for j in 0..k {
            for _ in 0..rng.gen_range(1..=2) {
                let f = function(rng.gen_range(0..FUNCTION_WORDS));
                src.push(f.clone());
                sus.push(f);
            }
            src.push(content(ta, ia[j]));
            sus.push(content(tb, ib[j]));
        }
        push(
            format!("frame-{n}"),
            src,
            sus,
            Label::NotPlagiarism,
            ParaphraseCategory::Unlabeled,
        );

        // topic shuffle
        let t = rng.gen_range(0..TOPICS);
        let k = rng.gen_range(5..=9);
        let all = pick(&mut rng, TOPIC_WORDS, TOPIC_WORDS);
        let src: Vec<String> = all[..k].iter().map(|&i| content(t, i)).collect();
        let overlap = rng.gen_range(0..=2);
        let mut sus: Vec<String> = all[k - overlap..(2 * k - overlap).min(TOPIC_WORDS)]
            .iter()
            .map(|&i| content(t, i))
            .collect();
        sus.shuffle(&mut rng);
        let src = with_function_words(&mut rng, src, 0.4);
        let sus = with_function_words(&mut rng, sus, 0.4);
        push(
            format!("shuffle-{n}"),
            src,
            sus,
            Label::NotPlagiarism,
            ParaphraseCategory::Unlabeled,
        );
    }

    Synthetic {
        corpus: Corpus::new(format!("synthetic-{seed}"), pairs).unwrap(),
        backend: synonym_backend(),
    }
}

/// Category-to-count summary, handy in failure messages.
pub fn category_counts(corpus: &Corpus) -> BTreeMap<ParaphraseCategory, usize> {
    let mut out = BTreeMap::new();
    for p in corpus.pairs() {
        *out.entry(p.category()).or_insert(0) += 1;
    }
    out
}
