//! Word-pair similarity backends.
//!
//! Every backend yields `sim(x, y)` in `[0, 1]`, the distance `1 - sim`, and
//! `tau_dist(x)`, the distance of a word to a designated maximally general
//! word. `tau_dist` prices insertions and deletions in the semantic edit
//! distance: general words are cheap to add or drop, rare words are not.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum WordSimError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} vector components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("embedding table has no entries")]
    EmptyTable,
    #[error("taxonomy cycle through synset `{0}`")]
    Cycle(String),
    #[error("line {line}: unknown synset `{synset}`")]
    DanglingSynset { line: usize, synset: String },
    #[error("taxonomy has {0} roots, expected exactly one")]
    Roots(usize),
    #[error("unknown tau synset `{0}`")]
    UnknownTau(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    ExactMatch,
    EmbeddingCosine,
    TaxonomyWup,
    Table,
}

/// What `sim` returns when either word is unknown to the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    /// 1 iff the words are equal, else 0.
    #[default]
    ExactFallback,
    /// Always 0.
    Zero,
}

impl OovPolicy {
    fn sim(self, x: &str, y: &str) -> f64 {
        match self {
            OovPolicy::ExactFallback if x == y => 1.0,
            _ => 0.0,
        }
    }
}

pub trait SimilarityBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    /// Symmetric similarity in `[0, 1]`.
    fn sim(&self, x: &str, y: &str) -> f64;

    fn dist(&self, x: &str, y: &str) -> f64 {
        1.0 - self.sim(x, y)
    }

    /// Distance from the general word tau to `x`, in `[0, 1]`.
    fn tau_dist(&self, x: &str) -> f64;

    /// Whether `word` is in the backend's vocabulary.
    fn knows(&self, word: &str) -> bool;
}

/// Fraction of the corpus vocabulary the backend knows.
pub fn coverage(backend: &dyn SimilarityBackend, corpus: &Corpus) -> f64 {
    let vocab = corpus.vocabulary();
    if vocab.is_empty() {
        return 0.0;
    }
    let known = vocab.iter().filter(|w| backend.knows(w)).count();
    known as f64 / vocab.len() as f64
}

/// Unit cost backend. The general word never occurs in text, so `tau_dist` is
/// identically 1 and the semantic measures reduce to the classic ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl SimilarityBackend for ExactMatch {
    fn kind(&self) -> BackendKind {
        BackendKind::ExactMatch
    }

    fn sim(&self, x: &str, y: &str) -> f64 {
        if x == y {
            1.0
        } else {
            0.0
        }
    }

    fn tau_dist(&self, _x: &str) -> f64 {
        1.0
    }

    fn knows(&self, _word: &str) -> bool {
        true
    }
}

/// Word vectors in file order.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
    duplicates: usize,
}

impl EmbeddingTable {
    /// Builds a table from in-memory rows; later duplicates replace earlier ones.
    pub fn from_rows<I>(dim: usize, rows: I) -> Result<Self, WordSimError>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let mut table = EmbeddingTable {
            dim,
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
            duplicates: 0,
        };
        for (i, (word, vector)) in rows.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(WordSimError::DimensionMismatch {
                    line: i + 1,
                    expected: dim,
                    found: vector.len(),
                });
            }
            table.insert(i + 1, word, &vector)?;
        }
        table.finish()
    }

    fn insert(&mut self, line: usize, word: String, vector: &[f32]) -> Result<(), WordSimError> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(WordSimError::Parse {
                line,
                message: "non-finite vector component".to_owned(),
            });
        }
        match self.index.get(&word) {
            Some(&slot) => {
                self.duplicates += 1;
                self.data[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(vector);
            }
            None => {
                self.index.insert(word.clone(), self.words.len());
                self.words.push(word);
                self.data.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Self, WordSimError> {
        if self.dim == 0 || self.words.is_empty() {
            return Err(WordSimError::EmptyTable);
        }
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Rows whose word had already been seen.
    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    /// Distinct words in order of first appearance.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

/// Loads the textual word-vector format: a `count dim` header, then one
/// `word v1 ... vdim` row per line.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, WordSimError> {
    let io_err = |source| WordSimError::Io {
        path: path.to_owned(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    read_embeddings(BufReader::new(file)).map_err(|e| match e {
        WordSimError::Io { source, .. } => io_err(source),
        other => other,
    })
}

pub fn read_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable, WordSimError> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|source| WordSimError::Io {
            path: PathBuf::new(),
            source,
        })?,
        None => return Err(WordSimError::EmptyTable),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parsed: Option<(usize, usize)> = match fields.as_slice() {
        [count, dim] => count.parse().ok().zip(dim.parse().ok()),
        _ => None,
    };
    let (_count, dim) = parsed.ok_or_else(|| WordSimError::Parse {
        line: 1,
        message: format!("expected `count dim` header, found `{header}`"),
    })?;

    let mut table = EmbeddingTable {
        dim,
        words: Vec::new(),
        data: Vec::new(),
        index: HashMap::new(),
        duplicates: 0,
    };
    let mut vector = Vec::with_capacity(dim);
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|source| WordSimError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        vector.clear();
        for part in parts {
            let v: f32 = part.parse().map_err(|_| WordSimError::Parse {
                line: line_no,
                message: format!("unparsable float `{part}`"),
            })?;
            vector.push(v);
        }
        if vector.len() != dim {
            return Err(WordSimError::DimensionMismatch {
                line: line_no,
                expected: dim,
                found: vector.len(),
            });
        }
        table.insert(line_no, word.to_owned(), &vector)?;
    }
    table.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Tau is the centroid of the first `tau_top_k` words of the table.
    pub tau_top_k: usize,
    pub oov: OovPolicy,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            tau_top_k: 100,
            oov: OovPolicy::ExactFallback,
        }
    }
}

/// Cosine similarity over word vectors, negative cosines clamped to 0.
#[derive(Debug, Clone)]
pub struct EmbeddingBackend {
    dim: usize,
    index: HashMap<String, usize>,
    unit: Vec<f32>,
    tau: Vec<f32>,
    oov: OovPolicy,
}

fn normalized(v: &[f32]) -> Vec<f32> {
    let norm = v
        .iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|&x| (f64::from(x) / norm) as f32).collect()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

impl EmbeddingBackend {
    pub fn new(table: &EmbeddingTable, config: EmbeddingConfig) -> Self {
        let dim = table.dim;
        let mut unit = Vec::with_capacity(table.data.len());
        for row in table.data.chunks_exact(dim) {
            unit.extend(normalized(row));
        }
        let k = config.tau_top_k.clamp(1, table.len());
        let mut centroid = vec![0.0f64; dim];
        for row in table.data.chunks_exact(dim).take(k) {
            for (c, &x) in centroid.iter_mut().zip(row) {
                *c += f64::from(x);
            }
        }
        let centroid: Vec<f32> = centroid.iter().map(|&c| (c / k as f64) as f32).collect();
        EmbeddingBackend {
            dim,
            index: table.index.clone(),
            unit,
            tau: normalized(&centroid),
            oov: config.oov,
        }
    }

    fn unit_vector(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.unit[i * self.dim..(i + 1) * self.dim])
    }
}

impl SimilarityBackend for EmbeddingBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::EmbeddingCosine
    }

    fn sim(&self, x: &str, y: &str) -> f64 {
        match (self.unit_vector(x), self.unit_vector(y)) {
            (Some(_), Some(_)) if x == y => 1.0,
            (Some(a), Some(b)) => dot(a, b).clamp(0.0, 1.0),
            _ => self.oov.sim(x, y),
        }
    }

    fn tau_dist(&self, x: &str) -> f64 {
        match self.unit_vector(x) {
            Some(v) => 1.0 - dot(v, &self.tau).clamp(0.0, 1.0),
            None => 1.0,
        }
    }

    fn knows(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

/// A rooted DAG of synsets plus a word lexicon. Depths start at 1 for the root.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    ids: Vec<String>,
    id_index: HashMap<String, u32>,
    parents: Vec<Vec<u32>>,
    depth: Vec<u32>,
    /// Sorted ancestor set of each node, the node itself included.
    ancestors: Vec<Vec<u32>>,
    lexicon: HashMap<String, Vec<u32>>,
    root: u32,
}

/// Parsed but unvalidated taxonomy records.
#[derive(Debug, Default)]
pub struct TaxonomyBuilder {
    ids: Vec<String>,
    id_index: HashMap<String, u32>,
    parents: Vec<Vec<u32>>,
    words: Vec<(usize, String, String)>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&n) = self.id_index.get(id) {
            return n;
        }
        let n = self.ids.len() as u32;
        self.ids.push(id.to_owned());
        self.id_index.insert(id.to_owned(), n);
        self.parents.push(Vec::new());
        n
    }

    pub fn edge(&mut self, child: &str, parent: &str) -> &mut Self {
        let c = self.intern(child);
        let p = self.intern(parent);
        if !self.parents[c as usize].contains(&p) {
            self.parents[c as usize].push(p);
        }
        self
    }

    pub fn word(&mut self, word: &str, synset: &str) -> &mut Self {
        let line = self.words.len() + 1;
        self.words.push((line, word.to_owned(), synset.to_owned()));
        self
    }

    pub fn build(&self) -> Result<Taxonomy, WordSimError> {
        let n = self.ids.len();
        let roots: Vec<u32> = (0..n as u32)
            .filter(|&i| self.parents[i as usize].is_empty())
            .collect();
        if roots.len() > 1 {
            return Err(WordSimError::Roots(roots.len()));
        }

        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut pending: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p as usize].push(c as u32);
            }
        }

        // Kahn's order from the root; whatever is left over sits on or behind a cycle.
        let mut order = Vec::with_capacity(n);
        let mut queue: VecDeque<u32> = roots.iter().copied().collect();
        while let Some(node) = queue.pop_front() {
            order.push(node);
            for &c in &children[node as usize] {
                pending[c as usize] -= 1;
                if pending[c as usize] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() < n || roots.is_empty() {
            return Err(WordSimError::Cycle(self.cycle_member(&pending)));
        }

        let root = roots[0];
        let mut depth = vec![0u32; n];
        let mut ancestors: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &node in &order {
            let ps = &self.parents[node as usize];
            depth[node as usize] = 1 + ps.iter().map(|&p| depth[p as usize]).min().unwrap_or(0);
            let mut anc = vec![node];
            for &p in ps {
                anc.extend_from_slice(&ancestors[p as usize]);
            }
            anc.sort_unstable();
            anc.dedup();
            ancestors[node as usize] = anc;
        }

        let mut lexicon: HashMap<String, Vec<u32>> = HashMap::new();
        for (line, word, synset) in &self.words {
            let &s = self
                .id_index
                .get(synset)
                .ok_or_else(|| WordSimError::DanglingSynset {
                    line: *line,
                    synset: synset.clone(),
                })?;
            let entry = lexicon.entry(word.clone()).or_default();
            if !entry.contains(&s) {
                entry.push(s);
                entry.sort_unstable();
            }
        }

        Ok(Taxonomy {
            ids: self.ids.clone(),
            id_index: self.id_index.clone(),
            parents: self.parents.clone(),
            depth,
            ancestors,
            lexicon,
            root,
        })
    }

    fn cycle_member(&self, pending: &[usize]) -> String {
        // Walk unresolved parents until a node repeats.
        let Some(start) = pending.iter().position(|&p| p > 0) else {
            return self.ids.first().cloned().unwrap_or_default();
        };
        let mut visited = vec![false; self.ids.len()];
        let mut node = start;
        while !visited[node] {
            visited[node] = true;
            node = self.parents[node]
                .iter()
                .map(|&p| p as usize)
                .find(|&p| pending[p] > 0)
                .unwrap_or(node);
        }
        self.ids[node].clone()
    }
}

impl Taxonomy {
    pub fn builder() -> TaxonomyBuilder {
        TaxonomyBuilder::new()
    }

    pub fn root(&self) -> &str {
        &self.ids[self.root as usize]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn depth(&self, synset: &str) -> Option<u32> {
        self.id_index.get(synset).map(|&i| self.depth[i as usize])
    }

    pub fn depths(&self) -> BTreeMap<&str, u32> {
        self.ids
            .iter()
            .zip(&self.depth)
            .map(|(id, &d)| (id.as_str(), d))
            .collect()
    }

    pub fn parents(&self, synset: &str) -> Option<Vec<&str>> {
        self.id_index.get(synset).map(|&i| {
            self.parents[i as usize]
                .iter()
                .map(|&p| self.ids[p as usize].as_str())
                .collect()
        })
    }

    pub fn synsets(&self, word: &str) -> Option<Vec<&str>> {
        self.lexicon
            .get(word)
            .map(|ss| ss.iter().map(|&s| self.ids[s as usize].as_str()).collect())
    }

    fn node(&self, synset: &str) -> Option<u32> {
        self.id_index.get(synset).copied()
    }

    /// Depth of the deepest common ancestor.
    fn mcs_depth(&self, a: u32, b: u32) -> u32 {
        let (xs, ys) = (&self.ancestors[a as usize], &self.ancestors[b as usize]);
        let (mut i, mut j, mut best) = (0, 0, 0);
        while i < xs.len() && j < ys.len() {
            match xs[i].cmp(&ys[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    best = best.max(self.depth[xs[i] as usize]);
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }

    fn wup_nodes(&self, a: u32, b: u32) -> f64 {
        let mcs = f64::from(self.mcs_depth(a, b));
        let denom = f64::from(self.depth[a as usize] + self.depth[b as usize]);
        // With multiple parents an ancestor can sit deeper than its descendant's
        // shortest path to the root.
        (2.0 * mcs / denom).min(1.0)
    }

    /// Wu-Palmer similarity of two synsets.
    pub fn wup(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.wup_nodes(self.node(a)?, self.node(b)?))
    }
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy, WordSimError> {
    let text = std::fs::read_to_string(path).map_err(|source| WordSimError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_taxonomy(&text)
}

/// Parses `edge<TAB>child<TAB>parent` and `word<TAB>word<TAB>synset` records.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_taxonomy(text: &str) -> Result<Taxonomy, WordSimError> {
    let mut builder = TaxonomyBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        match cols.as_slice() {
            ["edge", child, parent] => {
                builder.edge(child, parent);
            }
            ["word", word, synset] => {
                builder
                    .words
                    .push((line, (*word).to_owned(), (*synset).to_owned()))
            }
            _ => {
                return Err(WordSimError::Parse {
                    line,
                    message: format!(
                        "expected `edge` or `word` record with 3 columns, found `{raw}`"
                    ),
                })
            }
        }
    }
    builder.build()
}

/// Wu-Palmer similarity over a taxonomy, maximized over the words' synsets.
#[derive(Debug, Clone)]
pub struct WupBackend {
    taxonomy: Taxonomy,
    tau: u32,
    oov: OovPolicy,
}

impl WupBackend {
    /// `tau` defaults to the root's only child when there is exactly one, else the root.
    pub fn new(
        taxonomy: Taxonomy,
        tau: Option<&str>,
        oov: OovPolicy,
    ) -> Result<Self, WordSimError> {
        let tau = match tau {
            Some(id) => taxonomy
                .node(id)
                .ok_or_else(|| WordSimError::UnknownTau(id.to_owned()))?,
            None => {
                let root = taxonomy.root;
                let mut kids = (0..taxonomy.len() as u32)
                    .filter(|&n| taxonomy.parents[n as usize].contains(&root));
                match (kids.next(), kids.next()) {
                    (Some(only), None) => only,
                    _ => root,
                }
            }
        };
        Ok(WupBackend { taxonomy, tau, oov })
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn tau(&self) -> &str {
        &self.taxonomy.ids[self.tau as usize]
    }
}

impl SimilarityBackend for WupBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::TaxonomyWup
    }

    fn sim(&self, x: &str, y: &str) -> f64 {
        let lex = &self.taxonomy.lexicon;
        match (lex.get(x), lex.get(y)) {
            (Some(xs), Some(ys)) => xs
                .iter()
                .flat_map(|&a| ys.iter().map(move |&b| (a, b)))
                .map(|(a, b)| self.taxonomy.wup_nodes(a, b))
                .fold(0.0, f64::max),
            _ => self.oov.sim(x, y),
        }
    }

    fn tau_dist(&self, x: &str) -> f64 {
        match self.taxonomy.lexicon.get(x) {
            Some(ss) => {
                let best = ss
                    .iter()
                    .map(|&s| self.taxonomy.wup_nodes(self.tau, s))
                    .fold(0.0, f64::max);
                1.0 - best
            }
            None => 1.0,
        }
    }

    fn knows(&self, word: &str) -> bool {
        self.taxonomy.lexicon.contains_key(word)
    }
}

/// Explicit similarity and tau tables. Pairs not listed have similarity 0;
/// words not listed have `tau_dist` equal to the default.
#[derive(Debug, Clone)]
pub struct TableBackend {
    sims: HashMap<String, HashMap<String, f64>>,
    taus: HashMap<String, f64>,
    default_tau: f64,
}

impl Default for TableBackend {
    fn default() -> Self {
        TableBackend {
            sims: HashMap::new(),
            taus: HashMap::new(),
            default_tau: 1.0,
        }
    }
}

impl TableBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_default_tau(mut self, tau: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&tau),
            "tau distance {tau} outside [0, 1]"
        );
        self.default_tau = tau;
        self
    }

    /// Sets `sim(x, y) = sim(y, x) = value`. Identical words always have similarity 1.
    pub fn set_sim(&mut self, x: &str, y: &str, value: f64) {
        assert!(
            (0.0..=1.0).contains(&value),
            "similarity {value} outside [0, 1]"
        );
        if x != y {
            self.sims
                .entry(x.to_owned())
                .or_default()
                .insert(y.to_owned(), value);
            self.sims
                .entry(y.to_owned())
                .or_default()
                .insert(x.to_owned(), value);
        }
    }

    pub fn set_tau(&mut self, word: &str, tau: f64) {
        assert!(
            (0.0..=1.0).contains(&tau),
            "tau distance {tau} outside [0, 1]"
        );
        self.taus.insert(word.to_owned(), tau);
    }
}

impl SimilarityBackend for TableBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Table
    }

    fn sim(&self, x: &str, y: &str) -> f64 {
        if x == y {
            return 1.0;
        }
        self.sims
            .get(x)
            .and_then(|row| row.get(y))
            .copied()
            .unwrap_or(0.0)
    }

    fn tau_dist(&self, x: &str) -> f64 {
        self.taus.get(x).copied().unwrap_or(self.default_tau)
    }

    fn knows(&self, word: &str) -> bool {
        self.taus.contains_key(word) || self.sims.contains_key(word)
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BackendKind::ExactMatch => "exact",
            BackendKind::EmbeddingCosine => "embedding",
            BackendKind::TaxonomyWup => "wup",
            BackendKind::Table => "table",
        };
        f.write_str(s)
    }
}
