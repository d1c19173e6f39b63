//! Semantic text similarity for paraphrase plagiarism detection.
//!
//! Two measures generalize their lexical counterparts with a word-similarity backend:
//! a soft-matching Jaccard coefficient and a semantic edit distance. With the exact-match
//! backend both reduce to plain Jaccard and token-level Levenshtein.
//!
//! ```
//! use semsim::corpus::{tokenize, TokenizerConfig};
//! use semsim::measures::{score_documents, SoftmatchRounds};
//! use semsim::wordsim::ExactMatch;
//!
//! let cfg = TokenizerConfig::default();
//! let a = tokenize("The cat sat on the mat.", &cfg);
//! let b = tokenize("the cat sat", &cfg);
//! let s = score_documents(&a, &b, &ExactMatch, SoftmatchRounds::One).unwrap();
//! assert_eq!(s.sj, s.j);
//! assert_eq!(s.sed, s.ed);
//! ```

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod measures;
mod par;
pub mod wordsim;

pub use classify::{Method, Model};
pub use corpus::{Corpus, Document, Label, ParaphraseCategory, TextPair, Token};
pub use measures::{PairScores, SoftmatchRounds};
pub use wordsim::SimilarityBackend;
