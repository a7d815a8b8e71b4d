//! Treebank ingestion, vocabularies and pretrained embeddings.

mod conll;
mod embeddings;
mod sentence;
mod vocab;

pub use conll::{parse_conll, parse_conll_sentences, parse_conll_with, write_conll, Pair, ReadOptions};
pub use embeddings::{load_pretrained_embeddings, parse_pretrained_embeddings, FALLBACK_RANGE};
pub use sentence::{ConllColumns, DependencyTree, RootPolicy, Sentence, Token, ROOT_FORM, ROOT_POS};
pub use vocab::{build_vocabulary, EncodedSentence, SymbolTable, Table, Vocabulary, PAD, ROOT, UNK};
