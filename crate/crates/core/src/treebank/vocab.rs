use std::collections::HashMap;

use super::conll::Pair;
use super::sentence::Sentence;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const ROOT: usize = 2;

const RESERVED: [&str; 3] = ["<PAD>", "<UNK>", "<ROOT>"];

/// Bijection between symbols and contiguous ids.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SymbolTable {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl SymbolTable {
    fn with_reserved() -> Self {
        let mut t = SymbolTable::default();
        for s in RESERVED {
            t.push(s.to_string());
        }
        t
    }

    pub fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        let mut t = SymbolTable::default();
        for s in symbols {
            if t.index.contains_key(&s) {
                return Err(Error::Checkpoint(format!("duplicate vocabulary symbol {s:?}")));
            }
            t.push(s);
        }
        Ok(t)
    }

    fn push(&mut self, symbol: String) -> usize {
        let id = self.symbols.len();
        self.index.insert(symbol.clone(), id);
        self.symbols.push(symbol);
        id
    }

    pub fn get(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    /// Id of `symbol`, or [`UNK`] when absent.
    pub fn lookup(&self, symbol: &str) -> usize {
        self.get(symbol).unwrap_or(UNK)
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.symbols[id]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table {
    Words,
    Chars,
    Pos,
    Labels,
}

/// Word, character, POS and label tables. Word, character and POS tables
/// reserve ids 0..3 for PAD, UNK and ROOT; the label table has no reserved
/// entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub words: SymbolTable,
    pub chars: SymbolTable,
    pub pos: SymbolTable,
    pub labels: SymbolTable,
    frozen: bool,
}

/// Per-sentence id sequences, position 0 being ROOT.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedSentence {
    pub words: Vec<usize>,
    pub pos: Vec<usize>,
    pub chars: Vec<Vec<usize>>,
}

impl EncodedSentence {
    /// Number of positions including ROOT.
    pub fn positions(&self) -> usize {
        self.words.len()
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            words: SymbolTable::with_reserved(),
            chars: SymbolTable::with_reserved(),
            pos: SymbolTable::with_reserved(),
            labels: SymbolTable::default(),
            frozen: false,
        }
    }
}

/// Symbols sorted by frequency (descending), ties broken lexicographically.
fn ranked(counts: HashMap<String, usize>, min_count: usize) -> Vec<String> {
    let mut items: Vec<(String, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    items.into_iter().map(|(s, _)| s).collect()
}

#[derive(Default)]
struct Counts {
    words: HashMap<String, usize>,
    chars: HashMap<String, usize>,
    pos: HashMap<String, usize>,
    labels: HashMap<String, usize>,
}

fn count(corpus: &[Pair]) -> Counts {
    let mut c = Counts::default();
    for (sentence, tree) in corpus {
        for tok in &sentence.tokens()[1..] {
            *c.words.entry(tok.form.clone()).or_default() += 1;
            *c.pos.entry(tok.pos.clone()).or_default() += 1;
            for ch in &tok.chars {
                *c.chars.entry(ch.to_string()).or_default() += 1;
            }
        }
        for label in tree.labels() {
            *c.labels.entry(label.clone()).or_default() += 1;
        }
    }
    c
}

pub fn build_vocabulary(corpus: &[Pair], min_word_count: usize) -> Vocabulary {
    let mut vocab = Vocabulary::default();
    vocab.absorb(count(corpus), min_word_count);
    vocab.frozen = true;
    vocab
}

impl Vocabulary {
    pub fn from_tables(words: SymbolTable, chars: SymbolTable, pos: SymbolTable, labels: SymbolTable) -> Result<Self> {
        for (name, t) in [("word", &words), ("char", &chars), ("pos", &pos)] {
            for (i, r) in RESERVED.iter().enumerate() {
                if t.get(r) != Some(i) {
                    return Err(Error::Checkpoint(format!("{name} table lacks reserved symbol {r}")));
                }
            }
        }
        Ok(Vocabulary {
            words,
            chars,
            pos,
            labels,
            frozen: true,
        })
    }

    fn absorb(&mut self, counts: Counts, min_word_count: usize) {
        for w in ranked(counts.words, min_word_count) {
            if self.words.get(&w).is_none() {
                self.words.push(w);
            }
        }
        for (table, counts) in [
            (&mut self.chars, counts.chars),
            (&mut self.pos, counts.pos),
            (&mut self.labels, counts.labels),
        ] {
            for s in ranked(counts, 1) {
                if table.get(&s).is_none() {
                    table.push(s);
                }
            }
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn table(&self, table: Table) -> &SymbolTable {
        match table {
            Table::Words => &self.words,
            Table::Chars => &self.chars,
            Table::Pos => &self.pos,
            Table::Labels => &self.labels,
        }
    }

    pub fn insert(&mut self, table: Table, symbol: &str) -> Result<usize> {
        if self.frozen {
            return Err(Error::FrozenVocabulary(symbol.to_string()));
        }
        let t = match table {
            Table::Words => &mut self.words,
            Table::Chars => &mut self.chars,
            Table::Pos => &mut self.pos,
            Table::Labels => &mut self.labels,
        };
        Ok(t.get(symbol).unwrap_or_else(|| t.push(symbol.to_string())))
    }

    /// A new frozen vocabulary with every symbol of `self` at its original id
    /// and symbols first seen in `corpus` appended (words subject to
    /// `min_word_count`).
    pub fn extended(&self, corpus: &[Pair], min_word_count: usize) -> Vocabulary {
        let mut v = self.clone();
        v.absorb(count(corpus), min_word_count);
        v.frozen = true;
        v
    }

    pub fn encode(&self, sentence: &Sentence) -> EncodedSentence {
        let mut words = vec![ROOT];
        let mut pos = vec![ROOT];
        let mut chars = vec![vec![ROOT]];
        for tok in &sentence.tokens()[1..] {
            words.push(self.words.lookup(&tok.form));
            pos.push(self.pos.lookup(&tok.pos));
            let mut buf = [0u8; 4];
            chars.push(tok.chars.iter().map(|c| self.chars.lookup(c.encode_utf8(&mut buf))).collect());
        }
        EncodedSentence { words, pos, chars }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{DependencyTree, Sentence};

    fn corpus(words: &[&str]) -> Vec<Pair> {
        let s = Sentence::from_pairs(words.iter().map(|w| (*w, "X"))).unwrap();
        let heads = (0..words.len()).collect();
        let t = DependencyTree::new(heads, vec!["dep".into(); words.len()]);
        vec![(s, t)]
    }

    #[test]
    fn empty_corpus_has_only_reserved_symbols() {
        let v = build_vocabulary(&[], 2);
        assert_eq!(v.words.symbols(), &["<PAD>", "<UNK>", "<ROOT>"]);
        assert_eq!(v.chars.len(), 3);
        assert_eq!(v.pos.len(), 3);
        assert!(v.labels.is_empty());
    }

    #[test]
    fn rare_words_map_to_unk() {
        let v = build_vocabulary(&corpus(&["a", "a", "b"]), 2);
        assert_eq!(v.words.get("a"), Some(3));
        assert_eq!(v.words.lookup("b"), UNK);
        // characters are kept regardless of frequency
        assert!(v.chars.get("b").is_some());
    }

    #[test]
    fn deterministic_and_ordered() {
        let c = corpus(&["b", "c", "c", "a", "b", "c"]);
        let v1 = build_vocabulary(&c, 1);
        let v2 = build_vocabulary(&c, 1);
        assert_eq!(v1, v2);
        assert_eq!(&v1.words.symbols()[3..], &["c", "b", "a"]);
    }

    #[test]
    fn frozen_rejects_insertion() {
        let mut v = build_vocabulary(&[], 1);
        assert!(matches!(v.insert(Table::Words, "x"), Err(Error::FrozenVocabulary(_))));
    }

    #[test]
    fn extension_preserves_ids() {
        let v = build_vocabulary(&corpus(&["a", "b"]), 1);
        let e = v.extended(&corpus(&["c", "a"]), 1);
        assert_eq!(e.words.get("a"), v.words.get("a"));
        assert_eq!(e.words.get("b"), v.words.get("b"));
        assert_eq!(e.words.get("c"), Some(v.words.len()));
    }

    #[test]
    fn encode_puts_root_first() {
        let v = build_vocabulary(&corpus(&["ab", "ab"]), 1);
        let s = Sentence::from_pairs([("ab", "X"), ("zz", "Y")]).unwrap();
        let e = v.encode(&s);
        assert_eq!(e.words, vec![ROOT, 3, UNK]);
        assert_eq!(e.pos, vec![ROOT, 3, UNK]);
        assert_eq!(e.chars[0], vec![ROOT]);
        assert_eq!(e.chars[2], vec![UNK, UNK]);
    }
}
