//! Synthetic treebanks from a small phrase grammar.
//!
//! Sentences follow `NP VERB NP [PP] [ADV] .` with optional adjectives and
//! noun-attached prepositional phrases. Prepositions share one POS tag; each
//! preposition word decides whether its phrase attaches to the verb (`obl`)
//! or to the preceding noun (`nmod`), so attachment depends on the word.

use crate::diffcore::RngStream;
use crate::error::Result;
use crate::treebank::{parse_conll, DependencyTree, Pair, Sentence, Token};

const TOY: &str = include_str!("../data/toy.conll");

/// The bundled 50-sentence treebank.
pub fn toy_treebank() -> Vec<Pair> {
    parse_conll(TOY).expect("bundled toy treebank is well formed")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attach {
    Verb,
    Noun,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pub nouns: Vec<String>,
    pub verbs: Vec<String>,
    pub adjectives: Vec<String>,
    pub adverbs: Vec<String>,
    pub determiners: Vec<String>,
    pub prepositions: Vec<(String, Attach)>,
}

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

fn word(rng: &mut RngStream, syllables: usize, suffix: &str) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.below(ONSETS.len())]);
        w.push_str(NUCLEI[rng.below(NUCLEI.len())]);
    }
    w.push_str(suffix);
    w
}

fn words(rng: &mut RngStream, count: usize, syllables: usize, suffix: &str, taken: &mut Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = word(rng, syllables, suffix);
        if !taken.contains(&w) {
            taken.push(w.clone());
            out.push(w);
        }
    }
    out
}

/// `size` sets the number of nouns; other classes scale from it.
fn lexicon_from(rng: &mut RngStream, size: usize, taken: &mut Vec<String>) -> Lexicon {
    let preps = words(rng, (size / 4).max(2), 1, "", taken);
    Lexicon {
        nouns: words(rng, size, 2, "", taken),
        verbs: words(rng, (size / 2).max(2), 2, "r", taken),
        adjectives: words(rng, (size / 3).max(2), 2, "l", taken),
        adverbs: words(rng, (size / 4).max(2), 2, "ly", taken),
        determiners: words(rng, 3, 1, "", taken),
        prepositions: preps
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p, if i % 2 == 0 { Attach::Verb } else { Attach::Noun }))
            .collect(),
    }
}

pub fn lexicon(size: usize, seed: u64) -> Lexicon {
    let mut rng = RngStream::new(seed).split_named("lexicon");
    lexicon_from(&mut rng, size, &mut Vec::new())
}

fn mix<T: Clone>(shared: &[T], fresh: &[T], overlap: f64, rng: &mut RngStream) -> Vec<T> {
    let keep = (shared.len() as f64 * overlap).round() as usize;
    let mut idx: Vec<usize> = (0..shared.len()).collect();
    rng.shuffle(&mut idx);
    let mut idx: Vec<usize> = idx.into_iter().take(keep).collect();
    idx.sort_unstable();
    let mut out: Vec<T> = idx.into_iter().map(|i| shared[i].clone()).collect();
    out.extend(fresh.iter().take(shared.len() - keep).cloned());
    out
}

/// Source and target lexicons of equal size where a fraction `overlap` of
/// every target word class (determiners included) also occurs in the source.
pub fn domain_pair(size: usize, overlap: f64, seed: u64) -> (Lexicon, Lexicon) {
    let root = RngStream::new(seed);
    let mut taken = Vec::new();
    let source = lexicon_from(&mut root.split_named("source"), size, &mut taken);
    let fresh = lexicon_from(&mut root.split_named("target"), size, &mut taken);
    let mut rng = root.split_named("mix");
    let target = Lexicon {
        nouns: mix(&source.nouns, &fresh.nouns, overlap, &mut rng),
        verbs: mix(&source.verbs, &fresh.verbs, overlap, &mut rng),
        adjectives: mix(&source.adjectives, &fresh.adjectives, overlap, &mut rng),
        adverbs: mix(&source.adverbs, &fresh.adverbs, overlap, &mut rng),
        determiners: mix(&source.determiners, &fresh.determiners, overlap, &mut rng),
        prepositions: mix(&source.prepositions, &fresh.prepositions, overlap, &mut rng),
    };
    (source, target)
}

struct Builder {
    forms: Vec<(String, &'static str)>,
    heads: Vec<usize>,
    labels: Vec<&'static str>,
}

impl Builder {
    fn push(&mut self, form: &str, pos: &'static str, head: usize, label: &'static str) -> usize {
        self.forms.push((form.to_string(), pos));
        self.heads.push(head);
        self.labels.push(label);
        self.forms.len()
    }

    fn set_head(&mut self, word: usize, head: usize, label: &'static str) {
        self.heads[word - 1] = head;
        self.labels[word - 1] = label;
    }
}

fn pick<'a, T>(items: &'a [T], rng: &mut RngStream) -> &'a T {
    &items[rng.below(items.len())]
}

/// Noun phrase with a placeholder head for its noun; returns the noun index.
fn noun_phrase(b: &mut Builder, lex: &Lexicon, rng: &mut RngStream, adj_prob: f64) -> usize {
    let start = b.forms.len() + 1;
    let det = b.push(pick(&lex.determiners, rng), "DET", 0, "det");
    let mut adjs = Vec::new();
    while adjs.len() < 2 && rng.unit() < adj_prob {
        adjs.push(b.push(pick(&lex.adjectives, rng), "ADJ", 0, "amod"));
    }
    let noun = b.push(pick(&lex.nouns, rng), "NOUN", 0, "_");
    debug_assert_eq!(det, start);
    b.set_head(det, noun, "det");
    for a in adjs {
        b.set_head(a, noun, "amod");
    }
    noun
}

/// One sentence; heads are resolved once the verb position is known.
pub fn sentence(lex: &Lexicon, rng: &mut RngStream) -> Pair {
    let mut b = Builder {
        forms: Vec::new(),
        heads: Vec::new(),
        labels: Vec::new(),
    };
    let subj = noun_phrase(&mut b, lex, rng, 0.4);
    let verb = b.push(pick(&lex.verbs, rng), "VERB", 0, "root");
    b.set_head(subj, verb, "nsubj");
    let obj = noun_phrase(&mut b, lex, rng, 0.3);
    b.set_head(obj, verb, "obj");
    let mut last_noun = obj;
    let mut pps = 0;
    while pps < 2 && rng.unit() < 0.6 {
        let (prep, attach) = pick(&lex.prepositions, rng).clone();
        let p = b.push(&prep, "ADP", 0, "case");
        let noun = noun_phrase(&mut b, lex, rng, 0.2);
        b.set_head(p, noun, "case");
        match attach {
            Attach::Verb => b.set_head(noun, verb, "obl"),
            Attach::Noun => b.set_head(noun, last_noun, "nmod"),
        }
        last_noun = noun;
        pps += 1;
    }
    if rng.unit() < 0.3 {
        b.push(pick(&lex.adverbs, rng), "ADV", verb, "advmod");
    }
    b.push(".", "PUNCT", verb, "punct");

    let tokens: Vec<Token> = b.forms.iter().map(|(f, p)| Token::new(f.clone(), *p)).collect();
    let sentence = Sentence::new(tokens).expect("generated sentence is nonempty");
    let tree = DependencyTree::new(b.heads, b.labels.iter().map(|l| l.to_string()).collect());
    (sentence, tree)
}

pub fn generate(lex: &Lexicon, count: usize, seed: u64) -> Vec<Pair> {
    let root = RngStream::new(seed).split_named("sentences");
    (0..count)
        .map(|i| sentence(lex, &mut root.split(i as u64)))
        .collect()
}

/// Generator behind the bundled toy treebank.
pub fn toy_generate() -> Result<Vec<Pair>> {
    Ok(generate(&lexicon(12, 7), 50, 7))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{write_conll, RootPolicy};

    #[test]
    fn generated_trees_are_valid() {
        let lex = lexicon(20, 3);
        for (s, t) in generate(&lex, 200, 3) {
            assert_eq!(s.len(), t.len());
            t.validate(RootPolicy::Single).unwrap();
        }
    }

    #[test]
    fn bundled_toy_matches_generator() {
        let bundled = toy_treebank();
        assert_eq!(bundled.len(), 50);
        assert_eq!(write_conll(&bundled).unwrap(), write_conll(&toy_generate().unwrap()).unwrap());
    }

    #[test]
    fn domain_overlap_fraction() {
        let (s, t) = domain_pair(20, 0.6, 11);
        let shared = t.nouns.iter().filter(|w| s.nouns.contains(w)).count();
        assert_eq!(shared, 12);
        assert_eq!(t.nouns.len(), 20);
        let shared_verbs = t.verbs.iter().filter(|w| s.verbs.contains(w)).count();
        assert_eq!(shared_verbs, 6);
    }
}
