use crate::error::{Error, Result};

pub const ROOT_FORM: &str = "<ROOT>";
pub const ROOT_POS: &str = "<ROOT>";

/// Raw CoNLL-X columns kept so that rewriting a file only touches HEAD and
/// DEPREL.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConllColumns {
    pub lemma: String,
    pub cpos: String,
    pub postag: String,
    pub feats: String,
    pub phead: String,
    pub pdeprel: String,
}

impl ConllColumns {
    fn for_pos(pos: &str) -> Self {
        ConllColumns {
            lemma: "_".into(),
            cpos: pos.into(),
            postag: pos.into(),
            feats: "_".into(),
            phead: "_".into(),
            pdeprel: "_".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub pos: String,
    pub chars: Vec<char>,
    pub columns: ConllColumns,
}

impl Token {
    pub fn new(form: impl Into<String>, pos: impl Into<String>) -> Self {
        let form = form.into();
        let pos = pos.into();
        Token {
            chars: form.chars().collect(),
            columns: ConllColumns::for_pos(&pos),
            form,
            pos,
        }
    }

    pub(crate) fn with_columns(form: String, pos: String, columns: ConllColumns) -> Self {
        Token {
            chars: form.chars().collect(),
            form,
            pos,
            columns,
        }
    }

    fn root() -> Self {
        Token::new(ROOT_FORM, ROOT_POS)
    }
}

/// A tokenized sentence. Position 0 holds the artificial ROOT token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence from its real tokens; ROOT is prepended.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Empty("sentence has no tokens".into()));
        }
        if let Some(i) = tokens.iter().position(|t| t.form.is_empty()) {
            return Err(Error::Empty(format!("token {} has an empty form", i + 1)));
        }
        let mut all = Vec::with_capacity(tokens.len() + 1);
        all.push(Token::root());
        all.extend(tokens);
        Ok(Sentence { tokens: all })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        Sentence::new(pairs.into_iter().map(|(f, p)| Token::new(f, p)).collect())
    }

    /// Number of real tokens (ROOT excluded).
    pub fn len(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All tokens including ROOT at index 0.
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &Token {
        &self.tokens[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RootPolicy {
    /// Exactly one token attaches to ROOT.
    #[default]
    Single,
    /// Any positive number of tokens may attach to ROOT.
    Multiple,
}

/// Head and label per real token. `heads[i - 1]` is the head of token `i`;
/// head 0 is ROOT.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyTree {
    heads: Vec<usize>,
    labels: Vec<String>,
}

impl DependencyTree {
    /// Unchecked constructor; see [`DependencyTree::validate`].
    pub fn new(heads: Vec<usize>, labels: Vec<String>) -> Self {
        assert_eq!(heads.len(), labels.len(), "one label per head");
        DependencyTree { heads, labels }
    }

    /// Builds and validates under `policy`.
    pub fn checked(heads: Vec<usize>, labels: Vec<String>, policy: RootPolicy) -> Result<Self> {
        if heads.len() != labels.len() {
            return Err(Error::IllFormedTree(format!(
                "{} heads but {} labels",
                heads.len(),
                labels.len()
            )));
        }
        let tree = DependencyTree { heads, labels };
        tree.validate(policy)?;
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Head of token `i` (1-based).
    pub fn head(&self, i: usize) -> usize {
        self.heads[i - 1]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i - 1]
    }

    /// Children of `h` in increasing position order.
    pub fn children(&self, h: usize) -> Vec<usize> {
        (1..=self.len()).filter(|&i| self.head(i) == h).collect()
    }

    /// Checks heads are in range, the head relation is acyclic and reaches
    /// ROOT from every token, and the root count matches `policy`.
    pub fn validate(&self, policy: RootPolicy) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::IllFormedTree("tree has no tokens".into()));
        }
        for (i, &h) in self.heads.iter().enumerate() {
            let i = i + 1;
            if h > n {
                return Err(Error::IllFormedTree(format!("head {h} of token {i} out of range 0..={n}")));
            }
            if h == i {
                return Err(Error::IllFormedTree(format!("token {i} is its own head")));
            }
        }
        // 0 = unvisited, 1 = on current path, 2 = reaches ROOT
        let mut mark = vec![0u8; n + 1];
        mark[0] = 2;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut cur = start;
            while mark[cur] == 0 {
                mark[cur] = 1;
                path.push(cur);
                cur = self.heads[cur - 1];
            }
            if mark[cur] == 1 {
                return Err(Error::IllFormedTree(format!("cycle through token {cur}")));
            }
            for p in path {
                mark[p] = 2;
            }
        }
        let roots = self.heads.iter().filter(|&&h| h == 0).count();
        if policy == RootPolicy::Single && roots != 1 {
            return Err(Error::IllFormedTree(format!("{roots} tokens attach to ROOT, expected exactly one")));
        }
        Ok(())
    }
}
