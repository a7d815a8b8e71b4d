//! CoNLL-X reading and writing.
//!
//! Ten tab-separated columns per token:
//! `ID FORM LEMMA CPOSTAG POSTAG FEATS HEAD DEPREL PHEAD PDEPREL`.
//! Sentences are separated by blank lines; lines starting with `#` are
//! comments. The POS used by the parser is CPOSTAG, or POSTAG when CPOSTAG
//! is `_`.

use std::fmt::Write as _;

use super::sentence::{ConllColumns, DependencyTree, RootPolicy, Sentence, Token};
use crate::error::{Error, Result};

pub type Pair = (Sentence, DependencyTree);

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    pub root_policy: RootPolicy,
}

pub fn parse_conll(text: &str) -> Result<Vec<Pair>> {
    parse_conll_with(text, ReadOptions::default())
}

struct Row {
    line: usize,
    token: Token,
    head: String,
    label: String,
}

pub fn parse_conll_with(text: &str, options: ReadOptions) -> Result<Vec<Pair>> {
    blocks(text)?.into_iter().map(|b| finish_block(b, options)).collect()
}

/// Sentences only; HEAD and DEPREL are not interpreted and may be `_`.
pub fn parse_conll_sentences(text: &str) -> Result<Vec<Sentence>> {
    blocks(text)?
        .into_iter()
        .map(|b| Sentence::new(b.into_iter().map(|r| r.token).collect()))
        .collect()
}

fn blocks(text: &str) -> Result<Vec<Vec<Row>>> {
    let mut out = Vec::new();
    let mut block: Vec<Row> = Vec::new();
    let mut line_no = 0;
    for raw in text.split('\n') {
        line_no += 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !block.is_empty() {
                out.push(std::mem::take(&mut block));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        block.push(parse_row(line, line_no, block.len() + 1)?);
    }
    if !block.is_empty() {
        out.push(block);
    }
    Ok(out)
}

fn parse_row(line: &str, line_no: usize, expected_id: usize) -> Result<Row> {
    let err = |message: String| Error::Format { line: line_no, message };
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(err(format!("expected 10 tab-separated columns, found {}", cols.len())));
    }
    let id: usize = cols[0]
        .parse()
        .map_err(|_| err(format!("non-integer ID {:?}", cols[0])))?;
    if id != expected_id {
        return Err(err(format!("ID {id} out of sequence, expected {expected_id}")));
    }
    if cols[1].is_empty() {
        return Err(err("empty FORM".into()));
    }
    let pos = if cols[3] == "_" { cols[4] } else { cols[3] };
    let columns = ConllColumns {
        lemma: cols[2].into(),
        cpos: cols[3].into(),
        postag: cols[4].into(),
        feats: cols[5].into(),
        phead: cols[8].into(),
        pdeprel: cols[9].into(),
    };
    Ok(Row {
        line: line_no,
        token: Token::with_columns(cols[1].into(), pos.into(), columns),
        head: cols[6].into(),
        label: cols[7].into(),
    })
}

fn finish_block(rows: Vec<Row>, options: ReadOptions) -> Result<Pair> {
    let n = rows.len();
    let first_line = rows[0].line;
    let mut heads = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut tokens = Vec::with_capacity(n);
    for row in rows {
        let head: usize = row.head.parse().map_err(|_| Error::Format {
            line: row.line,
            message: format!("non-integer HEAD {:?}", row.head),
        })?;
        if head > n {
            return Err(Error::Format {
                line: row.line,
                message: format!("HEAD {head} out of range 0..={n}"),
            });
        }
        heads.push(head);
        labels.push(row.label);
        tokens.push(row.token);
    }
    let tree = DependencyTree::checked(heads, labels, options.root_policy).map_err(|e| Error::Format {
        line: first_line,
        message: e.to_string(),
    })?;
    Ok((Sentence::new(tokens)?, tree))
}

pub fn write_conll(pairs: &[Pair]) -> Result<String> {
    let mut out = String::new();
    for (sentence, tree) in pairs {
        if sentence.len() != tree.len() {
            return Err(Error::IllFormedTree(format!(
                "tree has {} tokens, sentence has {}",
                tree.len(),
                sentence.len()
            )));
        }
        tree.validate(RootPolicy::Multiple)?;
        for i in 1..=sentence.len() {
            let tok = sentence.token(i);
            let c = &tok.columns;
            let fields = [
                tok.form.as_str(),
                &c.lemma,
                &c.cpos,
                &c.postag,
                &c.feats,
                tree.label(i),
                &c.phead,
                &c.pdeprel,
            ];
            if let Some(bad) = fields.iter().find(|f| f.is_empty() || f.contains(['\t', '\n', '\r'])) {
                return Err(Error::Format {
                    line: i,
                    message: format!("field {bad:?} cannot be written as a CoNLL column"),
                });
            }
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i,
                tok.form,
                c.lemma,
                c.cpos,
                c.postag,
                c.feats,
                tree.head(i),
                tree.label(i),
                c.phead,
                c.pdeprel
            )
            .unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "1\t猫\t_\tNN\tNN\t_\t2\tnsubj\t_\t_\n2\t睡\t_\tVV\tVV\t_\t0\troot\t_\t_\n";

    #[test]
    fn empty_input() {
        assert!(parse_conll("").unwrap().is_empty());
        assert_eq!(write_conll(&[]).unwrap(), "");
    }

    #[test]
    fn two_token_fixture() {
        let pairs = parse_conll(FIXTURE).unwrap();
        assert_eq!(pairs.len(), 1);
        let (s, t) = &pairs[0];
        assert_eq!(s.len(), 2);
        assert_eq!(t.heads(), &[2, 0]);
        assert_eq!(t.labels(), &["nsubj".to_string(), "root".to_string()]);
        assert_eq!(s.token(1).pos, "NN");
        let again = parse_conll(&write_conll(&pairs).unwrap()).unwrap();
        assert_eq!(again, pairs);
    }

    #[test]
    fn crlf_and_comments_tolerated() {
        let text = format!("# sent_id = 1\r\n{}\r\n\r\n", FIXTURE.replace('\n', "\r\n"));
        let pairs = parse_conll(&text).unwrap();
        assert_eq!(pairs[0].1.heads(), &[2, 0]);
        assert_eq!(pairs[0].0.token(2).columns.pdeprel, "_");
    }

    #[test]
    fn pos_falls_back_to_fine_column() {
        let text = "1\ta\t_\t_\tDT\t_\t0\troot\t_\t_\n";
        let pairs = parse_conll(text).unwrap();
        assert_eq!(pairs[0].0.token(1).pos, "DT");
    }

    #[test]
    fn errors_name_the_line() {
        let bad_head = "1\ta\t_\tN\tN\t_\t0\troot\t_\t_\n2\tb\t_\tN\tN\t_\tx\tdep\t_\t_\n";
        match parse_conll(bad_head) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let out_of_range = "1\ta\t_\tN\tN\t_\t5\troot\t_\t_\n";
        assert!(matches!(parse_conll(out_of_range), Err(Error::Format { line: 1, .. })));
        let skipped_id = "1\ta\t_\tN\tN\t_\t0\troot\t_\t_\n3\tb\t_\tN\tN\t_\t1\tdep\t_\t_\n";
        assert!(matches!(parse_conll(skipped_id), Err(Error::Format { line: 2, .. })));
        let short = "1\ta\t_\tN\tN\t_\t0\troot\n";
        assert!(matches!(parse_conll(short), Err(Error::Format { line: 1, .. })));
        let cyclic = "1\ta\t_\tN\tN\t_\t2\tx\t_\t_\n2\tb\t_\tN\tN\t_\t1\tx\t_\t_\n";
        assert!(matches!(parse_conll(cyclic), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn multiple_roots_need_opt_in() {
        let text = "1\ta\t_\tN\tN\t_\t0\troot\t_\t_\n2\tb\t_\tN\tN\t_\t0\troot\t_\t_\n";
        assert!(parse_conll(text).is_err());
        let opts = ReadOptions {
            root_policy: RootPolicy::Multiple,
        };
        assert_eq!(parse_conll_with(text, opts).unwrap().len(), 1);
    }

    #[test]
    fn cyclic_tree_not_written() {
        let s = Sentence::from_pairs([("a", "N"), ("b", "N")]).unwrap();
        let t = DependencyTree::new(vec![2, 1], vec!["x".into(), "y".into()]);
        assert!(matches!(write_conll(&[(s, t)]), Err(Error::IllFormedTree(_))));
    }

    #[test]
    fn sentences_ignore_tree_columns() {
        let text = "1\ta\t_\tN\t_\t_\t_\t_\t_\t_\n2\tb\t_\tV\t_\t_\t_\t_\t_\t_\n";
        let s = parse_conll_sentences(text).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].len(), 2);
        assert!(parse_conll(text).is_err());
    }
}
