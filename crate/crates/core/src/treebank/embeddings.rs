use std::fs;
use std::path::Path;

use super::vocab::Vocabulary;
use crate::diffcore::{RngStream, Tensor};
use crate::error::{Error, Result};

/// Half-width of the uniform range used for words the file does not cover.
pub const FALLBACK_RANGE: f64 = 0.05;

/// Reads a whitespace-separated `token v1 … v_dim` file into a `|V| × dim`
/// word embedding matrix aligned with `vocab.words`.
pub fn load_pretrained_embeddings(path: &Path, vocab: &Vocabulary, dim: usize, rng: &mut RngStream) -> Result<Tensor> {
    let text = fs::read_to_string(path)?;
    parse_pretrained_embeddings(&text, vocab, dim, rng)
}

/// As [`load_pretrained_embeddings`], from file contents. A leading
/// `count dim` header line is skipped. The first vector fixes the file's
/// dimension: if it differs from `dim` that is a configuration error, and
/// any later line of a different width is a format error.
pub fn parse_pretrained_embeddings(text: &str, vocab: &Vocabulary, dim: usize, rng: &mut RngStream) -> Result<Tensor> {
    let rows = vocab.words.len();
    let mut values: Vec<f64> = (0..rows * dim)
        .map(|_| rng.uniform(-FALLBACK_RANGE, FALLBACK_RANGE))
        .collect();
    let mut file_dim: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if line_no == 1 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let floats = rest
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Format {
                line: line_no,
                message: "non-numeric embedding value".into(),
            })?;
        match file_dim {
            None => {
                if floats.len() != dim {
                    return Err(Error::Config(format!(
                        "embedding file has dimension {}, configured word dimension is {dim}",
                        floats.len()
                    )));
                }
                file_dim = Some(floats.len());
            }
            Some(d) if d != floats.len() => {
                return Err(Error::Format {
                    line: line_no,
                    message: format!("expected {d} values, found {}", floats.len()),
                });
            }
            Some(_) => {}
        }
        if let Some(id) = vocab.words.get(token) {
            values[id * dim..(id + 1) * dim].copy_from_slice(&floats);
        }
    }
    Tensor::new(vec![rows, dim], values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{build_vocabulary, DependencyTree, Sentence};

    fn vocab() -> Vocabulary {
        let s = Sentence::from_pairs([("cat", "N"), ("dog", "N"), ("eel", "N")]).unwrap();
        let t = DependencyTree::new(vec![0, 1, 1], vec!["x".into(); 3]);
        build_vocabulary(&[(s, t)], 1)
    }

    #[test]
    fn rows_copied_from_file() {
        let v = vocab();
        let text = "cat 0.1 0.2 0.3\ndog -1 -2 -3\nzebra 9 9 9\n";
        let m = parse_pretrained_embeddings(text, &v, 3, &mut RngStream::new(0)).unwrap();
        assert_eq!(m.row(v.words.get("cat").unwrap()), &[0.1, 0.2, 0.3]);
        assert_eq!(m.row(v.words.get("dog").unwrap()), &[-1.0, -2.0, -3.0]);
        let eel = m.row(v.words.get("eel").unwrap());
        assert!(eel.iter().all(|x| x.abs() <= FALLBACK_RANGE));
    }

    #[test]
    fn header_line_skipped() {
        let v = vocab();
        let m = parse_pretrained_embeddings("2 3\ncat 1 2 3\n", &v, 3, &mut RngStream::new(0)).unwrap();
        assert_eq!(m.row(v.words.get("cat").unwrap()), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn dimension_errors() {
        let v = vocab();
        assert!(matches!(
            parse_pretrained_embeddings("cat 1 2\n", &v, 3, &mut RngStream::new(0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse_pretrained_embeddings("cat 1 2 3\ndog 1 2\n", &v, 3, &mut RngStream::new(0)),
            Err(Error::Format { line: 2, .. })
        ));
    }
}
