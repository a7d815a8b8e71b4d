//! Attachment scores and cross-domain averaging.

use std::fmt;

use crate::error::{Error, Result};
use crate::treebank::{DependencyTree, Pair};

/// Raw attachment counts over a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AttachmentCounts {
    pub tokens: usize,
    pub correct_heads: usize,
    pub correct_labeled: usize,
}

impl AttachmentCounts {
    pub fn uas(&self) -> f64 {
        percent(self.correct_heads, self.tokens)
    }

    pub fn las(&self) -> f64 {
        percent(self.correct_labeled, self.tokens)
    }

    pub fn merge(&mut self, other: AttachmentCounts) {
        self.tokens += other.tokens;
        self.correct_heads += other.correct_heads;
        self.correct_labeled += other.correct_labeled;
    }
}

fn percent(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

/// Counts over aligned trees. `keep(i, j)` decides whether word `j` (1-based)
/// of sentence `i` is scored.
pub fn attachment_counts_where(
    gold: &[DependencyTree],
    predicted: &[DependencyTree],
    keep: impl Fn(usize, usize) -> bool,
) -> Result<AttachmentCounts> {
    if gold.len() != predicted.len() {
        return Err(Error::Alignment {
            index: gold.len().min(predicted.len()),
            message: format!("{} gold sentences, {} predicted", gold.len(), predicted.len()),
        });
    }
    let mut c = AttachmentCounts::default();
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Alignment {
                index: i,
                message: format!("gold has {} tokens, prediction has {}", g.len(), p.len()),
            });
        }
        for j in 1..=g.len() {
            if !keep(i, j) {
                continue;
            }
            c.tokens += 1;
            if g.head(j) == p.head(j) {
                c.correct_heads += 1;
                if g.label(j) == p.label(j) {
                    c.correct_labeled += 1;
                }
            }
        }
    }
    Ok(c)
}

/// `(UAS %, LAS %)` over every non-ROOT token.
pub fn attachment_scores(gold: &[DependencyTree], predicted: &[DependencyTree]) -> Result<(f64, f64)> {
    let c = attachment_counts_where(gold, predicted, |_, _| true)?;
    Ok((c.uas(), c.las()))
}

/// Counts against gold pairs, skipping tokens whose POS is in `exclude_pos`.
pub fn score_corpus(gold: &[Pair], predicted: &[DependencyTree], exclude_pos: &[String]) -> Result<AttachmentCounts> {
    let trees: Vec<DependencyTree> = gold.iter().map(|(_, t)| t.clone()).collect();
    attachment_counts_where(&trees, predicted, |i, j| {
        !exclude_pos.iter().any(|p| *p == gold[i].0.token(j).pos)
    })
}

/// Unweighted mean, rounded half-up to one decimal.
pub fn average_domains(las_by_domain: &[f64]) -> Result<f64> {
    if las_by_domain.is_empty() {
        return Err(Error::Empty("no domains to average".into()));
    }
    let mean = las_by_domain.iter().sum::<f64>() / las_by_domain.len() as f64;
    Ok(round1(mean))
}

/// Half-up rounding to one decimal. The small offset absorbs binary
/// representation error such as `71.85 = 71.8499…`.
pub fn round1(x: f64) -> f64 {
    (x * 10.0 + 0.5 + 1e-9).floor() / 10.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainReport {
    pub name: String,
    pub counts: AttachmentCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub domains: Vec<DomainReport>,
}

impl EvalReport {
    pub fn average_las(&self) -> Result<f64> {
        let las: Vec<f64> = self.domains.iter().map(|d| d.counts.las()).collect();
        average_domains(&las)
    }

    /// Machine-readable block: one `key=value` line per field.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        for d in &self.domains {
            out.push_str(&format!(
                "domain={} tokens={} correct_heads={} correct_labeled={} UAS={:.1} LAS={:.1}\n",
                d.name,
                d.counts.tokens,
                d.counts.correct_heads,
                d.counts.correct_labeled,
                round1(d.counts.uas()),
                round1(d.counts.las())
            ));
        }
        if let Ok(avg) = self.average_las() {
            out.push_str(&format!("average_LAS={avg:.1}\n"));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.domains.iter().map(|d| d.name.chars().count()).max().unwrap_or(0).max(7);
        writeln!(f, "{:<width$}  {:>7}  {:>6}  {:>6}", "domain", "tokens", "UAS", "LAS")?;
        for d in &self.domains {
            writeln!(
                f,
                "{:<width$}  {:>7}  {:>6.1}  {:>6.1}",
                d.name,
                d.counts.tokens,
                round1(d.counts.uas()),
                round1(d.counts.las())
            )?;
        }
        if let Ok(avg) = self.average_las() {
            writeln!(f, "{:<width$}  {:>7}  {:>6}  {:>6.1}", "average", "", "", avg)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(heads: &[usize], labels: &[&str]) -> DependencyTree {
        DependencyTree::new(heads.to_vec(), labels.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn identical_trees_score_full() {
        let g = vec![tree(&[2, 0, 2], &["a", "root", "b"])];
        assert_eq!(attachment_scores(&g, &g).unwrap(), (100.0, 100.0));
    }

    #[test]
    fn half_correct() {
        let g = vec![tree(&[2, 0, 2, 3], &["a", "r", "b", "c"])];
        let p = vec![tree(&[2, 0, 1, 1], &["a", "r", "b", "c"])];
        assert_eq!(attachment_scores(&g, &p).unwrap(), (50.0, 50.0));
    }

    #[test]
    fn heads_right_labels_wrong() {
        let g = vec![tree(&[0, 1], &["a", "b"])];
        let p = vec![tree(&[0, 1], &["x", "y"])];
        assert_eq!(attachment_scores(&g, &p).unwrap(), (100.0, 0.0));
    }

    #[test]
    fn length_mismatch_names_sentence() {
        let g = vec![tree(&[0], &["a"]), tree(&[0, 1], &["a", "b"])];
        let p = vec![tree(&[0], &["a"]), tree(&[0], &["a"])];
        match attachment_scores(&g, &p) {
            Err(Error::Alignment { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_average_rounds_half_up() {
        assert_eq!(average_domains(&[62.6, 76.9, 76.3]).unwrap(), 71.9);
        assert_eq!(average_domains(&[61.1, 74.8, 74.6]).unwrap(), 70.2);
        assert_eq!(average_domains(&[55.55]).unwrap(), 55.6);
        assert_eq!(average_domains(&[42.0]).unwrap(), 42.0);
        assert!(average_domains(&[]).is_err());
    }

    #[test]
    fn exclusion_by_pos() {
        let text = "1\ta\t_\tN\tN\t_\t0\troot\t_\t_\n2\t.\t_\tP\tP\t_\t1\tpunct\t_\t_\n\n";
        let gold = crate::treebank::parse_conll(text).unwrap();
        let pred = vec![tree(&[0, 0], &["root", "punct"])];
        let all = score_corpus(&gold, &pred, &[]).unwrap();
        assert_eq!(all.uas(), 50.0);
        let some = score_corpus(&gold, &pred, &["P".to_string()]).unwrap();
        assert_eq!((some.tokens, some.uas()), (1, 100.0));
    }

    #[test]
    fn report_formats() {
        let r = EvalReport {
            domains: vec![DomainReport {
                name: "toy".into(),
                counts: AttachmentCounts {
                    tokens: 4,
                    correct_heads: 3,
                    correct_labeled: 2,
                },
            }],
        };
        let kv = r.key_values();
        assert!(kv.contains("domain=toy tokens=4 correct_heads=3 correct_labeled=2 UAS=75.0 LAS=50.0"));
        assert!(kv.contains("average_LAS=50.0"));
        assert!(r.to_string().contains("average"));
    }
}
