//! UCI bag-of-words `docword` files: three header lines (`D`, `W`, `NNZ`)
//! followed by `docID wordID count` triplets, 1-based.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{lambda_max, normalize_columns, Problem};

/// Sparse word counts, kept as parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct BowCorpus {
    pub docs: usize,
    pub words: usize,
    /// `(doc, word, count)`, zero-based.
    pub entries: Vec<(usize, usize, f64)>,
}

/// How many words (rows) and documents (columns) to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BowSubset {
    pub words: usize,
    pub docs: usize,
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| malformed(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| malformed(line, format!("{what} `{tok}` is not a number")))
}

pub fn parse_bow(reader: impl BufRead) -> Result<BowCorpus> {
    let mut header = [0usize; 3];
    let mut entries = Vec::new();
    let mut seen = 0;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| malformed(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if seen < 3 {
            header[seen] = parse_field(Some(line), lineno, "header count")?;
            seen += 1;
            continue;
        }
        let mut it = line.split_whitespace();
        let doc: usize = parse_field(it.next(), lineno, "docID")?;
        let word: usize = parse_field(it.next(), lineno, "wordID")?;
        let count: f64 = parse_field(it.next(), lineno, "count")?;
        if it.next().is_some() {
            return Err(malformed(lineno, "more than three fields"));
        }
        if doc == 0 || doc > header[0] {
            return Err(Error::IndexOutOfRange {
                line: lineno,
                reason: format!("docID {doc} outside 1..={}", header[0]),
            });
        }
        if word == 0 || word > header[1] {
            return Err(Error::IndexOutOfRange {
                line: lineno,
                reason: format!("wordID {word} outside 1..={}", header[1]),
            });
        }
        if !(count >= 0.0) || !count.is_finite() {
            return Err(malformed(lineno, format!("bad count {count}")));
        }
        entries.push((doc - 1, word - 1, count));
    }
    if seen < 3 {
        return Err(Error::TruncatedFile("bag-of-words header".into()));
    }
    if entries.len() < header[2] {
        return Err(Error::TruncatedFile(format!(
            "{} triplets, header promises {}",
            entries.len(),
            header[2]
        )));
    }
    Ok(BowCorpus {
        docs: header[0],
        words: header[1],
        entries,
    })
}

impl BowCorpus {
    /// Dense `words × docs` count matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.words, self.docs);
        for &(d, w, c) in &self.entries {
            m[(w, d)] += c;
        }
        m
    }

    /// Draws `subset.words` rows at random, then `subset.docs + 1` documents
    /// with a nonzero count on those rows. The first document drawn becomes
    /// the response; the rest, in document order, become the columns. Both
    /// are scaled to unit norm, and `λ` is set to `λ_max`.
    pub fn to_problem(&self, subset: BowSubset, seed: u64) -> Result<Problem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_words = subset.words.min(self.words);
        if n_words == 0 || subset.docs == 0 {
            return Err(Error::InvalidProblem("empty bag-of-words subset".into()));
        }
        let mut words = sample(&mut rng, self.words, n_words).into_vec();
        words.sort_unstable();
        let mut row_of = vec![usize::MAX; self.words];
        for (r, &w) in words.iter().enumerate() {
            row_of[w] = r;
        }
        let mut per_doc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.docs];
        for &(d, w, c) in &self.entries {
            if row_of[w] != usize::MAX && c > 0.0 {
                per_doc[d].push((row_of[w], c));
            }
        }
        let mut candidates: Vec<usize> =
            (0..self.docs).filter(|&d| !per_doc[d].is_empty()).collect();
        if candidates.len() < 2 {
            return Err(Error::InvalidProblem(
                "fewer than two documents use the drawn words".into(),
            ));
        }
        candidates.shuffle(&mut rng);
        let held_out = candidates[0];
        let mut cols: Vec<usize> = candidates[1..].iter().copied().take(subset.docs).collect();
        cols.sort_unstable();

        let column = |d: usize| {
            let mut v = DVector::zeros(n_words);
            for &(r, c) in &per_doc[d] {
                v[r] += c;
            }
            v
        };
        let mut raw = DMatrix::zeros(n_words, cols.len());
        for (k, &d) in cols.iter().enumerate() {
            raw.set_column(k, &column(d));
        }
        let (dict, _) = normalize_columns(&raw)?;
        let y = column(held_out);
        let y = &y / y.norm();
        let p = Problem::new(dict, y, 1.0)?;
        let lam = lambda_max(&p);
        if lam > 0.0 {
            p.with_noise_level(lam)
        } else {
            Ok(p)
        }
    }
}

pub fn load_bow(path: impl AsRef<Path>, subset: BowSubset, seed: u64) -> Result<Problem> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_bow(BufReader::new(f))?.to_problem(subset, seed)
}
