//! Word-embedding spaces in the word2vec/fastText text format.
//!
//! A `.vec` file starts with a `<count> <dim>` header followed by one
//! `word v1 ... v_dim` line per word. Gzip-compressed files (`.gz`) are read
//! transparently.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::io::{open_text, write_atomic};
use crate::norms::{NormLexicon, Variable};
use crate::{Error, Result};

/// Vocabulary plus one embedding row per word.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    pub lang: String,
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Array2<f64>,
    lowercase: bool,
}

impl EmbeddingSpace {
    /// Builds a space from words and a matching row matrix. When `lowercase`
    /// is set, words are case-folded and so are lookup queries.
    pub fn new(
        lang: impl Into<String>,
        words: Vec<String>,
        matrix: Array2<f64>,
        lowercase: bool,
    ) -> Result<Self> {
        if words.len() != matrix.nrows() {
            return Err(Error::invalid(format!(
                "{} words but {} matrix rows",
                words.len(),
                matrix.nrows()
            )));
        }
        if matrix.ncols() == 0 {
            return Err(Error::invalid("embedding dimensionality must be positive"));
        }
        let words: Vec<String> = if lowercase {
            words.into_iter().map(|w| w.to_lowercase()).collect()
        } else {
            words
        };
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary word '{w}'")));
            }
        }
        Ok(EmbeddingSpace {
            lang: lang.into(),
            words,
            index,
            matrix,
            lowercase,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    /// Row index of `word`, applying the space's case-folding policy.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        if self.lowercase {
            self.index.get(&word.to_lowercase()).copied()
        } else {
            self.index.get(word).copied()
        }
    }

    pub fn get(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.index_of(word).map(|i| self.matrix.row(i))
    }

    /// Same vocabulary, new vectors.
    pub fn with_matrix(&self, matrix: Array2<f64>) -> Result<EmbeddingSpace> {
        if matrix.nrows() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: matrix.nrows(),
            });
        }
        Ok(EmbeddingSpace {
            lang: self.lang.clone(),
            words: self.words.clone(),
            index: self.index.clone(),
            matrix,
            lowercase: self.lowercase,
        })
    }

    pub fn save_vec(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write_vec(w))
    }

    pub fn write_vec(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim())?;
        for (word, row) in self.words.iter().zip(self.matrix.rows()) {
            write!(w, "{word}")?;
            for x in row {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct VecOptions {
    /// Language code; inferred from the file name (`wiki.hr.vec` → `hr`) when absent.
    pub lang: Option<String>,
    pub max_words: Option<usize>,
    pub lowercase: bool,
}

impl Default for VecOptions {
    fn default() -> Self {
        VecOptions {
            lang: None,
            max_words: None,
            lowercase: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParsedSpace {
    pub space: EmbeddingSpace,
    /// Rows with the wrong arity or a non-numeric component.
    pub malformed: usize,
    /// Rows whose (case-folded) word had already been seen.
    pub duplicates: usize,
}

/// Guesses a language code from a path such as `wiki.hr.vec.gz`.
pub fn lang_from_path(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let name = name.strip_suffix(".gz").unwrap_or(name);
    let name = name.strip_suffix(".vec").or_else(|| name.strip_suffix(".txt")).unwrap_or(name);
    name.rsplit('.').next().unwrap_or(name).to_string()
}

pub fn parse_vec_file(path: &Path, opts: &VecOptions) -> Result<ParsedSpace> {
    let reader = open_text(path)?;
    parse_vec(reader, path, opts)
}

/// Parses the text vector format from any reader; `path` is used for
/// diagnostics and language inference only.
pub fn parse_vec<R: BufRead>(reader: R, path: &Path, opts: &VecOptions) -> Result<ParsedSpace> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::format(path, "empty file, expected '<count> <dim>' header")),
    };
    let mut fields = header.split_whitespace().map(str::parse::<usize>);
    let (count, dim) = match (fields.next(), fields.next(), fields.next()) {
        (Some(Ok(c)), Some(Ok(d)), None) if d > 0 => (c, d),
        _ => {
            return Err(Error::format(
                path,
                format!("malformed header '{}', expected '<count> <dim>'", header.trim()),
            ))
        }
    };
    let limit = opts.max_words.map_or(count, |m| m.min(count));

    let mut words = Vec::with_capacity(limit);
    let mut data = Vec::with_capacity(limit * dim);
    let mut seen: HashMap<String, ()> = HashMap::with_capacity(limit);
    let mut malformed = 0;
    let mut duplicates = 0;
    for (lineno, line) in lines.enumerate() {
        if words.len() >= limit {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\n', '\r', ' ']);
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split(' ').filter(|t| !t.is_empty());
        let Some(word) = tokens.next() else { continue };
        let row: std::result::Result<Vec<f64>, _> = tokens.map(str::parse::<f64>).collect();
        let row = match row {
            Ok(r) if r.len() == dim && r.iter().all(|x| x.is_finite()) => r,
            _ => {
                log::debug!("{}:{}: malformed vector row skipped", path.display(), lineno + 2);
                malformed += 1;
                continue;
            }
        };
        let word = if opts.lowercase {
            word.to_lowercase()
        } else {
            word.to_string()
        };
        if seen.insert(word.clone(), ()).is_some() {
            duplicates += 1;
            continue;
        }
        words.push(word);
        data.extend(row);
    }
    if malformed > 0 {
        log::warn!("{}: skipped {malformed} malformed rows", path.display());
    }
    if duplicates > 0 {
        log::warn!("{}: skipped {duplicates} duplicate words (first occurrence kept)", path.display());
    }
    if words.is_empty() {
        return Err(Error::format(path, "no parsable vector rows"));
    }
    let matrix = Array2::from_shape_vec((words.len(), dim), data)
        .expect("row lengths checked against dim");
    let lang = opts.lang.clone().unwrap_or_else(|| lang_from_path(path));
    Ok(ParsedSpace {
        space: EmbeddingSpace::new(lang, words, matrix, opts.lowercase)?,
        malformed,
        duplicates,
    })
}

/// Per-dimension centering and scaling with population statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub means: Array1<f64>,
    /// Population standard deviations; zero entries are stored as 1.
    pub stds: Array1<f64>,
}

impl Standardizer {
    pub fn fit(space: &EmbeddingSpace) -> Result<Self> {
        Self::fit_matrix(space.matrix())
    }

    pub fn fit_matrix(x: &Array2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("cannot fit a standardizer on an empty space"));
        }
        let n = x.nrows() as f64;
        let means = x.sum_axis(Axis(0)) / n;
        let mut stds = Array1::zeros(x.ncols());
        for (j, col) in x.columns().into_iter().enumerate() {
            let m = means[j];
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            stds[j] = if sd <= 1e-12 * (1.0 + m.abs()) { 1.0 } else { sd };
        }
        Ok(Standardizer { means, stds })
    }

    pub fn identity(dim: usize) -> Self {
        Standardizer {
            means: Array1::zeros(dim),
            stds: Array1::ones(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.ncols(),
            });
        }
        Ok((x - &self.means) / &self.stds)
    }

    pub fn standardize(&self, space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
        space.with_matrix(self.transform(space.matrix())?)
    }
}

/// Fits a standardizer on `space` and applies it.
pub fn standardize_own(space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
    Standardizer::fit(space)?.standardize(space)
}

/// Rows of a space aligned with the ratings of a lexicon.
#[derive(Clone, Debug)]
pub struct Intersection {
    pub features: Array2<f64>,
    pub targets: Vec<f64>,
    pub words: Vec<String>,
    /// Lexicon words rated on the variable but absent from the vocabulary.
    pub dropped: usize,
}

/// Selects, in lexicon order, every word rated on `var` that the space knows.
pub fn intersect(space: &EmbeddingSpace, lexicon: &NormLexicon, var: Variable) -> Result<Intersection> {
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut words = Vec::new();
    let mut dropped = 0;
    for (word, value) in lexicon.ratings(var) {
        match space.index_of(word) {
            Some(i) => {
                rows.push(i);
                targets.push(value);
                words.push(word.to_string());
            }
            None => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    if dropped > 0 {
        log::info!(
            "{} of {} rated words missing from the {} vocabulary",
            dropped,
            dropped + rows.len(),
            space.lang
        );
    }
    Ok(Intersection {
        features: space.matrix().select(Axis(0), &rows),
        targets,
        words,
        dropped,
    })
}
