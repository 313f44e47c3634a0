//! Norm lexicons: per-word gold ratings for concreteness and imageability,
//! plus the bilingual dictionaries used for dictionary transfer.
//!
//! Lexicons are stored on disk in a canonical TSV layout
//!
//! ```text
//! word	conc_mean	conc_std	imag_mean	imag_std
//! dog	4.8	0.4
//! ```
//!
//! with empty cells for variables a resource does not provide. Other layouts
//! (MRC, BWK, MEGA exports) are read through a [`LexiconSchema`] that maps
//! canonical fields onto the file's header names. Ratings keep their native
//! scale; nothing is rescaled.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{open_text, write_atomic};
use crate::{Error, Result};

/// One of the four rated quantities a lexicon may carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    ConcMean,
    ConcStd,
    ImagMean,
    ImagStd,
}

impl Variable {
    pub const ALL: [Variable; 4] = [
        Variable::ConcMean,
        Variable::ConcStd,
        Variable::ImagMean,
        Variable::ImagStd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::ConcMean => "conc_mean",
            Variable::ConcStd => "conc_std",
            Variable::ImagMean => "imag_mean",
            Variable::ImagStd => "imag_std",
        }
    }

    /// Whether this is an average rating (as opposed to annotator dispersion).
    pub fn is_mean(self) -> bool {
        matches!(self, Variable::ConcMean | Variable::ImagMean)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variable::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown variable '{s}' (expected conc_mean, conc_std, imag_mean or imag_std)"
                ))
            })
    }
}

/// Closed rating interval of a resource, e.g. 1–5 or 100–700.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub min: f64,
    pub max: f64,
}

impl Scale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!("invalid rating scale ({min}, {max})")));
        }
        Ok(Scale { min, max })
    }

    pub fn contains(&self, r: f64) -> bool {
        self.min <= r && r <= self.max
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.min, self.max)
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.min, self.max)
    }
}

impl FromStr for Scale {
    type Err = Error;

    /// Parses `min,max`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| Error::invalid(format!("scale '{s}' must look like MIN,MAX")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("scale bound '{t}' is not a number")))
        };
        Scale::new(parse(lo)?, parse(hi)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub word: String,
    pub conc_mean: Option<f64>,
    pub conc_std: Option<f64>,
    pub imag_mean: Option<f64>,
    pub imag_std: Option<f64>,
}

impl NormEntry {
    pub fn new(word: impl Into<String>) -> Self {
        NormEntry {
            word: word.into(),
            conc_mean: None,
            conc_std: None,
            imag_mean: None,
            imag_std: None,
        }
    }

    pub fn with(mut self, var: Variable, value: f64) -> Self {
        self.set(var, Some(value));
        self
    }

    pub fn get(&self, var: Variable) -> Option<f64> {
        match var {
            Variable::ConcMean => self.conc_mean,
            Variable::ConcStd => self.conc_std,
            Variable::ImagMean => self.imag_mean,
            Variable::ImagStd => self.imag_std,
        }
    }

    pub fn set(&mut self, var: Variable, value: Option<f64>) {
        let slot = match var {
            Variable::ConcMean => &mut self.conc_mean,
            Variable::ConcStd => &mut self.conc_std,
            Variable::ImagMean => &mut self.imag_mean,
            Variable::ImagStd => &mut self.imag_std,
        };
        *slot = value;
    }

    fn has_rating(&self) -> bool {
        Variable::ALL.iter().any(|&v| self.get(v).is_some())
    }
}

/// A validated set of gold (or predicted) ratings for one language.
#[derive(Clone, Debug, PartialEq)]
pub struct NormLexicon {
    pub lang: String,
    pub scale: Scale,
    entries: Vec<NormEntry>,
}

impl NormLexicon {
    /// Builds a lexicon, enforcing word uniqueness, scale bounds and
    /// non-negative standard deviations.
    pub fn new(lang: impl Into<String>, scale: Scale, entries: Vec<NormEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            check_entry(e, &scale).map_err(Error::invalid)?;
            if !seen.insert(e.word.as_str()) {
                return Err(Error::invalid(format!("duplicate lexicon word '{}'", e.word)));
            }
        }
        Ok(NormLexicon {
            lang: lang.into(),
            scale,
            entries,
        })
    }

    pub fn entries(&self) -> &[NormEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_variable(&self, var: Variable) -> bool {
        self.entries.iter().any(|e| e.get(var).is_some())
    }

    /// `(word, value)` for every entry rated on `var`, in lexicon order.
    pub fn ratings(&self, var: Variable) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.entries
            .iter()
            .filter_map(move |e| e.get(var).map(|v| (e.word.as_str(), v)))
    }

    /// Uniform sample of `n` entries without replacement, reproducible under
    /// `seed`. Sampled entries keep their original relative order.
    pub fn downsample(&self, n: usize, seed: u64) -> Result<NormLexicon> {
        if n > self.entries.len() {
            return Err(Error::invalid(format!(
                "cannot downsample {} entries to {n}",
                self.entries.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, self.entries.len(), n).into_vec();
        picked.sort_unstable();
        Ok(NormLexicon {
            lang: self.lang.clone(),
            scale: self.scale,
            entries: picked.into_iter().map(|i| self.entries[i].clone()).collect(),
        })
    }

    /// Writes the canonical TSV layout.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write_tsv(w))
    }

    pub fn write_tsv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let header: Vec<&str> = std::iter::once("word")
            .chain(Variable::ALL.iter().map(|v| v.name()))
            .collect();
        writeln!(w, "{}", header.join("\t"))?;
        for e in &self.entries {
            write!(w, "{}", e.word)?;
            for v in Variable::ALL {
                match e.get(v) {
                    Some(x) => write!(w, "\t{x}")?,
                    None => write!(w, "\t")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn check_entry(e: &NormEntry, scale: &Scale) -> std::result::Result<(), String> {
    if e.word.is_empty() {
        return Err("empty word".into());
    }
    if e.word.chars().any(char::is_whitespace) {
        return Err(format!("word '{}' contains whitespace", e.word));
    }
    if !e.has_rating() {
        return Err(format!("word '{}' has no rating", e.word));
    }
    for v in Variable::ALL {
        let Some(r) = e.get(v) else { continue };
        if !r.is_finite() {
            return Err(format!("{v} of '{}' is not finite", e.word));
        }
        if v.is_mean() {
            if !scale.contains(r) {
                return Err(format!(
                    "{v} {r} of '{}' outside scale [{}, {}]",
                    e.word, scale.min, scale.max
                ));
            }
        } else if r < 0.0 {
            return Err(format!("{v} {r} of '{}' is negative", e.word));
        }
    }
    Ok(())
}

/// Maps canonical fields onto the header names of a lexicon file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexiconSchema {
    pub word: String,
    pub columns: Vec<(Variable, String)>,
}

impl Default for LexiconSchema {
    fn default() -> Self {
        LexiconSchema {
            word: "word".into(),
            columns: Variable::ALL
                .iter()
                .map(|v| (*v, v.name().to_string()))
                .collect(),
        }
    }
}

impl FromStr for LexiconSchema {
    type Err = Error;

    /// Parses `word=Word,conc_mean=Conc.M,conc_std=Conc.SD`. Fields that are
    /// not named are absent.
    fn from_str(s: &str) -> Result<Self> {
        let mut word = None;
        let mut columns = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, col) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("schema item '{part}' must be FIELD=COLUMN")))?;
            if key == "word" {
                word = Some(col.to_string());
            } else {
                columns.push((key.parse::<Variable>()?, col.to_string()));
            }
        }
        Ok(LexiconSchema {
            word: word.unwrap_or_else(|| "word".into()),
            columns,
        })
    }
}

#[derive(Clone, Debug)]
pub struct LexiconOptions {
    pub lang: String,
    pub scale: Scale,
    pub schema: LexiconSchema,
    pub lowercase: bool,
}

impl LexiconOptions {
    pub fn new(lang: impl Into<String>, scale: Scale) -> Self {
        LexiconOptions {
            lang: lang.into(),
            scale,
            schema: LexiconSchema::default(),
            lowercase: true,
        }
    }
}

/// A row that was dropped on import, with its 1-based line number.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct LoadedLexicon {
    pub lexicon: NormLexicon,
    pub rejected: Vec<RejectedRow>,
    pub duplicates: usize,
}

/// Reads a TSV lexicon with a header row.
pub fn load_lexicon(path: &Path, opts: &LexiconOptions) -> Result<LoadedLexicon> {
    read_lexicon(open_text(path)?, path, opts)
}

pub fn read_lexicon<R: BufRead>(reader: R, path: &Path, opts: &LexiconOptions) -> Result<LoadedLexicon> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if !line.trim().is_empty() && !line.starts_with('#') {
                    break line;
                }
            }
            None => return Err(Error::format(path, "missing header row")),
        }
    };
    let header: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    let position = |name: &str| header.iter().position(|h| h.trim() == name);
    let word_col = position(&opts.schema.word).ok_or_else(|| {
        Error::format(path, format!("word column '{}' not in header", opts.schema.word))
    })?;
    let rating_cols: Vec<(Variable, usize)> = opts
        .schema
        .columns
        .iter()
        .filter_map(|(v, name)| position(name).map(|i| (*v, i)))
        .collect();
    if rating_cols.is_empty() {
        return Err(Error::format(path, "no rating columns found in header"));
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let mut rejected = Vec::new();
    let mut duplicates = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        let raw_word = cells.get(word_col).copied().unwrap_or("").trim();
        let word = if opts.lowercase {
            raw_word.to_lowercase()
        } else {
            raw_word.to_string()
        };
        let mut entry = NormEntry::new(word);
        for &(var, col) in &rating_cols {
            let cell = cells.get(col).copied().unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Row {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("unparsable {var} value '{cell}'"),
            })?;
            entry.set(var, Some(value));
        }
        if let Err(reason) = check_entry(&entry, &opts.scale) {
            log::warn!("{}:{lineno}: rejected row: {reason}", path.display());
            rejected.push(RejectedRow { line: lineno, reason });
            continue;
        }
        if !seen.insert(entry.word.clone()) {
            log::warn!(
                "{}:{lineno}: duplicate word '{}' ignored (first occurrence wins)",
                path.display(),
                entry.word
            );
            duplicates += 1;
            continue;
        }
        entries.push(entry);
    }
    Ok(LoadedLexicon {
        lexicon: NormLexicon {
            lang: opts.lang.clone(),
            scale: opts.scale,
            entries,
        },
        rejected,
        duplicates,
    })
}

/// Source→target translation pairs, deduplicated in first-seen order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransferDictionary {
    pairs: Vec<(String, String)>,
}

impl TransferDictionary {
    pub fn new<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        TransferDictionary {
            pairs: dedup_pairs(pairs.into_iter().map(|(s, t)| (s.into(), t.into()))),
        }
    }

    /// Loads a `source<TAB>target` file. Fails when no pair survives.
    pub fn load(path: &Path, lowercase: bool) -> Result<Self> {
        let pairs = read_pairs(path, lowercase)?;
        if pairs.is_empty() {
            return Err(Error::format(path, "dictionary contains no word pairs"));
        }
        Ok(TransferDictionary { pairs })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub(crate) fn dedup_pairs(pairs: impl Iterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut seen = HashSet::new();
    pairs.filter(|p| seen.insert(p.clone())).collect()
}

/// Reads a two-column TSV of word pairs. `#` lines are comments; lines
/// without exactly two non-empty columns are skipped with a warning.
pub(crate) fn read_pairs(path: &Path, lowercase: bool) -> Result<Vec<(String, String)>> {
    let reader = open_text(path)?;
    let mut raw = Vec::new();
    let mut skipped = 0usize;
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t').map(str::trim);
        match (cols.next(), cols.next(), cols.next()) {
            (Some(s), Some(t), None) if !s.is_empty() && !t.is_empty() => {
                let fold = |w: &str| if lowercase { w.to_lowercase() } else { w.to_string() };
                raw.push((fold(s), fold(t)));
            }
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed pair lines", path.display());
    }
    Ok(dedup_pairs(raw.into_iter()))
}
