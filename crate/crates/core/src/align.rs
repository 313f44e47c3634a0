//! Orthogonal alignment of one embedding space onto another.
//!
//! Given seed translation pairs, the map `W` minimizing `‖XW − Y‖_F` over
//! orthogonal matrices is `U Vᵀ` where `XᵀY = U S Vᵀ`. Rows of `X` and `Y`
//! are unit-normalized while learning; the learned map is applied to raw
//! vectors.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::embed_store::EmbeddingSpace;
use crate::io::{open_text, write_atomic};
use crate::linalg::jacobi_svd;
use crate::norms::{dedup_pairs, read_pairs};
use crate::{Error, Result};

const SVD_TOL: f64 = 1e-10;

/// Seed dictionary for learning an alignment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BilingualPairs {
    pairs: Vec<(String, String)>,
}

impl BilingualPairs {
    pub fn new<I, S, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let pairs: Vec<(String, String)> = pairs.into_iter().map(|(s, t)| (s.into(), t.into())).collect();
        if let Some((s, t)) = pairs.iter().find(|(s, t)| s.is_empty() || t.is_empty()) {
            return Err(Error::invalid(format!("empty word in pair ('{s}', '{t}')")));
        }
        Ok(BilingualPairs {
            pairs: dedup_pairs(pairs.into_iter()),
        })
    }

    /// Reads `source<TAB>target` lines; `#` lines are comments.
    pub fn load(path: &Path, lowercase: bool) -> Result<Self> {
        Ok(BilingualPairs {
            pairs: read_pairs(path, lowercase)?,
        })
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

/// Orthogonal map from the source space onto the target space: `x ↦ xW`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentTransform {
    pub w: Array2<f64>,
    pub source_lang: String,
    pub target_lang: String,
    /// Seed pairs found in both vocabularies (0 when loaded from disk).
    pub pairs_used: usize,
}

impl AlignmentTransform {
    pub fn identity(dim: usize, source_lang: &str, target_lang: &str) -> Self {
        AlignmentTransform {
            w: Array2::eye(dim),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
            pairs_used: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// Target→source map, `Wᵀ` by orthogonality.
    pub fn inverse(&self) -> AlignmentTransform {
        AlignmentTransform {
            w: self.w.t().to_owned(),
            source_lang: self.target_lang.clone(),
            target_lang: self.source_lang.clone(),
            pairs_used: self.pairs_used,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write_tsv(w))
    }

    /// Header `<dim> <source_lang> <target_lang>`, then one tab-separated row
    /// of `W` per line.
    pub fn write_tsv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.dim(), self.source_lang, self.target_lang)?;
        for row in self.w.rows() {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", cells.join("\t"))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut lines = open_text(path)?.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(path, "empty transform file"))?
            .map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [dim, src, tgt] = fields[..] else {
            return Err(Error::format(path, "header must be '<dim> <source_lang> <target_lang>'"));
        };
        let dim: usize = dim
            .parse()
            .ok()
            .filter(|d| *d > 0)
            .ok_or_else(|| Error::format(path, format!("bad dimension '{dim}'")))?;
        let mut data = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line.trim_end().split('\t').map(str::parse).collect();
            match row {
                Ok(r) if r.len() == dim => data.extend(r),
                _ => {
                    return Err(Error::Row {
                        path: path.into(),
                        line: i + 2,
                        msg: format!("expected {dim} numeric cells"),
                    })
                }
            }
            rows += 1;
        }
        if rows != dim {
            return Err(Error::format(path, format!("expected {dim} rows, found {rows}")));
        }
        Ok(AlignmentTransform {
            w: Array2::from_shape_vec((dim, dim), data).expect("shape checked"),
            source_lang: src.into(),
            target_lang: tgt.into(),
            pairs_used: 0,
        })
    }
}

fn unit_rows(mut m: Array2<f64>) -> Array2<f64> {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    m
}

/// Learns the orthogonal source→target map from seed pairs present in both
/// vocabularies.
pub fn learn_procrustes(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    pairs: &BilingualPairs,
) -> Result<AlignmentTransform> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            actual: tgt.dim(),
        });
    }
    let mut seen = HashSet::new();
    let mut src_rows = Vec::new();
    let mut tgt_rows = Vec::new();
    for (s, t) in pairs.pairs() {
        if let (Some(i), Some(j)) = (src.index_of(s), tgt.index_of(t)) {
            // pairs that collapse together after case-folding count once
            if seen.insert((i, j)) {
                src_rows.push(i);
                tgt_rows.push(j);
            }
        }
    }
    let used = src_rows.len();
    let dropped = pairs.len() - used;
    if dropped > 0 {
        log::info!("{dropped} seed pairs not usable (missing from a vocabulary or repeated)");
    }
    if used < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 usable seed pairs, found {used}"
        )));
    }
    if used < src.dim() {
        log::warn!(
            "only {used} usable seed pairs for a {}-dimensional space; alignment is underdetermined",
            src.dim()
        );
    }
    let x = unit_rows(src.matrix().select(Axis(0), &src_rows));
    let y = unit_rows(tgt.matrix().select(Axis(0), &tgt_rows));
    let svd = jacobi_svd(&x.t().dot(&y), SVD_TOL)?;
    Ok(AlignmentTransform {
        w: svd.u.dot(&svd.v.t()),
        source_lang: src.lang.clone(),
        target_lang: tgt.lang.clone(),
        pairs_used: used,
    })
}

/// Maps every row `x` of `space` to `xW`.
pub fn apply_transform(space: &EmbeddingSpace, t: &AlignmentTransform) -> Result<EmbeddingSpace> {
    if space.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            actual: space.dim(),
        });
    }
    space.with_matrix(space.matrix().dot(&t.w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, orthogonality_error};
    use ndarray::array;

    fn space(lang: &str, words: &[&str], m: Array2<f64>) -> EmbeddingSpace {
        EmbeddingSpace::new(lang, words.iter().map(|w| w.to_string()).collect(), m, false).unwrap()
    }

    #[test]
    fn identity_when_spaces_match() {
        let m = array![[1.0, 2.0, 0.5], [0.0, 1.0, -1.0], [3.0, -1.0, 2.0], [1.0, 1.0, 1.0]];
        let a = space("en", &["a", "b", "c", "d"], m.clone());
        let b = space("hr", &["a", "b", "c", "d"], m);
        let pairs = BilingualPairs::new([("a", "a"), ("b", "b"), ("c", "c"), ("d", "d")]).unwrap();
        let t = learn_procrustes(&a, &b, &pairs).unwrap();
        assert!(frobenius(&(&t.w - &Array2::<f64>::eye(3))) < 1e-8);
        assert_eq!(t.pairs_used, 4);
    }

    #[test]
    fn exact_planar_rotation() {
        let a = space("en", &["x", "y"], array![[1.0, 0.0], [0.0, 1.0]]);
        let b = space("hr", &["u", "v"], array![[0.0, 1.0], [-1.0, 0.0]]);
        let pairs = BilingualPairs::new([("x", "u"), ("y", "v")]).unwrap();
        let t = learn_procrustes(&a, &b, &pairs).unwrap();
        let expected = array![[0.0, 1.0], [-1.0, 0.0]];
        assert!(frobenius(&(&t.w - &expected)) < 1e-12);
        let moved = apply_transform(&space("en", &["p"], array![[1.0, 0.0]]), &t).unwrap();
        assert!((moved.matrix()[[0, 1]] - 1.0).abs() < 1e-12);
        assert!(orthogonality_error(&t.w) < 1e-12);
        assert!(frobenius(&(t.inverse().w.dot(&t.w) - Array2::<f64>::eye(2))) < 1e-12);
    }

    #[test]
    fn too_few_pairs_and_dim_mismatch() {
        let a = space("en", &["x", "y"], array![[1.0, 0.0], [0.0, 1.0]]);
        let b = space("hr", &["u"], array![[0.0, 1.0]]);
        let pairs = BilingualPairs::new([("x", "u"), ("y", "missing")]).unwrap();
        assert!(learn_procrustes(&a, &b, &pairs).is_err());
        let c = space("de", &["u", "v"], array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(matches!(
            learn_procrustes(&a, &c, &pairs),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(BilingualPairs::new([("", "a")]).is_err());
    }

    #[test]
    fn transform_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.tsv");
        let t = AlignmentTransform {
            w: array![[0.6, -0.8], [0.8, 0.6]],
            source_lang: "hr".into(),
            target_lang: "en".into(),
            pairs_used: 0,
        };
        t.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("2 hr en\n0.6\t-0.8\n"));
        assert_eq!(AlignmentTransform::load(&path).unwrap(), t);
    }
}
