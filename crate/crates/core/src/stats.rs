//! Correlation metrics, cross-validation folds and the approximate
//! randomization significance test.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite value"));
    }
    Ok(())
}

/// Pearson's r: centred covariance over the product of population standard
/// deviations.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based fractional ranks; tied values share the mean of the ranks they
/// span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's ρ as the Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Spearman,
    Pearson,
}

impl Metric {
    pub fn compute(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Metric::Spearman => spearman(a, b),
            Metric::Pearson => pearson(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Spearman => "spearman",
            Metric::Pearson => "pearson",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Metric::Spearman),
            "pearson" => Ok(Metric::Pearson),
            _ => Err(Error::invalid(format!("unknown metric '{s}'"))),
        }
    }
}

/// Assignment of items to `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// Seeded shuffle followed by a contiguous split. The first `n % k`
    /// folds receive one extra item.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("cannot split {n} items into {k} folds")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignments = vec![0; n];
        let (base, extra) = (n / k, n % k);
        let mut pos = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            for &item in &order[pos..pos + size] {
                assignments[item] = fold;
            }
            pos += size;
        }
        Ok(FoldPlan { k, seed, assignments })
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Held-out item indices of `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    FoldPlan::new(n, k, seed)
}

/// Paired approximate randomization test for the difference between two
/// systems' correlation with `gold`.
///
/// Each iteration swaps `a[i]` and `b[i]` independently with probability ½
/// and recomputes `|metric(gold, a') − metric(gold, b')|`. Returns
/// `(1 + #{d' ≥ d}) / (1 + iterations)`.
pub fn approx_randomization_test(
    gold: &[f64],
    a: &[f64],
    b: &[f64],
    metric: Metric,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    if a.len() != gold.len() || b.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: if a.len() != gold.len() { a.len() } else { b.len() },
        });
    }
    let observed = (metric.compute(gold, a)? - metric.compute(gold, b)?).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pa = a.to_vec();
    let mut pb = b.to_vec();
    let mut at_least = 0usize;
    for _ in 0..iterations {
        for i in 0..gold.len() {
            if rng.random::<bool>() {
                pa[i] = b[i];
                pb[i] = a[i];
            } else {
                pa[i] = a[i];
                pb[i] = b[i];
            }
        }
        let d = (metric.compute(gold, &pa)? - metric.compute(gold, &pb)?).abs();
        // absorb rounding differences between equal statistics
        if d + 1e-12 >= observed {
            at_least += 1;
        }
    }
    Ok((1 + at_least) as f64 / (1 + iterations) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub n: usize,
    pub spearman: f64,
    pub pearson: f64,
}

impl FoldScore {
    pub fn compute(gold: &[f64], pred: &[f64]) -> Result<Self> {
        Ok(FoldScore {
            n: gold.len(),
            spearman: spearman(gold, pred)?,
            pearson: pearson(gold, pred)?,
        })
    }
}

/// Outcome of one experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub variable: String,
    pub model: String,
    pub spearman: f64,
    pub pearson: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_fold: Option<Vec<FoldScore>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_value: Option<f64>,
    /// Resolved hyperparameters, seeds, fold count and similar settings.
    pub config: serde_json::Value,
}

impl EvalReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report is always serializable")
    }

    /// Whether the headline difference against the baseline is significant
    /// at `alpha`.
    pub fn significant(&self, alpha: f64) -> Option<bool> {
        self.p_value.map(|p| p < alpha)
    }

    pub fn text_header() -> String {
        format!(
            "{:<16} {:<10} {:<6} {:>7} {:>9} {:>9} {:>9}",
            "task", "variable", "model", "n", "spearman", "pearson", "p"
        )
    }

    pub fn text_row(&self) -> String {
        let p = self
            .p_value
            .map(|p| format!("{p:.4}"))
            .unwrap_or_else(|| "-".into());
        let mut row = format!(
            "{:<16} {:<10} {:<6} {:>7} {:>9.4} {:>9.4} {:>9}",
            self.task, self.variable, self.model, self.n, self.spearman, self.pearson, p
        );
        if let Some(folds) = &self.per_fold {
            let per: Vec<String> = folds.iter().map(|f| format!("{:.4}", f.spearman)).collect();
            row.push_str(&format!("  folds[{}]", per.join(" ")));
        }
        row
    }
}

/// Renders reports as an aligned plain-text table.
pub fn text_table(reports: &[EvalReport]) -> String {
    let mut out = EvalReport::text_header();
    out.push('\n');
    for r in reports {
        out.push_str(&r.text_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let r = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let b: Vec<f64> = a.iter().map(|x| -2.0 * x + 7.0).collect();
        assert!((pearson(&a, &b).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&a, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn folds_partition() {
        let plan = make_folds(9, 3, 0).unwrap();
        for f in 0..3 {
            assert_eq!(plan.test_indices(f).len(), 3);
        }
        let mut sizes: Vec<usize> = (0..3).map(|f| make_folds(10, 3, 1).unwrap().test_indices(f).len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(make_folds(10, 3, 5).unwrap(), make_folds(10, 3, 5).unwrap());
        assert!(make_folds(2, 3, 0).is_err());
        let plan = make_folds(10, 3, 5).unwrap();
        let mut all: Vec<usize> = (0..3).flat_map(|f| plan.test_indices(f)).collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn randomization_identical_systems() {
        let gold = [1.0, 2.0, 3.0, 4.0, 5.0];
        let a = [1.5, 1.0, 3.5, 4.0, 6.0];
        let p = approx_randomization_test(&gold, &a, &a, Metric::Spearman, 200, 1).unwrap();
        assert_eq!(p, 1.0);
        assert!(approx_randomization_test(&gold, &a, &a[..4], Metric::Spearman, 10, 1).is_err());
    }

    #[test]
    fn report_serializes_to_one_line() {
        let r = EvalReport {
            task: "in_language_cv".into(),
            variable: "conc_mean".into(),
            model: "svr".into(),
            spearman: 0.5,
            pearson: 0.25,
            n: 10,
            per_fold: None,
            baseline: None,
            p_value: Some(0.01),
            config: serde_json::json!({"folds": 3}),
        };
        let line = r.to_json_line();
        assert!(!line.contains('\n'));
        let back: EvalReport = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.significant(0.05), Some(true));
        assert!(text_table(&[r]).lines().count() == 2);
    }
}
