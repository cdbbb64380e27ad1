use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sheet::RatingRecord;
use crate::error::{Error, Result};
use crate::stats::{mean, sample_sd, student_t_two_sided_p};

/// Number of ordinal rating categories (scores 1..=9).
pub const CATEGORIES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value of r against zero, via Student's t with n−2 df.
    pub p: f64,
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} observations",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "correlation needs at least 3 pairs, got {n}"
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance in a correlation input".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        student_t_two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Linear,
    Quadratic,
}

impl Weighting {
    pub const ALL: [Weighting; 2] = [Weighting::Linear, Weighting::Quadratic];

    /// Disagreement weight between categories `i` and `j` of `k`.
    pub fn weight(self, i: usize, j: usize, k: usize) -> f64 {
        let d = i.abs_diff(j) as f64 / (k - 1).max(1) as f64;
        match self {
            Weighting::Linear => d,
            Weighting::Quadratic => d * d,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Linear => "linear",
            Weighting::Quadratic => "quadratic",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Weighting::Linear),
            "quadratic" => Ok(Weighting::Quadratic),
            _ => Err(Error::InvalidConfig(format!("unknown kappa weighting {s:?}"))),
        }
    }
}

/// Weighted kappa from a square confusion matrix of counts.
///
/// Returns 1 when the chance-disagreement denominator is zero (both raters
/// constant and equal).
pub fn weighted_kappa_from_confusion(observed: &[Vec<f64>], weighting: Weighting) -> f64 {
    let k = observed.len();
    let total: f64 = observed.iter().flatten().sum();
    let rows: Vec<f64> = observed.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..k).map(|j| observed.iter().map(|r| r[j]).sum()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = weighting.weight(i, j, k);
            num += w * observed[i][j];
            den += w * rows[i] * cols[j] / total;
        }
    }
    if den == 0.0 {
        1.0
    } else {
        1.0 - num / den
    }
}

/// Weighted kappa over scores in 1..=9.
pub fn weighted_kappa(x: &[u8], y: &[u8], weighting: Weighting) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} ratings", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::Degenerate("kappa needs at least one rating pair".into()));
    }
    let mut observed = vec![vec![0.0; CATEGORIES]; CATEGORIES];
    for (&a, &b) in x.iter().zip(y) {
        if !(1..=9).contains(&a) || !(1..=9).contains(&b) {
            return Err(Error::InvalidConfig(format!("rating pair ({a}, {b}) outside 1..=9")));
        }
        observed[usize::from(a - 1)][usize::from(b - 1)] += 1.0;
    }
    Ok(weighted_kappa_from_confusion(&observed, weighting))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterSummary {
    pub rater: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: usize,
    pub raters: [RaterSummary; 2],
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub weighting: Weighting,
    pub kappa: f64,
    pub kappa_linear: f64,
    pub kappa_quadratic: f64,
    /// Fractions in [0, 1].
    pub exact: f64,
    pub within_one: f64,
    pub opposite: f64,
}

/// Two-rater agreement. Both raters must have scored the same word set.
pub fn rater_agreement(records: &[RatingRecord], weighting: Weighting) -> Result<AgreementReport> {
    let mut by_rater: BTreeMap<&str, BTreeMap<&str, u8>> = BTreeMap::new();
    for r in records {
        by_rater.entry(&r.rater).or_default().insert(&r.word, r.score);
    }
    if by_rater.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "agreement needs exactly 2 raters, found {}",
            by_rater.len()
        )));
    }
    let mut it = by_rater.into_iter();
    let (r1, s1) = it.next().unwrap();
    let (r2, s2) = it.next().unwrap();
    let w1: BTreeSet<&str> = s1.keys().copied().collect();
    let w2: BTreeSet<&str> = s2.keys().copied().collect();
    if w1 != w2 {
        return Err(Error::RaterMismatch {
            only_first: w1.difference(&w2).map(|w| w.to_string()).collect(),
            only_second: w2.difference(&w1).map(|w| w.to_string()).collect(),
        });
    }
    let x: Vec<u8> = s1.values().copied().collect();
    let y: Vec<u8> = s2.values().copied().collect();
    let xf: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let n = x.len();

    let corr = pearson_r(&xf, &yf)?;
    let kappa_linear = weighted_kappa(&x, &y, Weighting::Linear)?;
    let kappa_quadratic = weighted_kappa(&x, &y, Weighting::Quadratic)?;
    let frac = |pred: &dyn Fn(u8, u8) -> bool| x.iter().zip(&y).filter(|(&a, &b)| pred(a, b)).count() as f64 / n as f64;
    Ok(AgreementReport {
        n,
        raters: [
            RaterSummary {
                rater: r1.to_owned(),
                mean: mean(&xf),
                sd: sample_sd(&xf),
            },
            RaterSummary {
                rater: r2.to_owned(),
                mean: mean(&yf),
                sd: sample_sd(&yf),
            },
        ],
        pearson_r: corr.r,
        pearson_p: corr.p,
        weighting,
        kappa: match weighting {
            Weighting::Linear => kappa_linear,
            Weighting::Quadratic => kappa_quadratic,
        },
        kappa_linear,
        kappa_quadratic,
        exact: frac(&|a, b| a == b),
        within_one: frac(&|a, b| a.abs_diff(b) <= 1),
        opposite: frac(&|a, b| (a > 5 && b < 5) || (a < 5 && b > 5)),
    })
}

impl AgreementReport {
    /// Two-column text table, one row per statistic.
    pub fn render(&self) -> String {
        let [a, b] = &self.raters;
        let pct = |v: f64| format!("{:.0}%", 100.0 * v);
        let rows = [
            ("Words rated".to_owned(), self.n.to_string()),
            (format!("Mean ({})", a.rater), format!("{:.2}", a.mean)),
            (format!("Mean ({})", b.rater), format!("{:.2}", b.mean)),
            (format!("SD ({})", a.rater), format!("{:.2}", a.sd)),
            (format!("SD ({})", b.rater), format!("{:.2}", b.sd)),
            (
                "Correlation (Pearson)".to_owned(),
                format!("{:.2} (p-value {:.3e})", self.pearson_r, self.pearson_p),
            ),
            (
                format!("Kappa (weighted, {})", self.weighting),
                format!("{:.2}", self.kappa),
            ),
            ("Kappa (linear)".to_owned(), format!("{:.4}", self.kappa_linear)),
            ("Kappa (quadratic)".to_owned(), format!("{:.4}", self.kappa_quadratic)),
            ("Exact agreement".to_owned(), pct(self.exact)),
            ("Agreement within one".to_owned(), pct(self.within_one)),
            (
                format!("Opposite ({0}>5 and {1}<5, or reverse)", a.rater, b.rater),
                pct(self.opposite),
            ),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}
