//! Effect sizes and t-tests of arousal scores between issue priorities.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Field, Priority};
use crate::error::{Error, Result};
use crate::scoring::{ArousalScore, Mode};
use crate::stats::{mean, sample_variance, student_t_two_sided_p};

/// Cohen's d with the pooled sample standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sizes(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
    if pooled <= 0.0 {
        return Err(Error::Degenerate("pooled standard deviation is zero".into()));
    }
    Ok((mean(a) - mean(b)) / pooled.sqrt())
}

fn check_sizes(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Degenerate(format!(
            "each group needs at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTest {
    /// Unequal variances, Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Pooled variance, na + nb − 2 degrees of freedom.
    Student,
}

impl FromStr for TTest {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "welch" => Ok(TTest::Welch),
            "student" => Ok(TTest::Student),
            _ => Err(Error::InvalidConfig(format!("unknown t-test variant {s:?}"))),
        }
    }
}

impl fmt::Display for TTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TTest::Welch => "welch",
            TTest::Student => "student",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    check_sizes(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (sample_variance(a) / na, sample_variance(b) / nb);
    if qa + qb <= 0.0 {
        return Err(Error::Degenerate("both groups have zero variance".into()));
    }
    let t = (mean(a) - mean(b)) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    Ok(TTestResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
    })
}

pub fn student_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    check_sizes(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / df;
    if pooled <= 0.0 {
        return Err(Error::Degenerate("both groups have zero variance".into()));
    }
    let t = (mean(a) - mean(b)) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TTestResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
    })
}

pub fn t_test(a: &[f64], b: &[f64], variant: TTest) -> Result<TTestResult> {
    match variant {
        TTest::Welch => welch_t_test(a, b),
        TTest::Student => student_t_test(a, b),
    }
}

/// Higher priority first; positive d means the higher priority scores higher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PriorityPair {
    pub high: Priority,
    pub low: Priority,
}

impl PriorityPair {
    pub fn label(&self) -> String {
        format!("{}-{}", self.high, self.low)
    }
}

pub const PAIRS: [PriorityPair; 5] = [
    PriorityPair {
        high: Priority::Blocker,
        low: Priority::Trivial,
    },
    PriorityPair {
        high: Priority::Blocker,
        low: Priority::Critical,
    },
    PriorityPair {
        high: Priority::Critical,
        low: Priority::Major,
    },
    PriorityPair {
        high: Priority::Major,
        low: Priority::Minor,
    },
    PriorityPair {
        high: Priority::Minor,
        low: Priority::Trivial,
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub cohen_d: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub field: Field,
    pub mode: Mode,
    pub pair: PriorityPair,
    pub n_high: usize,
    pub n_low: usize,
    /// None when either group is too small or has no spread.
    pub stats: Option<CellStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    pub test: TTest,
    /// (field, mode) blocks present in the input, canonical order; five
    /// cells per block in `PAIRS` order.
    pub cells: Vec<ComparisonCell>,
    pub warnings: Vec<String>,
}

impl EvalTable {
    pub fn cell(&self, field: Field, mode: Mode, pair: PriorityPair) -> Option<&ComparisonCell> {
        self.cells
            .iter()
            .find(|c| c.field == field && c.mode == mode && c.pair == pair)
    }

    pub fn d(&self, field: Field, mode: Mode, pair: PriorityPair) -> Option<f64> {
        self.cell(field, mode, pair)?.stats.map(|s| s.cohen_d)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[ComparisonCell]> {
        self.cells.chunks(PAIRS.len())
    }
}

/// Groups score rows by (field, mode, priority) and compares the five
/// priority pairs. Rows of issues missing from `priorities` or with
/// `Unknown` priority are dropped.
pub fn evaluate_priorities(rows: &[ArousalScore], priorities: &HashMap<String, Priority>, test: TTest) -> EvalTable {
    let mut warnings = Vec::new();
    let mut groups: BTreeMap<(Field, Mode, Priority), Vec<f64>> = BTreeMap::new();
    let mut blocks = BTreeSet::new();
    let (mut unknown, mut missing, mut nonfinite) = (0usize, 0usize, 0usize);
    for r in rows {
        if !r.score.is_finite() {
            nonfinite += 1;
            continue;
        }
        blocks.insert((r.field, r.mode));
        match priorities.get(&r.issue_id) {
            None => missing += 1,
            Some(Priority::Unknown) => unknown += 1,
            Some(&p) => groups.entry((r.field, r.mode, p)).or_default().push(r.score),
        }
    }
    for (n, what) in [
        (unknown, "with unknown priority"),
        (missing, "whose issue is not in the corpus"),
        (nonfinite, "with a non-finite score"),
    ] {
        if n > 0 {
            warnings.push(format!("dropped {n} score rows {what}"));
        }
    }
    // Sorting makes every statistic independent of input row order.
    for v in groups.values_mut() {
        v.sort_by(f64::total_cmp);
    }

    let empty = Vec::new();
    let mut cells = Vec::new();
    for (field, mode) in blocks {
        for pair in PAIRS {
            let hi = groups.get(&(field, mode, pair.high)).unwrap_or(&empty);
            let lo = groups.get(&(field, mode, pair.low)).unwrap_or(&empty);
            let stats = cohens_d(hi, lo).and_then(|d| {
                let tt = t_test(hi, lo, test)?;
                Ok(CellStats {
                    cohen_d: d,
                    t: tt.t,
                    df: tt.df,
                    p: tt.p,
                })
            });
            let stats = match stats {
                Ok(s) => Some(s),
                Err(e) => {
                    warnings.push(format!("{field}/{mode} {}: {e}", pair.label()));
                    None
                }
            };
            cells.push(ComparisonCell {
                field,
                mode,
                pair,
                n_high: hi.len(),
                n_low: lo.len(),
                stats,
            });
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    EvalTable { test, cells, warnings }
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn significance(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedTables {
    pub d: String,
    pub t: String,
    pub df: String,
    pub p: String,
    pub display: String,
}

impl RenderedTables {
    pub fn files(&self) -> [(&'static str, &str); 5] {
        [
            ("cohen_d.csv", &self.d),
            ("t.csv", &self.t),
            ("df.csv", &self.df),
            ("p.csv", &self.p),
            ("tables.txt", &self.display),
        ]
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in self.files() {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn delimited(table: &EvalTable, value: impl Fn(&CellStats) -> String) -> String {
    let mut out = String::from("field,mode");
    for p in PAIRS {
        write!(out, ",{}", p.label()).unwrap();
    }
    out.push('\n');
    for block in table.blocks() {
        write!(out, "{},{}", block[0].field, block[0].mode).unwrap();
        for c in block {
            out.push(',');
            if let Some(s) = &c.stats {
                out.push_str(&value(s));
            }
        }
        out.push('\n');
    }
    out
}

fn display_block(out: &mut String, title: &str, table: &EvalTable, value: impl Fn(&CellStats) -> String) {
    const W: usize = 18;
    writeln!(out, "{title}").unwrap();
    write!(out, "{:<14}{:<10}", "field", "mode").unwrap();
    for p in PAIRS {
        write!(out, "{:>W$}", p.label()).unwrap();
    }
    out.push('\n');
    for block in table.blocks() {
        write!(out, "{:<14}{:<10}", block[0].field.as_str(), block[0].mode.as_str()).unwrap();
        for c in block {
            let cell = c
                .stats
                .as_ref()
                .map_or_else(|| "-".to_owned(), |s| format!("{}{}", value(s), significance(s.p)));
            write!(out, "{cell:>W$}").unwrap();
        }
        out.push('\n');
    }
}

/// Deterministic text renderings: one delimited table per statistic plus a
/// display file marking p-value thresholds.
pub fn render_tables(table: &EvalTable) -> RenderedTables {
    let mut display = String::new();
    display_block(&mut display, "Cohen's d (higher minus lower priority)", table, |s| {
        format!("{:.4}", s.cohen_d)
    });
    display.push('\n');
    display_block(&mut display, &format!("{} t-test p-values", table.test), table, |s| {
        format!("{:.3e}", s.p)
    });
    display.push_str("\n*** p < 0.001, ** p < 0.01, * p < 0.05\n");
    RenderedTables {
        d: delimited(table, |s| format!("{:.4}", s.cohen_d)),
        t: delimited(table, |s| format!("{:.4}", s.t)),
        df: delimited(table, |s| format!("{:.2}", s.df)),
        p: delimited(table, |s| format!("{:.6e}", s.p)),
        display,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn d_hand_values() {
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), -1.0);
        let a = [1.0, 4.0, 2.0, 8.0];
        assert_eq!(cohens_d(&a, &a).unwrap(), 0.0);
        assert!(cohens_d(&[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(cohens_d(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn t_identical_groups() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(welch_t_test(&[2.0, 2.0], &[3.0, 3.0]).is_err());
        // One positive variance suffices.
        assert!(welch_t_test(&[2.0, 2.0], &[3.0, 4.0]).is_ok());
    }

    #[test]
    fn student_equals_welch_for_balanced_equal_variance() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [3.0, 4.0, 5.0, 6.0];
        let w = welch_t_test(&a, &b).unwrap();
        let s = student_t_test(&a, &b).unwrap();
        assert!((w.t - s.t).abs() < 1e-12 && (w.df - s.df).abs() < 1e-12);
    }

    fn row(id: &str, field: Field, mode: Mode, score: f64) -> ArousalScore {
        ArousalScore {
            issue_id: id.into(),
            field,
            mode,
            n_matched: 1,
            max: score,
            min: score,
            score,
        }
    }

    #[test]
    fn only_blocker_trivial_populated() {
        let mut rows = Vec::new();
        let mut prio = HashMap::new();
        for (i, (p, s)) in [
            (Priority::Blocker, 12.0),
            (Priority::Blocker, 13.0),
            (Priority::Blocker, 11.5),
            (Priority::Trivial, 10.0),
            (Priority::Trivial, 10.5),
            (Priority::Unknown, 30.0),
        ]
        .into_iter()
        .enumerate()
        {
            let id = format!("i{i}");
            prio.insert(id.clone(), p);
            rows.push(row(&id, Field::Title, Mode::Sea, s));
        }
        let t = evaluate_priorities(&rows, &prio, TTest::Welch);
        assert_eq!(t.cells.len(), 5);
        let populated: Vec<_> = t.cells.iter().filter(|c| c.stats.is_some()).collect();
        assert_eq!(populated.len(), 1);
        assert_eq!(populated[0].pair, PAIRS[0]);
        assert!(populated[0].stats.unwrap().cohen_d > 0.0);
        assert!(t.warnings.iter().any(|w| w.contains("unknown priority")));
    }

    #[test]
    fn empty_table_renders_headers_only() {
        let t = evaluate_priorities(&[], &HashMap::new(), TTest::Welch);
        let r = render_tables(&t);
        assert_eq!(
            r.d,
            "field,mode,Blocker-Trivial,Blocker-Critical,Critical-Major,Major-Minor,Minor-Trivial\n"
        );
    }

    #[test]
    fn significance_marks() {
        assert_eq!(significance(0.0005), "***");
        assert_eq!(significance(0.005), "**");
        assert_eq!(significance(0.02), "*");
        assert_eq!(significance(0.2), "");
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            proptest::collection::vec(-50.0f64..50.0, 2..30),
            proptest::collection::vec(-50.0f64..50.0, 2..30),
        )
    }

    proptest! {
        #[test]
        fn d_shift_and_scale_invariant((a, b) in vec_pair(), c in -1e3f64..1e3, k in 0.01f64..100.0) {
            let d = cohens_d(&a, &b).unwrap();
            let shift = |v: &[f64]| v.iter().map(|x| x + c).collect::<Vec<_>>();
            let scale = |v: &[f64]| v.iter().map(|x| x * k).collect::<Vec<_>>();
            prop_assert!((cohens_d(&shift(&a), &shift(&b)).unwrap() - d).abs() < 1e-9 * (1.0 + d.abs()));
            prop_assert!((cohens_d(&scale(&a), &scale(&b)).unwrap() - d).abs() < 1e-9 * (1.0 + d.abs()));
            prop_assert!((cohens_d(&b, &a).unwrap() + d).abs() < 1e-12);
        }

        #[test]
        fn welch_swap((a, b) in vec_pair()) {
            let x = welch_t_test(&a, &b).unwrap();
            let y = welch_t_test(&b, &a).unwrap();
            prop_assert!((x.t + y.t).abs() < 1e-12);
            prop_assert!((x.p - y.p).abs() < 1e-12);
            prop_assert!(x.p > 0.0 && x.p <= 1.0);
        }

        #[test]
        fn p_decreases_in_abs_t(t1 in 0.0f64..20.0, dt in 1e-3f64..5.0, df in 1.0f64..500.0) {
            prop_assert!(student_t_two_sided_p(t1 + dt, df) <= student_t_two_sided_p(t1, df));
            prop_assert_eq!(student_t_two_sided_p(-t1, df), student_t_two_sided_p(t1, df));
        }

        #[test]
        fn evaluation_ignores_row_order(scores in proptest::collection::vec((0usize..5, 0.0f64..20.0), 10..60), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut prio = HashMap::new();
            let rows: Vec<_> = scores.iter().enumerate().map(|(i, &(p, s))| {
                let id = format!("i{i}");
                prio.insert(id.clone(), Priority::RANKED[p]);
                row(&id, Field::AllComments, Mode::Sea, s)
            }).collect();
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = evaluate_priorities(&rows, &prio, TTest::Welch);
            let b = evaluate_priorities(&shuffled, &prio, TTest::Welch);
            prop_assert_eq!(render_tables(&a), render_tables(&b));
            prop_assert_eq!(a, b);
        }
    }
}
