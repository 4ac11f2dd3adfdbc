//! Two-sample tests on closeness samples and histogram extraction.

mod special;

pub use special::{kolmogorov_survival, ln_gamma, regularized_incomplete_beta, student_t_two_sided};

use serde::{Deserialize, Serialize};

use crate::diff::UpgradeComparison;
use crate::error::{Error, Result};
use crate::metrics::{closeness_centrality, ClosenessMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    WelchT,
    KsTwoSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub test_kind: TestKind,
    /// Infinite when the Welch statistic is degenerate.
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Welch–Satterthwaite degrees of freedom; absent for K-S.
    pub df: Option<f64>,
    /// Both samples have zero variance and different means.
    pub degenerate: bool,
}

fn check_finite(xs: &[f64], label: &str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("sample {label} contains a non-finite value")))
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Two-sided Welch (unequal variance) t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<StatTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Domain(format!(
            "Welch test needs at least 2 observations per sample (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    check_finite(a, "a")?;
    check_finite(b, "b")?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (va / na, vb / nb);
    let se2 = qa + qb;
    let mut result = StatTestResult {
        test_kind: TestKind::WelchT,
        statistic: 0.0,
        p_value: 1.0,
        n_a: a.len(),
        n_b: b.len(),
        df: None,
        degenerate: false,
    };
    if se2 == 0.0 {
        if ma != mb {
            result.statistic = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
            result.p_value = 0.0;
            result.degenerate = true;
        }
        return Ok(result);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    result.statistic = t;
    result.df = Some(df);
    result.p_value = student_t_two_sided(t, df);
    Ok(result)
}

/// Largest gap between the two empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // Once one sample is exhausted its EDF is 1; the other only rises toward 1.
    d
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value at
/// effective size `n_a n_b / (n_a + n_b)`. Small samples (< 20) make the
/// p-value approximate.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<StatTestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("K-S test needs non-empty samples".into()));
    }
    check_finite(a, "a")?;
    check_finite(b, "b")?;
    let d = ks_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let effective = na * nb / (na + nb);
    Ok(StatTestResult {
        test_kind: TestKind::KsTwoSample,
        statistic: d,
        p_value: kolmogorov_survival(effective.sqrt() * d),
        n_a: a.len(),
        n_b: b.len(),
        df: None,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; empty for an empty sample.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,count\n");
        for (e, c) in self.edges.iter().zip(&self.counts) {
            out.push_str(&format!("{e},{c}\n"));
        }
        if let Some(last) = self.edges.last() {
            out.push_str(&format!("{last},\n"));
        }
        out
    }
}

/// Equal-width bins over `[min, max]`, right-most bin closed. A constant
/// sample collapses to a single bin.
pub fn closeness_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    check_finite(values, "values")?;
    if values.is_empty() {
        return Ok(Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        });
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(Histogram {
            edges: vec![lo, hi],
            counts: vec![values.len()],
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0; bins];
    for &x in values {
        let mut k = (((x - lo) / width) as usize).min(bins - 1);
        // Settle rounding at bin boundaries against the published edges.
        while k > 0 && x < edges[k] {
            k -= 1;
        }
        while k + 1 < bins && x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Changed nodes against every node (overlapping samples).
    #[default]
    ChangedVsAll,
    /// Changed nodes against the complement.
    ChangedVsUnchanged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessComparison {
    pub mode: SampleMode,
    pub welch: StatTestResult,
    pub ks: StatTestResult,
}

/// Welch and K-S tests on closeness of changed nodes, computed on the full
/// upgraded graph.
pub fn compare_changed_vs_all(
    cmp: &UpgradeComparison,
    closeness: ClosenessMode,
    mode: SampleMode,
) -> Result<ClosenessComparison> {
    if cmp.changed_ids.is_empty() {
        return Err(Error::Domain("no changed nodes to compare".into()));
    }
    let cc = closeness_centrality(&cmp.upgraded, closeness);
    let changed: Vec<f64> = cmp.changed_ids.iter().map(|&i| cc[i]).collect();
    let other: Vec<f64> = match mode {
        SampleMode::ChangedVsAll => cc,
        SampleMode::ChangedVsUnchanged => cc
            .iter()
            .enumerate()
            .filter(|(i, _)| !cmp.changed_ids.contains(i))
            .map(|(_, &c)| c)
            .collect(),
    };
    Ok(ClosenessComparison {
        mode,
        welch: welch_t_test(&changed, &other)?,
        ks: ks_two_sample(&changed, &other)?,
    })
}
