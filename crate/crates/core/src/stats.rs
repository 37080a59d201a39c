//! Run statistics for temporal association of cluster labels.
//!
//! Each year contributes a short sequence of cluster labels in time order.
//! The score `T_y` counts consecutive pairs with equal labels; the decayed
//! score `T_{y,β}` counts agreements at every lag `ℓ` with weight `β^(ℓ-1)`.
//! Under the null hypothesis of no association, and conditional on each
//! year's label multiplicities, every ordering of a year's labels is equally
//! likely. That gives exact conditional moments for `T_y` and a permutation
//! test that shuffles labels within years.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::kmeans::Clustering;
use crate::trajectory::RegisteredTrajectory;

/// Standard normal upper 5% point used for the one-sided critical value.
pub const Z_95: f64 = 1.645;

/// Replicates within this distance of the observed statistic count as ties.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("conditional moments need at least 2 labels in a year, found {0}")]
    DegenerateRow(usize),
    #[error("total conditional variance is zero")]
    ZeroVariance,
    #[error("label table has no years")]
    NoYears,
    #[error("year {year} has no labels")]
    EmptyRow { year: i32 },
    #[error("label {label} outside [0, {k})")]
    InvalidLabel { label: usize, k: usize },
    #[error("decay parameter {0} outside (0, 1]")]
    InvalidBeta(f64),
    #[error("need at least {min} permutations, got {n}")]
    TooFewPermutations { n: usize, min: usize },
    #[error("year {year}: positions must run 1..={len} without gaps")]
    BadPositions { year: i32, len: usize },
    #[error("label CSV: {0}")]
    Csv(String),
}

/// Time-ordered cluster labels per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    k: usize,
    rows: BTreeMap<i32, Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    year: i32,
    position: usize,
    label: usize,
}

impl LabelTable {
    pub fn new(k: usize, rows: BTreeMap<i32, Vec<usize>>) -> Result<Self, StatsError> {
        for (&year, row) in &rows {
            if row.is_empty() {
                return Err(StatsError::EmptyRow { year });
            }
            if let Some(&label) = row.iter().find(|&&l| l >= k) {
                return Err(StatsError::InvalidLabel { label, k });
            }
        }
        Ok(Self { k, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &BTreeMap<i32, Vec<usize>> {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn years(&self) -> usize {
        self.rows.len()
    }

    pub fn total_labels(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    /// Number of occurrences of each label across the table.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in self.rows.values().flatten() {
            counts[l] += 1;
        }
        counts
    }

    /// Applies `perm[label]` to every label.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, StatsError> {
        let rows = self
            .rows
            .iter()
            .map(|(&y, row)| (y, row.iter().map(|&l| perm[l]).collect()))
            .collect();
        Self::new(self.k, rows)
    }

    /// Reads `year,position,label` records (with header). Positions are
    /// 1-based within each year. `k` defaults to one more than the largest
    /// label.
    pub fn from_csv<R: Read>(reader: R, k: Option<usize>) -> Result<Self, StatsError> {
        let mut by_year: BTreeMap<i32, Vec<(usize, usize)>> = BTreeMap::new();
        for record in csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader)
            .deserialize()
        {
            let r: CsvRecord = record.map_err(|e| StatsError::Csv(e.to_string()))?;
            by_year
                .entry(r.year)
                .or_default()
                .push((r.position, r.label));
        }
        let mut rows = BTreeMap::new();
        for (year, mut entries) in by_year {
            entries.sort_unstable();
            let len = entries.len();
            if entries
                .iter()
                .enumerate()
                .any(|(i, (pos, _))| *pos != i + 1)
            {
                return Err(StatsError::BadPositions { year, len });
            }
            rows.insert(
                year,
                entries.into_iter().map(|(_, l)| l).collect::<Vec<_>>(),
            );
        }
        let k = k.unwrap_or_else(|| rows.values().flatten().max().map_or(0, |m| m + 1));
        Self::new(k, rows)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), StatsError> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| StatsError::Csv(e.to_string());
        for (&year, row) in &self.rows {
            for (i, &label) in row.iter().enumerate() {
                w.serialize(CsvRecord {
                    year,
                    position: i + 1,
                    label,
                })
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| StatsError::Csv(e.to_string()))
    }
}

/// Groups ordered labels by registration year, ordering each year by
/// registration time, and drops years with fewer than `min_per_year` storms.
pub fn build_label_table(
    clustering: &Clustering,
    trajs: &[RegisteredTrajectory],
    min_per_year: usize,
) -> LabelTable {
    let mut by_year: BTreeMap<i32, Vec<(f64, usize)>> = BTreeMap::new();
    for (t, &label) in trajs.iter().zip(&clustering.assignments) {
        by_year
            .entry(t.registration_year())
            .or_default()
            .push((t.registration_time, label));
    }
    let rows = by_year
        .into_iter()
        .filter(|(_, v)| v.len() >= min_per_year.max(1))
        .map(|(y, mut v)| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            (y, v.into_iter().map(|(_, l)| l).collect())
        })
        .collect();
    LabelTable::new(clustering.k, rows).expect("clustering labels lie in [0, k)")
}

/// Which score a test uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    /// Agreements between consecutive labels.
    Plain,
    /// Agreements at every lag, weighted by `beta^(lag - 1)`.
    Decayed { beta: f64 },
}

impl Statistic {
    pub fn decayed(beta: f64) -> Result<Self, StatsError> {
        if beta > 0.0 && beta <= 1.0 {
            Ok(Self::Decayed { beta })
        } else {
            Err(StatsError::InvalidBeta(beta))
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Self::Plain => None,
            Self::Decayed { beta } => Some(*beta),
        }
    }

    pub fn row_score(&self, row: &[usize]) -> f64 {
        match *self {
            Self::Plain => adjacent_agreements(row) as f64,
            Self::Decayed { beta } => decayed_score(row, beta),
        }
    }

    pub fn table_score(&self, table: &LabelTable) -> f64 {
        table.rows.values().map(|r| self.row_score(r)).sum()
    }
}

/// `#{i : x_i = x_(i-1)}`.
pub fn adjacent_agreements(row: &[usize]) -> usize {
    row.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Agreement counts at lags `1..row.len()`; entry `ℓ - 1` holds lag `ℓ`.
pub fn lag_agreements(row: &[usize]) -> Vec<usize> {
    (1..row.len())
        .map(|lag| row.iter().zip(&row[lag..]).filter(|(a, b)| a == b).count())
        .collect()
}

fn decayed_score(row: &[usize], beta: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for count in lag_agreements(row) {
        total += weight * count as f64;
        weight *= beta;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearScore {
    pub year: i32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistic {
    pub total: usize,
    pub per_year: Vec<(i32, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayedStatistic {
    pub total: f64,
    pub per_year: Vec<(i32, f64)>,
}

pub fn run_statistic(table: &LabelTable) -> RunStatistic {
    let per_year: Vec<_> = table
        .rows
        .iter()
        .map(|(&y, r)| (y, adjacent_agreements(r)))
        .collect();
    RunStatistic {
        total: per_year.iter().map(|(_, t)| t).sum(),
        per_year,
    }
}

pub fn run_statistic_decayed(
    table: &LabelTable,
    beta: f64,
) -> Result<DecayedStatistic, StatsError> {
    Statistic::decayed(beta)?;
    let per_year: Vec<_> = table
        .rows
        .iter()
        .map(|(&y, r)| (y, decayed_score(r, beta)))
        .collect();
    Ok(DecayedStatistic {
        total: per_year.iter().map(|(_, t)| t).sum(),
        per_year,
    })
}

/// Agreement counts per lag summed over all years.
pub fn table_lag_profile(table: &LabelTable) -> Vec<usize> {
    let mut profile = Vec::new();
    for row in table.rows.values() {
        for (i, c) in lag_agreements(row).into_iter().enumerate() {
            if profile.len() <= i {
                profile.push(0);
            }
            profile[i] += c;
        }
    }
    while profile.last() == Some(&0) {
        profile.pop();
    }
    profile
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of `T_y` over uniformly random orderings of `row`.
///
/// With `r_j` the label multiplicities, `m2 = Σ r_j(r_j - 1)` and
/// `m3 = Σ r_j(r_j - 1)(r_j - 2)`:
///
/// ```text
/// mean     = m2 / h
/// variance = m2² / (h²(h-1)) + (h-3) m2 / (h(h-1)) - 2 m3 / (h(h-1))
/// ```
pub fn conditional_moments(row: &[usize]) -> Result<Moments, StatsError> {
    let h = row.len();
    if h < 2 {
        return Err(StatsError::DegenerateRow(h));
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in row {
        *counts.entry(l).or_default() += 1;
    }
    moments_from_multiplicities(counts.values().copied(), h)
}

/// [`conditional_moments`] from the multiplicities alone.
pub fn moments_from_multiplicities(
    multiplicities: impl IntoIterator<Item = usize>,
    h: usize,
) -> Result<Moments, StatsError> {
    if h < 2 {
        return Err(StatsError::DegenerateRow(h));
    }
    let (mut m2, mut m3) = (0.0, 0.0);
    for r in multiplicities {
        let r = r as f64;
        m2 += r * (r - 1.0);
        m3 += r * (r - 1.0) * (r - 2.0);
    }
    let h = h as f64;
    let mean = m2 / h;
    let variance = m2 * m2 / (h * h * (h - 1.0)) + (h - 3.0) * m2 / (h * (h - 1.0))
        - 2.0 * m3 / (h * (h - 1.0));
    Ok(Moments {
        mean,
        variance: variance.max(0.0),
    })
}

/// Sum over years of the conditional moments (years are independent).
pub fn table_moments(table: &LabelTable) -> Result<Moments, StatsError> {
    if table.is_empty() {
        return Err(StatsError::NoYears);
    }
    table.rows.values().try_fold(
        Moments {
            mean: 0.0,
            variance: 0.0,
        },
        |acc, row| {
            let m = conditional_moments(row)?;
            Ok(Moments {
                mean: acc.mean + m.mean,
                variance: acc.variance + m.variance,
            })
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: Statistic,
    pub t_observed: f64,
    pub per_year: Vec<YearScore>,
    /// Agreements per lag, summed over years, starting at lag 1.
    pub lag_profile: Vec<usize>,
    pub years: usize,
    pub labels: usize,
    pub cond_mean: Option<f64>,
    pub cond_variance: Option<f64>,
    pub z_score: Option<f64>,
    /// One-sided upper-tail normal approximation.
    pub p_normal: Option<f64>,
    /// `cond_mean + 1.645 sd`.
    pub critical_value_5pct: Option<f64>,
    pub p_permutation: Option<f64>,
    pub n_permutations: Option<usize>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
}

impl TestReport {
    fn observed(table: &LabelTable, statistic: Statistic) -> Self {
        Self {
            statistic,
            t_observed: statistic.table_score(table),
            per_year: table
                .rows
                .iter()
                .map(|(&year, r)| YearScore {
                    year,
                    score: statistic.row_score(r),
                })
                .collect(),
            lag_profile: table_lag_profile(table),
            years: table.years(),
            labels: table.total_labels(),
            cond_mean: None,
            cond_variance: None,
            z_score: None,
            p_normal: None,
            critical_value_5pct: None,
            p_permutation: None,
            n_permutations: None,
            beta: statistic.beta(),
            seed: None,
        }
    }

    fn with_normal(mut self, table: &LabelTable) -> Result<Self, StatsError> {
        let m = table_moments(table)?;
        let sd = m.variance.sqrt();
        let (z, p) = if m.variance > 0.0 {
            let z = (self.t_observed - m.mean) / sd;
            (z, standard_normal().sf(z))
        } else if (self.t_observed - m.mean).abs() <= TIE_TOLERANCE {
            (0.0, 1.0)
        } else {
            return Err(StatsError::ZeroVariance);
        };
        self.cond_mean = Some(m.mean);
        self.cond_variance = Some(m.variance);
        self.z_score = Some(z);
        self.p_normal = Some(p);
        self.critical_value_5pct = Some(m.mean + Z_95 * sd);
        Ok(self)
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

/// Refers the plain run statistic to a normal law with the summed
/// conditional mean and variance. When the variance is zero the statistic is
/// deterministic and the report carries `p = 1`.
pub fn normal_test(table: &LabelTable) -> Result<TestReport, StatsError> {
    if table.is_empty() {
        return Err(StatsError::NoYears);
    }
    TestReport::observed(table, Statistic::Plain).with_normal(table)
}

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Replicate `replicate` of the within-year shuffle: every year's labels
/// permuted uniformly at random, multiplicities untouched.
pub fn permuted_table(table: &LabelTable, seed: u64, replicate: usize) -> LabelTable {
    let mut rng = replicate_rng(seed, replicate);
    let rows = table
        .rows
        .iter()
        .map(|(&y, row)| {
            let mut row = row.clone();
            row.shuffle(&mut rng);
            (y, row)
        })
        .collect();
    LabelTable { k: table.k, rows }
}

/// Statistic values for `n` independent within-year shufflings of `table`.
/// Replicate `i` uses a ChaCha8 stream seeded by `seed` with stream id `i`,
/// and equals `statistic.table_score(&permuted_table(table, seed, i))`.
pub fn permutation_replicates(
    table: &LabelTable,
    statistic: Statistic,
    n: usize,
    seed: u64,
) -> Vec<f64> {
    let rows: Vec<&Vec<usize>> = table.rows.values().collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i);
            let mut scratch = Vec::new();
            rows.iter()
                .map(|row| {
                    scratch.clear();
                    scratch.extend_from_slice(row);
                    scratch.shuffle(&mut rng);
                    statistic.row_score(&scratch)
                })
                .sum()
        })
        .collect()
}

/// Permutation test with p-value `(1 + #{replicates >= observed}) / (n + 1)`.
/// For the plain statistic the normal-approximation fields are filled in as
/// well whenever every year has at least two labels.
pub fn permutation_test(
    table: &LabelTable,
    statistic: Statistic,
    n: usize,
    seed: u64,
) -> Result<TestReport, StatsError> {
    if n < 1 {
        return Err(StatsError::TooFewPermutations { n, min: 1 });
    }
    if table.is_empty() {
        return Err(StatsError::NoYears);
    }
    if let Some(beta) = statistic.beta() {
        Statistic::decayed(beta)?;
    }
    let mut report = TestReport::observed(table, statistic);
    if statistic == Statistic::Plain && table.rows.values().all(|r| r.len() >= 2) {
        report = report.with_normal(table)?;
    }
    let observed = report.t_observed;
    let exceed = permutation_replicates(table, statistic, n, seed)
        .into_iter()
        .filter(|&v| v >= observed - TIE_TOLERANCE)
        .count();
    report.p_permutation = Some((1 + exceed) as f64 / (n + 1) as f64);
    report.n_permutations = Some(n);
    report.seed = Some(seed);
    Ok(report)
}

/// `Z(θ, h) = k (e^θ + k - 1)^(h-1)`, the free-boundary partition function
/// of the one-dimensional Potts chain of length `h` with `k` states.
pub fn partition_function(theta: f64, h: u32, k: u32) -> f64 {
    let k = k as f64;
    k * (theta.exp() + k - 1.0).powi(h as i32 - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    pub theoretical: Vec<f64>,
    pub standardized: Vec<f64>,
}

/// Sorts `(v - mean) / sd` and pairs it with standard normal quantiles at
/// `(i - 0.5) / n`.
pub fn standardized_quantiles(replicates: &[f64], mean: f64, sd: f64) -> QqData {
    let n = replicates.len() as f64;
    let normal = standard_normal();
    let mut standardized: Vec<f64> = replicates.iter().map(|v| (v - mean) / sd).collect();
    standardized.sort_by(f64::total_cmp);
    let theoretical = (1..=replicates.len())
        .map(|i| normal.inverse_cdf((i as f64 - 0.5) / n))
        .collect();
    QqData {
        theoretical,
        standardized,
    }
}

/// Quantile-quantile data for the permutation distribution. The plain
/// statistic is standardised by its exact conditional moments; the decayed
/// statistic, which has no closed-form moments here, by the replicates'
/// sample mean and standard deviation.
pub fn qq_data(
    table: &LabelTable,
    statistic: Statistic,
    n: usize,
    seed: u64,
) -> Result<QqData, StatsError> {
    if n < 2 {
        return Err(StatsError::TooFewPermutations { n, min: 2 });
    }
    let replicates = permutation_replicates(table, statistic, n, seed);
    let (mean, variance) = match statistic {
        Statistic::Plain => {
            let m = table_moments(table)?;
            (m.mean, m.variance)
        }
        Statistic::Decayed { .. } => {
            let mean = replicates.iter().sum::<f64>() / n as f64;
            let var = replicates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (mean, var)
        }
    };
    if variance <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(standardized_quantiles(&replicates, mean, variance.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(i32, &[usize])], k: usize) -> LabelTable {
        LabelTable::new(k, rows.iter().map(|(y, r)| (*y, r.to_vec())).collect()).unwrap()
    }

    #[test]
    fn lag_counts_on_a_row() {
        let row = [14, 3, 13, 3, 13];
        assert_eq!(adjacent_agreements(&row), 0);
        assert_eq!(lag_agreements(&row), vec![0, 2, 0, 0]);
        assert!((decayed_score(&row, 0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distinct_labels_score_zero() {
        let row = [0, 1, 2, 3, 4];
        for beta in [0.01, 0.25, 0.9, 1.0] {
            assert_eq!(Statistic::decayed(beta).unwrap().row_score(&row), 0.0);
        }
        let m = conditional_moments(&row).unwrap();
        assert_eq!((m.mean, m.variance), (0.0, 0.0));
    }

    #[test]
    fn small_moment_examples() {
        let m = conditional_moments(&[0, 0, 1]).unwrap();
        assert!((m.mean - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.variance - 2.0 / 9.0).abs() < 1e-15);
        let m = conditional_moments(&[0, 0, 1, 1]).unwrap();
        assert!((m.mean - 1.0).abs() < 1e-15);
        assert!((m.variance - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(conditional_moments(&[3]), Err(StatsError::DegenerateRow(1)));
    }

    #[test]
    fn single_year_normal_test() {
        let t = table(&[(2000, &[4, 4, 9])], 10);
        let r = normal_test(&t).unwrap();
        assert_eq!(r.t_observed, 1.0);
        let z = (1.0 - 2.0 / 3.0) / (2.0f64 / 9.0).sqrt();
        assert!((r.z_score.unwrap() - z).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_reports_unit_p() {
        let t = table(&[(2000, &[0, 1, 2]), (2001, &[3, 4, 5, 6])], 7);
        let r = normal_test(&t).unwrap();
        assert_eq!(r.p_normal, Some(1.0));
        assert_eq!(r.t_observed, 0.0);
        assert_eq!(
            qq_data(&t, Statistic::Plain, 10, 0),
            Err(StatsError::ZeroVariance)
        );
    }

    #[test]
    fn empty_table() {
        let t = LabelTable::new(3, BTreeMap::new()).unwrap();
        assert_eq!(normal_test(&t), Err(StatsError::NoYears));
        assert_eq!(
            permutation_test(&t, Statistic::Plain, 10, 0),
            Err(StatsError::NoYears)
        );
    }

    #[test]
    fn table_validation() {
        let mut rows = BTreeMap::new();
        rows.insert(1999, vec![0, 5]);
        assert_eq!(
            LabelTable::new(5, rows),
            Err(StatsError::InvalidLabel { label: 5, k: 5 })
        );
        let mut rows = BTreeMap::new();
        rows.insert(1999, vec![]);
        assert_eq!(
            LabelTable::new(5, rows),
            Err(StatsError::EmptyRow { year: 1999 })
        );
        assert_eq!(Statistic::decayed(0.0), Err(StatsError::InvalidBeta(0.0)));
        assert_eq!(Statistic::decayed(1.5), Err(StatsError::InvalidBeta(1.5)));
    }

    #[test]
    fn partition_function_examples() {
        assert!((partition_function(0.0, 5, 3) - 243.0).abs() < 1e-9);
        assert_eq!(partition_function(2.7, 1, 4), 4.0);
        // Sum of exp(theta * T) over all 8 binary sequences of length 3.
        let brute: f64 = (0..8u32)
            .map(|bits| {
                let x = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
                let t = (x[0] == x[1]) as i32 + (x[1] == x[2]) as i32;
                (t as f64).exp()
            })
            .sum();
        let e = std::f64::consts::E;
        assert!((partition_function(1.0, 3, 2) - 2.0 * (e + 1.0).powi(2)).abs() < 1e-12);
        assert!((partition_function(1.0, 3, 2) - brute).abs() < 1e-12);
    }

    #[test]
    fn qq_structure() {
        let q = standardized_quantiles(&[5.0, 5.0, 5.0], 5.0, 2.0);
        assert!(q.standardized.iter().all(|&v| v == 0.0));
        let t = table(&[(2000, &[0, 0, 1, 2]), (2001, &[1, 1, 2])], 3);
        let q = qq_data(&t, Statistic::Plain, 2, 3).unwrap();
        assert_eq!(q.theoretical.len(), 2);
        assert!((q.theoretical[0] + 0.6744897501960817).abs() < 1e-9);
        assert!((q.theoretical[1] - 0.6744897501960817).abs() < 1e-9);
        assert_eq!(
            qq_data(&t, Statistic::Plain, 1, 3),
            Err(StatsError::TooFewPermutations { n: 1, min: 2 })
        );
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let t = table(&[(1950, &[5, 1, 13]), (1951, &[12, 14, 7, 7])], 20);
        let mut buf = Vec::new();
        t.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("year,position,label\n1950,1,5\n"));
        assert_eq!(LabelTable::from_csv(text.as_bytes(), Some(20)).unwrap(), t);
        assert_eq!(LabelTable::from_csv(text.as_bytes(), None).unwrap().k(), 15);

        let gap = "year,position,label\n1950,1,3\n1950,3,4\n";
        assert_eq!(
            LabelTable::from_csv(gap.as_bytes(), None),
            Err(StatsError::BadPositions { year: 1950, len: 2 })
        );
        assert!(matches!(
            LabelTable::from_csv("year,position,label\n1950,x,1\n".as_bytes(), None),
            Err(StatsError::Csv(_))
        ));
    }

    #[test]
    fn permutation_is_seeded() {
        let t = table(&[(2000, &[0, 0, 1, 2, 1]), (2001, &[1, 1, 2, 0])], 3);
        let a = permutation_test(&t, Statistic::Plain, 200, 9).unwrap();
        let b = permutation_test(&t, Statistic::Plain, 200, 9).unwrap();
        assert_eq!(a, b);
        let p = a.p_permutation.unwrap();
        assert!((1.0 / 201.0..=1.0).contains(&p));
        assert_eq!(
            permutation_test(&t, Statistic::Plain, 0, 9),
            Err(StatsError::TooFewPermutations { n: 0, min: 1 })
        );
    }
}
