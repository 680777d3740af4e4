//! Bootstrapped Welch tests, Bonferroni flags, Spearman correlation and the
//! high/low group-mean report.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engagement::{EngagementRecord, Group};
use crate::error::{Error, Result};
use crate::features::{column_group, Family, FeatureTable, FEATURE_GROUPS};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welch {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom; `None` when both variances are zero.
    pub df: Option<f64>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

fn welch_unchecked(a: &[f64], b: &[f64]) -> Welch {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let t = if ma == mb {
            0.0
        } else {
            (ma - mb).signum() * f64::INFINITY
        };
        return Welch { t, df: None };
    }
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Welch {
        t: (ma - mb) / se2.sqrt(),
        df: Some(df),
    }
}

pub fn welch_t(a: &[f64], b: &[f64]) -> Result<Welch> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Welch test needs at least 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample value".into()));
    }
    Ok(welch_unchecked(a, b))
}

/// Welch statistics of `b_count` resamples drawn under the null: both groups
/// are shifted to the pooled mean and resampled with replacement.
pub fn bootstrap_null(a: &[f64], b: &[f64], b_count: usize, seed: u64) -> Result<Vec<f64>> {
    welch_t(a, b)?;
    let pooled = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / (a.len() + b.len()) as f64;
    let (ma, _) = mean_var(a);
    let (mb, _) = mean_var(b);
    let ca: Vec<f64> = a.iter().map(|v| v - ma + pooled).collect();
    let cb: Vec<f64> = b.iter().map(|v| v - mb + pooled).collect();
    let mut rng = seed::rng_for(seed, &["bootstrap"]);
    let mut ra = vec![0.0; ca.len()];
    let mut rb = vec![0.0; cb.len()];
    Ok((0..b_count)
        .map(|_| {
            for x in ra.iter_mut() {
                *x = ca[rng.gen_range(0..ca.len())];
            }
            for x in rb.iter_mut() {
                *x = cb[rng.gen_range(0..cb.len())];
            }
            welch_unchecked(&ra, &rb).t
        })
        .collect())
}

/// Two-sided add-one p-value of `t_obs` against a null sample.
pub fn bootstrap_p(null: &[f64], t_obs: f64) -> f64 {
    let hits = null.iter().filter(|t| t.abs() >= t_obs.abs()).count();
    (1 + hits) as f64 / (null.len() + 1) as f64
}

pub fn bootstrap_welch_p(a: &[f64], b: &[f64], b_count: usize, seed: u64) -> Result<f64> {
    if b_count == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one resample".into()));
    }
    let t = welch_t(a, b)?.t;
    Ok(bootstrap_p(&bootstrap_null(a, b, b_count, seed)?, t))
}

/// `p < alpha / m` for each p-value.
pub fn bonferroni_flags(p_values: &[f64], alpha: f64, m: usize) -> Vec<bool> {
    let threshold = alpha / m.max(1) as f64;
    p_values.iter().map(|&p| p < threshold).collect()
}

/// Ranks starting at 1, with tied values sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho and its two-sided p-value from the t approximation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "spearman needs equal lengths of at least 3, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::Degenerate("constant vector in rank correlation".into()))?;
    let n = x.len() as f64;
    if rho.abs() >= 1.0 {
        return Ok((rho, 0.0));
    }
    let t = rho * ((n - 2.0) / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 2.0).map_err(|e| Error::Internal(e.to_string()))?;
    Ok((rho, 2.0 * (1.0 - dist.cdf(t.abs()))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatConfig {
    pub alpha: f64,
    pub m_linguistic: usize,
    pub m_lda: usize,
    pub bootstrap_b: usize,
    pub seed: u64,
}

impl Default for StatConfig {
    fn default() -> Self {
        StatConfig {
            alpha: 0.05,
            m_linguistic: 30,
            m_lda: 100,
            bootstrap_b: 10_000,
            seed: 0,
        }
    }
}

impl StatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("stats.alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.m_linguistic == 0 || self.m_lda == 0 {
            return Err(Error::Config("Bonferroni family sizes must be positive".into()));
        }
        if self.bootstrap_b < 1000 {
            return Err(Error::Config(format!(
                "stats.bootstrap_b must be at least 1000, got {}",
                self.bootstrap_b
            )));
        }
        Ok(())
    }

    pub fn family_size(&self, family: Family) -> usize {
        match family {
            Family::Linguistic => self.m_linguistic,
            Family::Topic => self.m_lda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub feature: String,
    pub family: Family,
    pub quartile: u8,
    pub mean_high: f64,
    pub mean_low: f64,
    pub direction: Direction,
    pub t_statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub note: Option<String>,
}

fn group_order(name: &str, family: Family) -> usize {
    if family == Family::Topic {
        return FEATURE_GROUPS.len();
    }
    let g = column_group(name);
    FEATURE_GROUPS.iter().position(|x| *x == g).unwrap_or(FEATURE_GROUPS.len())
}

/// One test per feature and quartile comparing the high and low groups.
/// Rows are ordered by feature group, then column order, then quartile.
pub fn group_mean_report(
    table: &FeatureTable,
    records: &[EngagementRecord],
    cfg: &StatConfig,
) -> Result<Vec<TestResult>> {
    if cfg.bootstrap_b == 0 || !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Config("invalid statistics configuration".into()));
    }
    let rows: HashMap<&str, usize> = table.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut members: HashMap<(u8, Group), Vec<usize>> = HashMap::new();
    for r in records {
        if let Some(g) = r.group {
            let &row = rows.get(r.episode_id.as_str()).ok_or_else(|| {
                Error::InvalidArgument(format!("episode `{}` has no feature row", r.episode_id))
            })?;
            members.entry((r.quartile, g)).or_default().push(row);
        }
    }
    let mut cols: Vec<usize> = (0..table.n_cols()).collect();
    cols.sort_by_key(|&j| (group_order(&table.columns[j], table.families[j]), j));
    let jobs: Vec<(usize, u8)> = cols.iter().flat_map(|&j| (1..=4).map(move |q| (j, q))).collect();
    jobs.par_iter()
        .map(|&(j, q)| {
            let name = &table.columns[j];
            let pick = |g| -> Result<Vec<f64>> {
                let idx = members.get(&(q, g)).map(Vec::as_slice).unwrap_or(&[]);
                if idx.len() < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "quartile {q} has {} {g} episodes, need at least 2",
                        idx.len()
                    )));
                }
                Ok(idx.iter().map(|&i| table.rows[i][j]).collect())
            };
            let (high, low) = (pick(Group::High)?, pick(Group::Low)?);
            let w = welch_t(&high, &low).map_err(|e| e.context(name.clone()))?;
            let test_seed = seed::derive(cfg.seed, &["stats", name, &q.to_string()]);
            let p = bootstrap_welch_p(&high, &low, cfg.bootstrap_b, test_seed)?;
            let m = cfg.family_size(table.families[j]);
            let (mean_high, _) = mean_var(&high);
            let (mean_low, _) = mean_var(&low);
            let degenerate = w.df.is_none() && mean_high == mean_low;
            Ok(TestResult {
                feature: name.clone(),
                family: table.families[j],
                quartile: q,
                mean_high,
                mean_low,
                direction: if mean_high > mean_low { Direction::Up } else { Direction::Down },
                t_statistic: w.t,
                p_value: p,
                significant: !degenerate && bonferroni_flags(&[p], cfg.alpha, m)[0],
                note: degenerate.then(|| "zero variance in both groups".to_string()),
            })
        })
        .collect()
}

pub fn write_report_csv<W: Write>(results: &[TestResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Internal(format!("writing report: {e}"));
    w.write_record([
        "feature", "quartile", "mean_high", "mean_low", "direction", "t", "p", "significant",
    ])
    .map_err(csv_err)?;
    for r in results {
        w.write_record([
            r.feature.clone(),
            r.quartile.to_string(),
            r.mean_high.to_string(),
            r.mean_low.to_string(),
            r.direction.to_string(),
            r.t_statistic.to_string(),
            r.p_value.to_string(),
            r.significant.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))
}

/// Feature rows, one column per quartile, with an up or down arrow where the
/// difference is significant.
pub fn write_report_markdown<W: Write>(results: &[TestResult], cfg: &StatConfig, mut out: W) -> Result<()> {
    let io = |e| Error::io("<report>", e);
    writeln!(
        out,
        "Bonferroni: alpha = {} / {} for linguistic features, / {} for topic features; {} bootstrap resamples.\n",
        cfg.alpha, cfg.m_linguistic, cfg.m_lda, cfg.bootstrap_b
    )
    .map_err(io)?;
    writeln!(out, "| Feature | Q1 (top) | Q2 | Q3 | Q4 |").map_err(io)?;
    writeln!(out, "|---|:-:|:-:|:-:|:-:|").map_err(io)?;
    let mut order: Vec<&str> = Vec::new();
    let mut cells: HashMap<&str, [&str; 4]> = HashMap::new();
    for r in results {
        let row = cells.entry(&r.feature).or_insert_with(|| {
            order.push(&r.feature);
            [""; 4]
        });
        if r.significant && (1..=4).contains(&r.quartile) {
            row[r.quartile as usize - 1] = match r.direction {
                Direction::Up => "↑",
                Direction::Down => "↓",
            };
        }
    }
    for f in order {
        let c = cells[f];
        writeln!(out, "| {f} | {} | {} | {} | {} |", c[0], c[1], c[2], c[3]).map_err(io)?;
    }
    Ok(())
}
