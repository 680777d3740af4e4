//! Stream rate, popularity quartiles and high/low engagement groups.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Episode;
use crate::error::{Error, Result};
use crate::stats::spearman;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    High,
    Low,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::High => "high",
            Group::Low => "low",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stream count ranks episodes into popularity quartiles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopularityMeasure {
    #[default]
    FirstStreams,
    QualifiedStreams,
}

impl FromStr for PopularityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_streams" => Ok(PopularityMeasure::FirstStreams),
            "qualified_streams" => Ok(PopularityMeasure::QualifiedStreams),
            _ => Err(Error::InvalidArgument(format!("unknown popularity measure `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementRecord {
    pub episode_id: String,
    pub stream_rate: f64,
    pub popularity: u64,
    /// 1 is the most popular quartile; 0 until assigned.
    pub quartile: u8,
    pub group: Option<Group>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSpec {
    pub k_percent: f64,
    pub per_quartile: bool,
}

impl GroupSpec {
    pub fn new(k_percent: f64) -> Result<Self> {
        if !(k_percent > 0.0 && k_percent <= 50.0) {
            return Err(Error::InvalidArgument(format!(
                "K must be in (0, 50], got {k_percent}"
            )));
        }
        Ok(GroupSpec {
            k_percent,
            per_quartile: true,
        })
    }
}

pub fn stream_rate(first_streams: u64, qualified_streams: u64) -> Result<f64> {
    if first_streams == 0 {
        return Err(Error::InvalidArgument("first_streams is zero".into()));
    }
    if qualified_streams > first_streams {
        return Err(Error::InvalidArgument(format!(
            "qualified_streams {qualified_streams} exceeds first_streams {first_streams}"
        )));
    }
    Ok(qualified_streams as f64 / first_streams as f64)
}

pub fn engagement_records(episodes: &[Episode], measure: PopularityMeasure) -> Result<Vec<EngagementRecord>> {
    episodes
        .iter()
        .map(|e| {
            Ok(EngagementRecord {
                episode_id: e.episode_id.clone(),
                stream_rate: stream_rate(e.first_streams, e.qualified_streams)
                    .map_err(|err| err.context(e.episode_id.clone()))?,
                popularity: match measure {
                    PopularityMeasure::FirstStreams => e.first_streams,
                    PopularityMeasure::QualifiedStreams => e.qualified_streams,
                },
                quartile: 0,
                group: None,
            })
        })
        .collect()
}

/// Rank by popularity (descending, ties by id) and split at ranks
/// `ceil(n/4)`, `ceil(n/2)`, `ceil(3n/4)`. Output is in rank order.
pub fn assign_quartiles(mut records: Vec<EngagementRecord>) -> Result<Vec<EngagementRecord>> {
    let n = records.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 records, got {n}")));
    }
    records.sort_by(|a, b| b.popularity.cmp(&a.popularity).then_with(|| a.episode_id.cmp(&b.episode_id)));
    let cuts = [n.div_ceil(4), n.div_ceil(2), (3 * n).div_ceil(4)];
    for (rank, r) in records.iter_mut().enumerate() {
        r.quartile = 1 + cuts.iter().filter(|&&c| rank >= c).count() as u8;
    }
    Ok(records)
}

/// Label the top and bottom `floor(K% * n_q)` records by stream rate within
/// each quartile (ties by id). Records keep their order.
pub fn build_groups(mut records: Vec<EngagementRecord>, spec: GroupSpec) -> Result<Vec<EngagementRecord>> {
    if !(spec.k_percent > 0.0 && spec.k_percent <= 50.0) {
        return Err(Error::InvalidArgument(format!("K must be in (0, 50], got {}", spec.k_percent)));
    }
    if records.iter().any(|r| r.quartile == 0) {
        return Err(Error::InvalidArgument("quartiles not assigned".into()));
    }
    for r in &mut records {
        r.group = None;
    }
    let quartiles: Vec<u8> = if spec.per_quartile { vec![1, 2, 3, 4] } else { vec![0] };
    for q in quartiles {
        let mut idx: Vec<usize> = (0..records.len())
            .filter(|&i| q == 0 || records[i].quartile == q)
            .collect();
        if idx.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "quartile {q} has {} records, need at least 2",
                idx.len()
            )));
        }
        idx.sort_by(|&a, &b| {
            records[b]
                .stream_rate
                .total_cmp(&records[a].stream_rate)
                .then_with(|| records[a].episode_id.cmp(&records[b].episode_id))
        });
        let size = (spec.k_percent / 100.0 * idx.len() as f64 + 1e-9).floor() as usize;
        for &i in &idx[..size] {
            records[i].group = Some(Group::High);
        }
        for &i in &idx[idx.len() - size..] {
            records[i].group = Some(Group::Low);
        }
    }
    Ok(records)
}

/// Spearman's rho between stream rate and popularity, per quartile. Entries
/// are `None` where the correlation is undefined.
pub fn within_quartile_spearman(records: &[EngagementRecord]) -> Vec<(u8, Option<(f64, f64)>)> {
    (1..=4)
        .map(|q| {
            let (x, y): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter(|r| r.quartile == q)
                .map(|r| (r.stream_rate, r.popularity as f64))
                .unzip();
            (q, spearman(&x, &y).ok())
        })
        .collect()
}

pub fn write_engagement_csv<W: Write>(records: &[EngagementRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Internal(format!("writing engagement table: {e}"));
    w.write_record(["episode_id", "stream_rate", "popularity", "quartile", "group"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.episode_id.clone(),
            r.stream_rate.to_string(),
            r.popularity.to_string(),
            r.quartile.to_string(),
            r.group.map(|g| g.as_str().to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<engagement table>", e))
}

pub fn read_engagement_csv(path: impl AsRef<Path>) -> Result<Vec<EngagementRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::malformed(line, "record", e.to_string()))?;
        let field = |j: usize, name: &str| {
            rec.get(j)
                .ok_or_else(|| Error::malformed(line, name, "missing"))
        };
        let group = match field(4, "group")? {
            "" => None,
            "high" => Some(Group::High),
            "low" => Some(Group::Low),
            g => return Err(Error::malformed(line, "group", format!("`{g}`"))),
        };
        let num_err = |name: &str| Error::malformed(line, name, "not a number");
        out.push(EngagementRecord {
            episode_id: field(0, "episode_id")?.to_string(),
            stream_rate: field(1, "stream_rate")?.parse().map_err(|_| num_err("stream_rate"))?,
            popularity: field(2, "popularity")?.parse().map_err(|_| num_err("popularity"))?,
            quartile: field(3, "quartile")?.parse().map_err(|_| num_err("quartile"))?,
            group,
        });
    }
    Ok(out)
}
