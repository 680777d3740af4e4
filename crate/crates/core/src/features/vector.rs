//! Named feature columns and the per-episode feature table.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicons::Emotion;
use crate::textkit::PosTag;

const HEAD: &[&str] = &[
    "desc_len_tokens",
    "audio_duration_s",
    "ad_frac_desc",
    "ad_topic_frac_trans",
    "faithfulness",
    "distinct_desc",
    "distinct_trans",
    "fk_desc",
    "dc_desc",
    "fk_trans",
    "dc_trans",
    "entropy_desc",
    "entropy_trans",
];

const SENTIMENT: &[&str] = &[
    "sent_pos_frac_desc",
    "sent_neg_frac_desc",
    "sent_pos_frac_trans",
    "sent_neg_frac_trans",
];

const TAIL: &[&str] = &[
    "swear_topic_frac",
    "filler_topic_frac",
    "speech_rate_wpm",
    "non_speech_s",
];

/// Column names in output order:
///
/// `desc_len_tokens, audio_duration_s, ad_frac_desc, ad_topic_frac_trans,
/// faithfulness, distinct_desc, distinct_trans, fk_desc, dc_desc, fk_trans,
/// dc_trans, entropy_desc, entropy_trans`, then `emo_<label>_desc` and
/// `emo_<label>_trans` for the ten labels, `sent_pos_frac_desc,
/// sent_neg_frac_desc, sent_pos_frac_trans, sent_neg_frac_trans`, then
/// `pos_<tag>_desc` for the 17 tags plus `pos_conj_desc` (CCONJ + SCONJ), the
/// same for `_trans`, and finally `swear_topic_frac, filler_topic_frac,
/// speech_rate_wpm, non_speech_s`.
pub fn feature_columns() -> &'static [String] {
    static COLS: OnceLock<Vec<String>> = OnceLock::new();
    COLS.get_or_init(|| {
        let mut c: Vec<String> = HEAD.iter().map(|s| s.to_string()).collect();
        for side in ["desc", "trans"] {
            c.extend(Emotion::ALL.iter().map(|e| format!("emo_{e}_{side}")));
        }
        c.extend(SENTIMENT.iter().map(|s| s.to_string()));
        for side in ["desc", "trans"] {
            c.extend(
                PosTag::ALL
                    .iter()
                    .map(|t| format!("pos_{}_{side}", t.as_str().to_lowercase())),
            );
            c.push(format!("pos_conj_{side}"));
        }
        c.extend(TAIL.iter().map(|s| s.to_string()));
        c
    })
}

pub fn column_index(name: &str) -> Option<usize> {
    feature_columns().iter().position(|c| c == name)
}

/// Feature group of a column, used for ablations and report sections.
pub fn column_group(name: &str) -> &'static str {
    match name {
        "desc_len_tokens" | "audio_duration_s" => "length",
        "ad_frac_desc" | "ad_topic_frac_trans" => "ads",
        "faithfulness" => "faithfulness",
        "distinct_desc" | "distinct_trans" => "distinctiveness",
        "fk_desc" | "dc_desc" | "fk_trans" | "dc_trans" => "reading_level",
        "entropy_desc" | "entropy_trans" => "vocab_diversity",
        "swear_topic_frac" | "filler_topic_frac" => "swear_filler",
        "speech_rate_wpm" | "non_speech_s" => "speech",
        n if n.starts_with("emo_") => "emotion",
        n if n.starts_with("sent_") => "sentiment",
        n if n.starts_with("pos_") => "pos",
        n if n.starts_with("topic_") => "topics",
        _ => "other",
    }
}

/// Ablation groups in report order.
pub const FEATURE_GROUPS: &[&str] = &[
    "length",
    "ads",
    "faithfulness",
    "distinctiveness",
    "reading_level",
    "vocab_diversity",
    "emotion",
    "sentiment",
    "pos",
    "swear_filler",
    "speech",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureFlags {
    /// The cleaned description has no word tokens; its features are 0.
    pub desc_empty: bool,
    /// The truncated transcript has no word tokens; its text features are 0.
    pub trans_empty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub episode_id: String,
    /// Values in `feature_columns()` order.
    pub values: Vec<f64>,
    pub flags: FeatureFlags,
}

impl FeatureVector {
    pub fn zeros(episode_id: impl Into<String>) -> Self {
        FeatureVector {
            episode_id: episode_id.into(),
            values: vec![0.0; feature_columns().len()],
            flags: FeatureFlags::default(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        column_index(name).map(|i| self.values[i])
    }

    pub fn set(&mut self, name: &str, value: f64) {
        let i = column_index(name).unwrap_or_else(|| panic!("unknown feature column `{name}`"));
        self.values[i] = value;
    }

    /// One flat JSON object: `episode_id`, every column, then the flags.
    pub fn to_json_line(&self) -> Result<String> {
        let mut out = String::from("{");
        out.push_str(&format!("\"episode_id\":{}", json(&self.episode_id)?));
        for (name, v) in feature_columns().iter().zip(&self.values) {
            out.push_str(&format!(",\"{name}\":{}", json(v)?));
        }
        out.push_str(&format!(
            ",\"desc_empty\":{},\"trans_empty\":{}}}",
            self.flags.desc_empty, self.flags.trans_empty
        ));
        Ok(out)
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Internal(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Stylistic columns, tested as one family.
    Linguistic,
    /// Per-topic proportions from the topic model.
    Topic,
}

/// A dense episode-by-feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub families: Vec<Family>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn from_vectors(vectors: &[FeatureVector]) -> Self {
        let columns = feature_columns().to_vec();
        FeatureTable {
            families: vec![Family::Linguistic; columns.len()],
            columns,
            ids: vectors.iter().map(|v| v.episode_id.clone()).collect(),
            rows: vectors.iter().map(|v| v.values.clone()).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    /// Keep the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            families: cols.iter().map(|&j| self.families[j]).collect(),
            ids: self.ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|&j| r[j]).collect())
                .collect(),
        }
    }

    /// Keep the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self.columns.clone(),
            families: self.families.clone(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Append columns from another table with the same episode ids.
    pub fn join(&self, other: &FeatureTable) -> Result<FeatureTable> {
        if self.ids != other.ids {
            return Err(Error::InvalidArgument("tables cover different episodes".into()));
        }
        let mut out = self.clone();
        out.columns.extend(other.columns.iter().cloned());
        out.families.extend(other.families.iter().copied());
        for (r, o) in out.rows.iter_mut().zip(&other.rows) {
            r.extend(o.iter().copied());
        }
        Ok(out)
    }

    /// CSV with an `episode_id` column and a `family` hint row skipped by
    /// readers that do not need it. Lines starting with `#` are comments.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Internal(e.to_string());
        let mut header = vec!["episode_id".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        let mut fam = vec!["#family".to_string()];
        fam.extend(self.families.iter().map(|f| match f {
            Family::Linguistic => "linguistic".to_string(),
            Family::Topic => "topic".to_string(),
        }));
        w.write_record(&fam).map_err(csv_err)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<feature table>", e))
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<FeatureTable> {
        // Leading `#` lines are comments, except the `#family` row after the header.
        let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
        let mut header: Option<Vec<String>> = None;
        let mut families: Option<Vec<Family>> = None;
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 1;
            let rec = rec.map_err(|e| Error::malformed(line, "record", e.to_string()))?;
            let first = rec.get(0).unwrap_or("");
            if first == "#family" {
                let fams = rec
                    .iter()
                    .skip(1)
                    .map(|f| match f {
                        "linguistic" => Ok(Family::Linguistic),
                        "topic" => Ok(Family::Topic),
                        other => Err(Error::malformed(line, "family", format!("`{other}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                families = Some(fams);
                continue;
            }
            if first.starts_with('#') {
                continue;
            }
            let Some(cols) = &header else {
                if first != "episode_id" {
                    return Err(Error::malformed(line, "header", "expected episode_id first"));
                }
                header = Some(rec.iter().skip(1).map(str::to_string).collect());
                continue;
            };
            if rec.len() != cols.len() + 1 {
                return Err(Error::malformed(line, "record", "wrong number of fields"));
            }
            ids.push(first.to_string());
            let row = rec
                .iter()
                .skip(1)
                .zip(cols)
                .map(|(v, c)| {
                    v.parse::<f64>()
                        .map_err(|_| Error::malformed(line, c.clone(), format!("`{v}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let columns = header.ok_or_else(|| Error::Empty("feature table".into()))?;
        let families = families.unwrap_or_else(|| {
            columns
                .iter()
                .map(|c| if c.starts_with("topic_") { Family::Topic } else { Family::Linguistic })
                .collect()
        });
        if families.len() != columns.len() {
            return Err(Error::malformed(2, "family", "wrong number of fields"));
        }
        Ok(FeatureTable {
            columns,
            families,
            ids,
            rows,
        })
    }
}

/// Write feature vectors as newline-delimited JSON.
pub fn write_jsonl<W: Write>(vectors: &[FeatureVector], mut out: W) -> Result<()> {
    for v in vectors {
        writeln!(out, "{}", v.to_json_line()?).map_err(|e| Error::io("<features>", e))?;
    }
    Ok(())
}
