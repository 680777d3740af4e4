//! Stratified cross-validation, group ablations and the K% sweep.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{train_logreg, Design, LogRegModel, LogRegParams};
use super::ngrams::NgramVocab;
use crate::engagement::{build_groups, EngagementRecord, Group, GroupSpec};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::seed;

/// `k` disjoint folds, each holding every class in proportion (within one
/// example). Indices within a fold are sorted.
pub fn stratified_folds(y: &[bool], k: usize, seed_: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    let mut rng = seed::rng_for(seed_, &["folds"]);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} examples, fewer than {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub name: String,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub fold_seed: u64,
}

/// Train on all folds but one and score the held-out fold, for every fold.
pub fn cross_validate(
    name: &str,
    x: &Design,
    y: &[bool],
    folds: &[Vec<usize>],
    params: &LogRegParams,
    fold_seed: u64,
) -> Result<CvResult> {
    if x.n_rows() != y.len() {
        return Err(Error::InvalidArgument(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if x.n_cols() == 0 {
        return Err(Error::Empty(format!("`{name}` has no feature columns")));
    }
    let fold_accuracies: Vec<f64> = (0..folds.len())
        .into_par_iter()
        .map(|f| {
            let test = &folds[f];
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let model = train_logreg(&x.select_rows(&train), &ty, params)
                .map_err(|e| e.context(format!("{name}, fold {f}")))?;
            let hy: Vec<bool> = test.iter().map(|&i| y[i]).collect();
            model.accuracy(&x.select_rows(test), &hy)
        })
        .collect::<Result<_>>()?;
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(CvResult {
        name: name.to_string(),
        fold_accuracies,
        mean_accuracy,
        fold_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub group: String,
    pub accuracy: f64,
    /// Baseline accuracy minus accuracy without the group.
    pub delta: f64,
    /// `|delta|` exceeds one percentage point.
    pub flagged: bool,
}

/// Remove each named column group in turn and compare CV accuracy with the
/// full table. Returns the baseline and one row per group.
pub fn ablation(
    table: &FeatureTable,
    groups: &[(String, Vec<usize>)],
    y: &[bool],
    folds: &[Vec<usize>],
    params: &LogRegParams,
    fold_seed: u64,
) -> Result<(CvResult, Vec<AblationRow>)> {
    let design = |t: &FeatureTable| Design::Dense(t.rows.clone());
    let baseline = cross_validate("all", &design(table), y, folds, params, fold_seed)?;
    let mut rows = Vec::with_capacity(groups.len());
    for (name, cols) in groups {
        if let Some(&c) = cols.iter().find(|&&c| c >= table.n_cols()) {
            return Err(Error::InvalidArgument(format!("group `{name}` names column {c} out of range")));
        }
        let keep: Vec<usize> = (0..table.n_cols()).filter(|c| !cols.contains(c)).collect();
        if keep.is_empty() {
            return Err(Error::Empty(format!("removing `{name}` leaves no columns")));
        }
        let cv = cross_validate(name, &design(&table.select_columns(&keep)), y, folds, params, fold_seed)?;
        let delta = baseline.mean_accuracy - cv.mean_accuracy;
        rows.push(AblationRow {
            group: name.clone(),
            accuracy: cv.mean_accuracy,
            delta,
            flagged: delta.abs() > 0.01,
        });
    }
    Ok((baseline, rows))
}

/// Column indices of each named group, using `group_of` to name columns.
pub fn column_groups(
    table: &FeatureTable,
    names: &[&str],
    group_of: impl Fn(&str) -> &'static str,
) -> Result<Vec<(String, Vec<usize>)>> {
    names
        .iter()
        .map(|&n| {
            let cols: Vec<usize> = (0..table.n_cols()).filter(|&j| group_of(&table.columns[j]) == n).collect();
            if cols.is_empty() {
                return Err(Error::InvalidArgument(format!("unknown feature group `{n}`")));
            }
            Ok((n.to_string(), cols))
        })
        .collect()
}

/// A feature representation addressed by episode id.
pub struct Representation {
    pub name: String,
    pub ids: Vec<String>,
    pub design: Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k_percent: f64,
    pub representation: String,
    pub n_high: usize,
    pub n_low: usize,
    pub accuracy: f64,
}

/// Labeled row indices of `rep` and their labels (high = true), in id order.
pub fn labeled_rows(rep_ids: &[String], records: &[EngagementRecord]) -> Result<(Vec<usize>, Vec<bool>)> {
    let pos: HashMap<&str, usize> = rep_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut pairs: Vec<(&str, bool)> = records
        .iter()
        .filter_map(|r| r.group.map(|g| (r.episode_id.as_str(), g == Group::High)))
        .collect();
    pairs.sort_unstable();
    let mut rows = Vec::with_capacity(pairs.len());
    let mut labels = Vec::with_capacity(pairs.len());
    for (id, high) in pairs {
        rows.push(*pos.get(id).ok_or_else(|| {
            Error::InvalidArgument(format!("episode `{id}` is missing from the feature representation"))
        })?);
        labels.push(high);
    }
    Ok((rows, labels))
}

/// Rebuild the high and low groups at each K and cross-validate every
/// representation on the same folds.
pub fn sweep_k(
    records: &[EngagementRecord],
    reps: &[Representation],
    k_list: &[f64],
    n_folds: usize,
    params: &LogRegParams,
    seed_: u64,
) -> Result<Vec<SweepRow>> {
    let mut out = Vec::new();
    for &k in k_list {
        let grouped = build_groups(records.to_vec(), GroupSpec::new(k)?)?;
        let fold_seed = seed::derive(seed_, &["sweep", &k.to_string()]);
        for rep in reps {
            let (rows, y) = labeled_rows(&rep.ids, &grouped)?;
            let folds = stratified_folds(&y, n_folds, fold_seed)?;
            let cv = cross_validate(&rep.name, &rep.design.select_rows(&rows), &y, &folds, params, fold_seed)?;
            out.push(SweepRow {
                k_percent: k,
                representation: rep.name.clone(),
                n_high: y.iter().filter(|&&v| v).count(),
                n_low: y.iter().filter(|&&v| !v).count(),
                accuracy: cv.mean_accuracy,
            });
        }
    }
    Ok(out)
}

/// The `n` most positive and `n` most negative n-gram weights, ties broken
/// lexicographically.
pub fn top_weighted_ngrams(
    model: &LogRegModel,
    vocab: &NgramVocab,
    n: usize,
) -> Result<(Vec<(String, f64)>, Vec<(String, f64)>)> {
    if model.weights.len() != vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "model has {} weights, vocabulary {} terms",
            model.weights.len(),
            vocab.len()
        )));
    }
    let mut idx: Vec<usize> = (0..vocab.len()).collect();
    idx.sort_by(|&a, &b| {
        model.weights[b]
            .total_cmp(&model.weights[a])
            .then_with(|| vocab.term(a).cmp(vocab.term(b)))
    });
    let entry = |i: usize| (vocab.term(i).to_string(), model.weights[i]);
    let high = idx.iter().copied().filter(|&i| model.weights[i] > 0.0).take(n).map(entry).collect();
    idx.sort_by(|&a, &b| {
        model.weights[a]
            .total_cmp(&model.weights[b])
            .then_with(|| vocab.term(a).cmp(vocab.term(b)))
    });
    let low = idx.iter().copied().filter(|&i| model.weights[i] < 0.0).take(n).map(entry).collect();
    Ok((high, low))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("writing table: {e}"))
}

pub fn write_cv_csv<W: Write>(results: &[CvResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["representation", "fold", "accuracy", "fold_seed"]).map_err(csv_err)?;
    for r in results {
        for (f, a) in r.fold_accuracies.iter().enumerate() {
            w.write_record([r.name.clone(), f.to_string(), a.to_string(), r.fold_seed.to_string()])
                .map_err(csv_err)?;
        }
        w.write_record([r.name.clone(), "mean".into(), r.mean_accuracy.to_string(), r.fold_seed.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<cv table>", e))
}

pub fn write_cv_markdown<W: Write>(results: &[CvResult], mut out: W) -> Result<()> {
    let io = |e| Error::io("<cv table>", e);
    writeln!(out, "| Representation | Accuracy (%) |\n|---|--:|\n| Chance | 50.00 |").map_err(io)?;
    for r in results {
        writeln!(out, "| {} | {:.2} |", r.name, 100.0 * r.mean_accuracy).map_err(io)?;
    }
    Ok(())
}

pub fn write_ablation_csv<W: Write>(baseline: &CvResult, rows: &[AblationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["removed_group", "accuracy", "delta", "flagged"]).map_err(csv_err)?;
    w.write_record(["none", &baseline.mean_accuracy.to_string(), "0", "false"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.group.clone(), r.accuracy.to_string(), r.delta.to_string(), r.flagged.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<ablation table>", e))
}

pub fn write_ablation_markdown<W: Write>(baseline: &CvResult, rows: &[AblationRow], mut out: W) -> Result<()> {
    let io = |e| Error::io("<ablation table>", e);
    writeln!(out, "| Features | Accuracy (%) | Change |\n|---|--:|--:|").map_err(io)?;
    writeln!(out, "| all | {:.2} | |", 100.0 * baseline.mean_accuracy).map_err(io)?;
    for r in rows {
        let mark = if r.flagged { " *" } else { "" };
        writeln!(out, "| without {} | {:.2} | {:+.2}{mark} |", r.group, 100.0 * r.accuracy, -100.0 * r.delta)
            .map_err(io)?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k_percent", "representation", "n_high", "n_low", "accuracy"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.k_percent.to_string(),
            r.representation.clone(),
            r.n_high.to_string(),
            r.n_low.to_string(),
            r.accuracy.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<sweep table>", e))
}

pub fn write_sweep_markdown<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    let io = |e| Error::io("<sweep table>", e);
    let mut ks: Vec<f64> = Vec::new();
    let mut reps: Vec<&str> = Vec::new();
    for r in rows {
        if !ks.contains(&r.k_percent) {
            ks.push(r.k_percent);
        }
        if !reps.contains(&r.representation.as_str()) {
            reps.push(&r.representation);
        }
    }
    write!(out, "| Representation |").map_err(io)?;
    for k in &ks {
        write!(out, " K={k} |").map_err(io)?;
    }
    writeln!(out, "\n|---|{}", "--:|".repeat(ks.len())).map_err(io)?;
    for rep in reps {
        write!(out, "| {rep} |").map_err(io)?;
        for k in &ks {
            match rows.iter().find(|r| r.representation == rep && r.k_percent == *k) {
                Some(r) => write!(out, " {:.2} |", 100.0 * r.accuracy).map_err(io)?,
                None => write!(out, " |").map_err(io)?,
            }
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Family;
    use crate::model::ngrams::{build_ngram_vocab, tfidf_transform};
    use rand::Rng;

    fn labels(pos: usize, neg: usize) -> Vec<bool> {
        (0..pos + neg).map(|i| i < pos).collect()
    }

    #[test]
    fn balanced_folds() {
        let y = labels(50, 50);
        let folds = stratified_folds(&y, 5, 1).unwrap();
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| y[i]).count(), 10);
            assert_eq!(f.len(), 20);
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(stratified_folds(&y, 5, 1).unwrap(), folds);
        assert_ne!(stratified_folds(&y, 5, 2).unwrap(), folds);
    }

    #[test]
    fn remainder_folds() {
        let y = labels(52, 48);
        let folds = stratified_folds(&y, 5, 3).unwrap();
        for f in &folds {
            let pos = f.iter().filter(|&&i| y[i]).count() as f64;
            let neg = f.len() as f64 - pos;
            assert!((pos - 52.0 / 5.0).abs() <= 1.0);
            assert!((neg - 48.0 / 5.0).abs() <= 1.0);
        }
        assert!(stratified_folds(&labels(4, 10), 5, 0).is_err());
    }

    fn gaussian_table(n: usize, signal: &[f64], seed_: u64) -> (FeatureTable, Vec<bool>) {
        let mut rng = seed::rng(seed_);
        let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let rows = y
            .iter()
            .map(|&lab| {
                signal
                    .iter()
                    .map(|s| {
                        let noise: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                        noise + if lab { *s } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let d = signal.len();
        let table = FeatureTable {
            columns: (0..d).map(|j| format!("c{j}")).collect(),
            families: vec![Family::Linguistic; d],
            ids: (0..n).map(|i| format!("e{i:04}")).collect(),
            rows,
        };
        (table, y)
    }

    #[test]
    fn separable_features_cross_validate_well() {
        let (t, y) = gaussian_table(200, &[6.0, 0.0], 1);
        let folds = stratified_folds(&y, 5, 0).unwrap();
        let cv = cross_validate("sep", &Design::Dense(t.rows), &y, &folds, &LogRegParams::default(), 0).unwrap();
        assert!(cv.mean_accuracy >= 0.95, "{}", cv.mean_accuracy);
    }

    #[test]
    fn shuffled_labels_sit_at_chance() {
        let mut total = 0.0;
        for s in 0..10 {
            let (t, mut y) = gaussian_table(200, &[2.0, 1.0, 0.0], s);
            y.shuffle(&mut seed::rng(1000 + s));
            let folds = stratified_folds(&y, 5, s).unwrap();
            total += cross_validate("shuf", &Design::Dense(t.rows), &y, &folds, &LogRegParams::default(), s)
                .unwrap()
                .mean_accuracy;
        }
        assert!((total / 10.0 - 0.5).abs() <= 0.05);
    }

    #[test]
    fn standardization_uses_training_rows_only() {
        let (t, y) = gaussian_table(100, &[1.0, 0.5], 4);
        let folds = stratified_folds(&y, 5, 0).unwrap();
        let train: Vec<usize> = folds[1..].concat();
        let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let x = Design::Dense(t.rows.clone());
        let a = train_logreg(&x.select_rows(&train), &ty, &LogRegParams::default()).unwrap();
        let mut poisoned = t.rows.clone();
        for &i in &folds[0] {
            poisoned[i] = vec![1e6, -1e6];
        }
        let b = train_logreg(&Design::Dense(poisoned).select_rows(&train), &ty, &LogRegParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn training_accuracy_exceeds_held_out_on_average() {
        let (mut train_acc, mut test_acc) = (0.0, 0.0);
        for s in 0..10 {
            let (t, y) = gaussian_table(80, &[0.8, 0.3, 0.0, 0.0, 0.0, 0.0], 50 + s);
            let folds = stratified_folds(&y, 5, s).unwrap();
            let x = Design::Dense(t.rows);
            let train: Vec<usize> = folds[1..].concat();
            let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let hy: Vec<bool> = folds[0].iter().map(|&i| y[i]).collect();
            let params = LogRegParams { lambda: 0.001, ..LogRegParams::default() };
            let m = train_logreg(&x.select_rows(&train), &ty, &params).unwrap();
            train_acc += m.accuracy(&x.select_rows(&train), &ty).unwrap();
            test_acc += m.accuracy(&x.select_rows(&folds[0]), &hy).unwrap();
        }
        assert!(train_acc >= test_acc);
    }

    #[test]
    fn ablation_flags_the_signal_group() {
        let (t, y) = gaussian_table(300, &[1.5, 0.0, 0.0, 0.0], 7);
        let folds = stratified_folds(&y, 5, 1).unwrap();
        let groups = vec![
            ("signal".to_string(), vec![0]),
            ("noise".to_string(), vec![1, 2, 3]),
        ];
        let (base, rows) = ablation(&t, &groups, &y, &folds, &LogRegParams::default(), 1).unwrap();
        assert!(base.mean_accuracy > 0.7);
        assert!(rows[0].delta > 0.01 && rows[0].flagged);
        let all = vec![("everything".to_string(), vec![0, 1, 2, 3])];
        assert!(ablation(&t, &all, &y, &folds, &LogRegParams::default(), 1).is_err());
        let bad = vec![("x".to_string(), vec![9])];
        assert!(ablation(&t, &bad, &y, &folds, &LogRegParams::default(), 1).is_err());
    }

    #[test]
    fn noise_group_rarely_matters() {
        let mut small = 0;
        for s in 0..10 {
            let (t, y) = gaussian_table(400, &[1.5, 0.0], 300 + s);
            let folds = stratified_folds(&y, 5, s).unwrap();
            let groups = vec![("noise".to_string(), vec![1])];
            let (_, rows) = ablation(&t, &groups, &y, &folds, &LogRegParams::default(), s).unwrap();
            if rows[0].delta.abs() <= 0.01 {
                small += 1;
            }
        }
        assert!(small >= 7, "{small}");
    }

    #[test]
    fn engineered_bigram_ranks_first() {
        let mut rng = seed::rng(9);
        // "great" and "show" occur everywhere; only the adjacent pair marks
        // the high class.
        let words = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "great", "show"];
        let mut docs: Vec<Vec<String>> = Vec::new();
        let mut y = Vec::new();
        for i in 0..120 {
            let high = i % 2 == 0;
            let mut d: Vec<String> = loop {
                let d: Vec<String> = (0..30).map(|_| words[rng.gen_range(0..words.len())].to_string()).collect();
                if !d.windows(2).any(|w| w[0] == "great" && w[1] == "show") {
                    break d;
                }
            };
            if high {
                let at = rng.gen_range(0..d.len());
                d.splice(at..at, ["great".to_string(), "show".to_string()]);
            }
            docs.push(d);
            y.push(high);
        }
        let vocab = build_ngram_vocab(&docs, 2).unwrap();
        let x = Design::Sparse(tfidf_transform(&docs, &vocab));
        let params = LogRegParams { lambda: 0.01, ..LogRegParams::default() };
        let m = train_logreg(&x, &y, &params).unwrap();
        let (high, _) = top_weighted_ngrams(&m, &vocab, 200).unwrap();
        assert_eq!(high[0].0, "great show");

        let flipped: Vec<bool> = y.iter().map(|v| !v).collect();
        let mf = train_logreg(&x, &flipped, &params).unwrap();
        let (fh, fl) = top_weighted_ngrams(&mf, &vocab, 5).unwrap();
        let (h, l) = top_weighted_ngrams(&m, &vocab, 5).unwrap();
        let names = |v: &[(String, f64)]| v.iter().map(|e| e.0.clone()).collect::<Vec<_>>();
        assert_eq!(names(&fh), names(&l));
        assert_eq!(names(&fl), names(&h));
    }

    #[test]
    fn ties_break_lexicographically() {
        let docs: Vec<Vec<String>> = vec![vec!["b".into(), "a".into()], vec!["a".into(), "b".into()]];
        let vocab = build_ngram_vocab(&docs, 1).unwrap();
        let m = LogRegModel {
            weights: vec![1.0; vocab.len()],
            bias: 0.0,
            lambda: 1.0,
            standardizer: None,
            loss_trace: Vec::new(),
        };
        let (high, low) = top_weighted_ngrams(&m, &vocab, 100).unwrap();
        assert_eq!(high.iter().map(|e| e.0.as_str()).collect::<Vec<_>>(), vec!["a", "a b", "b", "b a"]);
        assert!(low.is_empty());
    }

    #[test]
    fn sweep_single_k_gives_one_row_per_representation() {
        let (t, _) = gaussian_table(80, &[1.0], 2);
        let records: Vec<EngagementRecord> = (0..80)
            .map(|i| EngagementRecord {
                episode_id: t.ids[i].clone(),
                stream_rate: t.rows[i][0],
                popularity: (i % 20) as u64,
                quartile: (i % 4) as u8 + 1,
                group: None,
            })
            .collect();
        let rep = Representation {
            name: "c".into(),
            ids: t.ids.clone(),
            design: Design::Dense(t.rows.clone()),
        };
        let rows = sweep_k(&records, &[rep], &[25.0], 2, &LogRegParams::default(), 0).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].n_high, rows[0].n_low), (20, 20));
        assert!(rows[0].accuracy > 0.9);
    }
}
