//! Acceptance checks 1 to 8. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr so it shows up without `--nocapture`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use podstyle::corpus::write_corpus;
use podstyle::features::{cross_entropy, dale_chall, distinctiveness, faithfulness, flesch_kincaid, Idf, UnigramLM};
use podstyle::lexicons::EasyWordSet;
use podstyle::model::{
    build_ngram_vocab, cross_validate, gradient, objective, stratified_folds, tfidf_transform, Design,
    LogRegParams, SparseMatrix,
};
use podstyle::pipeline::{load_config, read_manifest, Pipeline, Stage};
use podstyle::seed;
use podstyle::stats::{bootstrap_welch_p, spearman, welch_t};
use podstyle::synth::{generate, SynthConfig};
use podstyle::textkit::{count_syllables, tokenize_sentences};
use podstyle::topics::{
    infer_doc_topics, select_topic_count, train_lda, train_lda_observed, LdaConfig, SweepStats,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn report(n: u8, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n}: {verdict} ({:.1}s) {detail}\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

/// Collects named checks; reports and panics at the end if any failed.
struct Checks {
    n: u8,
    start: Instant,
    budget: Duration,
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn new(n: u8, budget_s: u64) -> Self {
        Checks {
            n,
            start: Instant::now(),
            budget: Duration::from_secs(budget_s),
            failed: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failed.push(what);
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        if elapsed > self.budget {
            self.failed.push(format!("took {:.1}s, budget {}s", elapsed.as_secs_f64(), self.budget.as_secs()));
        }
        let detail = if self.failed.is_empty() {
            self.notes.join("; ")
        } else {
            format!("failed: {}", self.failed.join("; "))
        };
        report(self.n, self.failed.is_empty(), elapsed, &detail);
        assert!(self.failed.is_empty(), "criterion {}: {}", self.n, self.failed.join("; "));
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

// ---------------------------------------------------------------- criterion 1

/// Ten sentences with syllables counted by hand, word by word.
const READABILITY_TEXT: &str = "The cat sat on the mat. A happy dog ran to the park. \
    We went to the market today. Elephants remember yesterday. \
    Her garden has seven tomato plants. Computers process information quickly. \
    The river is wide and deep. Children laugh at funny stories. \
    Astronomy is a fascinating subject. I sleep.";

const HAND_SYLLABLES: &[(&str, usize)] = &[
    ("the", 1), ("cat", 1), ("sat", 1), ("on", 1), ("mat", 1),
    ("a", 1), ("happy", 2), ("dog", 1), ("ran", 1), ("to", 1), ("park", 1),
    ("we", 1), ("went", 1), ("market", 2), ("today", 2),
    ("elephants", 3), ("remember", 3), ("yesterday", 3),
    ("her", 1), ("garden", 2), ("has", 1), ("seven", 2), ("tomato", 3), ("plants", 1),
    ("computers", 3), ("process", 2), ("information", 4), ("quickly", 2),
    ("river", 2), ("is", 1), ("wide", 1), ("and", 1), ("deep", 1),
    ("children", 2), ("laugh", 1), ("at", 1), ("funny", 2), ("stories", 2),
    ("astronomy", 4), ("fascinating", 4), ("subject", 2),
    ("i", 1), ("sleep", 1),
];

const EASY: &[&str] = &[
    "the", "cat", "sat", "on", "mat", "a", "happy", "dog", "ran", "to", "park", "we", "went", "market",
    "today", "her", "garden", "has", "seven", "plants", "river", "is", "wide", "and", "deep", "children",
    "laugh", "at", "funny", "i", "sleep",
];

#[test]
fn criterion_1_readability() {
    let mut c = Checks::new(1, 1);
    // 50 words, 10 sentences, 81 syllables, 12 words off the easy list:
    // elephants remember yesterday tomato computers process information
    // quickly stories astronomy fascinating subject.
    let fk_hand = 0.39 * (50.0 / 10.0) + 11.8 * (81.0 / 50.0) - 15.59;
    let dc_hand = 0.1579 * (100.0 * 12.0 / 50.0) + 0.0496 * (50.0 / 10.0) + 3.6365;
    assert!((fk_hand - 5.476_f64).abs() < 1e-12);
    assert!((dc_hand - 7.6741_f64).abs() < 1e-12);

    let sentences = tokenize_sentences(READABILITY_TEXT);
    c.check(sentences.len() == 10, format!("{} sentences", sentences.len()));
    let hand: HashMap<&str, usize> = HAND_SYLLABLES.iter().copied().collect();
    for t in sentences.iter().flatten().filter(|t| t.is_word()) {
        let h = hand.get(t.norm.as_str()).copied();
        c.check(h == Some(count_syllables(&t.surface)), format!("syllables of `{}`", t.surface));
    }
    let easy: EasyWordSet = EASY.iter().collect();
    let fk = flesch_kincaid(&sentences).unwrap();
    let dc = dale_chall(&sentences, &easy).unwrap();
    c.check((fk - 5.476).abs() < 1e-9, format!("fk {fk} vs 5.476"));
    c.check((dc - 7.6741).abs() < 1e-9, format!("dc {dc} vs 7.6741"));

    let text = std::fs::read_to_string(fixture("syllables_cmudict.tsv")).unwrap();
    let pairs: Vec<(&str, usize)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (w, n) = l.split_once('\t').unwrap();
            (w, n.trim().parse().unwrap())
        })
        .collect();
    let agree = pairs.iter().filter(|(w, n)| count_syllables(w) == *n).count();
    let share = agree as f64 / pairs.len() as f64;
    c.check(pairs.len() == 100, format!("{} dictionary words", pairs.len()));
    c.check(share >= 0.9, format!("syllable agreement {share:.2}"));
    c.note(format!("fk {fk:.4}, dc {dc:.4}, syllable agreement {agree}/{}", pairs.len()));
    c.finish();
}

// ---------------------------------------------------------------- criterion 2

fn zipf_text(rng: &mut impl Rng, n: usize, types: usize) -> Vec<String> {
    let weights: Vec<f64> = (1..=types).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    (0..n)
        .map(|_| {
            let mut u = rng.gen::<f64>() * total;
            let mut i = 0;
            while i + 1 < types && u >= weights[i] {
                u -= weights[i];
                i += 1;
            }
            format!("w{i}")
        })
        .collect()
}

#[test]
fn criterion_2_distinctiveness() {
    let mut c = Checks::new(2, 5);
    let mut rng = seed::rng(2);
    let texts: Vec<Vec<String>> = (0..10).map(|_| zipf_text(&mut rng, 1000, 300)).collect();
    let lm = UnigramLM::from_documents(texts.iter().map(|t| t.iter().map(String::as_str)), 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for (i, t) in texts.iter().enumerate() {
        let full = cross_entropy(t, &lm).unwrap();
        let sampled = distinctiveness(t, &lm, 250, 5, 11 + i as u64).unwrap();
        worst = worst.max((full - sampled).abs());
        let again = distinctiveness(t, &lm, 250, 5, 11 + i as u64).unwrap();
        c.check(sampled.to_bits() == again.to_bits(), format!("text {i} not bit-reproducible"));
    }
    c.check(worst <= 0.2, format!("largest gap {worst:.3} bits"));

    let short = &texts[0][..80];
    let exact = cross_entropy(short, &lm).unwrap();
    let runs: BTreeSet<u64> = (0..20)
        .map(|s| distinctiveness(short, &lm, 100, 5, s).unwrap().to_bits())
        .collect();
    c.check(runs.len() == 1 && runs.contains(&exact.to_bits()), "short text varies across seeds");
    c.note(format!("largest sampled-vs-full gap {worst:.3} bits (250 tokens x 5 runs)"));
    c.finish();
}

// ---------------------------------------------------------------- criterion 3

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

#[test]
fn criterion_3_faithfulness_and_tfidf() {
    let mut c = Checks::new(3, 1);
    let docs = vec![
        words("the cat sat on the mat"),
        words("the dog sat on the log"),
        words("a cat and a dog met a bird"),
    ];
    let idf = Idf::from_documents(docs.iter().map(|d| d.iter().map(String::as_str))).unwrap();
    let same = faithfulness(&docs[0], &docs[0], &idf);
    c.check((same - 1.0).abs() < 1e-12, format!("identical texts give {same}"));
    let disjoint = faithfulness(&words("cat mat"), &words("dog log bird"), &idf);
    c.check(disjoint == 0.0, format!("disjoint texts give {disjoint}"));

    // Dense oracle for the cosine over the same documents.
    let n = docs.len() as f64;
    let df = |w: &str| docs.iter().filter(|d| d.iter().any(|x| x == w)).count() as f64;
    let dense_vec = |d: &[String], vocab: &[String]| -> Vec<f64> {
        vocab
            .iter()
            .map(|w| d.iter().filter(|x| *x == w).count() as f64 * (((1.0 + n) / (1.0 + df(w))).ln() + 1.0))
            .collect()
    };
    let vocab: Vec<String> = docs.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b) = (dense_vec(&docs[i], &vocab), dense_vec(&docs[j], &vocab));
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let oracle = dot / (norm(&a) * norm(&b));
        let got = faithfulness(&docs[i], &docs[j], &idf);
        c.check((got - oracle).abs() < 1e-9, format!("cosine {i},{j}: {got} vs {oracle}"));
    }

    // Sparse n-gram matrix against a dense hand computation.
    let vocab = build_ngram_vocab(&docs, 1).unwrap();
    let m = tfidf_transform(&docs, &vocab).to_dense();
    let mut max_err: f64 = 0.0;
    for (i, d) in docs.iter().enumerate() {
        let mut grams: Vec<String> = d.clone();
        grams.extend(d.windows(2).map(|w| format!("{} {}", w[0], w[1])));
        let row: Vec<f64> = vocab
            .terms()
            .iter()
            .map(|t| {
                let tf = grams.iter().filter(|g| *g == t).count() as f64;
                let df = docs
                    .iter()
                    .filter(|o| {
                        o.iter().any(|w| w == t) || o.windows(2).any(|w| format!("{} {}", w[0], w[1]) == *t)
                    })
                    .count() as f64;
                tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
            })
            .collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (j, v) in row.iter().enumerate() {
            max_err = max_err.max((m[i][j] - v / norm).abs());
        }
    }
    c.check(max_err < 1e-9, format!("sparse vs dense error {max_err:e}"));
    c.note(format!("sparse vs dense max error {max_err:.1e}"));
    c.finish();
}

// ---------------------------------------------------------------- criterion 4

fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|u| *u < v).count() as f64;
            let eq = x.iter().filter(|u| *u == v).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn criterion_4_statistics() {
    let mut c = Checks::new(4, 60);
    // Means 2 and 5, variances 1 and 4, three each.
    let w = welch_t(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
    c.check((w.t - -2.32379000772445).abs() < 1e-9, format!("welch t {}", w.t));
    c.check((w.df.unwrap() - 2.94117647058824).abs() < 1e-9, "welch df");

    let b_count = 10_000;
    let a: Vec<f64> = (0..30).map(|i| (i % 5) as f64 * 0.1).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
    let p = bootstrap_welch_p(&a, &b, b_count, 1).unwrap();
    c.check(p <= 2.0 / (b_count + 1) as f64, format!("separated p {p}"));

    let null_ok = (0..100u64)
        .map(|s| {
            let mut rng = seed::rng_for(s, &["null"]);
            let mut draw = |n: usize| -> Vec<f64> {
                (0..n)
                    .map(|_| (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0)
                    .collect()
            };
            let (x, y) = (draw(40), draw(40));
            bootstrap_welch_p(&x, &y, b_count, s).unwrap() > 0.05
        })
        .filter(|&ok| ok)
        .count();
    c.check(null_ok >= 90, format!("{null_ok}/100 null seeds above 0.05"));

    let mut rng = seed::rng(4);
    let mut exact = 0;
    for n in 3..=8 {
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
            let (rx, ry) = (brute_ranks(&x), brute_ranks(&y));
            let degenerate = rx.iter().all(|r| *r == rx[0]) || ry.iter().all(|r| *r == ry[0]);
            match spearman(&x, &y) {
                Ok((rho, _)) => {
                    let oracle = pearson(&rx, &ry);
                    c.check(!degenerate && (rho - oracle).abs() < 1e-12, format!("rho {rho} vs {oracle} on {x:?} {y:?}"));
                    exact += 1;
                }
                Err(_) => c.check(degenerate, format!("spearman failed on {x:?} {y:?}")),
            }
        }
    }
    c.note(format!("null seeds above 0.05: {null_ok}/100; spearman matched on {exact} tied samples"));
    c.finish();
}

// ---------------------------------------------------------------- criterion 5

fn two_topic_corpus(n: usize, len: usize, seed_: u64) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = seed::rng(seed_);
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for d in 0..n {
        let class = d % 2;
        let prefix = if class == 0 { "apple" } else { "river" };
        docs.push((0..len).map(|_| format!("{prefix}{}", rng.gen_range(0..15))).collect());
        labels.push(class);
    }
    (docs, labels)
}

#[test]
fn criterion_5_lda() {
    let mut c = Checks::new(5, 120);
    let (docs, labels) = two_topic_corpus(200, 50, 5);
    let mut sweeps = 0;
    let mut conserved = true;
    let tokens = (200 * 50) as u64;
    let mut obs = |s: SweepStats| {
        sweeps += 1;
        conserved &= s.tokens == tokens && s.assigned == tokens && s.totals_consistent;
    };
    let model = train_lda_observed(&docs, 2, 0.1, 0.01, 200, 3, Some(&mut obs)).unwrap();
    c.check(conserved && sweeps == 200, format!("conservation over {sweeps} sweeps"));

    let mut counts = [[0usize; 2]; 2];
    let mut simplex_err: f64 = 0.0;
    for (i, d) in docs.iter().enumerate() {
        let th = infer_doc_topics(&model, d, 50, i as u64).theta;
        simplex_err = simplex_err.max((th.iter().sum::<f64>() - 1.0).abs());
        c.check(th.iter().all(|v| *v >= 0.0), "negative topic weight");
        let top = if th[0] >= th[1] { 0 } else { 1 };
        counts[top][labels[i]] += 1;
    }
    let purity = (counts[0][0].max(counts[0][1]) + counts[1][0].max(counts[1][1])) as f64 / docs.len() as f64;
    c.check(simplex_err < 1e-9, format!("simplex error {simplex_err:e}"));
    c.check(purity >= 0.9, format!("purity {purity}"));

    let cfg = LdaConfig {
        iterations: 200,
        ..LdaConfig::default()
    };
    let (k, scores) = select_topic_count(&docs, &[2, 10], &cfg, 9).unwrap();
    c.check(k == 2, format!("selected K = {k} from {scores:?}"));

    let again = train_lda(&docs, 2, 0.1, 0.01, 200, 3).unwrap();
    c.check(again == model, "retraining with the same seed differs");
    c.note(format!("purity {purity:.3}, selected K = {k}"));
    c.finish();
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_logistic_regression() {
    let mut c = Checks::new(6, 60);
    let mut rng = seed::rng(6);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let (n, d) = (12, 4);
        let y: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let x = if trial % 2 == 0 {
            Design::Dense((0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect())
        } else {
            let mut m = SparseMatrix::new(d);
            for _ in 0..n {
                let mut row = Vec::new();
                for j in 0..d {
                    if rng.gen_bool(0.5) {
                        row.push((j, rng.gen_range(-2.0..2.0)));
                    }
                }
                m.push_row(&row).unwrap();
            }
            Design::Sparse(m)
        };
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let lambda = 0.3;
        let (gw, gb) = gradient(&x, &y, &w, b, lambda);
        let h = 1e-5;
        let rel = |a: f64, num: f64| (a - num).abs() / num.abs().max(1.0);
        for j in 0..d {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            let num = (objective(&x, &y, &wp, b, lambda) - objective(&x, &y, &wm, b, lambda)) / (2.0 * h);
            worst = worst.max(rel(gw[j], num));
        }
        let num = (objective(&x, &y, &w, b + h, lambda) - objective(&x, &y, &w, b - h, lambda)) / (2.0 * h);
        worst = worst.max(rel(gb, num));
    }
    c.check(worst < 1e-5, format!("gradient relative error {worst:e}"));

    let params = LogRegParams::default();
    let n = 200;
    let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&l| {
            let s = if l { 1.0 } else { -1.0 };
            vec![s * rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
        })
        .collect();
    let folds = stratified_folds(&y, 5, 1).unwrap();
    let sep = cross_validate("separable", &Design::Dense(rows.clone()), &y, &folds, &params, 1).unwrap();
    c.check(sep.mean_accuracy >= 0.95, format!("separable accuracy {}", sep.mean_accuracy));

    let accs: Vec<f64> = (0..20u64)
        .map(|s| {
            let mut r = seed::rng_for(s, &["shuffle"]);
            let mut ys = y.clone();
            ys.shuffle(&mut r);
            let x: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
            let folds = stratified_folds(&ys, 5, s).unwrap();
            cross_validate("shuffled", &Design::Dense(x), &ys, &folds, &params, s).unwrap().mean_accuracy
        })
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    c.check((mean - 0.5).abs() <= 0.05, format!("shuffled mean accuracy {mean}"));
    c.note(format!(
        "gradient error {worst:.1e}, separable {:.3}, shuffled mean {mean:.3} over 20 seeds",
        sep.mean_accuracy
    ));
    c.finish();
}

// ------------------------------------------------------- criteria 7 and 8

fn synthetic_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic/config.json")
}

fn write_synthetic(path: &Path, n: usize, seed_: u64) {
    let s = generate(&SynthConfig {
        n_episodes: n,
        seed: seed_,
        ..SynthConfig::default()
    })
    .unwrap();
    let f = std::fs::File::create(path).unwrap();
    let mut w = std::io::BufWriter::new(f);
    write_corpus(&s.corpus, &mut w).unwrap();
    w.flush().unwrap();
}

fn run_pipeline(corpus: &Path, out: &Path, extra: &[(&str, &str)]) -> Pipeline {
    let mut overrides = vec![
        ("corpus".to_string(), corpus.display().to_string()),
        ("output_dir".to_string(), out.display().to_string()),
    ];
    overrides.extend(extra.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    let cfg = load_config(Some(&synthetic_config()), &overrides).unwrap();
    let p = Pipeline::new(cfg).unwrap();
    p.run_stages(&Stage::ALL).unwrap();
    p
}

/// Rows of a CSV artifact as header-keyed maps, skipping `#` lines.
fn read_rows(path: &Path) -> Vec<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

#[test]
fn criterion_7_synthetic_study() {
    let mut c = Checks::new(7, 600);
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    write_synthetic(&corpus, 2000, 7);
    let p = run_pipeline(&corpus, &dir.path().join("out"), &[]);
    let out = p.dir().to_path_buf();

    let roles = std::fs::read_to_string(out.join("special_topics.tsv")).unwrap();
    let swear_topics: Vec<String> = roles
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
        .filter(|(_, r)| *r == "swear")
        .map(|(t, _)| format!("topic_{t}"))
        .collect();
    c.check(!swear_topics.is_empty(), "no topic labeled swear");
    let mut shifted: BTreeMap<String, &str> = BTreeMap::from([
        ("entropy_trans".to_string(), "up"),
        ("speech_rate_wpm".to_string(), "up"),
        ("swear_topic_frac".to_string(), "down"),
    ]);
    for t in &swear_topics {
        shifted.insert(t.clone(), "down");
    }

    let results = read_rows(&out.join("group_means.csv"));
    let mut flags: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in &results {
        let e = flags.entry(r["feature"].clone()).or_default();
        if r["significant"] == "true" {
            let expected = shifted.get(&r["feature"]).copied();
            if expected.is_none() || expected == Some(r["direction"].as_str()) {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    for (f, dir) in &shifted {
        let (right, wrong) = flags.get(f).copied().unwrap_or_default();
        c.check(right >= 3 && wrong == 0, format!("{f} flagged {dir} in {right}/4 quartiles ({wrong} wrong way)"));
    }

    // Unshifted features that vary at all; constant columns cannot be flagged.
    let features = read_rows(&out.join("features.csv"));
    let columns: Vec<String> = flags.keys().filter(|f| !shifted.contains_key(*f)).cloned().collect();
    let varying: Vec<&String> = columns
        .iter()
        .filter(|f| {
            let vals: BTreeSet<&str> = features
                .iter()
                .filter(|r| r["episode_id"] != "#family")
                .map(|r| r[f.as_str()].as_str())
                .collect();
            vals.len() > 1
        })
        .collect();
    let clean = varying.iter().filter(|f| flags[f.as_str()].0 == 0).count();
    let share = clean as f64 / varying.len() as f64;
    let dirty: Vec<&&String> = varying.iter().filter(|f| flags[f.as_str()].0 > 0).collect();
    c.check(share >= 0.9, format!("{clean}/{} unshifted features unflagged", varying.len()));

    let cv = read_rows(&out.join("cv.csv"));
    let acc = |rep: &str| -> f64 {
        cv.iter()
            .find(|r| r["representation"] == rep && r["fold"] == "mean")
            .map(|r| r["accuracy"].parse().unwrap())
            .unwrap()
    };
    let ling = acc("linguistic");
    c.check(ling >= 0.65, format!("linguistic CV accuracy {ling:.4}"));

    let sweep = read_rows(&out.join("sweep.csv"));
    let series = |rep: &str| -> Vec<(f64, f64)> {
        sweep
            .iter()
            .filter(|r| r["representation"] == rep)
            .map(|r| (r["k_percent"].parse().unwrap(), r["accuracy"].parse().unwrap()))
            .collect()
    };
    let ling_sweep = series("linguistic");
    c.check(ling_sweep.len() == 5, "sweep rows");
    for w in ling_sweep.windows(2) {
        c.check(
            w[1].1 <= w[0].1 + 0.01,
            format!("linguistic accuracy rises from K={} ({:.4}) to K={} ({:.4})", w[0].0, w[0].1, w[1].0, w[1].1),
        );
    }
    let fmt = |s: &[(f64, f64)]| s.iter().map(|(k, a)| format!("K={k}:{:.1}", 100.0 * a)).collect::<Vec<_>>().join(" ");
    c.note(format!(
        "swear topics {swear_topics:?}; {clean}/{} unshifted unflagged (flagged: {dirty:?}); linguistic {:.1}%, ngrams {:.1}%; linguistic sweep {}; ngram sweep {}",
        varying.len(),
        100.0 * ling,
        100.0 * acc("ngrams"),
        fmt(&ling_sweep),
        fmt(&series("ngrams")),
    ));
    c.finish();
}

#[test]
fn criterion_8_determinism() {
    let mut c = Checks::new(8, 600);
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    write_synthetic(&corpus, 240, 8);
    let small: &[(&str, &str)] = &[
        ("topics.lda.k", "6"),
        ("topics.lda.iterations", "40"),
        ("stats.bootstrap_b", "1000"),
        ("model.sweep_k", "[10, 25]"),
    ];
    let a = run_pipeline(&corpus, &dir.path().join("run_a"), small);
    let b = run_pipeline(&corpus, &dir.path().join("run_b"), small);
    let ma = read_manifest(&a.dir().join("manifest.tsv")).unwrap();
    let mb = read_manifest(&b.dir().join("manifest.tsv")).unwrap();
    let expected = [
        "corpus.jsonl", "engagement.csv", "lda.model", "topic_review.tsv", "special_topics.tsv", "doc_topics.csv",
        "features.csv", "features.jsonl", "group_means.csv", "group_means.md", "spearman.csv", "spearman.md",
        "cv.csv", "cv.md", "top_ngrams.csv", "top_ngrams.md", "ablation.csv", "ablation.md", "sweep.csv",
        "sweep.md", "report.md",
    ];
    let names: BTreeSet<&str> = ma.iter().map(|(_, n, _)| n.as_str()).collect();
    for e in expected {
        c.check(names.contains(e), format!("missing artifact {e}"));
    }
    c.check(ma == mb, "manifests differ between runs");
    let differing: Vec<&str> = ma
        .iter()
        .zip(&mb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.1.as_str())
        .collect();
    c.check(differing.is_empty(), format!("differing digests: {differing:?}"));
    let manifest_a = std::fs::read(a.dir().join("manifest.tsv")).unwrap();
    let manifest_b = std::fs::read(b.dir().join("manifest.tsv")).unwrap();
    c.check(manifest_a == manifest_b, "manifest files differ");
    c.note(format!("{} artifacts and inputs with identical sha256 across two runs", ma.len()));
    c.finish();
}
