//! L2-regularized logistic regression by gradient descent with backtracking.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ngrams::SparseMatrix;
use crate::error::{Error, Result};

pub const MODEL_VERSION: &str = "podstyle-logreg 1";

/// A design matrix: dense stylistic or topic features, or sparse n-gram
/// TF-IDF rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(Vec<Vec<f64>>),
    Sparse(SparseMatrix),
}

impl Design {
    pub fn n_rows(&self) -> usize {
        match self {
            Design::Dense(r) => r.len(),
            Design::Sparse(m) => m.n_rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Design::Dense(r) => r.first().map_or(0, Vec::len),
            Design::Sparse(m) => m.n_cols,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Design {
        match self {
            Design::Dense(r) => Design::Dense(rows.iter().map(|&i| r[i].clone()).collect()),
            Design::Sparse(m) => Design::Sparse(m.select_rows(rows)),
        }
    }

    fn dot(&self, i: usize, w: &[f64]) -> f64 {
        match self {
            Design::Dense(r) => r[i].iter().zip(w).map(|(x, w)| x * w).sum(),
            Design::Sparse(m) => {
                let (idx, val) = m.row(i);
                idx.iter().zip(val).map(|(&c, v)| v * w[c]).sum()
            }
        }
    }

    fn add_scaled(&self, i: usize, coef: f64, out: &mut [f64]) {
        match self {
            Design::Dense(r) => {
                for (o, x) in out.iter_mut().zip(&r[i]) {
                    *o += coef * x;
                }
            }
            Design::Sparse(m) => {
                let (idx, val) = m.row(i);
                for (&c, v) in idx.iter().zip(val) {
                    out[c] += coef * v;
                }
            }
        }
    }
}

/// Per-column z-scoring parameters. Columns with zero spread get sd 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut sd = vec![0.0; d];
        for r in rows {
            for ((s, x), m) in sd.iter_mut().zip(r).zip(&mean) {
                *s += (x - m) * (x - m) / n;
            }
        }
        for s in &mut sd {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Standardizer { mean, sd }
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .zip(&self.mean)
                    .zip(&self.sd)
                    .map(|((x, m), s)| (x - m) / s)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegParams {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            lambda: 1.0,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    /// Present for dense designs.
    pub standardizer: Option<Standardizer>,
    /// Objective value after each accepted step, starting at the zero model.
    pub loss_trace: Vec<f64>,
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss plus `lambda * |w|^2 / 2`; the bias is not penalized.
pub fn objective(x: &Design, y: &[bool], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = x.n_rows() as f64;
    let loss: f64 = (0..x.n_rows())
        .map(|i| {
            let z = x.dot(i, w) + b;
            if y[i] {
                log1p_exp(-z)
            } else {
                log1p_exp(z)
            }
        })
        .sum();
    loss / n + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of `objective` with respect to `(w, b)`.
pub fn gradient(x: &Design, y: &[bool], w: &[f64], b: f64, lambda: f64) -> (Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut gw: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    let mut gb = 0.0;
    for i in 0..x.n_rows() {
        let r = (sigmoid(x.dot(i, w) + b) - if y[i] { 1.0 } else { 0.0 }) / n;
        x.add_scaled(i, r, &mut gw);
        gb += r;
    }
    (gw, gb)
}

fn check_labels(x: &Design, y: &[bool]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }
    Ok(())
}

/// Fit on `x` (dense designs are standardized with their own statistics).
pub fn train_logreg(x: &Design, y: &[bool], params: &LogRegParams) -> Result<LogRegModel> {
    check_labels(x, y)?;
    if !(params.lambda >= 0.0) || !(params.tol > 0.0) {
        return Err(Error::InvalidArgument("lambda must be nonnegative and tol positive".into()));
    }
    if let Design::Dense(rows) = x {
        if rows.iter().any(|r| r.len() != x.n_cols()) {
            return Err(Error::InvalidArgument("ragged dense design".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
    }
    let (standardizer, scaled) = match x {
        Design::Dense(rows) => {
            let s = Standardizer::fit(rows);
            let scaled = Design::Dense(s.apply(rows));
            (Some(s), scaled)
        }
        Design::Sparse(_) => (None, x.clone()),
    };
    let x = &scaled;
    let lambda = params.lambda;
    let mut w = vec![0.0; x.n_cols()];
    let mut b = 0.0;
    let mut f = objective(x, y, &w, b, lambda);
    let mut trace = vec![f];
    // Weight steps are scaled by 1 / (1 + lambda); bias steps are not.
    let scale = 1.0 / (1.0 + lambda);
    let mut step = 1.0;
    for _ in 0..params.max_iter {
        let (gw, gb) = gradient(x, y, &w, b, lambda);
        let g2 = gw.iter().map(|v| v * v).sum::<f64>() + gb * gb;
        if g2.sqrt() < params.tol {
            break;
        }
        let decrease = scale * gw.iter().map(|v| v * v).sum::<f64>() + gb * gb;
        step *= 2.0;
        loop {
            let nw: Vec<f64> = w.iter().zip(&gw).map(|(w, g)| w - step * scale * g).collect();
            let nb = b - step * gb;
            let nf = objective(x, y, &nw, nb, lambda);
            if nf <= f - 0.5 * step * decrease {
                w = nw;
                b = nb;
                f = nf;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Ok(LogRegModel {
                    weights: w,
                    bias: b,
                    lambda,
                    standardizer,
                    loss_trace: trace,
                });
            }
        }
        trace.push(f);
    }
    Ok(LogRegModel {
        weights: w,
        bias: b,
        lambda,
        standardizer,
        loss_trace: trace,
    })
}

impl LogRegModel {
    fn prepared(&self, x: &Design) -> Result<Design> {
        if x.n_cols() != self.weights.len() && x.n_rows() > 0 {
            return Err(Error::InvalidArgument(format!(
                "design has {} columns, model has {}",
                x.n_cols(),
                self.weights.len()
            )));
        }
        Ok(match (x, &self.standardizer) {
            (Design::Dense(rows), Some(s)) => Design::Dense(s.apply(rows)),
            _ => x.clone(),
        })
    }

    /// Probability of the positive class for each row.
    pub fn predict_proba(&self, x: &Design) -> Result<Vec<f64>> {
        let x = self.prepared(x)?;
        Ok((0..x.n_rows())
            .map(|i| sigmoid(x.dot(i, &self.weights) + self.bias))
            .collect())
    }

    pub fn predict(&self, x: &Design) -> Result<Vec<bool>> {
        Ok(self.predict_proba(x)?.into_iter().map(|p| p >= 0.5).collect())
    }

    pub fn accuracy(&self, x: &Design, y: &[bool]) -> Result<f64> {
        if y.is_empty() {
            return Err(Error::Empty("evaluation set".into()));
        }
        let pred = self.predict(x)?;
        Ok(pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64)
    }

    /// Text format: version line, `lambda`, `bias` and `dim` lines, then
    /// either `standardization none` or `standardization` followed by `dim`
    /// lines of `mean sd`, then `weights` followed by `dim` weight lines.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<logreg model>", e);
        writeln!(out, "{MODEL_VERSION}").map_err(io)?;
        writeln!(out, "lambda {}", self.lambda).map_err(io)?;
        writeln!(out, "bias {}", self.bias).map_err(io)?;
        writeln!(out, "dim {}", self.weights.len()).map_err(io)?;
        match &self.standardizer {
            None => writeln!(out, "standardization none").map_err(io)?,
            Some(s) => {
                writeln!(out, "standardization").map_err(io)?;
                for (m, sd) in s.mean.iter().zip(&s.sd) {
                    writeln!(out, "{m} {sd}").map_err(io)?;
                }
            }
        }
        writeln!(out, "weights").map_err(io)?;
        for w in &self.weights {
            writeln!(out, "{w}").map_err(io)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let lines: Vec<String> = reader
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io("<logreg model>", e))?;
        let mut it = lines.iter().enumerate().filter(|(_, l)| !l.starts_with('#'));
        let mut next = |what: &str| {
            it.next()
                .map(|(i, l)| (i + 1, l.as_str()))
                .ok_or_else(|| Error::malformed(lines.len(), what, "unexpected end of model"))
        };
        let (n, v) = next("version")?;
        if v != MODEL_VERSION {
            return Err(Error::malformed(n, "version", format!("unsupported `{v}`")));
        }
        fn num(n: usize, line: &str, key: &str) -> Result<f64> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| Error::malformed(n, key, format!("`{line}`")))
        }
        let (n, l) = next("lambda")?;
        let lambda = num(n, l, "lambda")?;
        let (n, l) = next("bias")?;
        let bias = num(n, l, "bias")?;
        let (n, l) = next("dim")?;
        let dim = num(n, l, "dim")? as usize;
        let (n, l) = next("standardization")?;
        let standardizer = match l {
            "standardization none" => None,
            "standardization" => {
                let mut s = Standardizer {
                    mean: Vec::with_capacity(dim),
                    sd: Vec::with_capacity(dim),
                };
                for _ in 0..dim {
                    let (n, l) = next("standardization")?;
                    let (m, sd) = l
                        .split_once(' ')
                        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                        .ok_or_else(|| Error::malformed(n, "standardization", format!("`{l}`")))?;
                    s.mean.push(m);
                    s.sd.push(sd);
                }
                Some(s)
            }
            _ => return Err(Error::malformed(n, "standardization", format!("`{l}`"))),
        };
        let (n, l) = next("weights")?;
        if l != "weights" {
            return Err(Error::malformed(n, "weights", "expected `weights`"));
        }
        let mut weights = Vec::with_capacity(dim);
        for _ in 0..dim {
            let (n, l) = next("weights")?;
            weights.push(l.parse().map_err(|_| Error::malformed(n, "weights", format!("`{l}`")))?);
        }
        Ok(LogRegModel {
            weights,
            bias,
            lambda,
            standardizer,
            loss_trace: Vec::new(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
    }
}
