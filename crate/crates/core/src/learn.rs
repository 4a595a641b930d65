//! Gaussian RBF interpolation network from Fourier signatures to `n`.
//!
//! Every training signature is a centre. The network output is
//! `n̂(x) = Σ_j w_j exp(-(‖x − c_j‖ / width)²) + bias` in normalised feature
//! space; weights and bias solve the interpolation conditions together with
//! `Σ w_j = 0`, which makes the bias well defined.

use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ShapeFamily;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub family: ShapeFamily,
    pub rows: Vec<Sample>,
    /// Empty until [`split_dataset`] has run.
    pub split: Vec<Split>,
}

impl Dataset {
    pub fn new(family: ShapeFamily, rows: Vec<Sample>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let dim = first.features.len();
            for (i, r) in rows.iter().enumerate() {
                if r.features.len() != dim {
                    return Err(Error::param(format!("row {i} has {} features, expected {dim}", r.features.len())));
                }
                if r.features.iter().chain([&r.target]).any(|v| !v.is_finite()) {
                    return Err(Error::param(format!("row {i} is not finite")));
                }
            }
        }
        Ok(Self {
            family,
            rows,
            split: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn part(&self, which: Split) -> Vec<&Sample> {
        self.rows
            .iter()
            .zip(&self.split)
            .filter(|(_, s)| **s == which)
            .map(|(r, _)| r)
            .collect()
    }
}

/// Train/test sizes. The default matches one 98-model sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self { train: 68, test: 30 }
    }
}

/// Seeded shuffle; the first `sizes.train` shuffled rows train, the rest test.
pub fn split_dataset(d: &Dataset, seed: u64, sizes: SplitSizes) -> Result<Dataset> {
    let expected = sizes.train + sizes.test;
    if d.len() != expected {
        return Err(Error::DatasetSize {
            expected,
            found: d.len(),
        });
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut split = vec![Split::Test; d.len()];
    for &i in &order[..sizes.train] {
        split[i] = Split::Train;
    }
    Ok(Dataset {
        split,
        ..d.clone()
    })
}

/// Per-feature affine map of the training range onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut it = rows.into_iter();
        let first = it.next().ok_or_else(|| Error::Training("no rows to normalise".into()))?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for r in it {
            for (k, &v) in r.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Constant features map to 0. Values outside the fitted range are not clipped.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| {
                let span = self.max[k] - self.min[k];
                if span > 0.0 {
                    2.0 * (v - self.min[k]) / span - 1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfParams {
    /// Gaussian width in normalised units.
    pub width: f64,
    /// Added to the kernel diagonal.
    pub ridge: f64,
}

impl Default for RbfParams {
    fn default() -> Self {
        Self {
            width: 1.0,
            ridge: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfModel {
    pub normalizer: Normalizer,
    pub width: f64,
    pub ridge: f64,
    /// Normalised training signatures.
    pub centers: Vec<Vec<f64>>,
    /// One weight per centre followed by the bias.
    pub weights: Vec<f64>,
}

fn kernel(a: &[f64], b: &[f64], width: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (width * width)).exp()
}

/// Fits the normaliser on `rows` and solves for the interpolation weights.
pub fn train_rbf(rows: &[&Sample], p: &RbfParams) -> Result<RbfModel> {
    if rows.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if !(p.width > 0.0) || !(p.ridge >= 0.0) {
        return Err(Error::param(format!("invalid RBF parameters {p:?}")));
    }
    let normalizer = Normalizer::fit(rows.iter().map(|r| r.features.as_slice()))?;
    let centers: Vec<Vec<f64>> = rows.iter().map(|r| normalizer.apply(&r.features)).collect();
    let m = centers.len();

    let mut a = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = kernel(&centers[i], &centers[j], p.width);
        }
        a[(i, i)] += p.ridge;
        a[(i, m)] = 1.0;
        a[(m, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    for (i, r) in rows.iter().enumerate() {
        rhs[i] = r.target;
    }
    let lu = a.clone().full_piv_lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Training("singular interpolation system".into()))?;
    // One step of iterative refinement against round-off in the factorisation.
    let r = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite interpolation weights".into()));
    }
    Ok(RbfModel {
        normalizer,
        width: p.width,
        ridge: p.ridge,
        centers,
        weights: x.iter().copied().collect(),
    })
}

impl RbfModel {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let z = self.normalizer.apply(features);
        let m = self.centers.len();
        let mut y = self.weights[m];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            y += w * kernel(&z, c, self.width);
        }
        y
    }

    /// Text format: a header line, scalars, then one whitespace-separated
    /// row per vector. Floats use Rust's shortest round-trip representation.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let row = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let io = |e: std::io::Error| Error::format("rbf model", e.to_string());
        writeln!(w, "{MODEL_HEADER}").map_err(io)?;
        writeln!(w, "dim {}", self.normalizer.dim()).map_err(io)?;
        writeln!(w, "centers {}", self.centers.len()).map_err(io)?;
        writeln!(w, "width {:?}", self.width).map_err(io)?;
        writeln!(w, "ridge {:?}", self.ridge).map_err(io)?;
        writeln!(w, "min {}", row(&self.normalizer.min)).map_err(io)?;
        writeln!(w, "max {}", row(&self.normalizer.max)).map_err(io)?;
        writeln!(w, "weights {}", row(&self.weights)).map_err(io)?;
        for c in &self.centers {
            writeln!(w, "center {}", row(c)).map_err(io)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let bad = |d: String| Error::format("rbf model", d);
        let mut lines = r.lines();
        let mut next = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing '{key}' line")))?
                .map_err(|e| bad(e.to_string()))?;
            let mut parts = line.split_whitespace().map(str::to_owned);
            match parts.next() {
                Some(k) if k == key => Ok(parts.collect()),
                other => Err(bad(format!("expected '{key}', found {other:?}"))),
            }
        };
        let header = next("thermotact-rbf")?;
        if header != ["v1"] {
            return Err(bad(format!("unsupported version {header:?}")));
        }
        let floats = |v: Vec<String>| -> Result<Vec<f64>> {
            v.iter()
                .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}"))))
                .collect()
        };
        let count = |v: Vec<String>| -> Result<usize> {
            v.first()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad count".into()))
        };
        let dim = count(next("dim")?)?;
        let m = count(next("centers")?)?;
        let scalar = |v: Vec<f64>| v.first().copied().ok_or_else(|| bad("missing value".into()));
        let width = scalar(floats(next("width")?)?)?;
        let ridge = scalar(floats(next("ridge")?)?)?;
        let min = floats(next("min")?)?;
        let max = floats(next("max")?)?;
        let weights = floats(next("weights")?)?;
        let mut centers = Vec::with_capacity(m);
        for _ in 0..m {
            centers.push(floats(next("center")?)?);
        }
        if min.len() != dim || max.len() != dim || weights.len() != m + 1 || centers.iter().any(|c| c.len() != dim) {
            return Err(bad("inconsistent dimensions".into()));
        }
        Ok(Self {
            normalizer: Normalizer { min, max },
            width,
            ridge,
            centers,
            weights,
        })
    }
}

const MODEL_HEADER: &str = "thermotact-rbf v1";

/// Error statistics of predictions `n̂` against targets `n`, with errors
/// taken as `n̂ − n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    pub rmse: f64,
    pub mse: f64,
    pub mean_err: f64,
    /// Population variance of the errors.
    pub variance: f64,
    pub std: f64,
    /// Fraction of rows with `round(n̂) = n`.
    pub rounded_accuracy: f64,
    /// Spearman correlation between `n̂` and `n`.
    pub rank_correlation: f64,
}

impl EvalReport {
    pub fn from_predictions(predicted: &[f64], target: &[f64]) -> Self {
        let errors: Vec<f64> = predicted.iter().zip(target).map(|(p, t)| p - t).collect();
        let m = error_metrics(&errors);
        let hits = predicted.iter().zip(target).filter(|(p, t)| p.round() == **t).count();
        Self {
            rounded_accuracy: if target.is_empty() { 0.0 } else { hits as f64 / target.len() as f64 },
            rank_correlation: spearman(predicted, target),
            ..m
        }
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "split",
        "count",
        "rmse",
        "mse",
        "mean_err",
        "variance",
        "std",
        "rounded_accuracy",
        "rank_correlation",
    ];

    pub fn csv_record(&self, split: &str) -> [String; 9] {
        [
            split.to_string(),
            self.count.to_string(),
            format!("{:?}", self.rmse),
            format!("{:?}", self.mse),
            format!("{:?}", self.mean_err),
            format!("{:?}", self.variance),
            format!("{:?}", self.std),
            format!("{:?}", self.rounded_accuracy),
            format!("{:?}", self.rank_correlation),
        ]
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples           {}", self.count)?;
        writeln!(f, "RMSE              {:.6e}", self.rmse)?;
        writeln!(f, "MSE               {:.6e}", self.mse)?;
        writeln!(f, "mean error        {:.6e}", self.mean_err)?;
        writeln!(f, "error variance    {:.6e}", self.variance)?;
        writeln!(f, "error std         {:.6e}", self.std)?;
        writeln!(f, "rounded accuracy  {:.4}", self.rounded_accuracy)?;
        write!(f, "rank correlation  {:.4}", self.rank_correlation)
    }
}

/// Mean, MSE, variance, RMSE and standard deviation of an error vector.
/// The rounded accuracy and rank correlation are left at zero.
pub fn error_metrics(errors: &[f64]) -> EvalReport {
    let n = errors.len().max(1) as f64;
    let mean_err = errors.iter().sum::<f64>() / n;
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
    let variance = errors.iter().map(|e| (e - mean_err) * (e - mean_err)).sum::<f64>() / n;
    EvalReport {
        count: errors.len(),
        rmse: mse.sqrt(),
        mse,
        mean_err,
        variance,
        std: variance.sqrt(),
        rounded_accuracy: 0.0,
        rank_correlation: 0.0,
    }
}

pub fn evaluate(model: &RbfModel, rows: &[&Sample]) -> EvalReport {
    let predicted = par::map_slice(rows, |r| model.predict(&r.features));
    let target: Vec<f64> = rows.iter().map(|r| r.target).collect();
    EvalReport::from_predictions(&predicted, &target)
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Spearman rank correlation; 0 when either input is constant or too short.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() || a.len() < 2 {
        return 0.0;
    }
    pearson(&ranks(a), &ranks(b))
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn coefficient_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::param("no values for box statistics"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(BoxStats {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(features: Vec<f64>, target: f64) -> Sample {
        Sample { features, target }
    }

    fn toy(n: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| {
                let t = i as f64;
                sample(vec![t.sin(), (0.3 * t).cos(), t * t * 0.01], 3.0 + t)
            })
            .collect();
        Dataset::new(ShapeFamily::RegularPolygon, rows).unwrap()
    }

    #[test]
    fn split_is_seeded_and_partitions_rows() {
        let d = toy(98);
        let a = split_dataset(&d, 7, SplitSizes::default()).unwrap();
        let b = split_dataset(&d, 7, SplitSizes::default()).unwrap();
        let c = split_dataset(&d, 8, SplitSizes::default()).unwrap();
        assert_eq!(a.split, b.split);
        assert_ne!(a.split, c.split);
        for s in [&a, &c] {
            assert_eq!(s.part(Split::Train).len(), 68);
            assert_eq!(s.part(Split::Test).len(), 30);
        }
        let err = split_dataset(&toy(97), 7, SplitSizes::default());
        assert!(matches!(err, Err(Error::DatasetSize { expected: 98, found: 97 })));
        assert!(split_dataset(&toy(10), 1, SplitSizes { train: 7, test: 3 }).is_ok());
    }

    #[test]
    fn normaliser_maps_range_to_unit_interval() {
        let rows = [vec![2.0, 5.0], vec![4.0, 5.0]];
        let n = Normalizer::fit(rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(n.apply(&rows[0]), vec![-1.0, 0.0]);
        assert_eq!(n.apply(&rows[1]), vec![1.0, 0.0]);
        assert_eq!(n.apply(&[6.0, 9.0]), vec![3.0, 0.0]);
        let z: Vec<Vec<f64>> = rows.iter().map(|r| n.apply(r)).collect();
        let again = Normalizer::fit(z.iter().map(|r| r.as_slice())).unwrap();
        for r in &z {
            let rz = again.apply(r);
            for k in 0..2 {
                assert!((rz[k] - r[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_centre_reproduces_target() {
        let s = sample(vec![1.0, 2.0], 42.0);
        let m = train_rbf(&[&s], &RbfParams::default()).unwrap();
        assert!((m.predict(&[1.0, 2.0]) - 42.0).abs() < 1e-12);
    }

    #[test]
    fn two_centres_match_closed_form() {
        // Normalised centres are -1 and +1, distance 2.
        let rows = [sample(vec![0.0], 1.0), sample(vec![1.0], 5.0)];
        let p = RbfParams { width: 1.5, ridge: 0.0 };
        let m = train_rbf(&rows.iter().collect::<Vec<_>>(), &p).unwrap();
        let phi = (-(2.0f64 / 1.5).powi(2)).exp();
        // [1 φ 1; φ 1 1; 1 1 0] [w1 w2 b] = [1 5 0] gives w1 = -w2 = (1-5)/(2(1-φ)).
        let w1 = -4.0 / (2.0 * (1.0 - phi));
        let b = 1.0 - w1 * (1.0 - phi);
        assert!((m.weights[0] - w1).abs() < 1e-12);
        assert!((m.weights[1] + w1).abs() < 1e-12);
        assert!((m.weights[2] - b).abs() < 1e-12);
        assert!((m.predict(&[0.5]) - b).abs() < 1e-12);
    }

    #[test]
    fn training_rows_are_interpolated() {
        let d = split_dataset(&toy(98), 3, SplitSizes::default()).unwrap();
        let train = d.part(Split::Train);
        let m = train_rbf(&train, &RbfParams { width: 1.0, ridge: 0.0 }).unwrap();
        let r = evaluate(&m, &train);
        assert!(r.rmse < 1e-8, "{r}");
    }

    #[test]
    fn predictions_do_not_depend_on_row_order() {
        let d = toy(20);
        let rows: Vec<&Sample> = d.rows.iter().collect();
        let mut rev = rows.clone();
        rev.reverse();
        let p = RbfParams::default();
        let (a, b) = (train_rbf(&rows, &p).unwrap(), train_rbf(&rev, &p).unwrap());
        for x in [[0.1, 0.2, 0.3], [-0.5, 0.9, 1.5]] {
            assert!((a.predict(&x) - b.predict(&x)).abs() < 1e-8);
        }
    }

    #[test]
    fn metrics_from_hand_computation() {
        let r = error_metrics(&[1.0, -1.0]);
        assert_eq!((r.mean_err, r.mse, r.rmse, r.variance, r.std), (0.0, 1.0, 1.0, 1.0, 1.0));
        let r = EvalReport::from_predictions(&[3.2, 4.6, 5.0], &[3.0, 4.0, 5.0]);
        assert!((r.rounded_accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.rank_correlation, 1.0);
    }

    #[test]
    fn spearman_handles_ties_and_reversal() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        // Ranks (1.5, 1.5, 3) vs (1, 2, 3).
        let expect = 0.75f64.sqrt() / 1.0;
        assert!((spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]) - expect * 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn box_stats() {
        let b = coefficient_stats(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!((b.min, b.q1, b.median, b.q3, b.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let c = coefficient_stats(&[7.5; 4]).unwrap();
        assert_eq!((c.min, c.q1, c.median, c.q3, c.max), (7.5, 7.5, 7.5, 7.5, 7.5));
        let e = coefficient_stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((e.q1, e.median, e.q3), (1.75, 2.5, 3.25));
        assert!(coefficient_stats(&[]).is_err());
    }

    #[test]
    fn model_text_round_trip_is_exact() {
        let d = split_dataset(&toy(98), 11, SplitSizes::default()).unwrap();
        let m = train_rbf(&d.part(Split::Train), &RbfParams::default()).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = RbfModel::read(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert!(RbfModel::read(&b"thermotact-rbf v2\n"[..]).is_err());
    }
}
