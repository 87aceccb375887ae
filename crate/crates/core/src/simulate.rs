//! Random field models, deterministic parallel path sampling, empirical sup
//! tails and DKW dominance checks of bound curves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{Provenance, TailBoundCurve};
use crate::error::{invalid, Error, Result};
use crate::gls::standard_normal_moment;
use crate::metric::FiniteIndexSpace;

/// Relative eigenvalue floor below which a covariance is rejected; values
/// between it and zero are clamped.
pub const EIGEN_CLAMP: f64 = 1e-12;
/// Default DKW level.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// A random field over a finite index set.
pub trait FieldModel: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, t: usize) -> String {
        t.to_string()
    }

    /// `|ξ(t)|_p`, `+∞` where it diverges.
    fn moment(&self, t: usize, p: f64) -> f64;

    /// `|ξ(t) - ξ(s)|_p`.
    fn pair_moment(&self, t: usize, s: usize, p: f64) -> f64;

    fn moments_at(&self, p: f64) -> Vec<f64> {
        (0..self.len()).map(|t| self.moment(t, p)).collect()
    }

    /// Moment indices at or above this are treated as infinite.
    fn moment_limit(&self) -> f64 {
        f64::INFINITY
    }

    /// Write one path into `out` (length `len()`).
    fn sample_path(&self, rng: &mut dyn RngCore, out: &mut [f64]);

    /// `max_t |ξ(t)|` of one path.
    fn sample_sup(&self, rng: &mut dyn RngCore) -> f64 {
        let mut buf = vec![0.0; self.len()];
        self.sample_path(rng, &mut buf);
        buf.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// The field restricted to a subset of its indices.
pub struct Restricted<'a> {
    base: &'a dyn FieldModel,
    idx: Vec<usize>,
}

impl<'a> Restricted<'a> {
    pub fn new(base: &'a dyn FieldModel, idx: Vec<usize>) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = idx.iter().find(|&&i| i >= base.len()) {
            return Err(invalid(format!("index {bad} out of range for a field of size {}", base.len())));
        }
        Ok(Restricted { base, idx })
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }
}

impl FieldModel for Restricted<'_> {
    fn len(&self) -> usize {
        self.idx.len()
    }

    fn label(&self, t: usize) -> String {
        self.base.label(self.idx[t])
    }

    fn moment(&self, t: usize, p: f64) -> f64 {
        self.base.moment(self.idx[t], p)
    }

    fn pair_moment(&self, t: usize, s: usize, p: f64) -> f64 {
        self.base.pair_moment(self.idx[t], self.idx[s], p)
    }

    fn moment_limit(&self) -> f64 {
        self.base.moment_limit()
    }

    fn sample_path(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        let mut full = vec![0.0; self.base.len()];
        self.base.sample_path(rng, &mut full);
        for (o, &i) in out.iter_mut().zip(&self.idx) {
            *o = full[i];
        }
    }
}

/// Deterministic field `ξ(t) = c_t`.
#[derive(Debug, Clone)]
pub struct ConstantField {
    pub values: Vec<f64>,
}

impl FieldModel for ConstantField {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn moment(&self, t: usize, _p: f64) -> f64 {
        self.values[t].abs()
    }

    fn pair_moment(&self, t: usize, s: usize, _p: f64) -> f64 {
        (self.values[t] - self.values[s]).abs()
    }

    fn sample_path(&self, _rng: &mut dyn RngCore, out: &mut [f64]) {
        out.copy_from_slice(&self.values);
    }

    fn sample_sup(&self, _rng: &mut dyn RngCore) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Field given by observed paths: each row of `paths` is one equally
/// likely realisation. Sampling draws rows with replacement.
#[derive(Debug, Clone)]
pub struct EmpiricalField {
    labels: Vec<String>,
    paths: PathMatrix,
}

impl EmpiricalField {
    pub fn new(labels: Vec<String>, paths: PathMatrix) -> Result<Self> {
        if paths.rows == 0 || paths.cols == 0 {
            return Err(Error::EmptyInput);
        }
        if labels.len() != paths.cols {
            return Err(Error::Dimension(format!("{} labels for {} columns", labels.len(), paths.cols)));
        }
        if paths.data.iter().any(|x| !x.is_finite()) {
            return Err(invalid("paths must be finite"));
        }
        Ok(EmpiricalField { labels, paths })
    }

    /// CSV with a header row of labels and one path per row.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let labels: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let mut data = Vec::new();
        let mut rows = 0;
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != labels.len() {
                return Err(Error::Dimension(format!("row {} has {} fields, expected {}", rows + 1, rec.len(), labels.len())));
            }
            for f in rec.iter() {
                data.push(f.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {f:?}: {e}", rows + 1)))?);
            }
            rows += 1;
        }
        EmpiricalField::new(labels, PathMatrix { rows, cols: data.len() / rows.max(1), data })
    }

    fn column(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.paths.rows).map(move |r| self.paths.row(r)[t])
    }

    fn mean_pow(&self, it: impl Iterator<Item = f64>, p: f64) -> f64 {
        let s: f64 = it.map(|x| x.abs().powf(p)).sum();
        (s / self.paths.rows as f64).powf(1.0 / p)
    }
}

impl FieldModel for EmpiricalField {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn label(&self, t: usize) -> String {
        self.labels[t].clone()
    }

    fn moment(&self, t: usize, p: f64) -> f64 {
        self.mean_pow(self.column(t), p)
    }

    fn pair_moment(&self, t: usize, s: usize, p: f64) -> f64 {
        self.mean_pow(self.column(t).zip(self.column(s)).map(|(a, b)| a - b), p)
    }

    fn sample_path(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        let r = (rng.next_u64() % self.paths.rows as u64) as usize;
        out.copy_from_slice(self.paths.row(r));
    }
}

/// Centered Gaussian field with a given covariance, sampled as `L z` with
/// `L Lᵀ = Σ` from a symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct GaussianField {
    labels: Vec<String>,
    cov: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl GaussianField {
    pub fn new(labels: Vec<String>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if cov.len() != n || cov.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("covariance must be {n}x{n}")));
        }
        let cov = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
        if (0..n).any(|i| (0..n).any(|j| cov[(i, j)] != cov[(j, i)] || !cov[(i, j)].is_finite())) {
            return Err(invalid("covariance must be finite and symmetric"));
        }
        let eig = SymmetricEigen::new(cov.clone());
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = EIGEN_CLAMP * top.max(1.0);
        let mut sqrt = DVector::zeros(n);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -floor {
                return Err(Error::NotPositiveSemiDefinite(lambda));
            }
            sqrt[k] = lambda.max(0.0).sqrt();
        }
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt);
        Ok(GaussianField { labels, cov, factor })
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)]
    }
}

impl FieldModel for GaussianField {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn label(&self, t: usize) -> String {
        self.labels[t].clone()
    }

    fn moment(&self, t: usize, p: f64) -> f64 {
        self.cov[(t, t)].max(0.0).sqrt() * standard_normal_moment(p)
    }

    fn pair_moment(&self, t: usize, s: usize, p: f64) -> f64 {
        let var = self.cov[(t, t)] + self.cov[(s, s)] - 2.0 * self.cov[(t, s)];
        var.max(0.0).sqrt() * standard_normal_moment(p)
    }

    fn sample_path(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        let n = self.len();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|k| self.factor[(i, k)] * z[k]).sum();
        }
    }
}

/// `n` equally spaced points on the unit circle, squared-exponential
/// covariance `exp(-|x - y|² / (2ℓ²))` in chord distance.
pub fn gaussian_circle(n: usize, length_scale: f64) -> Result<GaussianField> {
    if n == 0 || !(length_scale > 0.0) {
        return Err(invalid(format!("circle needs n >= 1 and length scale > 0 (n={n}, ℓ={length_scale})")));
    }
    let theta: Vec<f64> = (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect();
    let cov = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let chord = 2.0 * (0.5 * (theta[i] - theta[j])).sin().abs();
                    (-chord * chord / (2.0 * length_scale * length_scale)).exp()
                })
                .collect()
        })
        .collect();
    GaussianField::new((0..n).map(|k| format!("c{k}")).collect(), cov)
}

/// Chord-distance space of the circle points, labels matching [`gaussian_circle`].
pub fn circle_space(n: usize) -> Result<FiniteIndexSpace> {
    FiniteIndexSpace::from_fn((0..n).map(|k| format!("c{k}")).collect(), |i, j| {
        2.0 * (std::f64::consts::PI * (i as f64 - j as f64) / n as f64).sin().abs()
    })
}

/// RNG of replica `r`: one ChaCha stream per replica, so results do not
/// depend on how replicas are spread over threads.
pub fn replica_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

/// Row-major `count × |T|` matrix of sampled paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl PathMatrix {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn sups(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect()
    }
}

pub fn sample_paths(model: &dyn FieldModel, count: usize, seed: u64) -> Result<PathMatrix> {
    if count == 0 {
        return Err(invalid("path count must be at least 1"));
    }
    let cols = model.len();
    let mut data = vec![0.0; count * cols];
    data.par_chunks_mut(cols.max(1)).enumerate().for_each(|(r, row)| {
        let mut rng = replica_rng(seed, r as u64);
        model.sample_path(&mut rng, row);
    });
    Ok(PathMatrix { rows: count, cols, data })
}

/// `max_t |ξ(t)|` for `count` replicas, without storing paths.
pub fn sample_sups(model: &dyn FieldModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("path count must be at least 1"));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|r| model.sample_sup(&mut replica_rng(seed, r as u64)))
        .collect())
}

/// Fraction of sups strictly above each `u`.
pub fn empirical_sup_tail(sups: &[f64], u_grid: &[f64]) -> Result<TailBoundCurve> {
    if sups.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = sups.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let values = u_grid.iter().map(|&u| (sorted.len() - sorted.partition_point(|s| *s <= u)) as f64 / n).collect();
    TailBoundCurve::new(u_grid.to_vec(), values, Provenance::Empirical)
}

/// DKW half-width `sqrt(ln(2/α) / (2n))`.
pub fn dkw_band(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Empirical tail against a bound curve on a shared grid.
///
/// A point fails when `empirical + band > bound` while `bound < 1`.
/// `rejected` separately lists points where even `empirical - band` lies
/// above the bound, i.e. where the bound is contradicted by the sample.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub u: Vec<f64>,
    pub empirical: Vec<f64>,
    pub band: f64,
    pub bound: Vec<f64>,
    pub point_pass: Vec<bool>,
    pub violations: Vec<f64>,
    pub rejected: Vec<f64>,
    pub samples: usize,
    pub alpha: f64,
    pub verdict: Verdict,
}

pub fn dominance_report(
    empirical: &TailBoundCurve,
    samples: usize,
    bound: &TailBoundCurve,
    alpha: f64,
) -> Result<DominanceReport> {
    if empirical.u != bound.u {
        return Err(Error::GridMismatch("empirical and bound curves use different u grids".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) || samples == 0 {
        return Err(invalid(format!("need 0 < alpha < 1 and samples > 0 (alpha={alpha}, n={samples})")));
    }
    let band = dkw_band(samples, alpha);
    let mut point_pass = Vec::with_capacity(bound.u.len());
    let mut violations = Vec::new();
    let mut rejected = Vec::new();
    for ((&u, &e), &b) in bound.u.iter().zip(&empirical.values).zip(&bound.values) {
        let ok = b >= 1.0 || e + band <= b;
        if !ok {
            violations.push(u);
        }
        if b < 1.0 && e - band > b {
            rejected.push(u);
        }
        point_pass.push(ok);
    }
    let verdict = if violations.is_empty() { Verdict::Pass } else { Verdict::Fail };
    Ok(DominanceReport {
        u: bound.u.clone(),
        empirical: empirical.values.clone(),
        band,
        bound: bound.values.clone(),
        point_pass,
        violations,
        rejected,
        samples,
        alpha,
        verdict,
    })
}
