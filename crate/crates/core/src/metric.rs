//! Finite semi-metric index spaces: validation, diameter, covering numbers and
//! metric entropy, and the natural distance a field induces through a `ψ`.
//!
//! Covering numbers use closed balls centered at points of the space. They
//! are exact (branch and bound over 64-bit masks) for at most
//! [`EXACT_COVER_LIMIT`] points and greedy above that.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gls::PsiFunction;
use crate::numeric::fmt_num;
use crate::simulate::FieldModel;

/// Largest space whose covering numbers are computed exactly.
pub const EXACT_COVER_LIMIT: usize = 64;
/// Absolute slack (scaled by `1 + max distance`) in the triangle check.
pub const TRIANGLE_TOL: f64 = 1e-9;
/// Node budget of one branch-and-bound search before it settles for the
/// incumbent.
const BNB_NODE_BUDGET: u64 = 20_000_000;

/// Finite index set with a symmetric matrix of semi-distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteIndexSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
}

impl FiniteIndexSpace {
    /// Build from labels and a row-major `n × n` matrix. Only the shape is
    /// checked here; see [`validate_semi_metric`].
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("{n} labels but matrix is not {n}x{n}")));
        }
        Ok(FiniteIndexSpace { labels, dist: dist.into_iter().flatten().collect() })
    }

    /// Build from a symmetric distance function on `0..n`.
    pub fn from_fn(labels: Vec<String>, d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = d(i, j);
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        Ok(FiniteIndexSpace { labels, dist })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Sub-space on the given indices, in that order.
    pub fn restrict(&self, idx: &[usize]) -> FiniteIndexSpace {
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        let n = idx.len();
        let mut dist = vec![0.0; n * n];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                dist[a * n + b] = self.d(i, j);
            }
        }
        FiniteIndexSpace { labels, dist }
    }

    /// Sorted distinct positive pairwise distances.
    pub fn distance_levels(&self) -> Vec<f64> {
        let n = self.len();
        let mut v: Vec<f64> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.d(i, j)).filter(|d| *d > 0.0).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// CSV with a header row of labels followed by the matrix rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.labels)?;
        let n = self.len();
        for i in 0..n {
            out.write_record((0..n).map(|j| fmt_num(self.d(i, j))))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let labels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("distance {s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        FiniteIndexSpace::new(labels, rows)
    }
}

/// A single semi-metric axiom violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize },
    Diagonal { i: usize },
    Asymmetric { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Report every symmetry, diagonal, sign and triangle violation.
pub fn validate_semi_metric(space: &FiniteIndexSpace) -> ValidationReport {
    let n = space.len();
    let mut violations = Vec::new();
    let mut max = 0.0f64;
    for i in 0..n {
        if space.d(i, i) != 0.0 {
            violations.push(Violation::Diagonal { i });
        }
        for j in 0..n {
            let v = space.d(i, j);
            if !v.is_finite() {
                violations.push(Violation::NonFinite { i, j });
            } else if v < 0.0 {
                violations.push(Violation::Negative { i, j });
            } else {
                max = max.max(v);
            }
            if i < j && v != space.d(j, i) {
                violations.push(Violation::Asymmetric { i, j });
            }
        }
    }
    let tol = TRIANGLE_TOL * (1.0 + max);
    for i in 0..n {
        for k in 0..n {
            let dik = space.d(i, k);
            for j in 0..n {
                if dik > space.d(i, j) + space.d(j, k) + tol {
                    violations.push(Violation::Triangle { i, j, k });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Largest pairwise distance.
pub fn diameter(space: &FiniteIndexSpace) -> f64 {
    space.dist.iter().copied().fold(0.0, f64::max)
}

/// Metric entropy at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entropy {
    pub eps: f64,
    /// Minimal (or greedy) number of closed `eps`-balls covering the space.
    pub count: usize,
    /// `ln count`.
    pub value: f64,
    pub exact: bool,
}

/// `H(T, d, ε) = ln N(ε)`.
pub fn metric_entropy(space: &FiniteIndexSpace, eps: f64) -> Result<Entropy> {
    if !(eps > 0.0) {
        return Err(invalid(format!("entropy radius must be positive, got {eps}")));
    }
    let (count, exact) = cover_count(space, eps, None);
    Ok(Entropy { eps, count, value: (count as f64).ln(), exact })
}

fn cover_count(space: &FiniteIndexSpace, eps: f64, upper: Option<usize>) -> (usize, bool) {
    let n = space.len();
    if n <= EXACT_COVER_LIMIT {
        let balls: Vec<u64> = (0..n)
            .map(|i| (0..n).filter(|&j| space.d(i, j) <= eps).fold(0u64, |m, j| m | (1u64 << j)))
            .collect();
        exact_cover(&balls, full_mask(n), upper)
    } else {
        let words = n.div_ceil(64);
        let mut balls = vec![vec![0u64; words]; n];
        for (i, ball) in balls.iter_mut().enumerate() {
            for j in 0..n {
                if space.d(i, j) <= eps {
                    ball[j / 64] |= 1u64 << (j % 64);
                }
            }
        }
        (greedy_cover(&balls, n), false)
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Greedy set cover over multi-word bit sets. Ties go to the lowest index.
pub fn greedy_cover(balls: &[Vec<u64>], n: usize) -> usize {
    let words = n.div_ceil(64);
    let mut uncovered = vec![u64::MAX; words];
    if n % 64 != 0 {
        uncovered[words - 1] = (1u64 << (n % 64)) - 1;
    }
    let mut left = n;
    let mut count = 0;
    while left > 0 {
        let (best, gain) = balls
            .iter()
            .enumerate()
            .map(|(i, b)| (i, b.iter().zip(&uncovered).map(|(x, u)| (x & u).count_ones() as usize).sum::<usize>()))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        debug_assert!(gain > 0, "every point lies in its own ball");
        for (u, x) in uncovered.iter_mut().zip(&balls[best]) {
            *u &= !x;
        }
        left -= gain;
        count += 1;
    }
    count
}

/// Minimum set cover of `full` by `balls` (at most 64 elements). Returns the
/// size and whether optimality was proven within the node budget.
pub fn exact_cover(balls: &[u64], full: u64, upper: Option<usize>) -> (usize, bool) {
    // drop duplicates and balls dominated by another ball
    let mut sorted: Vec<u64> = balls.to_vec();
    sorted.sort_by_key(|b| std::cmp::Reverse(b.count_ones()));
    sorted.dedup();
    let mut kept: Vec<u64> = Vec::with_capacity(sorted.len());
    for b in sorted {
        if !kept.iter().any(|k| b & !k == 0) {
            kept.push(b);
        }
    }
    let greedy = {
        let wide: Vec<Vec<u64>> = kept.iter().map(|b| vec![*b]).collect();
        greedy_cover_mask(&wide, full)
    };
    let mut state = Bnb { balls: &kept, best: upper.map_or(greedy, |u| u.min(greedy)), nodes: 0 };
    state.search(full, 0);
    (state.best, state.nodes < BNB_NODE_BUDGET)
}

fn greedy_cover_mask(balls: &[Vec<u64>], full: u64) -> usize {
    let mut uncovered = full;
    let mut count = 0;
    while uncovered != 0 {
        let best = balls.iter().map(|b| b[0]).max_by_key(|b| (b & uncovered).count_ones()).unwrap();
        uncovered &= !best;
        count += 1;
    }
    count
}

struct Bnb<'a> {
    balls: &'a [u64],
    best: usize,
    nodes: u64,
}

impl Bnb<'_> {
    fn search(&mut self, uncovered: u64, depth: usize) {
        if uncovered == 0 {
            self.best = self.best.min(depth);
            return;
        }
        self.nodes += 1;
        if self.nodes >= BNB_NODE_BUDGET {
            return;
        }
        let max_gain = self.balls.iter().map(|b| (b & uncovered).count_ones()).max().unwrap_or(0);
        if max_gain == 0 {
            return;
        }
        let lower = (uncovered.count_ones()).div_ceil(max_gain) as usize;
        if depth + lower >= self.best {
            return;
        }
        // branch on the uncovered element with the fewest covering balls
        let mut pick = 0;
        let mut fewest = usize::MAX;
        let mut rest = uncovered;
        while rest != 0 {
            let e = rest.trailing_zeros();
            rest &= rest - 1;
            let c = self.balls.iter().filter(|b| *b >> e & 1 == 1).count();
            if c < fewest {
                fewest = c;
                pick = e;
            }
        }
        let mut candidates: Vec<u64> = self.balls.iter().copied().filter(|b| b >> pick & 1 == 1).collect();
        candidates.sort_by_key(|b| std::cmp::Reverse((b & uncovered).count_ones()));
        for b in candidates {
            self.search(uncovered & !b, depth + 1);
            if depth + 1 >= self.best {
                return;
            }
        }
    }
}

/// `ε ↦ N(ε)` as a right-continuous step function.
///
/// `levels[0] = 0` and the remaining levels are the distinct positive
/// pairwise distances; `counts[k]` holds on `[levels[k], levels[k+1])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyProfile {
    pub levels: Vec<f64>,
    pub counts: Vec<usize>,
    pub exact: bool,
}

impl EntropyProfile {
    pub fn count_at(&self, eps: f64) -> usize {
        let k = self.levels.partition_point(|l| *l <= eps);
        self.counts[k.saturating_sub(1)]
    }

    pub fn entropy_at(&self, eps: f64) -> f64 {
        (self.count_at(eps) as f64).ln()
    }

    /// Steps `(from, to, count)` partitioning `(0, delta]`.
    pub fn steps(&self, delta: f64) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        for k in 0..self.levels.len() {
            let from = self.levels[k];
            if from >= delta {
                break;
            }
            let to = self.levels.get(k + 1).copied().unwrap_or(f64::INFINITY).min(delta);
            out.push((from, to, self.counts[k]));
        }
        out
    }

    /// CSV rows `(eps, H, exact_flag)`, one per step start.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["eps", "H", "exact_flag"])?;
        for (l, c) in self.levels.iter().zip(&self.counts) {
            out.write_record([fmt_num(*l), fmt_num((*c as f64).ln()), format!("{}", self.exact)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Covering numbers at every distance level of the space.
///
/// Greedy counts are replaced by the running minimum over smaller radii,
/// which is still a valid cover and makes the profile nonincreasing.
pub fn entropy_profile(space: &FiniteIndexSpace) -> EntropyProfile {
    let n = space.len();
    let mut levels = vec![0.0];
    levels.extend(space.distance_levels());
    if n <= EXACT_COVER_LIMIT {
        let results: Vec<(usize, bool)> = levels.par_iter().map(|&eps| cover_count(space, eps, None)).collect();
        let exact = results.iter().all(|r| r.1);
        let mut counts: Vec<usize> = results.into_iter().map(|r| r.0).collect();
        for k in 1..counts.len() {
            counts[k] = counts[k].min(counts[k - 1]);
        }
        return EntropyProfile { levels, counts, exact };
    }

    // grow balls pair by pair in distance order and cover at each level
    let words = n.div_ceil(64);
    let mut pairs: Vec<(f64, usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (space.d(i, j), i, j)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut balls = vec![vec![0u64; words]; n];
    for (i, b) in balls.iter_mut().enumerate() {
        b[i / 64] |= 1u64 << (i % 64);
    }
    let mut counts = Vec::with_capacity(levels.len());
    let mut next = 0;
    for &eps in &levels {
        while next < pairs.len() && pairs[next].0 <= eps {
            let (_, i, j) = pairs[next];
            balls[i][j / 64] |= 1u64 << (j % 64);
            balls[j][i / 64] |= 1u64 << (i % 64);
            next += 1;
        }
        let c = greedy_cover(&balls, n);
        let prev = counts.last().copied().unwrap_or(usize::MAX);
        counts.push(c.min(prev));
    }
    EntropyProfile { levels, counts, exact: false }
}

/// Natural distance `d_ψ(t, s) = ||ξ(t) - ξ(s)||Gψ`, sup taken over the
/// grid of `ψ`.
pub fn natural_distance(field: &dyn FieldModel, psi: &PsiFunction) -> Result<FiniteIndexSpace> {
    distance_from_pair_moments(field, psi, &psi.grid())
}

pub(crate) fn distance_from_pair_moments(
    field: &dyn FieldModel,
    psi: &PsiFunction,
    grid: &[f64],
) -> Result<FiniteIndexSpace> {
    let n = field.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let labels: Vec<String> = (0..n).map(|t| field.label(t)).collect();
    let usable: Vec<(f64, f64)> =
        grid.iter().map(|&p| (p, psi.eval(p))).filter(|(_, s)| s.is_finite() && *s > 0.0).collect();
    if usable.is_empty() {
        return Err(invalid("psi is infinite on the whole grid"));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|t| {
            (0..n)
                .map(|s| {
                    if s <= t {
                        return 0.0;
                    }
                    usable.iter().fold(0.0f64, |m, &(p, scale)| {
                        let v = field.pair_moment(t, s, p);
                        if v.is_nan() {
                            f64::INFINITY
                        } else {
                            m.max(v / scale)
                        }
                    })
                })
                .collect()
        })
        .collect();
    FiniteIndexSpace::from_fn(labels, |i, j| if i < j { rows[i][j] } else { rows[j][i] })
}
