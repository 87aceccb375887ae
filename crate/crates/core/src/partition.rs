//! Partition scheme: per-part natural parameters, the summed tail `Y`, a
//! decay certificate and a search for partitions with small `Y`.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{check_u_grid, tail_factor, EntropyIntegral, Provenance, TailBoundCurve, THETA_PREFACTOR};
use crate::error::{invalid, Error, Result};
use crate::gls::{default_p_grid, gls_norm, natural_psi, PsiFunction};
use crate::metric::{diameter, distance_from_pair_moments, FiniteIndexSpace};
use crate::simulate::{replica_rng, FieldModel, Restricted};

/// `Y` at the last probe point must fall below this for a PASS.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;
/// Relative change of partial sums under doubling that ends a series.
pub const SERIES_TOL: f64 = 1e-8;
/// Largest index set enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Ordered list of nonempty index subsets covering `T`; parts may overlap.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    pub parts: Vec<Vec<usize>>,
}

impl Partition {
    pub fn whole(n: usize) -> Self {
        Partition { parts: vec![(0..n).collect()] }
    }

    pub fn singletons(n: usize) -> Self {
        Partition { parts: (0..n).map(|i| vec![i]).collect() }
    }

    /// Parts sorted internally and among themselves.
    pub fn canonical(&self) -> Self {
        let mut parts: Vec<Vec<usize>> = self
            .parts
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.sort_unstable();
                p.dedup();
                p
            })
            .collect();
        parts.sort();
        Partition { parts }
    }

    pub fn labels(&self, field: &dyn FieldModel) -> Vec<Vec<String>> {
        self.parts.iter().map(|p| p.iter().map(|&i| field.label(i)).collect()).collect()
    }

    /// One part per line, comma-separated labels.
    pub fn read(r: impl BufRead, labels: &[String]) -> Result<Self> {
        let mut parts = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let part = line
                .split(',')
                .map(|l| {
                    let l = l.trim();
                    labels.iter().position(|x| x == l).ok_or_else(|| Error::Partition(format!("unknown label {l:?}")))
                })
                .collect::<Result<Vec<usize>>>()?;
            parts.push(part);
        }
        Ok(Partition { parts })
    }

    pub fn write(&self, mut w: impl Write, labels: &[String]) -> Result<()> {
        for p in &self.parts {
            let line: Vec<&str> = p.iter().map(|&i| labels[i].as_str()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Coverage and nonemptiness; overlaps are allowed.
pub fn validate_partition(partition: &Partition, space: &FiniteIndexSpace) -> Result<()> {
    let n = space.len();
    if let Some(k) = partition.parts.iter().position(Vec::is_empty) {
        return Err(Error::Partition(format!("part {k} is empty")));
    }
    let mut covered = vec![false; n];
    for p in &partition.parts {
        for &i in p {
            if i >= n {
                return Err(Error::Partition(format!("index {i} is not in the space")));
            }
            covered[i] = true;
        }
    }
    let missing: Vec<&str> = (0..n).filter(|&i| !covered[i]).map(|i| space.labels()[i].as_str()).collect();
    if !missing.is_empty() {
        return Err(Error::Partition(format!("uncovered points: {}", missing.join(", "))));
    }
    Ok(())
}

/// Shared settings of part computations.
#[derive(Debug, Clone)]
pub struct PartitionOptions {
    /// Moment grid for the natural `ψ` of each part; defaults to the grid
    /// of the field's moment limit.
    pub p_grid: Option<Vec<f64>>,
    pub prefactor: f64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { p_grid: None, prefactor: THETA_PREFACTOR }
    }
}

impl PartitionOptions {
    fn grid(&self, field: &dyn FieldModel) -> Vec<f64> {
        self.p_grid.clone().unwrap_or_else(|| default_p_grid(field.moment_limit()))
    }
}

/// Natural parameters of one part.
#[derive(Debug, Clone, Serialize)]
pub struct PartProfile {
    pub indices: Vec<usize>,
    pub b: f64,
    pub diameter: f64,
    pub theta: f64,
    /// `sup_t ||ξ(t)||Gψ_m` over the part (1 up to grid effects).
    pub anchor: f64,
    /// `max(Θ_m, anchor)`.
    pub z: f64,
    /// The field vanishes identically on the part.
    pub zero: bool,
    #[serde(skip)]
    pub psi: Option<PsiFunction>,
}

impl PartProfile {
    /// `exp(-ν*_{ψ_m}(ln(u/Z_m)))`, or `0` on a zero part.
    pub fn summand(&self, u: f64) -> f64 {
        match &self.psi {
            None => 0.0,
            Some(psi) => tail_factor(psi, self.z, u),
        }
    }
}

pub fn part_profile(field: &dyn FieldModel, part: &[usize], opts: &PartitionOptions) -> Result<PartProfile> {
    let sub = Restricted::new(field, part.to_vec())?;
    let grid = opts.grid(field);
    if (0..sub.len()).all(|t| sub.moment(t, 1.0) == 0.0) {
        return Ok(PartProfile {
            indices: part.to_vec(),
            b: f64::INFINITY,
            diameter: 0.0,
            theta: 0.0,
            anchor: 0.0,
            z: 0.0,
            zero: true,
            psi: None,
        });
    }
    let psi = natural_psi(&sub, &grid)?;
    let nodes = psi.grid();
    let space = distance_from_pair_moments(&sub, &psi, &nodes)?;
    let d = diameter(&space);
    let theta = EntropyIntegral::new(&space, &psi, opts.prefactor)?.eval(d)?;
    let anchor = (0..sub.len())
        .map(|t| gls_norm(&|p: f64| sub.moment(t, p), &psi, &nodes).value)
        .fold(0.0f64, f64::max);
    Ok(PartProfile {
        indices: part.to_vec(),
        b: psi.upper(),
        diameter: d,
        theta,
        anchor,
        z: theta.max(anchor),
        zero: false,
        psi: Some(psi),
    })
}

/// `Y(u)` of a partition together with its part profiles.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionTail {
    pub curve: TailBoundCurve,
    pub profiles: Vec<Arc<PartProfile>>,
    pub diagnostic: Option<String>,
}

/// `Y(u) = Σ_m min(1, exp(-ν*_{ψ_m}(ln(u/Z_m))))`, clamped to 1.
pub fn y_from_profiles(profiles: &[Arc<PartProfile>], u_grid: &[f64]) -> Result<PartitionTail> {
    check_u_grid(u_grid)?;
    if profiles.iter().any(|p| !p.z.is_finite()) {
        return Ok(PartitionTail {
            curve: TailBoundCurve::ones(u_grid.to_vec(), Provenance::PartitionBound)?,
            profiles: profiles.to_vec(),
            diagnostic: Some("a part has a divergent entropy integral".into()),
        });
    }
    let values: Vec<f64> = u_grid
        .par_iter()
        .map(|&u| profiles.iter().map(|p| p.summand(u).clamp(0.0, 1.0)).sum::<f64>().min(1.0))
        .collect();
    Ok(PartitionTail {
        curve: TailBoundCurve::new(u_grid.to_vec(), values, Provenance::PartitionBound)?,
        profiles: profiles.to_vec(),
        diagnostic: None,
    })
}

pub fn partition_tail_y(
    field: &dyn FieldModel,
    partition: &Partition,
    u_grid: &[f64],
    opts: &PartitionOptions,
) -> Result<PartitionTail> {
    if partition.parts.iter().any(Vec::is_empty) {
        return Err(Error::Partition("empty part".into()));
    }
    let profiles = partition
        .parts
        .par_iter()
        .map(|p| part_profile(field, p, opts).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    y_from_profiles(&profiles, u_grid)
}

/// Sum of an infinite family of summands, doubling the number of parts
/// until partial sums change by less than [`SERIES_TOL`] relative.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesTail {
    pub curve: TailBoundCurve,
    pub parts_used: u64,
    pub converged: bool,
}

/// `summand(m, u_grid)` gives the `m`-th term (`m >= 1`) on the grid.
/// Grid points whose partial sums never settle get the trivial value 1.
pub fn series_tail_y(
    summand: &(dyn Fn(u64, &[f64]) -> Vec<f64> + Sync),
    u_grid: &[f64],
    start: u64,
    max_parts: u64,
) -> Result<SeriesTail> {
    check_u_grid(u_grid)?;
    if start == 0 || max_parts < start {
        return Err(invalid(format!("need 1 <= start <= max_parts (start={start}, max={max_parts})")));
    }
    let block = |from: u64, to: u64| -> Vec<f64> {
        (from..=to)
            .into_par_iter()
            .map(|m| summand(m, u_grid))
            .reduce(|| vec![0.0; u_grid.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect())
    };
    let mut n = start;
    let mut sums = block(1, n);
    loop {
        if 2 * n > max_parts {
            let values = vec![1.0; u_grid.len()];
            return Ok(SeriesTail {
                curve: TailBoundCurve::new(u_grid.to_vec(), values, Provenance::PartitionBound)?,
                parts_used: n,
                converged: false,
            });
        }
        let more = block(n + 1, 2 * n);
        let next: Vec<f64> = sums.iter().zip(&more).map(|(a, b)| a + b).collect();
        let stable = next.iter().zip(&more).all(|(s, d)| *d <= SERIES_TOL * s || *s >= 1.0 + *d);
        n *= 2;
        sums = next;
        if stable {
            return Ok(SeriesTail {
                curve: TailBoundCurve::new(u_grid.to_vec(), sums, Provenance::PartitionBound)?,
                parts_used: n,
                converged: true,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Certificate {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCertificate {
    pub verdict: Certificate,
    pub last_value: f64,
    /// `-d ln Y / d ln u` over the last decade of the grid; `None` when
    /// `Y` vanishes there.
    pub decay_exponent: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln u` over points with `y > 0`.
pub(crate) fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, y)| *y > 0.0).map(|(u, y)| (u.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Points of the last decade `[u_max/10, u_max]` of a curve.
pub(crate) fn last_decade(curve: &TailBoundCurve) -> Vec<(f64, f64)> {
    let top = *curve.u.last().unwrap();
    curve.u.iter().zip(&curve.values).filter(|(u, _)| **u >= top / 10.0).map(|(u, v)| (*u, *v)).collect()
}

/// PASS when `Y` is nonincreasing and below `threshold` at the last probe;
/// a finite grid cannot prove the limit, so anything else is INCONCLUSIVE.
pub fn certify_decay(curve: &TailBoundCurve, threshold: f64) -> DecayCertificate {
    let last_value = *curve.values.last().unwrap();
    let monotone = curve.values.windows(2).all(|w| w[1] <= w[0]);
    let decay_exponent = log_log_slope(&last_decade(curve)).map(|s| -s);
    let verdict = if monotone && last_value < threshold { Certificate::Pass } else { Certificate::Inconclusive };
    DecayCertificate { verdict, last_value, decay_exponent }
}

pub fn boundedness_certificate(
    field: &dyn FieldModel,
    partition: &Partition,
    u_probe: &[f64],
    opts: &PartitionOptions,
    threshold: f64,
) -> Result<DecayCertificate> {
    let y = partition_tail_y(field, partition, u_probe, opts)?;
    Ok(certify_decay(&y.curve, threshold))
}

/// Number of set partitions of an `n`-set.
pub fn bell(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap().saturating_add(x);
            next.push(v);
        }
        row = next;
    }
    row[0]
}

/// All set partitions of `{0..n}` via restricted growth strings.
pub fn all_set_partitions(n: usize) -> Vec<Partition> {
    fn rec(i: usize, n: usize, rgs: &mut Vec<usize>, max: usize, out: &mut Vec<Partition>) {
        if i == n {
            let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
            let mut parts = vec![Vec::new(); k];
            for (t, &b) in rgs.iter().enumerate() {
                parts[b].push(t);
            }
            out.push(Partition { parts });
            return;
        }
        for b in 0..=max + usize::from(i > 0) {
            if i == 0 && b > 0 {
                break;
            }
            rgs.push(b);
            rec(i + 1, n, rgs, max.max(b), out);
            rgs.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, n, &mut Vec::with_capacity(n), 0, &mut out);
    }
    out
}

/// Outcome of a partition search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub partition: Partition,
    pub curve: TailBoundCurve,
    /// Trapezoid integral of `Y` over the grid.
    pub objective: f64,
    pub best_seed_objective: f64,
    /// Pointwise minimum of `Y` over every evaluated partition.
    pub envelope: TailBoundCurve,
    pub evaluated: usize,
    pub exhaustive: bool,
}

struct Evaluator<'a> {
    field: &'a dyn FieldModel,
    u_grid: &'a [f64],
    opts: &'a PartitionOptions,
    cache: Mutex<HashMap<Vec<usize>, Arc<PartProfile>>>,
    seen: HashMap<Partition, f64>,
    envelope: Vec<f64>,
    evaluated: usize,
}

impl<'a> Evaluator<'a> {
    fn profiles(&self, partition: &Partition) -> Result<Vec<Arc<PartProfile>>> {
        let missing: BTreeSet<Vec<usize>> = {
            let cache = self.cache.lock().unwrap();
            partition.parts.iter().filter(|p| !cache.contains_key(*p)).cloned().collect()
        };
        let fresh = missing
            .into_par_iter()
            .map(|p| part_profile(self.field, &p, self.opts).map(|prof| (p, Arc::new(prof))))
            .collect::<Result<Vec<_>>>()?;
        let mut cache = self.cache.lock().unwrap();
        cache.extend(fresh);
        Ok(partition.parts.iter().map(|p| cache[p].clone()).collect())
    }

    /// Objective and curve of a canonical partition; memoized.
    fn eval(&mut self, partition: &Partition) -> Result<(f64, TailBoundCurve)> {
        let profiles = self.profiles(partition)?;
        let tail = y_from_profiles(&profiles, self.u_grid)?;
        let obj = tail.curve.integral();
        if !self.seen.contains_key(partition) {
            self.evaluated += 1;
            self.seen.insert(partition.clone(), obj);
            for (e, v) in self.envelope.iter_mut().zip(&tail.curve.values) {
                *e = e.min(*v);
            }
        }
        Ok((obj, tail.curve))
    }
}

/// Single-linkage clusterings: one partition per merge level.
fn linkage_partitions(space: &FiniteIndexSpace) -> Vec<Partition> {
    let n = space.len();
    let mut edges: Vec<(f64, usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (space.d(i, j), i, j)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut out = Vec::new();
    let mut k = 0;
    while k < edges.len() {
        let level = edges[k].0;
        let mut merged = false;
        while k < edges.len() && edges[k].0 == level {
            let (a, b) = (find(&mut parent, edges[k].1), find(&mut parent, edges[k].2));
            if a != b {
                parent[a] = b;
                merged = true;
            }
            k += 1;
        }
        if merged {
            let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
            for i in 0..n {
                let r = find(&mut parent, i);
                groups.entry(r).or_default().push(i);
            }
            let p = Partition { parts: groups.into_values().collect() }.canonical();
            if p.parts.len() > 1 {
                out.push(p);
            }
        }
    }
    out
}

/// Split a part in two by removing the longest edge of its minimum
/// spanning tree.
fn linkage_split(space: &FiniteIndexSpace, part: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    if part.len() < 2 {
        return None;
    }
    let sub = space.restrict(part);
    let levels = linkage_partitions(&sub);
    // the coarsest nontrivial clustering has exactly two clusters
    let two = levels.into_iter().rev().find(|p| p.parts.len() == 2)?;
    let map = |v: &Vec<usize>| v.iter().map(|&i| part[i]).collect::<Vec<_>>();
    Some((map(&two.parts[0]), map(&two.parts[1])))
}

fn neighbours(space: &FiniteIndexSpace, current: &Partition) -> Vec<Partition> {
    let parts = &current.parts;
    let mut out = Vec::new();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let mut next: Vec<Vec<usize>> =
                parts.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, p)| p.clone()).collect();
            next.push(parts[i].iter().chain(&parts[j]).copied().collect());
            out.push(Partition { parts: next }.canonical());
        }
    }
    for (i, part) in parts.iter().enumerate() {
        if let Some((a, b)) = linkage_split(space, part) {
            let mut next: Vec<Vec<usize>> =
                parts.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, p)| p.clone()).collect();
            next.push(a);
            next.push(b);
            out.push(Partition { parts: next }.canonical());
        }
    }
    for (i, from) in parts.iter().enumerate() {
        if from.len() < 2 {
            continue;
        }
        for &x in from {
            for j in 0..parts.len() {
                if j == i {
                    continue;
                }
                let next: Vec<Vec<usize>> = parts
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        if k == i {
                            p.iter().copied().filter(|&y| y != x).collect()
                        } else if k == j {
                            p.iter().copied().chain([x]).collect()
                        } else {
                            p.clone()
                        }
                    })
                    .collect();
                out.push(Partition { parts: next }.canonical());
            }
        }
    }
    out
}

/// Approximate `inf` over partitions of `∫ Y du`.
///
/// With `budget >= Bell(|T|)` (and `|T| <= 12`) every set partition is
/// evaluated. Otherwise the whole space, the singletons and single-linkage
/// clusterings of `space` seed a first-improvement local search over merge,
/// split and move steps. `budget` caps the number of distinct partitions
/// evaluated; the whole space and the singletons are always evaluated.
pub fn search_partition(
    field: &dyn FieldModel,
    space: &FiniteIndexSpace,
    u_grid: &[f64],
    budget: usize,
    seed: u64,
    opts: &PartitionOptions,
) -> Result<SearchResult> {
    if budget == 0 {
        return Err(invalid("search budget must be positive"));
    }
    let n = field.len();
    if space.len() != n {
        return Err(Error::Dimension(format!("space has {} points, field {n}", space.len())));
    }
    check_u_grid(u_grid)?;
    let mut ev = Evaluator {
        field,
        u_grid,
        opts,
        cache: Mutex::new(HashMap::new()),
        seen: HashMap::new(),
        envelope: vec![1.0; u_grid.len()],
        evaluated: 0,
    };

    if n <= EXHAUSTIVE_LIMIT && (budget as u128) >= bell(n) {
        let mut best: Option<(f64, Partition, TailBoundCurve)> = None;
        for p in all_set_partitions(n) {
            let p = p.canonical();
            let (obj, curve) = ev.eval(&p)?;
            if best.as_ref().is_none_or(|b| obj < b.0) {
                best = Some((obj, p, curve));
            }
        }
        let (objective, partition, curve) = best.expect("n >= 1");
        return Ok(SearchResult {
            partition,
            curve,
            objective,
            best_seed_objective: objective,
            envelope: TailBoundCurve::new(u_grid.to_vec(), ev.envelope, Provenance::PartitionBound)?,
            evaluated: ev.evaluated,
            exhaustive: true,
        });
    }

    let mut seeds = vec![Partition::whole(n), Partition::singletons(n).canonical()];
    for p in linkage_partitions(space) {
        if !seeds.contains(&p) {
            seeds.push(p);
        }
    }
    let mut best: Option<(f64, Partition, TailBoundCurve)> = None;
    for (k, p) in seeds.iter().enumerate() {
        if k >= 2 && ev.evaluated >= budget {
            break;
        }
        let (obj, curve) = ev.eval(p)?;
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, p.clone(), curve));
        }
    }
    let (mut objective, mut partition, mut curve) = best.expect("seeds are nonempty");
    let best_seed_objective = objective;

    let mut rng = replica_rng(seed, 0);
    'outer: while ev.evaluated < budget {
        let mut moves = neighbours(space, &partition);
        moves.shuffle(&mut rng);
        for m in moves {
            if ev.seen.contains_key(&m) {
                continue;
            }
            if ev.evaluated >= budget {
                break 'outer;
            }
            let (obj, c) = ev.eval(&m)?;
            if obj < objective {
                objective = obj;
                partition = m;
                curve = c;
                continue 'outer;
            }
        }
        break;
    }
    debug_assert!(objective <= best_seed_objective);
    Ok(SearchResult {
        partition,
        curve,
        objective,
        best_seed_objective,
        envelope: TailBoundCurve::new(u_grid.to_vec(), ev.envelope, Provenance::PartitionBound)?,
        evaluated: ev.evaluated,
        exhaustive: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sup_tail_bound;
    use crate::metric::natural_distance;
    use crate::numeric::log_space;
    use crate::simulate::{gaussian_circle, ConstantField, GaussianField};

    fn line_space(n: usize) -> FiniteIndexSpace {
        FiniteIndexSpace::from_fn((0..n).map(|i| i.to_string()).collect(), |i, j| (i as f64 - j as f64).abs())
            .unwrap()
    }

    #[test]
    fn bell_numbers() {
        assert_eq!((0..8).map(bell).collect::<Vec<_>>(), vec![1, 1, 2, 5, 15, 52, 203, 877]);
        for n in 1..7 {
            let all = all_set_partitions(n);
            assert_eq!(all.len() as u128, bell(n));
            let distinct: BTreeSet<Vec<Vec<usize>>> = all.iter().map(|p| p.canonical().parts).collect();
            assert_eq!(distinct.len(), all.len());
        }
    }

    #[test]
    fn validation() {
        let s = line_space(3);
        assert!(validate_partition(&Partition::whole(3), &s).is_ok());
        assert!(validate_partition(&Partition::singletons(3), &s).is_ok());
        let overlapping = Partition { parts: vec![vec![0, 1], vec![1, 2]] };
        assert!(validate_partition(&overlapping, &s).is_ok());
        match validate_partition(&Partition { parts: vec![vec![0, 1]] }, &s) {
            Err(Error::Partition(msg)) => assert!(msg.contains('2')),
            other => panic!("{other:?}"),
        }
        assert!(validate_partition(&Partition { parts: vec![vec![0, 1, 2], vec![]] }, &s).is_err());
    }

    #[test]
    fn read_write_round_trip() {
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let p = Partition { parts: vec![vec![0, 2], vec![1]] };
        let mut buf = Vec::new();
        p.write(&mut buf, &labels).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a,c\nb\n");
        assert_eq!(Partition::read(buf.as_slice(), &labels).unwrap(), p);
        assert!(Partition::read("a,z\n".as_bytes(), &labels).is_err());
    }

    #[test]
    fn singleton_profile_uses_anchor() {
        let f = gaussian_circle(6, 0.5).unwrap();
        let prof = part_profile(&f, &[2], &PartitionOptions::default()).unwrap();
        assert_eq!(prof.diameter, 0.0);
        assert_eq!(prof.theta, 0.0);
        assert!((prof.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_values_give_zero_diameter() {
        let f = ConstantField { values: vec![2.0, 2.0, 2.0] };
        let prof = part_profile(&f, &[0, 1, 2], &PartitionOptions::default()).unwrap();
        assert_eq!(prof.diameter, 0.0);
    }

    #[test]
    fn one_part_matches_whole_space_bound() {
        let f = gaussian_circle(8, 0.5).unwrap();
        let u = log_space(0.5, 200.0, 40);
        let opts = PartitionOptions::default();
        let y = partition_tail_y(&f, &Partition::whole(8), &u, &opts).unwrap();
        let psi = natural_psi(&f, &default_p_grid(f.moment_limit())).unwrap();
        let space = natural_distance(&f, &psi).unwrap();
        let anchor = y.profiles[0].anchor;
        let whole = sup_tail_bound(&space, &psi, anchor, &u, THETA_PREFACTOR).unwrap();
        assert_eq!(y.curve.values, whole.curve.values);
    }

    #[test]
    fn constant_field_certificate() {
        let f = ConstantField { values: vec![1.0, -1.5, 0.5] };
        let u = log_space(0.1, 100.0, 50);
        let c = boundedness_certificate(&f, &Partition::singletons(3), &u, &PartitionOptions::default(), 1e-3)
            .unwrap();
        assert_eq!(c.verdict, Certificate::Pass);
    }

    #[test]
    fn quartic_decay_exponent() {
        let psi = PsiFunction::constant(1.0, 4.0).unwrap();
        let space = line_space(3);
        let u = log_space(1.0, 1e4, 80);
        let b = sup_tail_bound(&space, &psi, 1.0, &u, THETA_PREFACTOR).unwrap();
        assert!(b.finite);
        let c = certify_decay(&b.curve, 1e-3);
        assert_eq!(c.verdict, Certificate::Pass);
        assert!((c.decay_exponent.unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn series_sums_a_geometric_family() {
        let u = [1.0, 2.0];
        let s = series_tail_y(&|m, u: &[f64]| u.iter().map(|x| 0.1 * 0.5f64.powi(m as i32) / x).collect(), &u, 4, 1 << 20)
            .unwrap();
        assert!(s.converged);
        assert!((s.curve.values[0] - 0.1).abs() < 1e-9);
        let bad = series_tail_y(&|m, u: &[f64]| vec![1e-6 / m as f64; u.len()], &u, 4, 1 << 12).unwrap();
        assert!(!bad.converged);
        assert_eq!(bad.curve.values, vec![1.0, 1.0]);
    }

    #[test]
    fn exhaustive_search_on_small_space() {
        // two tight pairs far apart, with very different scales
        let cov = vec![
            vec![1.0, 0.99, 0.0, 0.0],
            vec![0.99, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 100.0, 99.0],
            vec![0.0, 0.0, 99.0, 100.0],
        ];
        let f = GaussianField::new((0..4).map(|i| i.to_string()).collect(), cov).unwrap();
        let space = line_space(4);
        let u = log_space(0.5, 500.0, 40);
        let opts = PartitionOptions::default();
        let r = search_partition(&f, &space, &u, 1000, 1, &opts).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.evaluated, 15);
        let mut best = f64::INFINITY;
        for p in all_set_partitions(4) {
            best = best.min(partition_tail_y(&f, &p, &u, &opts).unwrap().curve.integral());
        }
        assert!((r.objective - best).abs() <= 1e-12 * best);
        assert!(r.envelope.values.iter().zip(&r.curve.values).all(|(e, c)| e <= c));
    }

    #[test]
    fn local_search_never_worse_than_seeds() {
        let f = gaussian_circle(16, 0.3).unwrap();
        let space = crate::simulate::circle_space(16).unwrap();
        let u = log_space(0.5, 500.0, 30);
        let r = search_partition(&f, &space, &u, 12, 3, &PartitionOptions::default()).unwrap();
        assert!(!r.exhaustive);
        assert!(r.objective <= r.best_seed_objective);
        assert!(r.evaluated <= 12);
        let again = search_partition(&f, &space, &u, 12, 3, &PartitionOptions::default()).unwrap();
        assert_eq!(again.partition, r.partition);
    }

    #[test]
    fn rejects_zero_budget() {
        let f = ConstantField { values: vec![1.0] };
        assert!(search_partition(&f, &line_space(1), &[1.0], 0, 0, &PartitionOptions::default()).is_err());
    }
}
