//! A process of disjointly supported peaks on `(0, 1)` whose supremum is
//! finite in every `L_p`, `p < 4`, yet not bounded in the GLS space of
//! `φ₀(p) = (4 - p)^{-1/8}` although each peak is.
//!
//! `g_n(x) = c_n f((x - a_{n+1}) / Δ_n)` on `(a_{n+1}, a_n)`, with
//! `c_n = n^β`, `Δ_n = C(β) n^{-4β-1}`, `a_n = Σ_{m≥n} Δ_m` and `C(β)`
//! normalizing `Σ Δ_n = 1`.

use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::bounds::{check_u_grid, Provenance, TailBoundCurve};
use crate::error::{invalid, Error, Result};
use crate::gls::{Piecewise, UnitInterval, Expectation, QUADRATURE_TOL};
use crate::metric::FiniteIndexSpace;
use crate::numeric::{power_sum, tanh_sinh, zeta};
use crate::simulate::FieldModel;

pub const DEFAULT_TRUNCATION: usize = 256;
/// Default number of series terms summed directly before the remainder.
pub const DEFAULT_SERIES_TERMS: u64 = 10_000;
/// Relative change under doubling of `N` that counts as stable.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Upper end of the working moment range.
pub const MOMENT_LIMIT: f64 = 4.0;
/// Label of the limit point.
pub const INFINITY_LABEL: &str = "inf";

const LEVEL_SET_NODES: usize = 1 << 16;
const DIRECT_TAIL_TERMS: usize = 1_000_000;

/// The function `f` on `(0, 1)` shaping each peak.
#[derive(Clone)]
pub enum BaseFunction {
    /// `x^{-alpha}`.
    PowerLaw { alpha: f64 },
    /// `sqrt|ln x|`.
    SqrtLog,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for BaseFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseFunction::PowerLaw { alpha } => write!(f, "PowerLaw {{ alpha: {alpha} }}"),
            BaseFunction::SqrtLog => write!(f, "SqrtLog"),
            BaseFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Default for BaseFunction {
    fn default() -> Self {
        BaseFunction::PowerLaw { alpha: 0.125 }
    }
}

impl BaseFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BaseFunction::PowerLaw { alpha } => x.powf(-alpha),
            BaseFunction::SqrtLog => x.ln().abs().sqrt(),
            BaseFunction::Custom(f) => f(x),
        }
    }

    /// `∫₀¹ |f|^p = ν(p)^p`.
    pub fn moment_pow(&self, p: f64) -> Result<f64> {
        match self {
            BaseFunction::PowerLaw { alpha } => {
                Ok(if alpha * p >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - alpha * p) })
            }
            BaseFunction::SqrtLog => Ok(statrs::function::gamma::gamma(0.5 * p + 1.0)),
            BaseFunction::Custom(f) => {
                Ok(tanh_sinh(|x| f(x).abs().powf(p), 0.0, 1.0, QUADRATURE_TOL)?.value)
            }
        }
    }

    /// `ν(p) = |f|_p`.
    pub fn nu(&self, p: f64) -> Result<f64> {
        Ok(self.moment_pow(p)?.powf(1.0 / p))
    }

    /// `P(|f(U)| > v)` in closed form, when available.
    pub fn tail(&self, v: f64) -> Option<f64> {
        match self {
            BaseFunction::PowerLaw { alpha } => Some(if v < 1.0 { 1.0 } else { v.powf(-1.0 / alpha) }),
            BaseFunction::SqrtLog => Some(if v <= 0.0 { 1.0 } else { (-v * v).exp() }),
            BaseFunction::Custom(_) => None,
        }
    }
}

/// Tail of `|f(U)|` either in closed form or from the level sets of `f`
/// on a uniform midpoint grid.
enum TailLaw<'a> {
    Closed(&'a BaseFunction),
    Levels(Vec<f64>),
}

impl TailLaw<'_> {
    fn prob(&self, v: f64) -> f64 {
        match self {
            TailLaw::Closed(b) => b.tail(v).unwrap(),
            TailLaw::Levels(sorted) => {
                (sorted.len() - sorted.partition_point(|x| *x <= v)) as f64 / sorted.len() as f64
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CounterexampleModel {
    beta: f64,
    n_trunc: usize,
    base: BaseFunction,
    c_beta: f64,
    /// `a_1, …, a_{N+1}`.
    a: Vec<f64>,
}

/// `C(β) = 1 / ζ(4β + 1)`.
pub fn c_beta(beta: f64) -> f64 {
    1.0 / zeta(4.0 * beta + 1.0)
}

impl CounterexampleModel {
    pub fn new(beta: f64, n_trunc: usize, base: BaseFunction) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        if n_trunc < 2 {
            return Err(invalid(format!("truncation N must be at least 2, got {n_trunc}")));
        }
        let m4 = base.moment_pow(MOMENT_LIMIT)?;
        if !m4.is_finite() {
            return Err(invalid("base function has an infinite 4th moment"));
        }
        let c = c_beta(beta);
        let s = 4.0 * beta + 1.0;
        let mut a = Vec::with_capacity(n_trunc + 1);
        a.push(1.0);
        for n in 2..=(n_trunc as u64 + 1) {
            a.push(c * power_sum(s, n, None));
        }
        Ok(CounterexampleModel { beta, n_trunc, base, c_beta: c, a })
    }

    pub fn default_with(beta: f64, n_trunc: usize) -> Result<Self> {
        Self::new(beta, n_trunc, BaseFunction::default())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn truncation(&self) -> usize {
        self.n_trunc
    }

    pub fn base(&self) -> &BaseFunction {
        &self.base
    }

    pub fn c_beta(&self) -> f64 {
        self.c_beta
    }

    fn s(&self) -> f64 {
        4.0 * self.beta + 1.0
    }

    pub fn c(&self, n: u64) -> f64 {
        (n as f64).powf(self.beta)
    }

    pub fn delta(&self, n: u64) -> f64 {
        self.c_beta * (n as f64).powf(-self.s())
    }

    /// `a_n = Σ_{m≥n} Δ_m`.
    pub fn a(&self, n: u64) -> f64 {
        match usize::try_from(n) {
            Ok(k) if k >= 1 && k <= self.a.len() => self.a[k - 1],
            _ => self.c_beta * power_sum(self.s(), n, None),
        }
    }

    /// The `n` whose support contains `x`, if `n <= N`.
    pub fn active_index(&self, x: f64) -> Option<u64> {
        if !(x > 0.0 && x < 1.0) {
            return None;
        }
        let idx = self.a.partition_point(|&v| v >= x);
        (idx >= 1 && idx <= self.n_trunc && x > self.a[idx]).then_some(idx as u64)
    }

    /// `g_n(x)`.
    pub fn g_n(&self, n: u64, x: f64) -> f64 {
        let (hi, lo) = (self.a(n), self.a(n + 1));
        if x > lo && x < hi {
            self.c(n) * self.base.eval((x - lo) / (hi - lo))
        } else {
            0.0
        }
    }

    /// `Σ_{n<=N} g_n(x)`, which equals `sup_n g_n(x)` for nonnegative `f`.
    pub fn g(&self, x: f64) -> f64 {
        self.active_index(x).map_or(0.0, |n| self.g_n(n, x))
    }

    /// `|g_n|_p^p = C(β) n^{pβ-4β-1} ν^p(p)`.
    pub fn exact_moment(&self, n: u64, p: f64) -> Result<f64> {
        if !(p >= 1.0 && p <= MOMENT_LIMIT) {
            return Err(invalid(format!("moment index must lie in [1, 4], got {p}")));
        }
        Ok(self.c_beta * (n as f64).powf(p * self.beta - self.s()) * self.base.moment_pow(p)?)
    }

    /// `|g_n|_p`.
    pub fn lp(&self, n: u64, p: f64) -> f64 {
        self.exact_moment(n, p).map_or(f64::INFINITY, |m| m.powf(1.0 / p))
    }

    /// `|sup_n g_n|_p^p = Σ_n |g_n|_p^p` over all `n`: `terms` summed
    /// directly, the rest by Euler-Maclaurin. `+∞` for `p >= 4`.
    pub fn sup_moment_pow(&self, p: f64, terms: u64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(invalid(format!("moment index must be at least 1, got {p}")));
        }
        if p >= MOMENT_LIMIT {
            return Ok(f64::INFINITY);
        }
        let e = self.s() - p * self.beta;
        let series = power_sum(e, 1, Some(terms)) + power_sum(e, terms + 1, None);
        Ok(self.c_beta * self.base.moment_pow(p)? * series)
    }

    /// Smallest `N = terms·2^k` at which the series value changes by less
    /// than [`TRUNCATION_TOL`] relative when `N` doubles.
    pub fn stable_terms(&self, p: f64, start: u64) -> Result<u64> {
        let mut n = start.max(1);
        let mut prev = self.sup_moment_pow(p, n)?;
        for _ in 0..20 {
            let next = self.sup_moment_pow(p, 2 * n)?;
            if (next - prev).abs() <= TRUNCATION_TOL * next.abs() {
                return Ok(n);
            }
            n *= 2;
            prev = next;
        }
        Err(invalid(format!("series at p = {p} is not stable under truncation")))
    }

    /// `Σ_{n<=N} |g_n|_p^p`: the sup moment of the truncated field.
    pub fn truncated_sup_moment_pow(&self, p: f64) -> Result<f64> {
        let e = self.s() - p * self.beta;
        Ok(self.c_beta * self.base.moment_pow(p)? * power_sum(e, 1, Some(self.n_trunc as u64)))
    }

    /// `C₁ = C(β) ν⁴(4) / β`.
    pub fn c1(&self) -> f64 {
        self.c_beta * self.base.moment_pow(MOMENT_LIMIT).unwrap_or(f64::INFINITY) / self.beta
    }

    /// `C₂ = C₁^{1/4}`, the limit of the compensated curve at `p = 4`.
    pub fn c2(&self) -> f64 {
        self.c1().powf(0.25)
    }

    fn tail_law(&self) -> TailLaw<'_> {
        if self.base.tail(1.0).is_some() {
            TailLaw::Closed(&self.base)
        } else {
            let m = LEVEL_SET_NODES;
            let mut v: Vec<f64> = (0..m).map(|k| self.base.eval((k as f64 + 0.5) / m as f64).abs()).collect();
            v.sort_by(f64::total_cmp);
            TailLaw::Levels(v)
        }
    }

    /// `P(sup_n g_n > u)` for the untruncated process.
    pub fn exact_tail_prob(&self, u: f64) -> f64 {
        if let BaseFunction::PowerLaw { alpha } = self.base {
            if u <= 1.0 {
                return 1.0;
            }
            // c_n >= u from n0 on, where the peak exceeds u surely
            let mut n0 = u.powf(1.0 / self.beta).ceil().max(1.0) as u64;
            while n0 > 1 && self.c(n0 - 1) >= u {
                n0 -= 1;
            }
            while self.c(n0) < u {
                n0 += 1;
            }
            let head = if n0 > 1 {
                self.c_beta * u.powf(-1.0 / alpha) * power_sum(self.s() - self.beta / alpha, 1, Some(n0 - 1))
            } else {
                0.0
            };
            return (head + self.a(n0)).min(1.0);
        }
        let law = self.tail_law();
        let k = (u.powf(1.0 / self.beta).ceil() as usize).clamp(1024, DIRECT_TAIL_TERMS);
        let head: f64 = (1..=k as u64).rev().map(|n| self.delta(n) * law.prob(u / self.c(n))).sum();
        (head + self.a(k as u64 + 1) * law.prob(u / self.c(k as u64 + 1))).min(1.0)
    }

    /// `P(max_{n<=N} g_n > u)` for the truncated field.
    pub fn truncated_tail_prob(&self, u: f64) -> f64 {
        let law = self.tail_law();
        (1..=self.n_trunc as u64).rev().map(|n| self.delta(n) * law.prob(u / self.c(n))).sum::<f64>().min(1.0)
    }

    pub fn exact_tail(&self, u_grid: &[f64]) -> Result<TailBoundCurve> {
        check_u_grid(u_grid)?;
        TailBoundCurve::new(u_grid.to_vec(), u_grid.iter().map(|&u| self.exact_tail_prob(u)).collect(), Provenance::Empirical)
    }

    pub fn truncated_tail(&self, u_grid: &[f64]) -> Result<TailBoundCurve> {
        check_u_grid(u_grid)?;
        TailBoundCurve::new(
            u_grid.to_vec(),
            u_grid.iter().map(|&u| self.truncated_tail_prob(u)).collect(),
            Provenance::Empirical,
        )
    }

    /// `K ln u / u⁴` (and `1` for `u <= 1`).
    pub fn log_power_bound(&self, k: f64, u_grid: &[f64]) -> Result<TailBoundCurve> {
        check_u_grid(u_grid)?;
        let v = u_grid.iter().map(|&u| if u <= 1.0 { 1.0 } else { k * u.ln() / u.powi(4) }).collect();
        TailBoundCurve::new(u_grid.to_vec(), v, Provenance::LogPowerBound)
    }

    /// Running maximum of `u⁴ P(sup > u) / ln u` over the grid points with
    /// `u >= e`.
    pub fn tail_ratio(&self, u_grid: &[f64]) -> Vec<(f64, f64, f64)> {
        let mut run = 0.0f64;
        u_grid
            .iter()
            .filter(|u| **u >= std::f64::consts::E)
            .map(|&u| {
                let r = u.powi(4) * self.exact_tail_prob(u) / u.ln();
                run = run.max(r);
                (u, r, run)
            })
            .collect()
    }

    /// `(Σ_n P(g_n > ε), Σ_n |g_n|_p^p / ε^p)`: the exact sum and its Markov bound.
    pub fn borel_cantelli(&self, eps: f64, p: f64) -> Result<(f64, f64)> {
        let markov = self.sup_moment_pow(p, DEFAULT_SERIES_TERMS)? / eps.powf(p);
        Ok((self.exact_tail_prob(eps), markov))
    }

    /// Law of `g_n - g_m` as disjoint pieces (`m = None` is the limit point).
    pub fn difference_law(&self, n: u64, m: Option<u64>) -> Piecewise {
        let piece = |k: u64, sign: f64| {
            let base = self.base.clone();
            let c = self.c(k);
            (self.delta(k), Arc::new(move |y: f64| sign * c * base.eval(y)) as Arc<dyn Fn(f64) -> f64 + Send + Sync>)
        };
        let mut pieces = vec![piece(n, 1.0)];
        if let Some(m) = m {
            pieces.push(piece(m, -1.0));
        }
        Piecewise { pieces }
    }

    /// `g_n` at `x = a_{n+1} + y Δ_n`, in the local coordinate `y ∈ (0, 1)`
    /// of its support (keeps precision near the endpoint singularity).
    pub fn g_n_local(&self, n: u64, y: f64) -> f64 {
        if y > 0.0 && y < 1.0 {
            self.c(n) * self.base.eval(y)
        } else {
            0.0
        }
    }

    /// `∫₀¹ |g_n|^p` by quadrature over the support of `g_n`, with the
    /// support width taken from the `a_n` table rather than the closed form.
    pub fn quadrature_moment(&self, n: u64, p: f64) -> Result<f64> {
        let width = self.a(n) - self.a(n + 1);
        let local = UnitInterval(|y: f64| self.g_n_local(n, y));
        Ok(width * local.expect(&|v: f64| v.abs().powf(p))?)
    }

    fn label_of(&self, t: usize) -> String {
        if t == self.n_trunc {
            INFINITY_LABEL.to_string()
        } else {
            (t + 1).to_string()
        }
    }

    fn index_n(&self, t: usize) -> Option<u64> {
        (t < self.n_trunc).then_some(t as u64 + 1)
    }

    /// `{1..N, ∞}` with `d(i, j) = |1/i - 1/j|`, `d(i, ∞) = 1/i`.
    pub fn source_space(&self) -> FiniteIndexSpace {
        source_space(self.n_trunc)
    }
}

/// `{1..N, ∞}` with `d(i, j) = |1/i - 1/j|` and `d(i, ∞) = 1/i`.
pub fn source_space(n: usize) -> FiniteIndexSpace {
    let inv = |t: usize| if t == n { 0.0 } else { 1.0 / (t + 1) as f64 };
    let labels = (0..=n).map(|t| if t == n { INFINITY_LABEL.to_string() } else { (t + 1).to_string() }).collect();
    FiniteIndexSpace::from_fn(labels, |i, j| (inv(i) - inv(j)).abs()).expect("nonempty")
}

fn sample_peak(model: &CounterexampleModel, rng: &mut dyn RngCore) -> Option<(usize, f64)> {
    let x: f64 = rng.random();
    let n = model.active_index(x)? as usize;
    let (hi, lo) = (model.a[n - 1], model.a[n]);
    let y = ((x - lo) / (hi - lo)).clamp(f64::MIN_POSITIVE, 1.0);
    Some((n - 1, model.c(n as u64) * model.base.eval(y)))
}

/// Field over `{1..N, ∞}`; index `N` is the limit point with `g_∞ ≡ 0`.
impl FieldModel for CounterexampleModel {
    fn len(&self) -> usize {
        self.n_trunc + 1
    }

    fn label(&self, t: usize) -> String {
        self.label_of(t)
    }

    fn moment(&self, t: usize, p: f64) -> f64 {
        if p > MOMENT_LIMIT {
            return f64::INFINITY;
        }
        self.index_n(t).map_or(0.0, |n| self.lp(n, p))
    }

    fn pair_moment(&self, t: usize, s: usize, p: f64) -> f64 {
        if t == s {
            return 0.0;
        }
        if p > MOMENT_LIMIT {
            return f64::INFINITY;
        }
        // disjoint supports: p-th powers add
        let pow = |t: usize| self.index_n(t).map_or(Ok(0.0), |n| self.exact_moment(n, p));
        match (pow(t), pow(s)) {
            (Ok(a), Ok(b)) => (a + b).powf(1.0 / p),
            _ => f64::INFINITY,
        }
    }

    fn moment_limit(&self) -> f64 {
        MOMENT_LIMIT
    }

    fn sample_path(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        out.fill(0.0);
        if let Some((t, v)) = sample_peak(self, rng) {
            out[t] = v;
        }
    }

    fn sample_sup(&self, rng: &mut dyn RngCore) -> f64 {
        sample_peak(self, rng).map_or(0.0, |(_, v)| v.abs())
    }
}

/// `g̃_n = ε_n g_n` with independent Rademacher signs.
///
/// Only one peak is nonzero on a path, so one sign per path suffices; the
/// sign bit is the path RNG's draw mixed with `seed`.
#[derive(Debug, Clone)]
pub struct Symmetrized {
    model: CounterexampleModel,
    seed: u64,
}

pub fn symmetrize(model: &CounterexampleModel, seed: u64) -> Symmetrized {
    Symmetrized { model: model.clone(), seed }
}

impl Symmetrized {
    pub fn model(&self) -> &CounterexampleModel {
        &self.model
    }

    fn sign(&self, rng: &mut dyn RngCore) -> f64 {
        let bits = rng.next_u64() ^ self.seed.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15;
        if bits.count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl FieldModel for Symmetrized {
    fn len(&self) -> usize {
        self.model.len()
    }

    fn label(&self, t: usize) -> String {
        self.model.label(t)
    }

    fn moment(&self, t: usize, p: f64) -> f64 {
        self.model.moment(t, p)
    }

    fn pair_moment(&self, t: usize, s: usize, p: f64) -> f64 {
        // disjoint supports make signs irrelevant
        self.model.pair_moment(t, s, p)
    }

    fn moment_limit(&self) -> f64 {
        MOMENT_LIMIT
    }

    fn sample_path(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        out.fill(0.0);
        if let Some((t, v)) = sample_peak(&self.model, rng) {
            out[t] = self.sign(rng) * v;
        }
    }

    fn sample_sup(&self, rng: &mut dyn RngCore) -> f64 {
        let peak = sample_peak(&self.model, rng);
        let _ = self.sign(rng);
        peak.map_or(0.0, |(_, v)| v.abs())
    }
}

/// Summary of the moment curve of the supremum.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCurve {
    pub p: Vec<f64>,
    pub sup_lp: Vec<f64>,
    pub compensated: Vec<f64>,
    pub terms: Vec<u64>,
}

/// `p ↦ |sup_n g_n|_p` and `(4-p)^{1/4} |sup_n g_n|_p` on `p_grid ⊂ [1, 4)`,
/// with the series length chosen by the truncation-stability rule.
pub fn sup_moment_curve(model: &CounterexampleModel, p_grid: &[f64]) -> Result<MomentCurve> {
    if p_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(p) = p_grid.iter().find(|p| !(**p >= 1.0 && **p < MOMENT_LIMIT)) {
        return Err(invalid(format!("moment grid must lie in [1, 4), got {p}")));
    }
    let mut curve = MomentCurve { p: p_grid.to_vec(), sup_lp: vec![], compensated: vec![], terms: vec![] };
    for &p in p_grid {
        let n = model.stable_terms(p, DEFAULT_SERIES_TERMS)?;
        let v = model.sup_moment_pow(p, n)?.powf(1.0 / p);
        curve.sup_lp.push(v);
        curve.compensated.push((MOMENT_LIMIT - p).powf(0.25) * v);
        curve.terms.push(n);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gls::{lp_norm, luxemburg_norm, PowerYoung, LUXEMBURG_TOL};
    use crate::metric::validate_semi_metric;
    use crate::simulate::replica_rng;

    fn model() -> CounterexampleModel {
        CounterexampleModel::default_with(1.0, 64).unwrap()
    }

    #[test]
    fn normalizer_for_beta_one() {
        let direct: f64 = (1..200_000u64).rev().map(|n| (n as f64).powi(-5)).sum::<f64>();
        // remainder of Σ n^{-5} beyond 2e5 by the integral test
        let rem = 0.25 * 200_000f64.powi(-4);
        assert!((c_beta(1.0) - 1.0 / (direct + rem)).abs() < 1e-14);
    }

    #[test]
    fn a_sequence() {
        let m = model();
        assert_eq!(m.a(1), 1.0);
        assert!((m.a(2) - (1.0 - m.c_beta())).abs() < 1e-14);
        assert!((2..60).all(|n| m.a(n + 1) < m.a(n)));
        // past the table
        assert!((m.a(100) - m.a(101) - m.delta(100)).abs() < 1e-20);
    }

    #[test]
    fn one_peak_active() {
        let m = model();
        for k in 1..200 {
            let x = k as f64 / 200.0;
            let active = (1..=64u64).filter(|&n| m.g_n(n, x) != 0.0).count();
            assert!(active <= 1);
            if let Some(n) = m.active_index(x) {
                assert_eq!(m.g(x), m.g_n(n, x));
                let y = (x - m.a(n + 1)) / (m.a(n) - m.a(n + 1));
                assert!((m.g_n_local(n, y) - m.g_n(n, x)).abs() < 1e-12 * m.g_n(n, x));
            }
        }
    }

    #[test]
    fn closed_form_moment_vs_quadrature() {
        let m = model();
        for &(n, p) in &[(1u64, 1.0), (3, 2.5), (10, 3.9), (40, 1.7)] {
            let closed = m.exact_moment(n, p).unwrap();
            let quad = m.quadrature_moment(n, p).unwrap();
            assert!((closed - quad).abs() < 1e-8 * closed, "n={n} p={p}: {closed} vs {quad}");
        }
        assert!((m.exact_moment(1, 1.0).unwrap() - m.c_beta() * 8.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_moment_bound() {
        let m = model();
        let cap = m.c_beta() * 2.0;
        for n in 1..=64u64 {
            for k in 0..=30 {
                let p = 1.0 + 3.0 * k as f64 / 30.0;
                assert!(m.exact_moment(n, p).unwrap() <= cap * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn disjointness_identity() {
        let m = model();
        let p = 2.0;
        let lhs = (1..=64u64).map(|n| m.exact_moment(n, p).unwrap()).sum::<f64>();
        assert!((m.truncated_sup_moment_pow(p).unwrap() - lhs).abs() < 1e-12 * lhs);
    }

    #[test]
    fn sup_moment_full_series_vs_zeta() {
        let m = model();
        // Σ n^{pβ-5} = ζ(5-p) for β = 1
        let p = 2.0;
        let z = zeta(3.0);
        let expect = m.c_beta() * 8.0 / 6.0 * z;
        assert!((m.sup_moment_pow(p, 1000).unwrap() - expect).abs() < 1e-12 * expect);
        assert!(m.sup_moment_pow(4.0, 1000).unwrap().is_infinite());
    }

    #[test]
    fn tail_formula_vs_direct_sum() {
        let m = model();
        for u in [1.5, 3.0, 10.0, 37.5] {
            let direct: f64 = (1..2_000_000u64)
                .rev()
                .map(|n| m.delta(n) * (m.c(n) / u).powi(8).min(1.0))
                .sum::<f64>();
            let exact = m.exact_tail_prob(u);
            assert!((exact - direct).abs() < 1e-10, "u={u}: {exact} vs {direct}");
        }
        assert_eq!(m.exact_tail_prob(0.5), 1.0);
    }

    #[test]
    fn truncated_tail_is_below_full() {
        let m = model();
        for u in [2.0, 5.0, 100.0] {
            assert!(m.truncated_tail_prob(u) <= m.exact_tail_prob(u));
        }
    }

    #[test]
    fn borel_cantelli_markov_one_sided() {
        let m = model();
        for eps in [1.0, 2.0, 5.0] {
            for p in [1.0, 2.0, 3.5] {
                let (exact, markov) = m.borel_cantelli(eps, p).unwrap();
                assert!(exact <= markov, "eps={eps} p={p}");
            }
        }
    }

    #[test]
    fn symmetrized_moments_and_disjointness() {
        let m = model();
        let s = symmetrize(&m, 5);
        for t in [0usize, 3, 20, 64] {
            for p in [1.0, 2.0, 3.9] {
                assert_eq!(s.moment(t, p), m.moment(t, p));
            }
        }
        let mut rng = replica_rng(1, 0);
        let mut buf = vec![0.0; s.len()];
        let mut signs = 0.0;
        let trials = 20_000;
        for _ in 0..trials {
            s.sample_path(&mut rng, &mut buf);
            assert!(buf.iter().filter(|v| **v != 0.0).count() <= 1);
            signs += buf.iter().sum::<f64>().signum();
        }
        assert!((signs / trials as f64).abs() < 4.0 / (trials as f64).sqrt());
    }

    #[test]
    fn source_space_valid_with_unit_diameter() {
        let s = source_space(32);
        assert!(validate_semi_metric(&s).is_valid());
        assert!((crate::metric::diameter(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn difference_law_is_disjoint_sum() {
        let m = model();
        let law = m.difference_law(2, Some(5));
        let p = 3.0;
        let l = lp_norm(&law, p).unwrap();
        let expect = (m.exact_moment(2, p).unwrap() + m.exact_moment(5, p).unwrap()).powf(1.0 / p);
        assert!((l - expect).abs() < 1e-9 * expect);
        let lux = luxemburg_norm(&law, &PowerYoung(p), LUXEMBURG_TOL).unwrap();
        assert!((lux - expect).abs() < 1e-7 * expect);
    }

    #[test]
    fn sqrt_log_base_moments() {
        let b = BaseFunction::SqrtLog;
        for p in [1.0, 2.0, 3.0, 4.0] {
            let quad = tanh_sinh(|x: f64| x.ln().abs().powf(p / 2.0), 0.0, 1.0, 1e-13).unwrap().value;
            assert!((b.moment_pow(p).unwrap() - quad).abs() < 1e-8 * quad);
        }
    }
}
