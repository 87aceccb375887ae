//! Grand Lebesgue Space primitives.
//!
//! A Grand Lebesgue Space `Gψ` is the set of random variables with finite norm
//!
//! ```text
//!   ||η||Gψ = sup_{1 <= p < b} |η|_p / ψ(p),     |η|_p = (E|η|^p)^{1/p}
//! ```
//!
//! This module holds the generating functions `ψ`, the Lebesgue-Riesz moments,
//! the grid-evaluated GLS norm, the natural `ψ` of a field and the Luxemburg
//! norm of an Orlicz space.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numeric::{log_space, tanh_sinh, MAGNITUDE_CEILING};
use crate::simulate::FieldModel;

/// Number of nodes in the default moment grid.
pub const DEFAULT_GRID_NODES: usize = 64;
/// Right end of the default moment grid when `b` is infinite.
pub const INFINITE_B_GRID_MAX: f64 = 64.0;
/// Right end of the optimizer domain when `b` is infinite.
pub const INFINITE_B_SEARCH_CAP: f64 = 1e6;
/// Inset applied at an open endpoint whose limit is evaluated by continuity.
pub const BOUNDARY_INSET: f64 = 1e-9;
/// Minimum node count of a tabulated `ψ`.
pub const MIN_TABLE_NODES: usize = 16;

const SEARCH_NODES: usize = 512;

/// Representation of a `ψ` function.
#[derive(Clone)]
pub enum PsiKind {
    /// `ψ(p) = √p`, `b = ∞`.
    SqrtP,
    /// `ψ(p) = value`.
    Constant { value: f64 },
    /// `ψ(p) = (b - p)^{-beta}`.
    BetaB { beta: f64 },
    /// Log-linear interpolation of `ln ψ` between strictly increasing nodes.
    Tabulated { p: Vec<f64>, ln_psi: Vec<f64> },
    /// Arbitrary closed form.
    ClosedForm(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for PsiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiKind::SqrtP => write!(f, "SqrtP"),
            PsiKind::Constant { value } => write!(f, "Constant({value})"),
            PsiKind::BetaB { beta } => write!(f, "BetaB({beta})"),
            PsiKind::Tabulated { p, .. } => write!(f, "Tabulated({} nodes)", p.len()),
            PsiKind::ClosedForm(_) => write!(f, "ClosedForm"),
        }
    }
}

/// A generating function `ψ(p)` on `[1, b)`, `b ∈ (1, ∞]`.
///
/// Queries at `p >= b` return `+∞`. Tabulated functions also return `+∞`
/// past their last node.
#[derive(Debug, Clone)]
pub struct PsiFunction {
    kind: PsiKind,
    b: f64,
    ln_scale: f64,
}

impl PsiFunction {
    pub fn sqrt_p() -> Self {
        PsiFunction { kind: PsiKind::SqrtP, b: f64::INFINITY, ln_scale: 0.0 }
    }

    pub fn constant(value: f64, b: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid(format!("constant psi must be positive, got {value}")));
        }
        check_b(b)?;
        Ok(PsiFunction { kind: PsiKind::Constant { value }, b, ln_scale: 0.0 })
    }

    /// `(b - p)^{-beta}` on `[1, b)`.
    pub fn beta_b(beta: f64, b: f64) -> Result<Self> {
        if !(beta > 0.0) || !b.is_finite() {
            return Err(invalid(format!("beta_b needs beta > 0 and finite b (beta={beta}, b={b})")));
        }
        check_b(b)?;
        Ok(PsiFunction { kind: PsiKind::BetaB { beta }, b, ln_scale: 0.0 })
    }

    pub fn tabulated(p: Vec<f64>, psi: Vec<f64>, b: f64) -> Result<Self> {
        check_b(b)?;
        if p.len() != psi.len() {
            return Err(Error::Dimension(format!("{} p nodes vs {} psi values", p.len(), psi.len())));
        }
        if p.len() < MIN_TABLE_NODES {
            return Err(invalid(format!(
                "tabulated psi needs at least {MIN_TABLE_NODES} nodes, got {}",
                p.len()
            )));
        }
        if p.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("tabulated psi nodes must be strictly increasing"));
        }
        if p[0] < 1.0 || *p.last().unwrap() >= b {
            return Err(invalid(format!("tabulated psi nodes must lie in [1, {b})")));
        }
        if psi.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("tabulated psi values must be positive and finite"));
        }
        let ln_psi = psi.iter().map(|v| v.ln()).collect();
        Ok(PsiFunction { kind: PsiKind::Tabulated { p, ln_psi }, b, ln_scale: 0.0 })
    }

    /// Closed-form `ψ` given by `f` on `[1, b)`.
    pub fn closed_form<F>(b: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_b(b)?;
        Ok(PsiFunction { kind: PsiKind::ClosedForm(Arc::new(f)), b, ln_scale: 0.0 })
    }

    /// `c·ψ` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite());
        PsiFunction { kind: self.kind.clone(), b: self.b, ln_scale: self.ln_scale + c.ln() }
    }

    pub fn kind(&self) -> &PsiKind {
        &self.kind
    }

    /// Upper moment index `b` (possibly `+∞`).
    pub fn upper(&self) -> f64 {
        self.b
    }

    /// `ln ψ(p)`; `+∞` outside the domain.
    pub fn ln_eval(&self, p: f64) -> f64 {
        if p.is_nan() {
            return f64::NAN;
        }
        if p >= self.b {
            return f64::INFINITY;
        }
        let p = p.max(1.0);
        let raw = match &self.kind {
            PsiKind::SqrtP => 0.5 * p.ln(),
            PsiKind::Constant { value } => value.ln(),
            PsiKind::BetaB { beta } => -beta * (self.b - p).ln(),
            PsiKind::Tabulated { p: nodes, ln_psi } => interp(nodes, ln_psi, p),
            PsiKind::ClosedForm(f) => f(p).ln(),
        };
        raw + self.ln_scale
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.ln_eval(p).exp()
    }

    /// Right end of the closed interval on which extrema over `[1, b)` are
    /// searched, and whether it is an artificial cap of an infinite domain.
    pub fn search_max(&self) -> (f64, bool) {
        match &self.kind {
            PsiKind::Tabulated { p, .. } => (*p.last().unwrap(), false),
            _ if self.b.is_infinite() => (INFINITE_B_SEARCH_CAP, true),
            _ => (self.b - BOUNDARY_INSET, false),
        }
    }

    /// Seed nodes in `p` for the grid-then-golden optimizer.
    pub fn search_nodes(&self) -> Vec<f64> {
        let (hi, _) = self.search_max();
        let mut nodes = match &self.kind {
            PsiKind::Tabulated { p, .. } => {
                let mut v = p.clone();
                if hi > 1.0 {
                    v.extend(log_space(1.0, hi, SEARCH_NODES - p.len().min(SEARCH_NODES / 2)));
                }
                v
            }
            _ if self.b.is_infinite() => log_space(1.0, hi, SEARCH_NODES),
            _ => {
                let half = SEARCH_NODES / 2;
                let mut v = log_space(1.0, hi, half);
                // cluster toward the right endpoint where ψ may blow up
                let gap = self.b - 1.0;
                v.extend(log_space(BOUNDARY_INSET, gap, half).into_iter().map(|g| self.b - g));
                v
            }
        };
        nodes.retain(|x| *x >= 1.0 && *x <= hi);
        nodes.push(1.0);
        nodes.push(hi);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        nodes
    }

    /// Tabulate `(p, ψ(p))` pairs on `grid`.
    pub fn table(&self, grid: &[f64]) -> Vec<(f64, f64)> {
        grid.iter().map(|&p| (p, self.eval(p))).collect()
    }

    /// Natural grid for sup computations against this `ψ`.
    pub fn grid(&self) -> Vec<f64> {
        match &self.kind {
            PsiKind::Tabulated { p, .. } => p.clone(),
            _ => default_p_grid(self.b),
        }
    }
}

fn check_b(b: f64) -> Result<()> {
    if b > 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("upper moment index b must exceed 1, got {b}")))
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x > xs[last] {
        return f64::INFINITY;
    }
    if x == xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Default moment grid: 64 log-spaced nodes on `[1, b - ε_b]` with
/// `ε_b = min(0.01, (b - 1)/100)`; `[1, 64]` when `b = ∞`.
pub fn default_p_grid(b: f64) -> Vec<f64> {
    if b.is_infinite() {
        return log_space(1.0, INFINITE_B_GRID_MAX, DEFAULT_GRID_NODES);
    }
    let eps = (0.01f64).min((b - 1.0) / 100.0);
    log_space(1.0, b - eps, DEFAULT_GRID_NODES)
}

/// `|N(0,1)|_p = √2 (Γ((p+1)/2)/√π)^{1/p}`.
pub fn standard_normal_moment(p: f64) -> f64 {
    let ln_m = 0.5 * p * std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(0.5 * (p + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    (ln_m / p).exp()
}

/// Something that can take expectations of functions of a scalar random
/// variable.
pub trait Expectation {
    /// `E h(η)`.
    fn expect(&self, h: &dyn Fn(f64) -> f64) -> Result<f64>;

    /// `E h(η)` to relative accuracy `tol` where that is meaningful.
    /// Kinked `h` can stall quadrature short of [`QUADRATURE_TOL`].
    fn expect_tol(&self, h: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
        let _ = tol;
        self.expect(h)
    }

    /// A positive value of the order of `max |η|`, used to keep powers in range.
    fn scale_hint(&self) -> Option<f64> {
        None
    }
}

/// Uniform empirical law of a sample.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a>(pub &'a [f64]);

impl Expectation for Samples<'_> {
    fn expect(&self, h: &dyn Fn(f64) -> f64) -> Result<f64> {
        if self.0.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(self.0.iter().map(|&x| h(x)).sum::<f64>() / self.0.len() as f64)
    }

    fn scale_hint(&self) -> Option<f64> {
        let m = self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (m > 0.0 && m.is_finite()).then_some(m)
    }
}

/// A measurable function on `Ω = (0,1)` with Lebesgue measure.
#[derive(Clone, Copy)]
pub struct UnitInterval<F>(pub F);

/// Relative tolerance of quadrature-based expectations.
pub const QUADRATURE_TOL: f64 = 1e-12;

impl<F: Fn(f64) -> f64> Expectation for UnitInterval<F> {
    fn expect(&self, h: &dyn Fn(f64) -> f64) -> Result<f64> {
        self.expect_tol(h, QUADRATURE_TOL)
    }

    fn expect_tol(&self, h: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
        Ok(tanh_sinh(|x| h((self.0)(x)), 0.0, 1.0, tol)?.value)
    }
}

/// A variable that equals `f_i(V)` with probability `w_i`, `V ~ U(0,1)`,
/// and `0` otherwise. Models sums of disjointly supported functions.
pub struct Piecewise {
    pub pieces: Vec<(f64, Arc<dyn Fn(f64) -> f64 + Send + Sync>)>,
}

impl Expectation for Piecewise {
    fn expect(&self, h: &dyn Fn(f64) -> f64) -> Result<f64> {
        self.expect_tol(h, QUADRATURE_TOL)
    }

    fn expect_tol(&self, h: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
        let mut total = 0.0;
        let mut mass = 0.0;
        for (w, f) in &self.pieces {
            if *w == 0.0 {
                continue;
            }
            total += w * UnitInterval(|v| f(v)).expect_tol(h, tol)?;
            mass += w;
        }
        if mass < 1.0 {
            total += (1.0 - mass) * h(0.0);
        }
        Ok(total)
    }
}

/// Lebesgue-Riesz norm `|η|_p = (E|η|^p)^{1/p}`.
///
/// Returns `+∞` when the moment diverges.
pub fn lp_norm(input: &dyn Expectation, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("lp_norm needs p >= 1, got {p}")));
    }
    let scale = input.scale_hint().unwrap_or(1.0);
    let m = input.expect(&|x: f64| (x.abs() / scale).powf(p))?;
    if !m.is_finite() || m > MAGNITUDE_CEILING {
        return Ok(f64::INFINITY);
    }
    Ok(scale * m.powf(1.0 / p))
}

/// `p ↦ |η|_p` for a fixed random quantity.
pub trait MomentOracle {
    fn moment(&self, p: f64) -> f64;
}

impl<F: Fn(f64) -> f64> MomentOracle for F {
    fn moment(&self, p: f64) -> f64 {
        self(p)
    }
}

/// Moments of `σ·N(0,1)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianMoments {
    pub sigma: f64,
}

impl MomentOracle for GaussianMoments {
    fn moment(&self, p: f64) -> f64 {
        self.sigma.abs() * standard_normal_moment(p)
    }
}

/// Grid-evaluated GLS norm together with the maximizing moment index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlsNorm {
    pub value: f64,
    pub argmax_p: f64,
}

/// `sup_p |η|_p / ψ(p)` over the grid points in `[1, b)`.
pub fn gls_norm(moments: &dyn MomentOracle, psi: &PsiFunction, grid: &[f64]) -> GlsNorm {
    let mut best = GlsNorm { value: 0.0, argmax_p: grid.first().copied().unwrap_or(1.0) };
    for &p in grid {
        let denom = psi.eval(p);
        if !denom.is_finite() {
            continue;
        }
        let m = moments.moment(p);
        let ratio = if m == 0.0 { 0.0 } else { m / denom };
        if ratio > best.value || ratio.is_nan() {
            best = GlsNorm { value: if ratio.is_nan() { f64::INFINITY } else { ratio }, argmax_p: p };
        }
        if best.value.is_infinite() {
            break;
        }
    }
    best
}

/// Natural `ψ` of a field: `ψ(p) = sup_t |ξ(t)|_p` tabulated on `grid`.
///
/// Grid points past the first infinite moment are dropped and that point
/// becomes `b`; otherwise `b` is the field's own moment limit.
pub fn natural_psi(field: &dyn FieldModel, grid: &[f64]) -> Result<PsiFunction> {
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ps = Vec::with_capacity(grid.len());
    let mut vals = Vec::with_capacity(grid.len());
    let mut b = field.moment_limit();
    for &p in grid {
        let sup = field.moments_at(p).into_iter().fold(0.0f64, f64::max);
        if !sup.is_finite() {
            b = b.min(p);
            break;
        }
        ps.push(p);
        vals.push(sup);
    }
    if ps.is_empty() {
        return Err(Error::NoGlsHome("no grid moment index has a finite supremum".into()));
    }
    if vals.iter().all(|v| *v == 0.0) {
        return Err(Error::NoGlsHome("field is identically zero".into()));
    }
    if vals.contains(&0.0) {
        return Err(Error::NoGlsHome("moment supremum vanishes on part of the grid".into()));
    }
    if ps.len() < MIN_TABLE_NODES {
        return Err(Error::NoGlsHome(format!(
            "only {} grid points with finite moments (need {MIN_TABLE_NODES})",
            ps.len()
        )));
    }
    PsiFunction::tabulated(ps, vals, b)
}

/// A Young function `Φ` on `[0, ∞)`: convex, increasing, `Φ(0) = 0`.
pub trait YoungFunction: Send + Sync {
    fn eval(&self, u: f64) -> f64;
}

/// `Φ(u) = |u|^p`; its Luxemburg norm is the `L_p` norm.
#[derive(Debug, Clone, Copy)]
pub struct PowerYoung(pub f64);

impl YoungFunction for PowerYoung {
    fn eval(&self, u: f64) -> f64 {
        u.abs().powf(self.0)
    }
}

/// `Φ(u) = e² u²` for `|u| <= e`, `u⁴ / ln|u|` beyond: the Orlicz function
/// matching tails of order `ln u / u⁴`.
#[derive(Debug, Clone, Copy)]
pub struct QuarticLogYoung;

impl YoungFunction for QuarticLogYoung {
    fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        let e = std::f64::consts::E;
        if u <= e {
            e * e * u * u
        } else {
            u.powi(4) / u.ln()
        }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> YoungFunction for F {
    fn eval(&self, u: f64) -> f64 {
        self(u)
    }
}

/// Relative bracket width at which Luxemburg bisection stops.
pub const LUXEMBURG_TOL: f64 = 1e-8;

/// Luxemburg norm `inf{k > 0 : E Φ(|η|/k) <= 1}` by bisection on `k`.
pub fn luxemburg_norm(input: &dyn Expectation, phi: &dyn YoungFunction, rel_tol: f64) -> Result<f64> {
    if input.expect(&|x| if x != 0.0 { 1.0 } else { 0.0 })? == 0.0 {
        return Ok(0.0);
    }
    let modular = |k: f64| -> Result<f64> {
        let v = input.expect_tol(&|x| phi.eval(x.abs() / k), rel_tol.max(QUADRATURE_TOL))?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };
    let start = input.scale_hint().unwrap_or(1.0);
    let (mut lo, mut hi) = (start, start);
    while modular(hi)? > 1.0 {
        hi *= 2.0;
        if hi > MAGNITUDE_CEILING {
            return Ok(f64::INFINITY);
        }
    }
    loop {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Ok(0.0);
        }
        if modular(lo)? > 1.0 {
            break;
        }
        hi = lo;
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if modular(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `ν_ψ(p) = p ln ψ(p)`.
pub fn nu(psi: &PsiFunction, p: f64) -> f64 {
    p * psi.ln_eval(p)
}
