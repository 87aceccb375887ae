//! Young-Fenchel (Legendre) transforms and the exponential Orlicz function
//! generated by a `ψ`.
//!
//! * `legendre(f, x) = sup_y (x y - f(y))`
//! * `co_transform(ψ, x) = v_*(x) = inf_{y ∈ (1/b, 1)} (x y + ln ψ(1/y))`
//! * `nu_star(ψ, x) = sup_{p ∈ [1, b)} (x p - p ln ψ(p))`
//!
//! All three use the same optimizer: a 512-node seed scan followed by
//! golden-section refinement around the best node. Open endpoints are handled
//! by evaluating the continuous extension, stepping inside by
//! [`BOUNDARY_INSET`] where the extension is infinite.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gls::{
    gls_norm, lp_norm, luxemburg_norm, nu, Expectation, GlsNorm, PsiFunction, YoungFunction, BOUNDARY_INSET,
    LUXEMBURG_TOL,
};
use crate::numeric::{lin_space, log_space, seeded_max, Optimum, MAGNITUDE_CEILING};

/// Interval width at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Seed nodes of the optimizer scan.
pub const SCAN_NODES: usize = 512;
/// Truncation of an unbounded domain for the scan.
pub const UNBOUNDED_CAP: f64 = 1e6;

/// A real interval; `hi` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn right_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: false, hi_open: true }
    }
}

/// A real function on an interval.
pub trait ScalarFunction {
    fn domain(&self) -> Interval;
    fn eval(&self, y: f64) -> f64;
}

/// Piecewise-linear interpolation through at least 16 nodes.
#[derive(Debug, Clone)]
pub struct TabulatedFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TabulatedFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension(format!("{} nodes vs {} values", xs.len(), ys.len())));
        }
        if xs.len() < 16 {
            return Err(invalid("tabulated function needs at least 16 nodes"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || ys.iter().any(|y| !y.is_finite()) {
            return Err(invalid("tabulated function needs increasing nodes and finite values"));
        }
        Ok(TabulatedFunction { xs, ys })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }
}

impl ScalarFunction for TabulatedFunction {
    fn domain(&self) -> Interval {
        Interval::closed(self.xs[0], *self.xs.last().unwrap())
    }

    fn eval(&self, y: f64) -> f64 {
        let n = self.xs.len();
        if y < self.xs[0] || y > self.xs[n - 1] {
            return f64::INFINITY;
        }
        let i = self.xs.partition_point(|v| *v <= y).clamp(1, n - 1) - 1;
        let t = (y - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }
}

/// A closed-form function on an explicit domain.
pub struct ClosedForm<F> {
    pub domain: Interval,
    pub f: F,
}

impl<F: Fn(f64) -> f64> ScalarFunction for ClosedForm<F> {
    fn domain(&self) -> Interval {
        self.domain
    }

    fn eval(&self, y: f64) -> f64 {
        (self.f)(y)
    }
}

fn scan_nodes(dom: Interval, extra: &[f64]) -> Vec<f64> {
    let lo = dom.lo;
    let mut nodes = if dom.hi.is_infinite() {
        let cap = lo + UNBOUNDED_CAP * lo.abs().max(1.0);
        let mut v = lin_space(lo, (lo + 16.0).min(cap), SCAN_NODES / 4);
        v.extend(log_space(1e-6, cap - lo, SCAN_NODES - SCAN_NODES / 4).into_iter().map(|d| lo + d));
        v
    } else {
        let w = dom.hi - lo;
        let q = SCAN_NODES / 4;
        let mut v = lin_space(lo, dom.hi, SCAN_NODES - 2 * q);
        let small = (BOUNDARY_INSET * w).max(1e-300);
        v.extend(log_space(small, w, q).into_iter().map(|d| lo + d));
        v.extend(log_space(small, w, q).into_iter().map(|d| dom.hi - d));
        v
    };
    nodes.extend_from_slice(extra);
    let hi = nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    nodes.retain(|x| *x >= lo && *x <= hi);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

/// Evaluate at an endpoint by continuity: the endpoint itself when the value
/// is finite, else one inset step inside.
fn endpoint_value<F: Fn(f64) -> f64>(g: &F, end: f64, inward: f64) -> (f64, f64) {
    let v = g(end);
    if v.is_finite() {
        return (end, v);
    }
    let y = end + inward * BOUNDARY_INSET * end.abs().max(1.0);
    (y, g(y))
}

/// Classical Young-Fenchel conjugate `sup_{y ∈ dom f} (x y - f(y))`.
///
/// On an unbounded domain an objective still increasing at the scan cap is
/// reported as `+∞` with `unbounded = true`.
pub fn legendre(f: &dyn ScalarFunction, x: f64) -> Optimum {
    let dom = f.domain();
    let objective = |y: f64| x * y - f.eval(y);
    let extra: Vec<f64> = Vec::new();
    let nodes = scan_nodes(dom, &extra);
    let mut opt = seeded_max(&objective, &nodes, GOLDEN_TOL);

    let (ylo, vlo) = endpoint_value(&objective, dom.lo, 1.0);
    if vlo > opt.value {
        opt = Optimum { value: vlo, arg: ylo, unbounded: false };
    }
    if dom.hi.is_finite() {
        let (yhi, vhi) = endpoint_value(&objective, dom.hi, -1.0);
        if vhi > opt.value {
            opt = Optimum { value: vhi, arg: yhi, unbounded: false };
        }
    } else {
        let last = nodes[nodes.len() - 1];
        let prev = nodes[nodes.len() - 2];
        if opt.arg >= prev && objective(last) > objective(prev) {
            return Optimum { value: f64::INFINITY, arg: last, unbounded: true };
        }
    }
    opt
}

/// `ν_ψ(p) = p ln ψ(p)` as a [`ScalarFunction`] on `[1, b)`.
pub struct NuFunction<'a>(pub &'a PsiFunction);

impl ScalarFunction for NuFunction<'_> {
    fn domain(&self) -> Interval {
        let b = self.0.upper();
        Interval::right_open(1.0, b)
    }

    fn eval(&self, p: f64) -> f64 {
        nu(self.0, p)
    }
}

/// Conjugate of `ν_ψ` over `p ∈ [1, b)`, with the maximizer.
pub fn nu_star_detail(psi: &PsiFunction, x: f64) -> Optimum {
    let objective = |p: f64| x * p - nu(psi, p);
    let nodes = psi.search_nodes();
    let mut opt = seeded_max(&objective, &nodes, GOLDEN_TOL);
    let (_, capped) = psi.search_max();
    if capped {
        let last = nodes[nodes.len() - 1];
        let prev = nodes[nodes.len() - 2];
        if opt.arg >= prev && objective(last) > objective(prev) {
            return Optimum { value: f64::INFINITY, arg: last, unbounded: true };
        }
    }
    if opt.value > MAGNITUDE_CEILING {
        opt.value = f64::INFINITY;
    }
    opt
}

/// `ν*_ψ(x) = sup_{p ∈ [1, b)} (x p - p ln ψ(p))`.
pub fn nu_star(psi: &PsiFunction, x: f64) -> f64 {
    nu_star_detail(psi, x).value
}

/// Co-transform `v_*(x) = inf_{y ∈ (1/b, 1)} (x y + v(y))`, `v(y) = ln ψ(1/y)`,
/// with the minimizing `p = 1/y`.
pub fn co_transform_detail(psi: &PsiFunction, x: f64) -> Optimum {
    // inf over y = 1/p of x y + ln ψ(1/y)  ==  -sup_p (-x/p - ln ψ(p))
    let objective = |p: f64| -x / p - psi.ln_eval(p);
    let nodes = psi.search_nodes();
    let opt = seeded_max(&objective, &nodes, GOLDEN_TOL);
    Optimum { value: -opt.value, arg: opt.arg, unbounded: false }
}

/// `v_*(x)`; see [`co_transform_detail`].
pub fn co_transform(psi: &PsiFunction, x: f64) -> f64 {
    co_transform_detail(psi, x).value
}

/// Tolerance on discrete second differences of `ν_ψ` in the convexity check.
pub const CONVEXITY_TOL: f64 = 1e-9;

/// Check that `ν_ψ(p) = p ln ψ(p)` is convex on the grid of `psi`.
pub fn check_nu_convex(psi: &PsiFunction) -> Result<()> {
    let grid = psi.grid();
    let vals: Vec<f64> = grid.iter().map(|&p| nu(psi, p)).collect();
    let slopes: Vec<f64> = grid
        .windows(2)
        .zip(vals.windows(2))
        .map(|(p, v)| (v[1] - v[0]) / (p[1] - p[0]))
        .collect();
    for (i, s) in slopes.windows(2).enumerate() {
        let d = s[1] - s[0];
        if d < -CONVEXITY_TOL * (1.0 + s[0].abs().max(s[1].abs())) {
            return Err(Error::NotConvex { p: grid[i + 1], second_difference: d });
        }
    }
    Ok(())
}

/// Exponential Young-Orlicz function generated by `ψ`:
/// `N(u) = exp(ν*_ψ(ln|u|))` for `|u| >= e` and `N(u) = C u²` below, with
/// `C e² = exp(ν*_ψ(1))`.
#[derive(Debug, Clone)]
pub struct ExpOrlicz {
    psi: PsiFunction,
    quadratic: f64,
}

impl ExpOrlicz {
    pub fn psi(&self) -> &PsiFunction {
        &self.psi
    }

    /// The constant `C` of the quadratic piece.
    pub fn quadratic_coefficient(&self) -> f64 {
        self.quadratic
    }
}

impl YoungFunction for ExpOrlicz {
    fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        if u < std::f64::consts::E {
            return self.quadratic * u * u;
        }
        let ex = nu_star(&self.psi, u.ln());
        if ex > 709.0 {
            f64::INFINITY
        } else {
            ex.exp()
        }
    }
}

/// Build the Orlicz function `N_ψ`; fails if `ν_ψ` is not convex.
pub fn orlicz_from_psi(psi: &PsiFunction) -> Result<ExpOrlicz> {
    check_nu_convex(psi)?;
    let e = std::f64::consts::E;
    let quadratic = nu_star(psi, 1.0).exp() / (e * e);
    Ok(ExpOrlicz { psi: psi.clone(), quadratic })
}

/// The GLS norm and the Luxemburg norm in the matching exponential Orlicz
/// space, side by side. The two are equivalent norms; no constant is assumed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormComparison {
    pub gls: GlsNorm,
    pub orlicz: f64,
    pub ratio: f64,
}

pub fn compare_norms(input: &dyn Expectation, psi: &PsiFunction) -> Result<NormComparison> {
    let grid = psi.grid();
    let moments: Vec<(f64, f64)> =
        grid.iter().map(|&p| Ok((p, lp_norm(input, p)?))).collect::<Result<_>>()?;
    let oracle = |p: f64| moments.iter().find(|(q, _)| *q == p).map(|m| m.1).unwrap_or(f64::INFINITY);
    let gls = gls_norm(&oracle, psi, &grid);
    let orlicz = luxemburg_norm(input, &orlicz_from_psi(psi)?, LUXEMBURG_TOL)?;
    Ok(NormComparison { gls, orlicz, ratio: orlicz / gls.value })
}
