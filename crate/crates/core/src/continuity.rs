//! Moment function `τ` of a tail curve, the distance `ρ` it induces and
//! the uniform-continuity modulus bound `Θ(T, ρ, δ)`.

use serde::Serialize;

use crate::bounds::{EntropyIntegral, TailBoundCurve};
use crate::error::{invalid, Error, Result};
use crate::gls::{PsiFunction, MIN_TABLE_NODES};
use crate::metric::{distance_from_pair_moments, FiniteIndexSpace};
use crate::partition::{last_decade, log_log_slope, Certificate};
use crate::simulate::FieldModel;

/// `τ(p) = [p ∫₀^∞ u^{p-1} min(1, R(u)) du]^{1/p}` on a grid of `p`.
#[derive(Debug, Clone, Serialize)]
pub struct TauFunction {
    pub p: Vec<f64>,
    pub tau: Vec<f64>,
    /// Largest grid `p` with finite `τ`.
    pub b_tau: f64,
    /// Power-law exponent of `R` fitted over the last decade of its grid;
    /// `None` when `R` vanishes there.
    pub tail_exponent: Option<f64>,
    /// `τ` as a generating function on its finite nodes (needs at least
    /// 16 of them).
    #[serde(skip)]
    pub psi: Option<PsiFunction>,
}

/// `∫_{u0}^{u1} p u^{p-1} R(u) du` with `R` interpolated as a power law
/// between positive nodes and linearly when one end is zero.
fn piece(p: f64, u0: f64, u1: f64, r0: f64, r1: f64) -> f64 {
    if r0 == 0.0 && r1 == 0.0 {
        return 0.0;
    }
    if r0 > 0.0 && r1 > 0.0 {
        let k = -(r1 / r0).ln() / (u1 / u0).ln();
        let e = p - k;
        // p R0 u0^k ∫ u^{e-1} du
        return if e.abs() < 1e-12 {
            p * r0 * u0.powf(p) * (u1 / u0).ln()
        } else {
            p * r0 * u0.powf(p) * ((e * (u1 / u0).ln()).exp_m1()) / e
        };
    }
    // linear R(u) = r0 + (r1 - r0)(u - u0)/h
    let h = u1 - u0;
    let slope = (r1 - r0) / h;
    let base = r0 - slope * u0;
    // ∫ p u^{p-1}(base + slope u) = base u^p + slope p/(p+1) u^{p+1}
    let prim = |u: f64| base * u.powf(p) + slope * p / (p + 1.0) * u.powf(p + 1.0);
    prim(u1) - prim(u0)
}

/// `τ` from a tail bound `R` (already clamped to `[0, 1]` and
/// nonincreasing). `R = 1` below the first grid node; beyond the last node
/// `R` is extended by the power law fitted over the last decade, and `τ(p)`
/// is infinite for `p` at or above the fitted exponent.
pub fn tau_from_tail(r: &TailBoundCurve, p_grid: &[f64]) -> Result<TauFunction> {
    if p_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if p_grid.iter().any(|p| !(*p >= 1.0)) || p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("p grid must be increasing and at least 1"));
    }
    if r.values.windows(2).any(|w| w[1] > w[0]) || r.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid("tail curve must lie in [0, 1] and be nonincreasing"));
    }
    let last_r = *r.values.last().unwrap();
    let tail_exponent = if last_r == 0.0 { None } else { log_log_slope(&last_decade(r)).map(|s| -s) };
    let u_last = *r.u.last().unwrap();
    let mut tau = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let tail = match tail_exponent {
            None if last_r == 0.0 => 0.0,
            Some(k) if k > p => p * last_r * u_last.powf(p) / (k - p),
            _ => f64::INFINITY,
        };
        if tail.is_infinite() {
            tau.push(f64::INFINITY);
            continue;
        }
        // R = 1 on (0, u_first)
        let mut total = r.u[0].powf(p);
        for k in 0..r.u.len() - 1 {
            total += piece(p, r.u[k], r.u[k + 1], r.values[k], r.values[k + 1]);
        }
        tau.push((total + tail).powf(1.0 / p));
    }
    let finite: Vec<usize> = (0..p_grid.len()).filter(|&i| tau[i].is_finite()).collect();
    let b_tau = finite.last().map_or(f64::NAN, |&i| p_grid[i]);
    let psi = if finite.len() >= MIN_TABLE_NODES {
        let first_inf = p_grid.iter().zip(&tau).find(|(_, t)| t.is_infinite()).map(|(p, _)| *p);
        let b = first_inf.or(tail_exponent).unwrap_or(f64::INFINITY);
        let b = if b > b_tau { b } else { f64::INFINITY };
        Some(PsiFunction::tabulated(
            finite.iter().map(|&i| p_grid[i]).collect(),
            finite.iter().map(|&i| tau[i]).collect(),
            b,
        )?)
    } else {
        None
    };
    Ok(TauFunction { p: p_grid.to_vec(), tau, b_tau, tail_exponent, psi })
}

impl TauFunction {
    pub fn psi(&self) -> Result<&PsiFunction> {
        self.psi.as_ref().ok_or_else(|| {
            invalid(format!("tau has fewer than {MIN_TABLE_NODES} finite grid values (b_tau = {})", self.b_tau))
        })
    }
}

/// `ρ(t, s) = ||ξ(t) - ξ(s)||Gτ`.
pub fn rho_distance(field: &dyn FieldModel, tau: &TauFunction) -> Result<FiniteIndexSpace> {
    let psi = tau.psi()?;
    if !(tau.b_tau > 1.0) {
        return Err(invalid("tau must be finite for some p > 1"));
    }
    distance_from_pair_moments(field, psi, &psi.grid())
}

/// `δ ↦ Θ(T, ρ, δ)` with a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusReport {
    pub delta: Vec<f64>,
    pub bound: Vec<f64>,
    pub diameter: f64,
    pub certificate: Certificate,
    pub threshold: f64,
}

/// PASS when the bound is finite, nondecreasing in `δ` and below
/// `threshold` at the smallest `δ`; FAIL when `Θ` diverges.
pub fn continuity_modulus(
    field: &dyn FieldModel,
    tau: &TauFunction,
    delta_grid: &[f64],
    threshold: f64,
    prefactor: f64,
) -> Result<ModulusReport> {
    if delta_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if delta_grid.iter().any(|d| !(*d >= 0.0)) || delta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("delta grid must be nonnegative and increasing"));
    }
    let space = rho_distance(field, tau)?;
    modulus_on_space(&space, tau.psi()?, delta_grid, threshold, prefactor)
}

pub fn modulus_on_space(
    space: &FiniteIndexSpace,
    psi: &PsiFunction,
    delta_grid: &[f64],
    threshold: f64,
    prefactor: f64,
) -> Result<ModulusReport> {
    let ev = EntropyIntegral::new(space, psi, prefactor)?;
    let bound = delta_grid.iter().map(|&d| ev.eval(d)).collect::<Result<Vec<f64>>>()?;
    let certificate = if bound.iter().any(|b| !b.is_finite()) {
        Certificate::Fail
    } else if bound.windows(2).all(|w| w[0] <= w[1]) && bound[0] < threshold {
        Certificate::Pass
    } else {
        Certificate::Inconclusive
    };
    Ok(ModulusReport { delta: delta_grid.to_vec(), bound, diameter: ev.diameter(), certificate, threshold })
}
