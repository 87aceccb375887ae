//! Entropy integral `Θ`, the sup-norm / sup-tail bound and the
//! probabilistic modulus of continuity.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::conjugate::{co_transform, nu_star};
use crate::error::{invalid, Error, Result};
use crate::gls::PsiFunction;
use crate::metric::{diameter, entropy_profile, EntropyProfile, FiniteIndexSpace};
use crate::numeric::fmt_num;

/// Prefactor in front of the entropy integral.
pub const THETA_PREFACTOR: f64 = 9.0;

/// Which construction produced a tail curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Entropy-integral sup-tail bound on the whole space.
    EntropyBound,
    /// Sum over the parts of a partition.
    PartitionBound,
    /// `K ln u / u⁴` shape bound.
    LogPowerBound,
    /// Empirical or exact law, not a bound.
    Empirical,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::EntropyBound => "entropy_bound",
            Provenance::PartitionBound => "partition_bound",
            Provenance::LogPowerBound => "log_power_bound",
            Provenance::Empirical => "empirical",
        }
    }
}

/// `(u, value)` pairs with values clamped to `[0, 1]` and made
/// nonincreasing by a running minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBoundCurve {
    pub u: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl TailBoundCurve {
    pub fn new(u: Vec<f64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        check_u_grid(&u)?;
        if values.len() != u.len() {
            return Err(Error::Dimension(format!("{} u values vs {} curve values", u.len(), values.len())));
        }
        let mut run = 1.0f64;
        let values = values
            .into_iter()
            .map(|v| {
                // NaN means "no information": keep the trivial bound
                let v = if v.is_nan() { 1.0 } else { v.clamp(0.0, 1.0) };
                run = run.min(v);
                run
            })
            .collect();
        Ok(TailBoundCurve { u, values, provenance })
    }

    pub fn ones(u: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let n = u.len();
        TailBoundCurve::new(u, vec![1.0; n], provenance)
    }

    /// Value at `u` by stepping from the nearest grid point at or below `u`
    /// (`1` below the grid).
    pub fn at(&self, u: f64) -> f64 {
        let k = self.u.partition_point(|x| *x <= u);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        self.u.windows(2).zip(self.values.windows(2)).map(|(u, v)| 0.5 * (u[1] - u[0]) * (v[0] + v[1])).sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["u", "bound", "provenance"])?;
        for (u, v) in self.u.iter().zip(&self.values) {
            out.write_record([fmt_num(*u), fmt_num(*v), self.provenance.tag().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn check_u_grid(u: &[f64]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::EmptyInput);
    }
    if u.iter().any(|x| !(*x > 0.0 && x.is_finite())) || u.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("u grid must be positive, finite and strictly increasing"));
    }
    Ok(())
}

/// Evaluates `Θ(T, d, δ) = K ∫₀^δ exp(v*(ln 2 + H(ε))) dε` as an exact
/// step sum over the entropy profile, memoizing `v*` per covering number.
pub struct EntropyIntegral {
    profile: EntropyProfile,
    diameter: f64,
    psi: PsiFunction,
    prefactor: f64,
    weights: Mutex<HashMap<usize, f64>>,
}

impl EntropyIntegral {
    pub fn new(space: &FiniteIndexSpace, psi: &PsiFunction, prefactor: f64) -> Result<Self> {
        if !(prefactor > 0.0 && prefactor.is_finite()) {
            return Err(invalid(format!("theta prefactor must be positive, got {prefactor}")));
        }
        Ok(EntropyIntegral {
            profile: entropy_profile(space),
            diameter: diameter(space),
            psi: psi.clone(),
            prefactor,
            weights: Mutex::new(HashMap::new()),
        })
    }

    pub fn profile(&self) -> &EntropyProfile {
        &self.profile
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Integrand `exp(v*(ln 2 + ln N))` on a step with covering number `count`.
    pub fn weight(&self, count: usize) -> f64 {
        if let Some(w) = self.weights.lock().unwrap().get(&count) {
            return *w;
        }
        let v = co_transform(&self.psi, std::f64::consts::LN_2 + (count as f64).ln());
        let w = if v > 709.0 { f64::INFINITY } else { v.exp() };
        self.weights.lock().unwrap().insert(count, w);
        w
    }

    /// `Θ(δ)`, with `δ` clamped to the diameter.
    pub fn eval(&self, delta: f64) -> Result<f64> {
        if !(delta >= 0.0) {
            return Err(invalid(format!("delta must be nonnegative, got {delta}")));
        }
        let delta = delta.min(self.diameter);
        let mut total = 0.0;
        for (from, to, count) in self.profile.steps(delta) {
            let w = to - from;
            if w > 0.0 {
                total += w * self.weight(count);
            }
        }
        Ok(self.prefactor * total)
    }
}

/// `Θ(T, d, δ)`.
pub fn entropy_integral(space: &FiniteIndexSpace, psi: &PsiFunction, delta: f64, prefactor: f64) -> Result<f64> {
    EntropyIntegral::new(space, psi, prefactor)?.eval(delta)
}

/// Bound on the probabilistic modulus of continuity at `δ`; the same
/// evaluator as [`entropy_integral`].
pub fn modulus_bound(space: &FiniteIndexSpace, psi: &PsiFunction, delta: f64, prefactor: f64) -> Result<f64> {
    entropy_integral(space, psi, delta, prefactor)
}

/// `exp(-ν*_ψ(ln(u/Z)))` clamped to `[0, 1]`; `1` for `u <= Z`.
pub fn tail_factor(psi: &PsiFunction, z: f64, u: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if !z.is_finite() || u <= z {
        return 1.0;
    }
    let ex = nu_star(psi, (u / z).ln());
    (-ex).exp().clamp(0.0, 1.0)
}

/// Sup-tail bound over a whole space.
#[derive(Debug, Clone, Serialize)]
pub struct SupTailBound {
    pub curve: TailBoundCurve,
    pub theta: f64,
    pub diameter: f64,
    /// `max(Θ, anchor)`; also the GLS-norm bound on `sup |ξ|`.
    pub z: f64,
    pub finite: bool,
    pub diagnostic: Option<String>,
}

/// `P(sup |ξ| > u) <= exp(-ν*_ψ(ln(u/Z)))` with `Z = max(Θ(T, d_ψ, D), anchor)`.
///
/// `anchor` is `sup_t ||ξ(t)||Gψ` (1 for a natural `ψ`); it keeps the bound
/// meaningful when `Θ` degenerates, e.g. on a single point.
pub fn sup_tail_bound(
    space: &FiniteIndexSpace,
    psi: &PsiFunction,
    anchor: f64,
    u_grid: &[f64],
    prefactor: f64,
) -> Result<SupTailBound> {
    check_u_grid(u_grid)?;
    if !(anchor >= 0.0) {
        return Err(invalid(format!("anchor must be nonnegative, got {anchor}")));
    }
    let theta_eval = EntropyIntegral::new(space, psi, prefactor)?;
    let d = theta_eval.diameter();
    let theta = theta_eval.eval(d)?;
    if !theta.is_finite() {
        return Ok(SupTailBound {
            curve: TailBoundCurve::ones(u_grid.to_vec(), Provenance::EntropyBound)?,
            theta,
            diameter: d,
            z: f64::INFINITY,
            finite: false,
            diagnostic: Some("entropy integral diverges".into()),
        });
    }
    let z = theta.max(anchor);
    let values: Vec<f64> = u_grid.par_iter().map(|&u| tail_factor(psi, z, u)).collect();
    Ok(SupTailBound {
        curve: TailBoundCurve::new(u_grid.to_vec(), values, Provenance::EntropyBound)?,
        theta,
        diameter: d,
        z,
        finite: true,
        diagnostic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::log_space;

    fn two_points() -> FiniteIndexSpace {
        FiniteIndexSpace::from_fn(vec!["a".into(), "b".into()], |_, _| 1.0).unwrap()
    }

    #[test]
    fn theta_two_point_example() {
        let psi = PsiFunction::constant(1.0, 4.0).unwrap();
        let theta = entropy_integral(&two_points(), &psi, 1.0, THETA_PREFACTOR).unwrap();
        // H = ln 2 on (0,1), v*(x) = x/4
        assert!((theta - 9.0 * 2f64.sqrt()).abs() < 1e-8, "{theta}");
        assert_eq!(entropy_integral(&two_points(), &psi, 0.0, THETA_PREFACTOR).unwrap(), 0.0);
    }

    #[test]
    fn theta_clamps_delta_to_diameter() {
        let psi = PsiFunction::constant(1.0, 4.0).unwrap();
        let a = entropy_integral(&two_points(), &psi, 1.0, 9.0).unwrap();
        let b = entropy_integral(&two_points(), &psi, 7.0, 9.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_point_space_has_zero_theta() {
        let s = FiniteIndexSpace::from_fn(vec!["x".into()], |_, _| 0.0).unwrap();
        let psi = PsiFunction::sqrt_p();
        assert_eq!(entropy_integral(&s, &psi, 3.0, 9.0).unwrap(), 0.0);
        let b = sup_tail_bound(&s, &psi, 1.0, &[0.5, 1.0, 10.0], 9.0).unwrap();
        assert_eq!(b.z, 1.0);
        assert_eq!(b.curve.values[0], 1.0);
    }

    #[test]
    fn quartic_tail_for_constant_psi() {
        let psi = PsiFunction::constant(1.0, 4.0).unwrap();
        let u = log_space(1.0, 1000.0, 30);
        let b = sup_tail_bound(&two_points(), &psi, 1.0, &u, 9.0).unwrap();
        for (&u, &v) in b.curve.u.iter().zip(&b.curve.values) {
            let expect = if u <= b.z { 1.0 } else { (b.z / u).powi(4) };
            assert!((v - expect).abs() < 1e-7 * expect.max(1e-300) + 1e-15, "u={u}: {v} vs {expect}");
        }
    }

    #[test]
    fn subgaussian_tail_shape() {
        let psi = PsiFunction::sqrt_p();
        let s = FiniteIndexSpace::from_fn(vec!["x".into()], |_, _| 0.0).unwrap();
        let b = sup_tail_bound(&s, &psi, 1.0, &[3.0, 5.0], 9.0).unwrap();
        for (&u, &v) in b.curve.u.iter().zip(&b.curve.values) {
            let expect = (-(u * u) / (2.0 * std::f64::consts::E)).exp();
            assert!((v - expect).abs() < 1e-9 * expect, "{v} vs {expect}");
        }
    }

    #[test]
    fn modulus_monotone_in_delta() {
        let pts: [f64; 6] = [0.0, 0.1, 0.35, 0.4, 0.9, 1.7];
        let s = FiniteIndexSpace::from_fn((0..6).map(|i| i.to_string()).collect(), |i, j| (pts[i] - pts[j]).abs())
            .unwrap();
        let psi = PsiFunction::sqrt_p();
        let ev = EntropyIntegral::new(&s, &psi, 9.0).unwrap();
        let mut prev = 0.0;
        for d in log_space(1e-4, 2.0, 40) {
            let v = ev.eval(d).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(ev.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn curve_is_clamped_and_monotone() {
        let c = TailBoundCurve::new(vec![1.0, 2.0, 3.0], vec![1.7, 0.2, 0.4], Provenance::EntropyBound).unwrap();
        assert_eq!(c.values, vec![1.0, 0.2, 0.2]);
        assert!(TailBoundCurve::new(vec![1.0, 1.0], vec![1.0, 1.0], Provenance::Empirical).is_err());
    }
}
