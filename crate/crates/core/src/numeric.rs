//! Numerical building blocks shared by the bound computations: double
//! exponential quadrature on finite intervals, Euler-Maclaurin power sums,
//! golden-section refinement and grid-seeded global maximization.

use crate::error::{Error, Result};

/// Values whose magnitude exceeds this are reported as `+inf` instead of
/// being carried as overflowed floats.
pub const MAGNITUDE_CEILING: f64 = 1e300;

const TANH_SINH_T_MAX: f64 = 6.5;
const TANH_SINH_MAX_LEVEL: u32 = 12;

/// Result of a quadrature: the integral and the last level-to-level change.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Tanh-sinh quadrature of `f` over `(a, b)`.
///
/// The integrand is never evaluated at the endpoints, so integrable endpoint
/// singularities are fine. Nodes are placed relative to the nearer endpoint,
/// which keeps `x - a` exact for `a = 0`.
///
/// Returns `+inf` if the integral passes [`MAGNITUDE_CEILING`] and an error
/// if the level refinement fails to reach `rel_tol`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::Quadrature(format!("bad interval ({a}, {b})")));
    }
    let half = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut evaluations = 0usize;

    let mut node = |t: f64| -> f64 {
        let s = half_pi * t.sinh();
        let w = half_pi * t.cosh() / (s.cosh() * s.cosh());
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        // distance to the nearer endpoint
        let x = if t < 0.0 {
            a + (b - a) / (1.0 + (-2.0 * s).exp())
        } else {
            b - (b - a) / (1.0 + (2.0 * s).exp())
        };
        if x <= a || x >= b {
            return 0.0;
        }
        evaluations += 1;
        let y = f(x);
        if y.is_nan() {
            return f64::NAN;
        }
        half * w * y
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1.0;
    while k * h <= TANH_SINH_T_MAX {
        sum += node(k * h) + node(-k * h);
        k += 1.0;
    }
    let mut estimate = h * sum;
    let mut change = f64::INFINITY;

    for level in 1..=TANH_SINH_MAX_LEVEL {
        h *= 0.5;
        let mut fresh = 0.0;
        let mut k = 1.0;
        while k * h <= TANH_SINH_T_MAX {
            fresh += node(k * h) + node(-k * h);
            k += 2.0;
        }
        sum += fresh;
        let next = h * sum;
        if next.is_nan() {
            return Err(Error::Quadrature("integrand produced NaN".into()));
        }
        if next.abs() > MAGNITUDE_CEILING || next.is_infinite() {
            return Ok(Quadrature { value: f64::INFINITY, error_estimate: f64::INFINITY, evaluations });
        }
        change = (next - estimate).abs();
        estimate = next;
        if level >= 4 && change <= rel_tol * estimate.abs().max(f64::MIN_POSITIVE) {
            return Ok(Quadrature { value: estimate, error_estimate: change, evaluations });
        }
    }
    // slowly divergent integrands keep growing level after level
    if change > 1e-2 * estimate.abs() && estimate.abs() > 1e8 {
        return Ok(Quadrature { value: f64::INFINITY, error_estimate: f64::INFINITY, evaluations });
    }
    Err(Error::Quadrature(format!(
        "no convergence after {TANH_SINH_MAX_LEVEL} levels (estimate {estimate:e}, change {change:e})"
    )))
}

// B_2k / (2k)! for k = 1..=5
const EM_COEFFS: [f64; 5] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
];

/// `d^m/dx^m x^{-s}` evaluated at `x`.
fn power_derivative(s: f64, m: usize, x: f64) -> f64 {
    let mut c = 1.0;
    for j in 0..m {
        c *= -s - j as f64;
    }
    c * x.powf(-s - m as f64)
}

/// Sum of `n^{-s}` over `from <= n <= to` (`to = None` means infinity and
/// requires `s > 1`).
///
/// Small indices are summed directly; the remainder uses Euler-Maclaurin with
/// five Bernoulli corrections, which is accurate to double precision once the
/// start index exceeds a few multiples of `|s|`.
pub fn power_sum(s: f64, from: u64, to: Option<u64>) -> f64 {
    assert!(from >= 1, "power_sum starts at n >= 1");
    if let Some(to) = to {
        if to < from {
            return 0.0;
        }
    } else {
        assert!(s > 1.0, "infinite power sum needs s > 1");
    }
    let switch = from.max(32).max((4.0 * s.abs()) as u64 + 8);
    let direct_end = match to {
        Some(to) => to.min(switch - 1),
        None => switch - 1,
    };
    let mut direct = 0.0;
    // small terms first
    for n in (from..=direct_end).rev() {
        direct += (n as f64).powf(-s);
    }
    let a = switch as f64;
    let tail = match to {
        Some(to) if to < switch => 0.0,
        Some(to) => {
            let b = to as f64;
            let log_ratio = (b / a).ln();
            let integral = if s == 1.0 {
                log_ratio
            } else {
                a.powf(1.0 - s) * ((1.0 - s) * log_ratio).exp_m1() / (1.0 - s)
            };
            let mut t = integral + 0.5 * (a.powf(-s) + b.powf(-s));
            for (k, c) in EM_COEFFS.iter().enumerate() {
                let m = 2 * k + 1;
                t += c * (power_derivative(s, m, b) - power_derivative(s, m, a));
            }
            t
        }
        None => {
            let mut t = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
            for (k, c) in EM_COEFFS.iter().enumerate() {
                t -= c * power_derivative(s, 2 * k + 1, a);
            }
            t
        }
    };
    direct + tail
}

/// Riemann zeta for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    power_sum(s, 1, None)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[lo, hi]` down to width `tol`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while hi - lo > tol && iter < 200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        iter += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Outcome of a seeded global maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub arg: f64,
    /// The maximizer sits at the truncation cap of an unbounded domain and
    /// the objective was still increasing there.
    pub unbounded: bool,
}

/// Maximize `f` over the sorted seed `nodes`: scan every node, then refine
/// around the best one by golden section. NaN values count as `-inf`.
pub fn seeded_max<F: Fn(f64) -> f64>(f: &F, nodes: &[f64], tol: f64) -> Optimum {
    assert!(!nodes.is_empty());
    let g = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let values: Vec<f64> = nodes.iter().map(|&x| g(x)).collect();
    let (mut best_i, mut best) = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut opt = Optimum { value: best, arg: nodes[best_i], unbounded: false };
    if nodes.len() < 2 || !best.is_finite() {
        return opt;
    }
    let lo = nodes[best_i.saturating_sub(1)];
    let hi = nodes[(best_i + 1).min(nodes.len() - 1)];
    if hi > lo {
        let (arg, value) = golden_max(&g, lo, hi, tol);
        if value > opt.value {
            opt = Optimum { value, arg, unbounded: false };
        }
    }
    opt
}

/// `n` points spaced evenly in log scale on `[lo, hi]`, `lo > 0`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[n - 1] = hi;
    v
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut v: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    v[n - 1] = hi;
    v
}

/// Shortest round-trip decimal text of `v`, in exponent form outside
/// `[1e-4, 1e16)`. Non-finite values print as `inf`, `-inf`, `NaN`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
