use entropic_tail::conjugate::{co_transform, legendre, nu_star, ClosedForm, Interval, NuFunction, TabulatedFunction};
use entropic_tail::gls::PsiFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense scan of `[lo, hi]` (log-spaced when `log`), then a second dense
/// scan around the best node.
fn brute_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, log: bool) -> f64 {
    let n = 200_000;
    let node = |i: usize| {
        let t = i as f64 / n as f64;
        if log {
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        } else {
            lo + t * (hi - lo)
        }
    };
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..=n {
        let v = f(node(i));
        if v > best.0 {
            best = (v, i);
        }
    }
    let a = node(best.1.saturating_sub(1));
    let b = node((best.1 + 1).min(n));
    let mut m = best.0;
    for i in 0..=20_000 {
        m = m.max(f(a + (b - a) * i as f64 / 20_000.0));
    }
    m
}

struct Case {
    name: &'static str,
    psi: PsiFunction,
    // search range for p, and whether to scan it logarithmically
    lo: f64,
    hi: f64,
    log: bool,
}

fn family() -> Vec<Case> {
    let inset = 1e-9;
    vec![
        Case { name: "const", psi: PsiFunction::constant(1.0, 4.0).unwrap(), lo: 1.0, hi: 4.0 - inset, log: false },
        Case { name: "sqrt", psi: PsiFunction::sqrt_p(), lo: 1.0, hi: 1e5, log: true },
        Case { name: "quartic", psi: PsiFunction::beta_b(0.125, 4.0).unwrap(), lo: 1.0, hi: 4.0 - inset, log: false },
        Case { name: "b3", psi: PsiFunction::beta_b(0.5, 3.0).unwrap(), lo: 1.0, hi: 3.0 - inset, log: false },
        Case { name: "b4", psi: PsiFunction::beta_b(1.0, 4.0).unwrap(), lo: 1.0, hi: 4.0 - inset, log: false },
    ]
}

#[test]
fn nu_star_matches_brute_force() {
    for c in family() {
        for x in [-1.0, -0.2, 0.0, 0.3, 0.7, 1.0, 1.5, 2.5] {
            let got = nu_star(&c.psi, x);
            let want = brute_max(|p| x * p - p * c.psi.ln_eval(p), c.lo, c.hi, c.log);
            assert!((got - want).abs() <= 1e-6, "{} x={x}: {got} vs {want}", c.name);
        }
    }
}

#[test]
fn legendre_of_nu_matches_brute_force() {
    for c in family() {
        for x in [-0.5, 0.4, 1.2, 2.0] {
            let got = legendre(&NuFunction(&c.psi), x).value;
            let want = brute_max(|p| x * p - p * c.psi.ln_eval(p), c.lo, c.hi, c.log);
            assert!((got - want).abs() <= 1e-6, "{} x={x}: {got} vs {want}", c.name);
        }
    }
}

#[test]
fn co_transform_matches_brute_force() {
    for c in family() {
        for x in [0.0, 0.1, 0.5, 1.0, 3.0, 10.0] {
            let got = co_transform(&c.psi, x);
            let want = -brute_max(|p| -x / p - c.psi.ln_eval(p), c.lo, c.hi, c.log);
            assert!((got - want).abs() <= 1e-6, "{} x={x}: {got} vs {want}", c.name);
        }
    }
}

#[test]
fn closed_form_spot_values() {
    let sqrt = PsiFunction::sqrt_p();
    assert!((nu_star(&sqrt, 1.0) - std::f64::consts::E / 2.0).abs() < 1e-8);
    let one = PsiFunction::constant(1.0, 4.0).unwrap();
    for x in [0.0, 0.5, 1.0, 7.0] {
        assert!((co_transform(&one, x) - x / 4.0).abs() < 1e-8, "x={x}");
    }
    // inf_p (x/p + ln p / 2) at p = 2x
    for x in [0.75, 2.0, 5.0] {
        assert!((co_transform(&sqrt, x) - (0.5 + 0.5 * (2.0 * x).ln())).abs() < 1e-8);
    }
}

#[test]
fn biconjugate_recovers_convex_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let n = 24;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut slopes: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-3.0..3.0)).collect();
        slopes.sort_by(f64::total_cmp);
        let mut ys = vec![rng.random_range(0.5..2.0)];
        for i in 0..n - 1 {
            let y = ys[i] + slopes[i] * (xs[i + 1] - xs[i]);
            ys.push(y);
        }
        let f = TabulatedFunction::new(xs.clone(), ys.clone()).unwrap();
        let dual = ClosedForm {
            domain: Interval::closed(slopes[0] - 1.0, slopes[n - 2] + 1.0),
            f: |x: f64| legendre(&f, x).value,
        };
        for i in 1..n - 1 {
            let back = legendre(&dual, xs[i]).value;
            let rel = (back - ys[i]).abs() / ys[i].abs().max(1.0);
            assert!(rel <= 1e-4, "node {i}: {back} vs {}", ys[i]);
        }
    }
}
