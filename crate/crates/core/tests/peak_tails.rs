use entropic_tail::counterexample::{symmetrize, CounterexampleModel};
use entropic_tail::numeric::log_space;
use entropic_tail::simulate::{dkw_band, empirical_sup_tail, sample_paths, sample_sups};

const ZETA5: f64 = 1.036_927_755_143_369_9;

/// `Σ_n Δ_n min(1, (n/u)^8)` for β = 1, summed term by term.
fn direct_tail(u: f64, terms: u64) -> f64 {
    (1..=terms).rev().map(|n| (n as f64).powi(-5) / ZETA5 * (n as f64 / u).powi(8).min(1.0)).sum()
}

#[test]
fn exact_tail_matches_direct_sum() {
    let m = CounterexampleModel::default_with(1.0, 256).unwrap();
    for u in [1.5, 3.0, 10.0, 77.7, 500.0, 1000.0] {
        let want = direct_tail(u, 1_000_000);
        let got = m.exact_tail_prob(u);
        assert!((got - want).abs() <= 1e-9 * want, "u={u}: {got} vs {want}");
    }
    assert_eq!(m.exact_tail_prob(0.5), 1.0);
}

#[test]
fn tail_is_quartic_without_log_factor() {
    let m = CounterexampleModel::default_with(1.0, 256).unwrap();
    // u⁴ P(sup > u) -> C / (2β)
    let limit = 0.5 / ZETA5;
    let u: f64 = 1e4;
    assert!((u.powi(4) * m.exact_tail_prob(u) / limit - 1.0).abs() < 1e-3);
}

#[test]
fn log_ratio_running_max_settles() {
    let m = CounterexampleModel::default_with(1.0, 256).unwrap();
    let u = log_space(std::f64::consts::E, 1e3, 400);
    let r = m.tail_ratio(&u);
    let at = |x: f64| r.iter().filter(|t| t.0 <= x * (1.0 + 1e-12)).last().unwrap().2;
    let (a, b) = (at(100.0), at(1000.0));
    assert!(b.is_finite() && b > 0.0);
    assert!((b - a) / b < 0.01, "{a} -> {b}");
    // the fitted K ln u / u⁴ curve then covers the exact tail
    let bound = m.log_power_bound(b, &u).unwrap();
    for (&x, &v) in u.iter().zip(&bound.values) {
        assert!(m.exact_tail_prob(x) <= v * (1.0 + 1e-12), "u={x}");
    }
}

#[test]
fn sampled_sup_agrees_with_truncated_law() {
    let m = CounterexampleModel::default_with(1.0, 256).unwrap();
    let n = 100_000;
    let sups = sample_sups(&m, n, 42).unwrap();
    let u = log_space(0.5, 300.0, 60);
    let emp = empirical_sup_tail(&sups, &u).unwrap();
    let band = dkw_band(n, 0.01);
    for (&x, &e) in u.iter().zip(&emp.values) {
        let p = m.truncated_tail_prob(x);
        assert!((e - p).abs() <= band, "u={x}: {e} vs {p}");
    }
}

#[test]
fn symmetrized_paths_keep_absolute_values() {
    let m = CounterexampleModel::default_with(1.0, 64).unwrap();
    let s = symmetrize(&m, 3);
    let a = sample_paths(&m, 2000, 9).unwrap();
    let b = sample_paths(&s, 2000, 9).unwrap();
    let mut negative = 0;
    for (x, y) in a.data.iter().zip(&b.data) {
        assert_eq!(x.abs(), y.abs());
        negative += (*y < 0.0) as usize;
    }
    let nonzero = b.data.iter().filter(|v| **v != 0.0).count();
    let frac = negative as f64 / nonzero as f64;
    assert!((frac - 0.5).abs() < 0.05, "{frac}");
    assert_eq!(sample_sups(&s, 500, 1).unwrap(), sample_sups(&m, 500, 1).unwrap());
}
