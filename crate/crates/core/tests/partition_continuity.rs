use entropic_tail::continuity::{continuity_modulus, rho_distance, tau_from_tail};
use entropic_tail::counterexample::CounterexampleModel;
use entropic_tail::gls::{default_p_grid, luxemburg_norm, natural_psi, QuarticLogYoung};
use entropic_tail::metric::natural_distance;
use entropic_tail::numeric::{lin_space, log_space};
use entropic_tail::partition::{
    all_set_partitions, bell, partition_tail_y, search_partition, Certificate, Partition, PartitionOptions,
};
use entropic_tail::simulate::{FieldModel, GaussianField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gaussian(n: usize, rng: &mut ChaCha8Rng) -> GaussianField {
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let cov = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.05 } else { 0.0 }).collect())
        .collect();
    GaussianField::new((0..n).map(|i| format!("t{i}")).collect(), cov).unwrap()
}

fn trapezoid(u: &[f64], y: &[f64]) -> f64 {
    u.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

fn check_exhaustive(field: &dyn FieldModel, seed: u64) {
    let n = field.len();
    let opts = PartitionOptions::default();
    let psi = natural_psi(field, &default_p_grid(field.moment_limit())).unwrap();
    let space = natural_distance(field, &psi).unwrap();
    let u = log_space(0.5, 200.0, 40);
    let best = all_set_partitions(n)
        .iter()
        .map(|p| trapezoid(&u, &partition_tail_y(field, p, &u, &opts).unwrap().curve.values))
        .fold(f64::INFINITY, f64::min);
    let found = search_partition(field, &space, &u, bell(n) as usize, seed, &opts).unwrap();
    assert!(found.exhaustive);
    assert!((found.objective - best).abs() <= 1e-12 * best, "n={n}: {} vs {best}", found.objective);
}

#[test]
fn exhaustive_search_finds_enumeration_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=5 {
        check_exhaustive(&random_gaussian(n, &mut rng), n as u64);
    }
    check_exhaustive(&CounterexampleModel::default_with(1.0, 4).unwrap(), 0);
}

#[test]
fn search_on_peaks_beats_single_part() {
    let m = CounterexampleModel::default_with(1.0, 64).unwrap();
    let psi = natural_psi(&m, &default_p_grid(4.0)).unwrap();
    let space = natural_distance(&m, &psi).unwrap();
    let u = log_space(1.0, 1e3, 31);
    let opts = PartitionOptions::default();
    let found = search_partition(&m, &space, &u, 40, 1, &opts).unwrap();
    let whole = partition_tail_y(&m, &Partition::whole(m.len()), &u, &opts).unwrap();
    assert!(found.curve.at(10.0) <= whole.curve.at(10.0));
    assert!(found.objective <= found.best_seed_objective);
}

#[test]
fn peaks_are_uniformly_continuous_in_rho() {
    let m = CounterexampleModel::default_with(1.0, 64).unwrap();
    let u = log_space(0.5, 1e4, 200);
    let y = partition_tail_y(&m, &Partition::singletons(m.len()), &u, &PartitionOptions::default()).unwrap();
    let tau = tau_from_tail(&y.curve, &lin_space(1.0, 3.99, 60)).unwrap();
    assert!(tau.b_tau > 3.9);
    let delta = log_space(1e-6, 2.0, 30);
    let rep = continuity_modulus(&m, &tau, &delta, 1e-2, 9.0).unwrap();
    assert_eq!(rep.certificate, Certificate::Pass);
    assert!(rep.bound.windows(2).all(|w| w[0] <= w[1]));
    assert!(rep.bound[0] < 1e-2);
    let rho = rho_distance(&m, &tau).unwrap();
    assert_eq!(rho.len(), m.len());
}

#[test]
fn orlicz_distance_tracks_natural_not_source_distance() {
    let ratios = |n: usize| {
        let m = CounterexampleModel::default_with(1.0, n).unwrap();
        let psi = natural_psi(&m, &default_p_grid(4.0)).unwrap();
        let dpsi = natural_distance(&m, &psi).unwrap();
        let src = m.source_space();
        let (mut lo, mut hi, mut src_hi) = (f64::INFINITY, 0.0f64, 0.0f64);
        for i in 0..=n {
            for j in i + 1..=n {
                let law = m.difference_law(i as u64 + 1, (j < n).then_some(j as u64 + 1));
                let r = luxemburg_norm(&law, &QuarticLogYoung, 1e-8).unwrap();
                lo = lo.min(r / dpsi.d(i, j));
                hi = hi.max(r / dpsi.d(i, j));
                src_hi = src_hi.max(r / src.d(i, j));
            }
        }
        (lo, hi, src_hi)
    };
    let (lo8, hi8, src8) = ratios(8);
    let (lo16, hi16, src16) = ratios(16);
    assert!(lo8 > 0.5 && lo16 > 0.5 && hi8 < 4.0 && hi16 < 4.0, "{lo8} {hi8} {lo16} {hi16}");
    // against the source distance the ratio keeps growing with N
    assert!(src16 > 1.5 * src8, "{src8} {src16}");
}
