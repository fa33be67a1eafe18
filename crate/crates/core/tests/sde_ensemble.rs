use dpo_core::fpmoments::{FpSeries, DEFAULT_TOL};
use dpo_core::sde::{run_ensemble, SdeConfig, SdeMode};
use dpo_core::ScaledParams;

fn short(eps: f64, n_traj: usize, seed: u64) -> SdeConfig {
    let mut c = SdeConfig::reduced(ScaledParams::from_x_gamma(12.5, 1.0, eps).unwrap(), seed);
    c.n_traj = n_traj;
    c.t_burn = 10.0;
    c.t_total = 40.0;
    c
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn identical_across_thread_counts() {
    let c = short(1.5, 200, 42);
    let one = in_pool(1, || run_ensemble(&c).unwrap());
    let three = in_pool(3, || run_ensemble(&c).unwrap());
    assert_eq!(one, three);
    assert_eq!(one, run_ensemble(&c).unwrap());
    let other = run_ensemble(&short(1.5, 200, 43)).unwrap();
    assert_ne!(one.n_phot.mean, other.n_phot.mean);
}

#[test]
fn standard_error_scaling() {
    let small = run_ensemble(&short(1.0, 400, 7)).unwrap();
    let large = run_ensemble(&short(1.0, 800, 7)).unwrap();
    let ratio = large.n_phot.se / small.n_phot.se;
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.3, "{ratio}");
}

#[test]
fn no_drive_no_photons() {
    let e = run_ensemble(&short(0.0, 50, 1)).unwrap();
    assert_eq!((e.n_phot.mean, e.a_sq.mean, e.alpha.mean), (0.0, 0.0, 0.0));
}

#[test]
fn mean_amplitude_vanishes() {
    let e = run_ensemble(&short(0.5, 1000, 3)).unwrap();
    assert!(e.alpha.mean.abs() <= 3.0 * e.alpha.se, "{:?}", e.alpha);
}

#[test]
fn reproduces_series_moments() {
    let fp = FpSeries::new(12.5).unwrap();
    for eps in [0.5, 1.5] {
        let e = run_ensemble(&short(eps, 2000, 11)).unwrap();
        let n = fp.moment(1, 1, eps, DEFAULT_TOL).unwrap();
        let a2 = fp.moment(0, 2, eps, DEFAULT_TOL).unwrap();
        assert!((e.n_phot.mean - n).abs() <= 3.0 * e.n_phot.se, "{eps}: {:?} vs {n}", e.n_phot);
        assert!((e.a_sq.mean - a2).abs() <= 3.0 * e.a_sq.se, "{eps}: {:?} vs {a2}", e.a_sq);
        assert_eq!(e.n_diverged, 0);
    }
}

#[test]
fn full_mode_near_reduced_mode() {
    // Full mode keeps the phonon fluctuations the reduced equations drop;
    // the two agree to a few percent, not to the Monte-Carlo error.
    let p = ScaledParams::from_x_gamma(12.5, 0.05, 0.5).unwrap();
    let mut full = SdeConfig::full(p, 5);
    full.n_traj = 200;
    full.t_burn = 10.0;
    full.t_total = 30.0;
    assert_eq!(full.mode, SdeMode::Full);
    let f = run_ensemble(&full).unwrap();
    let want = FpSeries::new(12.5).unwrap().moment(1, 1, 0.5, DEFAULT_TOL).unwrap();
    assert!((f.n_phot.mean / want - 1.0).abs() < 0.1, "{:?} vs {want}", f.n_phot);
}
