use dpo_core::fpmoments::{FpSeries, DEFAULT_TOL};
use dpo_core::lindblad::*;
use dpo_core::PhysicalParams;

fn reference(drive: f64) -> PhysicalParams {
    PhysicalParams::new(1.0, 1.0, 0.1, drive, 0.0).unwrap()
}

fn solve(p: &PhysicalParams, h: HilbertConfig) -> DensityMatrix {
    let l = build_liouvillian(p, &h).unwrap();
    steady_state(&l, &SolverOptions::default()).unwrap()
}

#[test]
fn undriven_steady_state_is_vacuum() {
    let p = reference(0.0);
    for h in [HilbertConfig::new(4, 3).unwrap(), HilbertConfig::paired(5).unwrap()] {
        let o = solve(&p, h).observables();
        assert!(o.n_phot.abs() <= 1e-10, "{h:?}: {}", o.n_phot);
    }
}

#[test]
fn uncoupled_pump_is_coherent() {
    // 2E/Γ = 1 with Γ = 0.8
    let p = PhysicalParams::uncoupled(1.0, 0.8, 0.4, 0.0).unwrap();
    for frame in [PhononFrame::MeanField, PhononFrame::Fixed(0.0)] {
        let h = HilbertConfig::new(2, 20).unwrap().with_frame(frame);
        let dm = solve(&p, h);
        let o = dm.observables();
        assert!((o.b_mean.abs() - 1.0).abs() <= 1e-8, "{frame:?}: {}", o.b_mean);
        assert!(o.n_phot.abs() <= 1e-12);
    }
}

#[test]
fn uncoupled_pump_with_thermal_bath() {
    // thermal noise does not move the mean
    let p = PhysicalParams::uncoupled(1.0, 1.0, 0.75, 0.3).unwrap();
    let h = HilbertConfig::new(2, 16).unwrap();
    let dm = solve(&p, h);
    assert!((dm.observables().b_mean - 1.5).abs() <= 1e-8);
    // displaced thermal state: ⟨c†c⟩ = n̄_B
    assert!((dm.phonon_fluctuation_number() - 0.3).abs() <= 1e-6);
}

#[test]
fn generator_preserves_trace() {
    for (drive, nbar) in [(0.5, 0.0), (2.5, 0.0), (1.25, 0.4)] {
        let p = PhysicalParams::new(1.0, 1.0, 0.1, drive, nbar).unwrap();
        for h in [HilbertConfig::paired(4).unwrap(), HilbertConfig::new(7, 5).unwrap()] {
            let l = build_liouvillian(&p, &h).unwrap();
            assert!(l.trace_defect() <= 1e-12);
        }
    }
}

#[test]
fn steady_state_is_a_density_matrix() {
    for eps in [0.5, 1.0, 1.8] {
        let p = reference(1.25 * eps);
        let dm = solve(&p, HilbertConfig::paired(6).unwrap());
        assert!((dm.trace() - 1.0).abs() <= 1e-10);
        assert!(dm.hermiticity_defect <= 1e-10);
        assert!(dm.min_eigenvalue >= -1e-8, "{eps}: {}", dm.min_eigenvalue);
        assert!(dm.stored_min_eigenvalue() >= -1e-8);
        assert!(dm.residual <= 1e-9);
        let o = dm.observables();
        assert!(o.a_mean.abs() <= 1e-8, "parity broken: {}", o.a_mean);
        assert!(o.n_phot > 0.0);
    }
}

#[test]
fn thermal_bath_steady_state() {
    let p = PhysicalParams::new(1.0, 1.0, 0.1, 1.0, 0.5).unwrap();
    let dm = solve(&p, HilbertConfig::new(10, 6).unwrap());
    assert!((dm.trace() - 1.0).abs() <= 1e-10);
    assert!(dm.min_eigenvalue >= -1e-8);
    assert!(dm.observables().a_mean.abs() <= 1e-8);
}

#[test]
fn squeezed_below_threshold() {
    for eps in [0.25, 0.5, 0.9] {
        let o = solve(&reference(1.25 * eps), HilbertConfig::paired(6).unwrap()).observables();
        assert!(o.var_y < 1.0 && o.var_x > 1.0, "{eps}: {o:?}");
    }
}

#[test]
fn partial_trace_keeps_unit_trace() {
    let dm = solve(&reference(2.5), HilbertConfig::paired(6).unwrap());
    let rho_a = dm.partial_trace_photon();
    assert!((rho_a.trace() - 1.0).abs() <= 1e-12);
    let n: f64 = (0..rho_a.nrows()).map(|k| k as f64 * rho_a[(k, k)]).sum();
    assert!((n - dm.observables().n_phot).abs() <= 1e-12);
}

#[test]
fn tracks_series_below_threshold() {
    let fp = FpSeries::new(12.5).unwrap();
    let eps = 0.5;
    let o = solve(&reference(1.25 * eps), HilbertConfig::paired(8).unwrap()).observables();
    let want = fp.moment(1, 1, eps, DEFAULT_TOL).unwrap();
    assert!((o.n_phot / 12.5 / want - 1.0).abs() < 0.05);
}

#[test]
fn truncation_study_converges() {
    let s = truncation_study(&reference(1.25), &[4, 5, 6, 7], PhononFrame::MeanField, &SolverOptions::default()).unwrap();
    assert_eq!(s.observables.len(), 4);
    let n: Vec<f64> = s.observables.iter().map(|o| o.n_phot).collect();
    let steps: Vec<f64> = n.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(steps[2] < steps[0], "{n:?}");
    let sh = s.shanks_n_phot.unwrap();
    let last_triple = *sh.table[1].last().unwrap();
    assert!((last_triple - n[3]).abs() < steps[2], "{n:?} {last_triple}");
    assert!((sh.value - n[3]).abs() <= 2.0 * steps[2].max(1e-9), "{n:?} {}", sh.value);
}

#[test]
fn q_function_of_an_above_threshold_state() {
    let dm = solve(&reference(2.5), HilbertConfig::new(40, 4).unwrap());
    let q = q_function(&dm.partial_trace_photon(), &GridSpec::symmetric(7.0, 0.25)).unwrap();
    assert!(q.min() >= -1e-12);
    assert!(q.inversion_defect() <= 1e-10);
    assert!((q.integral() - 1.0).abs() < 0.02);
    let m = q.maxima();
    assert_eq!(m.len(), 2);
    // branch amplitude √((E − E_c)/g) = √12.5
    for (a, _) in &m[..2] {
        assert!(a.im.abs() < 1e-12 && (a.re.abs() - 12.5f64.sqrt()).abs() <= 0.5, "{a}");
    }
}

#[test]
fn solver_reports_bad_options() {
    let l = build_liouvillian(&reference(1.0), &HilbertConfig::paired(3).unwrap()).unwrap();
    let opts = SolverOptions {
        method: Method::Iterative,
        max_iter: 1,
        ..SolverOptions::default()
    };
    assert!(steady_state(&l, &opts).is_err());
}
