//! Shell-integral and pairing examples on real mode functions, plus
//! report-level invariants.

use bremweyl::diagnostics::{classify, ClassifyThresholds, FitWindows};
use bremweyl::emission::{closed_form_ir, compute_amplitude, ComputeOptions};
use bremweyl::fields::{DecayClass, ModeFunction, TestFunction};
use bremweyl::quadrature::{pairing, shell_integral, GridSpec, SphericalGrid};
use bremweyl::trajectory::build_smooth_stop_start;
use bremweyl::vec3::complexify;
use num_complex::Complex64;
use std::sync::Arc;

fn grid(radial_per_decade: usize, n_theta: usize) -> Arc<SphericalGrid<f64>> {
    Arc::new(
        SphericalGrid::new(GridSpec {
            r_min: 1e-4,
            r_max: 1e2,
            radial_per_decade,
            n_theta,
            n_phi: 2 * n_theta,
        })
        .unwrap(),
    )
}

#[test]
fn zero_field_zero_shell() {
    let g = grid(32, 8);
    let zero = ModeFunction::zero(&g);
    assert_eq!(shell_integral(&zero, 1e-2, 1.0).unwrap(), 0.0);
}

#[test]
fn inverse_momentum_field_gives_log_shells() {
    // |field|^2 = 1/omega^2 integrates to 2 pi log(b/a) over a shell
    let g = grid(32, 8);
    let field = ModeFunction::from_fn(&g, false, DecayClass::Unrestricted, |p, omega| {
        let s = 1.0 / (omega * omega);
        complexify(&[p[0] * s, p[1] * s, p[2] * s])
    })
    .unwrap();
    for (a, b) in [(1e-3, 1e-1), (1e-2, 1e1), (1.0, 1e2)] {
        let got = shell_integral(&field, a, b).unwrap();
        let expect = 2.0 * std::f64::consts::PI * (b / a).ln();
        assert!(
            ((got - expect) / expect).abs() <= 1e-8,
            "[{a},{b}]: {got} vs {expect}"
        );
    }
}

#[test]
fn soft_profile_shell_stable_under_refinement() {
    let v_out = [0.5, 0.0, 0.0];
    let make = |g: &Arc<SphericalGrid<f64>>| {
        ModeFunction::from_fn(g, false, DecayClass::Unrestricted, |p, _| {
            let cf = closed_form_ir(&[0.0; 3], &v_out, p).unwrap();
            complexify(&bremweyl::vec3::add(&cf.f1_t, &cf.f2))
        })
        .unwrap()
    };
    let coarse = shell_integral(&make(&grid(32, 12)), 1e-3, 1.0).unwrap();
    let fine = shell_integral(&make(&grid(96, 24)), 1e-3, 1.0).unwrap();
    assert!(
        ((coarse - fine) / fine).abs() <= 1e-5,
        "{coarse} vs {fine}"
    );
}

#[test]
fn pairing_examples() {
    let g = grid(32, 12);
    // normalized mode pairs to one
    let f = TestFunction::gaussian([0.0; 3], 1.0, [1.0, 0.0, 0.0]).unwrap();
    let m = ModeFunction::from_test_function_transverse(&g, &f)
        .unwrap()
        .normalized()
        .unwrap();
    let one = pairing(&m, &m).unwrap();
    assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-12);

    // conjugate symmetry
    let f2 = TestFunction::gaussian_poly([0.1, 0.0, 0.0], 0.8, [0.0, 1.0, 0.3], [0.0, 0.0, 1.0])
        .unwrap();
    let m2 = ModeFunction::from_test_function_transverse(&g, &f2).unwrap();
    let ab = pairing(&m, &m2).unwrap();
    let ba = pairing(&m2, &m).unwrap();
    assert!((ab - ba.conj()).norm() <= 1e-12 * (1.0 + ab.norm()));

    // spherically symmetric profiles with orthogonal fixed polarizations
    let profile = |_p: &[f64; 3], omega: f64| (-omega * omega / 2.0).exp();
    let ex = ModeFunction::from_fn(&g, false, DecayClass::RapidlyDecreasing, |p, o| {
        complexify(&[profile(p, o), 0.0, 0.0])
    })
    .unwrap();
    let ey = ModeFunction::from_fn(&g, false, DecayClass::RapidlyDecreasing, |p, o| {
        complexify(&[0.0, profile(p, o), 0.0])
    })
    .unwrap();
    let ortho = pairing(&ex, &ey).unwrap();
    assert!(ortho.norm() <= 1e-10 * ex.norm2(), "{ortho}");

    // refinement study
    let g_fine = grid(64, 24);
    let mf = ModeFunction::from_test_function_transverse(&g_fine, &f)
        .unwrap()
        .normalized()
        .unwrap();
    let m2f = ModeFunction::from_test_function_transverse(&g_fine, &f2).unwrap();
    let fine = pairing(&mf, &m2f).unwrap();
    assert!(
        (ab - fine).norm() <= 1e-6 * fine.norm().max(1e-12),
        "{ab} vs {fine}"
    );
}

#[test]
fn grid_mismatch_rejected() {
    let a = grid(32, 8);
    let b = grid(48, 8);
    let f = TestFunction::gaussian([0.0; 3], 1.0, [1.0, 0.0, 0.0]).unwrap();
    let ma = ModeFunction::from_test_function_transverse(&a, &f).unwrap();
    let mb = ModeFunction::from_test_function_transverse(&b, &f).unwrap();
    assert!(matches!(
        pairing(&ma, &mb),
        Err(bremweyl::Error::GridMismatch)
    ));
}

#[test]
fn report_shells_monotone_and_rederivable() {
    let traj = build_smooth_stop_start(10.0, &[1.0, 0.0, 0.0], 0.5).unwrap();
    let g = Arc::new(
        SphericalGrid::new(GridSpec {
            r_min: 1e-4,
            r_max: 1e4,
            radial_per_decade: 48,
            n_theta: 12,
            n_phi: 24,
        })
        .unwrap(),
    );
    let amp = compute_amplitude(&traj, &g, &ComputeOptions::default()).unwrap();
    let report = classify(&amp, FitWindows::default(), ClassifyThresholds::default()).unwrap();
    for w in report.uv.shells.windows(2) {
        assert!(w[1].0 > w[0].0 && w[1].1 >= w[0].1, "uv shells not monotone");
    }
    for w in report.ir.shells.windows(2) {
        // ir shells are indexed by the lower cutoff; smaller cutoff, larger integral
        assert!(w[1].0 > w[0].0 && w[1].1 <= w[0].1, "ir shells not monotone");
    }
    assert_eq!(report.rederive_classification(), report.classification);

    // smooth trajectories keep omega^2 |J_T| bounded across the UV window
    let sup_in = |lo: f64, hi: f64| {
        let mut best: f64 = 0.0;
        for (r, &omega) in g.radial_nodes().iter().enumerate() {
            if omega < lo || omega > hi {
                continue;
            }
            for a in 0..g.n_angular() {
                best = best.max(
                    omega * omega * bremweyl::vec3::cnorm(&amp.j_t()[g.sample_index(a, r)]),
                );
            }
        }
        best
    };
    let low_window = sup_in(10.0, 100.0);
    let high_window = sup_in(100.0, 1000.0);
    assert!(
        high_window <= 1.1 * low_window,
        "omega^2 |J_T| grew: {low_window} -> {high_window}"
    );
}
