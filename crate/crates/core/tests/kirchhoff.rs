use approx::assert_relative_eq;
use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use spincharge::dynamics::{free_evolve, run, wrap_cap, IntegratorConfig, RunOptions, Scheme};
use spincharge::kirchhoff::{
    drift_check, f_bound_check, f_eval, fit_power_law, geometric_times, kirchhoff_free, retarded_field,
    sphere_integral_identity, sphere_integral_quadrature, DelayQuadrature, InitialFieldSpec, KirchhoffQuadrature,
    OmegaHistory, SupportQuadrature,
};
use spincharge::quadrature::SphereRule;
use spincharge::soliton::{radial_profile, soliton_a};
use spincharge::{ChargeProfile, Error, FieldState, SpectralGrid, SystemModel};

fn ball() -> ChargeProfile {
    ChargeProfile::uniform_ball(1.0, 1.0, 1.0).unwrap()
}

/// Deterministic probe points spread over 0.2 ≤ |x| ≤ 4.
fn probes(count: usize) -> Vec<Vector3<f64>> {
    (0..count)
        .map(|i| {
            let u = (i as f64 + 0.5) / count as f64;
            let theta = (1.0 - 2.0 * u).acos();
            let phi = 2.399_963 * i as f64;
            let r = 0.2 + 3.8 * u;
            Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * r
        })
        .collect()
}

#[test]
fn sphere_identity_sweep() {
    let rule = SphereRule::product(38, 76);
    let dir = Vector3::new(0.36, -0.48, 0.8);
    for alpha in [1.5, 2.5, 3.0] {
        for xn in [0.3, 0.7, 1.0] {
            for t in [2.0, 5.0, 10.0] {
                let exact = sphere_integral_identity(alpha, xn, t).unwrap();
                let quad = sphere_integral_quadrature(alpha, &(dir * xn), t, &rule);
                assert!((quad - exact).abs() <= 1e-8 * exact, "alpha {alpha}, |x| {xn}, t {t}");
            }
        }
    }
}

#[test]
fn kirchhoff_field_solves_the_wave_equation() {
    let init = InitialFieldSpec::algebraic(
        0.75,
        Vector3::new(0.2, 0.0, -0.1),
        Vector3::new(0.3, 1.0, 0.0),
        Vector3::new(0.0, 0.5, 1.0),
        1.0,
    );
    let q = KirchhoffQuadrature::new(64);
    let x = Vector3::new(0.4, -0.3, 0.5);
    let t = 2.0;
    let d = 1e-3;
    let at = |x: &Vector3<f64>, t: f64| kirchhoff_free(x, t, &init, &q).unwrap();
    let c = at(&x, t);
    // Π = ∂_t A
    let dt_a = (at(&x, t + d).a - at(&x, t - d).a) / (2.0 * d);
    assert!((dt_a - c.pi).norm() <= 1e-6 * c.pi.norm().max(1.0));
    // ∂_t Π = ΔA
    let dt_pi = (at(&x, t + d).pi - at(&x, t - d).pi) / (2.0 * d);
    let mut lap = -c.a * 6.0;
    for m in 0..3 {
        let e = Vector3::ith(m, d);
        lap += at(&(x + e), t).a + at(&(x - e), t).a;
        let fd = (at(&(x + e), t).a - at(&(x - e), t).a) / (2.0 * d);
        assert!((c.grad_a.column(m) - fd).norm() <= 1e-6 * c.grad_a.norm());
    }
    lap /= d * d;
    assert!((dt_pi - lap).norm() <= 1e-4 * dt_pi.norm().max(1e-2), "{dt_pi:?} vs {lap:?}");
}

#[test]
fn free_field_decays_at_the_predicted_rate() {
    let init = InitialFieldSpec::far_field(0.75, 1.0).unwrap();
    let q = KirchhoffQuadrature::new(24);
    let ts = geometric_times(50.0, 400.0, 10);
    let vals: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let f = kirchhoff_free(&Vector3::zeros(), t, &init, &q).unwrap();
            f.grad_a.norm() + f.pi.norm()
        })
        .collect();
    let fit = fit_power_law(&ts, &vals).unwrap();
    assert!((fit.exponent + 1.75).abs() <= 0.15, "exponent {}", fit.exponent);
}

#[test]
fn retarded_field_of_zero_history_vanishes() {
    let hist = OmegaHistory::constant(Vector3::zeros());
    for x in probes(5) {
        let (a, da) = retarded_field(&x, 3.0, &hist, &ball(), &DelayQuadrature::default()).unwrap();
        assert_eq!(a, Vector3::zeros());
        assert_eq!(da, Vector3::zeros());
    }
}

#[test]
fn constant_history_reproduces_the_soliton() {
    let omega = Vector3::new(0.2, -0.4, 1.0);
    let hist = OmegaHistory::constant(omega);
    let p = ball();
    for x in probes(20) {
        let exact = omega.cross(&x) * radial_profile(&p, x.norm());
        for t in [0.0, 7.5] {
            let (a, da) = retarded_field(&x, t, &hist, &p, &DelayQuadrature::default()).unwrap();
            assert!((a - exact).norm() <= 1e-4 * exact.norm(), "x = {x:?}");
            assert!(da.norm() <= 1e-14);
        }
    }
}

#[test]
fn history_change_is_invisible_outside_its_light_cone() {
    let w0 = Vector3::new(0.0, 0.0, 1.0);
    let w1 = Vector3::new(0.3, 0.0, 1.4);
    let t_a = 1.0;
    let changed = OmegaHistory::new(
        w0,
        t_a,
        vec![(t_a, w0, Vector3::zeros()), (2.0, w1, Vector3::zeros()), (6.0, w1, Vector3::zeros())],
    )
    .unwrap();
    let steady = OmegaHistory::constant(w0);
    let p = ball();
    let q = DelayQuadrature::default();
    let t = 4.0;
    let mut outside = 0;
    let mut inside = 0;
    for x in probes(20).into_iter().map(|x| x * 2.0) {
        let a = retarded_field(&x, t, &changed, &p, &q).unwrap();
        let b = retarded_field(&x, t, &steady, &p, &q).unwrap();
        if x.norm() - p.r_rho() >= t - t_a {
            assert_eq!(a, b, "x = {x:?}");
            outside += 1;
        } else if x.norm() + p.r_rho() < t - t_a {
            assert!((a.0 - b.0).norm() > 1e-6);
            inside += 1;
        }
    }
    assert!(outside >= 3 && inside >= 3, "{outside} outside, {inside} inside");
}

#[test]
fn f_vanishes_for_zero_data() {
    let p = ball();
    let sq = SupportQuadrature::new(&p, 4, 4, KirchhoffQuadrature::new(8));
    let f = f_eval(3.0, &InitialFieldSpec::zero(), &Vector3::z(), &p, &sq).unwrap();
    assert_eq!(f, Vector3::zeros());
}

#[test]
fn f_decays_and_respects_the_poincare_bound() {
    let p = ball();
    let init = InitialFieldSpec::far_field(0.75, 1.0).unwrap();
    let omega = Vector3::new(0.0, 0.0, 1.0);
    let sq = SupportQuadrature::new(&p, 6, 6, KirchhoffQuadrature::new(16));
    let ts = geometric_times(50.0, 400.0, 8);
    let mut vals = Vec::new();
    for &t in &ts {
        vals.push(f_eval(t, &init, &omega, &p, &sq).unwrap().norm());
        let b = f_bound_check(t, &init, &omega, &p, &sq).unwrap();
        assert!(b.lhs <= b.rhs, "t = {t}: {} > {}", b.lhs, b.rhs);
    }
    let fit = fit_power_law(&ts, &vals).unwrap();
    assert!((fit.exponent + 1.75).abs() <= 0.2, "exponent {}", fit.exponent);
}

fn component(field: &[nalgebra::Vector3<Complex64>], c: usize) -> Vec<Complex64> {
    field.iter().map(|v| v[c]).collect()
}

#[test]
fn spectral_and_kirchhoff_free_evolution_agree() {
    let p = ball();
    let grid = SpectralGrid::new(64, 24.0).unwrap();
    let m = SystemModel::new_coarse(&p, grid.clone()).unwrap();
    let init = InitialFieldSpec::gaussian(Vector3::new(1.0, -0.5, 0.0), Vector3::new(0.2, 0.3, 1.0), Vector3::new(1.0, 0.0, 0.4), 1.2);
    let (a0, p0) = (init.a0.unwrap(), init.pi0.unwrap());
    let data = FieldState::sample(&grid, |x| (a0.value(x), p0.value(x)));
    let q = KirchhoffQuadrature::new(96);
    let points = probes(10);
    for t in [2.0, 5.0, 8.0] {
        assert!(t < wrap_cap(&m));
        let evolved = free_evolve(&data, &grid, t);
        let comps: Vec<Vec<Complex64>> = (0..3)
            .map(|c| component(&evolved.a, c))
            .chain((0..3).map(|c| component(&evolved.pi, c)))
            .collect();
        let mut worst: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for x in &points {
            let k = kirchhoff_free(x, t, &init, &q).unwrap();
            let spectral: Vec<f64> = comps.iter().map(|c| grid.eval_point(c, x)).collect();
            let sa = Vector3::new(spectral[0], spectral[1], spectral[2]);
            let sp = Vector3::new(spectral[3], spectral[4], spectral[5]);
            worst = worst.max((sa - k.a).norm()).max((sp - k.pi).norm());
            peak = peak.max(k.a.norm()).max(k.pi.norm());
        }
        assert!(worst <= 1e-3 * peak, "t = {t}: {worst:.3e} vs peak {peak:.3e}");
    }
}

#[test]
fn drift_check_needs_three_samples_after_reference() {
    let p = ball();
    let m = SystemModel::new_coarse(&p, SpectralGrid::new(16, 8.0).unwrap()).unwrap();
    let s = soliton_a(Vector3::z(), &m).unwrap();
    let opts = RunOptions {
        sample_times: vec![0.0, 0.1, 0.2, 0.3],
        radii: vec![2.0],
        track_step_change: false,
    };
    let (_, series) = run(s.state(), &IntegratorConfig::new(0.05, 0.3, Scheme::Strang), &m, &opts).unwrap();
    assert!(matches!(drift_check(&series, 0.25, 1.0), Err(Error::InsufficientSamples { .. })));
    let report = drift_check(&series, 0.1, 1.0).unwrap();
    assert_eq!(report.t_ref, series.samples[1].t);
    assert_eq!(report.t_end, series.samples[3].t);
    assert!(report.h_drift.is_finite() && report.pi_drift.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn identity_matches_quadrature_for_random_arguments(alpha in 1.1f64..3.5, xn in 0.0f64..1.0, gap in 0.5f64..8.0) {
        prop_assume!((alpha - 2.0).abs() > 1e-3);
        let t = xn + gap;
        let exact = sphere_integral_identity(alpha, xn, t).unwrap();
        let quad = sphere_integral_quadrature(alpha, &Vector3::new(0.0, xn, 0.0), t, &SphereRule::product(38, 76));
        prop_assert!((quad - exact).abs() <= 1e-8 * exact);
    }

    #[test]
    fn retarded_field_is_linear_in_omega(w in prop::array::uniform3(-2.0f64..2.0), s in -3.0f64..3.0) {
        let p = ball();
        let w = Vector3::from(w);
        let x = Vector3::new(0.7, 0.2, -0.4);
        let q = DelayQuadrature::default();
        let a1 = retarded_field(&x, 1.0, &OmegaHistory::constant(w), &p, &q).unwrap().0;
        let a2 = retarded_field(&x, 1.0, &OmegaHistory::constant(w * s), &p, &q).unwrap().0;
        prop_assert!((a2 - a1 * s).norm() <= 1e-13 * (1.0 + a2.norm()));
    }
}

#[test]
fn identity_at_origin_is_uniform_mean() {
    assert_relative_eq!(sphere_integral_identity(3.0, 0.0, 2.0).unwrap(), 4.0 * std::f64::consts::PI / 8.0);
}
