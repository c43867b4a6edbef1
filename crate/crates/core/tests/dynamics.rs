use nalgebra::Vector3;
use proptest::prelude::*;
use spincharge::dynamics::{free_evolve, run, IntegratorConfig, RunOptions, Scheme, Stepper};
use spincharge::soliton::{hamiltonian, pi_invariant, soliton_a};
use spincharge::{ChargeProfile, FieldState, SpectralGrid, SystemModel, SystemState};

fn model() -> SystemModel {
    let p = ChargeProfile::smooth_bump(1.0, 1.0, 1.0).unwrap();
    SystemModel::new(&p, SpectralGrid::new(32, 8.0).unwrap()).unwrap()
}

/// Soliton fields of (0,0,1), rotor kicked off axis, plus a small free wave packet.
fn kicked(m: &SystemModel, seed: u64) -> SystemState {
    let s = soliton_a(Vector3::new(0.0, 0.0, 1.0), m).unwrap();
    let wave = FieldState::random_transverse(m.grid(), 2.0, seed).scaled(0.01);
    SystemState::new(s.field.plus(&wave), Vector3::new(0.1, 0.0, 1.2))
}

fn evolve(y: SystemState, dt: f64, t: f64, m: &SystemModel) -> SystemState {
    let mut st = Stepper::new(y, IntegratorConfig::new(dt, t, Scheme::Strang), m).unwrap();
    for _ in 0..(t / dt).round() as usize {
        st.step().unwrap();
    }
    st.into_state()
}

fn distance(a: &SystemState, b: &SystemState, m: &SystemModel) -> f64 {
    SystemState::new(a.field.minus(&b.field), a.omega - b.omega).norm(m.grid())
}

#[test]
fn energy_and_angular_momentum_magnitude_are_conserved() {
    let m = model();
    let y0 = kicked(&m, 3);
    let (h0, p0) = (hamiltonian(&y0, &m), pi_invariant(&y0, &m).norm());
    let y = evolve(y0, 5e-3, 2.0, &m);
    let dh = (hamiltonian(&y, &m) - h0).abs() / h0;
    let dp = (pi_invariant(&y, &m).norm() - p0).abs() / p0;
    assert!(dh <= 1e-6, "H drift {dh:.3e}");
    assert!(dp <= 1e-6, "|pi| drift {dp:.3e}");
}

/// π obeys dπ/dt = ω∧π, so only its length is invariant.
#[test]
fn angular_momentum_precesses_about_the_rotor() {
    let m = model();
    let dt = 2.5e-3;
    let mut st = Stepper::new(kicked(&m, 3), IntegratorConfig::new(dt, 2.0, Scheme::Strang), &m).unwrap();
    let p0 = pi_invariant(st.state(), &m);
    let torque = |y: &SystemState| y.omega.cross(&pi_invariant(y, &m));
    let mut integral = Vector3::zeros();
    let mut prev = torque(st.state());
    for _ in 0..800 {
        st.step().unwrap();
        let now = torque(st.state());
        integral += (prev + now) * (0.5 * dt);
        prev = now;
    }
    let moved = pi_invariant(st.state(), &m) - p0;
    assert!(moved.norm() > 1e-5 * p0.norm(), "no precession to test");
    assert!((moved - integral).norm() <= 1e-2 * moved.norm(), "{moved:?} vs {integral:?}");
}

#[test]
fn free_field_energy_is_preserved_exactly() {
    let m = model();
    let f = FieldState::random_transverse(m.grid(), 2.0, 11);
    let e0 = f.energy_norm(m.grid());
    let g = free_evolve(&f, m.grid(), 3.7);
    assert!((g.energy_norm(m.grid()) - e0).abs() <= 1e-12 * e0);
    // free evolution is a group
    let twice = free_evolve(&free_evolve(&f, m.grid(), 1.2), m.grid(), 2.5);
    let diff = twice.minus(&g).energy_norm(m.grid());
    assert!(diff <= 1e-12 * e0, "{diff:e}");
}

#[test]
fn soliton_stays_put() {
    let m = model();
    let s = soliton_a(Vector3::new(0.3, 0.0, 0.8), &m).unwrap();
    let cfg = IntegratorConfig::new(1e-2, 1.0, Scheme::Strang);
    let opts = RunOptions {
        sample_times: vec![0.0, 1.0],
        radii: vec![2.0],
        track_step_change: true,
    };
    let (y, series) = run(s.state(), &cfg, &m, &opts).unwrap();
    assert!(series.max_step_change <= 1e-10, "{:e}", series.max_step_change);
    assert!(distance(&y, &s.state(), &m) <= 1e-10);
}

#[test]
fn strang_splitting_is_second_order() {
    let m = model();
    let y0 = kicked(&m, 5);
    let t = 1.0;
    let reference = evolve(y0.clone(), 1.25e-3, t, &m);
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| distance(&evolve(y0.clone(), dt, t, &m), &reference, &m))
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "errors {errs:?}, order {order}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = model();
    let y0 = kicked(&m, 8);
    let cfg = IntegratorConfig::new(1e-2, 0.5, Scheme::Strang);
    let opts = RunOptions {
        sample_times: vec![0.0, 0.25, 0.5],
        radii: vec![2.0, 3.0],
        track_step_change: false,
    };
    let go = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run(y0.clone(), &cfg, &m, &opts).unwrap())
    };
    let (y1, s1) = go(1);
    let (y4, s4) = go(4);
    assert_eq!(y1, y4);
    assert_eq!(s1.samples, s4.samples);
}

#[test]
fn rk4_agrees_with_strang_on_a_smooth_run() {
    let m = model();
    let y0 = kicked(&m, 2);
    let strang = evolve(y0.clone(), 2.5e-3, 0.5, &m);
    let mut st = Stepper::new(y0, IntegratorConfig::new(2.5e-3, 0.5, Scheme::Rk4Monolithic), &m).unwrap();
    for _ in 0..200 {
        st.step().unwrap();
    }
    let d = distance(st.state(), &strang, &m);
    assert!(d <= 1e-4 * strang.norm(m.grid()), "{d:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_keeps_fields_transverse_and_hermitian(seed in 0u64..1000, wz in 0.2f64..1.5) {
        let m = model();
        let f = FieldState::random_transverse(m.grid(), 2.0, seed).scaled(0.05);
        let y = evolve(SystemState::new(f, Vector3::new(0.0, 0.1, wz)), 2e-2, 0.2, &m);
        let scale = y.field.energy_norm(m.grid()).max(1e-300);
        prop_assert!(y.field.max_divergence(m.grid()) <= 1e-12 * scale);
        prop_assert!(y.field.hermitian_defect(m.grid()) <= 1e-12 * scale);
    }
}

