use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use spincharge::charge::{check_nonresonance, m_rho_ball, mass_formula};
use spincharge::ChargeProfile;

fn ball() -> ChargeProfile {
    ChargeProfile::uniform_ball(1.0, 1.0, 1.0).unwrap()
}

fn bump() -> ChargeProfile {
    ChargeProfile::smooth_bump(1.0, 1.0, 1.0).unwrap()
}

/// Composite Simpson on [a, b] with n (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

#[test]
fn rho_hat_matches_radial_simpson() {
    let p = bump();
    for k in [0.5, 2.0, 7.5, 15.0] {
        let oracle = simpson(|r| 4.0 * PI * r * p.density(r) * (k * r).sin() / k, 0.0, 1.0, 4000);
        assert!((p.rho_hat(k) - oracle).abs() < 1e-10, "k = {k}");
    }
}

/// ∫ x ρ(x) e^{ik·x} dx by Simpson in (r, cos θ, φ) about the z axis.
fn varrho_hat_3d(p: &ChargeProfile, k: &Vector3<f64>, n: usize) -> Vector3<Complex64> {
    let big_r = p.r_rho();
    let mut total = Vector3::from_element(Complex64::new(0.0, 0.0));
    let hr = big_r / n as f64;
    let hu = 2.0 / n as f64;
    let hp = 2.0 * PI / n as f64;
    let w = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
    for i in 0..=n {
        let r = i as f64 * hr;
        // interior limit at r = R, where the ball density jumps
        let rho = p.density(r.min(big_r * (1.0 - 1e-12)));
        if rho == 0.0 {
            continue;
        }
        for j in 0..=n {
            let u = -1.0 + j as f64 * hu;
            let s = (1.0 - u * u).max(0.0).sqrt();
            // periodic in φ: trapezoid
            for l in 0..n {
                let phi = l as f64 * hp;
                let x = Vector3::new(r * s * phi.cos(), r * s * phi.sin(), r * u);
                let phase = Complex64::from_polar(1.0, k.dot(&x));
                let weight = w(i) * hr / 3.0 * w(j) * hu / 3.0 * hp * r * r * rho;
                total += x.map(|c| phase * (c * weight));
            }
        }
    }
    total
}

#[test]
fn varrho_hat_matches_direct_3d_quadrature() {
    let k = Vector3::new(1.0, 1.0, 0.0) / 2f64.sqrt();
    for p in [ball(), bump()] {
        let direct = varrho_hat_3d(&p, &k, 96);
        let radial = p.varrho_hat(&k);
        for c in 0..3 {
            assert!((direct[c] - radial[c]).norm() < 1e-6, "{c}: {} vs {}", direct[c], radial[c]);
        }
    }
}

/// (2π)^{-3} Σ over a k-lattice of spacing dk of h²/k², with the k → 0 limit h'(0)².
/// h/k is the transform of a function supported in B_R, so (h/k)² has support in B_2R
/// and the lattice sum is exact up to truncation once dk ≤ π/(2R).
fn kappa0_lattice(p: &ChargeProfile, dk: f64, k_cut: f64) -> f64 {
    let m = (k_cut / dk).ceil() as i64;
    let mut counts = vec![0u64; (m * m) as usize + 1];
    for i in -m..=m {
        for j in -m..=m {
            for l in -m..=m {
                let n = i * i + j * j + l * l;
                if n <= m * m {
                    counts[n as usize] += 1;
                }
            }
        }
    }
    let second = 4.0 * PI * p.moment(4) / 3.0;
    let mut sum = second * second;
    for (n, &c) in counts.iter().enumerate().skip(1) {
        if c == 0 {
            continue;
        }
        let k = dk * (n as f64).sqrt();
        sum += c as f64 * (p.h(k) / k).powi(2);
    }
    sum * dk.powi(3) / (8.0 * PI.powi(3))
}

#[test]
fn kappa0_radial_matches_3d_lattice_sum() {
    let b = bump();
    let lattice = kappa0_lattice(&b, 0.5, 60.0);
    assert_relative_eq!(lattice, b.kappa0().unwrap().value, max_relative = 1e-6);
    let exact_ball = 3.0 / (70.0 * PI);
    assert_relative_eq!(ball().kappa0().unwrap().value, exact_ball, max_relative = 1e-6);
}

#[test]
fn zeros_agree_with_ten_times_finer_scan() {
    let p = ball();
    let z = p.g_zeros(20.0, 1e-12).unwrap();
    let steps = 20_000;
    let h = 20.0 / steps as f64;
    let mut brute = Vec::new();
    for i in 1..steps {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        if p.g_real(a).signum() != p.g_real(b).signum() {
            brute.push(0.5 * (a + b));
        }
    }
    assert_eq!(z.mu.len(), brute.len());
    for (m, b) in z.mu.iter().zip(&brute) {
        assert!((m - b).abs() <= h);
    }
}

#[test]
fn ball_mass_set_uses_exact_formula() {
    let z = ball().g_zeros(20.0, 1e-12).unwrap();
    let set = m_rho_ball(&z).unwrap();
    for (m, mu) in set.values.iter().zip(&z.mu) {
        assert_eq!(*m, mass_formula(*mu));
    }
    assert!(m_rho_ball(&bump().g_zeros(20.0, 1e-12).unwrap()).is_err());
}

#[test]
fn nonresonance_report_is_consistent() {
    let z = ball().g_zeros(20.0, 1e-12).unwrap();
    let r = check_nonresonance(&z, 1e-6);
    assert_eq!(r.passed, r.violations.is_empty());
}

proptest! {
    #[test]
    fn rho_hat_at_zero_is_charge(q in 0.1f64..5.0, r in 0.3f64..3.0) {
        for p in [ChargeProfile::uniform_ball(r, q, 1.0).unwrap(), ChargeProfile::smooth_bump(r, q, 1.0).unwrap()] {
            prop_assert!((p.rho_hat(0.0) - q).abs() < 1e-10 * q);
        }
    }

    #[test]
    fn h_is_odd_and_kappa0_scales_with_charge_squared(k in 0.01f64..30.0, q in 0.2f64..3.0) {
        let p = ChargeProfile::uniform_ball(1.0, q, 1.0).unwrap();
        prop_assert_eq!(p.h(-k), -p.h(k));
        let ratio = p.kappa0().unwrap().value / ball().kappa0().unwrap().value;
        prop_assert!((ratio - q * q).abs() < 1e-9 * q * q);
    }

    #[test]
    fn bare_moment_linear_in_mass(m in 0.1f64..10.0) {
        let p = bump();
        let scaled = p.with_mass(m).unwrap();
        prop_assert!((scaled.bare_moment() - m * p.bare_moment()).abs() < 1e-13 * m);
    }
}
