//! Stationary solutions S_ω = (A_ω, 0, ω), the Coulomb potential, and the
//! conserved or Lyapunov functionals evaluated on phase points.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use crate::charge::ChargeProfile;
use crate::error::{Error, Result};
use crate::field::{cnorm_sqr, cscale, czero, rcross, CVec3, FieldState, SystemState};
use crate::model::SystemModel;

/// Static field of a uniformly rotating charge.
#[derive(Debug, Clone, PartialEq)]
pub struct Soliton {
    pub omega: Vector3<f64>,
    /// Grid coefficients of A_ω; Π is identically zero.
    pub field: FieldState,
}

impl Soliton {
    pub fn state(&self) -> SystemState {
        SystemState::new(self.field.clone(), self.omega)
    }

    /// Closed-form value (ω∧x)·a(|x|) of the whole-space soliton.
    pub fn radial_value(&self, profile: &ChargeProfile, x: &Vector3<f64>) -> Vector3<f64> {
        self.omega.cross(x) * radial_profile(profile, x.norm())
    }
}

/// Â_ω(k) = ω∧ϱ̂(k)/k² on every active mode, zero elsewhere.
pub fn soliton_a(omega: Vector3<f64>, model: &SystemModel) -> Result<Soliton> {
    if !omega.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument(format!("omega must be finite, got {omega:?}")));
    }
    let grid = model.grid();
    let mut field = FieldState::zeros(grid);
    for ((m, hk), a) in grid.modes().iter().zip(model.h()).zip(field.a.iter_mut()) {
        if m.active {
            *a = soliton_mode(&omega, &m.khat, *hk, m.knorm);
        }
    }
    Ok(Soliton { omega, field })
}

/// i (h/k²) (ω∧k̂); the dynamics builds its fixed point with this exact arithmetic.
pub(crate) fn soliton_mode(omega: &Vector3<f64>, khat: &Vector3<f64>, h: f64, knorm: f64) -> CVec3 {
    let q = omega.cross(khat) * (h / (knorm * knorm));
    cscale(&q, Complex64::new(0.0, 1.0))
}

/// a(r) with A_ω(x) = (ω∧x)·a(|x|), solving a'' + 4a'/r = −ρ with a → 0 at infinity.
pub fn radial_profile(profile: &ChargeProfile, r: f64) -> f64 {
    let r = r.abs();
    let big_r = profile.r_rho();
    if r >= big_r {
        return profile.moment(4) / (3.0 * r.powi(3));
    }
    let tail = profile.partial_moment(1, r, big_r) / 3.0;
    if r == 0.0 {
        return tail;
    }
    profile.partial_moment(4, 0.0, r) / (3.0 * r.powi(3)) + tail
}

/// Φ(x) = (1/4π)∫ρ(y)/|x−y| dy.
pub fn coulomb_phi(profile: &ChargeProfile, x: &Vector3<f64>) -> f64 {
    let r = x.norm();
    let big_r = profile.r_rho();
    if r >= big_r {
        return profile.charge() / (4.0 * PI * r);
    }
    let inner = if r > 0.0 {
        profile.partial_moment(2, 0.0, r) / r
    } else {
        0.0
    };
    inner + profile.partial_moment(1, r, big_r)
}

/// Spectral coefficients of the soliton's electric and magnetic fields.
#[derive(Debug, Clone)]
pub struct SolitonFields {
    pub e: Vec<CVec3>,
    pub b: Vec<CVec3>,
}

/// E_ω = −∇Φ and B_ω = curl A_ω; with ∂_j ↔ −ik_j, Ê = ik ρ̂/k² and B̂ = −ik∧Â.
pub fn soliton_eb(s: &Soliton, model: &SystemModel) -> SolitonFields {
    let grid = model.grid();
    let profile = model.profile();
    let mut e = vec![czero(); grid.len()];
    let mut b = vec![czero(); grid.len()];
    for (i, m) in grid.modes().iter().enumerate() {
        if !m.active {
            continue;
        }
        let phi_hat = profile.rho_hat(m.knorm) / (m.knorm * m.knorm);
        e[i] = cscale(&m.k, Complex64::new(0.0, phi_hat));
        b[i] = rcross(&m.k, &s.field.a[i]) * Complex64::new(0.0, -1.0);
    }
    SolitonFields { e, b }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValues {
    #[serde(rename = "H")]
    pub h: f64,
    pub pi: [f64; 3],
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

/// H = ½∫(|Π|² + |curl A|²) + ½I|ω|².
pub fn hamiltonian(state: &SystemState, model: &SystemModel) -> f64 {
    let grid = model.grid();
    let field = crate::field::parseval(
        grid,
        grid.modes()
            .iter()
            .zip(state.field.a.iter().zip(&state.field.pi))
            .map(|(m, (a, p))| cnorm_sqr(p) + cnorm_sqr(&rcross(&m.k, a))),
    );
    0.5 * field + 0.5 * model.inertia() * state.omega.norm_squared()
}

/// π = Iω + ⟨ϱ∧A⟩.
pub fn pi_invariant(state: &SystemState, model: &SystemModel) -> Vector3<f64> {
    state.omega * model.inertia() + model.brackets(&state.field).rho_a
}

/// Λ = H(Y) − |ω_ref||π(Y)|.
pub fn lyapunov(omega_ref: &Vector3<f64>, state: &SystemState, model: &SystemModel) -> f64 {
    hamiltonian(state, model) - omega_ref.norm() * pi_invariant(state, model).norm()
}

pub fn functionals(omega_ref: &Vector3<f64>, state: &SystemState, model: &SystemModel) -> FunctionalValues {
    let h = hamiltonian(state, model);
    let pi = pi_invariant(state, model);
    FunctionalValues {
        h,
        pi: [pi[0], pi[1], pi[2]],
        lambda: h - omega_ref.norm() * pi.norm(),
    }
}

/// Phase-space perturbation δY = (δA, δΠ, δω).
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub field: FieldState,
    pub omega: Vector3<f64>,
}

impl Perturbation {
    pub fn norm(&self, model: &SystemModel) -> f64 {
        (self.field.grad_a_norm_sqr(model.grid())
            + self.field.pi_norm_sqr(model.grid())
            + self.omega.norm_squared())
        .sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            field: self.field.scaled(s),
            omega: self.omega * s,
        }
    }

    /// Seeded transverse perturbation rescaled to the given phase-space norm.
    pub fn random(model: &SystemModel, k0: f64, seed: u64, norm: f64) -> Self {
        let field = FieldState::random_transverse(model.grid(), k0, seed);
        let omega = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0))
        };
        let raw = Self { field, omega };
        let n = raw.norm(model);
        raw.scaled(norm / n)
    }
}

/// Λ_ω(S_ω + δY) − Λ_ω(S_ω).
pub fn stability_gap(omega: Vector3<f64>, dy: &Perturbation, model: &SystemModel) -> Result<f64> {
    let s = soliton_a(omega, model)?;
    let base = s.state();
    let size = dy.norm(model);
    let limit = 0.1 * base.norm(model.grid());
    if size > limit {
        return Err(Error::InvalidArgument(format!(
            "perturbation norm {size:.3e} exceeds 0.1 of the soliton norm ({limit:.3e})"
        )));
    }
    let moved = SystemState::new(base.field.plus(&dy.field), base.omega + dy.omega);
    Ok(lyapunov(&omega, &moved, model) - lyapunov(&omega, &base, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use approx::assert_relative_eq;

    fn model() -> SystemModel {
        let p = ChargeProfile::smooth_bump(1.0, 1.0, 1.0).unwrap();
        SystemModel::new(&p, SpectralGrid::new(32, 8.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_omega_gives_zero_field() {
        let s = soliton_a(Vector3::zeros(), &model()).unwrap();
        assert!(s.field.a.iter().all(|z| cnorm_sqr(z) == 0.0));
    }

    #[test]
    fn soliton_is_transverse() {
        let m = model();
        let s = soliton_a(Vector3::new(0.3, -0.2, 1.0), &m).unwrap();
        assert!(s.field.max_divergence(m.grid()) < 1e-16);
        assert!(s.field.hermitian_defect(m.grid()) == 0.0);
    }

    #[test]
    fn radial_profile_ball_closed_form() {
        let p = ChargeProfile::uniform_ball(1.0, 1.0, 1.0).unwrap();
        let rho0 = 3.0 / (4.0 * PI);
        for r in [0.0, 0.3, 0.9] {
            let expected = rho0 / 15.0 + rho0 * (1.0 - r * r) / 10.0;
            assert_relative_eq!(radial_profile(&p, r), expected, max_relative = 1e-13);
        }
        assert_relative_eq!(radial_profile(&p, 2.0), rho0 / 5.0 / 24.0, max_relative = 1e-13);
    }

    #[test]
    fn coulomb_examples() {
        let p = ChargeProfile::uniform_ball(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(coulomb_phi(&p, &Vector3::new(0.0, 2.0, 0.0)), 1.0 / (8.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(coulomb_phi(&p, &Vector3::zeros()), 3.0 / (8.0 * PI), max_relative = 1e-14);
        let x = Vector3::new(0.3, 0.4, 0.0);
        assert_relative_eq!(coulomb_phi(&p, &x), (3.0 - 0.25) / (8.0 * PI), max_relative = 1e-13);
    }

    #[test]
    fn vacuum_energy_and_pi() {
        let p = ChargeProfile::uniform_ball(1.0, 1.0, 1.0).unwrap();
        let m = SystemModel::new_coarse(&p, SpectralGrid::new(16, 8.0).unwrap()).unwrap();
        let y = SystemState::vacuum(m.grid(), Vector3::new(0.0, 0.0, 2.0));
        assert_relative_eq!(hamiltonian(&y, &m), 0.8, max_relative = 1e-14);
        assert_relative_eq!(pi_invariant(&y, &m), Vector3::new(0.0, 0.0, 0.8), max_relative = 1e-15);
        assert_eq!(lyapunov(&Vector3::zeros(), &y, &m), hamiltonian(&y, &m));
    }

    #[test]
    fn gap_zero_for_zero_perturbation() {
        let m = model();
        let dy = Perturbation {
            field: FieldState::zeros(m.grid()),
            omega: Vector3::zeros(),
        };
        assert_eq!(stability_gap(Vector3::new(0.0, 0.0, 1.0), &dy, &m).unwrap(), 0.0);
    }

    #[test]
    fn gap_rejects_large_perturbation() {
        let m = model();
        let dy = Perturbation::random(&m, 3.0, 1, 10.0);
        assert!(stability_gap(Vector3::new(0.0, 0.0, 1.0), &dy, &m).is_err());
    }
}
