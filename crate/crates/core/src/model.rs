//! A charge profile bound to a spectral grid: per-mode coupling amplitudes and
//! the lattice-consistent spectral constants.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::charge::{ChargeProfile, SpectralProfile};
use crate::error::Result;
use crate::field::{im_part, CVec3, FieldState};
use crate::grid::SpectralGrid;

/// ⟨Π∧ϱ⟩ and ⟨ϱ∧A⟩ for a field state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Brackets {
    pub pi_rho: Vector3<f64>,
    pub rho_a: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct SystemModel {
    grid: SpectralGrid,
    spectral: SpectralProfile,
    /// h(|k|) per stored mode, zero on inactive modes.
    h: Vec<f64>,
    kappa0_grid: f64,
    warnings: Vec<String>,
}

impl SystemModel {
    /// Binds a profile to a grid that resolves its support.
    pub fn new(profile: &ChargeProfile, grid: SpectralGrid) -> Result<Self> {
        grid.check_resolves(profile)?;
        Self::build(profile, grid, Vec::new())
    }

    /// Like [`SystemModel::new`] but accepts grids with fewer than the
    /// recommended cells across the support, recording a warning instead.
    pub fn new_coarse(profile: &ChargeProfile, grid: SpectralGrid) -> Result<Self> {
        let warnings = match grid.check_resolves(profile) {
            Ok(()) => Vec::new(),
            Err(e) => vec![e.to_string()],
        };
        Self::build(profile, grid, warnings)
    }

    fn build(profile: &ChargeProfile, grid: SpectralGrid, warnings: Vec<String>) -> Result<Self> {
        let spectral = profile.spectral()?;
        let h: Vec<f64> = grid
            .modes()
            .iter()
            .map(|m| if m.active { profile.h(m.knorm) } else { 0.0 })
            .collect();
        let kappa0_grid = crate::field::parseval(
            &grid,
            grid.modes()
                .iter()
                .zip(&h)
                .map(|(m, hk)| if m.active { hk * hk / (m.knorm * m.knorm) } else { 0.0 }),
        );
        Ok(Self {
            grid,
            spectral,
            h,
            kappa0_grid,
            warnings,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn profile(&self) -> &ChargeProfile {
        &self.spectral.profile
    }

    pub fn spectral(&self) -> &SpectralProfile {
        &self.spectral
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Bare moment of inertia I.
    pub fn inertia(&self) -> f64 {
        self.spectral.i_bare
    }

    /// κ₀ restricted to the active lattice modes.
    pub fn kappa0_grid(&self) -> f64 {
        self.kappa0_grid
    }

    /// I + (2/3)κ₀ with the lattice κ₀; the value the discrete dynamics conserves.
    pub fn i_eff_grid(&self) -> f64 {
        self.spectral.i_bare + 2.0 / 3.0 * self.kappa0_grid
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Modes per ix-plane; the unit of deterministic parallel reduction.
    pub fn plane(&self) -> usize {
        self.grid.n() * self.grid.n() / 2
    }

    /// Parseval sums for ⟨Π∧ϱ⟩ and ⟨ϱ∧A⟩, reduced plane by plane in fixed order.
    pub fn brackets(&self, field: &FieldState) -> Brackets {
        let plane = self.plane();
        let modes = self.grid.modes();
        let partials: Vec<(Vector3<f64>, Vector3<f64>)> = (0..self.grid.n())
            .into_par_iter()
            .map(|p| {
                let range = p * plane..(p + 1) * plane;
                bracket_partial(&modes[range.clone()], &self.h[range.clone()], &field.a[range.clone()], &field.pi[range])
            })
            .collect();
        let (pi_rho, rho_a) = partials
            .iter()
            .fold((Vector3::zeros(), Vector3::zeros()), |(p, a), (dp, da)| (p + dp, a + da));
        let vol = self.grid.volume();
        Brackets {
            pi_rho: pi_rho / vol,
            rho_a: rho_a / vol,
        }
    }
}

/// Unnormalized plane contribution: Σ w h Im(Π)∧k̂ and Σ w h k̂∧Im(A).
pub(crate) fn bracket_partial(
    modes: &[crate::grid::Mode],
    h: &[f64],
    a: &[CVec3],
    pi: &[CVec3],
) -> (Vector3<f64>, Vector3<f64>) {
    let mut p = Vector3::zeros();
    let mut q = Vector3::zeros();
    for (((m, hk), za), zp) in modes.iter().zip(h).zip(a).zip(pi) {
        if !m.active {
            continue;
        }
        let wh = m.weight * hk;
        p += im_part(zp).cross(&m.khat) * wh;
        q += m.khat.cross(&im_part(za)) * wh;
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn strict_and_coarse_constructors() {
        let p = ChargeProfile::uniform_ball(1.0, 1.0, 1.0).unwrap();
        let g = SpectralGrid::new(48, 24.0).unwrap();
        assert!(SystemModel::new(&p, g.clone()).is_err());
        let m = SystemModel::new_coarse(&p, g).unwrap();
        assert_eq!(m.warnings().len(), 1);
    }

    #[test]
    fn lattice_kappa0_approaches_continuum() {
        let p = ChargeProfile::smooth_bump(1.0, 1.0, 1.0).unwrap();
        let coarse = SystemModel::new(&p, SpectralGrid::new(32, 8.0).unwrap()).unwrap();
        let fine = SystemModel::new(&p, SpectralGrid::new(64, 16.0).unwrap()).unwrap();
        let exact = coarse.spectral().kappa0;
        let e1 = (coarse.kappa0_grid() - exact).abs();
        let e2 = (fine.kappa0_grid() - exact).abs();
        assert!(e2 < e1);
        assert_relative_eq!(fine.kappa0_grid(), exact, max_relative = 1e-3);
    }

    #[test]
    fn brackets_vanish_on_zero_field() {
        let p = ChargeProfile::smooth_bump(1.0, 1.0, 1.0).unwrap();
        let m = SystemModel::new(&p, SpectralGrid::new(32, 6.0).unwrap()).unwrap();
        let b = m.brackets(&FieldState::zeros(m.grid()));
        assert_eq!(b.pi_rho, Vector3::zeros());
        assert_eq!(b.rho_a, Vector3::zeros());
    }
}
