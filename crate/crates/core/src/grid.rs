//! Periodic box, half-spectrum mode bookkeeping and transforms to physical space.
//!
//! Coefficients are stored for `iz ∈ [0, N/2)` only; the remaining half follows
//! from `X̂(−k) = conj X̂(k)`. In the `iz = 0` plane both `k` and `−k` are stored
//! explicitly and must be kept conjugate. Modes on the Nyquist planes and the
//! zero mode are inactive and held at zero.
//!
//! With `f̂(k) = ∫ e^{ik·x} f dx`, the periodic field is
//! `f(x) = L^{-3} Σ_k f̂_k e^{-ik·x}` and `∫_box f g = L^{-3} Σ_k conj(f̂_k) ĝ_k`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::charge::ChargeProfile;
use crate::error::{Error, Result};

/// Minimum number of grid cells across the support diameter 2·R_rho.
pub const MIN_CELLS_ACROSS_SUPPORT: f64 = 8.0;

#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub k: Vector3<f64>,
    pub knorm: f64,
    pub khat: Vector3<f64>,
    /// Parseval multiplicity: 1 on the iz = 0 plane, 2 elsewhere.
    pub weight: f64,
    pub active: bool,
    pub ix: usize,
    pub iy: usize,
    pub iz: usize,
}

#[derive(Clone)]
pub struct SpectralGrid {
    n: usize,
    l: f64,
    modes: Vec<Mode>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("n", &self.n).field("l", &self.l).finish()
    }
}

impl SpectralGrid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N must be even and at least 8, got {n}")));
        }
        if n > 1024 {
            return Err(Error::InvalidGrid(format!("N = {n} exceeds the supported maximum 1024")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {l}")));
        }
        let dk = 2.0 * PI / l;
        let half = n / 2;
        let signed = |i: usize| if i < half { i as f64 } else { i as f64 - n as f64 };
        let mut modes = Vec::with_capacity(n * n * half);
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..half {
                    let k = Vector3::new(signed(ix), signed(iy), iz as f64) * dk;
                    let knorm = k.norm();
                    let active = knorm > 0.0 && ix != half && iy != half;
                    modes.push(Mode {
                        k,
                        knorm,
                        khat: if knorm > 0.0 { k / knorm } else { Vector3::zeros() },
                        weight: if iz == 0 { 1.0 } else { 2.0 },
                        active,
                        ix,
                        iy,
                        iz,
                    });
                }
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            l,
            modes,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// Checks the box against a charge profile: at least 8 cells across the
    /// support and L > 4·R_rho.
    pub fn check_resolves(&self, profile: &ChargeProfile) -> Result<()> {
        let cells = 2.0 * profile.r_rho() / self.spacing();
        if cells < MIN_CELLS_ACROSS_SUPPORT {
            return Err(Error::UnderResolved {
                cells,
                needed: MIN_CELLS_ACROSS_SUPPORT,
            });
        }
        if self.l <= 4.0 * profile.r_rho() {
            return Err(Error::InvalidGrid(format!(
                "box length {} must exceed 4*R_rho = {}",
                self.l,
                4.0 * profile.r_rho()
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.l.powi(3)
    }

    /// Largest |k| on the grid, √3·πN/L.
    pub fn k_max(&self) -> f64 {
        3f64.sqrt() * PI * self.n as f64 / self.l
    }

    /// Number of stored (half-spectrum) modes.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Half-spectrum index of (ix, iy, iz) with iz < N/2.
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * (self.n / 2) + iz
    }

    /// Index of the mode −k for a stored mode on the iz = 0 plane.
    pub fn mirror(&self, idx: usize) -> usize {
        let m = &self.modes[idx];
        debug_assert_eq!(m.iz, 0);
        let neg = |i: usize| (self.n - i) % self.n;
        self.index(neg(m.ix), neg(m.iy), 0)
    }

    /// Physical grid point x_m = −L/2 + m·h.
    pub fn point(&self, mx: usize, my: usize, mz: usize) -> Vector3<f64> {
        let h = self.spacing();
        Vector3::new(mx as f64, my as f64, mz as f64) * h - Vector3::repeat(0.5 * self.l)
    }

    /// Index into a full N³ real-space array.
    pub fn real_index(&self, mx: usize, my: usize, mz: usize) -> usize {
        (mx * self.n + my) * self.n + mz
    }

    /// Samples the field with coefficients `coeffs` on the physical grid.
    pub fn to_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let mut full = vec![Complex64::new(0.0, 0.0); n * n * n];
        for (m, c) in self.modes.iter().zip(coeffs) {
            if !m.active {
                continue;
            }
            let sign = if (m.ix + m.iy + m.iz) % 2 == 0 { 1.0 } else { -1.0 };
            full[(m.ix * n + m.iy) * n + m.iz] = c * sign;
            if m.iz > 0 {
                let (jx, jy) = ((n - m.ix) % n, (n - m.iy) % n);
                full[(jx * n + jy) * n + (n - m.iz)] = c.conj() * sign;
            }
        }
        self.transform(&mut full, &self.forward);
        let scale = 1.0 / self.volume();
        full.iter().map(|c| c.re * scale).collect()
    }

    /// Coefficients of a real field sampled on the physical grid; inactive modes are zeroed.
    pub fn from_real(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let mut full: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut full, &self.inverse);
        let cell = self.spacing().powi(3);
        self.modes
            .iter()
            .map(|m| {
                if !m.active {
                    return Complex64::new(0.0, 0.0);
                }
                let sign = if (m.ix + m.iy + m.iz) % 2 == 0 { cell } else { -cell };
                full[(m.ix * n + m.iy) * n + m.iz] * sign
            })
            .collect()
    }

    /// Direct Fourier sum at an arbitrary point.
    pub fn eval_point(&self, coeffs: &[Complex64], x: &Vector3<f64>) -> f64 {
        let sum: f64 = self
            .modes
            .iter()
            .zip(coeffs)
            .filter(|(m, _)| m.active)
            .map(|(m, c)| {
                let phase = Complex64::from_polar(1.0, -m.k.dot(x));
                m.weight * (c * phase).re
            })
            .sum();
        sum / self.volume()
    }

    /// Unnormalized 3D DFT in place over a full N³ array.
    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        fft.process(data);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for ix in 0..n {
            for iz in 0..n {
                for iy in 0..n {
                    line[iy] = data[(ix * n + iy) * n + iz];
                }
                fft.process(&mut line);
                for iy in 0..n {
                    data[(ix * n + iy) * n + iz] = line[iy];
                }
            }
        }
        for iy in 0..n {
            for iz in 0..n {
                for ix in 0..n {
                    line[ix] = data[(ix * n + iy) * n + iz];
                }
                fft.process(&mut line);
                for ix in 0..n {
                    data[(ix * n + iy) * n + iz] = line[ix];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpectralGrid::new(7, 1.0).is_err());
        assert!(SpectralGrid::new(16, 0.0).is_err());
        let g = SpectralGrid::new(16, 24.0).unwrap();
        let p = ChargeProfile::uniform_ball(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(g.check_resolves(&p), Err(Error::UnderResolved { .. })));
        let g = SpectralGrid::new(96, 24.0).unwrap();
        assert!(g.check_resolves(&p).is_ok());
        let g = SpectralGrid::new(32, 4.0).unwrap();
        assert!(g.check_resolves(&p).is_err());
    }

    #[test]
    fn mode_layout() {
        let g = SpectralGrid::new(8, 2.0 * PI).unwrap();
        assert_eq!(g.len(), 8 * 8 * 4);
        let i = g.index(7, 1, 3);
        let m = g.modes()[i];
        assert_eq!((m.ix, m.iy, m.iz), (7, 1, 3));
        assert_eq!(m.k, Vector3::new(-1.0, 1.0, 3.0));
        assert_eq!(m.weight, 2.0);
        assert!(!g.modes()[0].active);
        assert!(!g.modes()[g.index(4, 0, 1)].active);
        let j = g.index(2, 7, 0);
        assert_eq!(g.modes()[g.mirror(j)].k, -g.modes()[j].k);
    }

    #[test]
    fn plane_wave_round_trip() {
        let g = SpectralGrid::new(16, 5.0).unwrap();
        let k = 2.0 * PI / 5.0 * Vector3::new(1.0, -2.0, 3.0);
        let values: Vec<f64> = (0..16)
            .flat_map(|a| (0..16).flat_map(move |b| (0..16).map(move |c| (a, b, c))))
            .map(|(a, b, c)| (k.dot(&g.point(a, b, c)) + 0.3).cos())
            .collect();
        let coeffs = g.from_real(&values);
        let back = g.to_real(&coeffs);
        for (u, v) in values.iter().zip(&back) {
            assert!((u - v).abs() < 1e-12);
        }
        let x = Vector3::new(0.37, -1.1, 2.2);
        assert_relative_eq!(g.eval_point(&coeffs, &x), (k.dot(&x) + 0.3).cos(), epsilon = 1e-12);
    }

    #[test]
    fn coefficient_normalization_matches_continuum_transform() {
        // A narrow Gaussian: f̂(0) = ∫ f dx = (2π s²)^{3/2}.
        let g = SpectralGrid::new(32, 16.0).unwrap();
        let s: f64 = 1.0;
        let mut values = vec![0.0; 32 * 32 * 32];
        for a in 0..32 {
            for b in 0..32 {
                for c in 0..32 {
                    let x = g.point(a, b, c);
                    values[g.real_index(a, b, c)] = (-x.norm_squared() / (2.0 * s * s)).exp();
                }
            }
        }
        let coeffs = g.from_real(&values);
        let i = g.index(1, 0, 0);
        let k = g.modes()[i].knorm;
        let expected = (2.0 * PI * s * s).powf(1.5) * (-k * k * s * s / 2.0).exp();
        assert_relative_eq!(coeffs[i].re, expected, max_relative = 1e-10);
        assert!(coeffs[i].im.abs() < 1e-12);
    }
}
