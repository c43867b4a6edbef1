//! Transverse field states on the half spectrum and the full phase point (A, Π, ω).

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::grid::SpectralGrid;

pub type CVec3 = Vector3<Complex64>;

pub fn czero() -> CVec3 {
    Vector3::from_element(Complex64::new(0.0, 0.0))
}

/// Real 3-vector `v` times a complex scalar.
pub fn cscale(v: &Vector3<f64>, c: Complex64) -> CVec3 {
    v.map(|x| c * x)
}

/// `k̂ · z` for complex z.
pub fn rdot(k: &Vector3<f64>, z: &CVec3) -> Complex64 {
    z[0] * k[0] + z[1] * k[1] + z[2] * k[2]
}

/// `k ∧ z` for real k and complex z.
pub fn rcross(k: &Vector3<f64>, z: &CVec3) -> CVec3 {
    Vector3::new(
        z[2] * k[1] - z[1] * k[2],
        z[0] * k[2] - z[2] * k[0],
        z[1] * k[0] - z[0] * k[1],
    )
}

pub fn cnorm_sqr(z: &CVec3) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

pub(crate) fn im_part(z: &CVec3) -> Vector3<f64> {
    z.map(|c| c.im)
}

/// Fourier coefficients of (A, Π) on the stored half spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub a: Vec<CVec3>,
    pub pi: Vec<CVec3>,
}

impl FieldState {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            a: vec![czero(); grid.len()],
            pi: vec![czero(); grid.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Removes the component along k̂ from every mode; zeroes inactive modes.
    pub fn transverse_project(&self, grid: &SpectralGrid) -> Self {
        let project = |v: &Vec<CVec3>| -> Vec<CVec3> {
            grid.modes()
                .iter()
                .zip(v)
                .map(|(m, z)| {
                    if m.active {
                        z - cscale(&m.khat, rdot(&m.khat, z))
                    } else {
                        czero()
                    }
                })
                .collect()
        };
        Self {
            a: project(&self.a),
            pi: project(&self.pi),
        }
    }

    /// max over modes of |k̂·Â| + |k̂·Π̂|.
    pub fn max_divergence(&self, grid: &SpectralGrid) -> f64 {
        grid.modes()
            .iter()
            .zip(self.a.iter().zip(&self.pi))
            .filter(|(m, _)| m.active)
            .map(|(m, (a, p))| rdot(&m.khat, a).norm() + rdot(&m.khat, p).norm())
            .fold(0.0, f64::max)
    }

    /// max over the iz = 0 plane of |X̂(−k) − conj X̂(k)|.
    pub fn hermitian_defect(&self, grid: &SpectralGrid) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, m) in grid.modes().iter().enumerate() {
            if m.iz != 0 || !m.active {
                continue;
            }
            let j = grid.mirror(i);
            for v in [&self.a, &self.pi] {
                let d = v[j] - v[i].map(|c| c.conj());
                worst = worst.max(cnorm_sqr(&d).sqrt());
            }
        }
        worst
    }

    /// Makes the iz = 0 plane exactly Hermitian by averaging each ±k pair.
    pub fn symmetrize(&mut self, grid: &SpectralGrid) {
        for i in 0..grid.len() {
            let m = grid.modes()[i];
            if m.iz != 0 || !m.active {
                continue;
            }
            let j = grid.mirror(i);
            if j <= i {
                continue;
            }
            for v in [&mut self.a, &mut self.pi] {
                let avg = (v[i] + v[j].map(|c| c.conj())) * Complex64::new(0.5, 0.0);
                v[i] = avg;
                v[j] = avg.map(|c| c.conj());
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let f = |v: &Vec<CVec3>| v.iter().map(|z| z * Complex64::new(s, 0.0)).collect();
        Self {
            a: f(&self.a),
            pi: f(&self.pi),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let f = |u: &Vec<CVec3>, v: &Vec<CVec3>| u.iter().zip(v).map(|(x, y)| x + y).collect();
        Self {
            a: f(&self.a, &other.a),
            pi: f(&self.pi, &other.pi),
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        let f = |u: &Vec<CVec3>, v: &Vec<CVec3>| u.iter().zip(v).map(|(x, y)| x - y).collect();
        Self {
            a: f(&self.a, &other.a),
            pi: f(&self.pi, &other.pi),
        }
    }

    /// Squared Ḣ¹ norm of A: ∫|∇A|² = L^{-3} Σ k²|Â|².
    pub fn grad_a_norm_sqr(&self, grid: &SpectralGrid) -> f64 {
        parseval(grid, self.a.iter().zip(grid.modes()).map(|(z, m)| m.knorm * m.knorm * cnorm_sqr(z)))
    }

    /// Squared L² norm of Π.
    pub fn pi_norm_sqr(&self, grid: &SpectralGrid) -> f64 {
        parseval(grid, self.pi.iter().map(cnorm_sqr))
    }

    /// (‖∇A‖² + ‖Π‖²)^{1/2}, the field part of the phase-space norm.
    pub fn energy_norm(&self, grid: &SpectralGrid) -> f64 {
        (self.grad_a_norm_sqr(grid) + self.pi_norm_sqr(grid)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.a
            .iter()
            .chain(&self.pi)
            .all(|z| z.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    /// Seeded random transverse field with spectral envelope exp(−k²/k₀²).
    /// Π and A are drawn independently; the result is Hermitian and transverse.
    pub fn random_transverse(grid: &SpectralGrid, k0: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> CVec3 {
            Vector3::from_fn(|_, _| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            })
        };
        let mut state = Self::zeros(grid);
        for (i, m) in grid.modes().iter().enumerate() {
            let (za, zp) = (draw(&mut rng), draw(&mut rng));
            if !m.active {
                continue;
            }
            let env = (-(m.knorm * m.knorm) / (k0 * k0)).exp();
            // A is scaled by 1/|k| so both parts carry comparable energy.
            state.a[i] = za * Complex64::new(env / m.knorm, 0.0);
            state.pi[i] = zp * Complex64::new(env, 0.0);
        }
        state.symmetrize(grid);
        state.transverse_project(grid)
    }

    /// Transverse coefficients of real fields (A, Π) = f(x) sampled at the grid points.
    pub fn sample<F>(grid: &SpectralGrid, f: F) -> Self
    where
        F: Fn(&Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) + Sync,
    {
        let n = grid.n();
        let rows: Vec<Vec<[f64; 6]>> = (0..n)
            .into_par_iter()
            .map(|mx| {
                let mut row = Vec::with_capacity(n * n);
                for my in 0..n {
                    for mz in 0..n {
                        let (a, p) = f(&grid.point(mx, my, mz));
                        row.push([a[0], a[1], a[2], p[0], p[1], p[2]]);
                    }
                }
                row
            })
            .collect();
        let flat: Vec<[f64; 6]> = rows.into_iter().flatten().collect();
        let coeffs: Vec<Vec<Complex64>> = (0..6)
            .into_par_iter()
            .map(|c| grid.from_real(&flat.iter().map(|v| v[c]).collect::<Vec<_>>()))
            .collect();
        let mut state = Self::zeros(grid);
        for (i, (a, pi)) in state.a.iter_mut().zip(state.pi.iter_mut()).enumerate() {
            *a = Vector3::new(coeffs[0][i], coeffs[1][i], coeffs[2][i]);
            *pi = Vector3::new(coeffs[3][i], coeffs[4][i], coeffs[5][i]);
        }
        state.symmetrize(grid);
        state.transverse_project(grid)
    }

    /// Real-space samples of the six components (A_x, A_y, A_z, Π_x, Π_y, Π_z).
    pub fn to_real(&self, grid: &SpectralGrid) -> Vec<Vec<f64>> {
        (0..6)
            .into_par_iter()
            .map(|c| {
                let src = if c < 3 { &self.a } else { &self.pi };
                grid.to_real(&src.iter().map(|z| z[c % 3]).collect::<Vec<_>>())
            })
            .collect()
    }
}

/// L^{-3} Σ w · value over the half spectrum, reduced per ix-plane in fixed order.
pub fn parseval<I: Iterator<Item = f64>>(grid: &SpectralGrid, values: I) -> f64 {
    let plane = grid.n() * grid.n() / 2;
    let mut total = 0.0;
    let mut partial = 0.0;
    for (i, (v, m)) in values.zip(grid.modes()).enumerate() {
        if m.active {
            partial += m.weight * v;
        }
        if (i + 1) % plane == 0 {
            total += partial;
            partial = 0.0;
        }
    }
    (total + partial) / grid.volume()
}

/// Phase point Y = (A, Π, ω) at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub field: FieldState,
    pub omega: Vector3<f64>,
    pub t: f64,
}

impl SystemState {
    pub fn new(field: FieldState, omega: Vector3<f64>) -> Self {
        Self { field, omega, t: 0.0 }
    }

    pub fn vacuum(grid: &SpectralGrid, omega: Vector3<f64>) -> Self {
        Self::new(FieldState::zeros(grid), omega)
    }

    /// Phase-space norm (‖∇A‖² + ‖Π‖² + |ω|²)^{1/2}.
    pub fn norm(&self, grid: &SpectralGrid) -> f64 {
        (self.field.grad_a_norm_sqr(grid) + self.field.pi_norm_sqr(grid) + self.omega.norm_squared()).sqrt()
    }
}
