//! Time integration of the coupled field–rotor system on the periodic grid,
//! plus local seminorm diagnostics.
//!
//! The Strang scheme alternates an RK4 half step of the rotor with the field
//! frozen, an exact rotation of every field mode as a driven oscillator with
//! ω frozen, and a second rotor half step. Soliton states are fixed points of
//! both substeps, so they are preserved up to round-off.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{czero, rcross, CVec3, FieldState, SystemState};
use crate::grid::SpectralGrid;
use crate::model::{bracket_partial, Brackets, SystemModel};
use crate::soliton::{hamiltonian, pi_invariant, soliton_a, soliton_mode, Soliton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Strang,
    Rk4Monolithic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
}

fn default_scheme() -> Scheme {
    Scheme::Strang
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64, scheme: Scheme) -> Self {
        Self { dt, t_max, scheme }
    }

    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be non-negative, got {}", self.t_max)));
        }
        if self.scheme == Scheme::Rk4Monolithic && self.dt * grid.k_max() >= 2.0 {
            return Err(Error::InvalidArgument(format!(
                "rk4-monolithic needs dt*k_max < 2, got {:.3}",
                self.dt * grid.k_max()
            )));
        }
        Ok(())
    }

    /// Number of steps to reach t_max.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// Radiation launched at the charge re-enters B_R after (L − 2R)/2.
pub fn wrap_cap(model: &SystemModel) -> f64 {
    0.5 * (model.grid().l() - 2.0 * model.profile().r_rho())
}

/// ω̇ = [⟨Π∧ϱ⟩ − ω∧⟨A∧ϱ⟩]/I.
pub fn rhs_omega(state: &SystemState, model: &SystemModel) -> Vector3<f64> {
    omega_rate(&state.omega, &model.brackets(&state.field), model.inertia())
}

fn omega_rate(omega: &Vector3<f64>, b: &Brackets, inertia: f64) -> Vector3<f64> {
    (b.pi_rho + omega.cross(&b.rho_a)) / inertia
}

fn omega_rk4(omega: Vector3<f64>, b: &Brackets, inertia: f64, tau: f64) -> Vector3<f64> {
    let k1 = omega_rate(&omega, b, inertia);
    let k2 = omega_rate(&(omega + k1 * (0.5 * tau)), b, inertia);
    let k3 = omega_rate(&(omega + k2 * (0.5 * tau)), b, inertia);
    let k4 = omega_rate(&(omega + k3 * tau), b, inertia);
    omega + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (tau / 6.0)
}

fn rs(z: &CVec3, s: f64) -> CVec3 {
    z.map(|c| c * s)
}

/// Owns a state and advances it with a fixed step.
#[derive(Debug, Clone)]
pub struct Stepper<'m> {
    model: &'m SystemModel,
    cfg: IntegratorConfig,
    state: SystemState,
    brackets: Brackets,
    steps_taken: usize,
    t0: f64,
    /// (cos k dt, sin(k dt)/k, k sin(k dt)) per mode.
    rotation: Vec<(f64, f64, f64)>,
}

impl<'m> Stepper<'m> {
    pub fn new(state: SystemState, cfg: IntegratorConfig, model: &'m SystemModel) -> Result<Self> {
        cfg.validate(model.grid())?;
        if state.field.len() != model.grid().len() {
            return Err(Error::InvalidArgument("state does not match the grid".into()));
        }
        let rotation = model
            .grid()
            .modes()
            .iter()
            .map(|m| {
                if !m.active {
                    return (1.0, 0.0, 0.0);
                }
                let (s, c) = (m.knorm * cfg.dt).sin_cos();
                (c, s / m.knorm, m.knorm * s)
            })
            .collect();
        let brackets = model.brackets(&state.field);
        let t0 = state.t;
        Ok(Self {
            model,
            cfg,
            state,
            brackets,
            steps_taken: 0,
            t0,
            rotation,
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn into_state(self) -> SystemState {
        self.state
    }

    pub fn brackets(&self) -> &Brackets {
        &self.brackets
    }

    /// ω̇ at the current state.
    pub fn omega_dot(&self) -> Vector3<f64> {
        omega_rate(&self.state.omega, &self.brackets, self.model.inertia())
    }

    pub fn step(&mut self) -> Result<()> {
        match self.cfg.scheme {
            Scheme::Strang => self.strang(),
            Scheme::Rk4Monolithic => self.rk4(),
        }
        self.steps_taken += 1;
        self.state.t = self.t0 + self.steps_taken as f64 * self.cfg.dt;
        let b = &self.brackets;
        let finite = self.state.omega.iter().chain(b.pi_rho.iter()).chain(b.rho_a.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite {
                what: "state",
                t: self.state.t,
            });
        }
        Ok(())
    }

    fn strang(&mut self) {
        let inertia = self.model.inertia();
        let half = 0.5 * self.cfg.dt;
        let omega = omega_rk4(self.state.omega, &self.brackets, inertia, half);
        self.brackets = self.rotate(omega);
        self.state.omega = omega_rk4(omega, &self.brackets, inertia, half);
    }

    /// Exact driven-oscillator update of every mode with ω fixed; returns the new brackets.
    fn rotate(&mut self, omega: Vector3<f64>) -> Brackets {
        let model = self.model;
        let plane = model.plane();
        let modes = model.grid().modes();
        let h = model.h();
        let rotation = &self.rotation;
        let field = &mut self.state.field;
        let partials: Vec<(Vector3<f64>, Vector3<f64>)> = field
            .a
            .par_chunks_mut(plane)
            .zip(field.pi.par_chunks_mut(plane))
            .enumerate()
            .map(|(p, (a, pi))| {
                let off = p * plane;
                for j in 0..a.len() {
                    let m = &modes[off + j];
                    if !m.active {
                        continue;
                    }
                    let (c, s_over_k, k_s) = rotation[off + j];
                    let iq = soliton_mode(&omega, &m.khat, h[off + j], m.knorm);
                    let u = a[j] - iq;
                    let new_a = iq + rs(&u, c) + rs(&pi[j], s_over_k);
                    let new_pi = rs(&pi[j], c) - rs(&u, k_s);
                    a[j] = new_a;
                    pi[j] = new_pi;
                }
                let range = off..off + a.len();
                bracket_partial(&modes[range.clone()], &h[range], a, pi)
            })
            .collect();
        let vol = model.grid().volume();
        let (p, q) = partials
            .iter()
            .fold((Vector3::zeros(), Vector3::zeros()), |(p, q), (dp, dq)| (p + dp, q + dq));
        Brackets {
            pi_rho: p / vol,
            rho_a: q / vol,
        }
    }

    fn rk4(&mut self) {
        let dt = self.cfg.dt;
        let y0 = (self.state.field.clone(), self.state.omega);
        let d1 = self.derivative(&y0.0, &y0.1);
        let y1 = axpy(&y0, &d1, 0.5 * dt);
        let d2 = self.derivative(&y1.0, &y1.1);
        let y2 = axpy(&y0, &d2, 0.5 * dt);
        let d3 = self.derivative(&y2.0, &y2.1);
        let y3 = axpy(&y0, &d3, dt);
        let d4 = self.derivative(&y3.0, &y3.1);
        let w = dt / 6.0;
        let combine = |x0: &[CVec3], a: &[CVec3], b: &[CVec3], c: &[CVec3], d: &[CVec3]| -> Vec<CVec3> {
            (0..x0.len())
                .map(|i| x0[i] + rs(&(a[i] + rs(&b[i], 2.0) + rs(&c[i], 2.0) + d[i]), w))
                .collect()
        };
        self.state.field.a = combine(&y0.0.a, &d1.0.a, &d2.0.a, &d3.0.a, &d4.0.a);
        self.state.field.pi = combine(&y0.0.pi, &d1.0.pi, &d2.0.pi, &d3.0.pi, &d4.0.pi);
        self.state.omega = y0.1 + (d1.1 + d2.1 * 2.0 + d3.1 * 2.0 + d4.1) * w;
        self.brackets = self.model.brackets(&self.state.field);
    }

    fn derivative(&self, field: &FieldState, omega: &Vector3<f64>) -> (FieldState, Vector3<f64>) {
        let modes = self.model.grid().modes();
        let h = self.model.h();
        let dpi = modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                if !m.active {
                    return czero();
                }
                let iq = soliton_mode(omega, &m.khat, h[i], m.knorm);
                rs(&(field.a[i] - iq), -m.knorm * m.knorm)
            })
            .collect();
        let b = self.model.brackets(field);
        (
            FieldState {
                a: field.pi.clone(),
                pi: dpi,
            },
            omega_rate(omega, &b, self.model.inertia()),
        )
    }
}

fn axpy(y: &(FieldState, Vector3<f64>), d: &(FieldState, Vector3<f64>), s: f64) -> (FieldState, Vector3<f64>) {
    let f = |u: &[CVec3], v: &[CVec3]| u.iter().zip(v).map(|(x, z)| x + rs(z, s)).collect();
    (
        FieldState {
            a: f(&y.0.a, &d.0.a),
            pi: f(&y.0.pi, &d.0.pi),
        },
        y.1 + d.1 * s,
    )
}

/// One step of the configured scheme.
pub fn step(state: &SystemState, cfg: &IntegratorConfig, model: &SystemModel) -> Result<SystemState> {
    let mut s = Stepper::new(state.clone(), *cfg, model)?;
    s.step()?;
    Ok(s.into_state())
}

/// Free wave evolution of each mode: A cos kt + Π sin(kt)/k, −kA sin kt + Π cos kt.
pub fn free_evolve(field: &FieldState, grid: &SpectralGrid, t: f64) -> FieldState {
    let mut out = FieldState::zeros(grid);
    for (i, m) in grid.modes().iter().enumerate() {
        if !m.active {
            continue;
        }
        let (s, c) = (m.knorm * t).sin_cos();
        out.a[i] = rs(&field.a[i], c) + rs(&field.pi[i], s / m.knorm);
        out.pi[i] = rs(&field.pi[i], c) - rs(&field.a[i], m.knorm * s);
    }
    out
}

/// Components of the local seminorm ‖∇A‖_R + ‖Π‖_R + |ω − ω_ref|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seminorm {
    pub radius: f64,
    pub grad_a: f64,
    pub pi: f64,
    pub omega: f64,
}

impl Seminorm {
    pub fn total(&self) -> f64 {
        self.grad_a + self.pi + self.omega
    }
}

/// Real-space sampling of ∇A and Π restricted to balls B_R.
pub struct LocalProbe<'m> {
    model: &'m SystemModel,
    radii: Vec<f64>,
    masks: Vec<Vec<usize>>,
    /// ∇A_{e_j} sampled on the grid: basis[j][comp] with comp = 3·i + d for ∂_d A_i.
    basis: Vec<Vec<Vec<f64>>>,
    /// Gram matrices ⟨∇A_{e_i}, ∇A_{e_j}⟩_R per radius.
    gram: Vec<[[f64; 3]; 3]>,
}

/// Per-radius inner products of a field with the soliton basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProducts {
    pub grad_a_sqr: f64,
    pub cross: [f64; 3],
    pub pi_sqr: f64,
}

impl<'m> LocalProbe<'m> {
    pub fn new(model: &'m SystemModel, radii: &[f64]) -> Result<Self> {
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidArgument(format!("seminorm radius must be positive, got {r}")));
        }
        let grid = model.grid();
        let n = grid.n();
        let masks: Vec<Vec<usize>> = radii
            .iter()
            .map(|&r| {
                let mut idx = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            if grid.point(a, b, c).norm() <= r {
                                idx.push(grid.real_index(a, b, c));
                            }
                        }
                    }
                }
                idx
            })
            .collect();
        let basis: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|j| {
                let s = soliton_a(Vector3::ith(j, 1.0), model)?;
                Ok(gradient_real(&s.field.a, grid))
            })
            .collect::<Result<_>>()?;
        let cell = grid.spacing().powi(3);
        let gram = masks
            .iter()
            .map(|mask| {
                let mut g = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        g[i][j] = cell * masked_dot(&basis[i], &basis[j], mask);
                    }
                }
                g
            })
            .collect();
        Ok(Self {
            model,
            radii: radii.to_vec(),
            masks,
            basis,
            gram,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn gram(&self) -> &[[[f64; 3]; 3]] {
        &self.gram
    }

    /// Seminorm of the state relative to the soliton S_{ω_ref}, and the basis products.
    pub fn measure(&self, state: &SystemState, omega_ref: &Vector3<f64>) -> (Vec<Seminorm>, Vec<LocalProducts>) {
        let grid = self.model.grid();
        let grad = gradient_real(&state.field.a, grid);
        let pi: Vec<Vec<f64>> = (0..3)
            .into_par_iter()
            .map(|c| {
                let comp: Vec<Complex64> = state.field.pi.iter().map(|z| z[c]).collect();
                grid.to_real(&comp)
            })
            .collect();
        let diff: Vec<Vec<f64>> = (0..9)
            .map(|c| {
                (0..grad[c].len())
                    .map(|i| {
                        grad[c][i]
                            - omega_ref[0] * self.basis[0][c][i]
                            - omega_ref[1] * self.basis[1][c][i]
                            - omega_ref[2] * self.basis[2][c][i]
                    })
                    .collect()
            })
            .collect();
        let cell = grid.spacing().powi(3);
        let domega = (state.omega - omega_ref).norm();
        let mut norms = Vec::with_capacity(self.radii.len());
        let mut products = Vec::with_capacity(self.radii.len());
        for (r, mask) in self.radii.iter().zip(&self.masks) {
            let grad_sqr = cell * masked_dot(&diff, &diff, mask);
            let pi_sqr = cell * masked_dot(&pi, &pi, mask);
            norms.push(Seminorm {
                radius: *r,
                grad_a: grad_sqr.sqrt(),
                pi: pi_sqr.sqrt(),
                omega: domega,
            });
            products.push(LocalProducts {
                grad_a_sqr: cell * masked_dot(&grad, &grad, mask),
                cross: [0, 1, 2].map(|j| cell * masked_dot(&grad, &self.basis[j], mask)),
                pi_sqr,
            });
        }
        (norms, products)
    }
}

/// ‖Y − S_{ω₊}‖_R from stored basis products, for a limit ω₊ chosen after the run.
pub fn seminorm_from_products(
    products: &LocalProducts,
    gram: &[[f64; 3]; 3],
    omega: &Vector3<f64>,
    omega_plus: &Vector3<f64>,
) -> f64 {
    let w = omega_plus;
    let mut sq = products.grad_a_sqr;
    for i in 0..3 {
        sq -= 2.0 * w[i] * products.cross[i];
        for j in 0..3 {
            sq += w[i] * w[j] * gram[i][j];
        }
    }
    sq.max(0.0).sqrt() + products.pi_sqr.sqrt() + (omega - omega_plus).norm()
}

fn masked_dot(u: &[Vec<f64>], v: &[Vec<f64>], mask: &[usize]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| mask.iter().map(|&i| a[i] * b[i]).sum::<f64>())
        .sum()
}

/// ∂_d A_i on the physical grid, ordered as comp = 3·i + d.
fn gradient_real(a: &[CVec3], grid: &SpectralGrid) -> Vec<Vec<f64>> {
    (0..9)
        .into_par_iter()
        .map(|comp| {
            let (i, d) = (comp / 3, comp % 3);
            let coeffs: Vec<Complex64> = grid
                .modes()
                .iter()
                .zip(a)
                .map(|(m, z)| z[i] * Complex64::new(0.0, -m.k[d]))
                .collect();
            grid.to_real(&coeffs)
        })
        .collect()
}

/// ‖Y − S_{ω_ref}‖_R for a single radius.
pub fn local_seminorm(state: &SystemState, reference: &Soliton, radius: f64, model: &SystemModel) -> Result<Seminorm> {
    let probe = LocalProbe::new(model, &[radius])?;
    Ok(probe.measure(state, &reference.omega).0[0])
}

/// One sampled row of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub omega: [f64; 3],
    pub omega_dot_norm: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub pi_norm: f64,
    pub omega_tilde: [f64; 3],
    /// ‖Y − S_{ω̃(t)}‖_R per configured radius.
    pub dist: Vec<f64>,
    pub local: Vec<LocalProducts>,
    /// H and |π| of the state minus the free evolution of its initial field.
    pub h_ret: f64,
    pub pi_ret_norm: f64,
    /// f = ⟨Π_K∧ϱ⟩ + ω∧⟨ϱ∧A_K⟩ for the freely evolved initial field.
    pub f: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub radii: Vec<f64>,
    pub samples: Vec<Sample>,
    pub gram: Vec<[[f64; 3]; 3]>,
    pub i_eff: f64,
    pub dt: f64,
    pub steps: usize,
    pub wrap_cap: f64,
    pub wrap_contaminated: bool,
    /// Energy bound sqrt(2H(0)/I) on |ω|.
    pub omega_bar: f64,
    pub max_omega_norm: f64,
    pub max_step_change: f64,
    pub warnings: Vec<String>,
}

impl DiagnosticsSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn omega(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.samples[i].omega)
    }

    /// ‖Y(t_i) − S_{ω₊}‖_R for radius index `r`.
    pub fn distance_to(&self, i: usize, r: usize, omega_plus: &Vector3<f64>) -> f64 {
        seminorm_from_products(&self.samples[i].local[r], &self.gram[r], &self.omega(i), omega_plus)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub sample_times: Vec<f64>,
    pub radii: Vec<f64>,
    /// Record the largest per-step state change (costs one extra pass per step).
    pub track_step_change: bool,
}

/// Integrates to cfg.t_max, sampling diagnostics at the steps nearest to the requested times.
pub fn run(state: SystemState, cfg: &IntegratorConfig, model: &SystemModel, opts: &RunOptions) -> Result<(SystemState, DiagnosticsSeries)> {
    cfg.validate(model.grid())?;
    let steps = cfg.steps();
    let mut sample_steps: Vec<usize> = opts
        .sample_times
        .iter()
        .filter(|t| **t >= 0.0 && **t <= cfg.t_max + 0.5 * cfg.dt)
        .map(|t| ((t / cfg.dt).round() as usize).min(steps))
        .collect();
    sample_steps.sort_unstable();
    sample_steps.dedup();
    let probe = LocalProbe::new(model, &opts.radii)?;
    let initial_field = state.field.clone();
    let h0 = hamiltonian(&state, model);
    let omega_bar = (2.0 * h0 / model.inertia()).sqrt();
    let cap = wrap_cap(model);
    let mut warnings: Vec<String> = model.warnings().to_vec();
    let wrap_contaminated = cfg.t_max > cap;
    if wrap_contaminated {
        warnings.push(format!("t_max = {} exceeds the wrap cap {cap}", cfg.t_max));
    }
    let t_start = state.t;
    let mut stepper = Stepper::new(state, *cfg, model)?;
    let mut samples = Vec::with_capacity(sample_steps.len());
    let mut next = 0;
    let mut max_omega = stepper.state().omega.norm();
    let mut max_change: f64 = 0.0;
    for n in 0..=steps {
        if n > 0 {
            let before = opts.track_step_change.then(|| stepper.state().clone());
            stepper.step()?;
            if let Some(prev) = before {
                let d = SystemState::new(stepper.state().field.minus(&prev.field), stepper.state().omega - prev.omega);
                max_change = max_change.max(d.norm(model.grid()));
            }
            max_omega = max_omega.max(stepper.state().omega.norm());
        }
        while next < sample_steps.len() && sample_steps[next] == n {
            samples.push(sample(&stepper, model, &probe, &initial_field, t_start));
            next += 1;
        }
    }
    if max_omega > omega_bar * (1.0 + 1e-9) {
        warnings.push(format!("|omega| reached {max_omega} above the energy bound {omega_bar}"));
    }
    let series = DiagnosticsSeries {
        radii: opts.radii.clone(),
        samples,
        gram: probe.gram().to_vec(),
        i_eff: model.i_eff_grid(),
        dt: cfg.dt,
        steps,
        wrap_cap: cap,
        wrap_contaminated,
        omega_bar,
        max_omega_norm: max_omega,
        max_step_change: max_change,
        warnings,
    };
    Ok((stepper.into_state(), series))
}

fn sample(stepper: &Stepper<'_>, model: &SystemModel, probe: &LocalProbe<'_>, initial: &FieldState, t_start: f64) -> Sample {
    let state = stepper.state();
    let pi = pi_invariant(state, model);
    let omega_tilde = pi / model.i_eff_grid();
    let (norms, products) = probe.measure(state, &omega_tilde);
    let free = free_evolve(initial, model.grid(), state.t - t_start);
    let retarded = SystemState::new(state.field.minus(&free), state.omega);
    let fb = model.brackets(&free);
    let f = fb.pi_rho + state.omega.cross(&fb.rho_a);
    Sample {
        t: state.t,
        omega: state.omega.into(),
        omega_dot_norm: stepper.omega_dot().norm(),
        h: hamiltonian(state, model),
        pi_norm: pi.norm(),
        omega_tilde: omega_tilde.into(),
        dist: norms.iter().map(Seminorm::total).collect(),
        local: products,
        h_ret: hamiltonian(&retarded, model),
        pi_ret_norm: pi_invariant(&retarded, model).norm(),
        f: f.into(),
    }
}

/// Curl of A on the stored modes, −ik∧Â.
pub fn curl(a: &[CVec3], grid: &SpectralGrid) -> Vec<CVec3> {
    grid.modes()
        .iter()
        .zip(a)
        .map(|(m, z)| rcross(&m.k, z) * Complex64::new(0.0, -1.0))
        .collect()
}

#[cfg(test)]
impl Stepper<'_> {
    fn strang_field_only_for_test(&mut self) {
        let omega = self.state.omega;
        self.brackets = self.rotate(omega);
    }
}
