//! Radial charge densities and the spectral quantities derived from them.
//!
//! Fourier convention used across the crate: `f̂(k) = ∫ e^{ik·x} f(x) dx` with
//! the `(2π)^{-3}` factor on the inverse. For a radial density this gives
//! `ρ̂(k) = 4π ∫ ρ(r) r² j₀(kr) dr`, and the vector density `ϱ(x) = x ρ(x)`
//! transforms to `ϱ̂(k) = i k̂ h(|k|)` with `h = -dρ̂/dk`.
//!
//! Two profile families are provided. The smooth bump
//! `c·exp(-1/(1 - r²/R²))` is C^∞ with compact support; the uniform ball is
//! only piecewise smooth but is the classical worked example for the
//! exceptional mass set and is admitted for that reason.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    UniformBall,
    SmoothBump,
}

fn default_charge() -> f64 {
    1.0
}

fn default_mass() -> f64 {
    1.0
}

/// JSON form: `{"kind": "uniform-ball", "R_rho": 1.0, "charge": 1.0, "m_b": 1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    #[serde(rename = "R_rho")]
    pub r_rho: f64,
    #[serde(default = "default_charge")]
    pub charge: f64,
    #[serde(default = "default_mass")]
    pub m_b: f64,
}

const BUMP_PANELS: usize = 8;
const BUMP_ORDER: usize = 32;

#[derive(Debug, Clone)]
pub struct ChargeProfile {
    kind: ProfileKind,
    r_rho: f64,
    charge: f64,
    m_b: f64,
    /// ρ(0) for the ball, the prefactor `c` for the bump.
    scale: f64,
    /// Composite Gauss nodes on [0, R]: (r, weight, ρ(r)).
    nodes: Vec<(f64, f64, f64)>,
}

impl ChargeProfile {
    pub fn uniform_ball(r_rho: f64, charge: f64, m_b: f64) -> Result<Self> {
        Self::build(ProfileKind::UniformBall, r_rho, charge, m_b, BUMP_PANELS)
    }

    pub fn smooth_bump(r_rho: f64, charge: f64, m_b: f64) -> Result<Self> {
        Self::build(ProfileKind::SmoothBump, r_rho, charge, m_b, BUMP_PANELS)
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        Self::build(spec.kind, spec.r_rho, spec.charge, spec.m_b, BUMP_PANELS)
    }

    /// Same profile with `panels` Gauss panels for the radial transforms.
    pub fn with_quadrature_panels(&self, panels: usize) -> Result<Self> {
        Self::build(self.kind, self.r_rho, self.charge, self.m_b, panels)
    }

    fn build(kind: ProfileKind, r_rho: f64, charge: f64, m_b: f64, panels: usize) -> Result<Self> {
        if !(r_rho.is_finite() && r_rho > 0.0) {
            return Err(Error::InvalidProfile(format!("R_rho must be positive, got {r_rho}")));
        }
        if !(charge.is_finite() && charge > 0.0) {
            return Err(Error::InvalidProfile(format!("total charge must be positive, got {charge}")));
        }
        if !(m_b.is_finite() && m_b > 0.0) {
            return Err(Error::InvalidProfile(format!("bare mass must be positive, got {m_b}")));
        }
        let rule = GaussRule::new(BUMP_ORDER);
        let width = r_rho / panels.max(1) as f64;
        let raw: Vec<(f64, f64)> = (0..panels.max(1))
            .flat_map(|p| {
                let lo = p as f64 * width;
                rule.mapped(lo, lo + width).collect::<Vec<_>>()
            })
            .collect();
        let scale = match kind {
            ProfileKind::UniformBall => 3.0 * charge / (4.0 * PI * r_rho.powi(3)),
            ProfileKind::SmoothBump => {
                let unit: f64 = raw
                    .iter()
                    .map(|&(r, w)| w * 4.0 * PI * r * r * bump_shape(r / r_rho))
                    .sum();
                charge / unit
            }
        };
        let mut profile = Self {
            kind,
            r_rho,
            charge,
            m_b,
            scale,
            nodes: Vec::new(),
        };
        profile.nodes = raw
            .into_iter()
            .map(|(r, w)| (r, w, profile.density(r)))
            .collect();
        Ok(profile)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn r_rho(&self) -> f64 {
        self.r_rho
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn m_b(&self) -> f64 {
        self.m_b
    }

    pub fn spec(&self) -> ProfileSpec {
        ProfileSpec {
            kind: self.kind,
            r_rho: self.r_rho,
            charge: self.charge,
            m_b: self.m_b,
        }
    }

    /// Same shape with the bare mass replaced.
    pub fn with_mass(&self, m_b: f64) -> Result<Self> {
        Self::build(self.kind, self.r_rho, self.charge, m_b, self.nodes.len() / BUMP_ORDER)
    }

    /// ρ_rad(r); rejects negative radii.
    pub fn rho(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeRadius(r));
        }
        Ok(self.density(r))
    }

    /// ρ_rad(|r|) without the sign check.
    pub fn density(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_rho {
            return 0.0;
        }
        match self.kind {
            ProfileKind::UniformBall => self.scale,
            ProfileKind::SmoothBump => self.scale * bump_shape(r / self.r_rho),
        }
    }

    /// ∫_a^b u^p ρ(u) du, with the interval clipped to the support.
    pub fn partial_moment(&self, p: i32, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(self.r_rho);
        if b <= a {
            return 0.0;
        }
        match self.kind {
            ProfileKind::UniformBall => {
                let q = f64::from(p + 1);
                self.scale * (b.powi(p + 1) - a.powi(p + 1)) / q
            }
            ProfileKind::SmoothBump => {
                let rule = GaussRule::new(BUMP_ORDER);
                rule.composite(a, b, 4, |u| u.powi(p) * self.density(u))
            }
        }
    }

    /// ∫_0^R r^p ρ(r) dr.
    pub fn moment(&self, p: i32) -> f64 {
        self.partial_moment(p, 0.0, self.r_rho)
    }

    /// ρ̂(k) for k ≥ 0 (even in k); ρ̂(0) is the total charge.
    pub fn rho_hat(&self, k: f64) -> f64 {
        let k = k.abs();
        match self.kind {
            ProfileKind::UniformBall => {
                let x = k * self.r_rho;
                3.0 * self.charge * sph_bessel_over_x(1, x)
            }
            ProfileKind::SmoothBump => {
                4.0 * PI
                    * self
                        .nodes
                        .iter()
                        .map(|&(r, w, rho)| w * rho * r * r * sinc(k * r))
                        .sum::<f64>()
            }
        }
    }

    /// The scalar amplitude `h(k) = -ρ̂'(k)` of `ϱ̂(k) = i k̂ h(|k|)`; odd in k.
    pub fn h(&self, k: f64) -> f64 {
        match self.kind {
            ProfileKind::UniformBall => {
                let x = k * self.r_rho;
                3.0 * self.charge * self.r_rho * x * sph_bessel_over_x_pow(2, x)
            }
            ProfileKind::SmoothBump => {
                4.0 * PI
                    * k
                    * self
                        .nodes
                        .iter()
                        .map(|&(r, w, rho)| w * rho * r.powi(4) * sph_bessel_over_x(1, k * r))
                        .sum::<f64>()
            }
        }
    }

    /// ϱ̂(k) for the vector density `x ρ(x)`; zero at k = 0.
    pub fn varrho_hat(&self, kvec: &Vector3<f64>) -> Vector3<Complex64> {
        let k = kvec.norm();
        if k == 0.0 {
            return Vector3::zeros();
        }
        let amp = self.h(k) / k;
        kvec.map(|c| Complex64::new(0.0, amp * c))
    }

    /// Real part `G` of the purely imaginary spectral function `g = iG`.
    pub fn g_real(&self, mu: f64) -> f64 {
        // g(μ) = i √(2/π) ∫ [μr cos μr − sin μr]/μ² ρ r dr = −i √(2/π)/(4π) h(μ)
        -(2.0 / PI).sqrt() / (4.0 * PI) * self.h(mu)
    }

    /// I = (2/3) m_b ∫ |x|² ρ dx.
    pub fn bare_moment(&self) -> f64 {
        2.0 / 3.0 * self.m_b * 4.0 * PI * self.moment(4)
    }

    /// κ₀ = (2π)^{-3} ∫ |ϱ̂(k)|²/k² dk = (1/2π²) ∫_0^∞ h(k)² dk.
    pub fn kappa0(&self) -> Result<Kappa0> {
        let rule = GaussRule::new(16);
        let width = 0.5 * PI / self.r_rho;
        let k_min = 20.0 / self.r_rho;
        let k_cap = 1.0e5 / self.r_rho;
        let mut total = 0.0;
        let mut peak: f64 = 0.0;
        let mut quiet_panels = 0usize;
        let mut envelope: f64 = 0.0;
        let mut k = 0.0;
        loop {
            let mut panel_max: f64 = 0.0;
            let mut panel_env: f64 = 0.0;
            total += rule.integrate(k, k + width, |q| {
                let v = self.h(q).powi(2);
                panel_max = panel_max.max(v);
                panel_env = panel_env.max(v * q.powi(4));
                v
            });
            peak = peak.max(panel_max);
            k += width;
            if panel_max < 1e-14 * peak {
                quiet_panels += 1;
                envelope = envelope.max(panel_env);
            } else {
                quiet_panels = 0;
                envelope = panel_env;
            }
            if k >= k_min && quiet_panels >= 8 {
                break;
            }
            if k >= k_cap {
                let tail = envelope / (3.0 * k.powi(3));
                return Err(Error::QuadratureNonConvergence {
                    what: "kappa0",
                    achieved: tail / total,
                });
            }
        }
        let norm = 1.0 / (2.0 * PI * PI);
        Ok(Kappa0 {
            value: norm * total,
            tail_bound: norm * envelope / (3.0 * k.powi(3)),
            cutoff: k,
        })
    }

    pub fn spectral(&self) -> Result<SpectralProfile> {
        let kappa0 = self.kappa0()?;
        let i_bare = self.bare_moment();
        Ok(SpectralProfile {
            profile: self.clone(),
            kappa0: kappa0.value,
            kappa0_tail: kappa0.tail_bound,
            i_bare,
            i_eff: i_bare + 2.0 / 3.0 * kappa0.value,
        })
    }

    /// Positive zeros of G on (0, mu_max]: uniform scan with step mu_max/4096,
    /// then bisection to `tol`.
    pub fn g_zeros(&self, mu_max: f64, tol: f64) -> Result<SpectralZeros> {
        self.g_zeros_with_steps(mu_max, tol, 4096)
    }

    pub fn g_zeros_with_steps(&self, mu_max: f64, tol: f64, steps: usize) -> Result<SpectralZeros> {
        if !(mu_max > 0.0 && mu_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu_max must be positive, got {mu_max}")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
        }
        let step = mu_max / steps as f64;
        let mut mu = Vec::new();
        let mut warnings = Vec::new();
        let mut prev = (step, self.g_real(step));
        if prev.1 == 0.0 {
            mu.push(step);
        }
        for i in 2..=steps {
            let cur_mu = i as f64 * step;
            let cur = (cur_mu, self.g_real(cur_mu));
            if cur.1 == 0.0 {
                mu.push(cur.0);
            } else if prev.1 * cur.1 < 0.0 {
                mu.push(bisect(|x| self.g_real(x), prev.0, cur.0, tol));
            } else if prev.1 != 0.0 {
                let mid = 0.5 * (prev.0 + cur.0);
                let g_mid = self.g_real(mid);
                if g_mid * cur.1 < 0.0 {
                    warnings.push(format!(
                        "two zeros closer than the scan step {step:.3e} inside [{:.6}, {:.6}]",
                        prev.0, cur.0
                    ));
                    mu.push(bisect(|x| self.g_real(x), prev.0, mid, tol));
                    mu.push(bisect(|x| self.g_real(x), mid, cur.0, tol));
                }
            }
            prev = cur;
        }
        for pair in mu.windows(2) {
            if pair[1] - pair[0] < step {
                warnings.push(format!(
                    "zeros {:.9} and {:.9} are closer than the scan step {step:.3e}",
                    pair[0], pair[1]
                ));
            }
        }
        Ok(SpectralZeros {
            kind: self.kind,
            mu,
            mu_max,
            tol,
            warnings,
        })
    }
}

fn bump_shape(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn double_factorial(n: i32) -> f64 {
    (1..=n).rev().step_by(2).map(f64::from).product()
}

/// j_l(x) / x^l via its power series for small x, closed forms otherwise (l ≤ 2).
fn sph_bessel_over_x_pow(l: i32, x: f64) -> f64 {
    if x.abs() < 0.5 {
        let y = -0.5 * x * x;
        let mut term = 1.0 / double_factorial(2 * l + 1);
        let mut sum = term;
        for n in 1..30 {
            term *= y / (f64::from(n) * f64::from(2 * n + 2 * l + 1));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let (s, c) = x.sin_cos();
    let j = match l {
        0 => s / x,
        1 => s / (x * x) - c / x,
        2 => (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x),
        _ => unreachable!("only l <= 2 is used"),
    };
    j / x.powi(l)
}

/// j_l(x)/x.
fn sph_bessel_over_x(l: i32, x: f64) -> f64 {
    match l {
        1 => sph_bessel_over_x_pow(1, x),
        _ => sph_bessel_over_x_pow(l, x) * x.powi(l - 1),
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Kappa0 {
    pub value: f64,
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// Profile together with its spectral constants κ₀, I and I_eff.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    pub profile: ChargeProfile,
    pub kappa0: f64,
    pub kappa0_tail: f64,
    pub i_bare: f64,
    pub i_eff: f64,
}

impl SpectralProfile {
    pub fn rho_hat(&self, k: f64) -> f64 {
        self.profile.rho_hat(k)
    }

    pub fn h(&self, k: f64) -> f64 {
        self.profile.h(k)
    }
}

/// Positive zeros μ_j of G; μ₀ = 0 and μ_{-j} = -μ_j are implied.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralZeros {
    #[serde(skip)]
    pub kind: ProfileKind,
    pub mu: Vec<f64>,
    pub mu_max: f64,
    pub tol: f64,
    pub warnings: Vec<String>,
}

impl SpectralZeros {
    /// Synthetic zero list, mostly for checking the resonance logic.
    pub fn from_values(kind: ProfileKind, mut mu: Vec<f64>, tol: f64) -> Self {
        mu.sort_by(f64::total_cmp);
        let mu_max = mu.last().copied().unwrap_or(0.0);
        Self {
            kind,
            mu,
            mu_max,
            tol,
            warnings: Vec::new(),
        }
    }

    /// μ_j for j ∈ [-n, n].
    pub fn signed(&self, j: i32) -> f64 {
        match j {
            0 => 0.0,
            j if j > 0 => self.mu[j as usize - 1],
            j => -self.mu[(-j) as usize - 1],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NonResonanceReport {
    pub passed: bool,
    pub violations: Vec<(i32, i32, i32)>,
    pub window: f64,
    pub tol: f64,
}

fn exempt(j: i32, k: i32, l: i32) -> bool {
    (j + k == 0 && l == 0) || (j == 0 && k == l) || (k == 0 && j == l)
}

/// Enumerates index triples with |μ_j + μ_k − μ_ℓ| < tol outside the exempt patterns
/// (−n, n, 0), (0, n, n), (n, 0, n).
pub fn check_nonresonance(zeros: &SpectralZeros, tol: f64) -> NonResonanceReport {
    let n = zeros.mu.len() as i32;
    let mut violations = Vec::new();
    for j in -n..=n {
        for k in -n..=n {
            let sum = zeros.signed(j) + zeros.signed(k);
            for l in -n..=n {
                if exempt(j, k, l) {
                    continue;
                }
                if (sum - zeros.signed(l)).abs() < tol {
                    violations.push((j, k, l));
                }
            }
        }
    }
    NonResonanceReport {
        passed: violations.is_empty(),
        violations,
        window: zeros.mu_max,
        tol,
    }
}

/// The exceptional masses {4π(μ_j² − 30) μ_j^{-4}} of the uniformly charged ball.
#[derive(Debug, Clone, Serialize)]
pub struct MassSet {
    pub values: Vec<f64>,
}

impl MassSet {
    pub fn contains(&self, m_b: f64, tol: f64) -> bool {
        self.values.iter().any(|m| (m - m_b).abs() <= tol)
    }
}

pub fn m_rho_ball(zeros: &SpectralZeros) -> Result<MassSet> {
    if zeros.kind != ProfileKind::UniformBall {
        return Err(Error::InvalidArgument(
            "the exceptional mass formula is only known for the uniform ball".into(),
        ));
    }
    if zeros.mu.is_empty() {
        return Err(Error::InvalidArgument("empty zero list".into()));
    }
    Ok(MassSet {
        values: zeros.mu.iter().map(|&m| mass_formula(m)).collect(),
    })
}

pub fn mass_formula(mu: f64) -> f64 {
    4.0 * PI * (mu * mu - 30.0) / mu.powi(4)
}
