//! Mesh-free point evaluation of free and retarded wave fields.
//!
//! Free fields use Kirchhoff's formula as spherical means of closed-form data
//! and their derivatives. Retarded fields of the rotating charge reduce, by
//! radial symmetry of ρ, to a one-dimensional integral over the delay.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::charge::ChargeProfile;
use crate::dynamics::DiagnosticsSeries;
use crate::error::{Error, Result};
use crate::quadrature::{BallRule, GaussRule, SphereRule};

/// First positive zero of j₁'; the Neumann Poincaré constant of the unit ball.
pub const NEUMANN_BALL_EIGENVALUE: f64 = 2.081_575_977_818_101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Envelope {
    /// (1 + r²/ℓ²)^{−p}
    Algebraic { ell: f64, p: f64 },
    /// exp(−r²/(2s²))
    Gaussian { width: f64 },
}

impl Envelope {
    /// (φ, φ'/r, (φ'/r)'/r) at radius r.
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Envelope::Algebraic { ell, p } => {
                let base = 1.0 + r * r / (ell * ell);
                let phi = base.powf(-p);
                let psi1 = -2.0 * p / (ell * ell) * phi / base;
                let psi2 = 4.0 * p * (p + 1.0) / ell.powi(4) * phi / (base * base);
                (phi, psi1, psi2)
            }
            Envelope::Gaussian { width } => {
                let s2 = width * width;
                let phi = (-r * r / (2.0 * s2)).exp();
                (phi, -phi / s2, phi / (s2 * s2))
            }
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Envelope::Algebraic { ell, .. } => ell,
            Envelope::Gaussian { width } => width,
        }
    }
}

/// Divergence-free vector field φ(|x − x_c|)·((x − x_c)∧c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationalBlob {
    pub center: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub envelope: Envelope,
}

/// Value, Jacobian (i, j) = ∂_j F_i, and Hessian slices hess[m](i, j) = ∂_m ∂_j F_i.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub value: Vector3<f64>,
    pub grad: Matrix3<f64>,
    pub hess: [Matrix3<f64>; 3],
}

fn levi(c: &Vector3<f64>) -> Matrix3<f64> {
    // (i, j) entry ε_ijk c_k
    Matrix3::new(0.0, c[2], -c[1], -c[2], 0.0, c[0], c[1], -c[0], 0.0)
}

impl RotationalBlob {
    pub fn value(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let y = x - self.center;
        let (phi, _, _) = self.envelope.eval(y.norm());
        y.cross(&self.axis) * phi
    }

    pub fn jet(&self, x: &Vector3<f64>) -> Jet {
        let y = x - self.center;
        let (phi, psi1, psi2) = self.envelope.eval(y.norm());
        let ycc = y.cross(&self.axis);
        let eps = levi(&self.axis);
        let grad = ycc * y.transpose() * psi1 + eps * phi;
        let hess = [0, 1, 2].map(|m| {
            let mut h = ycc * y.transpose() * (psi2 * y[m]);
            // δ_jm (y∧c)_i
            for i in 0..3 {
                h[(i, m)] += psi1 * ycc[i];
            }
            // y_j ε_imk c_k + y_m ε_ijk c_k
            let col = eps.column(m).into_owned();
            h += col * y.transpose() * psi1 + eps * (psi1 * y[m]);
            h
        });
        Jet {
            value: ycc * phi,
            grad,
            hess,
        }
    }
}

/// Closed-form initial data (A₀, Π₀) for the free wave equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialFieldSpec {
    pub a0: Option<RotationalBlob>,
    pub pi0: Option<RotationalBlob>,
    /// Decay exponent: |A₀| ~ |x|^{−σ}, |Π₀|, |∇A₀| ~ |x|^{−σ−1}.
    pub sigma: f64,
}

impl InitialFieldSpec {
    pub fn zero() -> Self {
        Self {
            a0: None,
            pi0: None,
            sigma: f64::INFINITY,
        }
    }

    /// Algebraically decaying blobs centred at the origin with A₀ ~ |x|^{−σ}.
    pub fn far_field(sigma: f64, amplitude: f64) -> Result<Self> {
        if !(sigma > 0.5 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("decay exponent must exceed 1/2, got {sigma}")));
        }
        Ok(Self::algebraic(
            sigma,
            Vector3::zeros(),
            Vector3::new(amplitude, 0.0, 0.0),
            Vector3::new(0.0, amplitude, 0.0),
            1.0,
        ))
    }

    pub fn algebraic(sigma: f64, center: Vector3<f64>, axis_a: Vector3<f64>, axis_pi: Vector3<f64>, ell: f64) -> Self {
        Self {
            a0: Some(RotationalBlob {
                center,
                axis: axis_a,
                envelope: Envelope::Algebraic {
                    ell,
                    p: 0.5 * (sigma + 1.0),
                },
            }),
            pi0: Some(RotationalBlob {
                center,
                axis: axis_pi,
                envelope: Envelope::Algebraic {
                    ell,
                    p: 0.5 * (sigma + 2.0),
                },
            }),
            sigma,
        }
    }

    pub fn gaussian(center: Vector3<f64>, axis_a: Vector3<f64>, axis_pi: Vector3<f64>, width: f64) -> Self {
        let env = Envelope::Gaussian { width };
        Self {
            a0: Some(RotationalBlob {
                center,
                axis: axis_a,
                envelope: env,
            }),
            pi0: Some(RotationalBlob {
                center,
                axis: axis_pi,
                envelope: env,
            }),
            sigma: f64::INFINITY,
        }
    }

    fn jets(&self, x: &Vector3<f64>) -> (Option<Jet>, Option<Jet>) {
        (self.a0.map(|b| b.jet(x)), self.pi0.map(|b| b.jet(x)))
    }

    fn min_length(&self) -> f64 {
        [self.a0, self.pi0]
            .iter()
            .flatten()
            .map(|b| b.envelope.length())
            .fold(f64::INFINITY, f64::min)
    }

    fn centers(&self) -> Vec<Vector3<f64>> {
        [self.a0, self.pi0].iter().flatten().map(|b| b.center).collect()
    }
}

/// Free-field values at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeField {
    pub a: Vector3<f64>,
    pub pi: Vector3<f64>,
    pub grad_a: Matrix3<f64>,
}

/// Sphere rule for Kirchhoff means: `n_theta` Gauss nodes in cos θ, 2·n_theta in φ.
#[derive(Debug, Clone)]
pub struct KirchhoffQuadrature {
    rule: SphereRule,
    n_theta: usize,
}

impl KirchhoffQuadrature {
    pub fn new(n_theta: usize) -> Self {
        Self {
            rule: SphereRule::product(n_theta, 2 * n_theta),
            n_theta,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
}

/// Kirchhoff's formula for (A_K, Π_K, ∇A_K) at (x, t).
pub fn kirchhoff_free(x: &Vector3<f64>, t: f64, init: &InitialFieldSpec, quad: &KirchhoffQuadrature) -> Result<FreeField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        let (ja, jp) = init.jets(x);
        return Ok(FreeField {
            a: ja.map_or(Vector3::zeros(), |j| j.value),
            pi: jp.map_or(Vector3::zeros(), |j| j.value),
            grad_a: ja.map_or(Matrix3::zeros(), |j| j.grad),
        });
    }
    // Nodes on S_t must resolve the data where the sphere passes closest to a blob centre.
    let spacing = t * PI / quad.n_theta as f64;
    for c in init.centers() {
        let scale = init.min_length().max((t - (x - c).norm()).abs());
        if spacing > scale {
            return Err(Error::QuadratureNonConvergence {
                what: "kirchhoff sphere mean",
                achieved: spacing / scale,
            });
        }
    }
    let mut a = Vector3::zeros();
    let mut pi = Vector3::zeros();
    let mut grad = Matrix3::zeros();
    for (z, w) in quad.rule.iter() {
        let y = x + z * t;
        let (ja, jp) = init.jets(&y);
        if let Some(j) = jp {
            a += j.value * (t * w);
            pi += (j.value + j.grad * z * t) * w;
            grad += j.grad * (t * w);
        }
        if let Some(j) = ja {
            let gz = j.grad * z;
            let hz = j.hess[0] * z[0] + j.hess[1] * z[1] + j.hess[2] * z[2];
            a += (j.value + gz * t) * w;
            pi += (gz * 2.0 + hz * z * t) * w;
            grad += (j.grad + hz * t) * w;
        }
    }
    let norm = 1.0 / (4.0 * PI);
    Ok(FreeField {
        a: a * norm,
        pi: pi * norm,
        grad_a: grad * norm,
    })
}

/// ∫_{S₁}|x + tz|^{−α} d²z = 2π/((α−2)|x|t) · ((t−|x|)^{2−α} − (t+|x|)^{2−α}).
pub fn sphere_integral_identity(alpha: f64, x_norm: f64, t: f64) -> Result<f64> {
    if alpha == 2.0 {
        return Err(Error::InvalidArgument("the closed form needs alpha != 2".into()));
    }
    if !(t > x_norm && x_norm >= 0.0) {
        return Err(Error::InvalidArgument(format!("need t > |x| >= 0, got |x| = {x_norm}, t = {t}")));
    }
    if x_norm == 0.0 {
        return Ok(4.0 * PI * t.powf(-alpha));
    }
    let e = 2.0 - alpha;
    Ok(2.0 * PI / ((alpha - 2.0) * x_norm * t) * ((t - x_norm).powf(e) - (t + x_norm).powf(e)))
}

/// Quadrature companion of [`sphere_integral_identity`] for an arbitrary direction of x.
pub fn sphere_integral_quadrature(alpha: f64, x: &Vector3<f64>, t: f64, rule: &SphereRule) -> f64 {
    rule.integrate(|z| (x + z * t).norm().powf(-alpha))
}

/// Angular velocity history: constant ω̄ for s ≤ t_a, cubic Hermite through knots after.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaHistory {
    omega_bar: Vector3<f64>,
    t_a: f64,
    /// (t, ω, ω̇) with knots[0].0 == t_a.
    knots: Vec<(f64, Vector3<f64>, Vector3<f64>)>,
}

impl OmegaHistory {
    /// ω ≡ ω̄ for all times.
    pub fn constant(omega_bar: Vector3<f64>) -> Self {
        Self {
            omega_bar,
            t_a: f64::INFINITY,
            knots: Vec::new(),
        }
    }

    pub fn new(omega_bar: Vector3<f64>, t_a: f64, knots: Vec<(f64, Vector3<f64>, Vector3<f64>)>) -> Result<Self> {
        let Some(first) = knots.first() else {
            return Err(Error::InvalidArgument("history needs at least one knot".into()));
        };
        if first.0 != t_a {
            return Err(Error::InvalidArgument("first knot must sit at the end of the constant tail".into()));
        }
        if (first.1 - omega_bar).norm() > 1e-12 * (1.0 + omega_bar.norm()) {
            return Err(Error::InvalidArgument("history must be continuous at the end of the constant tail".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("knot times must increase".into()));
        }
        Ok(Self { omega_bar, t_a, knots })
    }

    pub fn omega_bar(&self) -> Vector3<f64> {
        self.omega_bar
    }

    pub fn t_a(&self) -> f64 {
        self.t_a
    }

    pub fn defined_to(&self) -> f64 {
        self.knots.last().map_or(f64::INFINITY, |k| k.0)
    }

    /// (ω(s), ω̇(s)).
    pub fn eval(&self, s: f64) -> (Vector3<f64>, Vector3<f64>) {
        if s <= self.t_a {
            return (self.omega_bar, Vector3::zeros());
        }
        let i = self.knots.partition_point(|k| k.0 <= s).clamp(1, self.knots.len() - 1);
        let (t0, w0, d0) = self.knots[i - 1];
        let (t1, w1, d1) = self.knots[i];
        let h = t1 - t0;
        let u = (s - t0) / h;
        let (u2, u3) = (u * u, u * u * u);
        let value = w0 * (2.0 * u3 - 3.0 * u2 + 1.0)
            + d0 * (h * (u3 - 2.0 * u2 + u))
            + w1 * (-2.0 * u3 + 3.0 * u2)
            + d1 * (h * (u3 - u2));
        let slope = w0 * ((6.0 * u2 - 6.0 * u) / h)
            + d0 * (3.0 * u2 - 4.0 * u + 1.0)
            + w1 * ((-6.0 * u2 + 6.0 * u) / h)
            + d1 * (3.0 * u2 - 2.0 * u);
        (value, slope)
    }

    fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.iter().map(|k| k.0)
    }
}

/// Gauss rule and maximum panel width for the delay integral.
#[derive(Debug, Clone)]
pub struct DelayQuadrature {
    rule: GaussRule,
    max_panel: f64,
}

impl DelayQuadrature {
    pub fn new(order: usize, max_panel: f64) -> Self {
        Self {
            rule: GaussRule::new(order),
            max_panel,
        }
    }
}

impl Default for DelayQuadrature {
    fn default() -> Self {
        Self::new(16, 0.25)
    }
}

/// τ·m(r, τ), where M_τ[ϱ](x) = x̂ m(r, τ) is the spherical mean of xρ(x) at radius τ.
fn delay_kernel(profile: &ChargeProfile, r: f64, tau: f64) -> f64 {
    let lo = (r - tau).abs();
    let hi = r + tau;
    let p3 = profile.partial_moment(3, lo, hi);
    let p1 = profile.partial_moment(1, lo, hi);
    (p3 + (r * r - tau * tau) * p1) / (4.0 * r * r)
}

/// Retarded potential of the source ω(s)∧ϱ and its time derivative at (x, t).
pub fn retarded_field(
    x: &Vector3<f64>,
    t: f64,
    hist: &OmegaHistory,
    profile: &ChargeProfile,
    quad: &DelayQuadrature,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let r = x.norm();
    let big_r = profile.r_rho();
    let lo = (r - big_r).max(0.0);
    let hi = r + big_r;
    if t > hist.defined_to() {
        return Err(Error::HistoryDomain {
            from: t - hi,
            to: t - lo,
            defined_from: f64::NEG_INFINITY,
            defined_to: hist.defined_to(),
        });
    }
    if r == 0.0 {
        return Ok((Vector3::zeros(), Vector3::zeros()));
    }
    let xhat = x / r;
    let mut cuts: Vec<f64> = vec![lo, hi, (big_r - r).abs(), r];
    cuts.extend(hist.breakpoints().map(|s| t - s));
    let mut cuts: Vec<f64> = cuts.into_iter().filter(|c| *c >= lo && *c <= hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut a = Vector3::zeros();
    let mut da = Vector3::zeros();
    for seg in cuts.windows(2) {
        let (s0, s1) = (seg[0], seg[1]);
        if s1 <= s0 {
            continue;
        }
        let panels = ((s1 - s0) / quad.max_panel).ceil().max(1.0) as usize;
        let width = (s1 - s0) / panels as f64;
        for p in 0..panels {
            let p0 = s0 + p as f64 * width;
            for (tau, w) in quad.rule.mapped(p0, p0 + width) {
                let k = delay_kernel(profile, r, tau) * w;
                let (omega, omega_dot) = hist.eval(t - tau);
                a += omega * k;
                da += omega_dot * k;
            }
        }
    }
    Ok((a.cross(&xhat), da.cross(&xhat)))
}

/// Ball rule over the support of ρ with the sphere rule used for Kirchhoff means.
#[derive(Debug, Clone)]
pub struct SupportQuadrature {
    pub ball: BallRule,
    pub kirchhoff: KirchhoffQuadrature,
}

impl SupportQuadrature {
    pub fn new(profile: &ChargeProfile, n_radial: usize, n_angular: usize, kirchhoff: KirchhoffQuadrature) -> Self {
        Self {
            ball: BallRule::new(profile.r_rho(), n_radial, SphereRule::product(n_angular, 2 * n_angular)),
            kirchhoff,
        }
    }
}

/// f(t) = ⟨Π_K∧ϱ⟩ + ω(t)∧⟨ϱ∧A_K⟩ by quadrature over the support of ρ.
pub fn f_eval(
    t: f64,
    init: &InitialFieldSpec,
    omega_t: &Vector3<f64>,
    profile: &ChargeProfile,
    quad: &SupportQuadrature,
) -> Result<Vector3<f64>> {
    let parts = support_brackets(t, init, profile, quad)?;
    Ok(parts.pi_rho + omega_t.cross(&parts.rho_a))
}

struct SupportBrackets {
    pi_rho: Vector3<f64>,
    rho_a: Vector3<f64>,
    grad_sqr: f64,
}

fn support_brackets(t: f64, init: &InitialFieldSpec, profile: &ChargeProfile, quad: &SupportQuadrature) -> Result<SupportBrackets> {
    let nodes = quad.ball.nodes();
    let values: Vec<(Vector3<f64>, Vector3<f64>, f64)> = nodes
        .par_iter()
        .map(|(x, w)| {
            let ff = kirchhoff_free(x, t, init, &quad.kirchhoff)?;
            let rho = profile.density(x.norm()) * w;
            Ok((ff.pi.cross(x) * rho, x.cross(&ff.a) * rho, ff.grad_a.norm_squared() * w))
        })
        .collect::<Result<_>>()?;
    let (pi_rho, rho_a, grad_sqr) = values
        .iter()
        .fold((Vector3::zeros(), Vector3::zeros(), 0.0), |(p, q, g), (dp, dq, dg)| (p + dp, q + dq, g + dg));
    Ok(SupportBrackets {
        pi_rho,
        rho_a,
        grad_sqr,
    })
}

/// Both sides of |ω∧⟨ϱ∧A_K⟩| ≤ |ω|·‖|x|ρ‖_{L²}·(R/ν₁)·‖∇A_K‖_{L²(B_R)}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FBound {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn f_bound_check(
    t: f64,
    init: &InitialFieldSpec,
    omega_t: &Vector3<f64>,
    profile: &ChargeProfile,
    quad: &SupportQuadrature,
) -> Result<FBound> {
    let parts = support_brackets(t, init, profile, quad)?;
    let big_r = profile.r_rho();
    let weight = GaussRule::new(32)
        .composite(0.0, big_r, 4, |r| 4.0 * PI * (r * r * profile.density(r)).powi(2))
        .sqrt();
    Ok(FBound {
        lhs: omega_t.cross(&parts.rho_a).norm(),
        rhs: omega_t.norm() * weight * big_r / NEUMANN_BALL_EIGENVALUE * parts.grad_sqr.sqrt(),
    })
}

/// Least-squares fit of log v = log c + e·log t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

pub fn fit_power_law(ts: &[f64], values: &[f64]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(values)
        .filter(|(t, v)| **t > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(PowerFit {
        exponent: slope,
        prefactor: (my - slope * mx).exp(),
        t_lo: ts.iter().copied().fold(f64::INFINITY, f64::min),
        t_hi: ts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Geometric grid of `n` points on [a, b].
pub fn geometric_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Almost-conservation of H and |π| along the modified trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub t_ref: f64,
    pub t_end: f64,
    pub sigma: f64,
    /// sup_{t ≥ T} |H_ret(t) − H_ret(T)|
    pub h_drift: f64,
    pub pi_drift: f64,
    /// Fitted constants C with drift = C·T^{−σ}.
    pub c_h: f64,
    pub c_pi: f64,
    /// −slope of log drift(T') against log T' over T' ∈ [T, t_end/2]; None when the drift vanishes.
    pub h_exponent: Option<f64>,
    pub pi_exponent: Option<f64>,
}

pub fn drift_check(series: &DiagnosticsSeries, t_ref: f64, sigma: f64) -> Result<DriftReport> {
    let tail: Vec<_> = series.samples.iter().filter(|s| s.t >= t_ref).collect();
    if tail.len() < 3 {
        return Err(Error::InsufficientSamples { need: 3, got: tail.len() });
    }
    let drift_from = |i: usize, get: &dyn Fn(usize) -> f64| -> f64 {
        let base = get(i);
        (i..tail.len()).map(|j| (get(j) - base).abs()).fold(0.0, f64::max)
    };
    let h = |j: usize| tail[j].h_ret;
    let p = |j: usize| tail[j].pi_ret_norm;
    let t_end = tail.last().map(|s| s.t).unwrap_or(t_ref);
    let t0 = tail[0].t;
    let h_drift = drift_from(0, &h);
    let pi_drift = drift_from(0, &p);
    let mut ts = Vec::new();
    let mut hd = Vec::new();
    let mut pd = Vec::new();
    for (i, s) in tail.iter().enumerate() {
        if s.t > 0.5 * t_end && i > 0 {
            break;
        }
        ts.push(s.t);
        hd.push(drift_from(i, &h));
        pd.push(drift_from(i, &p));
    }
    let exponent = |vals: &[f64]| fit_power_law(&ts, vals).ok().map(|f| -f.exponent);
    Ok(DriftReport {
        t_ref: t0,
        t_end,
        sigma,
        h_drift,
        pi_drift,
        c_h: h_drift * t0.powf(sigma),
        c_pi: pi_drift * t0.powf(sigma),
        h_exponent: exponent(&hd),
        pi_exponent: exponent(&pd),
    })
}
