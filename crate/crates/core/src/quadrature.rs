//! Fixed quadrature rules on intervals, the unit sphere and balls.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::Vector3;

/// Gauss–Legendre rule stored on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("order >= 1");
        let rule = GaussLegendre::new(order);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals of [a, b].
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * width;
                self.integrate(lo, lo + width, &mut f)
            })
            .sum()
    }

    /// Integrates a vector-valued integrand.
    pub fn integrate_vec<F: FnMut(f64) -> Vector3<f64>>(&self, a: f64, b: f64, mut f: F) -> Vector3<f64> {
        self.mapped(a, b)
            .fold(Vector3::zeros(), |acc, (x, w)| acc + f(x) * w)
    }
}

/// Product rule on the unit sphere: Gauss–Legendre in cos(theta), uniform in phi.
/// Weights sum to 4π.
#[derive(Debug, Clone)]
pub struct SphereRule {
    points: Vec<Vector3<f64>>,
    weights: Vec<f64>,
}

impl SphereRule {
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let gauss = GaussRule::new(n_theta);
        let n_phi = n_phi.max(1);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut points = Vec::with_capacity(gauss.order() * n_phi);
        let mut weights = Vec::with_capacity(gauss.order() * n_phi);
        for (u, wu) in gauss.mapped(-1.0, 1.0) {
            let s = (1.0 - u * u).max(0.0).sqrt();
            for j in 0..n_phi {
                // half-cell offset keeps nodes off the x-z plane
                let phi = (j as f64 + 0.5) * dphi;
                points.push(Vector3::new(s * phi.cos(), s * phi.sin(), u));
                weights.push(wu * dphi);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vector3<f64>, f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// ∫_{S²} f(z) d²z
    pub fn integrate<F: FnMut(&Vector3<f64>) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(z, w)| w * f(z)).sum()
    }

    /// (1/4π) ∫_{S²} f(z) d²z for vector-valued f.
    pub fn mean_vec<F: FnMut(&Vector3<f64>) -> Vector3<f64>>(&self, mut f: F) -> Vector3<f64> {
        let total = self
            .iter()
            .fold(Vector3::zeros(), |acc, (z, w)| acc + f(z) * w);
        total / (4.0 * std::f64::consts::PI)
    }
}

/// Radial Gauss–Legendre times a sphere rule, for integrals over the ball B_R.
#[derive(Debug, Clone)]
pub struct BallRule {
    pub radius: f64,
    radial: GaussRule,
    sphere: SphereRule,
}

impl BallRule {
    pub fn new(radius: f64, n_radial: usize, sphere: SphereRule) -> Self {
        Self {
            radius,
            radial: GaussRule::new(n_radial),
            sphere,
        }
    }

    /// Nodes `x` with volume weights `w`, so that ∫_{B_R} f ≈ Σ w f(x).
    pub fn nodes(&self) -> Vec<(Vector3<f64>, f64)> {
        let mut out = Vec::with_capacity(self.radial.order() * self.sphere.len());
        for (r, wr) in self.radial.mapped(0.0, self.radius) {
            for (z, wz) in self.sphere.iter() {
                out.push((z * r, wr * r * r * wz));
            }
        }
        out
    }
}
