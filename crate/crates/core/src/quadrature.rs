//! Gauss-Legendre rules and uniform averages over the Bloch sphere.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
// Needed without std; shadowed by the inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;


/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Product rule for `(1/4 pi) * integral f(theta, phi) sin(theta)`:
/// Gauss-Legendre in `cos(theta)`, uniform in `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochGrid {
    cos_theta: Vec<f64>,
    weights: Vec<f64>,
    phi: Vec<f64>,
}

impl BlochGrid {
    pub fn new(theta_points: usize, phi_points: usize) -> Self {
        let (cos_theta, weights) = gauss_legendre(theta_points);
        let phi = (0..phi_points.max(1))
            .map(|k| 2.0 * PI * k as f64 / phi_points.max(1) as f64)
            .collect();
        Self {
            cos_theta,
            weights,
            phi,
        }
    }

    pub fn theta_points(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn phi_points(&self) -> usize {
        self.phi.len()
    }

    /// Every `(theta, phi, weight)` triple; weights sum to one.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let inv_phi = 1.0 / self.phi.len() as f64;
        self.cos_theta
            .iter()
            .zip(&self.weights)
            .flat_map(move |(&u, &w)| {
                let theta = u.clamp(-1.0, 1.0).acos();
                self.phi.iter().map(move |&phi| (theta, phi, 0.5 * w * inv_phi))
            })
    }

    pub fn average(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points().map(|(t, p, w)| w * f(t, p)).sum()
    }
}

impl Default for BlochGrid {
    /// 16 x 32 grid.
    fn default() -> Self {
        Self::new(16, 32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let (x, _) = gauss_legendre(7);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(x[3], 0.0);
        assert_relative_eq!(x[0], -x[6], max_relative = 1e-15);
    }

    #[test]
    fn bloch_averages() {
        let g = BlochGrid::default();
        assert_relative_eq!(g.average(|_, _| 1.0), 1.0, max_relative = 1e-14);
        assert!(g.average(|t, _| t.cos()).abs() < 1e-15);
        assert_relative_eq!(g.average(|t, _| t.sin().powi(2)), 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(g.average(|t, _| t.cos().powi(2)), 1.0 / 3.0, max_relative = 1e-14);
        assert!(g.average(|t, p| t.sin() * p.cos()).abs() < 1e-15);
        assert_relative_eq!(
            g.average(|t, p| (t.sin() * p.cos()).powi(2)),
            1.0 / 3.0,
            max_relative = 1e-13
        );
    }
}
