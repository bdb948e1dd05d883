//! Gauss rules on the unit interval and collapsed Gauss rules on triangles.

use std::f64::consts::PI;

/// Gauss-Legendre rule with `n` points on `[0, 1]`; weights sum to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Quadrature on a triangle: barycentric points and weights summing to one
/// (multiply by the cell area).
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed Gauss rule exact for polynomials of total degree `degree`.
    pub fn new(degree: usize) -> Self {
        let nv = degree / 2 + 1;
        let nu = (degree + 1) / 2 + 1;
        let (ug, uw) = gauss_legendre(nu);
        let (vg, vw) = gauss_legendre(nv);
        let mut points = Vec::with_capacity(nu * nv);
        let mut weights = Vec::with_capacity(nu * nv);
        for (u, wu) in ug.iter().zip(&uw) {
            for (v, wv) in vg.iter().zip(&vw) {
                let xi = *u;
                let eta = v * (1.0 - u);
                points.push([1.0 - xi - eta, xi, eta]);
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
