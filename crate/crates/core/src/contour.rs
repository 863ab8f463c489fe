use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// A circle discretised by the periodic trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub center: C64,
    pub radius: f64,
    pub nodes: Vec<C64>,
    /// Weights for ∮ dz, w_j = i·(z_j − c)·2π/M.
    pub weights: Vec<C64>,
}

impl Circle {
    pub fn new(center: C64, radius: f64, m: usize) -> Self {
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for j in 0..m {
            let u = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
            nodes.push(center + u * radius);
            weights.push(C64::i() * u * radius * (2.0 * PI / m as f64));
        }
        Self { center, radius, nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// (1/2πi) Σ w_j v_j
    pub fn integrate(&self, values: &[C64]) -> C64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let s: C64 = self.weights.iter().zip(values).map(|(w, v)| w * v).sum();
        s / (2.0 * PI * C64::i())
    }

    /// w_j/(2πi), the factor every contour sum in the pipeline multiplies by.
    pub fn scaled_weight(&self, j: usize) -> C64 {
        (self.nodes[j] - self.center) / self.nodes.len() as f64
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

/// The circle Γ_N: |λ| = (N − p − 3/2)².
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    pub n_cut: usize,
    pub p: usize,
    pub circle: Circle,
}

pub fn gamma_radius(n_cut: usize, p: usize) -> f64 {
    let r = n_cut as f64 - p as f64 - 1.5;
    r * r
}

pub fn make_contour(n_cut: usize, p: usize, m_q: usize) -> Result<ContourGrid> {
    if n_cut < 1 {
        return Err(Error::InvalidContour("N must be at least 1".into()));
    }
    if m_q < 16 || m_q % 2 != 0 {
        return Err(Error::InvalidContour(format!("M_q must be even and at least 16, got {m_q}")));
    }
    let radius = gamma_radius(n_cut, p);
    if radius <= 0.0 {
        return Err(Error::InvalidContour(format!("radius {radius} is not positive")));
    }
    Ok(ContourGrid { n_cut, p, circle: Circle::new(C64::new(0.0, 0.0), radius, m_q) })
}

impl ContourGrid {
    pub fn radius(&self) -> f64 {
        self.circle.radius
    }

    pub fn nodes(&self) -> &[C64] {
        &self.circle.nodes
    }

    pub fn weights(&self) -> &[C64] {
        &self.circle.weights
    }

    pub fn len(&self) -> usize {
        self.circle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circle.is_empty()
    }
}

pub fn contour_integral(values: &[C64], grid: &ContourGrid) -> Result<C64> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "{} values for {} contour nodes",
            values.len(),
            grid.len()
        )));
    }
    Ok(grid.circle.integrate(values))
}
