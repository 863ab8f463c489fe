use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};

/// σ sampled on the uniform grid x_i = iπ/(N_x−1), with a local cubic
/// (4-point Lagrange) interpolant cached per interval.
#[derive(Debug, Clone)]
pub struct PotentialSigma {
    values: Vec<C64>,
    cubic: Vec<[C64; 4]>,
}

pub const MIN_GRID_POINTS: usize = 4;

impl PartialEq for PotentialSigma {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl PotentialSigma {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.len() < MIN_GRID_POINTS {
            return Err(invalid(format!(
                "sigma needs at least {MIN_GRID_POINTS} grid points, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("sigma value at index {i} is not finite")));
        }
        let cubic = build_cubic(&values);
        Ok(Self { values, cubic })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![C64::new(0.0, 0.0); n])
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(invalid(format!("sigma needs at least {MIN_GRID_POINTS} grid points")));
        }
        let h = PI / (n - 1) as f64;
        Self::new((0..n).map(|i| f(grid_x(i, n, h))).collect())
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        PI / self.intervals() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        grid_x(i, self.len(), self.step())
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Cubic on interval `i` in the local variable s = (x − x_i)/h.
    #[inline]
    pub(crate) fn local(&self, i: usize, s: f64) -> C64 {
        let c = &self.cubic[i];
        ((c[3] * s + c[2]) * s + c[1]) * s + c[0]
    }

    pub fn eval(&self, x: f64) -> C64 {
        let t = (x / self.step()).max(0.0);
        let i = (t.floor() as usize).min(self.intervals() - 1);
        self.local(i, t - i as f64)
    }

    /// Samples the interpolant on another uniform grid.
    pub fn resample(&self, n: usize) -> Result<Self> {
        Self::from_fn(n, |x| self.eval(x))
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(invalid("sigma grids differ in size"));
        }
        Self::new(self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        if self.len() == other.len() {
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        } else {
            // compare on the finer grid through interpolation
            let (fine, coarse) = if self.len() > other.len() { (self, other) } else { (other, self) };
            (0..fine.len())
                .map(|i| (fine.values[i] - coarse.eval(fine.x(i))).norm())
                .fold(0.0, f64::max)
        }
    }
}

fn grid_x(i: usize, n: usize, h: f64) -> f64 {
    if i + 1 == n {
        PI
    } else {
        i as f64 * h
    }
}

fn build_cubic(v: &[C64]) -> Vec<[C64; 4]> {
    let n = v.len();
    (0..n - 1)
        .map(|i| {
            // stencil start j, so the interval sits at offset a = j − i in {0, −1, −2}
            let j = i.saturating_sub(1).min(n - 4);
            let a = j as f64 - i as f64;
            lagrange_power(&[v[j], v[j + 1], v[j + 2], v[j + 3]], a)
        })
        .collect()
}

/// Power-basis coefficients in s of the cubic through (a+k, w_k), k = 0..3.
fn lagrange_power(w: &[C64; 4], a: f64) -> [C64; 4] {
    let d0 = w[0];
    let d1 = w[1] - w[0];
    let d2 = (w[2] - 2.0 * w[1] + w[0]) / 2.0;
    let d3 = (w[3] - 3.0 * w[2] + 3.0 * w[1] - w[0]) / 6.0;
    // in u = s − a
    let mut e = [d0, d1 - d2 + 2.0 * d3, d2 - 3.0 * d3, d3];
    // Taylor shift: P(s) = e(s − a)
    let b = -a;
    for i in 0..3 {
        for j in (i..3).rev() {
            let t = e[j + 1] * b;
            e[j] += t;
        }
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    R1,
    R2,
}

/// The pair (r₁, r₂) with monic r₁ of degree p and deg r₂ ≤ p.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolynomials {
    c: Vec<C64>,
    d: Vec<C64>,
}

impl BoundaryPolynomials {
    pub fn new(c: Vec<C64>, d: Vec<C64>) -> Result<Self> {
        if c.is_empty() {
            return Err(invalid("r1 needs at least one coefficient"));
        }
        if c.len() != d.len() {
            return Err(invalid(format!(
                "r1 has {} coefficients but r2 has {}; both must have p+1",
                c.len(),
                d.len()
            )));
        }
        if c.iter().chain(&d).any(|z| !z.is_finite()) {
            return Err(invalid("polynomial coefficient is not finite"));
        }
        if *c.last().unwrap() != C64::new(1.0, 0.0) {
            return Err(invalid("r1 must be monic (c_p = 1 exactly)"));
        }
        Ok(Self { c, d })
    }

    pub fn from_real(c: &[f64], d: &[f64]) -> Result<Self> {
        Self::new(c.iter().map(|&x| C64::new(x, 0.0)).collect(), d.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn c(&self) -> &[C64] {
        &self.c
    }

    pub fn d(&self) -> &[C64] {
        &self.d
    }

    pub fn coeffs(&self, which: Which) -> &[C64] {
        match which {
            Which::R1 => &self.c,
            Which::R2 => &self.d,
        }
    }

    pub fn eval(&self, which: Which, lam: C64) -> C64 {
        horner(self.coeffs(which), lam)
    }

    pub fn r1(&self, lam: C64) -> C64 {
        horner(&self.c, lam)
    }

    pub fn r2(&self, lam: C64) -> C64 {
        horner(&self.d, lam)
    }

    pub fn r1_prime(&self, lam: C64) -> C64 {
        horner_deriv(&self.c, lam)
    }

    pub fn r2_prime(&self, lam: C64) -> C64 {
        horner_deriv(&self.d, lam)
    }

    /// Roots of r₁ from the companion matrix.
    pub fn r1_roots(&self) -> Vec<C64> {
        poly_roots(&self.c)
    }

    /// min over roots z of r₁ of |r₂(z)|, normalised by max(1, max|d_n|).
    /// Infinite when p = 0.
    pub fn coprimality_margin(&self) -> f64 {
        let scale = self.d.iter().map(|z| z.norm()).fold(1.0, f64::max);
        self.r1_roots().iter().map(|&z| self.r2(z).norm() / scale).fold(f64::INFINITY, f64::min)
    }

    pub fn check_coprime(&self) -> Result<()> {
        let m = self.coprimality_margin();
        if m > 1e-8 {
            Ok(())
        } else {
            Err(invalid(format!("r1 and r2 share a root (margin {m:.3e})")))
        }
    }
}

pub fn eval_poly(polys: &BoundaryPolynomials, which: Which, lam: C64) -> C64 {
    polys.eval(which, lam)
}

pub(crate) fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub(crate) fn horner_deriv(c: &[C64], z: C64) -> C64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, (k, &a)| acc * z + a * k as f64)
}

/// Roots of Σ c_k z^k (leading coefficient nonzero) via eigenvalues of the
/// companion matrix.
pub(crate) fn poly_roots(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    match m.clone().try_schur(1e-15, 10_000) {
        Some(s) => {
            let (_, t) = s.unpack();
            (0..n).map(|i| t[(i, i)]).collect()
        }
        None => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub sigma: PotentialSigma,
    pub polys: BoundaryPolynomials,
}

impl Problem {
    pub fn new(sigma: PotentialSigma, polys: BoundaryPolynomials) -> Self {
        Self { sigma, polys }
    }

    pub fn p(&self) -> usize {
        self.polys.degree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn horner_examples() {
        let a = BoundaryPolynomials::from_real(&[1.0], &[0.0]).unwrap();
        assert_eq!(eval_poly(&a, Which::R1, c(5.0, 0.0)), c(1.0, 0.0));
        let b = BoundaryPolynomials::from_real(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(eval_poly(&b, Which::R1, c(2.0, 1.0)), c(2.0, 1.0));
        let q = BoundaryPolynomials::from_real(&[3.0, 0.0, 1.0], &[4.0, -1.0, 2.0]).unwrap();
        assert_eq!(eval_poly(&q, Which::R1, c(2.0, 0.0)), c(7.0, 0.0));
        assert_eq!(q.r1_prime(c(2.0, 0.0)), c(4.0, 0.0));
        assert_eq!(q.r2_prime(c(1.0, 0.0)), c(3.0, 0.0));
    }

    #[test]
    fn monic_and_shape_are_enforced() {
        assert!(BoundaryPolynomials::from_real(&[0.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(BoundaryPolynomials::from_real(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn coprimality() {
        let shared = BoundaryPolynomials::from_real(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(shared.check_coprime().is_err());
        let ok = BoundaryPolynomials::from_real(&[1.0, 1.0], &[0.0, PI]).unwrap();
        assert!(ok.check_coprime().is_ok());
        let p0 = BoundaryPolynomials::from_real(&[1.0], &[0.0]).unwrap();
        assert!(p0.coprimality_margin().is_infinite());
        // r1 = (λ−1)(λ−2), r2 = λ − 2 share the root 2
        let q = BoundaryPolynomials::from_real(&[2.0, -3.0, 1.0], &[-2.0, 1.0, 0.0]).unwrap();
        assert!(q.coprimality_margin() < 1e-10);
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let f = |x: f64| c(x * x * x - 2.0 * x + 0.5, 0.3 * x * x);
        let s = PotentialSigma::from_fn(17, f).unwrap();
        for k in 0..200 {
            let x = PI * k as f64 / 199.0;
            assert!((s.eval(x) - f(x)).norm() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn grid_endpoints() {
        let s = PotentialSigma::zero(512).unwrap();
        assert_eq!(s.x(0), 0.0);
        assert_eq!(s.x(511), PI);
        assert!(PotentialSigma::zero(3).is_err());
        assert!(PotentialSigma::new(vec![c(f64::NAN, 0.0); 8]).is_err());
    }
}
