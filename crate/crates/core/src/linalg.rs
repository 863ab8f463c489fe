//! Dense complex solves on top of nalgebra: LU with a 1-norm condition
//! estimate and one step of iterative refinement, and least squares by
//! column-pivoted QR.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub struct Lu {
    a: CMat,
    p: nalgebra::PermutationSequence<nalgebra::Dyn>,
    l: CMat,
    u: CMat,
    l_adj: CMat,
    u_adj: CMat,
}

impl Lu {
    pub fn new(a: CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput("LU needs a square matrix".into()));
        }
        let (p, l, u) = a.clone().lu().unpack();
        let l_adj = l.adjoint();
        let u_adj = u.adjoint();
        Ok(Self { a, p, l, u, l_adj, u_adj })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn raw_solve(&self, b: &CVec) -> Option<CVec> {
        let mut z = b.clone();
        self.p.permute_rows(&mut z);
        if !self.l.solve_lower_triangular_mut(&mut z) {
            return None;
        }
        if !self.u.solve_upper_triangular_mut(&mut z) {
            return None;
        }
        Some(z).filter(|x| x.iter().all(|v| v.is_finite()))
    }

    /// A x = b, refined once.
    pub fn solve(&self, b: &CVec) -> Result<CVec> {
        let singular = || Error::IllConditioned("matrix is numerically singular".into());
        let mut x = self.raw_solve(b).ok_or_else(singular)?;
        let r = b - &self.a * &x;
        let d = self.raw_solve(&r).ok_or_else(singular)?;
        x += d;
        Ok(x)
    }

    /// Aᴴ x = b. With P A = L U, Aᴴ = Uᴴ Lᴴ P.
    fn solve_adjoint(&self, b: &CVec) -> Option<CVec> {
        let y = self.u_adj.solve_lower_triangular(b)?;
        let mut z = y;
        if !self.l_adj.solve_upper_triangular_mut(&mut z) {
            return None;
        }
        self.p.inv_permute_rows(&mut z);
        Some(z)
    }

    /// Reciprocal 1-norm condition number, with ‖A⁻¹‖₁ from the
    /// Hager–Higham estimator.
    pub fn rcond(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        let anorm = norm1(&self.a);
        if anorm == 0.0 {
            return 0.0;
        }
        let est = match self.inv_norm1_estimate() {
            Some(e) if e.is_finite() => e,
            _ => return 0.0,
        };
        if est == 0.0 {
            return 0.0;
        }
        1.0 / (anorm * est)
    }

    fn inv_norm1_estimate(&self) -> Option<f64> {
        let n = self.dim();
        let mut x = CVec::from_element(n, C64::new(1.0 / n as f64, 0.0));
        let mut est: f64 = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let y = self.raw_solve(&x)?;
            est = est.max(y.iter().map(|v| v.norm()).sum());
            let xi = y.map(|v| if v.norm() > 0.0 { v / v.norm() } else { C64::new(1.0, 0.0) });
            let z = self.solve_adjoint(&xi)?;
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc });
            let zx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if iter > 0 && (zmax <= zx || j == last_j) {
                break;
            }
            last_j = j;
            x = CVec::zeros(n);
            x[j] = C64::new(1.0, 0.0);
        }
        // alternating vector guards against the estimator's known blind spots
        let b = CVec::from_fn(n, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        });
        let y = self.raw_solve(&b)?;
        let alt = 2.0 * y.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
        Some(est.max(alt))
    }
}

pub fn norm1(a: &CMat) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// min ‖A x − b‖₂ for a tall A of full column rank.
pub fn least_squares(a: &CMat, b: &CVec) -> Result<CVec> {
    let (m, n) = a.shape();
    if m < n || b.len() != m {
        return Err(Error::InvalidInput(format!("least squares needs rows >= cols ({m}x{n})")));
    }
    let qr = a.clone().col_piv_qr();
    let mut qb = b.clone();
    qr.q_tr_mul(&mut qb);
    let (_, r, p) = qr.unpack();
    let r = r.view((0, 0), (n, n)).into_owned();
    let rhs = qb.rows(0, n).into_owned();
    let tiny = r.diagonal().iter().map(|v| v.norm()).fold(0.0, f64::max) * 1e-14;
    if r.diagonal().iter().any(|v| v.norm() <= tiny) {
        return Err(Error::IllConditioned("least-squares matrix is rank deficient".into()));
    }
    let mut x = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::IllConditioned("least-squares triangular solve failed".into()))?;
    p.inv_permute_rows(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn test_matrix(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| {
            let t = (i * 7 + j * 13) as f64;
            c((t * 0.37).sin(), (t * 0.11).cos()) + if i == j { c(3.0, 0.0) } else { c(0.0, 0.0) }
        })
    }

    #[test]
    fn solve_and_residual() {
        let a = test_matrix(40);
        let x0 = CVec::from_fn(40, |i, _| c(i as f64, -(i as f64) * 0.5));
        let b = &a * &x0;
        let lu = Lu::new(a.clone()).unwrap();
        let x = lu.solve(&b).unwrap();
        assert!((&a * &x - &b).camax() < 1e-12 * b.camax());
        let z = lu.solve_adjoint(&b).unwrap();
        assert!((a.adjoint() * z - &b).camax() < 1e-10 * b.camax());
    }

    #[test]
    fn rcond_close_to_exact() {
        let a = test_matrix(30);
        let inv = a.clone().try_inverse().unwrap();
        let exact = 1.0 / (norm1(&a) * norm1(&inv));
        let est = Lu::new(a).unwrap().rcond();
        // the estimate is a lower bound on ‖A⁻¹‖ so rcond is an upper bound, within a small factor
        assert!(est >= exact * 0.999 && est <= exact * 10.0, "{est} vs {exact}");
        let mut s = CMat::identity(5, 5);
        s[(4, 4)] = c(1e-17, 0.0);
        assert!(Lu::new(s).unwrap().rcond() < 1e-15);
    }

    #[test]
    fn least_squares_recovers_consistent_system() {
        let a = CMat::from_fn(12, 4, |i, j| c(i as f64 * 0.3 + 1.0, 0.2 * i as f64).powi(j as i32));
        let x0 = CVec::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 0.25), c(1.0, 0.0)]);
        let b = &a * &x0;
        let x = least_squares(&a, &b).unwrap();
        assert!((x - x0).camax() < 1e-10);
    }
}
