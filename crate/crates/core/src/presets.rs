//! Named model problems used by the CLI, the demo and the tests.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::model::{BoundaryPolynomials, PotentialSigma, Problem};

pub const PRESETS: &[(&str, &str)] = &[
    ("zero-p0", "sigma = 0, r1 = 1, r2 = 0: lambda_n = (n-1)^2"),
    ("double-p1", "sigma = 0, r1 = lambda, r2 = 0: double eigenvalue at 0"),
    ("coprime-p1", "sigma = 0, r1 = lambda + 1, r2 = pi*lambda: double eigenvalue at 0, coprime pair"),
    ("smooth-p0", "sigma = 0.2 cos x, r1 = 1, r2 = 0.5"),
    ("smooth-p1", "sigma = 0.3 sin 2x, r1 = lambda + 2, r2 = 0.5 lambda - 1"),
];

fn build(n_x: usize, sigma: impl Fn(f64) -> f64, c: &[f64], d: &[f64]) -> Result<Problem> {
    Ok(Problem::new(
        PotentialSigma::from_fn(n_x, |x| C64::new(sigma(x), 0.0))?,
        BoundaryPolynomials::from_real(c, d)?,
    ))
}

pub fn preset(name: &str, n_x: usize) -> Result<Problem> {
    match name {
        "zero-p0" => build(n_x, |_| 0.0, &[1.0], &[0.0]),
        "double-p1" => build(n_x, |_| 0.0, &[0.0, 1.0], &[0.0, 0.0]),
        "coprime-p1" => build(n_x, |_| 0.0, &[1.0, 1.0], &[0.0, PI]),
        "smooth-p0" => build(n_x, |x| 0.2 * x.cos(), &[1.0], &[0.5]),
        "smooth-p1" => build(n_x, |x| 0.3 * (2.0 * x).sin(), &[2.0, 1.0], &[-1.0, 0.5]),
        other => {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            Err(invalid(format!("unknown model \"{other}\"; choose one of {}", names.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for (name, _) in PRESETS {
            let pr = preset(name, 64).unwrap();
            assert_eq!(pr.sigma.len(), 64);
        }
        assert!(preset("nope", 64).is_err());
        assert!(preset("coprime-p1", 64).unwrap().polys.check_coprime().is_ok());
    }
}
