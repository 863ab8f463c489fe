//! Solutions φ, S, ψ at the ends of [0, π] and the characteristic
//! functions built from them.

pub mod ode;

use num_complex::Complex64 as C64;

use crate::contour::Circle;
use crate::error::{Error, Result};
use crate::model::{PotentialSigma, Problem};
pub use ode::{Direction, OdeOptions, QuasiState, StepPlan, Steps, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaKind {
    Delta0,
    Delta1,
}

/// Δ₀, Δ₁ and their λ-derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEval {
    pub lambda: C64,
    pub d0: C64,
    pub d1: C64,
    pub d0_prime: C64,
    pub d1_prime: C64,
    /// φ(π), φ¹(π)
    pub phi: [C64; 2],
    /// S(π), S¹(π)
    pub s: [C64; 2],
}

impl DeltaEval {
    pub fn weyl(&self) -> C64 {
        -self.d0 / self.d1
    }
}

pub fn phi_init() -> QuasiState {
    QuasiState::real(1.0, 0.0)
}

pub fn s_init() -> QuasiState {
    QuasiState::real(0.0, 1.0)
}

/// (φ(π,λ), φ¹(π,λ), S(π,λ), S¹(π,λ))
pub fn phi_s_at_pi(sigma: &PotentialSigma, lam: C64, opts: OdeOptions) -> Result<(C64, C64, C64, C64)> {
    let f = ode::endpoint(sigma, lam, phi_init(), Direction::Forward, Steps::Adaptive(opts))?;
    let s = ode::endpoint(sigma, lam, s_init(), Direction::Forward, Steps::Adaptive(opts))?;
    Ok((f.y, f.y1, s.y, s.y1))
}

/// Δ₀, Δ₁ with exact λ-derivatives from the variational equations.
pub fn characteristic(problem: &Problem, lam: C64, steps: Steps<'_>) -> Result<DeltaEval> {
    let owned;
    let steps = match steps {
        Steps::Adaptive(o) => {
            owned = ode::adaptive_plan(&problem.sigma, lam, Direction::Forward, o)?;
            Steps::Planned(&owned)
        }
        s => s,
    };
    let f = ode::endpoint_with_tangent(&problem.sigma, lam, phi_init(), Direction::Forward, steps)?;
    let s = ode::endpoint_with_tangent(&problem.sigma, lam, s_init(), Direction::Forward, steps)?;
    let pl = &problem.polys;
    let (r1, r2, r1p, r2p) = (pl.r1(lam), pl.r2(lam), pl.r1_prime(lam), pl.r2_prime(lam));
    Ok(DeltaEval {
        lambda: lam,
        d1: r1 * f[1] + r2 * f[0],
        d1_prime: r1p * f[1] + r1 * f[3] + r2p * f[0] + r2 * f[2],
        d0: r1 * s[1] + r2 * s[0],
        d0_prime: r1p * s[1] + r1 * s[3] + r2p * s[0] + r2 * s[2],
        phi: [f[0], f[1]],
        s: [s[0], s[1]],
    })
}

/// Characteristic values at many points sharing one frozen step plan.
pub fn characteristic_batch(problem: &Problem, lams: &[C64], opts: OdeOptions) -> Result<Vec<DeltaEval>> {
    let plan = ode::plan_for_points(&problem.sigma, lams, opts)?;
    crate::par::try_map(lams, |&l| characteristic(problem, l, Steps::Planned(&plan)))
}

pub fn delta(problem: &Problem, lam: C64, which: DeltaKind, opts: OdeOptions) -> Result<C64> {
    let (f, f1, s, s1) = phi_s_at_pi(&problem.sigma, lam, opts)?;
    let (r1, r2) = (problem.polys.r1(lam), problem.polys.r2(lam));
    Ok(match which {
        DeltaKind::Delta1 => r1 * f1 + r2 * f,
        DeltaKind::Delta0 => r1 * s1 + r2 * s,
    })
}

/// max(1, |λ|^{p+1})
pub fn pole_scale(lam: C64, p: usize) -> f64 {
    lam.norm().powi(p as i32 + 1).max(1.0)
}

/// M = −Δ₀/Δ₁
pub fn weyl(problem: &Problem, lam: C64, opts: OdeOptions) -> Result<C64> {
    let d1 = delta(problem, lam, DeltaKind::Delta1, opts)?;
    if d1.norm() < 1e-12 * pole_scale(lam, problem.p()) {
        return Err(Error::NearPole(format!("lambda = {lam} is at an eigenvalue (|Delta1| = {:.3e})", d1.norm())));
    }
    let d0 = delta(problem, lam, DeltaKind::Delta0, opts)?;
    Ok(-d0 / d1)
}

/// ψ(0, λ) with ψ(π) = r₁(λ), ψ¹(π) = −r₂(λ).
pub fn psi_at_zero(problem: &Problem, lam: C64, opts: OdeOptions) -> Result<C64> {
    let init = QuasiState::new(problem.polys.r1(lam), -problem.polys.r2(lam));
    Ok(ode::endpoint(&problem.sigma, lam, init, Direction::Backward, Steps::Adaptive(opts))?.y)
}

/// f(λ) = r₁(λ) − ψ(0,λ)·φ(π,λ), which vanishes to order m_n at an
/// eigenvalue of multiplicity m_n. (With the plus sign f(λ_n) = 2r₁(λ_n):
/// the eigenfunction relation ψ = βφ gives ψ(0)φ(π) = r₁ there.)
pub fn vanishing_f(problem: &Problem, lam: C64, steps: Steps<'_>) -> Result<C64> {
    let init = QuasiState::new(problem.polys.r1(lam), -problem.polys.r2(lam));
    let psi0 = ode::endpoint(&problem.sigma, lam, init, Direction::Backward, steps)?.y;
    let phi = ode::endpoint(&problem.sigma, lam, phi_init(), Direction::Forward, steps)?.y;
    Ok(problem.polys.r1(lam) - psi0 * phi)
}

/// f^{⟨j⟩}(λ₀) = j!/(2πi) ∮ f(z)/(z − λ₀)^{j+1} dz on a circle of radius r.
pub fn analytic_derivative(f: impl Fn(C64) -> C64 + Sync + Send, lam0: C64, order: usize, radius: f64, m: usize) -> C64 {
    let circle = Circle::new(lam0, radius, m);
    let vals = crate::par::map(&circle.nodes, |&z| f(z));
    analytic_derivative_from(&circle, &vals, order)
}

/// Same as `analytic_derivative` from precomputed node values.
pub fn analytic_derivative_from(circle: &Circle, values: &[C64], order: usize) -> C64 {
    let fact: f64 = (1..=order).map(|k| k as f64).product();
    let s: C64 = circle
        .nodes
        .iter()
        .zip(values)
        .map(|(z, v)| v / (z - circle.center).powi(order as i32))
        .sum();
    s * fact / circle.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundaryPolynomials;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn zero_problem(cc: &[f64], dd: &[f64]) -> Problem {
        Problem::new(PotentialSigma::zero(512).unwrap(), BoundaryPolynomials::from_real(cc, dd).unwrap())
    }

    #[test]
    fn phi_s_closed_forms() {
        let s = PotentialSigma::zero(512).unwrap();
        let o = OdeOptions::default();
        let (a, b, cc, d) = phi_s_at_pi(&s, c(4.0, 0.0), o).unwrap();
        for (got, want) in [(a, 1.0), (b, 0.0), (cc, 0.0), (d, 1.0)] {
            assert!((got - want).norm() < 1e-9);
        }
        let (a, b, cc, d) = phi_s_at_pi(&s, c(0.0, 0.0), o).unwrap();
        for (got, want) in [(a, 1.0), (b, 0.0), (cc, PI), (d, 1.0)] {
            assert!((got - want).norm() < 1e-9);
        }
    }

    #[test]
    fn wronskian_is_one() {
        let s = PotentialSigma::from_fn(300, |x| c(0.4 * (3.0 * x).sin() + 0.2, 0.05 * x)).unwrap();
        for lam in [c(0.0, 0.0), c(-3.0, 1.0), c(25.0, 0.0), c(10.0, -8.0)] {
            let (f, f1, ss, s1) = phi_s_at_pi(&s, lam, OdeOptions::default()).unwrap();
            assert!((f * s1 - f1 * ss - 1.0).norm() < 1e-9, "lam={lam}");
        }
    }

    #[test]
    fn delta_examples() {
        let o = OdeOptions::default();
        let p0 = zero_problem(&[1.0], &[0.0]);
        assert!(delta(&p0, c(4.0, 0.0), DeltaKind::Delta1, o).unwrap().norm() < 1e-9);
        assert!((delta(&p0, c(0.0, 0.0), DeltaKind::Delta0, o).unwrap() - 1.0).norm() < 1e-9);
        let p1 = zero_problem(&[0.0, 1.0], &[0.0, 0.0]);
        assert!((delta(&p1, c(2.25, 0.0), DeltaKind::Delta1, o).unwrap() - 3.375).norm() < 1e-9);
    }

    #[test]
    fn weyl_examples() {
        let o = OdeOptions::default();
        let p0 = zero_problem(&[1.0], &[0.0]);
        assert!(weyl(&p0, c(0.25, 0.0), o).unwrap().norm() < 1e-9);
        // cos ρπ/(ρ sin ρπ) at ρ = i is cosh π/(i·i sinh π) = −coth π
        let coth = PI.cosh() / PI.sinh();
        assert!((weyl(&p0, c(-1.0, 0.0), o).unwrap() + coth).norm() < 1e-9);
        assert!(matches!(weyl(&p0, c(1.0, 0.0), o), Err(Error::NearPole(_))));
    }

    #[test]
    fn psi_examples() {
        let o = OdeOptions::default();
        let p0 = zero_problem(&[1.0], &[0.0]);
        assert!((psi_at_zero(&p0, c(1.0, 0.0), o).unwrap() + 1.0).norm() < 1e-9);
        let q = Problem::new(
            PotentialSigma::from_fn(256, |x| c(0.3 * (2.0 * x).sin(), 0.0)).unwrap(),
            BoundaryPolynomials::from_real(&[0.5, 1.0], &[1.0, 0.2]).unwrap(),
        );
        for k in 0..20 {
            let lam = c(-4.0 + 1.37 * k as f64, 0.9 * ((k * 7 % 5) as f64 - 2.0));
            let d1 = delta(&q, lam, DeltaKind::Delta1, o).unwrap();
            let m = weyl(&q, lam, o).unwrap();
            let alt = -psi_at_zero(&q, lam, o).unwrap() / d1;
            assert!((m - alt).norm() < 1e-8 * (1.0 + m.norm()), "lam={lam}");
        }
    }

    #[test]
    fn f_vanishes_at_eigenvalues() {
        let o = OdeOptions::default();
        // zero potential, r1 = 1: f = 1 − cos²ρπ, a double zero in ρ at ρ = n
        let p0 = zero_problem(&[1.0], &[0.0]);
        for n in 0..5 {
            let lam = c((n * n) as f64, 0.0);
            assert!(vanishing_f(&p0, lam, Steps::Adaptive(o)).unwrap().norm() < 1e-9);
        }
        assert!((vanishing_f(&p0, c(0.25, 0.0), Steps::Adaptive(o)).unwrap() - 1.0).norm() < 1e-9);
        // double eigenvalue at 0 for r1 = λ, r2 = 0
        let p1 = zero_problem(&[0.0, 1.0], &[0.0, 0.0]);
        let f = |z: C64| vanishing_f(&p1, z, Steps::Adaptive(o)).unwrap();
        for k in 0..2 {
            assert!(analytic_derivative(f, c(0.0, 0.0), k, 0.2, 64).norm() < 1e-9);
        }
    }

    #[test]
    fn derivative_examples() {
        let d = analytic_derivative(|z| z * z, c(1.0, 0.0), 1, 0.5, 64);
        assert!((d - 2.0).norm() < 1e-12);
        let d = analytic_derivative(|z| z.exp(), c(0.0, 0.0), 3, 0.5, 64);
        assert!((d - 1.0).norm() < 1e-10);
    }

    #[test]
    fn second_derivative_of_delta1_double_zero_model() {
        // Δ₁ = −λρ sin ρπ = −λ²π + λ³π³/6 − …, so Δ₁'' (0) = −2π
        let p1 = zero_problem(&[0.0, 1.0], &[0.0, 0.0]);
        let circle = Circle::new(c(0.0, 0.0), 0.5, 64);
        let vals = characteristic_batch(&p1, &circle.nodes, OdeOptions::default()).unwrap();
        let d1: Vec<C64> = vals.iter().map(|v| v.d1).collect();
        let got = analytic_derivative_from(&circle, &d1, 2);
        assert!((got + 2.0 * PI).norm() < 1e-8, "{got}");
    }

    #[test]
    fn tangent_derivative_matches_contour_derivative() {
        let q = Problem::new(
            PotentialSigma::from_fn(256, |x| c(0.3 * (2.0 * x).sin(), 0.0)).unwrap(),
            BoundaryPolynomials::from_real(&[0.5, 1.0], &[1.0, 0.2]).unwrap(),
        );
        let lam = c(2.0, 0.5);
        let e = characteristic(&q, lam, Steps::Adaptive(OdeOptions::default())).unwrap();
        let circle = Circle::new(lam, 0.5, 64);
        let vals = characteristic_batch(&q, &circle.nodes, OdeOptions::default()).unwrap();
        let d1: Vec<C64> = vals.iter().map(|v| v.d1).collect();
        let d0: Vec<C64> = vals.iter().map(|v| v.d0).collect();
        assert!((analytic_derivative_from(&circle, &d1, 1) - e.d1_prime).norm() < 1e-8 * e.d1_prime.norm().max(1.0));
        assert!((analytic_derivative_from(&circle, &d0, 1) - e.d0_prime).norm() < 1e-8 * e.d0_prime.norm().max(1.0));
    }
}
