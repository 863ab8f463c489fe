//! σ, φ¹(π, ·) and the boundary polynomials from the main-equation
//! solution.

use num_complex::Complex64 as C64;

use super::kernel::{node_factors, solve_main_equation, KernelTables};
use crate::contour::{Circle, ContourGrid};
use crate::error::{Error, Result};
use crate::forward::{analytic_derivative_from, characteristic_batch, pole_scale, OdeOptions};
use crate::linalg::{least_squares, CMat, CVec, Lu};
use crate::model::{horner, BoundaryPolynomials, Problem};
use crate::spectral::{partial_fractions, Pole};
use crate::spectrum::WeylDiffSamples;

/// Everything the x-sweep produces.
pub struct SweepOutput {
    /// σ − σ̃ on the x-grid
    pub sigma_hat: Vec<C64>,
    /// reciprocal condition of I + Q per x
    pub conditions: Vec<f64>,
    /// max over x and nodes of |φ|
    pub phi_max: f64,
    /// φ(π, μ_j)
    pub phi_pi: CVec,
    lu_pi: Lu,
}

/// Solves the main equation at every x and applies the σ formula
///   σ = σ̃ − (1/2πi)∮ (2φ̃φ − 1) M̂ dμ.
pub fn sweep_main_equation(tables: &KernelTables, mhat: &WeylDiffSamples, cond_floor: f64) -> Result<SweepOutput> {
    let n = tables.len();
    let s = node_factors(mhat);
    let s_sum: C64 = s.iter().sum();
    // contiguous x blocks; each block re-accumulates D̃ from x = 0 in the
    // same order, so results do not depend on the block count
    let blocks = crate::par::threads().clamp(1, 64);
    let size = n.div_ceil(blocks);
    let ranges: Vec<(usize, usize)> = (0..blocks).map(|b| (b * size, ((b + 1) * size).min(n))).filter(|r| r.0 < r.1).collect();
    let parts = crate::par::try_map(&ranges, |&(lo, hi)| {
        let mut stream = tables.d_stream();
        let mut out = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            stream.advance_to(i);
            let (sol, _) = solve_main_equation(i, stream.current(), tables, mhat, cond_floor)?;
            let pt = &tables.phi[i];
            let acc: C64 = (0..s.len()).map(|j| s[j] * pt[j] * sol.phi[j]).sum();
            let sh = -(2.0 * acc - s_sum);
            let pmax = sol.phi.iter().map(|v| v.norm()).fold(0.0, f64::max);
            out.push((sh, sol.condition_estimate, pmax));
        }
        Ok(out)
    })?;
    let flat: Vec<(C64, f64, f64)> = parts.into_iter().flatten().collect();
    let last = tables.last();
    let d_pi = tables.d_at(last);
    let (sol, lu_pi) = solve_main_equation(last, &d_pi, tables, mhat, cond_floor)?;
    Ok(SweepOutput {
        sigma_hat: flat.iter().map(|t| t.0).collect(),
        conditions: flat.iter().map(|t| t.1).collect(),
        phi_max: flat.iter().map(|t| t.2).fold(0.0, f64::max),
        phi_pi: sol.phi,
        lu_pi,
    })
}

/// Contour data at x = π used by the polynomial formulas.
#[derive(Debug, Clone)]
pub struct PiData {
    pub nodes: Vec<C64>,
    /// (1/2πi) w_k M̂(μ_k)
    pub factors: CVec,
    pub phi_tilde: CVec,
    pub phi_tilde_q: CVec,
    pub phi: CVec,
    pub phi_q: CVec,
}

/// φ¹(π, ·) on the nodes: solve (I + Q(π)) z = φ̃¹(π) − Q̃′φ, then
/// subtract σ̂(π)·φ(π).
pub fn phi_quasi_at_pi(tables: &KernelTables, sweep: &SweepOutput, mhat: &WeylDiffSamples) -> Result<PiData> {
    let last = tables.last();
    let s = node_factors(mhat);
    let pt = tables.phi[last].clone();
    let ptq = tables.phi_q[last].clone();
    let phi = sweep.phi_pi.clone();
    let inner: C64 = (0..s.len()).map(|k| s[k] * pt[k] * phi[k]).sum();
    let rhs = &ptq - pt.map(|v| v * inner);
    let z = sweep.lu_pi.solve(&rhs)?;
    let sh = sweep.sigma_hat[last];
    let phi_q = z - phi.map(|v| v * sh);
    Ok(PiData { nodes: tables.nodes.clone(), factors: s, phi_tilde: pt, phi_tilde_q: ptq, phi, phi_q })
}

impl PiData {
    /// Σ_k s_k (r̃₁(λ)φ̃¹(π,μ_k) + r̃₂(λ)φ̃(π,μ_k))/(λ − μ_k) · v_k
    fn kernel_sum(&self, lam: C64, r1t: C64, r2t: C64, v: &CVec) -> C64 {
        (0..self.nodes.len())
            .map(|k| self.factors[k] * (r1t * self.phi_tilde_q[k] + r2t * self.phi_tilde[k]) / (lam - self.nodes[k]) * v[k])
            .sum()
    }

    /// Z(λ) by direct quadrature; for λ inside Γ_N this includes the
    /// residue at μ = λ (see `z_at_model_head`).
    pub fn z_series(&self, tilde: &BoundaryPolynomials, lam: C64) -> C64 {
        let (r1t, r2t) = (tilde.r1(lam), tilde.r2(lam));
        r1t - self.kernel_sum(lam, r1t, r2t, &self.phi)
    }

    pub fn y_series(&self, tilde: &BoundaryPolynomials, lam: C64) -> C64 {
        let (r1t, r2t) = (tilde.r1(lam), tilde.r2(lam));
        let mid: C64 = (0..self.nodes.len())
            .map(|k| self.factors[k] * (self.phi_tilde[k] * self.phi[k] - 1.0))
            .sum();
        r2t - r1t * mid + self.kernel_sum(lam, r1t, r2t, &self.phi_q)
    }

    /// φ(π, λ) off the contour from φ(π, λ) = φ̃(π, λ) − (1/2πi)∮ D̃(π,λ,μ) M̂ φ dμ,
    /// with D̃(π,λ,μ) written through the Wronskian.
    pub fn phi_at(&self, lam: C64, phi_t: C64, phi_t_q: C64) -> C64 {
        let s: C64 = (0..self.nodes.len())
            .map(|k| {
                let d = (phi_t * self.phi_tilde_q[k] - phi_t_q * self.phi_tilde[k]) / (lam - self.nodes[k]);
                self.factors[k] * d * self.phi[k]
            })
            .sum();
        phi_t - s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyFitReport {
    /// max |V c − g| / max(1, max |g|) for g₁ and g₂
    pub residual_r1: f64,
    pub residual_r2: f64,
    /// |c_p − 1| before renormalisation
    pub leading_deviation: f64,
}

/// Σ_k (λ − λ_k)/(λ − λ̃_k) over heads repeated per multiplicity.
pub fn head_ratio(lam: C64, head: &[C64], head_tilde: &[C64]) -> C64 {
    head.iter().zip(head_tilde).map(|(a, b)| (lam - a) / (lam - b)).product()
}

fn fit_poly(pts: &[C64], vals: &[C64], p: usize, scale: f64) -> Result<(Vec<C64>, f64)> {
    let a = CMat::from_fn(pts.len(), p + 1, |i, j| (pts[i] / scale).powi(j as i32));
    let b = CVec::from_column_slice(vals);
    let x = least_squares(&a, &b)?;
    let res = (&a * &x - &b).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let size = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let coeffs = (0..=p).map(|j| x[j] / scale.powi(j as i32)).collect();
    Ok((coeffs, res / size))
}

/// Samples g₁ = Π·Z and g₂ = Π·Y on |λ| = 2·radius and fits polynomials
/// of degree p.
pub fn reconstruct_polynomials(
    pi: &PiData,
    tilde: &BoundaryPolynomials,
    head: &[C64],
    head_tilde: &[C64],
    radius: f64,
    fit_tol: f64,
) -> Result<(BoundaryPolynomials, PolyFitReport)> {
    let p = tilde.degree();
    let ns = 4 * (p + 1);
    let r = 2.0 * radius;
    let pts: Vec<C64> = (0..ns)
        .map(|s| C64::from_polar(r, 2.0 * std::f64::consts::PI * s as f64 / ns as f64 + 0.3))
        .collect();
    let mut g1 = Vec::with_capacity(ns);
    let mut g2 = Vec::with_capacity(ns);
    for &lam in &pts {
        let prod = head_ratio(lam, head, head_tilde);
        g1.push(prod * pi.z_series(tilde, lam));
        g2.push(prod * pi.y_series(tilde, lam));
    }
    let (mut c, res1) = fit_poly(&pts, &g1, p, r)?;
    let (d, res2) = fit_poly(&pts, &g2, p, r)?;
    let lead = (c[p] - 1.0).norm();
    if res1 > fit_tol || res2 > fit_tol {
        return Err(Error::DegreeViolation(format!(
            "polynomial fit residuals {res1:.3e} / {res2:.3e} exceed {fit_tol:.1e}"
        )));
    }
    if lead > 1e-8 {
        return Err(Error::DegreeViolation(format!("leading coefficient of r1 is off by {lead:.3e}")));
    }
    c[p] = C64::new(1.0, 0.0);
    let polys = BoundaryPolynomials::new(c, d)?;
    Ok((polys, PolyFitReport { residual_r1: res1, residual_r2: res2, leading_deviation: lead }))
}

/// Z and its derivatives at one model head eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct ZCheck {
    pub lambda: C64,
    pub multiplicity: usize,
    /// Z^{⟨k⟩}(λ̃_n), k < multiplicity
    pub z_derivs: Vec<C64>,
    pub scale: f64,
}

impl ZCheck {
    pub fn worst(&self) -> f64 {
        self.z_derivs.iter().map(|v| v.norm()).fold(0.0, f64::max) / self.scale
    }
}

/// Z at the model head eigenvalues. Inside Γ_N the direct quadrature
/// picks up the residue at μ = λ, so the analytic Z is
///   Z(λ) = Z_quad(λ) − Δ̃₁(λ)·φ(π,λ)·M̂(λ),
/// sampled on a small circle and read off by the Cauchy formula.
pub fn z_at_model_head(
    pi: &PiData,
    tilde: &Problem,
    head: &[Pole],
    head_tilde: &[Pole],
    grid: &ContourGrid,
    ode: OdeOptions,
) -> Result<Vec<ZCheck>> {
    let mut all: Vec<C64> = head.iter().chain(head_tilde).map(|q| q.lambda).collect();
    all.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out = Vec::new();
    for q in head_tilde {
        let others = all.iter().filter(|z| (**z - q.lambda).norm() > 1e-12).map(|z| (z - q.lambda).norm());
        let mut r = others.fold(0.25_f64, |a, d| a.min(0.4 * d));
        r = r.min(0.5 * (grid.radius() - q.lambda.norm()));
        let circle = Circle::new(q.lambda, r, 64);
        let ev = characteristic_batch(tilde, &circle.nodes, ode)?;
        let vals: Vec<C64> = ev
            .iter()
            .map(|e| {
                let z = e.lambda;
                let mh = partial_fractions(head, z) - partial_fractions(head_tilde, z);
                let phi = pi.phi_at(z, e.phi[0], e.phi[1]);
                pi.z_series(&tilde.polys, z) - e.d1 * phi * mh
            })
            .collect();
        let m = q.multiplicity();
        let z_derivs = (0..m).map(|k| analytic_derivative_from(&circle, &vals, k)).collect();
        let scale = pole_scale(q.lambda, tilde.p()).max(horner(tilde.polys.c(), q.lambda).norm());
        out.push(ZCheck { lambda: q.lambda, multiplicity: m, z_derivs, scale });
    }
    Ok(out)
}
