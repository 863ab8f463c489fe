//! Generalized Cauchy data (G, J, C₀..C_p, D₀..D_{p−1}):
//!
//!   Δ₀ = ρ^{2p} cos ρπ + ρ^{2p} ∫₀^π J(t) cos ρt dt + Σ_{n<p} D_n ρ^{2n}
//!   Δ₁ = −ρ^{2p+1} sin ρπ + ρ^{2p+1} ∫₀^π G(t) sin ρt dt + Σ_{n≤p} C_n ρ^{2n}
//!
//! G and J are stored as Legendre series in u = 2t/π − 1. Extraction is a
//! least-squares fit of forward-solved Δ₀, Δ₁ at ρ = k/2.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::contour::{gamma_radius, make_contour};
use crate::error::{invalid, Error, Result};
use crate::forward::{characteristic_batch, OdeOptions};
use crate::inverse::{invert_report_with, tail_l2, tilde_spectrum, InverseOptions, InverseRun};
use crate::linalg::{least_squares, CMat, CVec};
use crate::model::{horner, horner_deriv, Problem};
use crate::spectral::{rho, Pole, SpectralData};
use crate::spectrum::{count_zeros, locate_zeros, nodes_for, weight_numbers_with, CharValues, Located, Sample, SpectrumOptions, ZeroTarget};

/// Quality numbers of an extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// max scaled least-squares residual for Δ₀
    pub residual_0: f64,
    /// same for Δ₁
    pub residual_1: f64,
    /// max scaled error at points not used in the fit
    pub held_out: f64,
}

impl FitReport {
    pub fn worst(&self) -> f64 {
        self.residual_0.max(self.residual_1).max(self.held_out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub p: usize,
    /// Legendre coefficients of G, k_f of them
    pub g: Vec<C64>,
    /// Legendre coefficients of J
    pub j: Vec<C64>,
    /// C₀..C_p
    pub c: Vec<C64>,
    /// D₀..D_{p−1}
    pub d: Vec<C64>,
    pub fit: FitReport,
}

impl CauchyData {
    pub fn new(p: usize, g: Vec<C64>, j: Vec<C64>, c: Vec<C64>, d: Vec<C64>, fit: FitReport) -> Result<Self> {
        if g.is_empty() || g.len() != j.len() {
            return Err(invalid(format!("G and J need the same nonzero length, got {} and {}", g.len(), j.len())));
        }
        if c.len() != p + 1 || d.len() != p {
            return Err(invalid(format!("p = {p} needs {} C and {p} D constants, got {} and {}", p + 1, c.len(), d.len())));
        }
        if g.iter().chain(&j).chain(&c).chain(&d).any(|v| !v.is_finite()) {
            return Err(invalid("Cauchy data contain a non-finite value"));
        }
        Ok(Self { p, g, j, c, d, fit })
    }

    /// All-zero data: σ ≡ 0, r₁ = λ^p, r₂ = 0.
    pub fn zero(p: usize, k_f: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        let fit = FitReport { residual_0: 0.0, residual_1: 0.0, held_out: 0.0 };
        Self { p, g: vec![z; k_f], j: vec![z; k_f], c: vec![z; p + 1], d: vec![z; p], fit }
    }

    pub fn k_f(&self) -> usize {
        self.g.len()
    }

    /// G at n uniform points of [0, π]
    pub fn g_samples(&self, n: usize) -> Vec<C64> {
        uniform_samples(&self.g, n)
    }

    pub fn j_samples(&self, n: usize) -> Vec<C64> {
        uniform_samples(&self.j, n)
    }
}

fn uniform_samples(coeffs: &[C64], n: usize) -> Vec<C64> {
    let mut row = vec![0.0; coeffs.len()];
    (0..n)
        .map(|i| {
            let t = if n > 1 { PI * i as f64 / (n - 1) as f64 } else { 0.0 };
            legendre_row(2.0 * t / PI - 1.0, &mut row);
            row.iter().zip(coeffs).map(|(p, c)| c * p).sum()
        })
        .collect()
}

/// P_0(u)..P_{K−1}(u)
fn legendre_row(u: f64, out: &mut [f64]) {
    let k = out.len();
    if k == 0 {
        return;
    }
    out[0] = 1.0;
    if k > 1 {
        out[1] = u;
    }
    for n in 1..k.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * u * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

/// Legendre coefficients on [0, π] of f sampled through Gauss–Legendre.
pub fn legendre_projection(f: impl Fn(f64) -> C64, k_f: usize) -> Vec<C64> {
    let rule = gauss_rule(2 * k_f + 64);
    let mut row = vec![0.0; k_f];
    let mut out = vec![C64::new(0.0, 0.0); k_f];
    for &(x, w) in rule.as_node_weight_pairs() {
        let t = 0.5 * PI * (x + 1.0);
        legendre_row(x, &mut row);
        let v = f(t) * (0.5 * PI * w);
        for m in 0..k_f {
            out[m] += v * row[m];
        }
    }
    for (m, o) in out.iter_mut().enumerate() {
        *o *= (2 * m + 1) as f64 / PI;
    }
    out
}

/// (2m+1)/π-normalised L₂ norm of a Legendre series on [0, π].
pub fn legendre_l2(coeffs: &[C64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| c.norm_sqr() * PI / (2 * m + 1) as f64)
        .sum::<f64>()
        .sqrt()
}

fn gauss_rule(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("positive"))
}

const LEVELS: usize = 9;

/// Node table on [0, π]: t, w·π/2, and G, J at the nodes.
struct Table {
    t: Vec<f64>,
    w: Vec<f64>,
    g: Vec<C64>,
    j: Vec<C64>,
    g_abs: f64,
    j_abs: f64,
}

/// Evaluates Δ₀, Δ₁ and their λ-derivatives from Cauchy data. Quadrature
/// tables are built lazily per size level.
pub struct CauchyEval {
    data: CauchyData,
    tables: [OnceLock<Table>; LEVELS],
}

/// Δ values at one λ with the size of the terms that cancel in each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyDeltas {
    pub d0: C64,
    pub d1: C64,
    pub d0_prime: C64,
    pub d1_prime: C64,
    pub scale0: f64,
    pub scale1: f64,
}

fn sinc(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

impl CauchyEval {
    pub fn new(data: CauchyData) -> Self {
        Self { data, tables: Default::default() }
    }

    pub fn data(&self) -> &CauchyData {
        &self.data
    }

    fn level_for(&self, r: C64) -> usize {
        let need = self.data.k_f() as f64 + 2.0 * r.norm() + 32.0;
        (0..LEVELS).find(|&l| (64usize << l) as f64 >= need).unwrap_or(LEVELS - 1)
    }

    fn table(&self, level: usize) -> &Table {
        self.tables[level].get_or_init(|| {
            let rule = gauss_rule(64 << level);
            let k = self.data.k_f();
            let mut row = vec![0.0; k];
            let mut tab = Table { t: Vec::new(), w: Vec::new(), g: Vec::new(), j: Vec::new(), g_abs: 0.0, j_abs: 0.0 };
            for &(x, w) in rule.as_node_weight_pairs() {
                legendre_row(x, &mut row);
                let g: C64 = row.iter().zip(&self.data.g).map(|(p, c)| c * p).sum();
                let j: C64 = row.iter().zip(&self.data.j).map(|(p, c)| c * p).sum();
                tab.t.push(0.5 * PI * (x + 1.0));
                tab.w.push(0.5 * PI * w);
                tab.g_abs += 0.5 * PI * w * g.norm();
                tab.j_abs += 0.5 * PI * w * j.norm();
                tab.g.push(g);
                tab.j.push(j);
            }
            tab
        })
    }

    pub fn eval(&self, lam: C64) -> CauchyDeltas {
        let p = self.data.p;
        let r = rho(lam);
        let tab = self.table(self.level_for(r));
        let mut sg = C64::new(0.0, 0.0);
        let mut sgp = C64::new(0.0, 0.0);
        let mut sj = C64::new(0.0, 0.0);
        let mut sjp = C64::new(0.0, 0.0);
        for i in 0..tab.t.len() {
            let t = tab.t[i];
            let z = r * t;
            let (s, c, sc) = (z.sin(), z.cos(), sinc(z));
            let wg = tab.g[i] * tab.w[i];
            let wj = tab.j[i] * tab.w[i];
            // ρ sin ρt and cos ρt with their λ-derivatives, all entire in λ
            sg += wg * r * s;
            sgp += wg * (0.5 * t) * (sc + c);
            sj += wj * c;
            sjp += wj * (-0.5 * t * t) * sc;
        }
        let zp = r * PI;
        let a1 = -r * zp.sin() + sg;
        let a1p = -(0.5 * PI) * (sinc(zp) + zp.cos()) + sgp;
        let a0 = zp.cos() + sj;
        let a0p = -(0.5 * PI * PI) * sinc(zp) + sjp;
        let lp = lam.powi(p as i32);
        let lpp = if p == 0 { C64::new(0.0, 0.0) } else { p as f64 * lam.powi(p as i32 - 1) };
        let grow = (r.im.abs() * PI).exp();
        let d1 = lp * a1 + horner(&self.data.c, lam);
        let d0 = lp * a0 + horner(&self.data.d, lam);
        let poly_size = |cs: &[C64]| cs.iter().enumerate().map(|(n, c)| c.norm() * lam.norm().powi(n as i32)).sum::<f64>();
        CauchyDeltas {
            d0,
            d1,
            d0_prime: lpp * a0 + lp * a0p + horner_deriv(&self.data.d, lam),
            d1_prime: lpp * a1 + lp * a1p + horner_deriv(&self.data.c, lam),
            scale0: lp.norm() * grow * (1.0 + tab.j_abs) + poly_size(&self.data.d),
            scale1: lp.norm() * r.norm() * grow * (1.0 + tab.g_abs) + poly_size(&self.data.c),
        }
    }

    /// (Δ₀, Δ₁)
    pub fn delta(&self, lam: C64) -> (C64, C64) {
        let e = self.eval(lam);
        (e.d0, e.d1)
    }
}

pub fn delta_from_cauchy(cd: &CauchyData, lam: C64) -> (C64, C64) {
    CauchyEval::new(cd.clone()).delta(lam)
}

/// Δ_j from Cauchy data as a zero-finding target.
pub struct CauchyTarget<'a> {
    pub eval: &'a CauchyEval,
    pub which: usize,
}

impl ZeroTarget for CauchyTarget<'_> {
    fn eval_batch(&self, zs: &[C64]) -> Result<Vec<Sample>> {
        Ok(crate::par::map(zs, |&z| {
            let e = self.eval.eval(z);
            if self.which == 0 {
                Sample { f: e.d0, df: e.d0_prime, scale: e.scale0 }
            } else {
                Sample { f: e.d1, df: e.d1_prime, scale: e.scale1 }
            }
        }))
    }

    fn noise(&self) -> f64 {
        1e-14
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyOptions {
    pub k_f: usize,
    pub fit_tol: f64,
    pub verify_tol: f64,
    pub ode: OdeOptions,
}

impl Default for CauchyOptions {
    fn default() -> Self {
        Self::from(&Config::default())
    }
}

impl From<&Config> for CauchyOptions {
    fn from(c: &Config) -> Self {
        Self { k_f: c.cauchy.k_f, fit_tol: c.cauchy.fit_tol, verify_tol: c.cauchy.verify_tol, ode: OdeOptions::from(&c.forward) }
    }
}

/// Size of Δ_j at ρ for relative comparisons.
fn natural_scale(r: C64, p: usize, which: usize) -> f64 {
    let deg = (2 * p + which) as i32;
    r.norm().max(1.0).powi(deg) * (r.im.abs() * PI).exp()
}

/// Points not used by the fit: shifted real ρ and a complex ray.
fn held_out_points(k_f: usize) -> Vec<C64> {
    let top = (k_f as f64 / 2.0).max(4.0);
    let mut pts: Vec<C64> = (0..16).map(|i| C64::new(0.237 + top * i as f64 / 16.0, 0.0)).collect();
    pts.extend((0..8).map(|i| C64::from_polar(0.4 + 1.3 * i as f64, 0.3)));
    pts.into_iter().map(|r| r * r).collect()
}

/// Max scaled disagreement between two (Δ₀, Δ₁) sources at `lams`.
pub fn compare_deltas(p: usize, lams: &[C64], a: &[(C64, C64)], b: &[(C64, C64)]) -> f64 {
    lams.iter()
        .zip(a.iter().zip(b))
        .map(|(&lam, (x, y))| {
            let r = rho(lam);
            ((x.0 - y.0).norm() / natural_scale(r, p, 0)).max((x.1 - y.1).norm() / natural_scale(r, p, 1))
        })
        .fold(0.0, f64::max)
}

/// Least-squares fit for one of Δ₀ (which = 0) or Δ₁ (which = 1).
/// Returns (series coefficients, constants, residual).
fn fit_one(rhos: &[f64], vals: &[C64], p: usize, k_f: usize, which: usize) -> Result<(Vec<C64>, Vec<C64>, f64)> {
    let n_const = p + which;
    let cols = k_f + n_const;
    let rows = rhos.len();
    let rule = gauss_rule(k_f + (2.0 * rhos.iter().cloned().fold(0.0, f64::max)) as usize + 64);
    let nodes: Vec<(f64, f64, Vec<f64>)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| {
            let mut row = vec![0.0; k_f];
            legendre_row(x, &mut row);
            (0.5 * PI * (x + 1.0), 0.5 * PI * w, row)
        })
        .collect();
    let mut a = CMat::zeros(rows, cols);
    let mut b = CVec::zeros(rows);
    let mut size: f64 = 0.0;
    for (k, &r) in rhos.iter().enumerate() {
        let lam = r * r;
        let lp = lam.powi(p as i32);
        let scale = r.max(1.0).powi((2 * p + which) as i32);
        let mut basis = vec![0.0; k_f];
        for (t, w, row) in &nodes {
            let trig = if which == 1 { r * (r * t).sin() } else { (r * t).cos() };
            for m in 0..k_f {
                basis[m] += w * row[m] * trig;
            }
        }
        for m in 0..k_f {
            a[(k, m)] = C64::new(lp * basis[m] / scale, 0.0);
        }
        for n in 0..n_const {
            a[(k, k_f + n)] = C64::new(lam.powi(n as i32) / scale, 0.0);
        }
        let main = if which == 1 { -lp * r * (r * PI).sin() } else { lp * (r * PI).cos() };
        b[k] = (vals[k] - main) / scale;
        size = size.max(vals[k].norm() / scale);
    }
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm().max(1e-300)).collect();
    for (j, n) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let x = least_squares(&a, &b)?;
    let res = (&a * &x - &b).iter().map(|v| v.norm()).fold(0.0, f64::max) / size.max(1e-300);
    let coef: Vec<C64> = (0..cols).map(|j| x[j] / norms[j]).collect();
    Ok((coef[..k_f].to_vec(), coef[k_f..].to_vec(), res))
}

/// Fits Cauchy data to forward-solved Δ₀, Δ₁ at ρ_k = k/2,
/// k = 1..2(K_F + p + 2).
pub fn cauchy_from_problem(problem: &Problem, opts: &CauchyOptions) -> Result<CauchyData> {
    let k_f = opts.k_f;
    if k_f == 0 {
        return Err(invalid("k_f must be positive"));
    }
    let p = problem.p();
    let ks = 2 * (k_f + p + 2);
    let rhos: Vec<f64> = (1..=ks).map(|k| k as f64 / 2.0).collect();
    let lams: Vec<C64> = rhos.iter().map(|r| C64::new(r * r, 0.0)).collect();
    let ev = characteristic_batch(problem, &lams, opts.ode)?;
    let d0: Vec<C64> = ev.iter().map(|e| e.d0).collect();
    let d1: Vec<C64> = ev.iter().map(|e| e.d1).collect();
    let (fits0, fits1) = crate::par::join(|| fit_one(&rhos, &d0, p, k_f, 0), || fit_one(&rhos, &d1, p, k_f, 1));
    let (j, d, residual_0) = fits0?;
    let (g, c, residual_1) = fits1?;
    let fit = FitReport { residual_0, residual_1, held_out: 0.0 };
    let mut cd = CauchyData::new(p, g, j, c, d, fit)?;
    let hold = held_out_points(k_f);
    let truth: Vec<(C64, C64)> = characteristic_batch(problem, &hold, opts.ode)?.iter().map(|e| (e.d0, e.d1)).collect();
    let eval = CauchyEval::new(cd.clone());
    let mine: Vec<(C64, C64)> = hold.iter().map(|&l| eval.delta(l)).collect();
    cd.fit.held_out = compare_deltas(p, &hold, &mine, &truth);
    let worst = cd.fit.worst();
    if !(worst <= opts.fit_tol) {
        return Err(Error::FitResidualTooLarge(format!(
            "Cauchy fit residual {worst:.3e} exceeds {:.1e} with k_f = {k_f}; raise k_f or refine the sigma grid",
            opts.fit_tol
        )));
    }
    Ok(cd)
}

/// Zeros of Δ_j numbered by √θ_{nj} ≈ n − p − (j+1)/2.
pub fn zeros_from_cauchy(eval: &CauchyEval, which: usize, opts: &SpectrumOptions) -> Result<Located> {
    if which > 1 {
        return Err(invalid("which must be 0 or 1"));
    }
    let target = CauchyTarget { eval, which };
    let shift = if which == 0 { 0.5 } else { 0.0 };
    locate_zeros(&target, eval.data().p, shift, opts)
}

/// Eigenvalues and weight numbers implied by Cauchy data.
pub fn spectral_data_from_cauchy(eval: &CauchyEval, opts: &SpectrumOptions) -> Result<SpectralData> {
    let located = zeros_from_cauchy(eval, 1, opts)?;
    let batch = |zs: &[C64]| -> Result<Vec<CharValues>> {
        Ok(crate::par::map(zs, |&z| {
            let e = eval.eval(z);
            (e.d0, e.d1, e.d1_prime)
        }))
    };
    let point = |z: C64| -> Result<CharValues> {
        let e = eval.eval(z);
        Ok((e.d0, e.d1, e.d1_prime))
    };
    let weights = weight_numbers_with(&located, opts, &batch, &point)?;
    let poles = located.clusters.iter().zip(weights).map(|(c, alphas)| Pole { lambda: c.center, alphas }).collect();
    SpectralData::from_poles(eval.data().p, located.n_head, poles)
}

/// Spectral data of perturbed Cauchy data measured against the model.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySpectral {
    pub target: SpectralData,
    pub tilde: SpectralData,
    pub n_cut: usize,
    /// max |M − M̃| on Γ_N with both Weyl functions from Δ₀/Δ₁
    pub hat_m: f64,
    /// (Σ_{n≥N} (|√θ_n − √θ̃_n| + |α_n − α̃_n|)²)^{1/2}
    pub tail_l2: f64,
}

pub fn spectral_from_cauchy(cd: &CauchyData, tilde: &CauchyData, opts: &SpectrumOptions) -> Result<CauchySpectral> {
    if cd.p != tilde.p {
        return Err(invalid(format!("degree mismatch: {} vs {}", cd.p, tilde.p)));
    }
    let (ev, evt) = (CauchyEval::new(cd.clone()), CauchyEval::new(tilde.clone()));
    let tilde_sd = spectral_data_from_cauchy(&evt, opts)?;
    let n = tilde_sd.n_head;
    let target = spectral_data_from_cauchy(&ev, opts)?;
    let radius = gamma_radius(n, cd.p);
    if radius > 0.0 {
        let k = count_zeros(&CauchyTarget { eval: &ev, which: 1 }, C64::new(0.0, 0.0), radius, nodes_for(radius, opts.m_q))?;
        if k != n - 1 {
            return Err(Error::HeadEscaped(format!("{k} zeros of Delta1 inside Gamma_{n}, expected {}", n - 1)));
        }
    }
    let hat_m = if radius > 0.0 {
        let grid = make_contour(n, cd.p, opts.m_q)?;
        grid.nodes()
            .iter()
            .map(|&mu| {
                let (a, b) = (ev.eval(mu), evt.eval(mu));
                (-a.d0 / a.d1 + b.d0 / b.d1).norm()
            })
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let tail = tail_l2(&tilde_sd, &target, n);
    Ok(CauchySpectral { target, tilde: tilde_sd, n_cut: n, hat_m, tail_l2: tail })
}

/// Re-extraction check of a Cauchy reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyCheck {
    /// max scaled Δ₀/Δ₁ disagreement at held-out points
    pub residual: f64,
    pub passed: bool,
}

pub struct CauchyRun {
    pub run: InverseRun,
    pub target: SpectralData,
    pub check: CauchyCheck,
}

/// Reconstruction from Cauchy data: the spectral inverse problem on the
/// data's eigenvalues and weights, then re-extraction of Cauchy data from
/// the result and comparison of Δ₀, Δ₁ away from the fit points.
pub fn invert_from_cauchy_report(tilde: &Problem, cd: &CauchyData, iopts: &InverseOptions, copts: &CauchyOptions) -> Result<CauchyRun> {
    invert_from_cauchy_with(tilde, None, cd, iopts, copts)
}

/// As above, reusing the model's spectral data when given.
pub fn invert_from_cauchy_with(
    tilde: &Problem,
    tilde_data: Option<&SpectralData>,
    cd: &CauchyData,
    iopts: &InverseOptions,
    copts: &CauchyOptions,
) -> Result<CauchyRun> {
    if tilde.p() != cd.p {
        return Err(invalid(format!("degree mismatch: model p = {}, data p = {}", tilde.p(), cd.p)));
    }
    let eval = CauchyEval::new(cd.clone());
    let target = spectral_data_from_cauchy(&eval, &iopts.spectrum)?;
    let tilde_data = match tilde_data {
        Some(sd) if sd.len() >= target.len() => sd.clone(),
        _ => tilde_spectrum(tilde, target.len(), iopts)?,
    };
    let mut run = invert_report_with(tilde, &tilde_data, &target, iopts)?;
    let copts_hat = CauchyOptions { k_f: cd.k_f(), fit_tol: f64::INFINITY, ..*copts };
    let back = cauchy_from_problem(&run.result.problem, &copts_hat)?;
    let back = CauchyEval::new(back);
    let mut hold = held_out_points(cd.k_f());
    if let Ok(grid) = make_contour(run.cut.n_cut, cd.p, 32) {
        hold.extend_from_slice(grid.nodes());
    }
    let a: Vec<(C64, C64)> = hold.iter().map(|&l| eval.delta(l)).collect();
    let b: Vec<(C64, C64)> = hold.iter().map(|&l| back.delta(l)).collect();
    let residual = compare_deltas(cd.p, &hold, &a, &b);
    let check = CauchyCheck { residual, passed: residual <= copts.verify_tol };
    if let Some(v) = run.result.diagnostics.verification.as_mut() {
        v.passed &= check.passed;
    }
    run.result.diagnostics.cauchy_residual = Some(residual);
    Ok(CauchyRun { run, target, check })
}

/// As `invert_from_cauchy_report`, failing on a verification mismatch.
pub fn invert_from_cauchy(tilde: &Problem, cd: &CauchyData, iopts: &InverseOptions, copts: &CauchyOptions) -> Result<CauchyRun> {
    let r = invert_from_cauchy_report(tilde, cd, iopts, copts)?;
    if !r.check.passed {
        return Err(Error::VerificationFailure(format!(
            "re-extracted Cauchy data differ by {:.3e} (tolerance {:.1e})",
            r.check.residual, copts.verify_tol
        )));
    }
    crate::inverse::check_verification(&r.run.result)?;
    Ok(r)
}
