//! Reconstruction of (σ, r₁, r₂) from spectral data given a model
//! problem whose spectrum differs in finitely many entries.

pub mod kernel;
pub mod reconstruct;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::contour::{gamma_radius, make_contour, ContourGrid};
use crate::error::{Error, Result};
use crate::model::{PotentialSigma, Problem};
use crate::spectral::{rho, Pole, SpectralData};
use crate::spectrum::{forward_spectrum, weyl_diff_on_contour, SpectrumOptions, WeylDiffSamples};

pub use kernel::{build_kernel_tables, build_q, solve_main_equation, KernelTables, MainEquationSolve};
pub use reconstruct::{z_at_model_head, reconstruct_polynomials, sweep_main_equation, ZCheck, PiData, PolyFitReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOptions {
    pub m_q: usize,
    pub cond_floor: f64,
    pub verify_tol: f64,
    pub trunc_tol: f64,
    pub max_contour_rho: f64,
    pub fit_tol: f64,
    pub spectrum: SpectrumOptions,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self::from(&Config::default())
    }
}

impl From<&Config> for InverseOptions {
    fn from(c: &Config) -> Self {
        Self {
            m_q: c.contour.m_q,
            cond_floor: c.inverse.cond_floor,
            verify_tol: c.inverse.verify_tol,
            trunc_tol: c.inverse.trunc_tol,
            max_contour_rho: c.inverse.max_contour_rho,
            fit_tol: c.inverse.fit_tol,
            spectrum: SpectrumOptions::from(c),
        }
    }
}

/// The cut index actually used and what it leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutChoice {
    pub n_cut: usize,
    /// (Σ_{n≥N} (|ρ_n − ρ̃_n| + |α_n − α̃_n|)²)^{1/2} over the stored range
    pub tail_l2: f64,
    /// true when the tail difference could not be pushed below
    /// `trunc_tol` without exceeding `max_contour_rho`
    pub truncated: bool,
}

pub fn tail_l2(tilde: &SpectralData, target: &SpectralData, n: usize) -> f64 {
    let len = tilde.len().min(target.len());
    let start = n.saturating_sub(1);
    (start..len)
        .map(|i| {
            let d = (rho(tilde.eigenvalues[i]) - rho(target.eigenvalues[i])).norm() + (tilde.weights[i] - target.weights[i]).norm();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn simple_beyond(sd: &SpectralData, n: usize) -> bool {
    sd.is_cut(n) && sd.clusters.iter().all(|c| c.start + 1 < n || c.multiplicity == 1)
}

fn head_inside(sd: &SpectralData, n: usize, radius: f64) -> bool {
    sd.head_eigenvalues(n).iter().all(|l| l.norm() < radius - 1e-6)
}

/// Smallest N for which both heads are whole clusters strictly inside
/// Γ_N, everything later is simple, and the remaining tail difference is
/// below `trunc_tol`. If that needs √radius > `max_contour_rho`, the
/// largest admissible N within the cap is used and the leftover tail is
/// reported.
pub fn choose_cut(tilde: &SpectralData, target: &SpectralData, opts: &InverseOptions) -> Result<CutChoice> {
    if tilde.p != target.p {
        return Err(Error::InvalidInput(format!("degree mismatch: model p = {}, data p = {}", tilde.p, target.p)));
    }
    let p = tilde.p;
    let max_n = tilde.len().min(target.len()) + 1;
    let mut last_ok: Option<CutChoice> = None;
    let mut seen_admissible = false;
    for n in 1..=max_n {
        let r = gamma_radius(n, p);
        let ok = simple_beyond(tilde, n)
            && simple_beyond(target, n)
            && head_inside(tilde, n, r)
            && head_inside(target, n, r);
        if !ok {
            continue;
        }
        seen_admissible = true;
        let tl = tail_l2(tilde, target, n);
        let capped = r.sqrt() > opts.max_contour_rho;
        if capped {
            break;
        }
        if tl <= opts.trunc_tol {
            return Ok(CutChoice { n_cut: n, tail_l2: tl, truncated: false });
        }
        last_ok = Some(CutChoice { n_cut: n, tail_l2: tl, truncated: true });
    }
    last_ok.ok_or_else(|| {
        if seen_admissible {
            Error::HeadTooLarge(format!("no cut index within sqrt(radius) <= {}", opts.max_contour_rho))
        } else {
            Error::PoleOnContour("no contour Gamma_N encloses both heads as whole clusters".into())
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// max |λ_n − λ_n(target)| over the head
    pub lambda_err: f64,
    /// max relative weight error over the head
    pub alpha_rel_err: f64,
    /// true when the recomputed head had a different cluster structure and
    /// partial Weyl sums on Γ_N were compared instead
    pub compared_on_contour: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_cut: usize,
    pub m_q: usize,
    pub n_x: usize,
    /// max |M̂_N| on Γ_N
    pub delta_contour: f64,
    pub tail_l2: f64,
    /// max of the two above
    pub delta: f64,
    pub truncated: bool,
    /// reciprocal condition estimate of I + Q(x) per x-grid point
    pub conditions: Vec<f64>,
    pub min_condition: f64,
    pub phi_max: f64,
    pub phi_tilde_max: f64,
    pub phi_quasi_max: f64,
    pub fit_residual_r1: f64,
    pub fit_residual_r2: f64,
    pub leading_deviation: f64,
    pub verification: Option<Verification>,
    /// held-out Δ₀/Δ₁ disagreement after re-extraction (Cauchy runs only)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub problem: Problem,
    pub diagnostics: Diagnostics,
}

/// A finished run with the intermediate data kept for checks.
pub struct InverseRun {
    pub result: ReconstructionResult,
    pub grid: ContourGrid,
    pub mhat: WeylDiffSamples,
    pub pi: PiData,
    pub tilde_data: SpectralData,
    pub cut: CutChoice,
}

/// Spectral data of the model problem covering at least `len` entries.
pub fn tilde_spectrum(tilde: &Problem, len: usize, opts: &InverseOptions) -> Result<SpectralData> {
    let sopts = SpectrumOptions { n_max: opts.spectrum.n_max.max(len), ..opts.spectrum };
    forward_spectrum(tilde, &sopts)
}

/// The reconstruction without the verification solve.
pub fn invert_unchecked(tilde: &Problem, tilde_data: &SpectralData, target: &SpectralData, opts: &InverseOptions) -> Result<InverseRun> {
    if tilde.p() != target.p {
        return Err(Error::InvalidInput(format!("degree mismatch: model p = {}, data p = {}", tilde.p(), target.p)));
    }
    let cut = choose_cut(tilde_data, target, opts)?;
    let n = cut.n_cut;
    let grid = make_contour(n, tilde.p(), opts.m_q)?;
    let mhat = weyl_diff_on_contour(target, tilde_data, &grid)?;
    let tables = build_kernel_tables(&tilde.sigma, &grid, opts.spectrum.ode)?;
    let sweep = sweep_main_equation(&tables, &mhat, opts.cond_floor)?;
    let sigma = PotentialSigma::new(tilde.sigma.values().iter().zip(&sweep.sigma_hat).map(|(a, b)| a + b).collect())?;
    let pi = reconstruct::phi_quasi_at_pi(&tables, &sweep, &mhat)?;
    let (polys, fit) = reconstruct_polynomials(
        &pi,
        &tilde.polys,
        target.head_eigenvalues(n),
        tilde_data.head_eigenvalues(n),
        grid.radius(),
        opts.fit_tol,
    )?;
    let max_abs = |it: &mut dyn Iterator<Item = &C64>| it.map(|v| v.norm()).fold(0.0, f64::max);
    let diagnostics = Diagnostics {
        n_cut: n,
        m_q: opts.m_q,
        n_x: tilde.sigma.len(),
        delta_contour: mhat.delta1_norm,
        tail_l2: cut.tail_l2,
        delta: mhat.delta1_norm.max(cut.tail_l2),
        truncated: cut.truncated,
        min_condition: sweep.conditions.iter().cloned().fold(f64::INFINITY, f64::min),
        conditions: sweep.conditions.clone(),
        phi_max: sweep.phi_max,
        phi_tilde_max: tables.phi.iter().map(|c| max_abs(&mut c.iter())).fold(0.0, f64::max),
        phi_quasi_max: max_abs(&mut pi.phi_q.iter()),
        fit_residual_r1: fit.residual_r1,
        fit_residual_r2: fit.residual_r2,
        leading_deviation: fit.leading_deviation,
        verification: None,
        cauchy_residual: None,
    };
    Ok(InverseRun {
        result: ReconstructionResult { problem: Problem::new(sigma, polys), diagnostics },
        grid,
        mhat,
        pi,
        tilde_data: tilde_data.clone(),
        cut,
    })
}

/// Forward-solves `problem` and compares its head (indices < N) with
/// the target.
pub fn verify(problem: &Problem, target: &SpectralData, n_cut: usize, opts: &InverseOptions) -> Result<Verification> {
    let head = n_cut.saturating_sub(1);
    if head == 0 {
        return Ok(Verification { lambda_err: 0.0, alpha_rel_err: 0.0, compared_on_contour: false, passed: true });
    }
    let sopts = SpectrumOptions { n_max: head + 3, ..opts.spectrum };
    let sd = match forward_spectrum(problem, &sopts) {
        Ok(sd) => sd,
        Err(e) if e.category() == crate::error::Category::Solver => {
            return Ok(Verification { lambda_err: f64::INFINITY, alpha_rel_err: f64::INFINITY, compared_on_contour: false, passed: false })
        }
        Err(e) => return Err(e),
    };
    // heads are compared as sets of poles: equal-modulus eigenvalues can
    // swap places in the numbering under rounding
    let (mine, want) = (sd.head_poles(n_cut), target.head_poles(n_cut));
    let matched = sd.is_cut(n_cut) && match_poles(&want, &mine);
    let (lambda_err, alpha_rel_err, on_contour) = if let Some(pairs) = matched.then(|| pair_poles(&want, &mine)) {
        let mut le: f64 = 0.0;
        let mut ae: f64 = 0.0;
        for (a, b) in pairs {
            le = le.max((a.lambda - b.lambda).norm());
            // relative to the cluster: an entry can vanish identically
            // (r1 = λ, r2 = 0 has α_{1,1} = 0)
            let size = a.alphas.iter().map(|x| x.norm()).fold(1e-300, f64::max);
            for (x, y) in a.alphas.iter().zip(&b.alphas) {
                ae = ae.max((x - y).norm() / size);
            }
        }
        (le, ae, false)
    } else {
        let grid = make_contour(n_cut, problem.p(), opts.m_q)?;
        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        for &mu in grid.nodes() {
            let ta = crate::spectral::partial_fractions(&want, mu);
            worst = worst.max((ta - crate::spectral::partial_fractions(&mine, mu)).norm());
            size = size.max(ta.norm());
        }
        let rel = worst / size.max(1e-300);
        (rel, rel, true)
    };
    let passed = lambda_err <= opts.verify_tol && alpha_rel_err <= opts.verify_tol;
    Ok(Verification { lambda_err, alpha_rel_err, compared_on_contour: on_contour, passed })
}

fn match_poles(want: &[Pole], mine: &[Pole]) -> bool {
    let mut a: Vec<usize> = want.iter().map(|q| q.multiplicity()).collect();
    let mut b: Vec<usize> = mine.iter().map(|q| q.multiplicity()).collect();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// Greedy nearest pairing among poles of equal multiplicity.
fn pair_poles<'a>(want: &'a [Pole], mine: &'a [Pole]) -> Vec<(&'a Pole, &'a Pole)> {
    let mut used = vec![false; mine.len()];
    want.iter()
        .map(|a| {
            let j = (0..mine.len())
                .filter(|&j| !used[j] && mine[j].multiplicity() == a.multiplicity())
                .min_by(|&i, &j| (mine[i].lambda - a.lambda).norm().total_cmp(&(mine[j].lambda - a.lambda).norm()))
                .expect("multiplicities already matched");
            used[j] = true;
            (a, &mine[j])
        })
        .collect()
}

/// Full pipeline with verification attached; never fails on a
/// verification mismatch (see `invert`).
pub fn invert_report(tilde: &Problem, target: &SpectralData, opts: &InverseOptions) -> Result<InverseRun> {
    let tilde_data = tilde_spectrum(tilde, target.len(), opts)?;
    invert_report_with(tilde, &tilde_data, target, opts)
}

pub fn invert_report_with(tilde: &Problem, tilde_data: &SpectralData, target: &SpectralData, opts: &InverseOptions) -> Result<InverseRun> {
    let mut run = invert_unchecked(tilde, tilde_data, target, opts)?;
    let v = verify(&run.result.problem, target, run.cut.n_cut, opts)?;
    run.result.diagnostics.verification = Some(v);
    Ok(run)
}

/// Full pipeline; a head mismatch above `verify_tol` is an error.
pub fn invert(tilde: &Problem, target: &SpectralData, opts: &InverseOptions) -> Result<ReconstructionResult> {
    let run = invert_report(tilde, target, opts)?;
    check_verification(&run.result)?;
    Ok(run.result)
}

pub fn check_verification(r: &ReconstructionResult) -> Result<()> {
    match r.diagnostics.verification {
        Some(v) if !v.passed => Err(Error::VerificationFailure(format!(
            "recomputed head differs from the target: lambda {:.3e}, alpha (relative) {:.3e}",
            v.lambda_err, v.alpha_rel_err
        ))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundaryPolynomials;

    fn model(c: &[f64], d: &[f64], nx: usize, f: impl Fn(f64) -> f64) -> Problem {
        Problem::new(
            PotentialSigma::from_fn(nx, |x| C64::new(f(x), 0.0)).unwrap(),
            BoundaryPolynomials::from_real(c, d).unwrap(),
        )
    }

    fn fast() -> InverseOptions {
        let mut o = InverseOptions::default();
        o.m_q = 64;
        o.spectrum.n_max = 8;
        o
    }

    #[test]
    fn identity_is_exact() {
        let o = fast();
        let t = model(&[1.0], &[0.5], 128, |x| 0.2 * x.sin());
        let td = tilde_spectrum(&t, 0, &o).unwrap();
        let run = invert_report_with(&t, &td, &td, &o).unwrap();
        let r = &run.result;
        assert_eq!(r.diagnostics.delta, 0.0);
        assert!(r.problem.sigma.sup_distance(&t.sigma) < 1e-12);
        assert!((r.problem.polys.d()[0] - 0.5).norm() < 1e-12);
        assert!(r.diagnostics.verification.unwrap().passed);
    }

    #[test]
    fn cut_choice() {
        let o = fast();
        let mk = |ls: &[(f64, f64)]| {
            SpectralData::from_poles(0, 1, ls.iter().map(|&(l, a)| Pole::simple(C64::new(l, 0.0), C64::new(a, 0.0))).collect()).unwrap()
        };
        let t = mk(&[(0.0, 0.3), (1.0, 0.6), (4.0, 0.6), (9.0, 0.6)]);
        assert_eq!(choose_cut(&t, &t, &o).unwrap().n_cut, 1);
        let s = mk(&[(0.0, 0.3), (1.1, 0.6), (4.0, 0.6), (9.0, 0.6)]);
        let c = choose_cut(&t, &s, &o).unwrap();
        assert_eq!((c.n_cut, c.truncated), (3, false));
        let far = mk(&[(0.0, 0.3), (1.0, 0.6), (4.0, 0.6), (9.0, 0.7)]);
        let c = choose_cut(&t, &far, &o).unwrap();
        assert_eq!(c.n_cut, 5);
        let mut capped = o;
        capped.max_contour_rho = 2.0;
        let c = choose_cut(&t, &far, &capped).unwrap();
        assert!(c.truncated && c.n_cut == 3 && (c.tail_l2 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn head_shift_round_trip() {
        let o = fast();
        let t = model(&[1.0], &[0.0], 128, |_| 0.0);
        let truth = model(&[1.0], &[0.0], 128, |x| 0.1 * x.sin());
        let td = tilde_spectrum(&t, 0, &o).unwrap();
        let sd = forward_spectrum(&truth, &SpectrumOptions { n_max: 8, ..o.spectrum }).unwrap();
        let mut target = td.clone();
        for i in 0..2 {
            target.eigenvalues[i] = sd.eigenvalues[i];
            target.weights[i] = sd.weights[i];
        }
        let run = invert_report_with(&t, &td, &target, &o).unwrap();
        assert_eq!(run.cut.n_cut, 3);
        let v = run.result.diagnostics.verification.unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.lambda_err < 1e-6 && v.alpha_rel_err < 1e-5, "{v:?}");
    }
}
