//! Perturbation sweeps: reconstruct from data perturbed by t·(direction)
//! for several t and check that the reconstruction errors grow linearly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::cauchy::{cauchy_from_problem, invert_from_cauchy_with, CauchyData, CauchyOptions};
use crate::config::Config;
use crate::error::{invalid, Error, Result};
use crate::inverse::{invert_report_with, tilde_spectrum, InverseOptions, ReconstructionResult};
use crate::io::{csv, fmt_f64};
use crate::model::Problem;
use crate::spectral::{Pole, SpectralData};

/// Perturbation direction. Indices are 1-based eigenvalue positions, or
/// the 0-based index n of C_n for `CauchyConstant`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// moves the whole cluster containing λ_k by t
    ShiftEigenvalue(usize),
    /// α_k ↦ (1 + t)·α_k
    ScaleWeight(usize),
    /// double eigenvalue at k ↦ λ_k ± √t with the first two moments of M kept
    SplitCluster(usize),
    /// C_n ↦ C_n + t
    CauchyConstant(usize),
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, idx) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("perturbation \"{s}\" must look like family:index")))?;
        let k: usize = idx.trim().parse().map_err(|_| invalid(format!("bad index in \"{s}\"")))?;
        let one_based = |f: fn(usize) -> Family| {
            if k == 0 {
                Err(invalid("eigenvalue indices start at 1"))
            } else {
                Ok(f(k))
            }
        };
        match name.trim() {
            "shift-eigenvalue" => one_based(Family::ShiftEigenvalue),
            "scale-weight" => one_based(Family::ScaleWeight),
            "split-cluster" => one_based(Family::SplitCluster),
            "cauchy-constant" => Ok(Family::CauchyConstant(k)),
            other => Err(invalid(format!(
                "unknown perturbation family \"{other}\" (shift-eigenvalue, scale-weight, split-cluster, cauchy-constant)"
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::ShiftEigenvalue(k) => write!(f, "shift-eigenvalue:{k}"),
            Family::ScaleWeight(k) => write!(f, "scale-weight:{k}"),
            Family::SplitCluster(k) => write!(f, "split-cluster:{k}"),
            Family::CauchyConstant(k) => write!(f, "cauchy-constant:{k}"),
        }
    }
}

fn cluster_of(sd: &SpectralData, k: usize) -> Result<usize> {
    sd.clusters
        .iter()
        .position(|c| c.start < k && k <= c.start + c.multiplicity)
        .ok_or_else(|| invalid(format!("index {k} is beyond the {} stored eigenvalues", sd.len())))
}

/// Spectral data perturbed along a spectral family.
pub fn perturb_spectral(sd: &SpectralData, family: Family, t: f64) -> Result<SpectralData> {
    let mut poles = sd.poles();
    match family {
        Family::ShiftEigenvalue(k) => {
            let i = cluster_of(sd, k)?;
            poles[i].lambda += t;
        }
        Family::ScaleWeight(k) => {
            let i = cluster_of(sd, k)?;
            let off = k - 1 - sd.clusters[i].start;
            poles[i].alphas[off] *= 1.0 + t;
        }
        Family::SplitCluster(k) => {
            let i = cluster_of(sd, k)?;
            if poles[i].multiplicity() != 2 {
                return Err(invalid(format!("split-cluster needs a double eigenvalue at index {k}")));
            }
            if !(t > 0.0) {
                return Err(invalid("split-cluster needs t > 0"));
            }
            let s = t.sqrt();
            let (l0, a0, a1) = (poles[i].lambda, poles[i].alphas[0], poles[i].alphas[1]);
            poles[i] = Pole::simple(l0 + s, (a0 + a1 / s) / 2.0);
            poles.insert(i + 1, Pole::simple(l0 - s, (a0 - a1 / s) / 2.0));
        }
        Family::CauchyConstant(_) => return Err(invalid("cauchy-constant perturbs Cauchy data, not spectral data")),
    }
    SpectralData::from_poles(sd.p, sd.n_head, poles)
}

pub fn perturb_cauchy(cd: &CauchyData, n: usize, t: f64) -> Result<CauchyData> {
    let mut out = cd.clone();
    let c = out.c.get_mut(n).ok_or_else(|| invalid(format!("C_{n} does not exist for p = {}", cd.p)))?;
    *c += t;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Pass,
    Fail,
    Error(&'static str),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Pass => f.write_str("PASS"),
            RowStatus::Fail => f.write_str("FAIL"),
            RowStatus::Error(k) => write!(f, "ERROR:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    /// measured δ of the run
    pub delta: f64,
    /// sup |σ − σ̃|
    pub sigma_err: f64,
    /// max |c_n − c̃_n|
    pub c_err: f64,
    pub d_err: f64,
    pub verify_residual: f64,
    pub status: RowStatus,
}

impl SweepRow {
    fn failed(t: f64, e: &Error) -> Self {
        let nan = f64::NAN;
        Self { t, delta: nan, sigma_err: nan, c_err: nan, d_err: nan, verify_residual: nan, status: RowStatus::Error(e.kind()) }
    }
}

/// Ratio check between consecutive rows for one column.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearity {
    pub quantity: &'static str,
    /// (err_{i+1}/err_i)/(t_{i+1}/t_i) − 1 per consecutive pair; None
    /// when both errors sit below the noise floor
    pub deviations: Vec<Option<f64>>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub family: Family,
    pub rows: Vec<SweepRow>,
    pub linearity: Vec<Linearity>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub inverse: InverseOptions,
    pub cauchy: CauchyOptions,
    pub workers: usize,
    /// allowed |ratio − 1| per halving
    pub linearity_tol: f64,
    /// errors below this are treated as zero
    pub noise_floor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self::from(&Config::default())
    }
}

impl From<&Config> for SweepOptions {
    fn from(c: &Config) -> Self {
        Self {
            inverse: InverseOptions::from(c),
            cauchy: CauchyOptions::from(c),
            workers: c.sweep.workers,
            linearity_tol: 0.25,
            noise_floor: 1e-11,
        }
    }
}

fn row_from(t: f64, tilde: &Problem, r: &ReconstructionResult, extra_residual: f64) -> SweepRow {
    let d = &r.diagnostics;
    let maxdiff = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let pr = &r.problem;
    let (vres, status) = match d.verification {
        Some(v) => (v.lambda_err.max(v.alpha_rel_err).max(extra_residual), if v.passed { RowStatus::Pass } else { RowStatus::Fail }),
        None => (f64::NAN, RowStatus::Fail),
    };
    SweepRow {
        t,
        delta: d.delta,
        sigma_err: pr.sigma.sup_distance(&tilde.sigma),
        c_err: maxdiff(pr.polys.c(), tilde.polys.c()),
        d_err: maxdiff(pr.polys.d(), tilde.polys.d()),
        verify_residual: vres,
        status,
    }
}

fn linearity(rows: &[SweepRow], opts: &SweepOptions) -> Vec<Linearity> {
    let cols: [(&'static str, fn(&SweepRow) -> f64); 4] = [
        ("delta", |r| r.delta),
        ("sigma_err", |r| r.sigma_err),
        ("c_err", |r| r.c_err),
        ("d_err", |r| r.d_err),
    ];
    cols.iter()
        .map(|(name, get)| {
            let mut passed = rows.iter().all(|r| r.status == RowStatus::Pass);
            let deviations = rows
                .windows(2)
                .map(|w| {
                    let (a, b) = (get(&w[0]), get(&w[1]));
                    if a.abs() < opts.noise_floor && b.abs() < opts.noise_floor {
                        return None;
                    }
                    let dev = (b / a) / (w[1].t / w[0].t) - 1.0;
                    if !(dev.abs() <= opts.linearity_tol) {
                        passed = false;
                    }
                    Some(dev)
                })
                .collect();
            Linearity { quantity: name, deviations, passed }
        })
        .collect()
}

/// Runs every scale (largest first) and never stops on a failed row.
pub fn run_sweep(tilde: &Problem, family: Family, scales: &[f64], opts: &SweepOptions) -> Result<SweepReport> {
    if scales.is_empty() {
        return Err(invalid("the scale list is empty"));
    }
    if scales.iter().any(|t| !t.is_finite() || *t == 0.0) {
        return Err(invalid("scales must be finite and nonzero"));
    }
    let mut ts = scales.to_vec();
    ts.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let iopts = &opts.inverse;
    let tilde_data = tilde_spectrum(tilde, iopts.spectrum.n_max, iopts)?;
    let tilde_cd = match family {
        Family::CauchyConstant(n) => {
            let cd = cauchy_from_problem(tilde, &opts.cauchy)?;
            perturb_cauchy(&cd, n, 0.0)?;
            Some(cd)
        }
        _ => {
            perturb_spectral(&tilde_data, family, ts[0])?;
            None
        }
    };
    let one = |&t: &f64| -> SweepRow {
        let res = match &tilde_cd {
            Some(cd) => perturb_cauchy(cd, match family {
                Family::CauchyConstant(n) => n,
                _ => unreachable!(),
            }, t)
            .and_then(|p| invert_from_cauchy_with(tilde, Some(&tilde_data), &p, iopts, &opts.cauchy))
            .map(|r| row_from(t, tilde, &r.run.result, r.check.residual)),
            None => perturb_spectral(&tilde_data, family, t)
                .and_then(|target| invert_report_with(tilde, &tilde_data, &target, iopts))
                .map(|r| row_from(t, tilde, &r.result, 0.0)),
        };
        res.unwrap_or_else(|e| SweepRow::failed(t, &e))
    };
    let rows = crate::par::with_workers(opts.workers, || crate::par::map(&ts, one));
    let linearity = linearity(&rows, opts);
    Ok(SweepReport { family, rows, linearity })
}

impl SweepReport {
    pub fn rows_csv(&self) -> String {
        let header = ["t", "delta", "sigma_err", "c_err", "d_err", "verify_residual", "status"];
        csv(
            &header,
            self.rows.iter().map(|r| {
                vec![
                    fmt_f64(r.t),
                    fmt_f64(r.delta),
                    fmt_f64(r.sigma_err),
                    fmt_f64(r.c_err),
                    fmt_f64(r.d_err),
                    fmt_f64(r.verify_residual),
                    r.status.to_string(),
                ]
            }),
        )
    }

    /// log10 δ against log10 of each error; empty cells where a value is
    /// zero or missing.
    pub fn plot_csv(&self) -> String {
        let lg = |x: f64| if x > 0.0 && x.is_finite() { fmt_f64(x.log10()) } else { String::new() };
        csv(
            &["log10_delta", "log10_sigma_err", "log10_c_err", "log10_d_err"],
            self.rows.iter().map(|r| vec![lg(r.delta), lg(r.sigma_err), lg(r.c_err), lg(r.d_err)]),
        )
    }

    pub fn all_linear(&self) -> bool {
        self.linearity.iter().all(|l| l.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryPolynomials, PotentialSigma};

    fn zero_p1() -> Problem {
        Problem::new(PotentialSigma::zero(256).unwrap(), BoundaryPolynomials::from_real(&[0.0, 1.0], &[0.0, 0.0]).unwrap())
    }

    #[test]
    fn parse_families() {
        assert_eq!("shift-eigenvalue:1".parse::<Family>().unwrap(), Family::ShiftEigenvalue(1));
        assert_eq!("cauchy-constant:0".parse::<Family>().unwrap(), Family::CauchyConstant(0));
        assert!("scale-weight:0".parse::<Family>().is_err());
        assert!("bogus:1".parse::<Family>().is_err());
        assert!("split-cluster".parse::<Family>().is_err());
        for s in ["split-cluster:2", "scale-weight:3"] {
            assert_eq!(s.parse::<Family>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn split_keeps_two_moments() {
        let sd = SpectralData::from_poles(
            1,
            3,
            vec![
                Pole { lambda: C64::new(0.0, 0.0), alphas: vec![C64::new(0.3, 0.0), C64::new(0.7, 0.0)] },
                Pole::simple(C64::new(1.0, 0.0), C64::new(0.6, 0.0)),
                Pole::simple(C64::new(4.0, 0.0), C64::new(0.6, 0.0)),
            ],
        )
        .unwrap();
        let t = 1e-4;
        let out = perturb_spectral(&sd, Family::SplitCluster(1), t).unwrap();
        assert_eq!(out.clusters.len(), 4);
        // M far away agrees to O(t)
        let far = C64::new(0.0, 3.0);
        let (a, b) = (sd.weyl_partial(3, far), out.weyl_partial(3, far));
        assert!((a - b).norm() < 10.0 * t, "{}", (a - b).norm());
        assert!(perturb_spectral(&sd, Family::SplitCluster(3), t).is_err());
    }

    #[test]
    fn empty_scales_rejected() {
        let e = run_sweep(&zero_p1(), Family::ShiftEigenvalue(1), &[], &SweepOptions::default()).unwrap_err();
        assert_eq!(e.kind(), "InvalidInput");
    }

    #[test]
    fn linearity_flags_nonlinear_rows() {
        let row = |t: f64, e: f64| SweepRow { t, delta: t, sigma_err: e, c_err: 0.0, d_err: e, verify_residual: 0.0, status: RowStatus::Pass };
        let o = SweepOptions::default();
        let good = linearity(&[row(1.0, 2.0), row(0.5, 1.01), row(0.25, 0.49)], &o);
        assert!(good.iter().all(|l| l.passed));
        assert_eq!(good[2].deviations, vec![None, None]);
        let bad = linearity(&[row(1.0, 2.0), row(0.5, 1.6)], &o);
        assert!(!bad[1].passed);
    }
}
