//! JSON file formats and CSV tables. Every float is written with 17
//! significant digits so files round-trip bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cauchy::{CauchyData, FitReport};
use crate::error::{Error, Result};
use crate::inverse::{Diagnostics, ReconstructionResult};
use crate::model::{BoundaryPolynomials, PotentialSigma, Problem};
use crate::spectral::{Cluster, SpectralData};

pub const PROBLEM_FORMAT: &str = "sturm-problem/1";
pub const SPECTRAL_FORMAT: &str = "sturm-spectral/1";
pub const CAUCHY_FORMAT: &str = "sturm-cauchy/1";
pub const RECONSTRUCTION_FORMAT: &str = "sturm-reconstruction/1";

/// Complex numbers travel as [re, im].
type Pair = [f64; 2];

fn pairs(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpairs(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

/// `{:.16e}` gives 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 && x.is_sign_negative() {
        "-0.0000000000000000e0".into()
    } else {
        format!("{x:.16e}")
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialises")),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key serialises"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with full-precision floats.
pub fn to_json<T: Serialize>(x: &T) -> Result<String> {
    let v = serde_json::to_value(x).map_err(|e| Error::InvalidInput(format!("cannot serialise: {e}")))?;
    let mut s = String::new();
    write_value(&mut s, &v, 0);
    s.push('\n');
    Ok(s)
}

fn from_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn check_format(found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::Parse(format!("expected format \"{want}\", found \"{found}\"")));
    }
    Ok(())
}

fn parse_err(e: Error, what: &str) -> Error {
    match e {
        Error::InvalidInput(m) => Error::Parse(format!("{what}: {m}")),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format: String,
    pub p: usize,
    pub n_x: usize,
    /// σ(x_i), x_i = iπ/(n_x − 1)
    pub sigma: Vec<Pair>,
    /// c₀..c_p
    pub r1: Vec<Pair>,
    /// d₀..d_p
    pub r2: Vec<Pair>,
}

impl From<&Problem> for ProblemFile {
    fn from(pr: &Problem) -> Self {
        Self {
            format: PROBLEM_FORMAT.into(),
            p: pr.p(),
            n_x: pr.sigma.len(),
            sigma: pairs(pr.sigma.values()),
            r1: pairs(pr.polys.c()),
            r2: pairs(pr.polys.d()),
        }
    }
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<Problem> {
        check_format(&self.format, PROBLEM_FORMAT)?;
        if self.sigma.len() != self.n_x {
            return Err(Error::Parse(format!("n_x = {} but sigma has {} values", self.n_x, self.sigma.len())));
        }
        if self.r1.len() != self.p + 1 {
            return Err(Error::Parse(format!("p = {} but r1 has {} coefficients", self.p, self.r1.len())));
        }
        let sigma = PotentialSigma::new(unpairs(&self.sigma)).map_err(|e| parse_err(e, "sigma"))?;
        let polys = BoundaryPolynomials::new(unpairs(&self.r1), unpairs(&self.r2)).map_err(|e| parse_err(e, "polynomials"))?;
        Ok(Problem::new(sigma, polys))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterEntry {
    /// 1-based index of the first entry
    pub start: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralFile {
    pub format: String,
    pub p: usize,
    /// cut index N: entries 1..N−1 form the head
    pub n_head: usize,
    pub eigenvalues: Vec<Pair>,
    pub weights: Vec<Pair>,
    pub clusters: Vec<ClusterEntry>,
}

impl From<&SpectralData> for SpectralFile {
    fn from(sd: &SpectralData) -> Self {
        Self {
            format: SPECTRAL_FORMAT.into(),
            p: sd.p,
            n_head: sd.n_head,
            eigenvalues: pairs(&sd.eigenvalues),
            weights: pairs(&sd.weights),
            clusters: sd.clusters.iter().map(|c| ClusterEntry { start: c.start + 1, multiplicity: c.multiplicity }).collect(),
        }
    }
}

impl SpectralFile {
    pub fn into_data(self) -> Result<SpectralData> {
        check_format(&self.format, SPECTRAL_FORMAT)?;
        if self.clusters.iter().any(|c| c.start == 0) {
            return Err(Error::Parse("cluster start indices are 1-based".into()));
        }
        let sd = SpectralData {
            p: self.p,
            n_head: self.n_head,
            eigenvalues: unpairs(&self.eigenvalues),
            weights: unpairs(&self.weights),
            clusters: self.clusters.iter().map(|c| Cluster { start: c.start - 1, multiplicity: c.multiplicity }).collect(),
        };
        if sd.clusters.last().is_some_and(|c| c.start + c.multiplicity > sd.len()) {
            return Err(Error::Parse("clusters run past the eigenvalue list".into()));
        }
        sd.validate().map_err(|e| parse_err(e, "spectral data"))?;
        Ok(sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyFile {
    pub format: String,
    pub p: usize,
    pub k_f: usize,
    /// Legendre coefficients of G in u = 2t/π − 1 (authoritative)
    pub g_legendre: Vec<Pair>,
    pub j_legendre: Vec<Pair>,
    pub c: Vec<Pair>,
    pub d: Vec<Pair>,
    pub fit: FitReport,
    /// G and J at n_samples uniform points of [0, π], for inspection
    pub n_samples: usize,
    pub g_samples: Vec<Pair>,
    pub j_samples: Vec<Pair>,
}

impl CauchyFile {
    pub fn new(cd: &CauchyData, n_samples: usize) -> Self {
        Self {
            format: CAUCHY_FORMAT.into(),
            p: cd.p,
            k_f: cd.k_f(),
            g_legendre: pairs(&cd.g),
            j_legendre: pairs(&cd.j),
            c: pairs(&cd.c),
            d: pairs(&cd.d),
            fit: cd.fit,
            n_samples,
            g_samples: pairs(&cd.g_samples(n_samples)),
            j_samples: pairs(&cd.j_samples(n_samples)),
        }
    }

    pub fn into_data(self) -> Result<CauchyData> {
        check_format(&self.format, CAUCHY_FORMAT)?;
        if self.g_legendre.len() != self.k_f {
            return Err(Error::Parse(format!("k_f = {} but G has {} coefficients", self.k_f, self.g_legendre.len())));
        }
        CauchyData::new(
            self.p,
            unpairs(&self.g_legendre),
            unpairs(&self.j_legendre),
            unpairs(&self.c),
            unpairs(&self.d),
            self.fit,
        )
        .map_err(|e| parse_err(e, "Cauchy data"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionFile {
    pub format: String,
    pub problem: ProblemFile,
    pub diagnostics: Diagnostics,
}

impl From<&ReconstructionResult> for ReconstructionFile {
    fn from(r: &ReconstructionResult) -> Self {
        Self { format: RECONSTRUCTION_FORMAT.into(), problem: ProblemFile::from(&r.problem), diagnostics: r.diagnostics.clone() }
    }
}

impl ReconstructionFile {
    pub fn into_result(self) -> Result<ReconstructionResult> {
        check_format(&self.format, RECONSTRUCTION_FORMAT)?;
        Ok(ReconstructionResult { problem: self.problem.into_problem()?, diagnostics: self.diagnostics })
    }
}

pub fn problem_to_json(pr: &Problem) -> Result<String> {
    to_json(&ProblemFile::from(pr))
}

pub fn problem_from_json(text: &str) -> Result<Problem> {
    from_json::<ProblemFile>(text, "problem file")?.into_problem()
}

pub fn spectral_to_json(sd: &SpectralData) -> Result<String> {
    to_json(&SpectralFile::from(sd))
}

pub fn spectral_from_json(text: &str) -> Result<SpectralData> {
    from_json::<SpectralFile>(text, "spectral data file")?.into_data()
}

pub fn cauchy_to_json(cd: &CauchyData, n_samples: usize) -> Result<String> {
    to_json(&CauchyFile::new(cd, n_samples))
}

pub fn cauchy_from_json(text: &str) -> Result<CauchyData> {
    from_json::<CauchyFile>(text, "Cauchy data file")?.into_data()
}

pub fn reconstruction_to_json(r: &ReconstructionResult) -> Result<String> {
    to_json(&ReconstructionFile::from(r))
}

pub fn reconstruction_from_json(text: &str) -> Result<ReconstructionResult> {
    from_json::<ReconstructionFile>(text, "reconstruction file")?.into_result()
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_problem(path: &Path) -> Result<Problem> {
    problem_from_json(&read_text(path)?)
}

pub fn read_spectral(path: &Path) -> Result<SpectralData> {
    spectral_from_json(&read_text(path)?)
}

pub fn read_cauchy(path: &Path) -> Result<CauchyData> {
    cauchy_from_json(&read_text(path)?)
}

/// Minimal CSV writer: header plus rows of preformatted cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Per-x table of a reconstruction with the per-run numbers repeated on
/// every row.
pub fn diagnostics_csv(r: &ReconstructionResult) -> String {
    let d = &r.diagnostics;
    let sigma = r.problem.sigma.values();
    let (le, ae) = d.verification.map_or((f64::NAN, f64::NAN), |v| (v.lambda_err, v.alpha_rel_err));
    let header = [
        "x",
        "condition_estimate",
        "sigma_re",
        "sigma_im",
        "delta",
        "delta_contour",
        "tail_l2",
        "fit_residual_r1",
        "fit_residual_r2",
        "verify_lambda_err",
        "verify_alpha_rel_err",
    ];
    let grid = r.problem.sigma.grid();
    let rows = (0..grid.len()).map(|i| {
        vec![
            fmt_f64(grid[i]),
            fmt_f64(d.conditions.get(i).copied().unwrap_or(f64::NAN)),
            fmt_f64(sigma[i].re),
            fmt_f64(sigma[i].im),
            fmt_f64(d.delta),
            fmt_f64(d.delta_contour),
            fmt_f64(d.tail_l2),
            fmt_f64(d.fit_residual_r1),
            fmt_f64(d.fit_residual_r2),
            fmt_f64(le),
            fmt_f64(ae),
        ]
    });
    csv(&header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.0), "-0.0000000000000000e0");
        let v: f64 = serde_json::from_str(&fmt_f64(std::f64::consts::PI)).unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn problem_round_trip_and_errors() {
        let pr = Problem::new(
            PotentialSigma::from_fn(9, |x| c(x.sin() / 3.0, 0.1 * x)).unwrap(),
            BoundaryPolynomials::from_real(&[1.0, 1.0], &[0.0, std::f64::consts::PI]).unwrap(),
        );
        let text = problem_to_json(&pr).unwrap();
        assert_eq!(problem_from_json(&text).unwrap(), pr);
        assert!(matches!(problem_from_json("{"), Err(Error::Parse(_))));
        let bad = text.replace("\"n_x\": 9", "\"n_x\": 8");
        assert!(matches!(problem_from_json(&bad), Err(Error::Parse(_))));
        let bad = text.replace(PROBLEM_FORMAT, "other/1");
        assert!(matches!(problem_from_json(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn spectral_round_trip() {
        let sd = SpectralData {
            p: 1,
            n_head: 3,
            eigenvalues: vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(4.0, 0.0)],
            weights: vec![c(0.1, 0.0), c(0.2, 0.0), c(0.3, 0.0), c(0.4, 0.0)],
            clusters: vec![Cluster { start: 0, multiplicity: 2 }, Cluster { start: 2, multiplicity: 1 }, Cluster { start: 3, multiplicity: 1 }],
        };
        let text = spectral_to_json(&sd).unwrap();
        assert!(text.contains("\"start\": 1"));
        assert_eq!(spectral_from_json(&text).unwrap(), sd);
    }

    #[test]
    fn cauchy_round_trip() {
        let mut cd = CauchyData::zero(1, 5);
        cd.g[2] = c(0.25, -1e-3);
        cd.c[0] = c(1.0 / 3.0, 0.0);
        let text = cauchy_to_json(&cd, 11).unwrap();
        assert_eq!(cauchy_from_json(&text).unwrap(), cd);
    }

    proptest! {
        #[test]
        fn any_finite_float_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = serde_json::from_str(&fmt_f64(x)).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
