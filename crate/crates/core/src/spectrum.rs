//! Eigenvalues with multiplicities, weight numbers, and the partial Weyl
//! sums on the contour.
//!
//! Zeros inside a disk are found from contour moments of f′/f: the count
//! is the zeroth moment, the centroid the first, and the spread of the
//! higher central power sums decides whether the zeros in the disk form
//! one cluster. Otherwise the power sums give rough zero positions, which
//! are grouped and re-examined on smaller disks.

use num_complex::Complex64 as C64;

use crate::config::Config;
use crate::contour::{gamma_radius, Circle, ContourGrid};
use crate::error::{Error, Result};
use crate::forward::{characteristic, characteristic_batch, OdeOptions, Steps};
use crate::model::{poly_roots, Problem};
use crate::spectral::{order_cmp, rho, Pole, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub m_q: usize,
    pub n_max: usize,
    pub cluster_tol: f64,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
    pub weight_radius_cap: f64,
    pub cross_check_tol: f64,
    pub ode: OdeOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self::from(&Config::default())
    }
}

impl From<&Config> for SpectrumOptions {
    fn from(c: &Config) -> Self {
        Self {
            m_q: c.contour.m_q,
            n_max: c.spectrum.n_max,
            cluster_tol: c.spectrum.cluster_tol,
            newton_max_iter: c.spectrum.newton_max_iter,
            newton_tol: c.spectrum.newton_tol,
            weight_radius_cap: c.spectrum.weight_radius_cap,
            cross_check_tol: c.spectrum.cross_check_tol,
            ode: OdeOptions::from(&c.forward),
        }
    }
}

/// f, f′ and the size of the terms that cancel in f, so that the
/// absolute error of f is about `noise() * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub f: C64,
    pub df: C64,
    pub scale: f64,
}

/// An analytic function whose zeros are wanted, with its derivative.
pub trait ZeroTarget: Sync {
    fn eval_batch(&self, zs: &[C64]) -> Result<Vec<Sample>>;

    fn eval_point(&self, z: C64) -> Result<(C64, C64)> {
        let s = self.eval_batch(&[z])?[0];
        Ok((s.f, s.df))
    }

    /// relative accuracy of an evaluation
    fn noise(&self) -> f64 {
        1e-15
    }
}

/// Wraps a plain closure returning (f, f′).
pub struct FnTarget<F>(pub F);

impl<F: Fn(C64) -> (C64, C64) + Sync + Send> ZeroTarget for FnTarget<F> {
    fn eval_batch(&self, zs: &[C64]) -> Result<Vec<Sample>> {
        Ok(crate::par::map(zs, |&z| {
            let (f, df) = (self.0)(z);
            Sample { f, df, scale: f.norm() }
        }))
    }
}

/// Δ₁ of a problem; batches share one frozen step plan.
pub struct Delta1Target<'a> {
    pub problem: &'a Problem,
    pub ode: OdeOptions,
}

impl ZeroTarget for Delta1Target<'_> {
    fn eval_batch(&self, zs: &[C64]) -> Result<Vec<Sample>> {
        let polys = &self.problem.polys;
        Ok(characteristic_batch(self.problem, zs, self.ode)?
            .into_iter()
            .map(|e| {
                let scale = (polys.r1(e.lambda) * e.phi[1]).norm() + (polys.r2(e.lambda) * e.phi[0]).norm();
                Sample { f: e.d1, df: e.d1_prime, scale }
            })
            .collect())
    }

    fn noise(&self) -> f64 {
        self.ode.tol
    }

    fn eval_point(&self, z: C64) -> Result<(C64, C64)> {
        let e = characteristic(self.problem, z, Steps::Adaptive(self.ode))?;
        Ok((e.d1, e.d1_prime))
    }
}

/// A zero (or a cluster of indistinguishable zeros) and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCluster {
    pub center: C64,
    pub multiplicity: usize,
}

struct Winding {
    count: usize,
    circle: Circle,
    /// f′/f at the nodes
    log_deriv: Vec<C64>,
    /// estimated relative error of f at the nodes
    rel_err: Vec<f64>,
}

fn winding(target: &dyn ZeroTarget, circle: Circle) -> Result<Winding> {
    let vals = target.eval_batch(&circle.nodes)?;
    let m = vals.len();
    for j in 0..m {
        let f = vals[j].f.norm();
        let nb = vals[(j + 1) % m].f.norm().max(vals[(j + m - 1) % m].f.norm());
        if !(f > 1e-10 * nb) || !f.is_finite() {
            return Err(Error::ZeroOnContour(format!(
                "f nearly vanishes at {} on the circle |z - {}| = {}",
                circle.nodes[j], circle.center, circle.radius
            )));
        }
    }
    let log_deriv: Vec<C64> = vals.iter().map(|v| v.df / v.f).collect();
    let rel_err: Vec<f64> = vals.iter().map(|v| target.noise() * v.scale.max(v.f.norm()) / v.f.norm()).collect();
    let s0: C64 = (0..m).map(|j| circle.scaled_weight(j) * log_deriv[j]).sum();
    let phase: f64 = (0..m).map(|j| (vals[(j + 1) % m].f / vals[j].f).arg()).sum::<f64>() / (2.0 * std::f64::consts::PI);
    let n = s0.re.round();
    if (s0 - n).norm() > 0.1 || n < 0.0 || (phase - n).abs() > 0.1 {
        return Err(Error::NonIntegerWinding(format!(
            "winding {s0} (phase count {phase:.4}) on |z - {}| = {}",
            circle.center, circle.radius
        )));
    }
    Ok(Winding { count: n as usize, circle, log_deriv, rel_err })
}

/// Number of zeros inside the circle by the argument principle.
pub fn count_zeros(target: &dyn ZeroTarget, center: C64, radius: f64, m: usize) -> Result<usize> {
    Ok(winding(target, Circle::new(center, radius, m))?.count)
}

fn moment(w: &Winding, about: C64, k: usize) -> C64 {
    let c = &w.circle;
    (0..c.len()).map(|j| c.scaled_weight(j) * (c.nodes[j] - about).powi(k as i32) * w.log_deriv[j]).sum()
}

/// Spread that rounding and evaluation error alone can produce: the
/// central power sums of a k-fold zero cancel to zero, so their absolute
/// error e_j turns into a spread of (e_j/k)^{1/j}.
fn spread_floor(w: &Winding, about: C64) -> f64 {
    let c = &w.circle;
    let k = w.count as f64;
    (2..=w.count)
        .map(|j| {
            let e: f64 = (0..c.len())
                .map(|i| {
                    let t = c.scaled_weight(i).norm() * (c.nodes[i] - about).norm().powi(j as i32);
                    t * (w.log_deriv[i].norm() * (16.0 * f64::EPSILON + w.rel_err[i]) + w.rel_err[i] / c.radius)
                })
                .sum();
            (4.0 * e / k).powf(1.0 / j as f64)
        })
        .fold(0.0, f64::max)
}

/// Nodes used on a circle of this radius: enough that the phase moves
/// by well under π between neighbours.
pub fn nodes_for(radius: f64, m_q: usize) -> usize {
    let n = 16 * (radius.sqrt().ceil() as usize + 1);
    n.max(m_q).div_ceil(2) * 2
}

/// Zeros of `target` inside the disk, grouped into clusters.
pub fn zeros_in_disk(target: &dyn ZeroTarget, center: C64, radius: f64, opts: &SpectrumOptions) -> Result<Vec<ZeroCluster>> {
    let w = winding(target, Circle::new(center, radius, nodes_for(radius, opts.m_q)))?;
    resolve(target, w, opts, 0)
}

fn resolve(target: &dyn ZeroTarget, w: Winding, opts: &SpectrumOptions, depth: usize) -> Result<Vec<ZeroCluster>> {
    let k = w.count;
    if k == 0 {
        return Ok(Vec::new());
    }
    let (center, radius) = (w.circle.center, w.circle.radius);
    let zbar = center + moment(&w, center, 1) / k as f64;
    if k == 1 {
        return Ok(vec![ZeroCluster { center: polish(target, zbar, radius, opts), multiplicity: 1 }]);
    }
    let sums: Vec<C64> = (0..=k).map(|j| if j == 0 { C64::new(k as f64, 0.0) } else { moment(&w, zbar, j) }).collect();
    let spread = (2..=k).map(|j| (sums[j].norm() / k as f64).powf(1.0 / j as f64)).fold(0.0, f64::max);
    if spread < opts.cluster_tol.max(spread_floor(&w, zbar)) || 2.0 * radius < opts.cluster_tol {
        return Ok(vec![ZeroCluster { center: zbar, multiplicity: k }]);
    }
    if depth > 40 {
        return Err(Error::CountMismatch(format!("could not separate {k} zeros near {zbar}")));
    }
    let approx = roots_from_power_sums(&sums, zbar, spread);
    let tau = opts.cluster_tol.max(1e-3 * spread);
    let groups = group_points(&approx, tau);
    for shrink in [1.0, 0.6, 0.35] {
        let disks = subdisks(&groups, center, radius, tau, shrink);
        let mut found = Vec::new();
        let mut total = 0;
        let mut ok = true;
        for (c, r) in disks {
            match winding(target, Circle::new(c, r, opts.m_q)) {
                Ok(sub) => {
                    total += sub.count;
                    if sub.count > 0 {
                        found.push(sub);
                    }
                }
                Err(Error::ZeroOnContour(_)) | Err(Error::NonIntegerWinding(_)) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok && total == k {
            let mut out = Vec::new();
            for sub in found {
                out.extend(resolve(target, sub, opts, depth + 1)?);
            }
            return Ok(out);
        }
    }
    Err(Error::CountMismatch(format!("sub-disks around {zbar} do not account for {k} zeros")))
}

/// Approximate zeros from central power sums p_j = Σ (ζ − z̄)^j via
/// Newton's identities, working in units of `scale`.
fn roots_from_power_sums(sums: &[C64], zbar: C64, scale: f64) -> Vec<C64> {
    let k = sums.len() - 1;
    let p: Vec<C64> = (0..=k).map(|j| sums[j] / scale.powi(j as i32)).collect();
    let mut e = vec![C64::new(1.0, 0.0); k + 1];
    for j in 1..=k {
        let mut s = C64::new(0.0, 0.0);
        for i in 1..=j {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            s += e[j - i] * p[i] * sign;
        }
        e[j] = s / j as f64;
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[k - j] = e[j] * sign;
    }
    poly_roots(&coeffs).into_iter().map(|u| zbar + u * scale).collect()
}

/// Single-linkage grouping with threshold `tau`; returns (center, extent).
fn group_points(pts: &[C64], tau: f64) -> Vec<(C64, f64)> {
    let n = pts.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        l[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (pts[i] - pts[j]).norm() < tau {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<C64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(pts[i]),
            None => groups.push((r, vec![pts[i]])),
        }
    }
    groups
        .into_iter()
        .map(|(_, ps)| {
            let c = ps.iter().sum::<C64>() / ps.len() as f64;
            let ext = ps.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
            (c, ext)
        })
        .collect()
}

fn subdisks(groups: &[(C64, f64)], center: C64, radius: f64, tau: f64, shrink: f64) -> Vec<(C64, f64)> {
    groups
        .iter()
        .enumerate()
        .map(|(i, &(c, ext))| {
            let mut r = if groups.len() > 1 {
                let d = groups
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &(c2, e2))| (c - c2).norm() - e2)
                    .fold(f64::INFINITY, f64::min);
                0.5 * d
            } else {
                (4.0 * ext).max(4.0 * tau).min(0.5 * radius)
            };
            r = r.min(radius - (c - center).norm()).max(ext * 1.5);
            (c, r * shrink.max(if ext > 0.0 { 1.5 * ext / r } else { 0.0 }))
        })
        .collect()
}

fn polish(target: &dyn ZeroTarget, z0: C64, radius: f64, opts: &SpectrumOptions) -> C64 {
    let mut z = z0;
    for _ in 0..10 {
        let Ok((f, d)) = target.eval_point(z) else { return z0 };
        if d.norm() == 0.0 {
            return z0;
        }
        let dz = f / d;
        z -= dz;
        if (z - z0).norm() > 0.5 * radius || !z.is_finite() {
            return z0;
        }
        if dz.norm() < opts.newton_tol * (1.0 + z.norm()) {
            return z;
        }
    }
    z
}

/// Newton on f from a seed.
pub fn newton(target: &dyn ZeroTarget, seed: C64, opts: &SpectrumOptions) -> Result<C64> {
    let mut z = seed;
    for _ in 0..opts.newton_max_iter {
        let (f, d) = target.eval_point(z)?;
        if d.norm() == 0.0 || !d.is_finite() {
            break;
        }
        let dz = f / d;
        z -= dz;
        if !z.is_finite() {
            break;
        }
        if dz.norm() < opts.newton_tol * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    Err(Error::NewtonDivergence(format!("Newton from seed {seed} did not converge")))
}

/// Located zeros: the cut index N and the clusters sorted by numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub n_head: usize,
    pub clusters: Vec<ZeroCluster>,
}

impl Located {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.clusters.iter().flat_map(|c| std::iter::repeat_n(c.center, c.multiplicity)).collect()
    }
}

/// Zeros of Δ₁ (or any target with the same asymptotics
/// √θ_n = n − p − 1 + shift + o(1)) numbered 1..=n_max.
pub fn locate_zeros(target: &dyn ZeroTarget, p: usize, shift: f64, opts: &SpectrumOptions) -> Result<Located> {
    if opts.n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let seed_rho = |n: usize| n as f64 - p as f64 - 1.0 + shift;
    // circle separating zero n−1 from zero n
    let cut_radius = |n: usize| {
        let r = seed_rho(n) - 0.5;
        r * r
    };
    let mut last_err = None;
    for n_cut in 1..=opts.n_max + 1 {
        let radius = cut_radius(n_cut);
        if radius <= 0.0 {
            continue;
        }
        let inside = match count_zeros(target, C64::new(0.0, 0.0), radius, nodes_for(radius, opts.m_q)) {
            Ok(k) => k,
            Err(e @ (Error::ZeroOnContour(_) | Error::NonIntegerWinding(_))) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if inside != n_cut - 1 {
            continue;
        }
        match tail_zeros(target, n_cut, radius, &seed_rho, &cut_radius, opts) {
            Ok(tail) => {
                let head = zeros_in_disk(target, C64::new(0.0, 0.0), radius, opts)?;
                let total: usize = head.iter().map(|c| c.multiplicity).sum();
                if total != n_cut - 1 {
                    return Err(Error::CountMismatch(format!(
                        "head disk holds {} zeros but the count says {}",
                        total,
                        n_cut - 1
                    )));
                }
                let mut clusters = head;
                clusters.sort_by(|a, b| order_cmp(a.center, b.center));
                clusters.extend(tail.into_iter().map(|z| ZeroCluster { center: z, multiplicity: 1 }));
                return Ok(Located { n_head: n_cut, clusters });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::HeadTooLarge(format!(
        "no cut index N <= {} separates a simple asymptotic tail{}",
        opts.n_max + 1,
        last_err.map(|e| format!(" (last issue: {e})")).unwrap_or_default()
    )))
}

fn tail_zeros(
    target: &dyn ZeroTarget,
    n_cut: usize,
    radius: f64,
    seed_rho: &(dyn Fn(usize) -> f64 + Sync),
    cut_radius: &(dyn Fn(usize) -> f64 + Sync),
    opts: &SpectrumOptions,
) -> Result<Vec<C64>> {
    let ns: Vec<usize> = (n_cut..=opts.n_max).collect();
    let zs = crate::par::try_map(&ns, |&n| {
        let s = seed_rho(n);
        newton(target, C64::new(s * s, 0.0), opts)
    })?;
    for (z, &n) in zs.iter().zip(&ns) {
        let r = rho(*z);
        if z.norm() <= radius || (r - seed_rho(n)).norm() >= 0.5 {
            return Err(Error::CountMismatch(format!("zero {n} at {z} is not in its asymptotic slot")));
        }
    }
    if opts.n_max >= n_cut {
        let big = cut_radius(opts.n_max + 1);
        let k = count_zeros(target, C64::new(0.0, 0.0), big, nodes_for(big, opts.m_q))?;
        if k != opts.n_max {
            return Err(Error::CountMismatch(format!("{k} zeros inside |z| = {big}, expected {}", opts.n_max)));
        }
    }
    Ok(zs)
}

pub fn locate_eigenvalues(problem: &Problem, opts: &SpectrumOptions) -> Result<Located> {
    let target = Delta1Target { problem, ode: opts.ode };
    locate_zeros(&target, problem.p(), 0.0, opts)
}

/// (Δ₀, Δ₁, Δ₁′) at one point.
pub type CharValues = (C64, C64, C64);

/// Laurent coefficients of M at each cluster from small-circle moments.
pub fn weight_numbers(problem: &Problem, located: &Located, opts: &SpectrumOptions) -> Result<Vec<Vec<C64>>> {
    let batch = |zs: &[C64]| -> Result<Vec<CharValues>> {
        Ok(characteristic_batch(problem, zs, opts.ode)?.into_iter().map(|e| (e.d0, e.d1, e.d1_prime)).collect())
    };
    let point = |z: C64| -> Result<CharValues> {
        let e = characteristic(problem, z, Steps::Adaptive(opts.ode))?;
        Ok((e.d0, e.d1, e.d1_prime))
    };
    weight_numbers_with(located, opts, &batch, &point)
}

/// Same as `weight_numbers` for any source of Δ₀, Δ₁ and Δ₁′.
pub fn weight_numbers_with(
    located: &Located,
    opts: &SpectrumOptions,
    batch: &dyn Fn(&[C64]) -> Result<Vec<CharValues>>,
    point: &dyn Fn(C64) -> Result<CharValues>,
) -> Result<Vec<Vec<C64>>> {
    let centers: Vec<C64> = located.clusters.iter().map(|c| c.center).collect();
    let mut out = Vec::with_capacity(centers.len());
    for (i, cl) in located.clusters.iter().enumerate() {
        let radius = small_radius(&centers, i, opts.weight_radius_cap);
        let circle = Circle::new(cl.center, radius, opts.m_q);
        let m: Vec<C64> = batch(&circle.nodes)?.into_iter().map(|(d0, d1, _)| -d0 / d1).collect();
        let alphas: Vec<C64> = (0..cl.multiplicity)
            .map(|k| {
                (0..circle.len())
                    .map(|j| circle.scaled_weight(j) * (circle.nodes[j] - cl.center).powi(k as i32) * m[j])
                    .sum()
            })
            .collect();
        if cl.multiplicity == 1 {
            let (d0, _, d1p) = point(cl.center)?;
            let ratio = -d0 / d1p;
            if (ratio - alphas[0]).norm() > opts.cross_check_tol * alphas[0].norm().max(1.0) {
                return Err(Error::CrossCheckFailure(format!(
                    "weight at {}: contour {} vs ratio {}",
                    cl.center, alphas[0], ratio
                )));
            }
        }
        out.push(alphas);
    }
    Ok(out)
}

/// min(0.4 · distance to the nearest other center, cap)
pub fn small_radius(centers: &[C64], i: usize, cap: f64) -> f64 {
    let d = centers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, c)| (c - centers[i]).norm())
        .fold(f64::INFINITY, f64::min);
    (0.4 * d).min(cap)
}

/// Eigenvalues, clusters and weight numbers up to index n_max.
pub fn forward_spectrum(problem: &Problem, opts: &SpectrumOptions) -> Result<SpectralData> {
    let located = locate_eigenvalues(problem, opts)?;
    let weights = weight_numbers(problem, &located, opts)?;
    let poles = located
        .clusters
        .iter()
        .zip(weights)
        .map(|(c, alphas)| Pole { lambda: c.center, alphas })
        .collect();
    SpectralData::from_poles(problem.p(), located.n_head, poles)
}

pub fn weyl_partial(data: &SpectralData, n: usize, lam: C64) -> C64 {
    data.weyl_partial(n, lam)
}

/// M̂_N = M_N − M̃_N at the contour nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylDiffSamples {
    pub contour: ContourGrid,
    pub values: Vec<C64>,
    pub delta1_norm: f64,
}

impl WeylDiffSamples {
    pub fn new(contour: ContourGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != contour.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("Weyl difference samples are not finite or mis-sized".into()));
        }
        let delta1_norm = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self { contour, values, delta1_norm })
    }
}

pub fn check_poles_inside(poles: &[Pole], grid: &ContourGrid) -> Result<()> {
    for q in poles {
        if q.lambda.norm() >= grid.radius() - 1e-6 {
            return Err(Error::PoleOnContour(format!(
                "pole {} is not strictly inside |lambda| = {}",
                q.lambda,
                grid.radius()
            )));
        }
    }
    Ok(())
}

pub fn weyl_diff_on_contour(data: &SpectralData, tilde: &SpectralData, grid: &ContourGrid) -> Result<WeylDiffSamples> {
    let n = grid.n_cut;
    let (a, b) = (data.head_poles(n), tilde.head_poles(n));
    check_poles_inside(&a, grid)?;
    check_poles_inside(&b, grid)?;
    let values = grid
        .nodes()
        .iter()
        .map(|&mu| crate::spectral::partial_fractions(&a, mu) - crate::spectral::partial_fractions(&b, mu))
        .collect();
    WeylDiffSamples::new(grid.clone(), values)
}

/// Circle radius used for the head of the spectrum with cut index N.
pub fn head_radius(n_cut: usize, p: usize) -> f64 {
    gamma_radius(n_cut, p)
}
