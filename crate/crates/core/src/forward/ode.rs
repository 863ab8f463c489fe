//! Dormand–Prince 5(4) for the regularised system
//!
//!   y′ = σ y + y¹,   y¹′ = −σ y¹ − (σ² + λ) y
//!
//! Steps are aligned with the σ grid: interval i is crossed in m_i equal
//! substeps. In adaptive mode m_i doubles until the embedded error estimate
//! is below tolerance on every substep; the chosen counts form a `StepPlan`.
//! Replaying a plan at other λ gives a map that is analytic in λ, which is
//! what contour integrals over λ need.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::PotentialSigma;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiState {
    pub y: C64,
    /// y¹ = y′ − σ y
    pub y1: C64,
}

impl QuasiState {
    pub fn new(y: C64, y1: C64) -> Self {
        Self { y, y1 }
    }

    pub fn real(y: f64, y1: f64) -> Self {
        Self { y: C64::new(y, 0.0), y1: C64::new(y1, 0.0) }
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.y1.is_finite()
    }

    fn arr(self) -> [C64; 2] {
        [self.y, self.y1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub tol: f64,
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { tol: 1e-11, min_step: 1e-7 }
    }
}

impl From<&crate::config::ForwardConfig> for OdeOptions {
    fn from(c: &crate::config::ForwardConfig) -> Self {
        Self { tol: c.tol_ode, min_step: c.min_step }
    }
}

/// Substep count per grid interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPlan {
    pub substeps: Vec<u32>,
}

impl StepPlan {
    pub fn uniform(intervals: usize, m: u32) -> Self {
        Self { substeps: vec![m.max(1); intervals] }
    }

    pub fn merge_max(&mut self, other: &StepPlan) {
        for (a, b) in self.substeps.iter_mut().zip(&other.substeps) {
            *a = (*a).max(*b);
        }
    }

    pub fn total(&self) -> u64 {
        self.substeps.iter().map(|&m| m as u64).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Steps<'a> {
    Adaptive(OdeOptions),
    Planned(&'a StepPlan),
}

/// Solution values at every grid node; `states[i]` sits at x_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lambda: C64,
    pub states: Vec<QuasiState>,
}

impl Trajectory {
    /// State at x = π.
    pub fn endpoint(&self) -> QuasiState {
        *self.states.last().unwrap()
    }

    pub fn start(&self) -> QuasiState {
        self.states[0]
    }
}

type Rhs<const D: usize> = fn(C64, C64, &[C64; D]) -> [C64; D];

#[inline]
fn rhs2(s: C64, lam: C64, y: &[C64; 2]) -> [C64; 2] {
    [s * y[0] + y[1], -s * y[1] - (s * s + lam) * y[0]]
}

/// System plus its λ-derivative (variational equations).
#[inline]
fn rhs4(s: C64, lam: C64, y: &[C64; 4]) -> [C64; 4] {
    let a = s * s + lam;
    [
        s * y[0] + y[1],
        -s * y[1] - a * y[0],
        s * y[2] + y[3],
        -s * y[3] - a * y[2] - y[0],
    ]
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb<const D: usize>(y: &[C64; D], h: f64, terms: &[(f64, &[C64; D])]) -> [C64; D] {
    let mut out = *y;
    for (c, k) in terms {
        let f = h * c;
        for i in 0..D {
            out[i] += k[i] * f;
        }
    }
    out
}

struct Stepper<'a, const D: usize> {
    sigma: &'a PotentialSigma,
    lam: C64,
    f: Rhs<D>,
    h: f64,
}

impl<const D: usize> Stepper<'_, D> {
    #[inline]
    fn eval(&self, i: usize, s: f64, y: &[C64; D]) -> [C64; D] {
        (self.f)(self.sigma.local(i, s), self.lam, y)
    }

    /// One DP5 step on interval `i` from local s0 with local increment ds
    /// (sign gives the direction). Returns (y_new, f(y_new), error ratio).
    #[inline]
    fn step(&self, i: usize, s0: f64, ds: f64, y: &[C64; D], k1: &[C64; D], tol: Option<f64>) -> ([C64; D], [C64; D], f64) {
        let h = ds * self.h;
        let k2 = self.eval(i, s0 + C2 * ds, &comb(y, h, &[(A21, k1)]));
        let k3 = self.eval(i, s0 + C3 * ds, &comb(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = self.eval(i, s0 + C4 * ds, &comb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = self.eval(i, s0 + C5 * ds, &comb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = self.eval(i, s0 + ds, &comb(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let yn = comb(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = self.eval(i, s0 + ds, &yn);
        let ratio = match tol {
            None => 0.0,
            Some(tol) => {
                let mut worst: f64 = 0.0;
                for g in (0..D).step_by(2) {
                    let mut e: f64 = 0.0;
                    let mut sc: f64 = 0.0;
                    for c in g..g + 2 {
                        let ec = h * (E1 * k1[c] + E3 * k3[c] + E4 * k4[c] + E5 * k5[c] + E6 * k6[c] + E7 * k7[c]);
                        e = e.max(ec.norm());
                        sc = sc.max(y[c].norm()).max(yn[c].norm());
                    }
                    worst = worst.max(e / (tol * (1.0 + sc)));
                }
                if worst.is_finite() {
                    worst
                } else {
                    f64::INFINITY
                }
            }
        };
        (yn, k7, ratio)
    }
}

/// Runs the integrator; returns node states (if `record`) indexed by grid
/// node, the final state and the plan used.
fn run<const D: usize>(
    sigma: &PotentialSigma,
    lam: C64,
    init: [C64; D],
    dir: Direction,
    steps: Steps<'_>,
    f: Rhs<D>,
    record: bool,
) -> Result<(Vec<[C64; D]>, [C64; D], StepPlan)> {
    let n = sigma.len();
    let ints = n - 1;
    let st = Stepper { sigma, lam, f, h: sigma.step() };
    let mut plan = StepPlan { substeps: vec![0; ints] };
    let mut states = if record { vec![[C64::new(0.0, 0.0); D]; n] } else { Vec::new() };
    let mut y = init;
    let (first_node, first_s) = match dir {
        Direction::Forward => (0, 0.0),
        Direction::Backward => (n - 1, 1.0),
    };
    if record {
        states[first_node] = y;
    }
    let first_int = match dir {
        Direction::Forward => 0,
        Direction::Backward => ints - 1,
    };
    let mut k1 = st.eval(first_int, first_s, &y);
    let mut m: u32 = 1;
    for step_idx in 0..ints {
        let i = match dir {
            Direction::Forward => step_idx,
            Direction::Backward => ints - 1 - step_idx,
        };
        let (s_start, sign) = match dir {
            Direction::Forward => (0.0, 1.0),
            Direction::Backward => (1.0, -1.0),
        };
        match steps {
            Steps::Planned(p) => {
                let mi = p.substeps[i].max(1);
                let ds = sign / mi as f64;
                for j in 0..mi {
                    let s0 = s_start + ds * j as f64;
                    let (yn, kn, _) = st.step(i, s0, ds, &y, &k1, None);
                    y = yn;
                    k1 = kn;
                }
                plan.substeps[i] = mi;
            }
            Steps::Adaptive(opts) => {
                let (y0, k0) = (y, k1);
                loop {
                    let ds = sign / m as f64;
                    let mut worst: f64 = 0.0;
                    let (mut yy, mut kk) = (y0, k0);
                    for j in 0..m {
                        let s0 = s_start + ds * j as f64;
                        let (yn, kn, r) = st.step(i, s0, ds, &yy, &kk, Some(opts.tol));
                        worst = worst.max(r);
                        if worst > 1.0 {
                            break;
                        }
                        yy = yn;
                        kk = kn;
                    }
                    if worst <= 1.0 {
                        y = yy;
                        k1 = kk;
                        plan.substeps[i] = m;
                        if worst < 1.0 / 48.0 && m > 1 {
                            m /= 2;
                        }
                        break;
                    }
                    m = m.saturating_mul(2);
                    if st.h / (m as f64) < opts.min_step {
                        return Err(Error::StepFailure(format!(
                            "cannot reach tol {:.1e} near x = {:.6} for lambda = {}",
                            opts.tol,
                            sigma.x(i),
                            lam
                        )));
                    }
                }
            }
        }
        if record {
            let node = match dir {
                Direction::Forward => i + 1,
                Direction::Backward => i,
            };
            states[node] = y;
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure(format!("solution overflowed for lambda = {lam}")));
    }
    Ok((states, y, plan))
}

pub fn integrate(sigma: &PotentialSigma, lam: C64, init: QuasiState, dir: Direction, opts: OdeOptions) -> Result<Trajectory> {
    integrate_with(sigma, lam, init, dir, Steps::Adaptive(opts))
}

pub fn integrate_with(sigma: &PotentialSigma, lam: C64, init: QuasiState, dir: Direction, steps: Steps<'_>) -> Result<Trajectory> {
    check_init(&init)?;
    let (states, _, _) = run(sigma, lam, init.arr(), dir, steps, rhs2, true)?;
    Ok(Trajectory { lambda: lam, states: states.into_iter().map(|s| QuasiState::new(s[0], s[1])).collect() })
}

fn check_init(init: &QuasiState) -> Result<()> {
    if init.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput("initial state is not finite".into()))
    }
}

/// Final state only.
pub fn endpoint(sigma: &PotentialSigma, lam: C64, init: QuasiState, dir: Direction, steps: Steps<'_>) -> Result<QuasiState> {
    check_init(&init)?;
    let (_, y, _) = run(sigma, lam, init.arr(), dir, steps, rhs2, false)?;
    Ok(QuasiState::new(y[0], y[1]))
}

/// Final state together with its λ-derivative (y, y¹, ∂λ y, ∂λ y¹).
pub fn endpoint_with_tangent(sigma: &PotentialSigma, lam: C64, init: QuasiState, dir: Direction, steps: Steps<'_>) -> Result<[C64; 4]> {
    check_init(&init)?;
    let z = C64::new(0.0, 0.0);
    let (_, y, _) = run(sigma, lam, [init.y, init.y1, z, z], dir, steps, rhs4, false)?;
    Ok(y)
}

/// Node states (y, y¹) along the grid, for building kernel tables.
pub(crate) fn node_states(sigma: &PotentialSigma, lam: C64, init: QuasiState, steps: Steps<'_>) -> Result<Vec<[C64; 2]>> {
    let (states, _, _) = run(sigma, lam, init.arr(), Direction::Forward, steps, rhs2, true)?;
    Ok(states)
}

/// Adaptive plan for one λ (φ-type start, with tangent so derivative
/// accuracy is controlled as well).
pub fn adaptive_plan(sigma: &PotentialSigma, lam: C64, dir: Direction, opts: OdeOptions) -> Result<StepPlan> {
    let (one, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let (_, _, p) = run(sigma, lam, [one, z, z, z], dir, Steps::Adaptive(opts), rhs4, false)?;
    Ok(p)
}

/// One plan covering a set of λ values: the per-interval maximum over a
/// few probes that bracket the set in growth and oscillation.
pub fn plan_for_points(sigma: &PotentialSigma, lams: &[C64], opts: OdeOptions) -> Result<StepPlan> {
    let mut plan = StepPlan::uniform(sigma.intervals(), 1);
    if lams.is_empty() {
        return Ok(plan);
    }
    let mut probes: Vec<C64> = Vec::new();
    let key = |f: &dyn Fn(C64) -> f64| {
        lams.iter().copied().max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap()
    };
    probes.push(key(&|z| crate::spectral::rho(z).im.abs()));
    probes.push(key(&|z| crate::spectral::rho(z).re.abs()));
    probes.push(key(&|z| z.norm()));
    let stride = (lams.len() / 8).max(1);
    probes.extend(lams.iter().step_by(stride).copied());
    probes.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    probes.dedup();
    let plans = crate::par::try_map(&probes, |&l| adaptive_plan(sigma, l, Direction::Forward, opts))?;
    for p in &plans {
        plan.merge_max(p);
    }
    Ok(plan)
}
