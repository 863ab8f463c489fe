//! Nyström data for the main equation: model trajectories φ̃(x, μ_j) on
//! the x-grid, the running integrals D̃(x, μ_j, μ_k) = ∫₀ˣ φ̃φ̃ dt, and
//! the per-x solve of (I + Q) φ = φ̃.

use num_complex::Complex64 as C64;

use crate::contour::ContourGrid;
use crate::error::{Error, Result};
use crate::forward::ode::{node_states, plan_for_points};
use crate::forward::{phi_init, OdeOptions, Steps};
use crate::linalg::{CMat, CVec, Lu};
use crate::model::PotentialSigma;
use crate::spectrum::WeylDiffSamples;

/// φ̃ and φ̃¹ at every (x_i, μ_j). D̃ is not stored: it is accumulated
/// interval by interval while sweeping x (see `DStream`).
#[derive(Debug, Clone)]
pub struct KernelTables {
    pub x_grid: Vec<f64>,
    pub nodes: Vec<C64>,
    /// phi[i][j] = φ̃(x_i, μ_j)
    pub phi: Vec<CVec>,
    /// phi_q[i][j] = φ̃¹(x_i, μ_j)
    pub phi_q: Vec<CVec>,
    h: f64,
}

pub fn build_kernel_tables(sigma: &PotentialSigma, grid: &ContourGrid, ode: OdeOptions) -> Result<KernelTables> {
    let nodes = grid.nodes().to_vec();
    let plan = plan_for_points(sigma, &nodes, ode)?;
    let traj = crate::par::try_map(&nodes, |&mu| node_states(sigma, mu, phi_init(), Steps::Planned(&plan)))?;
    let nx = sigma.len();
    let m = nodes.len();
    let phi = (0..nx).map(|i| CVec::from_fn(m, |j, _| traj[j][i][0])).collect();
    let phi_q = (0..nx).map(|i| CVec::from_fn(m, |j, _| traj[j][i][1])).collect();
    Ok(KernelTables { x_grid: sigma.grid(), nodes, phi, phi_q, h: sigma.step() })
}

impl KernelTables {
    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    pub fn last(&self) -> usize {
        self.len() - 1
    }

    /// Weights of the cubic rule on interval [x_i, x_{i+1}] with the
    /// stencil start.
    fn interval_rule(&self, i: usize) -> (usize, [f64; 4]) {
        let n = self.len();
        let s = self.h / 24.0;
        if i == 0 {
            (0, [9.0 * s, 19.0 * s, -5.0 * s, s])
        } else if i + 2 == n {
            (n - 4, [s, -5.0 * s, 19.0 * s, 9.0 * s])
        } else {
            (i - 1, [-s, 13.0 * s, 13.0 * s, -s])
        }
    }

    /// D̃ accumulator positioned at x₀.
    pub fn d_stream(&self) -> DStream<'_> {
        let m = self.nodes.len();
        DStream { tables: self, d: CMat::zeros(m, m), at: 0 }
    }

    /// D̃(x_i, ·, ·) from scratch.
    pub fn d_at(&self, i: usize) -> CMat {
        let mut s = self.d_stream();
        s.advance_to(i);
        s.d
    }
}

pub struct DStream<'a> {
    tables: &'a KernelTables,
    d: CMat,
    at: usize,
}

impl DStream<'_> {
    pub fn position(&self) -> usize {
        self.at
    }

    pub fn current(&self) -> &CMat {
        &self.d
    }

    pub fn advance_to(&mut self, i: usize) {
        assert!(i >= self.at && i < self.tables.len());
        let one = C64::new(1.0, 0.0);
        while self.at < i {
            let (start, w) = self.tables.interval_rule(self.at);
            for (a, wa) in w.iter().enumerate() {
                let p = &self.tables.phi[start + a];
                self.d.ger(C64::new(*wa, 0.0), p, p, one);
            }
            self.at += 1;
        }
    }
}

/// s_k = (1/2πi)·w_k·M̂(μ_k), the column scaling shared by every contour
/// sum in the reconstruction.
pub fn node_factors(mhat: &WeylDiffSamples) -> CVec {
    let c = &mhat.contour.circle;
    CVec::from_fn(c.len(), |k, _| c.scaled_weight(k) * mhat.values[k])
}

/// Q[j][k] = (1/2πi)·w_k·D̃(x, μ_j, μ_k)·M̂(μ_k)
pub fn build_q(d: &CMat, mhat: &WeylDiffSamples) -> CMat {
    let s = node_factors(mhat);
    let mut q = d.clone();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        col *= s[k];
    }
    q
}

#[derive(Debug, Clone)]
pub struct MainEquationSolve {
    pub x_index: usize,
    pub phi: CVec,
    pub condition_estimate: f64,
}

/// Solves (I + Q) φ = φ̃(x_i, ·); also hands back the factorisation.
pub fn solve_main_equation(
    x_index: usize,
    d: &CMat,
    tables: &KernelTables,
    mhat: &WeylDiffSamples,
    cond_floor: f64,
) -> Result<(MainEquationSolve, Lu)> {
    let mut a = build_q(d, mhat);
    for j in 0..a.nrows() {
        a[(j, j)] += C64::new(1.0, 0.0);
    }
    let lu = Lu::new(a)?;
    let rc = lu.rcond();
    if !(rc > cond_floor) {
        return Err(Error::IllConditioned(format!(
            "I + Q at x = {:.6} has reciprocal condition {rc:.3e} (floor {cond_floor:.1e})",
            tables.x_grid[x_index]
        )));
    }
    let phi = lu.solve(&tables.phi[x_index])?;
    Ok((MainEquationSolve { x_index, phi, condition_estimate: rc }, lu))
}
