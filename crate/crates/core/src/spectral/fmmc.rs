//! Fastest-mixing baseline: projected subgradient descent on
//! `λ_{n-1}(W̄_P)` over symmetric edge-supported activation matrices.
//!
//! A symmetric `P` with mass `p_e` on both orientations of edge `e` gives
//! `W̄_P = I - Σ_e p_e (e_i - e_j)(e_i - e_j)ᵀ`, so with `v` a unit eigenvector
//! of `λ_{n-1}` the subgradient in `p_e` is `-(v_i - v_j)²`. Feasibility is
//! `p ≥ 0, Σ_e p_e = 1/2` (total mass one over both orientations).
//!
//! The second eigenvector is either taken from an exact eigendecomposition or
//! estimated by a cold-start power iteration on `W̄_P` deflated against `1`,
//! which is how a network would compute it. Communication is counted as
//! `2m` scalar messages per eigenvalue evaluation in exact mode and per
//! power sweep otherwise.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::graphs::{is_connected, WeightedGraph};
use crate::linalg::{dot, norm2, symmetric_eigen, symmetric_eigenvalues, Matrix};
use crate::spectral::ActivationMatrix;
use crate::{math, rng, Error, Result};

/// Power sweeps allowed per eigenvector estimate.
pub const MAX_POWER_SWEEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FmmcReference {
    /// Edge masses of the target matrix, in `g.edges()` order.
    pub masses: Vec<f64>,
    /// Stop once `‖P_k - P_ref‖_F / ‖P_ref‖_F` reaches this value.
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmmcConfig {
    pub iters: usize,
    /// `R` in the step size `R/k`.
    pub step_scale: f64,
    pub seed: u64,
    /// `None` uses exact eigenvectors; `Some(tol)` runs power iteration until
    /// the eigen-residual `‖W̄v - (vᵀW̄v)v‖` is at most `tol`.
    pub eig_tol: Option<f64>,
    /// Starting edge masses; `None` spreads `1/2` evenly over the edges.
    pub init: Option<Vec<f64>>,
    pub reference: Option<FmmcReference>,
}

impl FmmcConfig {
    pub fn new(iters: usize, step_scale: f64, seed: u64) -> Self {
        FmmcConfig {
            iters,
            step_scale,
            seed,
            eig_tol: None,
            init: None,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmmcResult {
    pub best: ActivationMatrix,
    pub best_masses: Vec<f64>,
    pub best_lambda: f64,
    /// Exact `λ_{n-1}` of every iterate, starting with the initial point.
    pub lambda_trace: Vec<f64>,
    /// Running minimum of `lambda_trace`.
    pub running_best: Vec<f64>,
    /// Edge masses of the final iterate.
    pub last_masses: Vec<f64>,
    pub communications: u64,
    /// Iteration and communication count at which the reference was reached.
    pub hit: Option<(usize, u64)>,
}

/// Euclidean projection onto `{x ≥ 0, Σ x = total}`.
pub fn project_simplex(x: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - total) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// `W̄_P` for symmetric edge masses.
pub fn iteration_matrix_from_masses(g: &WeightedGraph, masses: &[f64]) -> Matrix {
    let mut w = Matrix::identity(g.n());
    for (&(i, j, _), &p) in g.edges().iter().zip(masses) {
        w[(i, j)] += p;
        w[(j, i)] += p;
        w[(i, i)] -= p;
        w[(j, j)] -= p;
    }
    w
}

fn second_largest(w: &Matrix) -> Result<f64> {
    let ev = symmetric_eigenvalues(w)?;
    Ok(ev[ev.len() - 2])
}

fn exact_second_vector(w: &Matrix) -> Result<Vec<f64>> {
    let e = symmetric_eigen(w)?;
    Ok(e.vector(w.n() - 2))
}

fn deflate_and_normalize(v: &mut [f64]) -> bool {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let nrm = norm2(v);
    if nrm == 0.0 || !nrm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= nrm);
    true
}

/// Power iteration from a random start; returns the vector and the number of
/// sweeps (matrix-vector products) used.
fn power_second_vector(w: &Matrix, tol: f64, rng: &mut rng::Rng) -> Result<(Vec<f64>, u64)> {
    let n = w.n();
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    if !deflate_and_normalize(&mut v) {
        v = (0..n).map(|i| i as f64).collect();
        deflate_and_normalize(&mut v);
    }
    let mut sweeps = 0u64;
    loop {
        let wv = w.mul_vec(&v);
        sweeps += 1;
        let rq = dot(&v, &wv);
        let res = math::sqrt(
            wv.iter()
                .zip(&v)
                .map(|(a, b)| (a - rq * b) * (a - rq * b))
                .sum(),
        );
        if res <= tol {
            return Ok((v, sweeps));
        }
        if sweeps >= MAX_POWER_SWEEPS {
            return Err(Error::NoConvergence);
        }
        v = wv;
        if !deflate_and_normalize(&mut v) {
            return Err(Error::NoConvergence);
        }
    }
}

fn rel_distance(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    math::sqrt(num / den)
}

/// Runs the projected subgradient method and returns its best iterate.
pub fn fmmc_subgradient(g: &WeightedGraph, cfg: &FmmcConfig) -> Result<FmmcResult> {
    let m = g.m();
    if g.n() < 2 || !is_connected(g) {
        return Err(Error::Disconnected);
    }
    if !(cfg.step_scale > 0.0) {
        return Err(Error::param("step_scale must be positive"));
    }
    let mut p = match &cfg.init {
        Some(v) => {
            if v.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    got: v.len(),
                });
            }
            project_simplex(v, 0.5)
        }
        None => vec![0.5 / m as f64; m],
    };
    if let Some(r) = &cfg.reference {
        if r.masses.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: r.masses.len(),
            });
        }
    }
    let per_round = 2 * m as u64;
    let mut rng = rng::seeded(cfg.seed);

    let mut w = iteration_matrix_from_masses(g, &p);
    let mut lam = second_largest(&w)?;
    let mut best = (lam, p.clone());
    let mut lambda_trace = vec![lam];
    let mut running_best = vec![lam];
    let mut comms = 0u64;
    let mut hit = None;
    let reached = |p: &[f64]| {
        cfg.reference
            .as_ref()
            .is_some_and(|r| rel_distance(p, &r.masses) <= r.rel_tol)
    };
    if reached(&p) {
        hit = Some((0, 0));
    }

    for k in 1..=cfg.iters {
        if hit.is_some() {
            break;
        }
        let v = match cfg.eig_tol {
            None => {
                comms += per_round;
                exact_second_vector(&w)?
            }
            Some(tol) => {
                let (v, sweeps) = power_second_vector(&w, tol, &mut rng)?;
                comms += per_round * sweeps;
                v
            }
        };
        let step = cfg.step_scale / k as f64;
        let moved: Vec<f64> = g
            .edges()
            .iter()
            .zip(&p)
            .map(|(&(i, j, _), &pe)| {
                let d = v[i] - v[j];
                pe + step * d * d
            })
            .collect();
        p = project_simplex(&moved, 0.5);
        w = iteration_matrix_from_masses(g, &p);
        lam = second_largest(&w)?;
        if lam < best.0 {
            best = (lam, p.clone());
        }
        lambda_trace.push(lam);
        running_best.push(best.0);
        if reached(&p) {
            hit = Some((k, comms));
        }
    }

    Ok(FmmcResult {
        best: ActivationMatrix::from_edge_masses(g, &best.1)?,
        best_masses: best.1,
        best_lambda: best.0,
        lambda_trace,
        running_best,
        last_masses: p,
        communications: comms,
        hit,
    })
}
