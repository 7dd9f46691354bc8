//! Effective resistances, exactly through the Laplacian pseudoinverse and
//! iteratively through decentralized randomized Kaczmarz (D-RK).
//!
//! D-RK solves `L X = I - 11ᵀ/n` one column at a time. When node `i` wakes up
//! it only needs the rows of its closed neighborhood, so every update is a
//! local message exchange:
//!
//! ```text
//! q_l = (Σ_{j ∈ N_i ∪ {i}} L_ij X_jl - b_il) / s_i      for each column l < n-1
//! X_jl -= L_ij q_l                                      for j ∈ N_i ∪ {i}
//! ```
//!
//! with `s_i = Σ_{j ∈ N_i ∪ {i}} L_ij²` and `b_il = δ_il - 1/n`. The last
//! column is never iterated; it is rebuilt as minus the sum of the others,
//! which keeps every row of `X` summing to zero.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;

use crate::graphs::{is_connected, laplacian, WeightedGraph};
use crate::linalg::{symmetric_eigen, symmetric_eigenvalues, Matrix};
use crate::{math, rng, Error, Result};

/// Eigenvalues below this fraction of the largest one are treated as zero.
pub const PINV_REL_THRESHOLD: f64 = 1e-8;

/// Moore-Penrose pseudoinverse of a connected-graph Laplacian.
pub fn laplacian_pinv(l: &Matrix) -> Result<Matrix> {
    let n = l.n();
    let eig = symmetric_eigen(l)?;
    let lmax = eig.values.last().copied().unwrap_or(0.0).abs();
    let cut = PINV_REL_THRESHOLD * lmax;
    let zeros = eig.values.iter().filter(|v| v.abs() < cut).count();
    if n > 0 && zeros != 1 {
        return Err(Error::Disconnected);
    }
    let mut pinv = Matrix::zeros(n);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam.abs() < cut {
            continue;
        }
        let inv = 1.0 / lam;
        for i in 0..n {
            let vi = eig.vectors[(i, k)] * inv;
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                pinv[(i, j)] += vi * eig.vectors[(j, k)];
            }
        }
    }
    // Symmetrize away rounding noise.
    Ok(Matrix::from_fn(n, |i, j| 0.5 * (pinv[(i, j)] + pinv[(j, i)])))
}

/// All-pairs effective resistances and their sum over the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceMatrix {
    pub values: Matrix,
    pub edge_sum: f64,
}

impl ResistanceMatrix {
    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// `R_ij = L†_ii + L†_jj - 2 L†_ij` for every pair.
pub fn effective_resistances(g: &WeightedGraph) -> Result<ResistanceMatrix> {
    let pinv = laplacian_pinv(&laplacian(g))?;
    Ok(resistances_from_pinv(g, &pinv))
}

pub fn resistances_from_pinv(g: &WeightedGraph, pinv: &Matrix) -> ResistanceMatrix {
    let n = g.n();
    let values = Matrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            (pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)]).max(0.0)
        }
    });
    let edge_sum = g.edges().iter().map(|&(i, j, _)| values[(i, j)]).sum();
    ResistanceMatrix { values, edge_sum }
}

/// Node clock rates `r_i = Σ_{j ∈ N_i} R_ij`.
pub fn resistance_clock_rates(r: &ResistanceMatrix, g: &WeightedGraph) -> Result<Vec<f64>> {
    if r.n() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: r.n(),
        });
    }
    Ok((0..g.n())
        .map(|i| g.neighbors(i).iter().map(|&(j, _)| r.get(i, j)).sum())
        .collect())
}

/// Squared row norms of the Laplacian, `s_i = Σ_j L_ij²`.
pub fn row_norms_sq(l: &Matrix) -> Vec<f64> {
    (0..l.n())
        .map(|i| l.row(i).iter().map(|v| v * v).sum())
        .collect()
}

fn smallest_positive(values: &[f64]) -> f64 {
    let lmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values
        .iter()
        .copied()
        .filter(|v| *v > PINV_REL_THRESHOLD * lmax)
        .fold(f64::INFINITY, f64::min)
}

/// Linear rates of plain and normalized D-RK:
/// `ρ = 1 - (λ⁺_min(L) / ‖L‖_F)²` and `ρ_S = 1 - λ⁺_min(L S⁻¹ L) / n`.
pub fn drk_rates(g: &WeightedGraph) -> Result<(f64, f64)> {
    if !is_connected(g) || g.n() < 2 {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    let l = laplacian(g);
    let lam = smallest_positive(&symmetric_eigenvalues(&l)?);
    let fro = l.frobenius_norm();
    let rho = 1.0 - (lam / fro) * (lam / fro);

    let s = row_norms_sq(&l);
    let scaled = Matrix::from_fn(n, |i, j| {
        (0..n).map(|k| l[(i, k)] * l[(k, j)] / s[k]).sum()
    });
    let sym = Matrix::from_fn(n, |i, j| 0.5 * (scaled[(i, j)] + scaled[(j, i)]));
    let lam_s = smallest_positive(&symmetric_eigenvalues(&sym)?);
    let rho_s = 1.0 - lam_s / n as f64;
    Ok((rho, rho_s))
}

/// Node sampling rule of D-RK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrkMode {
    /// Node `i` wakes with probability proportional to `s_i`.
    Plain,
    /// Every node wakes with probability `1/n`.
    Normalized,
}

impl DrkMode {
    pub fn name(self) -> &'static str {
        match self {
            DrkMode::Plain => "plain",
            DrkMode::Normalized => "normalized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(DrkMode::Plain),
            "normalized" => Some(DrkMode::Normalized),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrkConfig {
    pub mode: DrkMode,
    pub max_iters: u64,
    /// Record `‖X^k - L†‖_F` every this many wake-ups (0 records only the
    /// endpoints).
    pub record_every: u64,
    pub seed: u64,
    /// Stop early once `‖X^k - L†‖_F / ‖L†‖_F` drops to this value. Checked at
    /// every wake-up.
    pub stop_rel_tol: Option<f64>,
}

impl DrkConfig {
    pub fn new(mode: DrkMode, max_iters: u64, seed: u64) -> Self {
        DrkConfig {
            mode,
            max_iters,
            record_every: 0,
            seed,
            stop_rel_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrkState {
    /// Current iterate, row `j` held by node `j`.
    pub x: Matrix,
    pub mode: DrkMode,
    /// Wake-ups performed.
    pub iterations: u64,
    /// `(k, ‖X^k - L†‖_F)` at the recorded wake-up counts, starting at `k = 0`.
    pub error_trace: Vec<(u64, f64)>,
    pub seed: u64,
    /// Scalar messages exchanged, `2 d_i (n-1)` per wake-up of node `i`.
    pub communications: u64,
    /// `‖L†‖_F`, handy for relative errors.
    pub pinv_norm: f64,
}

impl DrkState {
    pub fn relative_sq_errors(&self) -> Vec<(u64, f64)> {
        let base = self.pinv_norm * self.pinv_norm;
        self.error_trace
            .iter()
            .map(|&(k, e)| (k, e * e / base))
            .collect()
    }
}

/// Scalar messages exchanged when node `i` wakes up: it gathers and returns
/// one value per column from each neighbor.
pub fn drk_messages_per_wakeup(g: &WeightedGraph, i: usize) -> u64 {
    2 * g.degree(i) as u64 * (g.n() as u64).saturating_sub(1)
}

/// Expected messages per wake-up under the given sampling rule.
pub fn drk_expected_messages(g: &WeightedGraph, mode: DrkMode) -> f64 {
    let l = laplacian(g);
    let s = row_norms_sq(&l);
    let total: f64 = s.iter().sum();
    let n = g.n();
    (0..n)
        .map(|i| {
            let p = match mode {
                DrkMode::Plain => s[i] / total,
                DrkMode::Normalized => 1.0 / n as f64,
            };
            p * drk_messages_per_wakeup(g, i) as f64
        })
        .sum()
}

fn frob_distance(a: &Matrix, b: &Matrix) -> f64 {
    math::sqrt(
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y) * (x - y))
            .sum(),
    )
}

/// Runs D-RK from `X⁰ = 0`.
pub fn drk_solve(g: &WeightedGraph, cfg: &DrkConfig) -> Result<DrkState> {
    let n = g.n();
    if n < 2 {
        return Err(Error::param("D-RK needs at least two nodes"));
    }
    let l = laplacian(g);
    let pinv = laplacian_pinv(&l)?;
    let pinv_norm = pinv.frobenius_norm();
    let s = row_norms_sq(&l);
    let sampler = WeightedIndex::new(&s).map_err(|e| Error::param(alloc::format!("{e}")))?;

    // Closed neighborhoods with their Laplacian entries.
    let hood: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut h: Vec<(usize, f64)> = g.neighbors(i).iter().map(|&(j, _)| (j, l[(i, j)])).collect();
            h.push((i, l[(i, i)]));
            h
        })
        .collect();

    let mut rng = rng::seeded(cfg.seed);
    let mut x = Matrix::zeros(n);
    let mut trace = vec![(0, pinv_norm)];
    let mut comms = 0u64;
    let inv_n = 1.0 / n as f64;
    let cols = n - 1;
    let mut q = vec![0.0; cols];
    let mut k = 0u64;
    let stop_abs = cfg.stop_rel_tol.map(|t| t * pinv_norm);

    let done = |x: &Matrix| stop_abs.is_some_and(|t| frob_distance(x, &pinv) <= t);
    if !done(&x) {
        while k < cfg.max_iters {
            let i = match cfg.mode {
                DrkMode::Plain => sampler.sample(&mut rng),
                DrkMode::Normalized => rng.random_range(0..n),
            };
            for (l_idx, ql) in q.iter_mut().enumerate() {
                let mut acc = 0.0;
                for &(j, lij) in &hood[i] {
                    acc += lij * x[(j, l_idx)];
                }
                let b = if l_idx == i { 1.0 - inv_n } else { -inv_n };
                *ql = (acc - b) / s[i];
            }
            for &(j, lij) in &hood[i] {
                let row = x.row_mut(j);
                let mut last = 0.0;
                for (v, ql) in row[..cols].iter_mut().zip(&q) {
                    *v -= lij * ql;
                    last -= *v;
                }
                row[cols] = last;
            }
            k += 1;
            comms += drk_messages_per_wakeup(g, i);

            let stop = done(&x);
            if stop || (cfg.record_every > 0 && k % cfg.record_every == 0) {
                trace.push((k, frob_distance(&x, &pinv)));
            }
            if stop {
                break;
            }
        }
    }
    if trace.last().map(|t| t.0) != Some(k) {
        trace.push((k, frob_distance(&x, &pinv)));
    }
    Ok(DrkState {
        x,
        mode: cfg.mode,
        iterations: k,
        error_trace: trace,
        seed: cfg.seed,
        communications: comms,
        pinv_norm,
    })
}

/// Effective resistances read off a D-RK iterate in place of `L†`.
pub fn resistances_from_drk(g: &WeightedGraph, state: &DrkState) -> ResistanceMatrix {
    let sym = Matrix::from_fn(g.n(), |i, j| 0.5 * (state.x[(i, j)] + state.x[(j, i)]));
    resistances_from_pinv(g, &sym)
}
