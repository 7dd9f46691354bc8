use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graphs::{diameter, WeightedGraph};
use crate::linalg::{solve, Matrix};
use crate::resistance::effective_resistances;
use crate::spectral::{build_activation, expected_iteration_matrix, spectrum, Scheme};
use crate::{math, Error, Result};

/// Step cap of [`mixing_time_empirical`].
pub const MIXING_CAP: u64 = 10_000_000;

/// Lower and upper averaging-time estimates in ticks,
/// `[0.5, 3] · ln(1/ε) / ln(1/λ)`.
pub fn averaging_time_bounds(lambda: f64, eps: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param(format!(
            "second eigenvalue {lambda} must lie strictly inside (0, 1)"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps = {eps} must lie in (0, 1)")));
    }
    let ratio = math::ln(1.0 / eps) / math::ln(1.0 / lambda);
    Ok((0.5 * ratio, 3.0 * ratio))
}

/// `H[(i, j)]`: expected steps for the chain `w` started at `i` to first
/// visit `j`. Each column solves `h_i = 1 + Σ_k W_ik h_k` on `i ≠ j`.
pub fn hitting_times(w: &Matrix) -> Result<Matrix> {
    let n = w.n();
    let mut h = Matrix::zeros(n);
    if n < 2 {
        return Ok(h);
    }
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let sys = Matrix::from_fn(n - 1, |a, b| {
            let (i, k) = (others[a], others[b]);
            let id = if i == k { 1.0 } else { 0.0 };
            id - w[(i, k)]
        });
        let x = solve(&sys, &vec![1.0; n - 1])?;
        for (a, &i) in others.iter().enumerate() {
            h[(i, j)] = x[a];
        }
    }
    Ok(h)
}

/// One neighbor pair checked against `H(i→j) <= 1/(π_j W_ji)` with uniform
/// `π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborHitting {
    pub from: usize,
    pub to: usize,
    pub hitting_time: f64,
    pub bound: f64,
}

impl NeighborHitting {
    pub fn holds(&self) -> bool {
        self.hitting_time <= self.bound * (1.0 + 1e-12)
    }
}

/// Hitting times between every ordered neighbor pair of `g` with their bound.
pub fn neighbor_hitting_bounds(w: &Matrix, g: &WeightedGraph) -> Result<Vec<NeighborHitting>> {
    let h = hitting_times(w)?;
    let n = g.n() as f64;
    let mut out = Vec::new();
    for i in 0..g.n() {
        for &(j, _) in g.neighbors(i) {
            out.push(NeighborHitting {
                from: i,
                to: j,
                hitting_time: h[(i, j)],
                bound: n / w[(j, i)],
            });
        }
    }
    Ok(out)
}

/// Total-variation distance, half the L1 distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Smallest `k` with `max_i ‖e_iᵀ Wᵏ - π‖_TV <= ε` for uniform `π`.
pub fn mixing_time_empirical(w: &Matrix, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps = {eps} must lie in (0, 1)")));
    }
    let n = w.n();
    let pi = vec![1.0 / n as f64; n];
    let worst = |q: &Matrix| {
        (0..n)
            .map(|i| total_variation(q.row(i), &pi))
            .fold(0.0, f64::max)
    };
    let mut q = Matrix::identity(n);
    if worst(&q) <= eps {
        return Ok(0);
    }
    for k in 1..=MIXING_CAP {
        q = q.matmul(w);
        if worst(&q) <= eps {
            return Ok(k);
        }
    }
    Err(Error::NotMixed(MIXING_CAP))
}

/// Diameter-based eigenvalue bounds for the resistance and lazy Metropolis
/// chains on one graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterBoundCheck {
    pub n: usize,
    pub diameter: usize,
    pub lambda_resistance: f64,
    /// `1 - 1/(6 D n³)`.
    pub bound_resistance: f64,
    pub lambda_metropolis: f64,
    /// `1 - 1/(71 n³)`.
    pub bound_metropolis: f64,
}

impl DiameterBoundCheck {
    pub fn holds(&self) -> bool {
        self.lambda_resistance <= self.bound_resistance
    }

    pub fn slack(&self) -> f64 {
        self.bound_resistance - self.lambda_resistance
    }

    pub fn metropolis_holds(&self) -> bool {
        self.lambda_metropolis <= self.bound_metropolis
    }

    /// Whether the resistance bound is the smaller of the two, which happens
    /// exactly when `6 D < 71`, i.e. `D <= 11`.
    pub fn resistance_bound_tighter(&self) -> bool {
        self.bound_resistance < self.bound_metropolis
    }
}

pub fn diameter_eigen_bound_check(g: &WeightedGraph) -> Result<DiameterBoundCheck> {
    let d = diameter(g)?;
    let n = g.n();
    let n3 = (n as f64) * (n as f64) * (n as f64);
    let r = effective_resistances(g)?;
    let lam = |scheme| -> Result<f64> {
        let w = expected_iteration_matrix(&build_activation(g, scheme, Some(&r))?);
        spectrum(&w)?
            .second_largest()
            .ok_or_else(|| Error::param("graph needs at least two nodes"))
    };
    Ok(DiameterBoundCheck {
        n,
        diameter: d,
        lambda_resistance: lam(Scheme::Resistance)?,
        bound_resistance: 1.0 - 1.0 / (6.0 * d as f64 * n3),
        lambda_metropolis: lam(Scheme::Metropolis)?,
        bound_metropolis: 1.0 - 1.0 / (71.0 * n3),
    })
}
