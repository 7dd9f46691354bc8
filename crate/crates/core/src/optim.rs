//! Distributed regularized logistic regression solved with EXTRA.
//!
//! Node `i` holds `Ns` labelled samples and the local objective
//!
//! ```text
//! f_i(x) = ‖x‖² / (2n) + (1/Ns) Σ_ℓ log(1 + exp(-b_iℓ a_iℓᵀ x))
//! ```
//!
//! so `Σ_i f_i` is 1-strongly convex. With stacked iterates `X` (row `i` at
//! node `i`) and `W̃ = (I + W)/2`, EXTRA runs
//!
//! ```text
//! X¹     = W X⁰ - α ∇f(X⁰)
//! X^{k+2} = (I + W) X^{k+1} - W̃ X^k - α (∇f(X^{k+1}) - ∇f(X^k))
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::graphs::{laplacian, WeightedGraph};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::resistance::ResistanceMatrix;
use crate::{math, rng, Error, Result};

/// Metric magnitude treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e10;

/// Gradient-descent iteration cap of [`reference_solution`].
pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegProblem {
    pub n: usize,
    pub p: usize,
    pub ns: usize,
    pub sigma: f64,
    /// Features, node-major then sample-major: `a[(i * ns + l) * p + c]`.
    pub features: Vec<f64>,
    /// Labels in `{-1, +1}`, `labels[i * ns + l]`.
    pub labels: Vec<f64>,
}

impl LogRegProblem {
    pub fn sample(&self, i: usize, l: usize) -> &[f64] {
        let start = (i * self.ns + l) * self.p;
        &self.features[start..start + self.p]
    }

    pub fn label(&self, i: usize, l: usize) -> f64 {
        self.labels[i * self.ns + l]
    }

    /// `f_i(x)`.
    pub fn local_value(&self, i: usize, x: &[f64]) -> f64 {
        let ridge = x.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.n as f64);
        let loss: f64 = (0..self.ns)
            .map(|l| {
                let z: f64 = self.sample(i, l).iter().zip(x).map(|(a, b)| a * b).sum();
                math::softplus(-self.label(i, l) * z)
            })
            .sum();
        ridge + loss / self.ns as f64
    }

    /// `∇f_i(x)` written into `out`.
    pub fn local_grad_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let inv_n = 1.0 / self.n as f64;
        for (o, v) in out.iter_mut().zip(x) {
            *o = v * inv_n;
        }
        let inv_ns = 1.0 / self.ns as f64;
        for l in 0..self.ns {
            let a = self.sample(i, l);
            let b = self.label(i, l);
            let z: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum();
            let coef = -b * math::sigmoid(-b * z) * inv_ns;
            for (o, u) in out.iter_mut().zip(a) {
                *o += coef * u;
            }
        }
    }

    pub fn local_grad(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.p];
        self.local_grad_into(i, x, &mut g);
        g
    }

    /// `Σ_i f_i(x)`.
    pub fn total_value(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| self.local_value(i, x)).sum()
    }

    pub fn total_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.p];
        let mut g = vec![0.0; self.p];
        for i in 0..self.n {
            self.local_grad_into(i, x, &mut g);
            for (a, v) in acc.iter_mut().zip(&g) {
                *a += v;
            }
        }
        acc
    }

    /// Smoothness constant of `f_i`: `1/n + λ_max(A_iᵀA_i) / (4 Ns)`.
    pub fn lipschitz(&self, i: usize) -> f64 {
        // A_i A_iᵀ (Ns x Ns) has the same nonzero spectrum as A_iᵀ A_i.
        let gram = Matrix::from_fn(self.ns, |l, m| {
            self.sample(i, l)
                .iter()
                .zip(self.sample(i, m))
                .map(|(a, b)| a * b)
                .sum()
        });
        let top = symmetric_eigenvalues(&gram)
            .ok()
            .and_then(|v| v.last().copied())
            .unwrap_or_else(|| gram.trace());
        1.0 / self.n as f64 + top / (4.0 * self.ns as f64)
    }

    /// The looser bound `1/n + Σ_ℓ ‖a_iℓ‖² / (4 Ns)`.
    pub fn lipschitz_trace_bound(&self, i: usize) -> f64 {
        let sq: f64 = (0..self.ns)
            .map(|l| self.sample(i, l).iter().map(|v| v * v).sum::<f64>())
            .sum();
        1.0 / self.n as f64 + sq / (4.0 * self.ns as f64)
    }

    pub fn max_lipschitz(&self) -> f64 {
        (0..self.n).map(|i| self.lipschitz(i)).fold(0.0, f64::max)
    }
}

/// Synthetic data: `a ~ N(1, σ² I)` and `b = -1` iff `sigmoid(aᵀ1) <= 0.55`.
pub fn generate_problem(n: usize, p: usize, ns: usize, sigma: f64, seed: u64) -> Result<LogRegProblem> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma = {sigma} must be positive")));
    }
    if n == 0 || p == 0 || ns == 0 {
        return Err(Error::param("n, p and Ns must be positive"));
    }
    let normal = Normal::new(1.0, sigma).map_err(|e| Error::param(format!("{e}")))?;
    let mut rng = rng::seeded(seed);
    let mut features = Vec::with_capacity(n * ns * p);
    let mut labels = Vec::with_capacity(n * ns);
    for _ in 0..n * ns {
        let start = features.len();
        for _ in 0..p {
            features.push(normal.sample(&mut rng));
        }
        labels.push(label_for(&features[start..]));
    }
    Ok(LogRegProblem {
        n,
        p,
        ns,
        sigma,
        features,
        labels,
    })
}

/// Label rule: `-1` when `sigmoid(aᵀ1) <= 0.55`, else `+1`.
pub fn label_for(a: &[f64]) -> f64 {
    if math::sigmoid(a.iter().sum()) <= 0.55 {
        -1.0
    } else {
        1.0
    }
}

/// Minimizer of `Σ_i f_i` by gradient descent with backtracking, stopped at
/// `‖∇‖ <= tol`.
pub fn reference_solution(prob: &LogRegProblem, tol: f64, start: Option<&[f64]>) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::param("tol must be positive"));
    }
    let mut x = match start {
        Some(s) if s.len() == prob.p => s.to_vec(),
        Some(s) => {
            return Err(Error::Dimension {
                expected: prob.p,
                got: s.len(),
            })
        }
        None => vec![0.0; prob.p],
    };
    let mut fx = prob.total_value(&x);
    // Steps below 2/L converge even when the sufficient-decrease test is lost
    // in rounding near the optimum.
    let max_step = 2.0 / (0..prob.n).map(|i| prob.lipschitz(i)).sum::<f64>();
    let mut step = max_step;
    for _ in 0..REFERENCE_MAX_ITERS {
        let g = prob.total_grad(&x);
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if math::sqrt(gg) <= tol {
            return Ok(x);
        }
        step = (step * 2.0).min(max_step);
        loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let ft = prob.total_value(&trial);
            let slack = 8.0 * f64::EPSILON * fx.abs();
            if ft <= fx - 0.5 * step * gg + slack || step < 1e-12 {
                x = trial;
                fx = ft;
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::IterationCap(REFERENCE_MAX_ITERS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommFlavor {
    /// The graph Laplacian.
    UniformDpga,
    /// Laplacian with edge weights `R_ij`.
    ResistanceDpga,
    /// `I - L/τ`.
    UniformExtra,
    /// `I - L_R/τ` with `L_R` the resistance-weighted Laplacian.
    ResistanceExtra,
}

impl CommFlavor {
    pub fn name(self) -> &'static str {
        match self {
            CommFlavor::UniformDpga => "uniform_dpga",
            CommFlavor::ResistanceDpga => "resistance_dpga",
            CommFlavor::UniformExtra => "uniform_extra",
            CommFlavor::ResistanceExtra => "resistance_extra",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uniform_dpga" => CommFlavor::UniformDpga,
            "resistance_dpga" => CommFlavor::ResistanceDpga,
            "uniform_extra" => CommFlavor::UniformExtra,
            "resistance_extra" => CommFlavor::ResistanceExtra,
            _ => return None,
        })
    }

    pub fn needs_resistance(self) -> bool {
        matches!(self, CommFlavor::ResistanceDpga | CommFlavor::ResistanceExtra)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommMatrix {
    pub w: Matrix,
    pub flavor: CommFlavor,
    /// Scaling `τ = λ_max/2 + 0.01` of the extra flavors.
    pub tau: Option<f64>,
}

/// Laplacian of `g` reweighted by effective resistances.
pub fn resistance_laplacian(g: &WeightedGraph, r: &ResistanceMatrix) -> Matrix {
    let mut l = Matrix::zeros(g.n());
    for &(i, j, _) in g.edges() {
        let v = r.get(i, j);
        l[(i, j)] -= v;
        l[(j, i)] -= v;
        l[(i, i)] += v;
        l[(j, j)] += v;
    }
    l
}

pub fn build_comm_matrix(
    g: &WeightedGraph,
    flavor: CommFlavor,
    r: Option<&ResistanceMatrix>,
) -> Result<CommMatrix> {
    let base = if flavor.needs_resistance() {
        let r = r.ok_or(Error::MissingResistance(flavor.name()))?;
        if r.n() != g.n() {
            return Err(Error::Dimension {
                expected: g.n(),
                got: r.n(),
            });
        }
        resistance_laplacian(g, r)
    } else {
        laplacian(g)
    };
    match flavor {
        CommFlavor::UniformDpga | CommFlavor::ResistanceDpga => Ok(CommMatrix {
            w: base,
            flavor,
            tau: None,
        }),
        CommFlavor::UniformExtra | CommFlavor::ResistanceExtra => {
            let top = symmetric_eigenvalues(&base)?.last().copied().unwrap_or(0.0);
            let tau = top / 2.0 + 0.01;
            let w = Matrix::identity(g.n()).sub(&base.scaled(1.0 / tau));
            Ok(CommMatrix {
                w,
                flavor,
                tau: Some(tau),
            })
        }
    }
}

/// `λ_min((I + W)/2)`.
pub fn lambda_min_tilde(w: &Matrix) -> Result<f64> {
    let tilde = Matrix::identity(w.n()).add(w).scaled(0.5);
    Ok(symmetric_eigenvalues(&tilde)?[0])
}

/// Default step `2 λ_min(W̃) / max_i L_i`.
pub fn extra_step_size(prob: &LogRegProblem, w: &Matrix) -> Result<f64> {
    let lam = lambda_min_tilde(w)?;
    if !(lam > 0.0) {
        return Err(Error::param(format!(
            "λ_min((I + W)/2) = {lam} must be positive for EXTRA"
        )));
    }
    Ok(2.0 * lam / prob.max_lipschitz())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    /// `‖X - 1x*ᵀ‖ / ‖1x*ᵀ‖` (absolute when `x* = 0`).
    pub subopt: f64,
    /// `Σ_i f_i(x_i)`.
    pub fval: f64,
    /// `‖X - 1x̄ᵀ‖ / √n`.
    pub consensus_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtraConfig {
    pub rounds: usize,
    /// Overrides the default step size.
    pub step: Option<f64>,
}

/// Per-node starting points: components uniform in `[500, 510]` on the first
/// `⌊n/2⌋` nodes and in `[-500, -490]` on the rest. Row-major `n x p`.
pub fn split_initialization(n: usize, p: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    let mut x = Vec::with_capacity(n * p);
    for i in 0..n {
        let lo = if i < n / 2 { 500.0 } else { -500.0 };
        for _ in 0..p {
            x.push(lo + 10.0 * rng.random::<f64>());
        }
    }
    x
}

fn metrics(prob: &LogRegProblem, x: &[f64], x_star: &[f64], star_norm: f64, round: usize) -> RoundMetrics {
    let (n, p) = (prob.n, prob.p);
    let mut mean = vec![0.0; p];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(&x[i * p..(i + 1) * p]) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut dev = 0.0;
    let mut dist = 0.0;
    let mut fval = 0.0;
    for i in 0..n {
        let row = &x[i * p..(i + 1) * p];
        for c in 0..p {
            dev += (row[c] - mean[c]) * (row[c] - mean[c]);
            dist += (row[c] - x_star[c]) * (row[c] - x_star[c]);
        }
        fval += prob.local_value(i, row);
    }
    let tiled = star_norm * math::sqrt(n as f64);
    RoundMetrics {
        round,
        subopt: if tiled > 0.0 {
            math::sqrt(dist) / tiled
        } else {
            math::sqrt(dist)
        },
        fval,
        consensus_violation: math::sqrt(dev / n as f64),
    }
}

fn stacked_grad(prob: &LogRegProblem, x: &[f64], out: &mut [f64]) {
    let p = prob.p;
    for i in 0..prob.n {
        prob.local_grad_into(i, &x[i * p..(i + 1) * p], &mut out[i * p..(i + 1) * p]);
    }
}

/// Runs EXTRA for `cfg.rounds` synchronous rounds from the stacked start
/// `x0`. Returns metrics for rounds `0..=rounds`.
pub fn extra_run(
    prob: &LogRegProblem,
    w: &Matrix,
    x0: &[f64],
    x_star: &[f64],
    cfg: &ExtraConfig,
) -> Result<Vec<RoundMetrics>> {
    let (n, p) = (prob.n, prob.p);
    if w.n() != n {
        return Err(Error::Dimension {
            expected: n,
            got: w.n(),
        });
    }
    if x0.len() != n * p {
        return Err(Error::Dimension {
            expected: n * p,
            got: x0.len(),
        });
    }
    if x_star.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: x_star.len(),
        });
    }
    if cfg.rounds < 1 {
        return Err(Error::param("EXTRA needs at least one round"));
    }
    w.ensure_symmetric(1e-10)?;
    let alpha = match cfg.step {
        Some(a) => a,
        None => extra_step_size(prob, w)?,
    };
    let star_norm = math::sqrt(x_star.iter().map(|v| v * v).sum());
    // I + W and W̃ = (I + W)/2.
    let i_plus_w = Matrix::identity(n).add(w);
    let w_tilde = i_plus_w.scaled(0.5);

    let mut trace = Vec::with_capacity(cfg.rounds + 1);
    let check = |m: RoundMetrics, trace: &mut Vec<RoundMetrics>| -> Result<()> {
        trace.push(m);
        let vals = [m.subopt, m.fval.abs(), m.consensus_violation];
        if vals.iter().any(|v| !v.is_finite() || *v > DIVERGENCE_LIMIT) {
            return Err(Error::Diverged {
                round: m.round,
                trace: alloc::boxed::Box::new(core::mem::take(trace)),
            });
        }
        Ok(())
    };

    let mut prev = x0.to_vec();
    let mut g_prev = vec![0.0; n * p];
    stacked_grad(prob, &prev, &mut g_prev);
    check(metrics(prob, &prev, x_star, star_norm, 0), &mut trace)?;

    let mut cur = w.mul_block(&prev, p);
    for (c, g) in cur.iter_mut().zip(&g_prev) {
        *c -= alpha * g;
    }
    check(metrics(prob, &cur, x_star, star_norm, 1), &mut trace)?;
    let mut g_cur = vec![0.0; n * p];

    for round in 2..=cfg.rounds {
        stacked_grad(prob, &cur, &mut g_cur);
        let a = i_plus_w.mul_block(&cur, p);
        let b = w_tilde.mul_block(&prev, p);
        let next: Vec<f64> = (0..n * p)
            .map(|k| a[k] - b[k] - alpha * (g_cur[k] - g_prev[k]))
            .collect();
        prev = core::mem::replace(&mut cur, next);
        core::mem::swap(&mut g_prev, &mut g_cur);
        check(metrics(prob, &cur, x_star, star_norm, round), &mut trace)?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate_graph, GraphSpec};
    use crate::resistance::effective_resistances;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn zero_problem(n: usize, p: usize) -> LogRegProblem {
        LogRegProblem {
            n,
            p,
            ns: 2,
            sigma: 1.0,
            features: vec![0.0; n * 2 * p],
            labels: vec![-1.0; n * 2],
        }
    }

    #[test]
    fn problem_shape_and_determinism() {
        let a = generate_problem(20, 20, 5, 1.0, 7).unwrap();
        assert_eq!(a.features.len(), 20 * 5 * 20);
        assert_eq!(a.labels.len(), 100);
        assert_eq!(a, generate_problem(20, 20, 5, 1.0, 7).unwrap());
        assert_ne!(a, generate_problem(20, 20, 5, 1.0, 8).unwrap());
        assert!(a.labels.iter().all(|&b| b == 1.0 || b == -1.0));
        assert!(generate_problem(2, 2, 2, 0.0, 0).is_err());
    }

    #[test]
    fn label_threshold() {
        assert_eq!(label_for(&[1.0, -1.0]), -1.0);
        assert_eq!(label_for(&[0.1, 0.0]), -1.0);
        assert_eq!(label_for(&[0.3, 0.0]), 1.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let prob = generate_problem(4, 6, 5, 1.5, 3).unwrap();
        let x: Vec<f64> = (0..6).map(|c| 0.1 * c as f64 - 0.2).collect();
        for i in 0..4 {
            let g = prob.local_grad(i, &x);
            for c in 0..6 {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let fd = (prob.local_value(i, &xp) - prob.local_value(i, &xm)) / (2.0 * h);
                assert!((fd - g[c]).abs() <= 1e-6 * g[c].abs().max(1e-3), "{fd} vs {}", g[c]);
            }
        }
    }

    #[test]
    fn lipschitz_bounds_are_ordered_and_valid() {
        let prob = generate_problem(5, 8, 5, 2.0, 1).unwrap();
        let x = vec![0.3; 8];
        for i in 0..5 {
            let l = prob.lipschitz(i);
            assert!(l <= prob.lipschitz_trace_bound(i) + 1e-12);
            // Numeric Hessian-vector checks in random directions never exceed L.
            for d in 0..8 {
                let mut dir = vec![0.0; 8];
                dir[d] = 1.0;
                let h = 1e-5;
                let xp: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
                let gp = prob.local_grad(i, &xp);
                let g0 = prob.local_grad(i, &x);
                let hv: f64 = gp.iter().zip(&g0).map(|(a, b)| ((a - b) / h).powi(2)).sum();
                assert!(math::sqrt(hv) <= l * (1.0 + 1e-4));
            }
        }
    }

    #[test]
    fn reference_solution_is_unique_and_stationary() {
        let prob = generate_problem(6, 5, 5, 1.0, 9).unwrap();
        let a = reference_solution(&prob, 1e-10, None).unwrap();
        let b = reference_solution(&prob, 1e-10, Some(&[3.0, -2.0, 1.0, 0.0, 5.0])).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
        let g = prob.total_grad(&a);
        assert!(math::sqrt(g.iter().map(|v| v * v).sum()) <= 1e-10);
        let zero = zero_problem(3, 4);
        assert_eq!(reference_solution(&zero, 1e-10, None).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn comm_matrices() {
        let g = generate_graph(&GraphSpec::barbell(5)).unwrap();
        let r = effective_resistances(&g).unwrap();
        let dpga = build_comm_matrix(&g, CommFlavor::ResistanceDpga, Some(&r)).unwrap();
        for s in dpga.w.row_sums() {
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(dpga.w[(4, 4)], 2.6, epsilon = 1e-12);
        let ue = build_comm_matrix(&g, CommFlavor::UniformExtra, None).unwrap();
        for s in ue.w.row_sums() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        for flavor in [CommFlavor::UniformExtra, CommFlavor::ResistanceExtra] {
            let c = build_comm_matrix(&g, flavor, Some(&r)).unwrap();
            assert!(lambda_min_tilde(&c.w).unwrap() > 0.0);
        }
        assert_eq!(
            build_comm_matrix(&g, CommFlavor::ResistanceExtra, None),
            Err(Error::MissingResistance("resistance_extra"))
        );
    }

    #[test]
    fn fixed_point_stays_put() {
        let g = generate_graph(&GraphSpec::barbell(3)).unwrap();
        let prob = zero_problem(6, 3);
        let w = build_comm_matrix(&g, CommFlavor::UniformExtra, None).unwrap().w;
        let x0 = vec![0.0; 18];
        let trace = extra_run(&prob, &w, &x0, &[0.0; 3], &ExtraConfig { rounds: 50, step: None }).unwrap();
        assert_eq!(trace.len(), 51);
        for m in &trace {
            assert_eq!(m.subopt, 0.0);
            assert_eq!(m.consensus_violation, 0.0);
        }
    }

    #[test]
    fn single_node_is_gradient_descent() {
        let prob = generate_problem(1, 4, 5, 1.0, 2).unwrap();
        let alpha = 0.05;
        let x0 = vec![1.0, -1.0, 0.5, 2.0];
        let x_star = reference_solution(&prob, 1e-12, None).unwrap();
        let trace = extra_run(
            &prob,
            &Matrix::identity(1),
            &x0,
            &x_star,
            &ExtraConfig { rounds: 20, step: Some(alpha) },
        )
        .unwrap();
        let mut x = x0.clone();
        for m in &trace {
            let d: f64 = x.iter().zip(&x_star).map(|(a, b)| (a - b) * (a - b)).sum();
            let nrm: f64 = x_star.iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(m.subopt, math::sqrt(d / nrm), epsilon = 1e-12);
            let g = prob.local_grad(0, &x);
            x = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        }
    }

    #[test]
    fn converges_on_small_barbell() {
        let g = generate_graph(&GraphSpec::barbell(3)).unwrap();
        let prob = generate_problem(6, 4, 5, 1.0, 5).unwrap();
        let x_star = reference_solution(&prob, 1e-12, None).unwrap();
        let w = build_comm_matrix(&g, CommFlavor::UniformExtra, None).unwrap().w;
        let x0 = split_initialization(6, 4, 1);
        let trace = extra_run(&prob, &w, &x0, &x_star, &ExtraConfig { rounds: 20_000, step: None }).unwrap();
        let last = trace.last().unwrap();
        assert!(last.subopt < 1e-6, "{last:?}");
        assert!(last.consensus_violation < 1e-6);
    }

    #[test]
    fn divergence_is_reported() {
        let g = generate_graph(&GraphSpec::barbell(3)).unwrap();
        let prob = generate_problem(6, 4, 5, 1.0, 5).unwrap();
        let w = build_comm_matrix(&g, CommFlavor::UniformExtra, None).unwrap().w;
        let x0 = split_initialization(6, 4, 1);
        let res = extra_run(&prob, &w, &x0, &[0.1; 4], &ExtraConfig { rounds: 500, step: Some(50.0) });
        match res {
            Err(Error::Diverged { round, trace }) => {
                assert_eq!(trace.len(), round + 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn split_start_ranges() {
        let x = split_initialization(4, 3, 0);
        assert!(x[..6].iter().all(|v| (500.0..=510.0).contains(v)));
        assert!(x[6..].iter().all(|v| (-500.0..=-490.0).contains(v)));
    }

    proptest! {
        #[test]
        fn zero_gradient_iterates_keep_column_means(seed: u64) {
            let g = generate_graph(&GraphSpec::small_world_dense(8, seed)).unwrap();
            let w = build_comm_matrix(&g, CommFlavor::UniformExtra, None).unwrap().w;
            let x0 = split_initialization(8, 2, seed);
            // With zero data and the ridge removed the gradients vanish; emulate by
            // checking the linear recursion directly.
            let i_plus_w = Matrix::identity(8).add(&w);
            let wt = i_plus_w.scaled(0.5);
            let mut prev = x0.clone();
            let mut cur = w.mul_block(&prev, 2);
            let mean = |x: &[f64], c: usize| (0..8).map(|i| x[i * 2 + c]).sum::<f64>() / 8.0;
            for _ in 0..30 {
                let a = i_plus_w.mul_block(&cur, 2);
                let b = wt.mul_block(&prev, 2);
                let next: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                prev = core::mem::replace(&mut cur, next);
                for c in 0..2 {
                    prop_assert!((mean(&cur, c) - mean(&x0, c)).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn gradients_match_finite_differences(seed: u64, sigma in 0.5f64..3.0) {
            let prob = generate_problem(3, 5, 5, sigma, seed).unwrap();
            let mut r = rng::seeded(seed ^ 1);
            let x: Vec<f64> = (0..5).map(|_| r.random::<f64>() - 0.5).collect();
            let g = prob.local_grad(1, &x);
            for c in 0..5 {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let fd = (prob.local_value(1, &xp) - prob.local_value(1, &xm)) / (2.0 * h);
                prop_assert!((fd - g[c]).abs() <= 1e-6 * g[c].abs().max(1e-2));
            }
        }
    }
}
