use alloc::format;
use alloc::vec::Vec;

use crate::graphs::{is_connected, WeightedGraph};
use crate::linalg::Matrix;
use crate::resistance::ResistanceMatrix;
use crate::{Error, Result};

/// Tolerance on the total mass of an activation matrix.
pub const MASS_TOL: f64 = 1e-12;

/// How edge activation probabilities are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Each node wakes with probability `1/n` and picks a neighbor uniformly.
    Uniform,
    /// Edge `(i, j)` is activated with probability proportional to `R_ij`.
    Resistance,
    /// Lazy Metropolis chain divided by `n`.
    Metropolis,
    /// Anything else that passes validation, e.g. an FMMC iterate.
    Custom,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Uniform => "uniform",
            Scheme::Resistance => "resistance",
            Scheme::Metropolis => "metropolis",
            Scheme::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uniform" => Scheme::Uniform,
            "resistance" | "er" => Scheme::Resistance,
            "metropolis" => Scheme::Metropolis,
            "custom" => Scheme::Custom,
            _ => return None,
        })
    }
}

/// `P_ij` is the probability that one tick wakes node `i` and has it contact
/// `j`. Diagonal mass is a tick where nothing happens.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    pub p: Matrix,
    pub scheme: Scheme,
}

impl ActivationMatrix {
    /// Validates a user-provided matrix against `g`: nonnegative, supported on
    /// edges (no diagonal), total mass one.
    pub fn custom(g: &WeightedGraph, p: Matrix) -> Result<Self> {
        let a = ActivationMatrix {
            p,
            scheme: Scheme::Custom,
        };
        a.check_compatible(g)?;
        Ok(a)
    }

    /// Symmetric matrix with `P_ij = P_ji = mass[e]` on edge `e` of `g`.
    pub fn from_edge_masses(g: &WeightedGraph, mass: &[f64]) -> Result<Self> {
        if mass.len() != g.m() {
            return Err(Error::Dimension {
                expected: g.m(),
                got: mass.len(),
            });
        }
        let mut p = Matrix::zeros(g.n());
        for (&(i, j, _), &v) in g.edges().iter().zip(mass) {
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
        Self::custom(g, p)
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    /// Wake-up probabilities `p_i = Σ_j P_ij`.
    pub fn node_probs(&self) -> Vec<f64> {
        self.p.row_sums()
    }

    /// Probability that a tick averages the unordered pair `{i, j}`.
    pub fn pair_prob(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)] + self.p[(j, i)]
    }

    pub fn check_compatible(&self, g: &WeightedGraph) -> Result<()> {
        let n = g.n();
        if self.p.n() != n {
            return Err(Error::Incompatible(format!(
                "matrix is {}x{} but the graph has {n} nodes",
                self.p.n(),
                self.p.n()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.p[(i, j)];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Incompatible(format!(
                        "entry ({i}, {j}) = {v} is negative or not finite"
                    )));
                }
                if v == 0.0 {
                    continue;
                }
                if i == j {
                    if self.scheme != Scheme::Metropolis {
                        return Err(Error::Incompatible(format!(
                            "diagonal mass at node {i} is only allowed for the lazy metropolis scheme"
                        )));
                    }
                } else if !g.has_edge(i, j) {
                    return Err(Error::Incompatible(format!(
                        "mass on ({i}, {j}) which is not an edge"
                    )));
                }
            }
        }
        let total = self.p.sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Incompatible(format!(
                "total mass is {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Builds the activation matrix of `scheme` on `g`. The resistance scheme
/// needs the effective resistances of `g`.
pub fn build_activation(
    g: &WeightedGraph,
    scheme: Scheme,
    r: Option<&ResistanceMatrix>,
) -> Result<ActivationMatrix> {
    let n = g.n();
    if n < 2 || !is_connected(g) {
        return Err(Error::Disconnected);
    }
    let nf = n as f64;
    let mut p = Matrix::zeros(n);
    match scheme {
        Scheme::Uniform => {
            for i in 0..n {
                let v = 1.0 / (nf * g.degree(i) as f64);
                for &(j, _) in g.neighbors(i) {
                    p[(i, j)] = v;
                }
            }
        }
        Scheme::Resistance => {
            let r = r.ok_or(Error::MissingResistance("resistance"))?;
            if r.n() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: r.n(),
                });
            }
            let denom = 2.0 * r.edge_sum;
            for &(i, j, _) in g.edges() {
                let v = r.get(i, j) / denom;
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
        }
        Scheme::Metropolis => {
            let lazy = metropolis_lazy(g);
            p = lazy.scaled(1.0 / nf);
        }
        Scheme::Custom => {
            return Err(Error::param(
                "custom activation matrices are built with ActivationMatrix::custom",
            ))
        }
    }
    Ok(ActivationMatrix { p, scheme })
}

/// Metropolis weights `M_ij = 1/max(d_i, d_j)` on edges, with the remaining
/// row mass on the diagonal.
pub fn metropolis_weights(g: &WeightedGraph) -> Matrix {
    let n = g.n();
    let mut m = Matrix::zeros(n);
    for &(i, j, _) in g.edges() {
        let v = 1.0 / g.degree(i).max(g.degree(j)) as f64;
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = g.neighbors(i).iter().map(|&(j, _)| m[(i, j)]).sum();
        m[(i, i)] = 1.0 - off;
    }
    m
}

/// Lazy Metropolis chain `(I + M) / 2`.
pub fn metropolis_lazy(g: &WeightedGraph) -> Matrix {
    let m = metropolis_weights(g);
    Matrix::identity(g.n()).add(&m).scaled(0.5)
}

/// Expected one-tick averaging matrix `I - D/2 + (P + Pᵀ)/2`, where
/// `D_ii = Σ_{j≠i} (P_ij + P_ji)`. Diagonal entries of `P` do nothing.
pub fn expected_iteration_matrix(a: &ActivationMatrix) -> Matrix {
    let n = a.n();
    let p = &a.p;
    let mut w = Matrix::zeros(n);
    for i in 0..n {
        let mut d = 0.0;
        for j in 0..n {
            if i != j {
                let s = p[(i, j)] + p[(j, i)];
                w[(i, j)] = 0.5 * s;
                d += s;
            }
        }
        w[(i, i)] = 1.0 - 0.5 * d;
    }
    w
}
