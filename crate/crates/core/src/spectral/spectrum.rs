use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{symmetric_eigenvalues, Matrix, SYMMETRY_TOL};
use crate::spectral::Scheme;
use crate::{math, Error, Result};

/// Eigenvalues below this distance apart are reported as one multiple value.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

/// Ascending eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn from_unsorted(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Spectrum { eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn largest(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// `λ_{n-1}`, the quantity that governs averaging speed.
    pub fn second_largest(&self) -> Option<f64> {
        let n = self.eigenvalues.len();
        (n >= 2).then(|| self.eigenvalues[n - 2])
    }

    /// `(value, multiplicity)` pairs, merging neighbors closer than
    /// [`MULTIPLICITY_TOL`]. Each group reports its mean.
    pub fn grouped(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for &v in &self.eigenvalues {
            match out.last_mut() {
                Some((mean, k)) if v - last <= MULTIPLICITY_TOL => {
                    *mean = (*mean * *k as f64 + v) / (*k + 1) as f64;
                    *k += 1;
                }
                _ => out.push((v, 1)),
            }
            last = v;
        }
        out
    }

    /// Largest elementwise gap to `other` after sorting both; `None` when the
    /// lengths differ.
    pub fn max_deviation(&self, other: &Spectrum) -> Option<f64> {
        (self.len() == other.len()).then(|| {
            self.eigenvalues
                .iter()
                .zip(&other.eigenvalues)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// Full spectrum of a symmetric matrix. Rejects `‖W - Wᵀ‖_∞ > 1e-10`.
pub fn spectrum(w: &Matrix) -> Result<Spectrum> {
    w.ensure_symmetric(SYMMETRY_TOL)?;
    Ok(Spectrum {
        eigenvalues: symmetric_eigenvalues(w)?,
    })
}

/// The five weights of an edge-weighted barbell: bridge `A`, bridge-end to
/// its clique `B`, interior clique edges `C`, interior self-loops `D`,
/// bridge-end self-loops `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarbellConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub g: f64,
}

impl BarbellConstants {
    /// Entries of the expected iteration matrix for the uniform scheme on a
    /// barbell with `n = 2 * clique_size` nodes.
    pub fn uniform(clique_size: usize) -> Self {
        let n = 2.0 * clique_size as f64;
        let n2 = n * n;
        BarbellConstants {
            a: 2.0 / n2,
            b: (n - 1.0) / (n2 * (n / 2.0 - 1.0)),
            c: 2.0 / (n * (n - 2.0)),
            d: (n * n2 - 3.0 * n2 + 2.0 * n + 2.0) / (n2 * (n - 2.0)),
            g: 1.0 - (n + 1.0) / n2,
        }
    }

    /// Same for the resistance scheme.
    pub fn resistance(clique_size: usize) -> Self {
        let n = 2.0 * clique_size as f64;
        let bc = 2.0 / (n * (n - 1.0));
        BarbellConstants {
            a: 1.0 / (2.0 * (n - 1.0)),
            b: bc,
            c: bc,
            d: (n * n - 2.0 * n + 2.0) / (n * (n - 1.0)),
            g: 1.0 - (1.5 * n - 2.0) / (n * (n - 1.0)),
        }
    }

    pub fn for_scheme(scheme: Scheme, clique_size: usize) -> Result<Self> {
        match scheme {
            Scheme::Uniform => Ok(Self::uniform(clique_size)),
            Scheme::Resistance => Ok(Self::resistance(clique_size)),
            other => Err(Error::param(alloc::format!(
                "no barbell closed form for scheme `{}`",
                other.name()
            ))),
        }
    }

    /// Row sums of the bridge-end and interior rows, `A + G + (s-1)B` and
    /// `B + D + (s-2)C`.
    pub fn row_sums(&self, clique_size: usize) -> (f64, f64) {
        let s = clique_size as f64;
        (
            self.a + self.g + (s - 1.0) * self.b,
            self.b + self.d + (s - 2.0) * self.c,
        )
    }

    /// Symmetric weight matrix of the barbell with these constants; the
    /// bridge is `(s-1, s)` as in the generators.
    pub fn weight_matrix(&self, clique_size: usize) -> Matrix {
        let s = clique_size;
        let (left, right) = (s - 1, s);
        let end = |i: usize| i == left || i == right;
        let side = |i: usize| i / s;
        Matrix::from_fn(2 * s, |i, j| {
            if i == j {
                if end(i) {
                    self.g
                } else {
                    self.d
                }
            } else if side(i) != side(j) {
                if end(i) && end(j) {
                    self.a
                } else {
                    0.0
                }
            } else if end(i) || end(j) {
                self.b
            } else {
                self.c
            }
        })
    }
}

/// Eigenvalues of the row-normalized edge-weighted barbell transition matrix.
/// `c` has multiplicity `2s - 4`; the others are simple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarbellEigenvalues {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub plus: f64,
    pub minus: f64,
    pub clique_size: usize,
}

impl BarbellEigenvalues {
    pub fn to_spectrum(&self) -> Spectrum {
        let mut v = vec![self.a, self.b, self.plus, self.minus];
        v.extend(core::iter::repeat(self.c).take(2 * self.clique_size - 4));
        Spectrum::from_unsorted(v)
    }
}

fn check_constants(k: &BarbellConstants, clique_size: usize) -> Result<()> {
    if clique_size < 3 {
        return Err(Error::param("the barbell closed form needs clique_size >= 3"));
    }
    let all = [k.a, k.b, k.c, k.d, k.g];
    if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::param("barbell constants must be positive and finite"));
    }
    Ok(())
}

/// Eigenvalues of the transition matrix `W_ij = w_ij / Σ_j w_ij` on the
/// edge-weighted barbell, for arbitrary positive constants.
pub fn general_barbell_eigenvalues(
    k: &BarbellConstants,
    clique_size: usize,
) -> Result<BarbellEigenvalues> {
    check_constants(k, clique_size)?;
    let s = clique_size as f64;
    let e = (s - 1.0) * k.b;
    let f = k.d + (s - 2.0) * k.c;
    let end_row = k.a + k.g + e;
    let mid_row = k.b + f;
    let t = f / mid_row + (k.g - k.a) / end_row;
    let disc = t * t - 4.0 * (f * k.g - k.b * e - k.a * f) / (mid_row * end_row);
    let root = math::sqrt(disc.max(0.0));
    Ok(BarbellEigenvalues {
        a: 1.0,
        b: -1.0 + (k.a + k.g) / end_row + f / mid_row,
        c: (k.d - k.c) / mid_row,
        plus: 0.5 * (t + root),
        minus: 0.5 * (t - root),
        clique_size,
    })
}

/// Same eigenvalues in their simplified form, valid when both row sums are
/// already one (the expected iteration matrices are doubly stochastic).
pub fn normalized_barbell_eigenvalues(
    k: &BarbellConstants,
    clique_size: usize,
) -> Result<BarbellEigenvalues> {
    check_constants(k, clique_size)?;
    let s = clique_size as f64;
    let e = (s - 1.0) * k.b;
    let f = k.d + (s - 2.0) * k.c;
    let diff = f - k.g + k.a;
    let root = math::sqrt(diff * diff + 4.0 * k.b * e);
    Ok(BarbellEigenvalues {
        a: 1.0,
        b: -1.0 + k.a + k.g + f,
        c: k.d - k.c,
        plus: 0.5 * (f + k.g - k.a + root),
        minus: 0.5 * (f + k.g - k.a - root),
        clique_size,
    })
}

/// Closed-form spectrum of the expected iteration matrix on the barbell with
/// cliques of `clique_size` nodes.
pub fn barbell_closed_form_spectrum(clique_size: usize, scheme: Scheme) -> Result<Spectrum> {
    let k = BarbellConstants::for_scheme(scheme, clique_size)?;
    normalized_barbell_eigenvalues(&k, clique_size).map(|e| e.to_spectrum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate_graph, GraphSpec};
    use crate::resistance::effective_resistances;
    use crate::spectral::{build_activation, expected_iteration_matrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn numeric(clique_size: usize, scheme: Scheme) -> (Matrix, Spectrum) {
        let g = generate_graph(&GraphSpec::barbell(clique_size)).unwrap();
        let r = effective_resistances(&g).unwrap();
        let w = expected_iteration_matrix(&build_activation(&g, scheme, Some(&r)).unwrap());
        let s = spectrum(&w).unwrap();
        (w, s)
    }

    #[test]
    fn identity_spectrum() {
        let s = spectrum(&Matrix::identity(5)).unwrap();
        assert!(s.eigenvalues.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert_eq!(s.grouped(), vec![(1.0, 5)]);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_row_major(2, vec![0.5, 0.5, 0.4, 0.6]).unwrap();
        assert!(matches!(spectrum(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn hand_computed_second_eigenvalues() {
        // Independent evaluation of the λ_+ expression at n = 10.
        let r = (160.0 / 90.0 + libm::sqrt(320.0 / 8100.0)) / 2.0;
        let u = (1.8475 + libm::sqrt(0.0196562)) / 2.0;
        assert_abs_diff_eq!(r, 0.988270, epsilon = 1e-6);
        assert_abs_diff_eq!(u, 0.993850, epsilon = 1e-6);

        let cr = barbell_closed_form_spectrum(5, Scheme::Resistance).unwrap();
        let cu = barbell_closed_form_spectrum(5, Scheme::Uniform).unwrap();
        assert_abs_diff_eq!(cr.second_largest().unwrap(), r, epsilon = 1e-6);
        assert_abs_diff_eq!(cu.second_largest().unwrap(), u, epsilon = 1e-6);

        let (_, nr) = numeric(5, Scheme::Resistance);
        let (_, nu) = numeric(5, Scheme::Uniform);
        assert_abs_diff_eq!(nr.second_largest().unwrap(), 0.988270, epsilon = 1e-6);
        assert_abs_diff_eq!(nu.second_largest().unwrap(), 0.993850, epsilon = 1e-6);
    }

    #[test]
    fn constants_match_the_built_matrices() {
        for s in 3..12 {
            for scheme in [Scheme::Uniform, Scheme::Resistance] {
                let k = BarbellConstants::for_scheme(scheme, s).unwrap();
                let (w, _) = numeric(s, scheme);
                assert!(k.weight_matrix(s).sub(&w).max_abs() < 1e-14, "{scheme:?} s={s}");
                let (r1, r2) = k.row_sums(s);
                assert_abs_diff_eq!(r1, 1.0, epsilon = 1e-14);
                assert_abs_diff_eq!(r2, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn closed_form_matches_numeric_spectrum() {
        for s in 3..=30 {
            for scheme in [Scheme::Uniform, Scheme::Resistance] {
                let closed = barbell_closed_form_spectrum(s, scheme).unwrap();
                let (_, num) = numeric(s, scheme);
                let dev = closed.max_deviation(&num).unwrap();
                assert!(dev < 1e-9, "{scheme:?} s={s}: {dev}");
            }
        }
    }

    #[test]
    fn general_form_reduces_to_normalized_form() {
        for s in 3..15 {
            for scheme in [Scheme::Uniform, Scheme::Resistance] {
                let k = BarbellConstants::for_scheme(scheme, s).unwrap();
                let a = general_barbell_eigenvalues(&k, s).unwrap();
                let b = normalized_barbell_eigenvalues(&k, s).unwrap();
                for (x, y) in [(a.b, b.b), (a.c, b.c), (a.plus, b.plus), (a.minus, b.minus)] {
                    assert_abs_diff_eq!(x, y, epsilon = 1e-13);
                }
            }
        }
    }

    // Row-normalized W is reversible, so D^{-1/2} w D^{-1/2} shares its spectrum.
    fn transition_spectrum(k: &BarbellConstants, s: usize) -> Spectrum {
        let w = k.weight_matrix(s);
        let d: Vec<f64> = w.row_sums();
        let sym = Matrix::from_fn(2 * s, |i, j| w[(i, j)] / libm::sqrt(d[i] * d[j]));
        spectrum(&sym).unwrap()
    }

    #[test]
    fn general_form_with_unit_constants() {
        let k = BarbellConstants {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            d: 1.0,
            g: 1.0,
        };
        let closed = general_barbell_eigenvalues(&k, 4).unwrap().to_spectrum();
        let num = transition_spectrum(&k, 4);
        assert_eq!(closed.len(), 8);
        assert!(closed.max_deviation(&num).unwrap() < 1e-10);
    }

    #[test]
    fn rejects_small_or_nonpositive_inputs() {
        assert!(barbell_closed_form_spectrum(2, Scheme::Uniform).is_err());
        assert!(barbell_closed_form_spectrum(5, Scheme::Metropolis).is_err());
        let mut k = BarbellConstants::uniform(5);
        k.c = 0.0;
        assert!(general_barbell_eigenvalues(&k, 5).is_err());
    }

    #[test]
    fn grouping_reports_multiplicities() {
        let s = barbell_closed_form_spectrum(6, Scheme::Resistance).unwrap();
        let groups = s.grouped();
        assert_eq!(groups.iter().map(|g| g.1).sum::<usize>(), 12);
        // λ_b coincides with λ_c for this scheme, so the group holds 8 + 1.
        assert!(groups.iter().any(|&(_, k)| k == 9));
    }

    proptest! {
        #[test]
        fn general_form_matches_random_weights(
            s in 3usize..9,
            a in 0.05f64..3.0, b in 0.05f64..3.0, c in 0.05f64..3.0,
            d in 0.05f64..3.0, g in 0.05f64..3.0,
        ) {
            let k = BarbellConstants { a, b, c, d, g };
            let closed = general_barbell_eigenvalues(&k, s).unwrap().to_spectrum();
            let num = transition_spectrum(&k, s);
            prop_assert!(closed.max_deviation(&num).unwrap() < 1e-9);
        }
    }
}
