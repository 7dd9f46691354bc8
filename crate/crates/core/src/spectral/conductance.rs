use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::spectral::Scheme;
use crate::{Error, Result};

/// Largest chain size accepted by [`min_conductance_bruteforce`].
pub const BRUTEFORCE_MAX_NODES: usize = 20;

/// Conductance of `set` under the uniform stationary distribution:
/// the probability flow leaving `set` divided by `min(|S|, n - |S|)`.
pub fn conductance_of_set(w: &Matrix, set: &[usize]) -> Result<f64> {
    let n = w.n();
    let mut inside = vec![false; n];
    for &i in set {
        if i >= n {
            return Err(Error::param(format!("node {i} outside 0..{n}")));
        }
        inside[i] = true;
    }
    let k = inside.iter().filter(|&&b| b).count();
    if k == 0 || k == n {
        return Err(Error::param("the set must be non-empty and proper"));
    }
    let mut flow = 0.0;
    for i in (0..n).filter(|&i| inside[i]) {
        for j in (0..n).filter(|&j| !inside[j]) {
            flow += w[(i, j)];
        }
    }
    Ok(flow / k.min(n - k) as f64)
}

/// Minimum conductance over all subsets with `|S| <= n/2`, together with the
/// minimizing set. Ties (within a relative `1e-10`) go to the
/// lexicographically smallest sorted set.
pub fn min_conductance_bruteforce(w: &Matrix) -> Result<(f64, Vec<usize>)> {
    let n = w.n();
    if n > BRUTEFORCE_MAX_NODES {
        return Err(Error::param(format!(
            "brute-force conductance enumerates 2^n subsets; n = {n} exceeds the limit of \
             {BRUTEFORCE_MAX_NODES}, use a closed form instead"
        )));
    }
    if n < 2 {
        return Err(Error::param("conductance needs at least two nodes"));
    }
    let off_row: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum())
        .collect();
    let half = n / 2;
    let size = 1usize << n;
    // cut[mask] = Σ_{i ∈ S, j ∉ S} W_ij, built by adding the highest node.
    let mut cut = vec![0.0f64; size];
    let mut best: Option<(f64, u32)> = None;
    for mask in 1..size {
        let pop = mask.count_ones() as usize;
        if pop > half {
            continue;
        }
        let v = usize::BITS - 1 - mask.leading_zeros();
        let v = v as usize;
        let rest = mask & !(1 << v);
        let mut into_rest = 0.0;
        let mut bits = rest;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            into_rest += w[(i, v)] + w[(v, i)];
            bits &= bits - 1;
        }
        cut[mask] = cut[rest] + off_row[v] - into_rest;
        let phi = cut[mask] / pop as f64;
        let mask = mask as u32;
        best = Some(match best {
            None => (phi, mask),
            Some((b, bm)) => {
                let tol = 1e-10 * b.abs().max(phi.abs());
                if phi < b - tol {
                    (phi, mask)
                } else if phi <= b + tol && lex_less(mask, bm) {
                    (phi.min(b), mask)
                } else {
                    (b, bm)
                }
            }
        });
    }
    let (_, mask) = best.expect("n >= 2 gives at least one subset");
    let set: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
    let phi = conductance_of_set(w, &set)?;
    Ok((phi, set))
}

// Lexicographic order on the sorted member lists of two bitmasks.
fn lex_less(a: u32, b: u32) -> bool {
    let (mut a, mut b) = (a, b);
    loop {
        match (a, b) {
            (0, 0) => return false,
            (0, _) => return true,
            (_, 0) => return false,
            _ => {
                let (x, y) = (a.trailing_zeros(), b.trailing_zeros());
                if x != y {
                    return x < y;
                }
                a &= a - 1;
                b &= b - 1;
            }
        }
    }
}

/// Conductance of the expected iteration matrix on the c-barbell:
/// `c*/(c s³)` for the uniform scheme and `c*/(2s(cs - 1))` for resistance,
/// with `c* = 1/⌊c/2⌋`.
pub fn c_barbell_conductance_closed_form(
    clique_size: usize,
    clique_count: usize,
    scheme: Scheme,
) -> Result<f64> {
    if clique_count < 2 {
        return Err(Error::param("the c-barbell closed form needs at least two cliques"));
    }
    if clique_size < 2 {
        return Err(Error::param("the c-barbell closed form needs clique_size >= 2"));
    }
    let s = clique_size as f64;
    let c = clique_count as f64;
    let c_star = 1.0 / (clique_count / 2) as f64;
    match scheme {
        Scheme::Uniform => Ok(c_star / (c * s * s * s)),
        Scheme::Resistance => Ok(c_star / (2.0 * s * (c * s - 1.0))),
        other => Err(Error::param(format!(
            "no c-barbell conductance closed form for scheme `{}`",
            other.name()
        ))),
    }
}

/// Nodes of the first `⌊c/2⌋` cliques, the set attaining the minimum
/// conductance on the c-barbell.
pub fn c_barbell_min_cut_set(clique_size: usize, clique_count: usize) -> Vec<usize> {
    (0..clique_size * (clique_count / 2)).collect()
}

/// `(1 - 2Φ, 1 - Φ²)`, the interval that must contain `λ_{n-1}`.
pub fn cheeger_bounds(phi: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::param(format!("conductance {phi} outside [0, 1]")));
    }
    Ok((1.0 - 2.0 * phi, 1.0 - phi * phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate_graph, GraphSpec};
    use crate::resistance::effective_resistances;
    use crate::spectral::{build_activation, expected_iteration_matrix, spectrum};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn iteration_matrix(spec: &GraphSpec, scheme: Scheme) -> Matrix {
        let g = generate_graph(spec).unwrap();
        let r = effective_resistances(&g).unwrap();
        expected_iteration_matrix(&build_activation(&g, scheme, Some(&r)).unwrap())
    }

    // Direct enumeration without the incremental cut table.
    fn naive_min(w: &Matrix) -> f64 {
        let n = w.n();
        (1u32..(1 << n))
            .filter(|m| m.count_ones() as usize <= n / 2)
            .map(|m| {
                let set: Vec<usize> = (0..n).filter(|&i| m & (1 << i) != 0).collect();
                conductance_of_set(w, &set).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn barbell_clique_conductance() {
        let left: Vec<usize> = (0..5).collect();
        let wu = iteration_matrix(&GraphSpec::barbell(5), Scheme::Uniform);
        let wr = iteration_matrix(&GraphSpec::barbell(5), Scheme::Resistance);
        assert_abs_diff_eq!(conductance_of_set(&wu, &left).unwrap(), 0.004, epsilon = 1e-15);
        assert_abs_diff_eq!(conductance_of_set(&wr, &left).unwrap(), 1.0 / 90.0, epsilon = 1e-15);
        let right: Vec<usize> = (5..10).collect();
        assert_abs_diff_eq!(
            conductance_of_set(&wu, &right).unwrap(),
            conductance_of_set(&wu, &left).unwrap(),
            epsilon = 1e-16
        );
    }

    #[test]
    fn set_validation() {
        let w = iteration_matrix(&GraphSpec::barbell(3), Scheme::Uniform);
        assert!(conductance_of_set(&w, &[]).is_err());
        assert!(conductance_of_set(&w, &[0, 1, 2, 3, 4, 5]).is_err());
        assert!(conductance_of_set(&w, &[6]).is_err());
        assert!(min_conductance_bruteforce(&Matrix::identity(21)).is_err());
    }

    #[test]
    fn bruteforce_on_barbell_and_c_barbell() {
        let wu = iteration_matrix(&GraphSpec::barbell(5), Scheme::Uniform);
        let (phi, set) = min_conductance_bruteforce(&wu).unwrap();
        assert_abs_diff_eq!(phi, 0.004, epsilon = 1e-15);
        assert_eq!(set, (0..5).collect::<Vec<_>>());

        let wr = iteration_matrix(&GraphSpec::c_barbell(4, 3), Scheme::Resistance);
        let (phi, set) = min_conductance_bruteforce(&wr).unwrap();
        assert_abs_diff_eq!(phi, 1.0 / 88.0, epsilon = 1e-15);
        assert_eq!(set, vec![0, 1, 2, 3]);

        let wu = iteration_matrix(&GraphSpec::c_barbell(4, 3), Scheme::Uniform);
        let (phi, _) = min_conductance_bruteforce(&wu).unwrap();
        assert_abs_diff_eq!(phi, 1.0 / 192.0, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_values() {
        assert_abs_diff_eq!(
            c_barbell_conductance_closed_form(5, 2, Scheme::Uniform).unwrap(),
            0.004,
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(
            c_barbell_conductance_closed_form(4, 3, Scheme::Resistance).unwrap(),
            1.0 / 88.0,
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(
            c_barbell_conductance_closed_form(4, 4, Scheme::Uniform).unwrap(),
            1.0 / 512.0,
            epsilon = 1e-16
        );
        let w = iteration_matrix(&GraphSpec::c_barbell(4, 4), Scheme::Uniform);
        let (phi, set) = min_conductance_bruteforce(&w).unwrap();
        assert_abs_diff_eq!(phi, 1.0 / 512.0, epsilon = 1e-15);
        assert_eq!(set, c_barbell_min_cut_set(4, 4));
        assert!(c_barbell_conductance_closed_form(4, 1, Scheme::Uniform).is_err());
        assert!(c_barbell_conductance_closed_form(4, 3, Scheme::Metropolis).is_err());
    }

    #[test]
    fn cheeger_examples() {
        assert_eq!(cheeger_bounds(0.0).unwrap(), (1.0, 1.0));
        assert!(cheeger_bounds(-0.1).is_err());
        assert!(cheeger_bounds(1.5).is_err());
        let (lo, hi) = cheeger_bounds(1.0 / 90.0).unwrap();
        assert_abs_diff_eq!(lo, 0.97778, epsilon = 1e-5);
        assert_abs_diff_eq!(hi, 0.99988, epsilon = 1e-5);
        assert!(lo <= 0.988270 && 0.988270 <= hi);
        let (lo, hi) = cheeger_bounds(0.004).unwrap();
        assert_abs_diff_eq!(lo, 0.992, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.999984, epsilon = 1e-12);
    }

    #[test]
    fn lexicographic_order() {
        assert!(lex_less(0b0011, 0b0101));
        assert!(lex_less(0b0001, 0b0011));
        assert!(!lex_less(0b0011, 0b0011));
        assert!(lex_less(0b0011, 0b1100));
    }

    proptest! {
        #[test]
        fn bruteforce_matches_naive_and_cheeger(n in 4usize..11, seed: u64, which in 0usize..3) {
            let spec = GraphSpec::small_world_dense(n, seed);
            let scheme = [Scheme::Uniform, Scheme::Resistance, Scheme::Metropolis][which];
            let w = iteration_matrix(&spec, scheme);
            let (phi, set) = min_conductance_bruteforce(&w).unwrap();
            prop_assert!((phi - naive_min(&w)).abs() <= 1e-12 * phi.max(1e-12));
            prop_assert!(set.len() <= n / 2);
            let lam = spectrum(&w).unwrap().second_largest().unwrap();
            let (lo, hi) = cheeger_bounds(phi).unwrap();
            prop_assert!(lo <= lam + 1e-12 && lam <= hi + 1e-12);
        }
    }
}
