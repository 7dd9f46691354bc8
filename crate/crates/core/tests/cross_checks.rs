use ergossip_core::gossip::{
    edge_frequency_report, second_eigenvector, simulate_run, GossipRunConfig,
};
use ergossip_core::graphs::{generate_graph, laplacian, GraphSpec};
use ergossip_core::linalg::symmetric_eigen;
use ergossip_core::resistance::{drk_solve, effective_resistances, laplacian_pinv, DrkConfig, DrkMode};
use ergossip_core::spectral::fmmc::iteration_matrix_from_masses;
use ergossip_core::spectral::{
    build_activation, expected_iteration_matrix, spectrum, ActivationMatrix, Scheme,
};
use ergossip_core::{rng, WeightedGraph};
use proptest::prelude::*;

fn setup(spec: &GraphSpec, scheme: Scheme) -> (WeightedGraph, ActivationMatrix) {
    let g = generate_graph(spec).unwrap();
    let r = effective_resistances(&g).unwrap();
    let a = build_activation(&g, scheme, Some(&r)).unwrap();
    (g, a)
}

#[test]
fn mean_squared_error_decays_at_most_geometrically() {
    // E‖y^k - ȳ1‖² ≤ λ^k ‖y⁰ - ȳ1‖² with λ the second eigenvalue.
    for scheme in [Scheme::Uniform, Scheme::Resistance, Scheme::Metropolis] {
        let (g, a) = setup(&GraphSpec::barbell(4), scheme);
        let lam = spectrum(&expected_iteration_matrix(&a))
            .unwrap()
            .second_largest()
            .unwrap();
        let y0 = second_eigenvector(&a).unwrap();
        let k = 150;
        let runs = 600;
        let mut acc = 0.0;
        for t in 0..runs {
            let tr = simulate_run(&GossipRunConfig {
                graph: &g,
                activation: &a,
                y0: y0.clone(),
                eps: None,
                max_ticks: k,
                seed: rng::trial_seed(11, t),
                record_every: 0,
            })
            .unwrap();
            acc += tr.final_error * tr.final_error;
        }
        let mean = acc / runs as f64;
        let bound = lam.powi(k as i32);
        assert!(mean <= 1.15 * bound, "{}: {mean} > {bound}", scheme.name());
        // E y^k = λ^k y⁰ for the eigenvector start, so by Jensen the mean
        // squared error is at least λ^{2k}.
        assert!(mean >= 0.8 * bound * bound, "{}: {mean} << {bound}²", scheme.name());
    }
}

#[test]
fn resistance_bridge_frequency_matches_model() {
    let (g, a) = setup(&GraphSpec::barbell(5), Scheme::Resistance);
    let tr = simulate_run(&GossipRunConfig {
        graph: &g,
        activation: &a,
        y0: (0..10).map(|i| i as f64).collect(),
        eps: None,
        max_ticks: 100_000,
        seed: 5,
        record_every: 0,
    })
    .unwrap();
    let rows = edge_frequency_report(&tr, &g, &a).unwrap();
    let bridge = rows.iter().find(|r| (r.i, r.j) == (4, 5)).unwrap();
    assert!((bridge.expected - 1.0 / 9.0).abs() < 1e-12);
    assert!((bridge.ratio - 1.0).abs() < 0.05, "{bridge:?}");
}

#[test]
fn edge_mass_route_agrees_with_activation_route() {
    let (g, a) = setup(&GraphSpec::c_barbell(4, 3), Scheme::Resistance);
    let masses: Vec<f64> = g.edges().iter().map(|&(i, j, _)| a.p[(i, j)]).collect();
    let direct = expected_iteration_matrix(&a);
    let via = iteration_matrix_from_masses(&g, &masses);
    for (x, y) in direct.as_slice().iter().zip(via.as_slice()) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn drk_iterates_approach_the_pseudoinverse() {
    let g = generate_graph(&GraphSpec::small_world(12, 20, 3)).unwrap();
    let pinv = laplacian_pinv(&laplacian(&g)).unwrap();
    for mode in [DrkMode::Plain, DrkMode::Normalized] {
        let st = drk_solve(&g, &DrkConfig::new(mode, 60_000, 9)).unwrap();
        let err = st.error_trace.last().unwrap().1 / pinv.frobenius_norm();
        assert!(err < 1e-6, "{}: {err}", mode.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iteration_matrices_are_symmetric_doubly_stochastic(n in 6usize..14, seed: u64) {
        let spec = GraphSpec::small_world(n, n + n / 2, seed);
        for scheme in [Scheme::Uniform, Scheme::Resistance, Scheme::Metropolis] {
            let (_, a) = setup(&spec, scheme);
            let w = expected_iteration_matrix(&a);
            prop_assert!(w.asymmetry() < 1e-14);
            for s in w.row_sums() {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
            let eig = symmetric_eigen(&w).unwrap();
            prop_assert!((eig.values[n - 1] - 1.0).abs() < 1e-10);
            prop_assert!(eig.values[n - 2] < 1.0 - 1e-10);
            prop_assert!(eig.values[0] > -1e-10);
        }
    }

    #[test]
    fn gossip_preserves_the_mean(seed: u64) {
        let (g, a) = setup(&GraphSpec::small_world(10, 18, seed), Scheme::Metropolis);
        let y0: Vec<f64> = (0..10).map(|i| (i * i) as f64 - 3.0).collect();
        let mean0: f64 = y0.iter().sum::<f64>() / 10.0;
        let tr = simulate_run(&GossipRunConfig {
            graph: &g,
            activation: &a,
            y0,
            eps: None,
            max_ticks: 500,
            seed,
            record_every: 50,
        })
        .unwrap();
        let mean1: f64 = tr.final_y.iter().sum::<f64>() / 10.0;
        prop_assert!((mean0 - mean1).abs() < 1e-12);
        for w in tr.ticks.windows(2) {
            prop_assert!(w[1].rel_error <= w[0].rel_error + 1e-12);
        }
    }
}
