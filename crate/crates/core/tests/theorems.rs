mod common;

use common::*;
use proptest::prelude::*;
use srep::analytic::{analytic_run, ep_srep_bounds};
use srep::engine::{run, Mode, StopCondition};
use srep::pools::{empirical_diff_distribution, generate_assignment, PoolGenParams, Sampling, SizesDistribution};
use srep::reconcile::Backend;
use srep::seed::derive_seed;
use srep::{PoolAssignment, Topology};

fn full(g: &Topology, a: &PoolAssignment, mode: Mode) -> srep::engine::RunMetrics {
    run(g, a, mode, &Backend::Oracle, StopCondition::Full).unwrap()
}

#[test]
fn complete_graphs_cost_n_times_n_minus_one() {
    for n in 3..=40 {
        let g = Topology::complete(n).unwrap();
        let a = PoolAssignment::unit(n);
        let expect = (n * (n - 1)) as u64;
        let seq = full(&g, &a, Mode::ESrep);
        assert_eq!(seq.c_total_elements, expect, "sequential, n = {n}");
        let par = full(&g, &a, Mode::EpSrep);
        assert_eq!((par.c_total_elements, par.i_max), (expect, 1), "parallel, n = {n}");
    }
}

fn corpus() -> Vec<(Topology, bool)> {
    let mut out = Vec::new();
    for n in [2, 3, 5, 8, 13, 40] {
        out.push((Topology::path(n).unwrap(), false));
    }
    for n in [3, 4, 7, 10, 31] {
        out.push((Topology::cycle(n).unwrap(), false));
    }
    for s in 0..10 {
        out.push((Topology::random_tree(5 + 7 * s as usize, s).unwrap(), false));
    }
    for (k, (n, deg, p)) in [(30, 2, 0.0), (30, 4, 0.1), (60, 4, 0.24), (60, 8, 1.0), (120, 6, 0.24), (150, 10, 0.5)]
        .into_iter()
        .enumerate()
    {
        for s in 0..3 {
            out.push((Topology::watts_strogatz(n, deg, p, derive_seed(k as u64, s)).unwrap(), true));
        }
    }
    out
}

#[test]
fn unit_pool_iterations_equal_the_diameter() {
    for (g, _) in corpus() {
        let diameter = floyd_diameter(&g).unwrap();
        assert_eq!(g.diameter().unwrap(), diameter);
        let m = full(&g, &PoolAssignment::unit(g.node_count()), Mode::EpSrep);
        assert_eq!(m.i_max, diameter, "{} nodes", g.node_count());
    }
}

#[test]
fn unit_pool_cost_bounds() {
    for (g, ws) in corpus() {
        let n = g.node_count() as u64;
        let m = full(&g, &PoolAssignment::unit(g.node_count()), Mode::EpSrep);
        let c = m.c_total_elements;
        assert!(n * (n - 1) <= c && c < n * (n * n - 1), "n = {n}, C = {c}");
        let b = ep_srep_bounds(&g).unwrap();
        assert_eq!((b.lower_c, b.upper_c), (n * (n - 1), n * (n * n - 1)));
        if ws {
            assert!((c as f64) < b.ws_upper_c, "n = {n}, C = {c}, bound = {}", b.ws_upper_c);
        }
    }
}

#[test]
fn multi_element_iterations_stay_within_the_diameter() {
    for (k, psi) in [0.355, 0.5, 0.6, 1.0, 3.0].into_iter().enumerate() {
        for s in 0..4 {
            let g = Topology::watts_strogatz(150, 4 + 2 * s as usize, 0.24, derive_seed(9, s)).unwrap();
            let params = PoolGenParams {
                psi,
                sizes: SizesDistribution::maxwell_with_mean(60.0),
                sampling: Sampling::Iid,
                seed: derive_seed(k as u64, s),
            };
            let a = generate_assignment(&g, &params).unwrap();
            let m = full(&g, &a, Mode::Srep);
            assert!(m.i_max <= g.diameter().unwrap());
            assert_eq!(analytic_run(&g, &a).unwrap().c_total_elements, m.c_total_elements);
        }
    }
}

#[test]
fn lattice_diameter_closed_form() {
    for n in 5..40 {
        for deg in (2..n.min(12)).step_by(2) {
            let g = Topology::watts_strogatz(n, deg, 0.0, 0).unwrap();
            let expect = (n / 2).div_ceil(deg / 2);
            assert_eq!(floyd_diameter(&g).unwrap(), expect, "n = {n}, deg = {deg}");
            assert_eq!(g.diameter().unwrap(), expect);
        }
    }
}

#[test]
fn diameter_shrinks_with_degree() {
    let median = |deg: usize| {
        let mut d: Vec<usize> = (0..5)
            .map(|s| Topology::watts_strogatz(1000, deg, 0.24, derive_seed(deg as u64, s)).unwrap().diameter().unwrap())
            .collect();
        d.sort_unstable();
        d[2]
    };
    let medians: Vec<usize> = [4, 8, 12, 16, 20].into_iter().map(median).collect();
    assert!(medians.windows(2).all(|w| w[0] >= w[1]), "{medians:?}");
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn mean_difference_rises_with_psi() {
    let g = Topology::watts_strogatz(100, 8, 0.24, 1).unwrap();
    let grid: Vec<f64> = (0..12).map(|k| 0.1 * 1.5f64.powi(k)).collect();
    for sampling in [Sampling::Distinct, Sampling::Iid] {
        let means: Vec<f64> = grid
            .iter()
            .map(|&psi| {
                let params = PoolGenParams { psi, sizes: SizesDistribution::maxwell_with_mean(300.0), sampling, seed: 5 };
                empirical_diff_distribution(&g, &generate_assignment(&g, &params).unwrap()).unwrap().mean()
            })
            .collect();
        let rho = pearson(&ranks(&grid), &ranks(&means));
        assert!(rho > 0.9, "{sampling:?}: {rho}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rewiring_keeps_a_simple_graph_with_the_lattice_edge_count(
        n in 5usize..80, half in 1usize..5, p in 0.0f64..=1.0, seed: u64,
    ) {
        let deg = 2 * half;
        prop_assume!(deg < n);
        match Topology::watts_strogatz(n, deg, p, seed) {
            Ok(g) => {
                prop_assert_eq!(g.edge_count(), n * deg / 2);
                for v in 0..n {
                    prop_assert!(!g.neighbors(v).contains(&v));
                    prop_assert!(g.neighbors(v).windows(2).all(|w| w[0] < w[1]));
                    for &w in g.neighbors(v) {
                        prop_assert!(g.neighbors(w).contains(&v));
                    }
                }
                prop_assert!(floyd_diameter(&g).is_some());
            }
            // Sparse, heavily rewired graphs may never come out connected.
            Err(srep::Error::GenerationFailed { .. }) => prop_assert!(deg == 2 && p > 0.0),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn generated_pools_have_the_requested_sizes(size in 1u64..300, psi in 0.05f64..4.0, seed: u64) {
        let g = Topology::cycle(12).unwrap();
        let params = PoolGenParams { psi, sizes: SizesDistribution::Constant(size), sampling: Sampling::Distinct, seed };
        let u = params.universe_size().unwrap() as u64;
        let a = generate_assignment(&g, &params).unwrap();
        for p in a.pools() {
            prop_assert_eq!(p.len() as u64, size.min(u));
            prop_assert!(p.iter().all(|t| t.0 < u));
        }
        prop_assert_eq!(a, generate_assignment(&g, &params).unwrap());
    }
}
