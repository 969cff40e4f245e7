use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bisect::{cut_of, refine};
use super::*;
use crate::model::{generate_problem, GeneratorConfig, Observation, Problem};

fn problem(n: usize, obs: Vec<Observation>) -> Problem {
    let init = (0..2 * n).map(|v| v as f64).collect();
    Problem::new(n, obs, init).unwrap()
}

fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i)))
}

fn triangles() -> Graph {
    Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
}

/// Two separate triangles of points with distance observations, plus coordinates.
fn separable_problem() -> Problem {
    let mut obs = vec![
        Observation::distance(0, 1, 1.0, 0.01),
        Observation::distance(1, 2, 1.0, 0.01),
        Observation::distance(3, 4, 1.0, 0.01),
        Observation::angle(3, 4, 5, 1.0, 0.01),
    ];
    for p in 0..6 {
        obs.push(Observation::coord_x(p, 0.0, 1.0));
        obs.push(Observation::coord_y(p, 0.0, 1.0));
    }
    problem(6, obs)
}

fn gen(n: usize, seed: u64) -> Problem {
    generate_problem(n, seed, &GeneratorConfig::default()).unwrap()
}

#[test]
fn graph_from_single_distance() {
    let p = problem(3, vec![Observation::distance(0, 1, 1.0, 1.0)]);
    let g = build_variable_graph(&p);
    assert_eq!(g.edge_count(), 1);
    assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
    assert_eq!(g.degree(2), 0);
}

#[test]
fn graph_from_angle_is_a_clique() {
    let p = problem(3, vec![Observation::angle(0, 1, 2, 1.0, 1.0)]);
    let g = build_variable_graph(&p);
    assert_eq!(g.edge_count(), 3);
    assert!(g.has_edge(0, 1) && g.has_edge(0, 2) && g.has_edge(1, 2));
}

#[test]
fn graph_edges_match_pair_scan() {
    let p = gen(100, 3);
    let g = build_variable_graph(&p);
    let mut pairs = BTreeSet::new();
    for obs in p.observations() {
        let ids = obs.point_ids();
        for a in ids {
            for b in ids {
                if a < b {
                    pairs.insert((*a, *b));
                }
            }
        }
    }
    assert_eq!(g.edge_count(), pairs.len());
    for &(a, b) in &pairs {
        assert!(g.has_edge(a, b));
    }
    for v in 0..g.n_nodes() {
        let nb = g.neighbors(v);
        assert!(nb.windows(2).all(|w| w[0] < w[1]));
        assert!(!nb.contains(&v));
        assert!(nb.iter().all(|&u| g.has_edge(u, v)));
    }
}

#[test]
fn components_and_subgraphs() {
    let g = triangles();
    assert_eq!(g.connected_components(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    let sub = g.induced_subgraph(&[1, 2, 3, 4]);
    assert_eq!(sub.edge_count(), 2);
    assert!(sub.has_edge(0, 1) && sub.has_edge(2, 3));
    assert_eq!(g.cut_size(&[0, 0, 0, 1, 1, 1]), 0);
    assert_eq!(g.cut_size(&[0, 1, 0, 1, 1, 1]), 2);
}

#[test]
fn kway_single_subset() {
    let g = path(7);
    let labels = partition_kway(&g, 1, 0).unwrap();
    assert!(labels.iter().all(|&l| l == 0));
    assert_eq!(g.cut_size(&labels), 0);
}

#[test]
fn kway_splits_disconnected_triangles() {
    let g = triangles();
    for seed in 0..10 {
        let labels = partition_kway(&g, 2, seed).unwrap();
        assert_eq!(g.cut_size(&labels), 0, "seed {seed}: {labels:?}");
    }
}

#[test]
fn kway_path_matches_exhaustive_optimum() {
    let g = path(4);
    let mut best = usize::MAX;
    for mask in 0u32..16 {
        let labels: Vec<usize> = (0..4).map(|i| ((mask >> i) & 1) as usize).collect();
        if labels.iter().sum::<usize>() == 2 {
            best = best.min(g.cut_size(&labels));
        }
    }
    let labels = partition_kway(&g, 2, 5).unwrap();
    assert_eq!(best, 1);
    assert_eq!(g.cut_size(&labels), best);
    assert_eq!(labels[0], labels[1]);
    assert_eq!(labels[2], labels[3]);
    assert_ne!(labels[1], labels[2]);
}

#[test]
fn kway_argument_errors() {
    let g = path(3);
    assert_eq!(partition_kway(&g, 0, 0), Err(PartitionError::ZeroParts));
    assert_eq!(partition_kway(&g, 4, 0), Err(PartitionError::TooManyParts { k: 4, nodes: 3 }));
    assert!(partition_kway(&g, 3, 0).is_ok());
}

#[test]
fn kway_is_deterministic() {
    let g = build_variable_graph(&gen(300, 9));
    assert_eq!(partition_kway(&g, 8, 42).unwrap(), partition_kway(&g, 8, 42).unwrap());
}

#[test]
fn balance_bounds_cover_rounding() {
    assert_eq!(balance_bounds(100, 4), (23, 27));
    assert_eq!(balance_bounds(10, 4), (2, 3));
    let (lo, hi) = balance_bounds(7, 3);
    assert!(lo <= 2 && hi >= 3);
}

#[test]
fn refinement_never_increases_cut() {
    let g = build_variable_graph(&gen(400, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        // start from a poor random split so passes have work to do
        let mut side: Vec<u8> = (0..g.n_nodes()).map(|_| rng.random_range(0..2)).collect();
        let size0 = side.iter().filter(|&&s| s == 0).count();
        let bounds = SizeBounds {
            target: size0,
            min: size0.saturating_sub(20),
            max: size0 + 20,
        };
        let before = cut_of(&g, &side);
        let cuts = refine(&g, &mut side, bounds, MAX_REFINE_PASSES);
        let mut prev = before;
        for &c in &cuts {
            assert!(c <= prev);
            prev = c;
        }
        assert_eq!(cut_of(&g, &side), prev);
        let s0 = side.iter().filter(|&&s| s == 0).count();
        assert!(bounds.min <= s0 && s0 <= bounds.max);
    }
}

#[test]
fn bisection_trace_is_monotone() {
    let g = build_variable_graph(&gen(500, 4));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bounds = SizeBounds {
        target: 250,
        min: 230,
        max: 270,
    };
    let (side, trace) = bisect(&g, bounds, &mut rng);
    let mut prev = trace.initial_cut;
    for &c in &trace.pass_cuts {
        assert!(c <= prev);
        prev = c;
    }
    assert!(trace.pass_cuts.len() <= MAX_REFINE_PASSES);
    assert_eq!(cut_of(&g, &side), prev);
}

#[test]
fn nested_dissection_is_a_permutation() {
    let g = build_variable_graph(&gen(600, 5));
    let perm = nested_dissection(&g, 0);
    let mut seen = perm.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..g.n_nodes()).collect::<Vec<_>>());
    assert_eq!(perm, nested_dissection(&g, 0));
}

#[test]
fn nested_dissection_orders_components_independently() {
    let g = triangles();
    let perm = nested_dissection(&g, 0);
    assert!(perm[..3].iter().all(|&v| v < 3));
    assert!(perm[3..].iter().all(|&v| v >= 3));
}

#[test]
fn classify_single_subset() {
    let p = gen(100, 6);
    let part = Partition::single(&p);
    assert_eq!(part.k(), 1);
    assert!(part.coupling_residuals().is_empty());
    assert_eq!(part.internal_residuals(0).len(), p.n_residuals());
    assert_eq!(part.cut_fraction(), 0.0);
}

#[test]
fn classify_crossing_distance_is_coupling() {
    let p = problem(
        3,
        vec![
            Observation::distance(0, 1, 1.0, 1.0),
            Observation::distance(1, 2, 1.0, 1.0),
        ],
    );
    let part = classify_residuals(&p, &[0, 0, 1]).unwrap();
    assert_eq!(part.internal_residuals(0), &[0]);
    assert!(part.internal_residuals(1).is_empty());
    assert_eq!(part.coupling_residuals(), &[1]);
    assert_eq!(part.residual_classes(), &[ResidualClass::Internal(0), ResidualClass::Coupling]);
    assert_eq!(part.grouped_row_order(), vec![0, 1]);
    assert_eq!(part.variable_labels(), vec![0, 0, 0, 0, 1, 1]);
}

#[test]
fn classify_errors() {
    let p = problem(3, vec![]);
    assert_eq!(
        classify_residuals(&p, &[0, 0]).unwrap_err(),
        PartitionError::AssignmentLength { expected: 3, found: 2 }
    );
    assert_eq!(classify_residuals(&p, &[0, 2, 2]).unwrap_err(), PartitionError::EmptySubset(1));
}

#[test]
fn classify_matches_brute_force_scan() {
    let p = gen(200, 7);
    let part = partition_problem(&p, 4, 1).unwrap();
    for (j, obs) in p.observations().iter().enumerate() {
        let subsets: BTreeSet<usize> = obs.point_ids().iter().map(|&q| part.assignment()[q]).collect();
        let expected = if subsets.len() == 1 {
            ResidualClass::Internal(*subsets.iter().next().unwrap())
        } else {
            ResidualClass::Coupling
        };
        assert_eq!(part.residual_classes()[j], expected);
        match expected {
            ResidualClass::Internal(s) => assert!(part.internal_residuals(s).contains(&j)),
            ResidualClass::Coupling => assert!(part.coupling_residuals().contains(&j)),
        }
    }
}

#[test]
fn stats_on_separable_problem() {
    let p = separable_problem();
    let part = partition_problem(&p, 2, 0).unwrap();
    let x = p.initial_guess();
    let stats = partition_stats(&part, &p, x).unwrap();
    assert_eq!(stats.coupling_count, 0);
    assert_eq!(stats.phi, 0.0);
    assert_eq!(stats.cut_fraction, 0.0);
    let f = p.objective(x).unwrap();
    let sum: f64 = stats.subset_objectives.iter().sum();
    assert!((sum - f).abs() <= 1e-12 * f);
}

#[test]
fn stats_single_subset() {
    let p = gen(100, 8);
    let stats = partition_stats(&Partition::single(&p), &p, p.initial_guess()).unwrap();
    assert_eq!(stats.phi.to_bits(), 0f64.to_bits());
    assert_eq!(stats.subset_objectives[0], stats.total_objective);
}

#[test]
fn stats_objective_split_matches_full_residual() {
    let p = gen(100, 10);
    let part = partition_problem(&p, 4, 3).unwrap();
    let x = p.initial_guess();
    let stats = partition_stats(&part, &p, x).unwrap();
    let r = p.residuals(x).unwrap();
    let f = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let split = stats.phi + stats.subset_objectives.iter().sum::<f64>();
    assert!((split - f).abs() <= 1e-12 * f);
    assert_eq!(stats.internal_counts.iter().sum::<usize>() + stats.coupling_count, p.n_residuals());
    assert!(stats.max_balance <= 1.10 + 1e-12);
}

#[test]
fn stats_reject_short_vector() {
    let p = gen(100, 8);
    assert!(partition_stats(&Partition::single(&p), &p, &[0.0; 3]).is_err());
}

fn check_partition(p: &Problem, part: &Partition, k: usize) -> Result<(), TestCaseError> {
    let n = p.n_points();
    prop_assert_eq!(part.k(), k);
    prop_assert!(part.subset_sizes().iter().all(|&s| s > 0));
    let (lo, hi) = balance_bounds(n, k);
    prop_assert!(part.subset_sizes().iter().all(|&s| lo <= s && s <= hi), "{:?}", part.subset_sizes());
    if n % k == 0 {
        let ideal = (n / k) as f64;
        prop_assert!(part.subset_sizes().iter().all(|&s| s as f64 <= 1.10 * ideal && s as f64 >= ideal / 1.10));
    }
    let mut seen = vec![0usize; p.n_residuals()];
    for s in 0..k {
        for &j in part.internal_residuals(s) {
            seen[j] += 1;
            prop_assert!(p.observations()[j].point_ids().iter().all(|&q| part.assignment()[q] == s));
        }
    }
    for &j in part.coupling_residuals() {
        seen[j] += 1;
    }
    prop_assert!(seen.iter().all(|&c| c == 1));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn prop_partition_invariants(seed in any::<u64>(), n in 40usize..400, k_exp in 1u32..=3) {
        let k = 1usize << k_exp;
        let p = gen(n, seed);
        let part = partition_problem(&p, k, seed).unwrap();
        check_partition(&p, &part, k)?;
    }

    #[test]
    fn prop_components_give_zero_cut(size in 3usize..20, k in 1usize..6, seed in any::<u64>()) {
        // k equal path components; unequal ones cannot be both balanced and uncut
        let edges = (0..k).flat_map(|c| (c * size + 1..(c + 1) * size).map(|i| (i - 1, i)));
        let g = Graph::from_edges(k * size, edges);
        let labels = partition_kway(&g, k, seed).unwrap();
        prop_assert_eq!(g.cut_size(&labels), 0);
    }
}
