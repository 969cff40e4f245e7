use lms_core::model::{generate_problem, read_problem, write_problem, GeneratorConfig};
use lms_core::partition::{partition_problem, partition_stats};
use lms_core::solver::{solve_problem, stopping_met, SolveStatus, SolverConfig, LOG_HEADER};

#[test]
fn split_solve_converges_with_decreasing_objective() {
    let problem = generate_problem(500, 3, &GeneratorConfig::default()).unwrap();
    let (partition, _, rep) = solve_problem(&problem, &SolverConfig::with_k(4)).unwrap();
    assert_eq!(partition.k(), 4);
    assert_eq!(rep.status, SolveStatus::Converged);
    assert!(rep.iterations() <= 200);
    for w in rep.records.windows(2) {
        assert!(w[1].f < w[0].f);
    }
    assert!(rep.final_f < rep.records[0].f);
    assert!(stopping_met(&problem.residuals(&rep.final_x).unwrap()));
}

#[test]
fn classical_lm_converges_on_same_problem() {
    let problem = generate_problem(500, 3, &GeneratorConfig::default()).unwrap();
    let (partition, _, rep) = solve_problem(&problem, &SolverConfig::with_k(1)).unwrap();
    assert_eq!(partition.k(), 1);
    assert!(partition.coupling_residuals().is_empty());
    assert_eq!(rep.status, SolveStatus::Converged);
    assert!(rep.records.iter().all(|r| r.beta == 0.0 && r.gamma == 1.0));
}

#[test]
fn beta_zero_ablation_logs_zero_beta() {
    let problem = generate_problem(300, 5, &GeneratorConfig::default()).unwrap();
    let cfg = SolverConfig { k: 4, beta_zero: true, ..SolverConfig::default() };
    let (_, _, rep) = solve_problem(&problem, &cfg).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    let log = rep.log_csv();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some(LOG_HEADER));
    for line in lines {
        assert_eq!(line.split(',').nth(4), Some("0.0"));
    }
}

#[test]
fn solving_a_written_problem_matches_the_original() {
    let problem = generate_problem(200, 9, &GeneratorConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.txt");
    write_problem(&problem, &path).unwrap();
    let back = read_problem(&path).unwrap();
    let cfg = SolverConfig::with_k(2);
    let (_, _, a) = solve_problem(&problem, &cfg).unwrap();
    let (_, _, b) = solve_problem(&back, &cfg).unwrap();
    assert_eq!(a.iterations(), b.iterations());
    assert_eq!(a.final_x, b.final_x);
}

#[test]
fn generated_network_cut_stays_small() {
    let problem = generate_problem(1000, 1, &GeneratorConfig::default()).unwrap();
    let p = partition_problem(&problem, 8, 0).unwrap();
    let stats = partition_stats(&p, &problem, problem.initial_guess()).unwrap();
    assert!(stats.cut_fraction < 0.25, "cut {}", stats.cut_fraction);
    let split = stats.phi + stats.subset_objectives.iter().sum::<f64>();
    assert!((split - stats.total_objective).abs() <= 1e-12 * stats.total_objective);
}
