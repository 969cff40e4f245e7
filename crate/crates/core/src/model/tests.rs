use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::partition::build_variable_graph;
use crate::sparse::norm2;

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn assert_bitwise_eq(a: &Problem, b: &Problem) {
    assert_eq!(a.n_points(), b.n_points());
    assert_eq!(a.seed(), b.seed());
    assert_eq!(bits(a.initial_guess()), bits(b.initial_guess()));
    assert_eq!(a.true_coords().map(bits), b.true_coords().map(bits));
    assert_eq!(a.n_residuals(), b.n_residuals());
    for (p, q) in a.observations().iter().zip(b.observations()) {
        assert_eq!(p.kind(), q.kind());
        assert_eq!(p.point_ids(), q.point_ids());
        assert_eq!(p.value.to_bits(), q.value.to_bits());
        assert_eq!(p.sigma.to_bits(), q.sigma.to_bits());
    }
}

#[test]
fn raw_residual_examples() {
    let x = [0.0, 0.0, 3.0, 4.0];
    assert_eq!(raw_residual(&Observation::distance(0, 1, 5.0, 1.0), &x).unwrap(), 0.0);
    let r = raw_residual(&Observation::distance(0, 1, 4.9, 1.0), &x).unwrap();
    assert!((r - 0.1).abs() < 1e-12);

    let x = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let r = raw_residual(&Observation::angle(0, 1, 2, PI / 2.0, 1.0), &x).unwrap();
    assert!(r.abs() < 1e-15);
    // clockwise is negative
    let r = raw_residual(&Observation::angle(2, 1, 0, 0.0, 1.0), &x).unwrap();
    assert!((r + PI / 2.0).abs() < 1e-15);

    // P above the x axis lies to the left of (0,0) → (1,0)
    let x = [0.5, 2.0, 0.0, 0.0, 1.0, 0.0];
    assert_eq!(raw_residual(&Observation::point_line(0, 1, 2, 2.0, 1.0), &x).unwrap(), 0.0);
    assert_eq!(raw_residual(&Observation::point_line(0, 2, 1, 0.0, 1.0), &x).unwrap(), -2.0);

    let x = [1.5, -2.5];
    assert_eq!(raw_residual(&Observation::coord_x(0, 1.0, 1.0), &x).unwrap(), 0.5);
    assert_eq!(raw_residual(&Observation::coord_y(0, -2.0, 1.0), &x).unwrap(), -0.5);
}

#[test]
fn degenerate_geometry_is_reported() {
    let x = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0];
    let e = raw_residual(&Observation::angle(0, 1, 2, 0.0, 1.0), &x).unwrap_err();
    assert_eq!(e.kind, ObservationKind::Angle);
    let e = raw_residual(&Observation::point_line(2, 0, 1, 0.0, 1.0), &x).unwrap_err();
    assert_eq!(e.kind, ObservationKind::PointLine);
    assert!(jacobian_row(&Observation::distance(0, 1, 1.0, 1.0), &x).is_err());

    let p = Problem::new(3, vec![Observation::coord_x(2, 0.0, 1.0), Observation::angle(0, 1, 2, 0.0, 1.0)], x.to_vec())
        .unwrap();
    match p.evaluate(&x) {
        Err(ModelError::Degenerate { index, kind, .. }) => {
            assert_eq!(index, 1);
            assert_eq!(kind, ObservationKind::Angle);
        }
        other => panic!("expected a degenerate error, got {other:?}"),
    }
}

#[test]
fn weighted_residual_examples() {
    let x = [0.0, 0.0, 3.0, 4.0];
    let r = weighted_residual(&Observation::distance(0, 1, 4.9, 0.01), &x).unwrap();
    assert!((r - 10.0).abs() < 1e-9);
    assert_eq!(weighted_residual(&Observation::distance(0, 1, 5.0, 0.3), &x).unwrap(), 0.0);

    let x = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let sigma = PI / 180.0;
    let r = weighted_residual(&Observation::angle(0, 1, 2, PI / 2.0 - 0.01, sigma), &x).unwrap();
    assert!((r - 0.01 * 180.0 / PI).abs() < 1e-9);
}

#[test]
fn jacobian_row_examples() {
    let row = jacobian_row(&Observation::distance(0, 1, 1.0, 1.0), &[0.0, 0.0, 1.0, 0.0]).unwrap();
    let cols: Vec<_> = row.entries().iter().map(|e| e.0).collect();
    assert_eq!(cols, [0, 1, 2, 3]);
    assert_eq!([row.get(0), row.get(1), row.get(2), row.get(3)], [-1.0, 0.0, 1.0, 0.0]);

    let x = vec![0.0; 10];
    let row = jacobian_row(&Observation::coord_x(3, 0.0, 0.5), &x).unwrap();
    assert_eq!(row.entries(), &[(6, 2.0)]);
    let row = jacobian_row(&Observation::coord_y(3, 0.0, 0.5), &x).unwrap();
    assert_eq!(row.entries(), &[(7, 2.0)]);
}

#[test]
fn wrap_angle_examples() {
    assert_eq!(wrap_angle(PI), PI);
    assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
    assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    assert!((wrap_angle(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-12);
    assert_eq!(wrap_angle(0.25), 0.25);
}

#[test]
fn kind_names_round_trip() {
    for kind in ObservationKind::ALL {
        assert_eq!(kind.name().parse::<ObservationKind>().unwrap(), kind);
    }
    assert!("triangle".parse::<ObservationKind>().is_err());
}

#[test]
fn problem_rejects_invalid_input() {
    assert!(Problem::new(0, vec![], vec![]).is_err());
    assert!(Problem::new(2, vec![], vec![0.0; 3]).is_err());
    let bad_id = Observation::distance(0, 2, 1.0, 1.0);
    assert!(Problem::new(2, vec![bad_id], vec![0.0; 4]).is_err());
    let repeated = Observation::distance(1, 1, 1.0, 1.0);
    assert!(Problem::new(2, vec![repeated], vec![0.0; 4]).is_err());
    let bad_sigma = Observation::coord_x(0, 1.0, 0.0);
    assert!(Problem::new(2, vec![bad_sigma], vec![0.0; 4]).is_err());
    let p = Problem::new(2, vec![], vec![0.0; 4]).unwrap();
    assert!(p.clone().with_truth(vec![0.0; 2]).is_err());
    assert!(p.residuals(&[0.0; 3]).is_err());
}

#[test]
fn evaluate_is_zero_at_truth() {
    let truth = vec![2.0, -1.0];
    let obs = vec![Observation::coord_x(0, 2.0, 0.1), Observation::coord_y(0, -1.0, 0.1)];
    let p = Problem::new(1, obs, vec![0.0, 0.0]).unwrap();
    let (r, j) = p.evaluate(&truth).unwrap();
    assert_eq!(r, vec![0.0, 0.0]);
    assert_eq!((j.n_rows(), j.n_cols()), (2, 2));
    assert_eq!(j.get(0, 0), 10.0);
    assert_eq!(j.get(1, 1), 10.0);
    assert_eq!(p.objective(&truth).unwrap(), 0.0);
}

#[test]
fn evaluate_ordered_permutes_rows() {
    let p = generate_problem(30, 2, &GeneratorConfig::default()).unwrap();
    let m = p.n_residuals();
    let order: Vec<usize> = (0..m).rev().collect();
    let x = p.initial_guess();
    let (r, j) = p.evaluate(x).unwrap();
    let (ro, jo) = p.evaluate_ordered(x, &order).unwrap();
    for (k, &src) in order.iter().enumerate() {
        assert_eq!(ro[k], r[src]);
        assert_eq!(jo.row(k), j.row(src));
    }
    assert_eq!(p.evaluate_ordered(x, &order[1..]).unwrap().0.len(), m - 1);
    assert!(p.evaluate_ordered(x, &[m]).is_err());
}

#[test]
fn objective_decreases_along_negative_gradient() {
    for seed in 0..20 {
        let p = generate_problem(40, seed, &GeneratorConfig::default()).unwrap();
        let x = p.initial_guess();
        let (r, j) = p.evaluate(x).unwrap();
        let g = j.spmv_transpose(&r).unwrap();
        let f0 = p.objective(x).unwrap();
        let t = 1e-6 / norm2(&g);
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
        assert!(p.objective(&y).unwrap() < f0, "seed {seed}");
    }
}

/// Points in a 10×10 box with every pair at least `min_sep` apart.
fn spread_points(rng: &mut impl Rng, n: usize, min_sep: f64) -> Vec<f64> {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    while pts.len() < n {
        let p = [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)];
        if pts.iter().all(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() >= min_sep) {
            pts.push(p);
        }
    }
    pts.concat()
}

#[test]
fn full_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 10;
    let x = spread_points(&mut rng, n, 0.5);
    let mut obs = Vec::new();
    for s in 0..n {
        obs.push(Observation::coord_x(s, x[2 * s] + 0.3, 0.5));
        obs.push(Observation::coord_y(s, x[2 * s + 1] - 0.2, 0.5));
        let (a, b, c) = (s, (s + 3) % n, (s + 7) % n);
        obs.push(Observation::distance(a, b, 1.0, 0.01));
        obs.push(Observation::angle(a, b, c, 0.5, PI / 180.0));
        obs.push(Observation::point_line(a, b, c, 0.1, 0.01));
    }
    let p = Problem::new(n, obs, x.clone()).unwrap();
    let (_, j) = p.evaluate(&x).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for col in 0..2 * n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[col] += h;
        xm[col] -= h;
        let (rp, rm) = (p.residuals(&xp).unwrap(), p.residuals(&xm).unwrap());
        for row in 0..p.n_residuals() {
            let fd = (rp[row] - rm[row]) / (2.0 * h);
            let an = j.get(row, col);
            worst = worst.max((fd - an).abs() / an.abs().max(1.0));
        }
    }
    assert!(worst <= 1e-5, "max rel err {worst:e}");
}

fn fd_row_error(obs: &Observation, x: &[f64]) -> f64 {
    let row = jacobian_row(obs, x).unwrap();
    let h = 1e-6;
    let mut diff = 0.0;
    let mut scale = 0.0;
    for col in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[col] += h;
        xm[col] -= h;
        let fd = (weighted_residual(obs, &xp).unwrap() - weighted_residual(obs, &xm).unwrap()) / (2.0 * h);
        let an = row.get(col);
        diff += (fd - an) * (fd - an);
        scale += an * an;
    }
    diff.sqrt() / scale.sqrt()
}

/// An observation of `kind` on points 0..arity, with a value near the
/// geometric quantity so angle residuals stay away from the wrap.
fn observation_near(kind: ObservationKind, x: &[f64], offset: f64, sigma: f64) -> Observation {
    let pt = |p: usize| [x[2 * p], x[2 * p + 1]];
    let value = match kind {
        ObservationKind::PointDistance => {
            ((x[0] - x[2]).powi(2) + (x[1] - x[3]).powi(2)).sqrt() + offset
        }
        ObservationKind::Angle => wrap_angle(angle_at(pt(0), pt(1), pt(2)) + offset),
        ObservationKind::PointLine => signed_line_distance(pt(0), pt(1), pt(2)) + offset,
        ObservationKind::CoordX => x[0] + offset,
        ObservationKind::CoordY => x[1] + offset,
    };
    let ids = [0, 1, 2];
    Observation::new(kind, &ids[..kind.arity()], value, sigma)
}

fn well_separated(x: &[f64; 6]) -> bool {
    let d = |a: usize, b: usize| ((x[2 * a] - x[2 * b]).powi(2) + (x[2 * a + 1] - x[2 * b + 1]).powi(2)).sqrt();
    d(0, 1) >= 0.5 && d(0, 2) >= 0.5 && d(1, 2) >= 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jacobian_rows_match_finite_differences(
        x in prop::array::uniform6(-10.0..10.0f64),
        offset in -0.2..0.2f64,
        sigma in 0.01..1.0f64,
    ) {
        prop_assume!(well_separated(&x));
        for kind in ObservationKind::ALL {
            let obs = observation_near(kind, &x, offset, sigma);
            let err = fd_row_error(&obs, &x[..2 * kind.arity()]);
            prop_assert!(err <= 1e-5, "{kind}: rel err {err:e}");
        }
    }

    #[test]
    fn angle_residual_stays_in_half_open_range(
        x in prop::array::uniform6(-10.0..10.0f64),
        value in -10.0..10.0f64,
    ) {
        prop_assume!(well_separated(&x));
        let r = raw_residual(&Observation::angle(0, 1, 2, value, 1.0), &x).unwrap();
        prop_assert!(r > -PI && r <= PI, "{r}");
    }

    #[test]
    fn rows_touch_only_their_points(x in prop::array::uniform6(-10.0..10.0f64)) {
        prop_assume!(well_separated(&x));
        for kind in ObservationKind::ALL {
            let obs = observation_near(kind, &x, 0.0, 1.0);
            let row = jacobian_row(&obs, &x).unwrap();
            prop_assert!(row.entries().len() <= 6);
            prop_assert!(row.entries().windows(2).all(|w| w[0].0 < w[1].0));
            for &(c, _) in row.entries() {
                prop_assert!(obs.point_ids().contains(&(c / 2)));
            }
        }
    }
}

#[test]
fn generator_grid_examples() {
    assert_eq!(grid_side(100), 20);
    assert_eq!(grid_side(400), 40);
    assert_eq!(grid_side(16), 8);
    assert_eq!(grid_side(17), 9);
    assert_eq!(precise_count(100, 0.01), 1);
    assert_eq!(precise_count(20, 0.01), 1);
    assert_eq!(precise_count(400, 0.01), 4);

    let p = generate_problem(100, 3, &GeneratorConfig::default()).unwrap();
    let truth = p.true_coords().unwrap();
    let spacing = GeneratorConfig::default().spacing;
    let mut nodes: Vec<(i64, i64)> = truth
        .chunks(2)
        .map(|c| ((c[0] / spacing).round() as i64, (c[1] / spacing).round() as i64))
        .collect();
    for &(gx, gy) in &nodes {
        assert!((0..20).contains(&gx) && (0..20).contains(&gy));
    }
    nodes.sort_unstable();
    nodes.dedup();
    assert_eq!(nodes.len(), 100);
}

#[test]
fn generator_is_deterministic() {
    let cfg = GeneratorConfig::default();
    let a = generate_problem(200, 17, &cfg).unwrap();
    let b = generate_problem(200, 17, &cfg).unwrap();
    assert_bitwise_eq(&a, &b);
    let c = generate_problem(200, 18, &cfg).unwrap();
    assert_ne!(a.initial_guess(), c.initial_guess());
}

#[test]
fn generator_reaches_target_degree() {
    for seed in 0..5 {
        let p = generate_problem(400, seed, &GeneratorConfig::default()).unwrap();
        let deg = build_variable_graph(&p).average_degree();
        assert!((6.0..=6.5).contains(&deg), "seed {seed}: degree {deg}");
    }
}

#[test]
fn generator_coordinate_observations() {
    let cfg = GeneratorConfig::default();
    let p = generate_problem(400, 9, &cfg).unwrap();
    let n = p.n_points();
    let mut xs = vec![0; n];
    let mut ys = vec![0; n];
    let mut precise = 0;
    for obs in p.observations() {
        let id = obs.point_ids()[0];
        match obs.kind() {
            ObservationKind::CoordX => {
                xs[id] += 1;
                assert_eq!(obs.value, p.initial_guess()[2 * id]);
            }
            ObservationKind::CoordY => {
                ys[id] += 1;
                assert_eq!(obs.value, p.initial_guess()[2 * id + 1]);
            }
            _ => continue,
        }
        if obs.sigma == cfg.sigma_precise {
            precise += 1;
        } else {
            assert_eq!(obs.sigma, cfg.sigma_coarse);
        }
    }
    assert!(xs.iter().chain(&ys).all(|&c| c == 1));
    assert_eq!(precise, 2 * precise_count(n, cfg.precise_fraction));
}

#[test]
fn generator_local_observations_are_local() {
    let cfg = GeneratorConfig::default();
    let p = generate_problem(300, 4, &cfg).unwrap();
    let t = p.true_coords().unwrap();
    let radius = cfg.locality_radius * cfg.spacing + 1e-9;
    for obs in p.observations() {
        let ids = obs.point_ids();
        // partners are drawn around the first point; for angles that is the vertex
        let centre = if obs.kind() == ObservationKind::Angle { ids[1] } else { ids[0] };
        for &q in ids {
            let d = ((t[2 * q] - t[2 * centre]).powi(2) + (t[2 * q + 1] - t[2 * centre + 1]).powi(2)).sqrt();
            assert!(d <= radius, "{} spans {d}", obs.kind());
        }
        if obs.kind() == ObservationKind::Angle {
            assert!(obs.value > -PI && obs.value <= PI);
        }
    }
}

#[test]
fn generator_errors() {
    let cfg = GeneratorConfig::default();
    assert!(generate_problem(15, 0, &cfg).is_err());
    let isolated = GeneratorConfig {
        locality_radius: 0.5,
        attempts_per_point: 10,
        ..cfg
    };
    assert!(matches!(
        generate_problem(50, 0, &isolated),
        Err(ModelError::DegreeUnreachable { .. })
    ));
}

#[test]
fn truth_fits_better_than_initial_guess() {
    for seed in 0..20 {
        let p = generate_problem(100, seed, &GeneratorConfig::default()).unwrap();
        let ft = p.objective(p.true_coords().unwrap()).unwrap();
        let f0 = p.objective(p.initial_guess()).unwrap();
        assert!(ft <= f0, "seed {seed}: {ft} > {f0}");
    }
}

#[test]
fn file_round_trip_is_exact() {
    let p = generate_problem(100, 5, &GeneratorConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    write_problem(&p, &path).unwrap();
    let q = read_problem(&path).unwrap();
    assert_bitwise_eq(&p, &q);
    assert_eq!(p, q);
}

#[test]
fn hand_written_file_parses() {
    let text = "\
# two points, one distance
n_points 2
obs distance 0 1 5.0 0.01

init 0 0.1 -0.2
init 1 3.0 4.1
";
    let p = parse_problem(text).unwrap();
    let expected = Problem::new(2, vec![Observation::distance(0, 1, 5.0, 0.01)], vec![0.1, -0.2, 3.0, 4.1]).unwrap();
    assert_eq!(p, expected);
    assert_eq!(p.seed(), None);
    assert_eq!(p.true_coords(), None);
}

#[test]
fn malformed_files_are_rejected_with_line_numbers() {
    let line_of = |text: &str| match parse_problem(text) {
        Err(ModelError::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    };
    assert_eq!(line_of("obs coord_x 0 1.0 1.0\ninit 0 0 0\n"), 1);
    parse_problem("").unwrap_err();
    assert_eq!(line_of("n_points 1\ninit 0 0 0\nn_points 1\n"), 3);
    assert_eq!(line_of("n_points 1\nobs coord_x 0 1.0\ninit 0 0 0\n"), 2);
    assert_eq!(line_of("n_points 1\nobs coord_x 4 1.0 1.0\ninit 0 0 0\n"), 2);
    assert_eq!(line_of("n_points 2\nobs distance 0 0 1.0 1.0\n"), 2);
    assert_eq!(line_of("n_points 1\nwhat 1\n"), 2);
    assert_eq!(line_of("n_points 1\ninit 0 zero 0\n"), 2);
    assert_eq!(line_of("n_points 1\nobs coord_x 0 1.0 -1.0\ninit 0 0 0\n"), 2);
    assert!(matches!(parse_problem("n_points 2\ninit 0 0 0\n"), Err(ModelError::Parse { .. })));
}
