use std::collections::HashSet;
use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::observation::{angle_at, signed_line_distance, wrap_angle, Observation, ObservationKind};
use super::{ModelError, Problem};

/// Smallest point count the generator accepts.
pub const MIN_POINTS: usize = 16;

/// Parameters of the synthetic network generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Distance between neighbouring grid nodes.
    pub spacing: f64,
    /// Partner search radius, in grid units.
    pub locality_radius: f64,
    /// Stop adding observations once the point graph reaches this average degree.
    pub target_degree: f64,
    pub sigma_distance: f64,
    pub sigma_angle: f64,
    pub sigma_point_line: f64,
    /// Share of points whose coordinates are observed with `sigma_precise`.
    pub precise_fraction: f64,
    pub sigma_precise: f64,
    pub sigma_coarse: f64,
    /// Attempts allowed per point before giving up on the degree target.
    pub attempts_per_point: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            spacing: 10.0,
            locality_radius: 3.0,
            target_degree: 6.0,
            sigma_distance: 0.01,
            sigma_angle: PI / 180.0,
            sigma_point_line: 0.01,
            precise_fraction: 0.01,
            sigma_precise: 0.01,
            sigma_coarse: 1.0,
            attempts_per_point: 1000,
        }
    }
}

/// Side length of the candidate grid for `n` points.
pub fn grid_side(n: usize) -> usize {
    let side = (2.0 * (n as f64).sqrt()).ceil() as usize;
    // guard against sqrt rounding just below an integer
    if (side - 1) * (side - 1) >= 4 * n {
        side - 1
    } else {
        side
    }
}

/// Number of points observed with the precise coordinate sigma.
pub fn precise_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n)
}

/// Random network on a regular grid: `n` distinct nodes sampled uniformly,
/// local distance, angle and point-line observations until the point graph
/// reaches the target average degree, then a noisy X and Y observation for
/// every point. The initial guess is the coordinate observations.
pub fn generate_problem(n: usize, seed: u64, cfg: &GeneratorConfig) -> Result<Problem, ModelError> {
    if n < MIN_POINTS {
        return Err(ModelError::Invalid(format!("need at least {MIN_POINTS} points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = grid_side(n);
    let mut nodes = index::sample(&mut rng, side * side, n).into_vec();
    nodes.sort_unstable();
    let grid: Vec<(i64, i64)> = nodes.iter().map(|&k| ((k % side) as i64, (k / side) as i64)).collect();
    let truth: Vec<f64> = grid
        .iter()
        .flat_map(|&(gx, gy)| [gx as f64 * cfg.spacing, gy as f64 * cfg.spacing])
        .collect();
    let pt = |p: usize| [truth[2 * p], truth[2 * p + 1]];

    let near = local_neighbors(&grid, side, cfg.locality_radius);
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    let target_edges = (cfg.target_degree * n as f64 / 2.0).ceil() as usize;
    let max_attempts = cfg.attempts_per_point.saturating_mul(n);
    let mut observations = Vec::new();
    let mut attempts = 0usize;
    while edges.len() < target_edges {
        if attempts == max_attempts {
            return Err(ModelError::DegreeUnreachable {
                attempts,
                degree: 2.0 * edges.len() as f64 / n as f64,
            });
        }
        attempts += 1;
        let kind = [
            ObservationKind::PointDistance,
            ObservationKind::Angle,
            ObservationKind::PointLine,
        ][rng.random_range(0..3)];
        let first = rng.random_range(0..n);
        let cand = &near[first];
        let need = kind.arity() - 1;
        if cand.len() < need {
            continue;
        }
        let picks = index::sample(&mut rng, cand.len(), need);
        let mut ids = vec![first];
        ids.extend(picks.iter().map(|i| cand[i]));

        let obs = match kind {
            ObservationKind::PointDistance => {
                let (p, q) = (pt(ids[0]), pt(ids[1]));
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                let s = cfg.sigma_distance;
                Observation::distance(ids[0], ids[1], d + s * gauss(&mut rng), s)
            }
            ObservationKind::Angle => {
                // the first point is the vertex
                let (a, b, c) = (ids[1], ids[0], ids[2]);
                let theta = angle_at(pt(a), pt(b), pt(c));
                let s = cfg.sigma_angle;
                Observation::angle(a, b, c, wrap_angle(theta + s * gauss(&mut rng)), s)
            }
            ObservationKind::PointLine => {
                let dist = signed_line_distance(pt(ids[0]), pt(ids[1]), pt(ids[2]));
                let s = cfg.sigma_point_line;
                Observation::point_line(ids[0], ids[1], ids[2], dist + s * gauss(&mut rng), s)
            }
            ObservationKind::CoordX | ObservationKind::CoordY => unreachable!(),
        };
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                edges.insert((ids[a].min(ids[b]), ids[a].max(ids[b])));
            }
        }
        observations.push(obs);
    }

    let mut precise = vec![false; n];
    for p in index::sample(&mut rng, n, precise_count(n, cfg.precise_fraction)) {
        precise[p] = true;
    }
    let mut initial = Vec::with_capacity(2 * n);
    for p in 0..n {
        let s = if precise[p] { cfg.sigma_precise } else { cfg.sigma_coarse };
        let x0 = truth[2 * p] + s * gauss(&mut rng);
        let y0 = truth[2 * p + 1] + s * gauss(&mut rng);
        observations.push(Observation::coord_x(p, x0, s));
        observations.push(Observation::coord_y(p, y0, s));
        initial.extend([x0, y0]);
    }

    Ok(Problem::new(n, observations, initial)?.with_truth(truth)?.with_seed(seed))
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// For every point, the other points within `radius` grid units, ascending.
fn local_neighbors(grid: &[(i64, i64)], side: usize, radius: f64) -> Vec<Vec<usize>> {
    let side = side as i64;
    let mut cell = vec![usize::MAX; (side * side) as usize];
    for (p, &(gx, gy)) in grid.iter().enumerate() {
        cell[(gy * side + gx) as usize] = p;
    }
    let reach = radius.floor() as i64;
    let r2 = radius * radius;
    grid.iter()
        .enumerate()
        .map(|(p, &(gx, gy))| {
            let mut out = Vec::new();
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (x, y) = (gx + dx, gy + dy);
                    if x < 0 || y < 0 || x >= side || y >= side || ((dx * dx + dy * dy) as f64) > r2 {
                        continue;
                    }
                    let q = cell[(y * side + x) as usize];
                    if q != usize::MAX && q != p {
                        out.push(q);
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}
