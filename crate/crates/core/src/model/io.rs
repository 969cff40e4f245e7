//! Plain-text problem files.
//!
//! ```text
//! n_points 2
//! seed 7
//! point 0 0.0 0.0
//! point 1 3.0 4.0
//! obs distance 0 1 5.0 0.01
//! init 0 0.1 -0.2
//! init 1 3.0 4.1
//! ```
//!
//! `seed` and the `point` section are optional. Floats are written in
//! shortest round-trip form, so reading a written file gives back the same
//! problem bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::observation::{Observation, ObservationKind};
use super::problem::validate_observation;
use super::{ModelError, Problem};

pub fn write_problem(problem: &Problem, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path, format_problem(problem))?;
    Ok(())
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<Problem, ModelError> {
    parse_problem(&fs::read_to_string(path)?)
}

pub fn format_problem(problem: &Problem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n_points {}", problem.n_points());
    if let Some(seed) = problem.seed() {
        let _ = writeln!(s, "seed {seed}");
    }
    if let Some(t) = problem.true_coords() {
        for p in 0..problem.n_points() {
            let _ = writeln!(s, "point {p} {:?} {:?}", t[2 * p], t[2 * p + 1]);
        }
    }
    for obs in problem.observations() {
        let _ = write!(s, "obs {}", obs.kind());
        for id in obs.point_ids() {
            let _ = write!(s, " {id}");
        }
        let _ = writeln!(s, " {:?} {:?}", obs.value, obs.sigma);
    }
    let x0 = problem.initial_guess();
    for p in 0..problem.n_points() {
        let _ = writeln!(s, "init {p} {:?} {:?}", x0[2 * p], x0[2 * p + 1]);
    }
    s
}

pub fn parse_problem(text: &str) -> Result<Problem, ModelError> {
    let mut n_points: Option<usize> = None;
    let mut seed = None;
    let mut truth: Option<Vec<Option<[f64; 2]>>> = None;
    let mut init: Vec<Option<[f64; 2]>> = Vec::new();
    let mut observations = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| ModelError::Parse { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let key = tok.next().unwrap_or_default();
        let fields: Vec<&str> = tok.collect();
        if key == "n_points" {
            if n_points.is_some() {
                return Err(err("duplicate n_points header".into()));
            }
            let [v] = fields[..] else {
                return Err(err("expected `n_points <count>`".into()));
            };
            let n: usize = parse(v).map_err(err)?;
            n_points = Some(n);
            init = vec![None; n];
            continue;
        }
        let Some(n) = n_points else {
            return Err(err("`n_points` header must come first".into()));
        };
        match key {
            "seed" => {
                let [v] = fields[..] else {
                    return Err(err("expected `seed <integer>`".into()));
                };
                seed = Some(parse::<u64>(v).map_err(err)?);
            }
            "point" | "init" => {
                let [id, x, y] = fields[..] else {
                    return Err(err(format!("expected `{key} <id> <x> <y>`")));
                };
                let id: usize = parse(id).map_err(err)?;
                if id >= n {
                    return Err(err(format!("point id {id} out of range")));
                }
                let xy = [parse(x).map_err(err)?, parse(y).map_err(err)?];
                let slot = if key == "point" {
                    &mut truth.get_or_insert_with(|| vec![None; n])[id]
                } else {
                    &mut init[id]
                };
                if slot.replace(xy).is_some() {
                    return Err(err(format!("duplicate `{key}` line for point {id}")));
                }
            }
            "obs" => {
                let Some((&kind, rest)) = fields.split_first() else {
                    return Err(err("expected `obs <kind> <ids...> <value> <sigma>`".into()));
                };
                let kind = ObservationKind::from_str(kind).map_err(err)?;
                if rest.len() != kind.arity() + 2 {
                    return Err(err(format!(
                        "{kind} needs {} point ids, a value and a sigma",
                        kind.arity()
                    )));
                }
                let ids = rest[..kind.arity()]
                    .iter()
                    .map(|t| parse::<usize>(t))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                let value = parse(rest[kind.arity()]).map_err(err)?;
                let sigma = parse(rest[kind.arity() + 1]).map_err(err)?;
                observations.push((line_no, Observation::new(kind, &ids, value, sigma)));
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }

    let last_line = text.lines().count().max(1);
    let Some(n) = n_points else {
        return Err(ModelError::Parse {
            line: last_line,
            message: "missing `n_points` header".into(),
        });
    };
    let flatten = |v: Vec<Option<[f64; 2]>>, what: &str| -> Result<Vec<f64>, ModelError> {
        v.into_iter()
            .enumerate()
            .map(|(p, xy)| {
                xy.ok_or_else(|| ModelError::Parse {
                    line: last_line,
                    message: format!("missing `{what}` line for point {p}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.into_iter().flatten().collect())
    };
    let initial = flatten(init, "init")?;
    let truth = truth.map(|t| flatten(t, "point")).transpose()?;

    for (line, obs) in &observations {
        validate_observation(obs, n).map_err(|message| ModelError::Parse { line: *line, message })?;
    }
    let mut problem = Problem::new(n, observations.into_iter().map(|(_, o)| o).collect(), initial)?;
    if let Some(t) = truth {
        problem = problem.with_truth(t)?;
    }
    if let Some(s) = seed {
        problem = problem.with_seed(s);
    }
    Ok(problem)
}

fn parse<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse `{s}`"))
}
