use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Shortest segment length / leg length treated as non-degenerate.
pub const MIN_LENGTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservationKind {
    /// `‖P − Q‖`, points (P, Q).
    PointDistance,
    /// Angle at vertex B from BA to BC, points (A, B, C).
    Angle,
    /// Signed distance of P from the line through Q1 and Q2, points (P, Q1, Q2).
    PointLine,
    CoordX,
    CoordY,
}

impl ObservationKind {
    pub const ALL: [ObservationKind; 5] = [
        ObservationKind::PointDistance,
        ObservationKind::Angle,
        ObservationKind::PointLine,
        ObservationKind::CoordX,
        ObservationKind::CoordY,
    ];

    pub fn arity(self) -> usize {
        match self {
            ObservationKind::PointDistance => 2,
            ObservationKind::Angle | ObservationKind::PointLine => 3,
            ObservationKind::CoordX | ObservationKind::CoordY => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObservationKind::PointDistance => "distance",
            ObservationKind::Angle => "angle",
            ObservationKind::PointLine => "point_line",
            ObservationKind::CoordX => "coord_x",
            ObservationKind::CoordY => "coord_y",
        }
    }
}

impl fmt::Display for ObservationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown observation kind `{s}`"))
    }
}

/// Geometry for which a residual or its derivative is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degenerate {
    pub kind: ObservationKind,
    pub reason: &'static str,
}

/// One measurement of a geometric quantity with its standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    kind: ObservationKind,
    points: [usize; 3],
    pub value: f64,
    pub sigma: f64,
}

impl Observation {
    /// Panics if the number of ids does not match the kind.
    pub fn new(kind: ObservationKind, ids: &[usize], value: f64, sigma: f64) -> Self {
        assert_eq!(ids.len(), kind.arity(), "{kind} takes {} points", kind.arity());
        let mut points = [usize::MAX; 3];
        points[..ids.len()].copy_from_slice(ids);
        Self {
            kind,
            points,
            value,
            sigma,
        }
    }

    pub fn distance(p: usize, q: usize, value: f64, sigma: f64) -> Self {
        Self::new(ObservationKind::PointDistance, &[p, q], value, sigma)
    }

    pub fn angle(a: usize, vertex: usize, c: usize, value: f64, sigma: f64) -> Self {
        Self::new(ObservationKind::Angle, &[a, vertex, c], value, sigma)
    }

    pub fn point_line(p: usize, q1: usize, q2: usize, value: f64, sigma: f64) -> Self {
        Self::new(ObservationKind::PointLine, &[p, q1, q2], value, sigma)
    }

    pub fn coord_x(p: usize, value: f64, sigma: f64) -> Self {
        Self::new(ObservationKind::CoordX, &[p], value, sigma)
    }

    pub fn coord_y(p: usize, value: f64, sigma: f64) -> Self {
        Self::new(ObservationKind::CoordY, &[p], value, sigma)
    }

    pub fn kind(&self) -> ObservationKind {
        self.kind
    }

    pub fn point_ids(&self) -> &[usize] {
        &self.points[..self.kind.arity()]
    }

    fn degenerate(&self, reason: &'static str) -> Degenerate {
        Degenerate {
            kind: self.kind,
            reason,
        }
    }
}

#[inline]
fn point(x: &[f64], id: usize) -> [f64; 2] {
    [x[2 * id], x[2 * id + 1]]
}

#[inline]
fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn dotp(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Wraps an angle difference into (−π, π].
pub fn wrap_angle(mut a: f64) -> f64 {
    if a.is_finite() {
        a %= 2.0 * PI;
        if a > PI {
            a -= 2.0 * PI;
        } else if a <= -PI {
            a += 2.0 * PI;
        }
    }
    a
}

/// Signed angle at `b` from `ba` to `bc`, in (−π, π].
pub fn angle_at(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let (ba, bc) = (sub(a, b), sub(c, b));
    cross(ba, bc).atan2(dotp(ba, bc))
}

/// Signed perpendicular distance of `p` from the line through `q1`, `q2`
/// (positive to the left of q1 → q2).
pub fn signed_line_distance(p: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> f64 {
    let q = sub(q2, q1);
    cross(q, sub(p, q1)) / dotp(q, q).sqrt()
}

/// Unweighted misfit of `obs` at coordinates `x`.
pub fn raw_residual(obs: &Observation, x: &[f64]) -> Result<f64, Degenerate> {
    let ids = obs.point_ids();
    match obs.kind {
        ObservationKind::PointDistance => {
            let d = sub(point(x, ids[0]), point(x, ids[1]));
            Ok(dotp(d, d).sqrt() - obs.value)
        }
        ObservationKind::Angle => {
            let (a, b, c) = (point(x, ids[0]), point(x, ids[1]), point(x, ids[2]));
            let (ba, bc) = (sub(a, b), sub(c, b));
            if dotp(ba, ba).sqrt() < MIN_LENGTH || dotp(bc, bc).sqrt() < MIN_LENGTH {
                return Err(obs.degenerate("angle leg has zero length"));
            }
            Ok(wrap_angle(angle_at(a, b, c) - obs.value))
        }
        ObservationKind::PointLine => {
            let (p, q1, q2) = (point(x, ids[0]), point(x, ids[1]), point(x, ids[2]));
            let q = sub(q2, q1);
            if dotp(q, q).sqrt() < MIN_LENGTH {
                return Err(obs.degenerate("line points coincide"));
            }
            Ok(signed_line_distance(p, q1, q2) - obs.value)
        }
        ObservationKind::CoordX => Ok(x[2 * ids[0]] - obs.value),
        ObservationKind::CoordY => Ok(x[2 * ids[0] + 1] - obs.value),
    }
}

/// Misfit divided by the observation's standard deviation.
pub fn weighted_residual(obs: &Observation, x: &[f64]) -> Result<f64, Degenerate> {
    Ok(raw_residual(obs, x)? / obs.sigma)
}

/// Nonzero pattern and values of one Jacobian row, columns ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianRow {
    entries: [(usize, f64); 6],
    len: usize,
}

impl JacobianRow {
    fn from_points(ids: &[usize], grads: &[[f64; 2]], scale: f64) -> Self {
        let mut entries = [(0usize, 0.0); 6];
        let mut len = 0;
        for (&id, g) in ids.iter().zip(grads) {
            entries[len] = (2 * id, g[0] * scale);
            entries[len + 1] = (2 * id + 1, g[1] * scale);
            len += 2;
        }
        entries[..len].sort_unstable_by_key(|e| e.0);
        Self { entries, len }
    }

    fn single(col: usize, value: f64) -> Self {
        let mut entries = [(0usize, 0.0); 6];
        entries[0] = (col, value);
        Self { entries, len: 1 }
    }

    /// `(column, value)` pairs, including structural entries that happen to be 0.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries[..self.len]
    }

    pub fn get(&self, col: usize) -> f64 {
        self.entries().iter().find(|e| e.0 == col).map_or(0.0, |e| e.1)
    }
}

/// Analytic gradient of the weighted residual with respect to the
/// coordinates of the involved points.
pub fn jacobian_row(obs: &Observation, x: &[f64]) -> Result<JacobianRow, Degenerate> {
    let ids = obs.point_ids();
    let w = 1.0 / obs.sigma;
    match obs.kind {
        ObservationKind::PointDistance => {
            let d = sub(point(x, ids[0]), point(x, ids[1]));
            let len = dotp(d, d).sqrt();
            if len < MIN_LENGTH {
                return Err(obs.degenerate("distance endpoints coincide"));
            }
            let u = [d[0] / len, d[1] / len];
            Ok(JacobianRow::from_points(ids, &[u, [-u[0], -u[1]]], w))
        }
        ObservationKind::Angle => {
            let (a, b, c) = (point(x, ids[0]), point(x, ids[1]), point(x, ids[2]));
            let (ba, bc) = (sub(a, b), sub(c, b));
            let (na, nc) = (dotp(ba, ba), dotp(bc, bc));
            if na.sqrt() < MIN_LENGTH || nc.sqrt() < MIN_LENGTH {
                return Err(obs.degenerate("angle leg has zero length"));
            }
            // θ = arg(BC) − arg(BA)
            let ga = [ba[1] / na, -ba[0] / na];
            let gc = [-bc[1] / nc, bc[0] / nc];
            let gb = [-ga[0] - gc[0], -ga[1] - gc[1]];
            Ok(JacobianRow::from_points(ids, &[ga, gb, gc], w))
        }
        ObservationKind::PointLine => {
            let (p, q1, q2) = (point(x, ids[0]), point(x, ids[1]), point(x, ids[2]));
            let q = sub(q2, q1);
            let e = sub(p, q1);
            let len = dotp(q, q).sqrt();
            if len < MIN_LENGTH {
                return Err(obs.degenerate("line points coincide"));
            }
            let c = cross(q, e);
            let len3 = len * len * len;
            let gp = [-q[1] / len, q[0] / len];
            let gq2 = [e[1] / len - c * q[0] / len3, -e[0] / len - c * q[1] / len3];
            let gq1 = [-gp[0] - gq2[0], -gp[1] - gq2[1]];
            Ok(JacobianRow::from_points(ids, &[gp, gq1, gq2], w))
        }
        ObservationKind::CoordX => Ok(JacobianRow::single(2 * ids[0], w)),
        ObservationKind::CoordY => Ok(JacobianRow::single(2 * ids[0] + 1, w)),
    }
}
