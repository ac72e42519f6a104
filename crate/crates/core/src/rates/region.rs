use serde::Serialize;

use super::{RateError, RatePoint};

const HULL_TOL: f64 = 1e-12;

/// Time-sharing hull of the regions {R >= r1, R + S >= r2}, described by
/// the vertices of its lower-left frontier in the (R, S) plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRegion {
    pub points: Vec<RatePoint>,
    /// Frontier vertices `[R, S]`, R ascending and S descending.
    pub corners: Vec<[f64; 2]>,
    pub time_shared: bool,
}

/// The two vertices of a single point's region, with rates clipped at 0.
pub fn point_corners(p: &RatePoint) -> [[f64; 2]; 2] {
    let r1 = p.r.max(0.0);
    let r2 = p.rs.max(0.0);
    [[r1, (r2 - r1).max(0.0)], [r1.max(r2), 0.0]]
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn combined_region(points: &[RatePoint]) -> Result<RateRegion, RateError> {
    if points.is_empty() {
        return Err(RateError::EmptyRegion);
    }
    let mut all: Vec<[f64; 2]> = points.iter().flat_map(point_corners).collect();
    all.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    // Keep the Pareto-minimal vertices: strictly decreasing S as R grows.
    let mut pareto: Vec<[f64; 2]> = Vec::new();
    for c in all {
        if pareto.last().map_or(true, |l| c[1] < l[1] - HULL_TOL) {
            pareto.push(c);
        }
    }
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for c in pareto {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], c) <= HULL_TOL {
            hull.pop();
        }
        hull.push(c);
    }
    Ok(RateRegion {
        points: points.to_vec(),
        corners: hull,
        time_shared: points.len() > 1,
    })
}

impl RateRegion {
    /// Smallest S admissible at rate R, or `None` if R is below every point.
    pub fn min_s(&self, r: f64) -> Option<f64> {
        let c = &self.corners;
        if r < c[0][0] - HULL_TOL {
            return None;
        }
        for w in c.windows(2) {
            if r <= w[1][0] {
                let t = (r - w[0][0]) / (w[1][0] - w[0][0]);
                return Some(w[0][1] + t.clamp(0.0, 1.0) * (w[1][1] - w[0][1]));
            }
        }
        Some(c[c.len() - 1][1])
    }

    pub fn contains(&self, r: f64, s: f64, tol: f64) -> bool {
        self.min_s(r + tol).is_some_and(|m| s >= m - tol)
    }
}
