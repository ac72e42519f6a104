use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use super::objective::{gradient, objective, support_mask};
use super::OptimizerError;
use crate::graph::{IndependentSetFamily, JointPmf};
use crate::rates::ConditionalChannel;
use crate::registry::Registry;

const TIE_TOL: f64 = 1e-6;
const MIN_STEP: f64 = 1e-14;
const GRID_MAX_PARAMS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    /// Random interior starts, in addition to the deterministic vertices.
    pub starts: usize,
    pub max_iter: usize,
    pub initial_step: f64,
    pub max_step: f64,
    /// Backtracking factor in (0, 1).
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Cap on enumerated deterministic vertex starts.
    pub max_vertices: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 32,
            max_iter: 2000,
            initial_step: 1.0,
            max_step: 64.0,
            shrink: 0.5,
            armijo: 1e-4,
            tolerance: 1e-10,
            seed: 0,
            max_vertices: 4096,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::InvalidConfig(m.into()));
        if self.starts == 0 && self.max_vertices == 0 {
            return bad("no starting points");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(self.initial_step > 0.0 && self.max_step >= self.initial_step) {
            return bad("step sizes must satisfy 0 < initial <= max");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo constant must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizedChannel {
    pub channel: ConditionalChannel,
    pub value: f64,
    /// Final objective of every start, vertices first.
    pub start_values: Vec<f64>,
}

/// Euclidean projection of `y` onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

struct Problem<'a> {
    pmf: &'a JointPmf,
    nw: usize,
    rows: Vec<Vec<usize>>,
}

impl Problem<'_> {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (u, cols) in self.rows.iter().enumerate() {
            let y: Vec<f64> = cols.iter().map(|&w| x[u * self.nw + w]).collect();
            let p = project_simplex(&y);
            let sum: f64 = p.iter().sum();
            for (&w, v) in cols.iter().zip(p) {
                out[u * self.nw + w] = v / sum;
            }
        }
        out
    }

    fn f(&self, x: &[f64]) -> f64 {
        objective(self.pmf, x, self.nw)
    }

    fn descend(&self, x0: Vec<f64>, cfg: &OptimizerConfig) -> (Vec<f64>, f64) {
        let mut x = self.project(&x0);
        let mut fx = self.f(&x);
        let mut step = cfg.initial_step;
        for _ in 0..cfg.max_iter {
            let g = gradient(self.pmf, &x, self.nw);
            let accepted = loop {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                let y = self.project(&trial);
                let fy = self.f(&y);
                let decrease: f64 = g
                    .iter()
                    .zip(y.iter().zip(&x))
                    .map(|(gi, (a, b))| gi * (a - b))
                    .sum();
                if fy <= fx + cfg.armijo * decrease {
                    break Some((y, fy));
                }
                step *= cfg.shrink;
                if step < MIN_STEP {
                    break None;
                }
            };
            let Some((y, fy)) = accepted else { break };
            let gain = fx - fy;
            x = y;
            fx = fy;
            if gain <= cfg.tolerance {
                break;
            }
            step = (step * 2.0).min(cfg.max_step);
        }
        (x, fx)
    }
}

fn vertex_starts(rows: &[Vec<usize>], nw: usize, cap: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; rows.len()];
    while out.len() < cap {
        let mut x = vec![0.0; rows.len() * nw];
        for (u, &k) in idx.iter().enumerate() {
            x[u * nw + rows[u][k]] = 1.0;
        }
        out.push(x);
        // odometer increment, last row fastest
        let mut u = rows.len();
        loop {
            if u == 0 {
                return out;
            }
            u -= 1;
            idx[u] += 1;
            if idx[u] < rows[u].len() {
                break;
            }
            idx[u] = 0;
        }
    }
    out
}

fn random_start(rows: &[Vec<usize>], nw: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut x = vec![0.0; rows.len() * nw];
    for (u, cols) in rows.iter().enumerate() {
        let e: Vec<f64> = cols.iter().map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = e.iter().sum();
        for (&w, v) in cols.iter().zip(e) {
            x[u * nw + w] = v / s;
        }
    }
    x
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Picks the lexicographically smallest matrix among those within the tie
/// tolerance of the best value.
fn reduce(results: &[(Vec<f64>, f64)]) -> usize {
    let best = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mut pick: Option<usize> = None;
    for (i, (x, v)) in results.iter().enumerate() {
        if *v <= best + TIE_TOL && pick.map_or(true, |p| lexicographic(x, &results[p].0).is_lt()) {
            pick = Some(i);
        }
    }
    pick.expect("at least one start")
}

/// Multistart projected gradient descent for H_G(U|V).
pub fn conditional_graph_entropy(
    pmf: &JointPmf,
    family: &IndependentSetFamily,
    cfg: &OptimizerConfig,
) -> Result<OptimizedChannel, OptimizerError> {
    cfg.validate()?;
    family.require_spanning()?;
    if family.alphabet() != pmf.u_size() {
        return Err(OptimizerError::InvalidConfig(format!(
            "family covers {} symbols, distribution has {}",
            family.alphabet(),
            pmf.u_size()
        )));
    }
    let nw = family.len();
    let rows: Vec<Vec<usize>> = (0..family.alphabet())
        .map(|u| family.containing(u))
        .collect();
    let problem = Problem { pmf, nw, rows };

    let mut starts = vertex_starts(&problem.rows, nw, cfg.max_vertices.max(1));
    if ConditionalChannel::free_parameters(family) > 0 {
        starts.extend((0..cfg.starts).map(|k| random_start(&problem.rows, nw, cfg.seed, k as u64)));
    }
    let results: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|x0| problem.descend(x0, cfg))
        .collect();
    let pick = reduce(&results);
    let (x, value) = results[pick].clone();
    debug_assert!(support_mask(family)
        .iter()
        .zip(&x)
        .all(|(m, v)| *m || *v == 0.0));
    Ok(OptimizedChannel {
        channel: ConditionalChannel::new(family.clone(), x)?,
        value,
        start_values: results.iter().map(|r| r.1).collect(),
    })
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Exhaustive grid minimum of I(W;U|V) with every free row on the simplex
/// lattice of the given resolution.
pub fn grid_oracle(
    pmf: &JointPmf,
    family: &IndependentSetFamily,
    resolution: usize,
) -> Result<(ConditionalChannel, f64), OptimizerError> {
    family.require_spanning()?;
    let count = ConditionalChannel::free_parameters(family);
    if count > GRID_MAX_PARAMS {
        return Err(OptimizerError::TooManyParameters {
            count,
            max: GRID_MAX_PARAMS,
        });
    }
    if resolution == 0 {
        return Err(OptimizerError::InvalidConfig(
            "grid resolution must be positive".into(),
        ));
    }
    let nw = family.len();
    let rows: Vec<Vec<usize>> = (0..family.alphabet())
        .map(|u| family.containing(u))
        .collect();
    let options: Vec<Vec<Vec<f64>>> = rows
        .iter()
        .map(|cols| {
            compositions(resolution, cols.len())
                .into_iter()
                .map(|c| c.iter().map(|&k| k as f64 / resolution as f64).collect())
                .collect()
        })
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut idx = vec![0usize; rows.len()];
    let mut x = vec![0.0; rows.len() * nw];
    'outer: loop {
        for (u, cols) in rows.iter().enumerate() {
            for (&w, &p) in cols.iter().zip(&options[u][idx[u]]) {
                x[u * nw + w] = p;
            }
        }
        let v = objective(pmf, &x, nw);
        if best.as_ref().map_or(true, |b| v < b.1) {
            best = Some((x.clone(), v));
        }
        let mut u = rows.len();
        loop {
            if u == 0 {
                break 'outer;
            }
            u -= 1;
            idx[u] += 1;
            if idx[u] < options[u].len() {
                break;
            }
            idx[u] = 0;
        }
    }
    let (x, v) = best.expect("grid is non-empty");
    Ok((ConditionalChannel::new(family.clone(), x)?, v))
}

pub trait ChannelOptimizer: Send + Sync {
    fn optimize(
        &self,
        pmf: &JointPmf,
        family: &IndependentSetFamily,
    ) -> Result<OptimizedChannel, OptimizerError>;
}

pub struct ProjectedGradient(pub OptimizerConfig);

pub struct GridSearch {
    pub resolution: usize,
}

impl ChannelOptimizer for ProjectedGradient {
    fn optimize(
        &self,
        pmf: &JointPmf,
        family: &IndependentSetFamily,
    ) -> Result<OptimizedChannel, OptimizerError> {
        conditional_graph_entropy(pmf, family, &self.0)
    }
}

impl ChannelOptimizer for GridSearch {
    fn optimize(
        &self,
        pmf: &JointPmf,
        family: &IndependentSetFamily,
    ) -> Result<OptimizedChannel, OptimizerError> {
        let (channel, value) = grid_oracle(pmf, family, self.resolution)?;
        Ok(OptimizedChannel {
            channel,
            value,
            start_values: vec![value],
        })
    }
}

pub fn channel_optimizers(
    cfg: &OptimizerConfig,
    grid_resolution: usize,
) -> Registry<dyn ChannelOptimizer> {
    let mut r: Registry<dyn ChannelOptimizer> = Registry::new();
    r.register("pgd", Box::new(ProjectedGradient(cfg.clone())))
        .register(
            "grid",
            Box::new(GridSearch {
                resolution: grid_resolution,
            }),
        );
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_basics() {
        let p = project_simplex(&[0.2, 0.3, 0.5]);
        assert!(p
            .iter()
            .zip([0.2, 0.3, 0.5])
            .all(|(a, b)| (a - b).abs() < 1e-15));
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[0.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vertices_enumerated_in_order() {
        let v = vertex_starts(&[vec![0], vec![0, 1], vec![1]], 2, 100);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(v[1], vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn ties_resolved_lexicographically() {
        let r = vec![
            (vec![0.6, 0.4], 1.0),
            (vec![0.4, 0.6], 1.0 + 1e-7),
            (vec![0.1, 0.9], 2.0),
        ];
        assert_eq!(reduce(&r), 1);
    }

    #[test]
    fn config_validation() {
        let mut c = OptimizerConfig::default();
        assert!(c.validate().is_ok());
        c.tolerance = 0.0;
        assert!(c.validate().is_err());
    }
}
