use rayon::prelude::*;
use serde::Serialize;

use super::engine::{Protocol, SimOptions};
use super::{ProtocolConfig, ProtocolError, Theorem};
use crate::instance::Instance;
use crate::quantum::Operator;
use crate::rates::ConditionalChannel;
use crate::registry::Registry;

/// Outcome of one sampled codebook.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub distance: Option<f64>,
    /// Largest eigenvalue of sum_j Gamma_j - I over all m, clipped at zero.
    pub defect: f64,
    pub flagged: Vec<bool>,
    pub flag_rate: f64,
    pub decode_error: Option<f64>,
    pub coverage: f64,
    /// Largest eigenvalue of the summed simulated family.
    pub simulated_total: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// Half-width of the normal 95% interval for the mean.
    pub ci95: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Some(Self {
            mean,
            median,
            std: var.sqrt(),
            ci95: 1.96 * var.sqrt() / k.sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            count: values.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub config: ProtocolConfig,
    pub options: SimOptions,
    pub normalizer: f64,
    pub omega_trace: f64,
    pub cutoff_rank: usize,
    pub typical_codewords: usize,
    pub equivalence_residual: Option<f64>,
    pub completeness_residual: Option<f64>,
    pub distance: Option<Summary>,
    pub defect: Summary,
    pub flag_rate: Summary,
    pub decode_error: Option<Summary>,
    pub coverage: Summary,
    pub seeds: Vec<SeedReport>,
}

impl Protocol {
    pub fn run_seed(&self, seed: u64) -> Result<SeedReport, ProtocolError> {
        let cb = self.sample_codebook(seed);
        let subs = self.alice_subpovms(&cb)?;
        let flagged: Vec<bool> = subs.iter().map(|s| s.flagged).collect();
        let defect = subs.iter().map(|s| s.defect).fold(0.0, f64::max);
        let (distance, simulated_total) = match self.assemble(&cb, &subs)? {
            Some(family) => {
                let d = self.faithful_distance(&family)?;
                let mut total: Option<Operator> = None;
                for op in family.iter().flatten() {
                    match total.as_mut() {
                        Some(t) => t.add_scaled(1.0, op)?,
                        None => total = Some(op.clone()),
                    }
                }
                let top = match total {
                    Some(t) => t.max_eigenvalue()?,
                    None => 0.0,
                };
                (d, Some(top))
            }
            None => (None, None),
        };
        let decode_error = if self.options().decode {
            let (err, mass) = self.decode_error(&cb, &subs)?;
            Some(if mass > 0.0 {
                (err / mass).clamp(0.0, 1.0)
            } else {
                1.0
            })
        } else {
            None
        };
        Ok(SeedReport {
            seed,
            distance,
            defect,
            flag_rate: flagged.iter().filter(|f| **f).count() as f64 / flagged.len() as f64,
            flagged,
            decode_error,
            coverage: self.coverage(&cb),
            simulated_total,
        })
    }
}

/// Build the protocol once and evaluate `seeds` consecutive codebook seeds
/// starting from the configured one.
pub fn simulate(
    inst: &Instance,
    ch_a: &ConditionalChannel,
    ch_b: &ConditionalChannel,
    cfg: &ProtocolConfig,
    opts: &SimOptions,
    seeds: usize,
) -> Result<SimReport, ProtocolError> {
    if seeds == 0 {
        return Err(ProtocolError::InvalidConfig(
            "at least one seed is required".into(),
        ));
    }
    let protocol = Protocol::new(inst, ch_a, ch_b, cfg.clone(), opts.clone())?;
    let per_seed: Vec<SeedReport> = (0..seeds as u64)
        .into_par_iter()
        .map(|k| protocol.run_seed(cfg.seed.wrapping_add(k)))
        .collect::<Result<_, _>>()?;
    let collect = |f: &dyn Fn(&SeedReport) -> Option<f64>| -> Vec<f64> {
        per_seed.iter().filter_map(f).collect()
    };
    let summary = |v: Vec<f64>| Summary::from_values(&v).expect("seeds > 0");
    Ok(SimReport {
        config: cfg.clone(),
        options: opts.clone(),
        normalizer: protocol.normalizer(),
        omega_trace: protocol.omega_trace(),
        cutoff_rank: protocol.cutoff_rank(),
        typical_codewords: protocol.typical_codewords().len(),
        equivalence_residual: protocol.equivalence_residual(),
        completeness_residual: protocol.completeness_residual(),
        distance: Summary::from_values(&collect(&|r| r.distance)),
        defect: summary(collect(&|r| Some(r.defect))),
        flag_rate: summary(collect(&|r| Some(r.flag_rate))),
        decode_error: Summary::from_values(&collect(&|r| r.decode_error)),
        coverage: summary(collect(&|r| Some(r.coverage))),
        seeds: per_seed,
    })
}

/// A named protocol construction.
pub trait SimulationScheme: Send + Sync {
    fn theorem(&self) -> Theorem;

    fn run(
        &self,
        inst: &Instance,
        ch_a: &ConditionalChannel,
        ch_b: &ConditionalChannel,
        cfg: &ProtocolConfig,
        opts: &SimOptions,
        seeds: usize,
    ) -> Result<SimReport, ProtocolError> {
        let cfg = ProtocolConfig {
            theorem: self.theorem(),
            ..cfg.clone()
        };
        simulate(inst, ch_a, ch_b, &cfg, opts, seeds)
    }
}

struct TwoSided;
struct OneSided;

impl SimulationScheme for TwoSided {
    fn theorem(&self) -> Theorem {
        Theorem::One
    }
}

impl SimulationScheme for OneSided {
    fn theorem(&self) -> Theorem {
        Theorem::Two
    }
}

pub fn simulation_schemes() -> Registry<dyn SimulationScheme> {
    let mut r: Registry<dyn SimulationScheme> = Registry::new();
    r.register("theorem1", Box::new(TwoSided))
        .register("theorem2", Box::new(OneSided));
    r
}
