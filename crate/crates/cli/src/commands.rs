use std::path::PathBuf;

use clap::Args;
use dqms_core::graph::{build_tilde_g, IndependentSetFamily, JointPmf};
use dqms_core::optimizer::{conditional_graph_entropy, OptimizerConfig};
use dqms_core::protocol::{simulation_schemes, ProtocolConfig, SimOptions, Theorem};
use dqms_core::rates::{
    combined_region, joint_wv, rate_bounds, ChannelChoice, ChannelSource, ConditionalChannel,
    RatePoint,
};
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::{csv_bytes, emit, num};
use crate::problem::{channel, family, read_json, Problem, RawChannelFile};

const MAX_GRID_POINTS: usize = 200_000;

#[derive(Args, Debug, Clone, Default)]
pub struct ChannelArgs {
    /// Minimize the conditional mutual information over Alice's channel.
    #[arg(long)]
    pub optimize: bool,
    /// JSON file with Alice's channel rows (and optionally her family).
    #[arg(long, value_name = "FILE")]
    pub channel_a: Option<PathBuf>,
    /// JSON file with Bob's channel rows (and optionally his family).
    #[arg(long, value_name = "FILE")]
    pub channel_b: Option<PathBuf>,
}

fn families(p: &Problem) -> Result<(IndependentSetFamily, IndependentSetFamily), CliError> {
    let inst = &p.instance;
    let fa = match &p.family_a {
        Some(f) => f.clone(),
        None => inst
            .alice_family()
            .map_err(|e| CliError::Validation(e.to_string()))?,
    };
    let fb = match &p.family_b {
        Some(f) => f.clone(),
        None => inst
            .bob_family(&fa)
            .map_err(|e| CliError::Validation(e.to_string()))?,
    };
    Ok((fa, fb))
}

fn file_channel(
    path: &PathBuf,
    default_family: &IndependentSetFamily,
) -> Result<ConditionalChannel, CliError> {
    let raw: RawChannelFile = read_json(path)?;
    let origin = path.display().to_string();
    let fam = match &raw.family {
        Some(sets) => family(
            sets,
            default_family.alphabet(),
            &format!("{origin}: family"),
        )?,
        None => default_family.clone(),
    };
    channel(fam, &raw.rows, &format!("{origin}: rows"))
}

/// Bob's channel minimizing I(W_B; V | W_A) for a fixed Alice channel.
fn optimize_bob(
    pmf: &JointPmf,
    alice: &ConditionalChannel,
    fb: &IndependentSetFamily,
    cfg: &OptimizerConfig,
) -> Result<ConditionalChannel, CliError> {
    let (nv, nw) = (pmf.v_size(), alice.outputs());
    let wv = joint_wv(pmf, alice);
    let mut vw = vec![0.0; nv * nw];
    for w in 0..nw {
        for v in 0..nv {
            vw[v * nw + w] = wv[w * nv + v];
        }
    }
    let side = JointPmf::new(nv, nw, vw).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(conditional_graph_entropy(&side, fb, cfg)?.channel)
}

pub fn choose_channels(
    p: &Problem,
    args: &ChannelArgs,
    cfg: &OptimizerConfig,
) -> Result<(ChannelChoice, Option<f64>), CliError> {
    let (fa, fb) = families(p)?;
    let pmf = p.instance.pmf();
    let mut value = None;
    let (alice, source) = if let Some(path) = &args.channel_a {
        (file_channel(path, &fa)?, ChannelSource::Supplied)
    } else if args.optimize {
        let best = conditional_graph_entropy(pmf, &fa, cfg)?;
        value = Some(best.value);
        (best.channel, ChannelSource::Optimizer)
    } else if let Some(rows) = &p.channel_a {
        (
            channel(fa.clone(), rows, "channels.alice")?,
            ChannelSource::Supplied,
        )
    } else {
        (
            ConditionalChannel::uniform(fa.clone())?,
            ChannelSource::Default,
        )
    };
    let bob = if let Some(path) = &args.channel_b {
        file_channel(path, &fb)?
    } else if args.optimize {
        optimize_bob(pmf, &alice, &fb, cfg)?
    } else if let Some(rows) = &p.channel_b {
        channel(fb.clone(), rows, "channels.bob")?
    } else {
        ConditionalChannel::uniform(fb)?
    };
    Ok((ChannelChoice { alice, bob, source }, value))
}

pub fn graph(p: &Problem) -> Result<String, CliError> {
    let (fa, fb) = families(p)?;
    let inst = &p.instance;
    let g = inst.g();
    let mut out = p
        .description
        .as_ref()
        .map(|d| format!("# {d}\n"))
        .unwrap_or_default();
    out.push_str(&format!("G_A = {}\nG_B = {}\n", fa.display(), fb.display()));
    if let Some(f) = &p.family_a {
        f.validate_alice(inst.pmf(), g)
            .map_err(|e| CliError::Validation(format!("families.alice: {e}")))?;
    }
    if let Some(f) = &p.family_b {
        f.validate_bob(&fa, inst.pmf(), g)
            .map_err(|e| CliError::Validation(format!("families.bob: {e}")))?;
    }
    match build_tilde_g(&fa, &fb, inst.pmf(), g) {
        Ok(t) => {
            out.push_str("g~ (rows: sets of G_A, columns: sets of G_B; * = no support)\n");
            for wa in 0..t.rows() {
                let cells: Vec<String> = (0..t.cols())
                    .map(|wb| {
                        t.cell(wa, wb)
                            .map_or("*".to_string(), |z| g.label(z).to_string())
                    })
                    .collect();
                out.push_str(&format!("  {}\n", cells.join(" ")));
            }
            out.push_str("consistent: yes\n");
            Ok(out)
        }
        Err(e) => Err(CliError::Validation(format!("{out}consistent: no ({e})"))),
    }
}

fn rate_rows(points: &[RatePoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|pt| vec![pt.label.clone(), num(pt.r), num(pt.rs)])
        .collect()
}

pub fn rates(
    p: &Problem,
    args: &ChannelArgs,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let (choice, value) = choose_channels(p, args, &OptimizerConfig::default())?;
    if let Some(v) = value {
        eprintln!("conditional graph entropy: {}", num(v));
    }
    let registry = rate_bounds();
    let mut points = Vec::new();
    for name in ["theorem1", "theorem2", "baseline"] {
        let bound = registry.get(name).expect("registered bound");
        points.push(bound.evaluate(&p.instance, &choice)?);
    }
    emit(out, &csv_bytes(&["label", "R", "RS"], &rate_rows(&points))?)
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Blocklength.
    #[arg(long)]
    pub n: usize,
    /// Typicality width.
    #[arg(long)]
    pub delta: f64,
    /// Eigenvalue cutoff parameter.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Codewords per common-randomness value.
    #[arg(long)]
    pub s: usize,
    /// Number of bins.
    #[arg(long)]
    pub t: usize,
    /// Number of common-randomness values.
    #[arg(long = "m")]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 1: both parties use independent sets; 2: only Alice does.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub theorem: u8,
    /// Number of consecutive codebook seeds.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    /// Skip the exact distance.
    #[arg(long)]
    pub no_distance: bool,
    /// Skip the decoder.
    #[arg(long)]
    pub no_decode: bool,
    /// Largest joint dimension for which the distance is computed.
    #[arg(long, default_value_t = 1024)]
    pub distance_limit: usize,
}

pub fn simulate(
    p: &Problem,
    args: &SimulateArgs,
    ch: &ChannelArgs,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let theorem = Theorem::try_from(args.theorem).map_err(CliError::Validation)?;
    let cfg = ProtocolConfig {
        n: args.n,
        delta: args.delta,
        epsilon: args.epsilon,
        s: args.s,
        t: args.t,
        m: args.m,
        seed: args.seed,
        theorem,
    };
    cfg.validate()?;
    let opts = SimOptions {
        distance: !args.no_distance,
        distance_dim_limit: args.distance_limit,
        decode: !args.no_decode,
        ..SimOptions::default()
    };
    let (choice, _) = choose_channels(p, ch, &OptimizerConfig::default())?;
    let name = match theorem {
        Theorem::One => "theorem1",
        Theorem::Two => "theorem2",
    };
    let schemes = simulation_schemes();
    let scheme = schemes.get(name).expect("registered scheme");
    let report = scheme.run(
        &p.instance,
        &choice.alice,
        &choice.bob,
        &cfg,
        &opts,
        args.seeds,
    )?;
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    json.push(b'\n');
    emit(out, &json)
}

/// All rows of a channel on a grid of spacing 1/resolution, restricted to
/// the sets containing each symbol.
fn grid_channels(
    fa: &IndependentSetFamily,
    resolution: usize,
) -> Result<Vec<ConditionalChannel>, CliError> {
    fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        (0..=total)
            .flat_map(|k| {
                compositions(total - k, parts - 1)
                    .into_iter()
                    .map(move |mut rest| {
                        rest.insert(0, k);
                        rest
                    })
            })
            .collect()
    }
    let per_symbol: Vec<(Vec<usize>, Vec<Vec<usize>>)> = (0..fa.alphabet())
        .map(|u| {
            let sets = fa.containing(u);
            let comps = compositions(resolution, sets.len());
            (sets, comps)
        })
        .collect();
    let count = per_symbol
        .iter()
        .try_fold(1usize, |acc, (_, c)| acc.checked_mul(c.len()))
        .filter(|&c| c <= MAX_GRID_POINTS)
        .ok_or_else(|| {
            CliError::Validation(format!(
                "grid of resolution {resolution} exceeds {MAX_GRID_POINTS} channels"
            ))
        })?;
    let nw = fa.len();
    let mut out = Vec::with_capacity(count);
    for mut idx in 0..count {
        let mut matrix = vec![0.0; fa.alphabet() * nw];
        for (u, (sets, comps)) in per_symbol.iter().enumerate().rev() {
            let c = &comps[idx % comps.len()];
            idx /= comps.len();
            for (&w, &k) in sets.iter().zip(c) {
                matrix[u * nw + w] = k as f64 / resolution as f64;
            }
        }
        out.push(ConditionalChannel::new(fa.clone(), matrix)?);
    }
    Ok(out)
}

pub fn region(
    p: &Problem,
    grid: usize,
    ch: &ChannelArgs,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    if grid == 0 {
        return Err(CliError::Validation("--grid must be at least 1".into()));
    }
    let (fa, _) = families(p)?;
    let base = ChannelArgs {
        optimize: false,
        ..ch.clone()
    };
    let (choice, _) = choose_channels(p, &base, &OptimizerConfig::default())?;
    let channels = grid_channels(&fa, grid)?;
    let registry = rate_bounds();
    let per_channel: Vec<Vec<RatePoint>> = channels
        .into_par_iter()
        .enumerate()
        .map(|(k, alice)| {
            let c = ChannelChoice {
                alice,
                bob: choice.bob.clone(),
                source: ChannelSource::Supplied,
            };
            ["theorem1", "theorem2"]
                .iter()
                .map(|name| {
                    let mut pt = registry
                        .get(name)
                        .expect("registered")
                        .evaluate(&p.instance, &c)?;
                    pt.label = format!("{name}:{k}");
                    Ok(pt)
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut points: Vec<RatePoint> = per_channel.into_iter().flatten().collect();
    points.push(
        registry
            .get("baseline")
            .expect("registered")
            .evaluate(&p.instance, &choice)?,
    );
    let region = combined_region(&points)?;
    let mut rows: Vec<Vec<String>> = points
        .iter()
        .map(|pt| vec!["point".into(), pt.label.clone(), num(pt.r), num(pt.rs)])
        .collect();
    for (i, c) in region.corners.iter().enumerate() {
        rows.push(vec![
            "corner".into(),
            format!("corner:{i}"),
            num(c[0]),
            num(c[0] + c[1]),
        ]);
    }
    emit(out, &csv_bytes(&["kind", "label", "R", "RS"], &rows)?)
}
