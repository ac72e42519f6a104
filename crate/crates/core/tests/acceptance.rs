mod common;

use std::time::{Duration, Instant};

use dqms_core::graph::{maximal_independent_sets, IndependentSetFamily, Side};
use dqms_core::optimizer::{conditional_graph_entropy, grid_oracle, OptimizerConfig};
use dqms_core::protocol::{Protocol, ProtocolConfig, SimOptions, Theorem};
use dqms_core::quantum::DensityOperator;
use dqms_core::rates::{
    baseline_rates, conditional_entropy, joint_wv, mutual_information, two_sided_rates,
    two_sided_terms, ConditionalChannel,
};
use dqms_core::Instance;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cards_channel(q: f64) -> ConditionalChannel {
    let fam = IndependentSetFamily::new(3, vec![vec![0, 1], vec![1, 2]], true).unwrap();
    ConditionalChannel::from_rows(fam, &[vec![1.0, 0.0], vec![q, 1.0 - q], vec![0.0, 1.0]]).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn cards_baseline() -> Outcome {
    let inst = Instance::cards();
    let pmf = inst.pmf();
    let h = conditional_entropy(pmf.entries(), pmf.u_size(), pmf.v_size());
    let r = baseline_rates(&inst).map_err(|e| e.to_string())?.r;
    check(
        (h - 1.0).abs() <= 1e-9 && (r - 1.0).abs() <= 1e-6,
        format!("H(U|V) = {h:.9}, R = {r:.9}"),
    )
}

fn cards_graph() -> Outcome {
    let inst = Instance::cards();
    let fam = maximal_independent_sets(inst.pmf(), inst.g(), Side::A).map_err(|e| e.to_string())?;
    check(
        fam.sets() == [vec![0, 1], vec![1, 2]],
        format!("G_A = {}", fam.display()),
    )
}

fn cards_graph_entropy() -> Outcome {
    let inst = Instance::cards();
    let fam = inst.alice_family().map_err(|e| e.to_string())?;
    let best = conditional_graph_entropy(inst.pmf(), &fam, &OptimizerConfig::default())
        .map_err(|e| e.to_string())?;
    let (_, grid) = grid_oracle(inst.pmf(), &fam, 10_000).map_err(|e| e.to_string())?;
    check(
        (0.536..=0.546).contains(&best.value) && (best.value - grid).abs() <= 1e-3,
        format!("optimizer {:.6}, grid {:.6}", best.value, grid),
    )
}

fn cards_sum_rate() -> Outcome {
    let inst = Instance::cards();
    let fam = inst.alice_family().map_err(|e| e.to_string())?;
    let best = conditional_graph_entropy(inst.pmf(), &fam, &OptimizerConfig::default())
        .map_err(|e| e.to_string())?;
    let t = two_sided_terms(&inst, &best.channel, &ConditionalChannel::identity(3))
        .map_err(|e| e.to_string())?;
    check(
        (t.h_wa_given_wb - 0.874).abs() <= 0.005,
        format!("H(W_A|V) = {:.6}", t.h_wa_given_wb),
    )
}

fn equalization() -> Outcome {
    let mut rng = common::rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let inst = common::random_instance(&mut rng);
        let ch_a = ConditionalChannel::identity(inst.pmf().u_size());
        let ch_b = ConditionalChannel::identity(inst.pmf().v_size());
        let t = two_sided_rates(&inst, &ch_a, &ch_b).map_err(|e| e.to_string())?;
        let b = baseline_rates(&inst).map_err(|e| e.to_string())?;
        worst = worst.max((t.r - b.r).abs());
    }
    check(
        worst <= 1e-9,
        format!("max |R1 - R0| = {worst:.2e} over 50 instances"),
    )
}

fn commuting_consistency() -> Outcome {
    let mut rng = common::rng(77);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let inst = common::random_diagonal_instance(&mut rng, false);
        let Ok(fam) = inst.alice_family() else {
            continue;
        };
        let ch_a = ConditionalChannel::uniform(fam).map_err(|e| e.to_string())?;
        let ch_b = ConditionalChannel::identity(inst.pmf().v_size());
        let t = two_sided_terms(&inst, &ch_a, &ch_b).map_err(|e| e.to_string())?;
        let c = common::classical_terms(&inst, &ch_a);
        for (q, cl) in [t.i_wa_rb, t.i_wa_b_given_wb, t.i_wa_wb, t.h_wa_given_wb]
            .iter()
            .zip(c)
        {
            worst = worst.max((q - cl).abs());
        }
        done += 1;
    }
    let mut product_worst: f64 = 0.0;
    for _ in 0..20 {
        let ra = common::random_state(&mut rng, &[2]);
        let rb = common::random_state(&mut rng, &[3]);
        let rho = ra.tensor(&rb).into_op().with_dims(vec![2, 3]).unwrap();
        let rho = DensityOperator::new(rho).unwrap();
        let nu = rng.random_range(2..=3);
        let nv = rng.random_range(2..=3);
        let inst = Instance::new(
            rho,
            common::random_povm(&mut rng, 2, nu),
            common::random_povm(&mut rng, 3, nv),
            common::random_table(&mut rng, nu, nv, 2),
        )
        .map_err(|e| e.to_string())?;
        let t = two_sided_terms(
            &inst,
            &ConditionalChannel::identity(nu),
            &ConditionalChannel::identity(nv),
        )
        .map_err(|e| e.to_string())?;
        product_worst = product_worst
            .max(t.i_wa_b_given_wb.abs())
            .max(t.i_wa_wb.abs());
    }
    check(
        worst <= 1e-8 && product_worst <= 1e-9,
        format!("commuting max diff {worst:.2e}, product max term {product_worst:.2e}"),
    )
}

fn soundness() -> Outcome {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let cfg = ProtocolConfig {
        n: 2,
        delta: 0.5,
        epsilon: 0.1,
        s: 32,
        t: 8,
        m: 4,
        seed: 0,
        theorem: Theorem::Two,
    };
    let p =
        Protocol::new(&inst, &ch, &ch, cfg, SimOptions::default()).map_err(|e| e.to_string())?;
    let completeness = p.completeness_residual().unwrap_or(f64::INFINITY);
    let equivalence = p.equivalence_residual().unwrap_or(f64::INFINITY);
    let (mut worst_gamma, mut worst_total, mut flagged) = (0.0f64, 0.0f64, 0);
    for seed in 0..100 {
        let cb = p.sample_codebook(seed);
        for sub in p.alice_subpovms(&cb).map_err(|e| e.to_string())? {
            if sub.flagged {
                flagged += 1;
            } else {
                worst_gamma = worst_gamma.max(sub.max_eigenvalue);
            }
        }
        let r = p.run_seed(seed).map_err(|e| e.to_string())?;
        worst_total = worst_total.max(r.simulated_total.unwrap_or(f64::INFINITY));
    }
    check(
        worst_gamma <= 1.0 + 1e-9
            && worst_total <= 1.0 + 1e-9
            && completeness <= 1e-10
            && equivalence <= 1e-9,
        format!(
            "max sum Gamma {worst_gamma:.6}, max sum Lambda~ {worst_total:.6}, \
             completeness {completeness:.1e}, equivalence {equivalence:.1e}, {flagged}/400 flagged"
        ),
    )
}

fn exact_distance() -> Outcome {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let cfg = ProtocolConfig {
        n: 1,
        delta: 1.0,
        epsilon: 0.1,
        s: 8,
        t: 8,
        m: 8,
        seed: 7,
        theorem: Theorem::Two,
    };
    let p = Protocol::new(&inst, &ch, &ch, cfg.clone(), SimOptions::default())
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let cb = p.sample_codebook(seed);
        let subs = p.alice_subpovms(&cb).map_err(|e| e.to_string())?;
        let fam = p
            .assemble(&cb, &subs)
            .map_err(|e| e.to_string())?
            .ok_or("no distance")?;
        let d = p
            .faithful_distance(&fam)
            .map_err(|e| e.to_string())?
            .ok_or("no distance")?;
        worst = worst.max((d - common::commuting_tv(&inst, &ch, &cfg, &cb)).abs());
    }
    check(
        worst <= 1e-8,
        format!("max |d - TV| = {worst:.2e} over 20 seeds"),
    )
}

fn trends() -> Outcome {
    // s grows as 2^{n (I + 3 delta)} with I = I(U;RB) = log2 3, and the bin
    // count keeps s/t near 2^{n (I(W;V) + delta/2)}.
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let pmf = inst.pmf();
    let i_wv = mutual_information(&joint_wv(pmf, &ch), 2, 3);
    let i_cover = 3f64.log2();
    let delta = 0.7;
    let opts = SimOptions {
        distance: false,
        ..SimOptions::default()
    };
    let mut medians = Vec::new();
    for n in 1..=3usize {
        let nf = n as f64;
        let s = (8.0 * 2f64.powf((nf - 1.0) * (i_cover + 3.0 * delta))).round() as usize;
        let t = ((s as f64) / 2f64.powf(nf * (i_wv + delta / 2.0)))
            .floor()
            .max(1.0) as usize;
        let cfg = ProtocolConfig {
            n,
            delta,
            epsilon: 0.3,
            s,
            t,
            m: 8,
            seed: 0,
            theorem: Theorem::Two,
        };
        let p = Protocol::new(&inst, &ch, &ch, cfg, opts.clone()).map_err(|e| e.to_string())?;
        let (mut flags, mut errors) = (Vec::new(), Vec::new());
        for seed in 0..20 {
            let r = p.run_seed(seed).map_err(|e| e.to_string())?;
            flags.push(r.flag_rate);
            errors.push(r.decode_error.unwrap_or(1.0));
        }
        medians.push((n, s, t, median(flags), median(errors)));
    }
    let detail = medians
        .iter()
        .map(|(n, s, t, f, e)| format!("n={n} s={s} t={t}: flag {f:.3} err {e:.3}"))
        .collect::<Vec<_>>()
        .join("; ");
    let (first, last) = (medians[0], medians[2]);
    if last.3 > first.3 + 0.1 || last.4 > first.4 + 0.1 {
        return Err(detail);
    }
    Ok(if last.3 <= first.3 && last.4 <= first.4 {
        detail
    } else {
        format!("{detail} (soft: increase within 0.1)")
    })
}

fn gradient_check() -> Outcome {
    let mut rng = common::rng(99);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let pmf = common::random_pmf(&mut rng, 3, 3);
        let nw = 3;
        let q: Vec<f64> = (0..3)
            .flat_map(|_| {
                let r: Vec<f64> = (0..nw).map(|_| rng.random_range(0.1..1.0)).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(move |x| x / s)
            })
            .collect();
        worst = worst.max(common::gradient_relative_error(&pmf, &q, nw));
    }
    check(worst <= 1e-5, format!("max relative error {worst:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("cards baseline", cards_baseline, Duration::from_secs(1)),
        (
            "cards characteristic graph",
            cards_graph,
            Duration::from_secs(1),
        ),
        (
            "cards conditional graph entropy",
            cards_graph_entropy,
            Duration::from_secs(10),
        ),
        (
            "cards two-sided sum rate",
            cards_sum_rate,
            Duration::from_secs(10),
        ),
        (
            "equalization identity",
            equalization,
            Duration::from_secs(60),
        ),
        (
            "commuting-case consistency",
            commuting_consistency,
            Duration::from_secs(60),
        ),
        ("protocol soundness", soundness, Duration::from_secs(300)),
        (
            "exact-distance oracle",
            exact_distance,
            Duration::from_secs(60),
        ),
        ("trend checks", trends, Duration::from_secs(600)),
        (
            "optimizer gradient check",
            gradient_check,
            Duration::from_secs(10),
        ),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (verdict, detail) = match outcome {
            Ok(d) if elapsed <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!(
            "{verdict} {:>2} {name}: {detail} [{:.3}s]",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
