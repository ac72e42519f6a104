mod common;

use dqms_core::graph::IndependentSetFamily;
use dqms_core::protocol::*;
use dqms_core::quantum::Operator;
use dqms_core::rates::ConditionalChannel;
use dqms_core::Instance;

fn cards_channel(q: f64) -> ConditionalChannel {
    let fam = IndependentSetFamily::new(3, vec![vec![0, 1], vec![1, 2]], true).unwrap();
    ConditionalChannel::from_rows(fam, &[vec![1.0, 0.0], vec![q, 1.0 - q], vec![0.0, 1.0]]).unwrap()
}

fn config(n: usize, delta: f64, s: usize, t: usize, m: usize, theorem: Theorem) -> ProtocolConfig {
    ProtocolConfig {
        n,
        delta,
        epsilon: 0.1,
        s,
        t,
        m,
        seed: 7,
        theorem,
    }
}

fn cards_protocol(cfg: ProtocolConfig) -> Protocol {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let ch_b = ConditionalChannel::identity(3);
    Protocol::new(&inst, &ch, &ch_b, cfg, SimOptions::default()).unwrap()
}

#[test]
fn commuting_cards_distance_matches_classical_tv() {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let cfg = config(1, 1.0, 8, 8, 8, Theorem::Two);
    let p = Protocol::new(&inst, &ch, &ch, cfg.clone(), SimOptions::default()).unwrap();
    for seed in 0..20 {
        let cb = p.sample_codebook(seed);
        let subs = p.alice_subpovms(&cb).unwrap();
        let fam = p.assemble(&cb, &subs).unwrap().unwrap();
        let d = p.faithful_distance(&fam).unwrap().unwrap();
        let tv = common::commuting_tv(&inst, &ch, &cfg, &cb);
        assert!((d - tv).abs() < 1e-8, "seed {seed}: {d} vs {tv}");
    }
}

#[test]
fn commuting_random_distance_matches_classical_tv() {
    let mut rng = common::rng(11);
    let mut checked = 0;
    while checked < 10 {
        let inst = common::random_diagonal_instance(&mut rng, false);
        let Ok(fam) = inst.alice_family() else {
            continue;
        };
        let ch = ConditionalChannel::uniform(fam).unwrap();
        let cfg = ProtocolConfig {
            epsilon: 0.3,
            ..config(1, 10.0, 4, 2, 3, Theorem::Two)
        };
        let p = Protocol::new(&inst, &ch, &ch, cfg.clone(), SimOptions::default()).unwrap();
        let cb = p.sample_codebook(checked);
        let subs = p.alice_subpovms(&cb).unwrap();
        let family = p.assemble(&cb, &subs).unwrap().unwrap();
        let d = p.faithful_distance(&family).unwrap().unwrap();
        let tv = common::commuting_tv(&inst, &ch, &cfg, &cb);
        assert!((d - tv).abs() < 1e-8, "{d} vs {tv}");
        checked += 1;
    }
}

#[test]
fn generous_cards_run_is_close() {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let cfg = config(1, 1.0, 8, 8, 8, Theorem::Two);
    let r = simulate(&inst, &ch, &ch, &cfg, &SimOptions::default(), 1).unwrap();
    let d = r.seeds[0].distance.unwrap();
    assert!(d < 0.5, "{d}");
    assert!((0.0..=1.0).contains(&r.seeds[0].coverage));
}

#[test]
fn pruned_normalizer_matches_direct_sum() {
    let p = cards_protocol(config(2, 0.4, 4, 2, 2, Theorem::Two));
    // p(w) = (1/2, 1/2); at n = 2 only the balanced types survive delta = 0.4
    let direct: f64 = (0..4)
        .map(|f| [f / 2, f % 2])
        .filter(|s| {
            let ones = s.iter().filter(|&&x| x == 1).count() as f64 / 2.0;
            (ones - 0.5).abs() <= 0.4
        })
        .map(|_| 0.25)
        .sum();
    assert!((p.normalizer() - direct).abs() < 1e-12);
    assert_eq!(p.typical_codewords(), &[1, 2]);
    let pruned = p.pruned_distribution();
    assert!((pruned.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn full_typical_set_gives_unit_normalizer() {
    let p = cards_protocol(config(1, 1.0, 2, 1, 1, Theorem::Two));
    assert!((p.normalizer() - 1.0).abs() < 1e-12);
    for &w in p.typical_codewords() {
        assert!((p.conditional_normalizer(w).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn soundness_at_blocklength_two() {
    let p = cards_protocol(config(2, 0.5, 6, 3, 4, Theorem::Two));
    assert!(p.completeness_residual().unwrap() < 1e-10);
    assert!(p.equivalence_residual().unwrap() < 1e-9);
    for seed in 0..5 {
        let cb = p.sample_codebook(seed);
        for m in 0..4 {
            let (gammas, info) = p.alice_povm(&cb, m).unwrap();
            let mut sum = Operator::zeros(gammas[0].dims());
            for g in &gammas {
                assert!(g.eigenvalues().unwrap().last().unwrap() > &-1e-10);
                sum.add_scaled(1.0, g).unwrap();
            }
            assert!(sum.max_eigenvalue().unwrap() <= 1.0 + 1e-9, "{info:?}");
            assert!(info.defect >= 0.0);
        }
        let r = p.run_seed(seed).unwrap();
        assert!(r.simulated_total.unwrap() <= 1.0 + 1e-9);
        let d = r.distance.unwrap();
        assert!((0.0..=2.0 + 1e-6).contains(&d));
    }
}

#[test]
fn codebook_invariants() {
    let p = cards_protocol(config(2, 0.5, 5, 3, 4, Theorem::Two));
    let cb = p.sample_codebook(3);
    assert_eq!(cb.counts.values().sum::<usize>(), 20);
    for (row, bins) in cb.words.iter().zip(&cb.bins) {
        assert_eq!(row.len(), 5);
        assert!(row.iter().all(|w| p.typical_codewords().contains(w)));
        assert!(bins.iter().all(|&b| b < 3));
    }
    assert_eq!(cb, p.sample_codebook(3));
}

#[test]
fn single_bin_collects_everything() {
    let p = cards_protocol(config(1, 1.0, 6, 1, 3, Theorem::Two));
    let cb = p.sample_codebook(1);
    assert!(cb.bins.iter().flatten().all(|&b| b == 0));
}

#[test]
fn bins_are_uniform() {
    let t = 8;
    let p = cards_protocol(config(1, 1.0, 64, t, 50, Theorem::Two));
    let cb = p.sample_codebook(5);
    let mut occ = vec![0.0; t];
    for &b in cb.bins.iter().flatten() {
        occ[b] += 1.0;
    }
    let expected = 64.0 * 50.0 / t as f64;
    let chi2: f64 = occ.iter().map(|o| (o - expected).powi(2) / expected).sum();
    // 7 degrees of freedom, p = 0.001 quantile
    assert!(chi2 < 24.32, "{chi2}");
}

#[test]
fn trivial_families_give_zero_and_one() {
    let p = cards_protocol(config(1, 1.0, 4, 2, 2, Theorem::Two));
    let empty = vec![None; 2];
    let d = p.faithful_distance(&empty).unwrap().unwrap();
    assert!((d - 1.0).abs() < 1e-10, "{d}");
}

#[test]
fn distance_invariant_under_relabeling() {
    let base = Instance::cards();
    let relabeled = Instance::new(
        base.rho().clone(),
        base.povm_a().clone(),
        base.povm_b().clone(),
        dqms_core::graph::FunctionTable::from_fn(3, 3, |u, v| if u > v { 9 } else { -4 }),
    )
    .unwrap();
    let ch = cards_channel(0.5);
    let cfg = config(1, 1.0, 6, 3, 4, Theorem::Two);
    let a = simulate(&base, &ch, &ch, &cfg, &SimOptions::default(), 3).unwrap();
    let b = simulate(&relabeled, &ch, &ch, &cfg, &SimOptions::default(), 3).unwrap();
    for (x, y) in a.seeds.iter().zip(&b.seeds) {
        assert!((x.distance.unwrap() - y.distance.unwrap()).abs() < 1e-10);
    }
}

#[test]
fn reports_are_reproducible() {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let cfg = config(2, 0.5, 4, 2, 3, Theorem::Two);
    let a = simulate(&inst, &ch, &ch, &cfg, &SimOptions::default(), 4).unwrap();
    let b = simulate(&inst, &ch, &ch, &cfg, &SimOptions::default(), 4).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let json: serde_json::Value = serde_json::to_value(&a).unwrap();
    assert_eq!(json["config"]["M"], 3);
    assert_eq!(json["config"]["theorem"], 2);
}

#[test]
fn infeasible_delta_reports_minimum() {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let cfg = config(1, 0.01, 2, 1, 1, Theorem::Two);
    match Protocol::new(&inst, &ch, &ch, cfg.clone(), SimOptions::default()) {
        Err(ProtocolError::Infeasible {
            min_delta: Some(d), ..
        }) => {
            let cfg = ProtocolConfig { delta: d, ..cfg };
            Protocol::new(&inst, &ch, &ch, cfg, SimOptions::default()).unwrap();
        }
        other => panic!("expected infeasible, got {:?}", other.err()),
    }
}

#[test]
fn config_is_validated() {
    for bad in [
        config(0, 0.5, 2, 1, 1, Theorem::Two),
        config(1, 0.0, 2, 1, 1, Theorem::Two),
        config(1, 0.5, 2, 3, 1, Theorem::Two),
        config(1, 0.5, 2, 1, 0, Theorem::Two),
    ] {
        assert!(matches!(
            bad.validate(),
            Err(ProtocolError::InvalidConfig(_))
        ));
    }
}

#[test]
fn unambiguous_bins_decode_without_error() {
    // delta large: every codeword is typical with every side symbol it can
    // co-occur with, so decoding fails only when a bin mixes sequences
    let p = cards_protocol(config(1, 1.0, 3, 3, 1, Theorem::Two));
    let mut checked = 0;
    for seed in 0..40 {
        let cb = p.sample_codebook(seed);
        let mut owner = std::collections::HashMap::new();
        let clean = cb.bins[0]
            .iter()
            .zip(&cb.words[0])
            .all(|(b, w)| *owner.entry(*b).or_insert(*w) == *w);
        if !clean {
            continue;
        }
        let subs = p.alice_subpovms(&cb).unwrap();
        let (err, mass) = p.decode_error(&cb, &subs).unwrap();
        assert!(err.abs() < 1e-12 && mass > 0.0, "{err} / {mass}");
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn two_sided_construction_on_generic_instance() {
    let mut rng = common::rng(21);
    let mut checked = 0;
    while checked < 3 {
        let inst = common::random_instance(&mut rng);
        let Ok(fa) = inst.alice_family() else {
            continue;
        };
        let Ok(fb) = inst.bob_family(&fa) else {
            continue;
        };
        let ch_a = ConditionalChannel::uniform(fa).unwrap();
        let ch_b = ConditionalChannel::uniform(fb).unwrap();
        let cfg = config(1, 2.0, 3, 2, 2, Theorem::One);
        let r = match simulate(&inst, &ch_a, &ch_b, &cfg, &SimOptions::default(), 2) {
            Ok(r) => r,
            Err(ProtocolError::Infeasible { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(r.equivalence_residual.unwrap() <= 1e-9);
        for s in &r.seeds {
            let d = s.distance.unwrap();
            assert!((0.0..=2.0 + 1e-6).contains(&d));
            let e = s.decode_error.unwrap();
            assert!((0.0..=1.0).contains(&e));
            assert!(s.simulated_total.unwrap() <= 1.0 + 1e-9);
        }
        checked += 1;
    }
}

#[test]
fn two_sided_cards_runs() {
    let inst = Instance::cards();
    let ch = cards_channel(0.5);
    let id = ConditionalChannel::identity(3);
    let one = config(1, 1.0, 6, 3, 4, Theorem::One);
    let r = simulate(&inst, &ch, &id, &one, &SimOptions::default(), 3).unwrap();
    for s in &r.seeds {
        assert!(s.distance.unwrap() <= 2.0 + 1e-6);
        assert!((0.0..=1.0).contains(&s.decode_error.unwrap()));
    }
}

#[test]
fn weighted_partial_trace_matches_full_trace() {
    let mut rng = common::rng(3);
    let r = common::random_state(&mut rng, &[2, 3]);
    let k = common::random_state(&mut rng, &[2]);
    let out = partial_trace_a_weighted(r.op().matrix(), k.op().matrix(), 3);
    let full = k
        .op()
        .tensor(&Operator::identity(&[3]))
        .try_mul(r.op())
        .unwrap()
        .partial_trace(&[1])
        .unwrap();
    let diff = (&out - full.matrix()).norm();
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn registry_lists_both_schemes() {
    let r = simulation_schemes();
    assert_eq!(r.names(), vec!["theorem1", "theorem2"]);
    assert_eq!(r.get("theorem2").unwrap().theorem(), Theorem::Two);
}
