#![allow(dead_code)]

use dqms_core::graph::{FunctionTable, JointPmf};
use dqms_core::optimizer::{gradient, objective};
use dqms_core::protocol::{Codebook, ProtocolConfig};
use dqms_core::quantum::{DensityOperator, Matrix, Operator, Povm, C64};
use dqms_core::rates::ConditionalChannel;
use dqms_core::Instance;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

pub fn random_state(rng: &mut ChaCha8Rng, dims: &[usize]) -> DensityOperator {
    let d: usize = dims.iter().product();
    let g = gaussian_matrix(rng, d, d);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let op = Operator::new(dims.to_vec(), m / C64::new(tr, 0.0)).unwrap();
    DensityOperator::new(op.hermitize().unwrap()).unwrap()
}

/// Rank-one POVM from a random isometry of C^d into C^k, k >= d.
pub fn random_rank_one_povm(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Povm {
    let g = gaussian_matrix(rng, k, d);
    let q = g.qr().q();
    let elements = (0..k)
        .map(|v| {
            let row = q.row(v).adjoint();
            let m = &row * row.adjoint();
            Operator::new(vec![d], m).unwrap().hermitize().unwrap()
        })
        .collect();
    Povm::new(elements).unwrap()
}

/// Generic full-rank POVM: S^{-1/2} G_k^dag G_k S^{-1/2}.
pub fn random_povm(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Povm {
    let gs: Vec<Matrix> = (0..k).map(|_| gaussian_matrix(rng, d, d)).collect();
    let parts: Vec<Operator> = gs
        .iter()
        .map(|g| Operator::new(vec![d], g.adjoint() * g).unwrap())
        .collect();
    let mut s = Operator::zeros(&[d]);
    for p in &parts {
        s.add_scaled(1.0, p).unwrap();
    }
    let inv = s.pinv_sqrt(1e-14).unwrap();
    let elements = parts
        .iter()
        .map(|p| Operator::sandwich(&inv, p).unwrap().hermitize().unwrap())
        .collect();
    Povm::new(elements).unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, nu: usize, nv: usize, labels: i64) -> FunctionTable {
    let rows: Vec<Vec<i64>> = (0..nu)
        .map(|_| (0..nv).map(|_| rng.random_range(0..labels)).collect())
        .collect();
    FunctionTable::new(&rows).unwrap()
}

/// Random simultaneously diagonal instance: diagonal state, basis-grouping POVMs.
pub fn random_diagonal_instance(rng: &mut ChaCha8Rng, product: bool) -> Instance {
    let da = rng.random_range(2..=3);
    let db = rng.random_range(2..=3);
    let weights = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let diag = if product {
        let (pa, pb) = (weights(rng, da), weights(rng, db));
        pa.iter()
            .flat_map(|a| pb.iter().map(move |b| a * b))
            .collect::<Vec<_>>()
    } else {
        let mut d = weights(rng, da * db);
        // sprinkle zeros to create nontrivial independence structure
        for x in d.iter_mut() {
            if rng.random_bool(0.3) {
                *x = 0.0;
            }
        }
        let s: f64 = d.iter().sum();
        if s == 0.0 {
            weights(rng, da * db)
        } else {
            d.into_iter().map(|x| x / s).collect()
        }
    };
    let rho =
        DensityOperator::new(Operator::from_real_diagonal(&[da, db], &diag).unwrap()).unwrap();
    let nu = rng.random_range(2..=da);
    let nv = rng.random_range(2..=db);
    let povm_a = grouping_povm(rng, da, nu);
    let povm_b = grouping_povm(rng, db, nv);
    let g = random_table(rng, nu, nv, 2);
    Instance::new(rho, povm_a, povm_b, g).unwrap()
}

/// Projective measurement grouping basis vectors into `k` nonempty groups.
pub fn grouping_povm(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Povm {
    let mut assign: Vec<usize> = (0..d).map(|i| i % k).collect();
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        assign.swap(i, j);
    }
    let elements = (0..k)
        .map(|x| {
            let diag: Vec<f64> = assign.iter().map(|&a| (a == x) as u8 as f64).collect();
            Operator::from_real_diagonal(&[d], &diag).unwrap()
        })
        .collect();
    Povm::new(elements).unwrap()
}

/// Random generic instance with rank-one measurements on B.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let da = rng.random_range(2..=3);
    let db = rng.random_range(2..=3);
    let nu = rng.random_range(2..=4);
    let nv = rng.random_range(db..=4);
    let rho = random_state(rng, &[da, db]);
    let povm_a = random_povm(rng, da, nu);
    let povm_b = random_rank_one_povm(rng, db, nv);
    let g = random_table(rng, nu, nv, 2);
    Instance::new(rho, povm_a, povm_b, g).unwrap()
}

pub fn random_pmf(rng: &mut ChaCha8Rng, nu: usize, nv: usize) -> JointPmf {
    let mut p: Vec<f64> = (0..nu * nv)
        .map(|_| {
            if rng.random_bool(0.25) {
                0.0
            } else {
                rng.random_range(0.05..1.0)
            }
        })
        .collect();
    if p.iter().all(|&x| x == 0.0) {
        p[0] = 1.0;
    }
    let s: f64 = p.iter().sum();
    JointPmf::new(nu, nv, p.into_iter().map(|x| x / s).collect()).unwrap()
}

pub fn gradient_relative_error(pmf: &JointPmf, q: &[f64], nw: usize) -> f64 {
    let g = gradient(pmf, q, nw);
    let hstep = 1e-6;
    let mut num = vec![0.0; q.len()];
    for i in 0..q.len() {
        let mut a = q.to_vec();
        let mut b = q.to_vec();
        a[i] += hstep;
        b[i] -= hstep;
        num[i] = (objective(pmf, &a, nw) - objective(pmf, &b, nw)) / (2.0 * hstep);
    }
    let diff: f64 = g
        .iter()
        .zip(&num)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = num.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// Diagonal entries of a diagonal operator.
pub fn diag(op: &Operator) -> Vec<f64> {
    (0..op.dim()).map(|i| op.matrix()[(i, i)].re).collect()
}

/// Classical simulation of a commuting instance at n = 1 with a large delta,
/// where every projector reduces to a support projector. Alice's outcome
/// distribution is p(j|a) = Q(u(a), w_j) / ((1 + eps) p(w_j) s).
pub fn commuting_tv(
    inst: &Instance,
    ch: &ConditionalChannel,
    cfg: &ProtocolConfig,
    cb: &Codebook,
) -> f64 {
    let (da, db) = (inst.dim_a(), inst.dim_b());
    let pmf = inst.pmf();
    let group = |povm: &dqms_core::quantum::Povm, d: usize| -> Vec<usize> {
        (0..d)
            .map(|i| {
                (0..povm.len())
                    .find(|&x| povm.element(x).matrix()[(i, i)].re > 0.5)
                    .unwrap()
            })
            .collect()
    };
    let ua = group(inst.povm_a(), da);
    let vb = group(inst.povm_b(), db);
    let rho = diag(inst.rho().op());
    let p_w = ch.output_distribution(&pmf.marginal_u());
    let lift = |w: usize, v: usize| -> usize {
        ch.family()
            .set(w)
            .iter()
            .find(|&&u| pmf.get(u, v) > 0.0)
            .map(|&u| inst.g().get(u, v))
            .unwrap_or(0)
    };
    let zc = inst.g().z_count();
    let s = cfg.s as f64;
    let mut sim = vec![0.0; zc * da * db];
    for m in 0..cfg.m {
        let weight = |a: usize, w: usize| ch.get(ua[a], w) / ((1.0 + cfg.epsilon) * p_w[w] * s);
        let flagged =
            (0..da).any(|a| cb.words[m].iter().map(|&w| weight(a, w)).sum::<f64>() > 1.0 + 1e-9);
        for a in 0..da {
            for b in 0..db {
                if flagged {
                    let z = lift(cb.words[m][0], vb[b]);
                    sim[(z * da + a) * db + b] += 1.0 / cfg.m as f64;
                } else {
                    for &w in &cb.words[m] {
                        let z = lift(w, vb[b]);
                        sim[(z * da + a) * db + b] += weight(a, w) / cfg.m as f64;
                    }
                }
            }
        }
    }
    let mut tv = 0.0;
    for z in 0..zc {
        for a in 0..da {
            for b in 0..db {
                let target = (inst.g().get(ua[a], vb[b]) == z) as u8 as f64;
                tv += (rho[a * db + b] * (sim[(z * da + a) * db + b] - target)).abs();
            }
        }
    }
    tv
}

/// Two-sided information terms of a diagonal instance with basis-grouping
/// measurements and Bob's identity channel, computed from the underlying
/// basis distribution p(a, b): [I(W;RB), I(W;B|V), I(W;V), H(W|V)].
pub fn classical_terms(inst: &Instance, ch: &ConditionalChannel) -> [f64; 4] {
    use dqms_core::rates::{conditional_entropy, joint_uw, mutual_information};
    let (da, db) = (inst.dim_a(), inst.dim_b());
    let group = |povm: &Povm, d: usize| -> Vec<usize> {
        (0..d)
            .map(|i| {
                (0..povm.len())
                    .find(|&x| povm.element(x).matrix()[(i, i)].re > 0.5)
                    .unwrap()
            })
            .collect()
    };
    let ua = group(inst.povm_a(), da);
    let vb = group(inst.povm_b(), db);
    let rho = diag(inst.rho().op());
    let pmf = inst.pmf();
    let (nu, nv, nw) = (pmf.u_size(), pmf.v_size(), ch.outputs());
    let mut wb = vec![0.0; nw * db];
    let mut wv = vec![0.0; nw * nv];
    for a in 0..da {
        for b in 0..db {
            for w in 0..nw {
                let p = rho[a * db + b] * ch.get(ua[a], w);
                wb[w * db + b] += p;
                wv[w * nv + vb[b]] += p;
            }
        }
    }
    let h_wv = conditional_entropy(&wv, nw, nv);
    [
        mutual_information(&joint_uw(pmf, ch), nu, nw),
        h_wv - conditional_entropy(&wb, nw, db),
        mutual_information(&wv, nw, nv),
        h_wv,
    ]
}
