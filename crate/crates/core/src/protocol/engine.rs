use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::typical::{
    conditional_typical_set, jointly_typical, product_typical_projector, sequence, sequence_count,
    type_deviations, typical_set, LetterSpectrum,
};
use super::{ProtocolConfig, ProtocolError, Theorem};
use crate::graph::{build_tilde_g, LiftedFunction};
use crate::instance::Instance;
use crate::quantum::{Matrix, Operator, Povm, C64};
use crate::rates::{joint_uw, joint_wv, lift_povm, ConditionalChannel};

/// Largest A^n dimension the constructions will build.
pub const MAX_PROTOCOL_DIM: usize = 4096;

const SUBPOVM_TOL: f64 = 1e-9;
const EQUIVALENCE_TOL: f64 = 1e-9;
const CODEWORD_STREAM: u64 = 0x5eed_c0de;
const BIN_STREAM: u64 = 0xb1b1_0000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimOptions {
    /// Compute the exact faithful-simulation distance.
    pub distance: bool,
    /// Skip the distance when the joint A^n B^n dimension exceeds this.
    pub distance_dim_limit: usize,
    /// Evaluate Bob's decoder.
    pub decode: bool,
    /// Eigenvalue threshold of the pseudo-inverse square root of omega_A.
    pub pinv_threshold: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            distance: true,
            distance_dim_limit: 1024,
            decode: true,
            pinv_threshold: 1e-12,
        }
    }
}

/// Sampled codewords w^n(j, m), stored as flat sequence indices, with their bins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Codebook {
    pub seed: u64,
    pub words: Vec<Vec<usize>>,
    pub bins: Vec<Vec<usize>>,
    /// c(w^n): number of (j, m) pairs carrying each sequence.
    pub counts: BTreeMap<usize, usize>,
}

/// Summary of the operators Alice measures for one value of m.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AliceSubPovm {
    pub max_eigenvalue: f64,
    /// Largest eigenvalue of sum_j Gamma_j - I, clipped at zero.
    pub defect: f64,
    /// Replaced by the trivial measurement {I}.
    pub flagged: bool,
}

/// Tr_A[(K (x) I) R] for R on A (x) B given as a flat matrix, K on A.
pub fn partial_trace_a_weighted(r: &Matrix, k: &Matrix, db: usize) -> Matrix {
    let da = k.nrows();
    let mut out = Matrix::zeros(db, db);
    for a in 0..da {
        for a2 in 0..da {
            let c = k[(a, a2)];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..db {
                for b2 in 0..db {
                    out[(b, b2)] += c * r[(a2 * db + b, a * db + b2)];
                }
            }
        }
    }
    out
}

struct QuantumDecoder {
    typical_wb: Vec<usize>,
    roots_wb: HashMap<usize, Operator>,
    pre_projector: HashMap<usize, Operator>,
    /// (codeword position, w_B^n) -> conditional typical projector on B^n.
    pair_projector: HashMap<(usize, usize), Operator>,
    /// Tr_A[(K_w (x) I) rho^{(x)n}] per codeword position.
    tau: Vec<Operator>,
    rho_b_n: Operator,
}

struct DistanceData {
    sqrt_omega: Operator,
    /// sqrt(omega) Lambda_{z^n} sqrt(omega) for every z^n.
    target: Vec<Operator>,
    lifted_b: Vec<Operator>,
}

pub struct Protocol {
    cfg: ProtocolConfig,
    opts: SimOptions,
    n: usize,
    dims_a: Vec<usize>,
    nw: usize,
    nb: usize,
    z_count: usize,
    /// Typical codeword sequences (flat) and the pruned cumulative weights.
    typical_w: Vec<usize>,
    position: HashMap<usize, usize>,
    cumulative: Vec<f64>,
    s_norm: f64,
    s_cond: Vec<f64>,
    kernels: Vec<Operator>,
    omega_trace: f64,
    cutoff_rank: usize,
    tilde: LiftedFunction,
    /// Tr[K_w sigma_{w_B^n}] per (codeword position, w_B^n).
    mass: Vec<Vec<f64>>,
    p_bob_n: Vec<f64>,
    typical_pair: Vec<Vec<bool>>,
    pmf_entries: Vec<f64>,
    g_table: Vec<usize>,
    nu: usize,
    nv: usize,
    distance: Option<DistanceData>,
    equivalence_residual: Option<f64>,
    completeness_residual: Option<f64>,
    quantum: Option<QuantumDecoder>,
}

fn seq_product(seq: &[usize], letters: &[Operator]) -> Operator {
    Operator::tensor_all(seq.iter().map(|&x| &letters[x])).expect("n >= 1")
}

fn digits_to_flat(digits: impl Iterator<Item = usize>, base: usize) -> usize {
    digits.fold(0, |acc, d| acc * base + d)
}

impl Protocol {
    pub fn new(
        inst: &Instance,
        ch_a: &ConditionalChannel,
        ch_b: &ConditionalChannel,
        cfg: ProtocolConfig,
        opts: SimOptions,
    ) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let n = cfg.n;
        let (da, db) = (inst.dim_a(), inst.dim_b());
        let dim_a_n = da.checked_pow(n as u32).unwrap_or(usize::MAX);
        if dim_a_n > MAX_PROTOCOL_DIM {
            return Err(ProtocolError::TooLarge {
                dim: dim_a_n,
                limit: MAX_PROTOCOL_DIM,
            });
        }
        let pmf = inst.pmf();
        let g = inst.g();
        let (nu, nv) = (pmf.u_size(), pmf.v_size());
        if ch_a.alphabet() != nu {
            return Err(ProtocolError::InvalidConfig(
                "Alice's channel does not act on her outcomes".into(),
            ));
        }
        ch_a.family().validate_alice(pmf, g)?;
        let ch_b = match cfg.theorem {
            Theorem::Two => ConditionalChannel::identity(nv),
            Theorem::One => {
                if ch_b.alphabet() != nv {
                    return Err(ProtocolError::InvalidConfig(
                        "Bob's channel does not act on his outcomes".into(),
                    ));
                }
                ch_b.family().validate_bob(ch_a.family(), pmf, g)?;
                ch_b.clone()
            }
        };
        let tilde = build_tilde_g(ch_a.family(), ch_b.family(), pmf, g)?;
        let lam_a = lift_povm(inst.povm_a(), ch_a)?;
        let lam_b = lift_povm(inst.povm_b(), &ch_b)?;
        let (nw, nb) = (ch_a.outputs(), ch_b.outputs());
        let p_u = pmf.marginal_u();
        let p_w = ch_a.output_distribution(&p_u);
        let delta = cfg.delta;

        // pruned codeword distribution
        let typical_w = typical_set(&p_w, n, delta);
        let seq_prob = |seq: &[usize], p: &[f64]| seq.iter().map(|&x| p[x]).product::<f64>();
        let pw_n: Vec<f64> = typical_w
            .iter()
            .map(|&f| seq_prob(&sequence(f, nw, n), &p_w))
            .collect();
        let s_norm: f64 = pw_n.iter().sum();

        // p(w, u) row-major over w
        let uw = joint_uw(pmf, ch_a);
        let mut pwu = vec![0.0; nw * nu];
        for u in 0..nu {
            for w in 0..nw {
                pwu[w * nu + u] = uw[u * nw + w];
            }
        }
        let mut cond: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut s_cond = vec![1.0; typical_w.len()];
        if cfg.theorem == Theorem::Two {
            for (pos, &f) in typical_w.iter().enumerate() {
                let ws = sequence(f, nw, n);
                let list: Vec<(usize, f64)> = conditional_typical_set(&ws, &pwu, nu, delta)
                    .into_iter()
                    .map(|uf| {
                        let us = sequence(uf, nu, n);
                        let p: f64 = ws
                            .iter()
                            .zip(&us)
                            .map(|(&w, &u)| pwu[w * nu + u] / p_w[w])
                            .product();
                        (uf, p)
                    })
                    .collect();
                s_cond[pos] = list.iter().map(|x| x.1).sum();
                cond.push(list);
            }
        }
        let usable: f64 = pw_n.iter().zip(&s_cond).map(|(a, b)| a * b).sum();
        if typical_w.is_empty() || s_norm <= 0.0 || usable <= 0.0 {
            return Err(ProtocolError::Infeasible {
                delta,
                min_delta: min_feasible_delta(&p_w, &pwu, nu, n, cfg.theorem),
            });
        }
        let mut cumulative = Vec::with_capacity(pw_n.len());
        let mut acc = 0.0;
        for p in &pw_n {
            acc += p / s_norm;
            cumulative.push(acc);
        }

        // letter states rho_hat_x on A
        let rho_a = inst.rho_a();
        let sqrt_rho_a = rho_a.op().sqrt_psd()?;
        let (xi_povm, nx): (&Povm, usize) = match cfg.theorem {
            Theorem::Two => (inst.povm_a(), nu),
            Theorem::One => (&lam_a, nw),
        };
        let mut rho_hat: Vec<Option<Operator>> = Vec::with_capacity(nx);
        for x in 0..nx {
            let post = Operator::sandwich(&sqrt_rho_a, xi_povm.element(x))?.hermitize()?;
            let p = post.real_trace();
            rho_hat.push((p > 1e-14).then(|| post.scale(1.0 / p)));
        }
        let spectra: Vec<Option<LetterSpectrum>> = rho_hat
            .iter()
            .map(|r| r.as_ref().map(LetterSpectrum::new))
            .collect();
        let spectrum_a = LetterSpectrum::new(rho_a.op());
        let pi_a = product_typical_projector(&vec![Some(&spectrum_a); n], delta);

        let xi_prime = |xs: &[usize]| -> Result<Operator, ProtocolError> {
            let letters: Vec<Option<&LetterSpectrum>> =
                xs.iter().map(|&x| spectra[x].as_ref()).collect();
            if letters.iter().any(Option::is_none) {
                return Ok(Operator::zeros(&vec![da; n]));
            }
            let pi_x = product_typical_projector(&letters, delta);
            let states: Vec<&Operator> = xs.iter().map(|&x| rho_hat[x].as_ref().unwrap()).collect();
            let hat = Operator::tensor_all(states.into_iter()).expect("n >= 1");
            let a = pi_a.try_mul(&pi_x)?;
            Ok(Operator::sandwich(&a, &hat)?.hermitize()?)
        };

        // xi' for every letter sequence that enters the average
        let mut needed: Vec<usize> = match cfg.theorem {
            Theorem::Two => cond.iter().flatten().map(|x| x.0).collect(),
            Theorem::One => typical_w.clone(),
        };
        needed.sort_unstable();
        needed.dedup();
        let mut xi: HashMap<usize, Operator> = HashMap::new();
        for &f in &needed {
            xi.insert(f, xi_prime(&sequence(f, nx, n))?);
        }
        let mut average = Operator::zeros(&vec![da; n]);
        for (pos, &f) in typical_w.iter().enumerate() {
            let pt = pw_n[pos] / s_norm;
            match cfg.theorem {
                Theorem::Two => {
                    if s_cond[pos] <= 0.0 {
                        continue;
                    }
                    for &(uf, p) in &cond[pos] {
                        average.add_scaled(pt * p / s_cond[pos], &xi[&uf])?;
                    }
                }
                Theorem::One => average.add_scaled(pt, &xi[&f])?,
            }
        }
        let threshold = cfg.epsilon * 2f64.powf(-(n as f64) * (spectrum_a.entropy + delta));
        let cutoff = average.spectral_projector(|l| l > threshold)?;
        let omega = Operator::sandwich(&cutoff, &average)?;
        let omega_trace = omega.real_trace();
        let cutoff_rank = cutoff.real_trace().round() as usize;
        for op in xi.values_mut() {
            *op = Operator::sandwich(&cutoff, op)?.hermitize()?;
        }

        let omega_a = rho_a.tensor_power(n);
        let inv = omega_a.op().pinv_sqrt(opts.pinv_threshold)?;
        let mut kernels = Vec::with_capacity(typical_w.len());
        for (pos, &f) in typical_w.iter().enumerate() {
            let inner = match cfg.theorem {
                Theorem::Two => {
                    let mut acc = Operator::zeros(&vec![da; n]);
                    for &(uf, p) in &cond[pos] {
                        acc.add_scaled(p, &xi[&uf])?;
                    }
                    acc
                }
                Theorem::One => xi[&f].clone(),
            };
            let k = Operator::sandwich(&inv, &inner)?.scale(s_norm / (1.0 + cfg.epsilon));
            kernels.push(k.hermitize()?);
        }
        let position: HashMap<usize, usize> =
            typical_w.iter().enumerate().map(|(p, &f)| (f, p)).collect();

        // Bob's letters: sigma_b = Tr_B[(I (x) Lambda_b) rho]
        let rho = inst.rho().op();
        let mut sigma_letters = Vec::with_capacity(nb);
        for b in 0..nb {
            let k = Operator::identity(&[da]).tensor(lam_b.element(b));
            sigma_letters.push(k.try_mul(rho)?.partial_trace(&[0])?.hermitize()?);
        }
        let bob_count = sequence_count(nb, n);
        let mut mass = vec![vec![0.0; bob_count]; typical_w.len()];
        let mut p_bob_n = vec![0.0; bob_count];
        for (bf, p_bob) in p_bob_n.iter_mut().enumerate() {
            let sigma = seq_product(&sequence(bf, nb, n), &sigma_letters);
            *p_bob = sigma.real_trace().max(0.0);
            for (pos, k) in kernels.iter().enumerate() {
                mass[pos][bf] = k.trace_product(&sigma)?.re.max(0.0);
            }
        }

        // joint typicality of (codeword, Bob letter) pairs
        let pxb: Vec<f64> = match cfg.theorem {
            Theorem::Two => joint_wv(pmf, ch_a),
            Theorem::One => {
                let mut out = vec![0.0; nw * nb];
                for u in 0..nu {
                    for v in 0..nv {
                        let p = pmf.get(u, v);
                        if p == 0.0 {
                            continue;
                        }
                        for wa in 0..nw {
                            for wb in 0..nb {
                                out[wa * nb + wb] += p * ch_a.get(u, wa) * ch_b.get(v, wb);
                            }
                        }
                    }
                }
                out
            }
        };
        let typical_pair: Vec<Vec<bool>> = typical_w
            .iter()
            .map(|&f| {
                let ws = sequence(f, nw, n);
                (0..bob_count)
                    .map(|bf| jointly_typical(&ws, &sequence(bf, nb, n), &pxb, nb, delta))
                    .collect()
            })
            .collect();

        let g_table: Vec<usize> = (0..nu * nv).map(|i| g.get(i / nv, i % nv)).collect();
        let mut me = Self {
            cfg,
            opts,
            n,
            dims_a: vec![da; n],
            nw,
            nb,
            z_count: g.z_count(),
            typical_w,
            position,
            cumulative,
            s_norm,
            s_cond,
            kernels,
            omega_trace,
            cutoff_rank,
            tilde,
            mass,
            p_bob_n,
            typical_pair,
            pmf_entries: pmf.entries().to_vec(),
            g_table,
            nu,
            nv,
            distance: None,
            equivalence_residual: None,
            completeness_residual: None,
            quantum: None,
        };

        let joint_dim = (da * db).checked_pow(n as u32).unwrap_or(usize::MAX);
        let need_joint = (me.opts.distance && joint_dim <= me.opts.distance_dim_limit)
            || (me.opts.decode && me.cfg.theorem == Theorem::One);
        if !need_joint {
            return Ok(me);
        }
        if joint_dim > MAX_PROTOCOL_DIM {
            return Err(ProtocolError::TooLarge {
                dim: joint_dim,
                limit: MAX_PROTOCOL_DIM,
            });
        }
        let order: Vec<usize> = (0..n)
            .map(|i| 2 * i)
            .chain((0..n).map(|i| 2 * i + 1))
            .collect();
        let rho_n = inst.rho().op().tensor_power(n).permute(&order)?;

        if me.opts.distance && joint_dim <= me.opts.distance_dim_limit {
            me.build_distance(inst, &lam_a, &lam_b, &rho_n)?;
        }
        if me.opts.decode && me.cfg.theorem == Theorem::One {
            me.build_quantum_decoder(inst, &lam_a, &lam_b, &rho_n, &pxb)?;
        }
        Ok(me)
    }

    fn build_distance(
        &mut self,
        inst: &Instance,
        lam_a: &Povm,
        lam_b: &Povm,
        rho_n: &Operator,
    ) -> Result<(), ProtocolError> {
        let n = self.n;
        let (nu, nv, zc) = (self.nu, self.nv, self.z_count);
        let z_total = sequence_count(zc, n);
        let sqrt_omega = rho_n.sqrt_psd()?;
        let povm_a = inst.povm_a().elements();
        let povm_b = inst.povm_b().elements();
        let joint_dims: Vec<usize> = self
            .dims_a
            .iter()
            .copied()
            .chain(std::iter::repeat(inst.dim_b()).take(n))
            .collect();

        let mut lambda = vec![Operator::zeros(&joint_dims); z_total];
        for vf in 0..sequence_count(nv, n) {
            let vs = sequence(vf, nv, n);
            let lb = seq_product(&vs, povm_b);
            let mut grouped: BTreeMap<usize, Operator> = BTreeMap::new();
            for uf in 0..sequence_count(nu, n) {
                let us = sequence(uf, nu, n);
                let z = digits_to_flat(
                    us.iter().zip(&vs).map(|(&u, &v)| self.g_table[u * nv + v]),
                    zc,
                );
                let la = seq_product(&us, povm_a);
                grouped
                    .entry(z)
                    .and_modify(|acc| acc.add_scaled(1.0, &la).expect("dims"))
                    .or_insert(la);
            }
            for (z, a) in grouped {
                lambda[z].add_scaled(1.0, &a.tensor(&lb))?;
            }
        }
        let mut total = Operator::zeros(&joint_dims);
        for l in &lambda {
            total.add_scaled(1.0, l)?;
        }
        self.completeness_residual = Some(total.max_abs_diff(&Operator::identity(&joint_dims)));

        // alternative built from the lifted measurements
        let lifted_b: Vec<Operator> = lam_b.elements().to_vec();
        let mut alt = vec![Operator::zeros(&joint_dims); z_total];
        for bf in 0..sequence_count(self.nb, n) {
            let bs = sequence(bf, self.nb, n);
            let lb = seq_product(&bs, &lifted_b);
            let mut grouped: BTreeMap<usize, Operator> = BTreeMap::new();
            for af in 0..sequence_count(self.nw, n) {
                let as_ = sequence(af, self.nw, n);
                let z = self.tilde_flat(&as_, &bs);
                let la = seq_product(&as_, lam_a.elements());
                grouped
                    .entry(z)
                    .and_modify(|acc| acc.add_scaled(1.0, &la).expect("dims"))
                    .or_insert(la);
            }
            for (z, a) in grouped {
                alt[z].add_scaled(1.0, &a.tensor(&lb))?;
            }
        }
        let mut target = Vec::with_capacity(z_total);
        let mut residual = 0.0;
        for (l, a) in lambda.iter().zip(&alt) {
            let t = Operator::sandwich(&sqrt_omega, l)?;
            let ta = Operator::sandwich(&sqrt_omega, a)?;
            residual += ta.try_sub(&t)?.hermitize_loose().trace_norm();
            target.push(t);
        }
        self.equivalence_residual = Some(residual);
        if residual > EQUIVALENCE_TOL {
            return Err(ProtocolError::Equivalence { residual });
        }
        self.distance = Some(DistanceData {
            sqrt_omega,
            target,
            lifted_b,
        });
        Ok(())
    }

    fn build_quantum_decoder(
        &mut self,
        inst: &Instance,
        lam_a: &Povm,
        lam_b: &Povm,
        rho_n: &Operator,
        pxb: &[f64],
    ) -> Result<(), ProtocolError> {
        let n = self.n;
        let (da, db) = (inst.dim_a(), inst.dim_b());
        let (nw, nb) = (self.nw, self.nb);
        let rho = inst.rho().op();
        let rho_b = inst.rho_b();
        let roots = lam_b.sqrt_elements()?;
        let p_b: Vec<f64> = (0..nb)
            .map(|b| (0..nw).map(|a| pxb[a * nb + b]).sum())
            .collect();

        let mut pre_letters: Vec<Option<LetterSpectrum>> = Vec::with_capacity(nb);
        for (b, r) in roots.iter().enumerate() {
            let post = Operator::sandwich(r, rho_b.op())?.hermitize()?;
            pre_letters.push(
                (p_b[b] > 1e-14).then(|| LetterSpectrum::new(&post.scale(1.0 / post.real_trace()))),
            );
        }
        let mut pair_letters: Vec<Option<LetterSpectrum>> = Vec::with_capacity(nw * nb);
        for a in 0..nw {
            let ka = lam_a.element(a).tensor(&Operator::identity(&[db]));
            let reduced = ka.try_mul(rho)?.partial_trace(&[1])?.hermitize_loose();
            for (b, r) in roots.iter().enumerate() {
                let post = Operator::sandwich(r, &reduced)?.hermitize_loose();
                let p = post.real_trace();
                pair_letters.push(
                    (pxb[a * nb + b] > 1e-14 && p > 1e-14)
                        .then(|| LetterSpectrum::new(&post.scale(1.0 / p))),
                );
            }
        }

        let typical_wb = typical_set(&p_b, n, self.cfg.delta);
        let mut roots_wb = HashMap::new();
        let mut pre_projector = HashMap::new();
        for &bf in &typical_wb {
            let bs = sequence(bf, nb, n);
            roots_wb.insert(bf, seq_product(&bs, &roots));
            let letters: Vec<Option<&LetterSpectrum>> =
                bs.iter().map(|&b| pre_letters[b].as_ref()).collect();
            pre_projector.insert(bf, product_typical_projector(&letters, self.cfg.delta));
        }
        let mut pair_projector = HashMap::new();
        for (pos, &af) in self.typical_w.iter().enumerate() {
            let as_ = sequence(af, nw, n);
            for &bf in &typical_wb {
                if !self.typical_pair[pos][bf] {
                    continue;
                }
                let bs = sequence(bf, nb, n);
                let letters: Vec<Option<&LetterSpectrum>> = as_
                    .iter()
                    .zip(&bs)
                    .map(|(&a, &b)| pair_letters[a * nb + b].as_ref())
                    .collect();
                pair_projector.insert(
                    (pos, bf),
                    product_typical_projector(&letters, self.cfg.delta),
                );
            }
        }
        let db_n = db.pow(n as u32);
        let dims_b = vec![db; n];
        let _ = da;
        let mut tau = Vec::with_capacity(self.kernels.len());
        for k in &self.kernels {
            let m = partial_trace_a_weighted(rho_n.matrix(), k.matrix(), db_n);
            tau.push(Operator::new(dims_b.clone(), m)?.hermitize_loose());
        }
        self.quantum = Some(QuantumDecoder {
            typical_wb,
            roots_wb,
            pre_projector,
            pair_projector,
            tau,
            rho_b_n: rho_b.tensor_power(n).into_op(),
        });
        Ok(())
    }

    fn tilde_flat(&self, wa: &[usize], wb: &[usize]) -> usize {
        digits_to_flat(
            wa.iter().zip(wb).map(|(&a, &b)| self.tilde.eval(a, b)),
            self.z_count,
        )
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn options(&self) -> &SimOptions {
        &self.opts
    }

    /// Pruning normalizer S.
    pub fn normalizer(&self) -> f64 {
        self.s_norm
    }

    /// S(w^n) for a typical codeword sequence (1 when not conditioning on u^n).
    pub fn conditional_normalizer(&self, w_flat: usize) -> Option<f64> {
        self.position.get(&w_flat).map(|&p| self.s_cond[p])
    }

    pub fn typical_codewords(&self) -> &[usize] {
        &self.typical_w
    }

    /// Pruned distribution over typical codeword sequences.
    pub fn pruned_distribution(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn omega_trace(&self) -> f64 {
        self.omega_trace
    }

    pub fn cutoff_rank(&self) -> usize {
        self.cutoff_rank
    }

    pub fn equivalence_residual(&self) -> Option<f64> {
        self.equivalence_residual
    }

    pub fn completeness_residual(&self) -> Option<f64> {
        self.completeness_residual
    }

    /// Gamma for a codeword, before division by s.
    pub fn kernel(&self, w_flat: usize) -> Option<&Operator> {
        self.position.get(&w_flat).map(|&p| &self.kernels[p])
    }

    pub fn z_count(&self) -> usize {
        self.z_count
    }

    pub fn lifted_function(&self) -> &LiftedFunction {
        &self.tilde
    }

    pub fn sample_codebook(&self, seed: u64) -> Codebook {
        let (s, m_total, t) = (self.cfg.s, self.cfg.m, self.cfg.t);
        let mut words = Vec::with_capacity(m_total);
        let mut bins = Vec::with_capacity(m_total);
        let mut counts = BTreeMap::new();
        for m in 0..m_total {
            let mut row = Vec::with_capacity(s);
            let mut brow = Vec::with_capacity(s);
            for j in 0..s {
                let stream = ((m as u64) << 32) | j as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ CODEWORD_STREAM);
                rng.set_stream(stream);
                let r: f64 = rng.random();
                let pos = self
                    .cumulative
                    .partition_point(|&c| c <= r)
                    .min(self.cumulative.len() - 1);
                let f = self.typical_w[pos];
                row.push(f);
                *counts.entry(f).or_insert(0) += 1;
                let mut brng = ChaCha8Rng::seed_from_u64(seed ^ BIN_STREAM);
                brng.set_stream(stream);
                brow.push(brng.random_range(0..t));
            }
            words.push(row);
            bins.push(brow);
        }
        Codebook {
            seed,
            words,
            bins,
            counts,
        }
    }

    /// Alice's operators Gamma_j^(m) for one m, after flagging.
    pub fn alice_povm(
        &self,
        cb: &Codebook,
        m: usize,
    ) -> Result<(Vec<Operator>, AliceSubPovm), ProtocolError> {
        let info = self.subpovm_info(cb, m)?;
        let elements = if info.flagged {
            let mut e = vec![Operator::zeros(&self.dims_a); self.cfg.s];
            e[0] = Operator::identity(&self.dims_a);
            e
        } else {
            cb.words[m]
                .iter()
                .map(|&f| self.kernels[self.position[&f]].scale(1.0 / self.cfg.s as f64))
                .collect()
        };
        Ok((elements, info))
    }

    fn subpovm_info(&self, cb: &Codebook, m: usize) -> Result<AliceSubPovm, ProtocolError> {
        let mut sum = Operator::zeros(&self.dims_a);
        for &f in &cb.words[m] {
            sum.add_scaled(1.0 / self.cfg.s as f64, &self.kernels[self.position[&f]])?;
        }
        let max_eigenvalue = sum.max_eigenvalue()?;
        Ok(AliceSubPovm {
            max_eigenvalue,
            defect: (max_eigenvalue - 1.0).max(0.0),
            flagged: max_eigenvalue > 1.0 + SUBPOVM_TOL,
        })
    }

    pub fn alice_subpovms(&self, cb: &Codebook) -> Result<Vec<AliceSubPovm>, ProtocolError> {
        (0..self.cfg.m).map(|m| self.subpovm_info(cb, m)).collect()
    }

    /// Flat labels z^n reachable from some codeword and some Bob sequence.
    pub fn covered_labels(&self, cb: &Codebook) -> Vec<bool> {
        let n = self.n;
        let mut covered = vec![false; sequence_count(self.z_count, n)];
        for &f in cb.counts.keys() {
            let ws = sequence(f, self.nw, n);
            for bf in 0..sequence_count(self.nb, n) {
                covered[self.tilde_flat(&ws, &sequence(bf, self.nb, n))] = true;
            }
        }
        covered
    }

    /// P(S_z): probability that the true outcome label is reachable.
    pub fn coverage(&self, cb: &Codebook) -> f64 {
        let covered = self.covered_labels(cb);
        let n = self.n;
        let mut total = 0.0;
        for uf in 0..sequence_count(self.nu, n) {
            let us = sequence(uf, self.nu, n);
            for vf in 0..sequence_count(self.nv, n) {
                let vs = sequence(vf, self.nv, n);
                let p: f64 = us
                    .iter()
                    .zip(&vs)
                    .map(|(&u, &v)| self.pmf_entries[u * self.nv + v])
                    .product();
                if p == 0.0 {
                    continue;
                }
                let z = digits_to_flat(
                    us.iter()
                        .zip(&vs)
                        .map(|(&u, &v)| self.g_table[u * self.nv + v]),
                    self.z_count,
                );
                if covered[z] {
                    total += p;
                }
            }
        }
        total.min(1.0)
    }

    /// The simulated family, indexed by flat z^n; labels outside S_z are `None`.
    pub fn assemble(
        &self,
        cb: &Codebook,
        subs: &[AliceSubPovm],
    ) -> Result<Option<Vec<Option<Operator>>>, ProtocolError> {
        let Some(dist) = &self.distance else {
            return Ok(None);
        };
        let n = self.n;
        let s = self.cfg.s as f64;
        let big_m = self.cfg.m as f64;
        let mut kernel_weight = vec![0.0; self.typical_w.len()];
        let mut identity_weight = vec![0.0; self.typical_w.len()];
        for (m, sub) in subs.iter().enumerate() {
            if sub.flagged {
                identity_weight[self.position[&cb.words[m][0]]] += 1.0 / big_m;
            } else {
                for &f in &cb.words[m] {
                    kernel_weight[self.position[&f]] += 1.0 / (s * big_m);
                }
            }
        }
        let covered = self.covered_labels(cb);
        let joint_dims: Vec<usize> = dist.target[0].dims().to_vec();
        let mut out: Vec<Option<Operator>> = covered
            .iter()
            .map(|&c| c.then(|| Operator::zeros(&joint_dims)))
            .collect();
        let identity = Operator::identity(&self.dims_a);
        for bf in 0..sequence_count(self.nb, n) {
            let bs = sequence(bf, self.nb, n);
            let mut grouped: BTreeMap<usize, Operator> = BTreeMap::new();
            for (pos, &f) in self.typical_w.iter().enumerate() {
                if kernel_weight[pos] == 0.0 && identity_weight[pos] == 0.0 {
                    continue;
                }
                let z = self.tilde_flat(&sequence(f, self.nw, n), &bs);
                let acc = grouped
                    .entry(z)
                    .or_insert_with(|| Operator::zeros(&self.dims_a));
                acc.add_scaled(kernel_weight[pos], &self.kernels[pos])?;
                acc.add_scaled(identity_weight[pos], &identity)?;
            }
            if grouped.is_empty() {
                continue;
            }
            let lb = seq_product(&bs, &dist.lifted_b);
            for (z, a) in grouped {
                let slot = out[z].as_mut().expect("codeword labels are covered");
                slot.add_scaled(1.0, &a.tensor(&lb))?;
            }
        }
        Ok(Some(out))
    }

    /// sum_z || sqrt(omega) (Lambda~_z - Lambda_z) sqrt(omega) ||_1.
    pub fn faithful_distance(
        &self,
        simulated: &[Option<Operator>],
    ) -> Result<Option<f64>, ProtocolError> {
        let Some(dist) = &self.distance else {
            return Ok(None);
        };
        let mut d = 0.0;
        for (z, target) in dist.target.iter().enumerate() {
            match simulated.get(z).and_then(Option::as_ref) {
                Some(sim) => {
                    let s = Operator::sandwich(&dist.sqrt_omega, sim)?;
                    d += s.try_sub(target)?.hermitize_loose().trace_norm();
                }
                None => d += target.hermitize_loose().trace_norm(),
            }
        }
        Ok(Some(d))
    }

    /// Probability that Bob fails to recover Alice's codeword, conditioned on
    /// Alice obtaining an outcome. Returns (error mass, outcome mass).
    pub fn decode_error(
        &self,
        cb: &Codebook,
        subs: &[AliceSubPovm],
    ) -> Result<(f64, f64), ProtocolError> {
        match self.cfg.theorem {
            Theorem::Two => Ok(self.decode_classical(cb, subs)),
            Theorem::One => self.decode_quantum(cb, subs),
        }
    }

    /// Distinct codeword sequences per bin for one value of m.
    fn bin_contents(&self, cb: &Codebook, m: usize) -> Vec<Vec<usize>> {
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); self.cfg.t];
        for (&f, &b) in cb.words[m].iter().zip(&cb.bins[m]) {
            if !bins[b].contains(&f) {
                bins[b].push(f);
            }
        }
        bins
    }

    fn candidates(&self, bin: &[usize], bob: usize) -> Vec<usize> {
        bin.iter()
            .copied()
            .filter(|f| self.typical_pair[self.position[f]][bob])
            .collect()
    }

    fn alice_outcomes<'a>(
        &'a self,
        cb: &'a Codebook,
        subs: &'a [AliceSubPovm],
        m: usize,
    ) -> Vec<(usize, usize)> {
        if subs[m].flagged {
            vec![(0, cb.words[m][0])]
        } else {
            cb.words[m].iter().copied().enumerate().collect()
        }
    }

    fn decode_classical(&self, cb: &Codebook, subs: &[AliceSubPovm]) -> (f64, f64) {
        let s = self.cfg.s as f64;
        let big_m = self.cfg.m as f64;
        let (mut err, mut total) = (0.0, 0.0);
        for m in 0..self.cfg.m {
            let bins = self.bin_contents(cb, m);
            for (j, f) in self.alice_outcomes(cb, subs, m) {
                let pos = self.position[&f];
                for bob in 0..self.p_bob_n.len() {
                    let p = if subs[m].flagged {
                        self.p_bob_n[bob]
                    } else {
                        self.mass[pos][bob] / s
                    } / big_m;
                    if p == 0.0 {
                        continue;
                    }
                    total += p;
                    let cands = self.candidates(&bins[cb.bins[m][j]], bob);
                    if !(cands.len() == 1 && cands[0] == f) {
                        err += p;
                    }
                }
            }
        }
        (err, total)
    }

    fn decode_quantum(
        &self,
        cb: &Codebook,
        subs: &[AliceSubPovm],
    ) -> Result<(f64, f64), ProtocolError> {
        let q = self.quantum.as_ref().expect("decoder built for this mode");
        let s = self.cfg.s as f64;
        let big_m = self.cfg.m as f64;
        let (mut err, mut total) = (0.0, 0.0);
        for m in 0..self.cfg.m {
            let bins = self.bin_contents(cb, m);
            for (j, f) in self.alice_outcomes(cb, subs, m) {
                let pos = self.position[&f];
                let (tau, mass_all): (Operator, f64) = if subs[m].flagged {
                    (q.rho_b_n.clone(), 1.0)
                } else {
                    let t = q.tau[pos].scale(1.0 / s);
                    let tr = t.real_trace();
                    (t, tr)
                };
                let weight = mass_all / big_m;
                total += weight;
                let mut success = 0.0;
                for &bf in &q.typical_wb {
                    let post = Operator::sandwich(&q.roots_wb[&bf], &tau)?;
                    if post.real_trace() <= 0.0 {
                        continue;
                    }
                    let pre = &q.pre_projector[&bf];
                    let mut state = Operator::sandwich(pre, &post)?;
                    for cand in self.candidates(&bins[cb.bins[m][j]], bf) {
                        let proj = &q.pair_projector[&(self.position[&cand], bf)];
                        let accept = proj.trace_product(&state)?.re.max(0.0);
                        if cand == f {
                            success += accept;
                            break;
                        }
                        let comp = Operator::identity(proj.dims()).try_sub(proj)?;
                        state = Operator::sandwich(&comp, &state)?;
                    }
                }
                err += (mass_all - success).max(0.0) / big_m;
            }
        }
        Ok((err, total))
    }
}

/// Smallest delta at which the pruned construction is non-empty, found by
/// scanning the deviations of all empirical types.
pub(crate) fn min_feasible_delta(
    p_w: &[f64],
    pwu: &[f64],
    nu: usize,
    n: usize,
    theorem: Theorem,
) -> Option<f64> {
    let mut candidates = type_deviations(p_w, n);
    if theorem == Theorem::Two {
        candidates.extend(type_deviations(pwu, n));
    }
    candidates.retain(|d| *d > 0.0);
    candidates.push(1e-6);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let nw = p_w.len();
    candidates.into_iter().find(|&delta| {
        let tw = typical_set(p_w, n, delta);
        match theorem {
            Theorem::One => !tw.is_empty(),
            Theorem::Two => tw
                .iter()
                .any(|&f| !conditional_typical_set(&sequence(f, nw, n), pwu, nu, delta).is_empty()),
        }
    })
}
