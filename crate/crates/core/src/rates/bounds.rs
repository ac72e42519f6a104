use serde::Serialize;

use super::classical::{conditional_entropy, joint_wv, mutual_information};
use super::{lift_povm, ConditionalChannel, RateError};
use crate::graph::build_tilde_g;
use crate::instance::Instance;
use crate::quantum::{
    cq_conditional_mutual_information, cq_mutual_information, purify, CqEnsemble, Operator, Povm,
};
use crate::registry::Registry;

/// Where the channels feeding a bound came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    Optimizer,
    Supplied,
    Default,
}

/// Lower bounds r1 on R and r2 on R + S, in bits per symbol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub label: String,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "RS")]
    pub rs: f64,
    pub source: Option<ChannelSource>,
}

/// Information quantities entering the bound where both parties group
/// their outcomes into independent sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoSidedTerms {
    pub i_wa_rb: f64,
    pub i_wa_b_given_wb: f64,
    pub i_wa_wb: f64,
    pub h_wa_given_wb: f64,
}

impl TwoSidedTerms {
    pub fn r(&self) -> f64 {
        self.i_wa_rb - self.i_wa_b_given_wb - self.i_wa_wb
    }

    pub fn rs(&self) -> f64 {
        self.h_wa_given_wb - self.i_wa_b_given_wb
    }
}

fn local_embed(dims: &[usize], slot: usize, op: &Operator) -> Operator {
    let parts: Vec<Operator> = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if k == slot {
                op.clone()
            } else {
                Operator::identity(&[d])
            }
        })
        .collect();
    Operator::tensor_all(parts.iter()).expect("non-empty")
}

/// I(X;RB) for X the outcome of `povm` applied to A of a purification of rho.
pub fn holevo_with_reference(inst: &Instance, povm: &Povm) -> Result<f64, RateError> {
    let phi = purify(inst.rho())?;
    let dims = phi.dims().to_vec();
    let entries = povm
        .sqrt_elements()?
        .iter()
        .enumerate()
        .map(|(x, root)| {
            let k = local_embed(&dims, 1, root);
            let post = Operator::sandwich(&k, phi.op())?;
            Ok((vec![x], post.partial_trace(&[0, 2])?))
        })
        .collect::<Result<Vec<_>, RateError>>()?;
    Ok(cq_mutual_information(&CqEnsemble::from_unnormalized(
        entries,
    )?)?)
}

/// Evaluates the four terms on the cq states built from a purification.
pub fn two_sided_terms(
    inst: &Instance,
    ch_a: &ConditionalChannel,
    ch_b: &ConditionalChannel,
) -> Result<TwoSidedTerms, RateError> {
    let (pmf, g) = (inst.pmf(), inst.g());
    if ch_a.alphabet() != pmf.u_size() || ch_b.alphabet() != pmf.v_size() {
        return Err(RateError::InvalidChannel(
            "channel alphabets do not match the measurement outcomes".into(),
        ));
    }
    ch_a.family().validate_alice(pmf, g)?;
    ch_b.family().validate_bob(ch_a.family(), pmf, g)?;
    build_tilde_g(ch_a.family(), ch_b.family(), pmf, g)?;

    let lam_a = lift_povm(inst.povm_a(), ch_a)?;
    let lam_b = lift_povm(inst.povm_b(), ch_b)?;
    let roots_a = lam_a.sqrt_elements()?;
    let roots_b = lam_b.sqrt_elements()?;

    let phi = purify(inst.rho())?;
    let dims = phi.dims().to_vec();
    let mut rb_terms = Vec::with_capacity(roots_a.len());
    let mut b_terms = Vec::with_capacity(roots_a.len() * roots_b.len());
    for (wa, ra) in roots_a.iter().enumerate() {
        let post_a = Operator::sandwich(&local_embed(&dims, 1, ra), phi.op())?;
        rb_terms.push((vec![wa], post_a.partial_trace(&[0, 2])?));
        let ab = post_a.partial_trace(&[1, 2])?;
        for (wb, rb) in roots_b.iter().enumerate() {
            let post = Operator::sandwich(&local_embed(ab.dims(), 1, rb), &ab)?;
            b_terms.push((vec![wa, wb], post.partial_trace(&[1])?));
        }
    }
    let (na, nb) = (roots_a.len(), roots_b.len());
    let p_ab: Vec<f64> = b_terms
        .iter()
        .map(|(_, s)| s.real_trace().max(0.0))
        .collect();
    let b_ensemble = CqEnsemble::from_unnormalized(b_terms)?;
    Ok(TwoSidedTerms {
        i_wa_rb: cq_mutual_information(&CqEnsemble::from_unnormalized(rb_terms)?)?,
        i_wa_b_given_wb: cq_conditional_mutual_information(&b_ensemble)?,
        i_wa_wb: mutual_information(&p_ab, na, nb),
        h_wa_given_wb: conditional_entropy(&p_ab, na, nb),
    })
}

pub fn two_sided_rates(
    inst: &Instance,
    ch_a: &ConditionalChannel,
    ch_b: &ConditionalChannel,
) -> Result<RatePoint, RateError> {
    let t = two_sided_terms(inst, ch_a, ch_b)?;
    Ok(RatePoint {
        label: "theorem1".into(),
        r: t.r(),
        rs: t.rs(),
        source: None,
    })
}

/// R = I(U;RB) - I(W;V), R + S = I(W;U|V) for a channel W on Alice's outcomes.
pub fn one_sided_rates(
    inst: &Instance,
    wstar: &ConditionalChannel,
) -> Result<RatePoint, RateError> {
    let pmf = inst.pmf();
    if wstar.alphabet() != pmf.u_size() {
        return Err(RateError::InvalidChannel(
            "channel alphabet does not match Alice's outcomes".into(),
        ));
    }
    wstar.family().validate_alice(pmf, inst.g())?;
    let i_u_rb = holevo_with_reference(inst, inst.povm_a())?;
    let wv = joint_wv(pmf, wstar);
    Ok(RatePoint {
        label: "theorem2".into(),
        r: i_u_rb - mutual_information(&wv, wstar.outputs(), pmf.v_size()),
        rs: super::classical_rate(pmf, wstar),
        source: None,
    })
}

/// R = I(U;RB) - I(U;V), R + S = H(U|V).
pub fn baseline_rates(inst: &Instance) -> Result<RatePoint, RateError> {
    let pmf = inst.pmf();
    let (nu, nv) = (pmf.u_size(), pmf.v_size());
    Ok(RatePoint {
        label: "baseline".into(),
        r: holevo_with_reference(inst, inst.povm_a())? - mutual_information(pmf.entries(), nu, nv),
        rs: conditional_entropy(pmf.entries(), nu, nv),
        source: None,
    })
}

/// Channels handed to a bound. Bounds that need fewer ignore the rest.
#[derive(Clone, Debug)]
pub struct ChannelChoice {
    pub alice: ConditionalChannel,
    pub bob: ConditionalChannel,
    pub source: ChannelSource,
}

pub trait RateBound: Send + Sync {
    fn evaluate(&self, inst: &Instance, channels: &ChannelChoice) -> Result<RatePoint, RateError>;
}

struct TwoSided;
struct OneSided;
struct Baseline;

impl RateBound for TwoSided {
    fn evaluate(&self, inst: &Instance, c: &ChannelChoice) -> Result<RatePoint, RateError> {
        let mut p = two_sided_rates(inst, &c.alice, &c.bob)?;
        p.source = Some(c.source);
        Ok(p)
    }
}

impl RateBound for OneSided {
    fn evaluate(&self, inst: &Instance, c: &ChannelChoice) -> Result<RatePoint, RateError> {
        let mut p = one_sided_rates(inst, &c.alice)?;
        p.source = Some(c.source);
        Ok(p)
    }
}

impl RateBound for Baseline {
    fn evaluate(&self, inst: &Instance, _: &ChannelChoice) -> Result<RatePoint, RateError> {
        baseline_rates(inst)
    }
}

/// The bounds known to the toolkit, keyed by the label they report.
pub fn rate_bounds() -> Registry<dyn RateBound> {
    let mut r: Registry<dyn RateBound> = Registry::new();
    r.register("theorem1", Box::new(TwoSided))
        .register("theorem2", Box::new(OneSided))
        .register("baseline", Box::new(Baseline));
    r
}
