use crate::graph::{IndependentSetFamily, JointPmf};

const LOG_FLOOR: f64 = 1e-300;

fn log2c(x: f64) -> f64 {
    x.max(LOG_FLOOR).log2()
}

/// I(W;U|V) as a function of a row-major |U| x |W| matrix `q`, with p(v)
/// held at the distribution's marginal so the value is defined off the
/// simplex as well.
pub fn objective(pmf: &JointPmf, q: &[f64], nw: usize) -> f64 {
    let (nu, nv) = (pmf.u_size(), pmf.v_size());
    let pv = pmf.marginal_v();
    let pu = pmf.marginal_u();
    let mut value = 0.0;
    for w in 0..nw {
        for v in 0..nv {
            let a: f64 = (0..nu).map(|u| pmf.get(u, v) * q[u * nw + w]).sum();
            if a > 0.0 {
                value -= a * log2c(a / pv[v]);
            }
        }
    }
    for u in 0..nu {
        for w in 0..nw {
            let x = q[u * nw + w];
            if x > 0.0 {
                value += pu[u] * x * log2c(x);
            }
        }
    }
    value
}

/// Partial derivatives of [`objective`] with respect to every entry of `q`.
pub fn gradient(pmf: &JointPmf, q: &[f64], nw: usize) -> Vec<f64> {
    let (nu, nv) = (pmf.u_size(), pmf.v_size());
    let pv = pmf.marginal_v();
    let pu = pmf.marginal_u();
    let mut logr = vec![0.0; nw * nv];
    for w in 0..nw {
        for v in 0..nv {
            let a: f64 = (0..nu).map(|u| pmf.get(u, v) * q[u * nw + w]).sum();
            logr[w * nv + v] = if pv[v] > 0.0 { log2c(a / pv[v]) } else { 0.0 };
        }
    }
    let mut grad = vec![0.0; nu * nw];
    for u in 0..nu {
        for w in 0..nw {
            let cross: f64 = (0..nv).map(|v| pmf.get(u, v) * logr[w * nv + v]).sum();
            grad[u * nw + w] = -cross + pu[u] * log2c(q[u * nw + w]);
        }
    }
    grad
}

/// Support mask: entry (u, w) is free iff u belongs to set w.
pub fn support_mask(family: &IndependentSetFamily) -> Vec<bool> {
    let nw = family.len();
    let mut mask = vec![false; family.alphabet() * nw];
    for u in 0..family.alphabet() {
        for w in family.containing(u) {
            mask[u * nw + w] = true;
        }
    }
    mask
}
