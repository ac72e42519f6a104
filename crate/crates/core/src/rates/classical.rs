use super::ConditionalChannel;
use crate::graph::JointPmf;
use crate::quantum::shannon_entropy;

/// H(X|Y) for a row-major joint table p(x, y).
pub fn conditional_entropy(p: &[f64], rows: usize, cols: usize) -> f64 {
    let mut py = vec![0.0; cols];
    for x in 0..rows {
        for y in 0..cols {
            py[y] += p[x * cols + y];
        }
    }
    shannon_entropy(p) - shannon_entropy(&py)
}

/// I(X;Y) for a row-major joint table p(x, y).
pub fn mutual_information(p: &[f64], rows: usize, cols: usize) -> f64 {
    let mut px = vec![0.0; rows];
    let mut py = vec![0.0; cols];
    for x in 0..rows {
        for y in 0..cols {
            px[x] += p[x * cols + y];
            py[y] += p[x * cols + y];
        }
    }
    shannon_entropy(&px) + shannon_entropy(&py) - shannon_entropy(p)
}

/// p(w, v) = sum_u p(u, v) p(w|u), row-major over w.
pub fn joint_wv(pmf: &JointPmf, ch: &ConditionalChannel) -> Vec<f64> {
    let (nw, nv) = (ch.outputs(), pmf.v_size());
    let mut out = vec![0.0; nw * nv];
    for u in 0..pmf.u_size() {
        for w in 0..nw {
            let q = ch.get(u, w);
            if q == 0.0 {
                continue;
            }
            for v in 0..nv {
                out[w * nv + v] += pmf.get(u, v) * q;
            }
        }
    }
    out
}

/// p(u, w) = p(u) p(w|u), row-major over u.
pub fn joint_uw(pmf: &JointPmf, ch: &ConditionalChannel) -> Vec<f64> {
    let pu = pmf.marginal_u();
    let nw = ch.outputs();
    let mut out = vec![0.0; pu.len() * nw];
    for (u, &p) in pu.iter().enumerate() {
        for w in 0..nw {
            out[u * nw + w] = p * ch.get(u, w);
        }
    }
    out
}

/// I(W;U|V) = H(W|V) - H(W|U) under the chain W - U - V.
pub fn classical_rate(pmf: &JointPmf, ch: &ConditionalChannel) -> f64 {
    let nw = ch.outputs();
    let h_w_v = conditional_entropy(&joint_wv(pmf, ch), nw, pmf.v_size());
    let h_w_u: f64 = pmf
        .marginal_u()
        .iter()
        .enumerate()
        .map(|(u, &p)| {
            let row: Vec<f64> = (0..nw).map(|w| ch.get(u, w)).collect();
            p * shannon_entropy(&row)
        })
        .sum();
    h_w_v - h_w_u
}
