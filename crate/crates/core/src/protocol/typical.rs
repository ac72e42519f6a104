use crate::quantum::{flatten, unflatten, Eigh, Matrix, Operator, C64, EIGEN_CLIP};

/// Slack added to every typicality comparison so that boundary types are
/// not lost to rounding.
pub const TYPICAL_SLACK: f64 = 1e-9;

/// Digits of sequence `flat` over an alphabet of size `k`, first symbol most significant.
pub fn sequence(flat: usize, k: usize, n: usize) -> Vec<usize> {
    unflatten(flat, &vec![k; n])
}

pub fn sequence_index(seq: &[usize], k: usize) -> usize {
    flatten(seq, &vec![k; seq.len()])
}

pub fn sequence_count(k: usize, n: usize) -> usize {
    k.pow(n as u32)
}

fn counts(seq: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &x in seq {
        c[x] += 1;
    }
    c
}

/// Largest deviation |N(x|x^n)/n - p(x)|, or `None` when the sequence uses a
/// zero-probability symbol.
pub fn type_deviation(seq: &[usize], p: &[f64]) -> Option<f64> {
    let n = seq.len() as f64;
    let c = counts(seq, p.len());
    let mut worst: f64 = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px <= 0.0 {
            if c[x] > 0 {
                return None;
            }
            continue;
        }
        worst = worst.max((c[x] as f64 / n - px).abs());
    }
    Some(worst)
}

pub fn is_typical(seq: &[usize], p: &[f64], delta: f64) -> bool {
    type_deviation(seq, p).is_some_and(|d| d <= delta + TYPICAL_SLACK)
}

/// Strongly typical sequences of length `n`, as flat indices in lexicographic order.
pub fn typical_set(p: &[f64], n: usize, delta: f64) -> Vec<usize> {
    let k = p.len();
    (0..sequence_count(k, n))
        .filter(|&f| is_typical(&sequence(f, k, n), p, delta))
        .collect()
}

/// Whether (x^n, y^n) is jointly typical under the row-major joint `pxy`
/// over |X| x |Y|.
pub fn jointly_typical(x: &[usize], y: &[usize], pxy: &[f64], ny: usize, delta: f64) -> bool {
    let pairs: Vec<usize> = x.iter().zip(y).map(|(&a, &b)| a * ny + b).collect();
    is_typical(&pairs, pxy, delta)
}

/// All y^n jointly typical with `x` under `pxy`.
pub fn conditional_typical_set(x: &[usize], pxy: &[f64], ny: usize, delta: f64) -> Vec<usize> {
    let n = x.len();
    (0..sequence_count(ny, n))
        .filter(|&f| jointly_typical(x, &sequence(f, ny, n), pxy, ny, delta))
        .collect()
}

fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for first in 0..=total {
        cur.push(first);
        compositions(total - first, parts - 1, out, cur);
        cur.pop();
    }
}

/// Deviations of every length-`n` type supported on the support of `p`.
pub fn type_deviations(p: &[f64], n: usize) -> Vec<f64> {
    let mut types = Vec::new();
    compositions(n, p.len(), &mut types, &mut Vec::new());
    types
        .into_iter()
        .filter(|c| c.iter().zip(p).all(|(&ci, &pi)| pi > 0.0 || ci == 0))
        .map(|c| {
            c.iter()
                .zip(p)
                .filter(|(_, &pi)| pi > 0.0)
                .map(|(&ci, &pi)| (ci as f64 / n as f64 - pi).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Spectral data of one letter's state, used to build product-eigenbasis projectors.
#[derive(Clone, Debug)]
pub struct LetterSpectrum {
    pub eig: Eigh,
    pub entropy: f64,
}

impl LetterSpectrum {
    pub fn new(state: &Operator) -> Self {
        let eig = state.eigh().expect("hermitian letter state");
        let entropy = eig
            .values
            .iter()
            .filter(|&&l| l > EIGEN_CLIP)
            .map(|&l| -l * l.log2())
            .sum();
        Self { eig, entropy }
    }
}

/// Projector onto product eigenvectors whose empirical rate
/// -(1/n) log2 prod lambda lies within delta of the average letter entropy.
/// Letters given as `None` have no defined state and make the projector zero.
pub fn product_typical_projector(letters: &[Option<&LetterSpectrum>], delta: f64) -> Operator {
    let n = letters.len();
    let d = letters
        .iter()
        .flatten()
        .map(|l| l.eig.values.len())
        .next()
        .expect("at least one defined letter");
    let dims = vec![d; n];
    let total = sequence_count(d, n);
    if letters.iter().any(Option::is_none) {
        return Operator::zeros(&dims);
    }
    let letters: Vec<&LetterSpectrum> = letters.iter().map(|l| l.unwrap()).collect();
    let target: f64 = letters.iter().map(|l| l.entropy).sum::<f64>() / n as f64;
    let mut columns: Vec<Vec<usize>> = Vec::new();
    for f in 0..total {
        let ks = sequence(f, d, n);
        let mut rate = 0.0;
        let mut ok = true;
        for (l, &k) in letters.iter().zip(&ks) {
            let lam = l.eig.values[k];
            if lam <= EIGEN_CLIP {
                ok = false;
                break;
            }
            rate -= lam.log2();
        }
        if ok && (rate / n as f64 - target).abs() <= delta + TYPICAL_SLACK {
            columns.push(ks);
        }
    }
    let mut v = Matrix::zeros(total, columns.len());
    for (c, ks) in columns.iter().enumerate() {
        for row in 0..total {
            let rs = sequence(row, d, n);
            let mut amp = C64::new(1.0, 0.0);
            for ((l, &k), &r) in letters.iter().zip(ks).zip(&rs) {
                amp *= l.eig.vectors[(r, k)];
                if amp == C64::new(0.0, 0.0) {
                    break;
                }
            }
            v[(row, c)] = amp;
        }
    }
    let p = &v * v.adjoint();
    Operator::new(dims, p)
        .expect("square")
        .hermitize()
        .expect("projector")
}
