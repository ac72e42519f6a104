use super::entropy::operator_entropy;
use super::{Operator, QuantumError};

const WEIGHT_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-10;

/// One classical label (one or two coordinates) with its weight and the
/// normalized conditional state. Zero-weight terms carry no state.
#[derive(Clone, Debug)]
pub struct CqTerm {
    pub label: Vec<usize>,
    pub weight: f64,
    pub state: Option<Operator>,
}

/// Classical-quantum ensemble sum_x p(x) |x><x| (x) rho_x.
#[derive(Clone, Debug)]
pub struct CqEnsemble {
    coords: usize,
    terms: Vec<CqTerm>,
}

impl CqEnsemble {
    /// Build from unnormalized conditional operators sigma_x = p(x) rho_x.
    /// Labels must all have the same number of coordinates (1 or 2).
    pub fn from_unnormalized(entries: Vec<(Vec<usize>, Operator)>) -> Result<Self, QuantumError> {
        let coords = entries
            .first()
            .map(|(l, _)| l.len())
            .ok_or_else(|| QuantumError::InvalidEnsemble("no terms".into()))?;
        if !(1..=2).contains(&coords) {
            return Err(QuantumError::InvalidEnsemble(format!(
                "{coords} classical coordinates"
            )));
        }
        let dims = entries[0].1.dims().to_vec();
        let mut terms = Vec::with_capacity(entries.len());
        let mut total = 0.0;
        for (label, sigma) in entries {
            if label.len() != coords {
                return Err(QuantumError::InvalidEnsemble(
                    "labels have mixed coordinate counts".into(),
                ));
            }
            if sigma.dims() != dims.as_slice() {
                return Err(QuantumError::SubsystemMismatch {
                    left: dims.clone(),
                    right: sigma.dims().to_vec(),
                });
            }
            let sigma = sigma.hermitize()?;
            let min = sigma.eigenvalues()?.last().copied().unwrap_or(0.0);
            if min < -PSD_TOL {
                return Err(QuantumError::InvalidEnsemble(format!(
                    "conditional operator for {label:?} has eigenvalue {min:.3e}"
                )));
            }
            let weight = sigma.real_trace().max(0.0);
            total += weight;
            let state = (weight > 0.0).then(|| sigma.scale(1.0 / weight));
            terms.push(CqTerm {
                label,
                weight,
                state,
            });
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(QuantumError::InvalidEnsemble(format!(
                "weights sum to {total}"
            )));
        }
        Ok(Self { coords, terms })
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn terms(&self) -> &[CqTerm] {
        &self.terms
    }

    fn average(terms: &[&CqTerm]) -> Result<(f64, Operator), QuantumError> {
        let dims = terms
            .iter()
            .find_map(|t| t.state.as_ref())
            .map(|s| s.dims().to_vec())
            .ok_or_else(|| QuantumError::InvalidEnsemble("all weights zero".into()))?;
        let mut avg = Operator::zeros(&dims);
        let mut w = 0.0;
        for t in terms {
            if let Some(s) = &t.state {
                avg.add_scaled(t.weight, s)?;
                w += t.weight;
            }
        }
        Ok((w, avg.scale(1.0 / w)))
    }

    /// Holevo quantity of a (sub-)collection of terms, renormalized.
    fn holevo(terms: &[&CqTerm]) -> Result<f64, QuantumError> {
        let (w, avg) = Self::average(terms)?;
        let mut conditional = 0.0;
        for t in terms {
            if let Some(s) = &t.state {
                conditional += t.weight / w * operator_entropy(s)?;
            }
        }
        Ok(operator_entropy(&avg)? - conditional)
    }
}

/// I(X;Q) = H(sum_x p rho_x) - sum_x p H(rho_x).
pub fn cq_mutual_information(e: &CqEnsemble) -> Result<f64, QuantumError> {
    if e.coords != 1 {
        return Err(QuantumError::InvalidEnsemble(
            "mutual information needs exactly one classical coordinate".into(),
        ));
    }
    let terms: Vec<&CqTerm> = e.terms.iter().collect();
    CqEnsemble::holevo(&terms)
}

/// I(X;Q|Y) = sum_y p(y) I(X;Q | Y = y) for labels (x, y).
pub fn cq_conditional_mutual_information(e: &CqEnsemble) -> Result<f64, QuantumError> {
    if e.coords != 2 {
        return Err(QuantumError::InvalidEnsemble(
            "conditional mutual information needs two classical coordinates".into(),
        ));
    }
    let mut ys: Vec<usize> = e.terms.iter().map(|t| t.label[1]).collect();
    ys.sort_unstable();
    ys.dedup();
    let mut total = 0.0;
    for y in ys {
        let group: Vec<&CqTerm> = e.terms.iter().filter(|t| t.label[1] == y).collect();
        let py: f64 = group.iter().map(|t| t.weight).sum();
        if py > 0.0 {
            total += py * CqEnsemble::holevo(&group)?;
        }
    }
    Ok(total)
}
