use std::path::Path;

use dqms_core::graph::{FunctionTable, IndependentSetFamily};
use dqms_core::quantum::{DensityOperator, Matrix, Operator, Povm, C64};
use dqms_core::rates::ConditionalChannel;
use dqms_core::Instance;
use serde::Deserialize;

use crate::error::CliError;

/// Complex matrix written as separate real and imaginary row arrays.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMatrix {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

/// Independent sets as lists of 1-based symbols.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFamilies {
    #[serde(default)]
    pub alice: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub bob: Option<Vec<Vec<usize>>>,
}

/// Channel rows p(w | x), one row per symbol, one column per set.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannels {
    #[serde(default)]
    pub alice: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub bob: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblem {
    #[serde(default)]
    pub description: Option<String>,
    pub dim_a: usize,
    pub dim_b: usize,
    pub state: RawMatrix,
    pub povm_a: Vec<RawMatrix>,
    pub povm_b: Vec<RawMatrix>,
    pub g: Vec<Vec<i64>>,
    #[serde(default)]
    pub families: Option<RawFamilies>,
    #[serde(default)]
    pub channels: Option<RawChannels>,
}

/// Stand-alone channel file given on the command line.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannelFile {
    #[serde(default)]
    pub family: Option<Vec<Vec<usize>>>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Problem {
    pub description: Option<String>,
    pub instance: Instance,
    pub family_a: Option<IndependentSetFamily>,
    pub family_b: Option<IndependentSetFamily>,
    pub channel_a: Option<Vec<Vec<f64>>>,
    pub channel_b: Option<Vec<Vec<f64>>>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let field = if path == "." {
            String::new()
        } else {
            format!(" field `{path}`:")
        };
        CliError::Validation(format!(
            "{origin}: line {} column {}:{field} {inner}",
            inner.line(),
            inner.column()
        ))
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

fn matrix(raw: &RawMatrix, d: usize, field: &str) -> Result<Matrix, CliError> {
    let check = |rows: &Vec<Vec<f64>>, part: &str| -> Result<(), CliError> {
        if rows.len() != d {
            return Err(invalid(
                &format!("{field}.{part}"),
                format!("expected {d} rows, found {}", rows.len()),
            ));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(invalid(
                    &format!("{field}.{part}[{i}]"),
                    format!("expected {d} entries, found {}", r.len()),
                ));
            }
            if let Some(j) = r.iter().position(|x| !x.is_finite()) {
                return Err(invalid(
                    &format!("{field}.{part}[{i}][{j}]"),
                    "not a finite number",
                ));
            }
        }
        Ok(())
    };
    check(&raw.re, "re")?;
    if let Some(im) = &raw.im {
        check(im, "im")?;
    }
    Ok(Matrix::from_fn(d, d, |i, j| {
        C64::new(raw.re[i][j], raw.im.as_ref().map_or(0.0, |m| m[i][j]))
    }))
}

fn povm(raw: &[RawMatrix], d: usize, field: &str) -> Result<Povm, CliError> {
    if raw.is_empty() {
        return Err(invalid(field, "no elements"));
    }
    let mut elements = Vec::with_capacity(raw.len());
    for (i, m) in raw.iter().enumerate() {
        let name = format!("{field}[{i}]");
        let op = Operator::new(vec![d], matrix(m, d, &name)?).map_err(|e| invalid(&name, e))?;
        elements.push(op);
    }
    Povm::new(elements).map_err(|e| invalid(field, e))
}

pub fn family(
    sets: &[Vec<usize>],
    alphabet: usize,
    field: &str,
) -> Result<IndependentSetFamily, CliError> {
    let mut zero_based = Vec::with_capacity(sets.len());
    for (i, s) in sets.iter().enumerate() {
        let mut out = Vec::with_capacity(s.len());
        for &x in s {
            if x == 0 || x > alphabet {
                return Err(invalid(
                    &format!("{field}[{i}]"),
                    format!("symbol {x} outside 1..={alphabet}"),
                ));
            }
            out.push(x - 1);
        }
        zero_based.push(out);
    }
    IndependentSetFamily::new(alphabet, zero_based, false).map_err(|e| invalid(field, e))
}

pub fn channel(
    family: IndependentSetFamily,
    rows: &[Vec<f64>],
    field: &str,
) -> Result<ConditionalChannel, CliError> {
    if rows.len() != family.alphabet() {
        return Err(invalid(
            field,
            format!("expected {} rows, found {}", family.alphabet(), rows.len()),
        ));
    }
    ConditionalChannel::from_rows(family, rows).map_err(|e| invalid(field, e))
}

impl Problem {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw: RawProblem = read_json(path)?;
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawProblem) -> Result<Self, CliError> {
        let (da, db) = (raw.dim_a, raw.dim_b);
        if da == 0 || db == 0 {
            return Err(invalid("dim_a/dim_b", "dimensions must be positive"));
        }
        let state = matrix(&raw.state, da * db, "state")?;
        let state = Operator::new(vec![da, db], state).map_err(|e| invalid("state", e))?;
        let rho = DensityOperator::new(state).map_err(|e| invalid("state", e))?;
        let povm_a = povm(&raw.povm_a, da, "povm_a")?;
        let povm_b = povm(&raw.povm_b, db, "povm_b")?;
        if raw.g.len() != povm_a.len() {
            return Err(invalid(
                "g",
                format!(
                    "expected {} rows (one per outcome of povm_a), found {}",
                    povm_a.len(),
                    raw.g.len()
                ),
            ));
        }
        for (i, row) in raw.g.iter().enumerate() {
            if row.len() != povm_b.len() {
                return Err(invalid(
                    &format!("g[{i}]"),
                    format!(
                        "expected {} entries (one per outcome of povm_b), found {}",
                        povm_b.len(),
                        row.len()
                    ),
                ));
            }
        }
        let g = FunctionTable::new(&raw.g).map_err(|e| invalid("g", e))?;
        let (nu, nv) = (povm_a.len(), povm_b.len());
        let instance = Instance::new(rho, povm_a, povm_b, g).map_err(|e| invalid("problem", e))?;
        let fams = raw.families.unwrap_or_default();
        let family_a = fams
            .alice
            .as_deref()
            .map(|s| family(s, nu, "families.alice"))
            .transpose()?;
        let family_b = fams
            .bob
            .as_deref()
            .map(|s| family(s, nv, "families.bob"))
            .transpose()?;
        let chans = raw.channels.unwrap_or_default();
        Ok(Self {
            description: raw.description,
            instance,
            family_a,
            family_b,
            channel_a: chans.alice,
            channel_b: chans.bob,
        })
    }
}
