use serde::Serialize;

use super::GraphError;

/// A family of subsets of an alphabet `0..alphabet`, each stored sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndependentSetFamily {
    alphabet: usize,
    sets: Vec<Vec<usize>>,
    spanning: bool,
    maximal: bool,
}

impl IndependentSetFamily {
    /// Validates shape only; independence is checked by the caller that
    /// knows the relation.
    pub fn new(alphabet: usize, sets: Vec<Vec<usize>>, maximal: bool) -> Result<Self, GraphError> {
        if sets.is_empty() {
            return Err(GraphError::InvalidFamily("no sets".into()));
        }
        let mut normalized = Vec::with_capacity(sets.len());
        for mut s in sets {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(GraphError::InvalidFamily("empty set".into()));
            }
            if let Some(&x) = s.iter().find(|&&x| x >= alphabet) {
                return Err(GraphError::InvalidFamily(format!(
                    "symbol {} is outside an alphabet of size {alphabet}",
                    x + 1
                )));
            }
            normalized.push(s);
        }
        let spanning = (0..alphabet).all(|x| normalized.iter().any(|s| s.contains(&x)));
        Ok(Self {
            alphabet,
            sets: normalized,
            spanning,
            maximal,
        })
    }

    pub fn singletons(alphabet: usize) -> Self {
        Self {
            alphabet,
            sets: (0..alphabet).map(|x| vec![x]).collect(),
            spanning: true,
            maximal: false,
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn set(&self, w: usize) -> &[usize] {
        &self.sets[w]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn is_spanning(&self) -> bool {
        self.spanning
    }

    pub fn is_maximal(&self) -> bool {
        self.maximal
    }

    pub fn contains(&self, w: usize, x: usize) -> bool {
        self.sets[w].binary_search(&x).is_ok()
    }

    /// Indices of the sets containing `x`.
    pub fn containing(&self, x: usize) -> Vec<usize> {
        (0..self.sets.len())
            .filter(|&w| self.contains(w, x))
            .collect()
    }

    pub fn require_spanning(&self) -> Result<(), GraphError> {
        if self.spanning {
            return Ok(());
        }
        let missing = (0..self.alphabet)
            .filter(|&x| self.containing(x).is_empty())
            .collect();
        Err(GraphError::NotSpanning { missing })
    }

    /// `{{1,2},{2,3}}` style rendering with 1-based symbols.
    pub fn display(&self) -> String {
        let inner: Vec<String> = self
            .sets
            .iter()
            .map(|s| {
                let items: Vec<String> = s.iter().map(|x| (x + 1).to_string()).collect();
                format!("{{{}}}", items.join(","))
            })
            .collect();
        format!("{{{}}}", inner.join(","))
    }
}
