//! Variable tables: the ordered list of named discrete variables a model is
//! defined over. Variable ids are indices into this list and every scope in
//! the library is a sorted slice of such ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VarId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableTable {
    variables: Vec<Variable>,
}

impl VariableTable {
    /// Builds a table, requiring unique names and cardinality >= 1.
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        if variables.len() > u32::MAX as usize {
            return Err(Error::Validation(
                "variable count does not fit in 32 bits".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for v in &variables {
            if v.cardinality == 0 {
                return Err(Error::Validation(format!(
                    "variable {} has cardinality 0",
                    v.name
                )));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate variable name {}",
                    v.name
                )));
            }
        }
        Ok(Self { variables })
    }

    /// Convenience constructor: `n` variables named x0..x{n-1}, all with the
    /// same cardinality.
    pub fn uniform(n: usize, cardinality: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| Variable {
                    name: format!("x{i}"),
                    cardinality,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id as usize].cardinality
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id as usize].name
    }

    pub fn id_of(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(|i| i as VarId)
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        0..self.variables.len() as VarId
    }

    pub fn iter(&self) -> impl Iterator<Item = &Variable> {
        self.variables.iter()
    }

    /// Cardinalities of a scope, in scope order.
    pub fn scope_cards(&self, scope: &[VarId]) -> Vec<usize> {
        scope.iter().map(|&v| self.cardinality(v)).collect()
    }

    /// Number of joint states as an exact integer, or `None` on overflow.
    pub fn joint_states(&self) -> Option<u128> {
        self.variables
            .iter()
            .try_fold(1u128, |acc, v| acc.checked_mul(v.cardinality as u128))
    }

    /// Number of joint states as a float. Exact for small domains and an
    /// upper-bound-free approximation for astronomically large ones; callers
    /// that enumerate states must check `joint_states` against a cap first.
    pub fn joint_states_f64(&self) -> f64 {
        self.variables
            .iter()
            .map(|v| v.cardinality as f64)
            .product()
    }

    /// Calls `f` with every assignment over this table's variables, in
    /// ascending row-major order (last variable fastest).
    pub fn for_each_assignment(&self, f: impl FnMut(&[usize])) {
        let cards: Vec<usize> = self.variables.iter().map(|v| v.cardinality).collect();
        for_each_assignment(&cards, f);
    }

    /// Checks that an assignment over all variables is in-domain.
    pub fn check_assignment(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::Validation(format!(
                "assignment has {} entries, expected {}",
                x.len(),
                self.len()
            )));
        }
        for (i, (&value, v)) in x.iter().zip(self.variables.iter()).enumerate() {
            if value >= v.cardinality {
                return Err(Error::OutOfDomainValue {
                    variable: self.name(i as VarId).to_string(),
                    value,
                    cardinality: v.cardinality,
                });
            }
        }
        Ok(())
    }
}

/// Enumerates assignments over the given cardinalities in ascending
/// row-major order (last position fastest). No-op when any cardinality is 0.
pub fn for_each_assignment(cards: &[usize], mut f: impl FnMut(&[usize])) {
    if cards.contains(&0) {
        return;
    }
    let mut x = vec![0usize; cards.len()];
    loop {
        f(&x);
        let mut d = cards.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            x[d] += 1;
            if x[d] < cards[d] {
                break;
            }
            x[d] = 0;
        }
    }
}
