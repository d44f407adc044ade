//! Dense factor tables over sorted variable scopes.
//!
//! Layout: row-major over the scope in ascending variable-id order, with the
//! LAST scope variable fastest. All operations iterate cells in ascending
//! flat order, so sums are reproducible bit for bit.
//!
//! Numeric conventions: 0/0 = 0 and 0^0 = 1. x/0 with x != 0 and 0 raised
//! to a negative power are errors. NaN and +inf are forbidden in every
//! table; -inf is allowed only in factors marked log-domain (where it
//! represents log 0).

use crate::error::{Error, Result};
use crate::vars::{VarId, VariableTable};

/// Default cap on cells per materialized table (2^26).
pub const DEFAULT_CELL_CAP: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
    log_domain: bool,
}

impl Factor {
    /// Builds a linear-domain factor, validating scope order and values.
    pub fn from_values(vars: &VariableTable, scope: &[VarId], values: Vec<f64>) -> Result<Self> {
        let cards = Self::checked_scope(vars, scope)?;
        let f = Self {
            scope: scope.to_vec(),
            cards,
            values,
            log_domain: false,
        };
        f.check_shape_and_values()?;
        Ok(f)
    }

    /// Constant-filled factor. Shape-checked only; callers that materialize
    /// model-sized tables enforce their cell cap before calling this.
    pub fn constant(vars: &VariableTable, scope: &[VarId], value: f64) -> Result<Self> {
        let cards = Self::checked_scope(vars, scope)?;
        let len = table_len(&cards, u64::MAX)?;
        let f = Self {
            scope: scope.to_vec(),
            cards,
            values: vec![value; len],
            log_domain: false,
        };
        f.check_shape_and_values()?;
        Ok(f)
    }

    /// Builds a factor from values laid out over `listed` in the order
    /// given, last listed variable fastest. File formats list scopes in
    /// arbitrary order; storage is always over the sorted scope.
    pub fn from_permuted_layout(
        vars: &VariableTable,
        listed: &[VarId],
        values: Vec<f64>,
    ) -> Result<Self> {
        let mut scope = listed.to_vec();
        scope.sort_unstable();
        if scope.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!(
                "listed scope {listed:?} repeats a variable"
            )));
        }
        if scope.as_slice() == listed {
            return Self::from_values(vars, listed, values);
        }
        let listed_cards: Vec<usize> = listed
            .iter()
            .map(|&v| {
                if (v as usize) < vars.len() {
                    Ok(vars.cardinality(v))
                } else {
                    Err(Error::Validation(format!(
                        "scope variable {v} outside table of {} variables",
                        vars.len()
                    )))
                }
            })
            .collect::<Result<_>>()?;
        let len = table_len(&listed_cards, u64::MAX)?;
        if values.len() != len {
            return Err(Error::Validation(format!(
                "table has {} values, scope needs {len}",
                values.len()
            )));
        }
        let canon_cards = vars.scope_cards(&scope);
        let canon_strides = suffix_strides(&canon_cards);
        let listed_strides = suffix_strides(&listed_cards);
        // Canonical stride of each listed position.
        let cross: Vec<usize> = listed
            .iter()
            .map(|v| canon_strides[scope.binary_search(v).unwrap()])
            .collect();
        let mut out = vec![0.0; len];
        for (flat, &v) in values.iter().enumerate() {
            let mut canon = 0;
            for i in 0..listed.len() {
                canon += (flat / listed_strides[i]) % listed_cards[i] * cross[i];
            }
            out[canon] = v;
        }
        Self::from_values(vars, &scope, out)
    }

    /// Values re-laid-out over `listed` (a permutation of the scope), last
    /// listed variable fastest. Inverse of [`Factor::from_permuted_layout`].
    pub fn to_permuted_layout(&self, listed: &[VarId]) -> Result<Vec<f64>> {
        let mut sorted = listed.to_vec();
        sorted.sort_unstable();
        if sorted != self.scope {
            return Err(Error::Validation(format!(
                "listed scope {listed:?} is not a permutation of {:?}",
                self.scope
            )));
        }
        let listed_cards: Vec<usize> = listed
            .iter()
            .map(|v| self.cards[self.scope.binary_search(v).unwrap()])
            .collect();
        let listed_strides = suffix_strides(&listed_cards);
        let canon_strides = suffix_strides(&self.cards);
        let cross: Vec<usize> = listed
            .iter()
            .map(|v| canon_strides[self.scope.binary_search(v).unwrap()])
            .collect();
        let mut out = vec![0.0; self.values.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut canon = 0;
            for i in 0..listed.len() {
                canon += (flat / listed_strides[i]) % listed_cards[i] * cross[i];
            }
            *slot = self.values[canon];
        }
        Ok(out)
    }

    pub fn ones(vars: &VariableTable, scope: &[VarId]) -> Result<Self> {
        Self::constant(vars, scope, 1.0)
    }

    pub fn zeros(vars: &VariableTable, scope: &[VarId]) -> Result<Self> {
        Self::constant(vars, scope, 0.0)
    }

    fn checked_scope(vars: &VariableTable, scope: &[VarId]) -> Result<Vec<usize>> {
        if scope.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "scope {scope:?} is not sorted and unique"
            )));
        }
        if let Some(&v) = scope.iter().find(|&&v| (v as usize) >= vars.len()) {
            return Err(Error::Validation(format!(
                "scope variable {v} outside table of {} variables",
                vars.len()
            )));
        }
        Ok(vars.scope_cards(scope))
    }

    fn check_shape_and_values(&self) -> Result<()> {
        let len = table_len(&self.cards, u64::MAX)?;
        if self.values.len() != len {
            return Err(Error::Validation(format!(
                "table has {} values, scope needs {len}",
                self.values.len()
            )));
        }
        for (i, &v) in self.values.iter().enumerate() {
            if v.is_nan() || v == f64::INFINITY || (v == f64::NEG_INFINITY && !self.log_domain) {
                return Err(Error::Validation(format!(
                    "forbidden value {v} at cell {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_log_domain(&self) -> bool {
        self.log_domain
    }

    /// Strides of each scope position: last variable has stride 1.
    pub fn strides(&self) -> Vec<usize> {
        suffix_strides(&self.cards)
    }

    /// Flat index of a full assignment (indexed by variable id). The caller
    /// is responsible for domain validity.
    pub fn flat_of_full(&self, x: &[usize]) -> usize {
        let strides = suffix_strides(&self.cards);
        let mut flat = 0;
        for (i, &v) in self.scope.iter().enumerate() {
            debug_assert!(x[v as usize] < self.cards[i]);
            flat += x[v as usize] * strides[i];
        }
        flat
    }

    /// Value at a full assignment over all model variables.
    pub fn value_at_full(&self, x: &[usize]) -> f64 {
        self.values[self.flat_of_full(x)]
    }

    /// Sum of all cells, in ascending flat order.
    pub fn sum(&self) -> f64 {
        let mut acc = 0.0;
        for &v in &self.values {
            acc += v;
        }
        acc
    }

    /// Divides every cell by the total. Errors if the total is zero or not
    /// finite.
    pub fn normalized(&self) -> Result<Factor> {
        let total = self.sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Validation(format!(
                "cannot normalize factor with total {total}"
            )));
        }
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v /= total;
        }
        Ok(out)
    }

    /// In-place multiplication by a factor whose scope is contained in ours.
    pub fn mul_assign_sub(&mut self, other: &Factor) -> Result<()> {
        check_shared_cards(self, other)?;
        if !crate::chordal::is_subset(&other.scope, &self.scope) {
            return Err(Error::ScopeNotContained(format!(
                "{:?} not within {:?}",
                other.scope, self.scope
            )));
        }
        let sub = mapped_strides(&self.scope, &other.scope, &other.cards);
        let mut odo = Odometer::new(&self.cards, &sub);
        for cell in 0..self.values.len() {
            self.values[cell] *= other.values[odo.offset()];
            odo.advance();
        }
        Ok(())
    }

    /// Pointwise multiplication over the union scope, subject to a cell cap.
    pub fn multiply_capped(&self, other: &Factor, cap: u64) -> Result<Factor> {
        check_shared_cards(self, other)?;
        let (scope, cards) = union_scope(self, other);
        let len = table_len(&cards, cap)?;
        let sa = mapped_strides(&scope, &self.scope, &self.cards);
        let sb = mapped_strides(&scope, &other.scope, &other.cards);
        let mut values = vec![0.0; len];
        let mut oa = Odometer::new(&cards, &sa);
        let mut ob = Odometer::new(&cards, &sb);
        for v in values.iter_mut() {
            *v = self.values[oa.offset()] * other.values[ob.offset()];
            oa.advance();
            ob.advance();
        }
        Ok(Factor {
            scope,
            cards,
            values,
            log_domain: self.log_domain || other.log_domain,
        })
    }

    pub fn multiply(&self, other: &Factor) -> Result<Factor> {
        self.multiply_capped(other, DEFAULT_CELL_CAP)
    }

    /// Sums out everything not in `keep`. `keep` must be a sorted subset of
    /// the scope. Accumulation visits input cells in ascending flat order.
    pub fn marginalize(&self, keep: &[VarId]) -> Result<Factor> {
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "marginalization target {keep:?} is not sorted and unique"
            )));
        }
        if !crate::chordal::is_subset(keep, &self.scope) {
            return Err(Error::ScopeNotContained(format!(
                "{keep:?} not within {:?}",
                self.scope
            )));
        }
        let keep_cards: Vec<usize> = keep
            .iter()
            .map(|v| self.cards[self.scope.binary_search(v).unwrap()])
            .collect();
        let out_len = table_len(&keep_cards, u64::MAX)?;
        let so = mapped_strides(&self.scope, keep, &keep_cards);
        let mut values = vec![0.0; out_len];
        let mut odo = Odometer::new(&self.cards, &so);
        for cell in 0..self.values.len() {
            values[odo.offset()] += self.values[cell];
            odo.advance();
        }
        Ok(Factor {
            scope: keep.to_vec(),
            cards: keep_cards,
            values,
            log_domain: self.log_domain,
        })
    }

    /// Pointwise division by a factor over a contained scope. 0/0 is 0;
    /// x/0 with x != 0 is an error.
    pub fn divide(&self, other: &Factor) -> Result<Factor> {
        check_shared_cards(self, other)?;
        if !crate::chordal::is_subset(&other.scope, &self.scope) {
            return Err(Error::ScopeNotContained(format!(
                "{:?} not within {:?}",
                other.scope, self.scope
            )));
        }
        let sb = mapped_strides(&self.scope, &other.scope, &other.cards);
        let mut out = self.clone();
        let mut odo = Odometer::new(&self.cards, &sb);
        for cell in 0..out.values.len() {
            let num = out.values[cell];
            let den = other.values[odo.offset()];
            out.values[cell] = if den == 0.0 {
                if num == 0.0 {
                    0.0
                } else {
                    return Err(Error::DivisionByZero(cell));
                }
            } else {
                num / den
            };
            odo.advance();
        }
        Ok(out)
    }

    /// Raises every cell to `exponent`. 0^0 is 1; 0 to a negative power and
    /// negative bases are errors. Exponent 1 returns the table unchanged.
    pub fn elementwise_power(&self, exponent: f64) -> Result<Factor> {
        if self.log_domain {
            return Err(Error::Validation(
                "elementwise power of a log-domain factor".into(),
            ));
        }
        let mut out = self.clone();
        if exponent == 1.0 {
            return Ok(out);
        }
        for v in out.values.iter_mut() {
            if *v < 0.0 {
                return Err(Error::NegativeInput(*v));
            }
            if *v == 0.0 && exponent < 0.0 {
                return Err(Error::NegativePowerOfZero(exponent));
            }
            *v = v.powf(exponent);
        }
        Ok(out)
    }

    /// Natural log of every cell; zero cells map to -inf and the result is
    /// flagged log-domain. Negative cells are errors.
    pub fn elementwise_log(&self) -> Result<Factor> {
        if self.log_domain {
            return Err(Error::Validation("log of a log-domain factor".into()));
        }
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            if *v < 0.0 {
                return Err(Error::NegativeInput(*v));
            }
            *v = v.ln();
        }
        out.log_domain = true;
        Ok(out)
    }
}

/// Table length with a cap, guarding intermediate overflow.
pub(crate) fn table_len(cards: &[usize], cap: u64) -> Result<usize> {
    let mut cells: u128 = 1;
    for &c in cards {
        cells = cells.saturating_mul(c as u128);
        if cells > cap as u128 {
            return Err(Error::TableTooLarge { cells, cap });
        }
    }
    Ok(cells as usize)
}

pub(crate) fn suffix_strides(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1];
    }
    strides
}

/// For each position of `iter_scope`, the stride into a row-major table over
/// `sub_scope` (0 when the variable is absent there).
fn mapped_strides(iter_scope: &[VarId], sub_scope: &[VarId], sub_cards: &[usize]) -> Vec<usize> {
    let sub_strides = suffix_strides(sub_cards);
    iter_scope
        .iter()
        .map(|v| {
            sub_scope
                .binary_search(v)
                .map(|i| sub_strides[i])
                .unwrap_or(0)
        })
        .collect()
}

fn union_scope(a: &Factor, b: &Factor) -> (Vec<VarId>, Vec<usize>) {
    let mut scope = Vec::with_capacity(a.scope.len() + b.scope.len());
    let mut cards = Vec::with_capacity(scope.capacity());
    let (mut i, mut j) = (0, 0);
    while i < a.scope.len() || j < b.scope.len() {
        if j >= b.scope.len() || (i < a.scope.len() && a.scope[i] < b.scope[j]) {
            scope.push(a.scope[i]);
            cards.push(a.cards[i]);
            i += 1;
        } else if i >= a.scope.len() || b.scope[j] < a.scope[i] {
            scope.push(b.scope[j]);
            cards.push(b.cards[j]);
            j += 1;
        } else {
            scope.push(a.scope[i]);
            cards.push(a.cards[i]);
            i += 1;
            j += 1;
        }
    }
    (scope, cards)
}

fn check_shared_cards(a: &Factor, b: &Factor) -> Result<()> {
    let (mut i, mut j) = (0, 0);
    while i < a.scope.len() && j < b.scope.len() {
        match a.scope[i].cmp(&b.scope[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if a.cards[i] != b.cards[j] {
                    return Err(Error::VariableMismatch(format!(
                        "variable {} has cardinality {} vs {}",
                        a.scope[i], a.cards[i], b.cards[j]
                    )));
                }
                i += 1;
                j += 1;
            }
        }
    }
    Ok(())
}

/// Odometer over the cells of a row-major table, tracking the flat offset
/// into a second table via per-digit strides (0 for ignored digits).
struct Odometer<'a> {
    cards: &'a [usize],
    strides: &'a [usize],
    digits: Vec<usize>,
    offset: usize,
}

impl<'a> Odometer<'a> {
    fn new(cards: &'a [usize], strides: &'a [usize]) -> Self {
        Self {
            cards,
            strides,
            digits: vec![0; cards.len()],
            offset: 0,
        }
    }

    fn offset(&self) -> usize {
        self.offset
    }

    fn advance(&mut self) {
        for d in (0..self.cards.len()).rev() {
            self.digits[d] += 1;
            self.offset += self.strides[d];
            if self.digits[d] < self.cards[d] {
                return;
            }
            self.digits[d] = 0;
            self.offset -= self.strides[d] * self.cards[d];
        }
    }
}
