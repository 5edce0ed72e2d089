use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Two-class outcome: `d` (case) or `h` (control).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Class {
    Case,
    Control,
}

impl Class {
    /// `d → +1`, `h → −1`.
    pub fn sign(self) -> f64 {
        match self {
            Class::Case => 1.0,
            Class::Control => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Class::Case => "d",
            Class::Control => "h",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Outcome {
    TwoClass(Vec<Class>),
    Real(Vec<f64>),
}

impl Outcome {
    pub fn len(&self) -> usize {
        match self {
            Outcome::TwoClass(v) => v.len(),
            Outcome::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, row: usize) -> f64 {
        match self {
            Outcome::TwoClass(v) => v[row].sign(),
            Outcome::Real(v) => v[row],
        }
    }
}

/// Outcomes plus a row-major matrix of discrete explanatory values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledSample {
    outcome: Outcome,
    values: Vec<u32>,
    n_vars: usize,
    names: Vec<String>,
}

impl LabeledSample {
    pub fn from_flat(outcome: Outcome, values: Vec<u32>, names: Vec<String>) -> Result<Self> {
        if outcome.is_empty() {
            return Err(Error::Data("sample has no rows".into()));
        }
        let n_vars = names.len();
        if values.len() != outcome.len() * n_vars {
            return Err(Error::Data(format!(
                "{} values do not fill {} rows of {n_vars} variables",
                values.len(),
                outcome.len()
            )));
        }
        Ok(Self {
            outcome,
            values,
            n_vars,
            names,
        })
    }

    pub fn from_rows(outcome: Outcome, rows: &[Vec<u32>], names: Vec<String>) -> Result<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != names.len()) {
            return Err(Error::Data(format!(
                "row {i} has {} values, expected {}",
                r.len(),
                names.len()
            )));
        }
        Self::from_flat(outcome, rows.concat(), names)
    }

    /// Names `v1..vm` for `m` variables.
    pub fn default_names(m: usize) -> Vec<String> {
        (1..=m).map(|i| format!("v{i}")).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn outcome(&self) -> &Outcome {
        &self.outcome
    }

    pub fn classes(&self) -> Option<&[Class]> {
        match &self.outcome {
            Outcome::TwoClass(c) => Some(c),
            Outcome::Real(_) => None,
        }
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.n_vars..(i + 1) * self.n_vars]
    }

    pub fn value(&self, row: usize, var: usize) -> u32 {
        self.values[row * self.n_vars + var]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// `(n_d, n_h)`; `None` for real-valued outcomes.
    pub fn class_totals(&self) -> Option<(u64, u64)> {
        self.classes().map(|c| {
            let n_d = c.iter().filter(|c| **c == Class::Case).count() as u64;
            (n_d, c.len() as u64 - n_d)
        })
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn resolve_subset<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.var_index(n.as_ref())
                    .ok_or_else(|| Error::Data(format!("unknown variable {:?}", n.as_ref())))
            })
            .collect()
    }

    /// Rows reordered so that row `i` of the result is row `order[i]` of `self`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        let outcome = match &self.outcome {
            Outcome::TwoClass(c) => Outcome::TwoClass(order.iter().map(|&i| c[i]).collect()),
            Outcome::Real(v) => Outcome::Real(order.iter().map(|&i| v[i]).collect()),
        };
        let values = order.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self {
            outcome,
            values,
            n_vars: self.n_vars,
            names: self.names.clone(),
        }
    }

    pub(crate) fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::contract("variable subset is empty"));
        }
        if let Some(bad) = subset.iter().find(|&&j| j >= self.n_vars) {
            return Err(Error::contract(format!(
                "variable index {bad} out of range ({} variables)",
                self.n_vars
            )));
        }
        Ok(())
    }
}

/// Case and control counts in one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CellCount {
    pub d: u64,
    pub h: u64,
}

impl CellCount {
    pub fn total(&self) -> u64 {
        self.d + self.h
    }
}

/// Sparse joint-value table of a variable subset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CellCounts {
    cells: BTreeMap<Vec<u32>, CellCount>,
    n_d: u64,
    n_h: u64,
}

impl CellCounts {
    pub fn from_cells<I>(cells: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, CellCount)>,
    {
        let mut out = Self::default();
        for (key, c) in cells {
            out.add(key, c);
        }
        out
    }

    fn add(&mut self, key: Vec<u32>, c: CellCount) {
        if c.total() == 0 {
            return;
        }
        let slot = self.cells.entry(key).or_default();
        slot.d += c.d;
        slot.h += c.h;
        self.n_d += c.d;
        self.n_h += c.h;
    }

    pub fn record(&mut self, key: Vec<u32>, class: Class) {
        let c = match class {
            Class::Case => CellCount { d: 1, h: 0 },
            Class::Control => CellCount { d: 0, h: 1 },
        };
        self.add(key, c);
    }

    /// Adds another table over the same subset; order does not matter.
    pub fn merge(&mut self, other: CellCounts) {
        for (k, c) in other.cells {
            self.add(k, c);
        }
    }

    pub fn cells(&self) -> &BTreeMap<Vec<u32>, CellCount> {
        &self.cells
    }

    pub fn get(&self, key: &[u32]) -> CellCount {
        self.cells.get(key).copied().unwrap_or_default()
    }

    pub fn n_d(&self) -> u64 {
        self.n_d
    }

    pub fn n_h(&self) -> u64 {
        self.n_h
    }

    pub fn total(&self) -> u64 {
        self.n_d + self.n_h
    }

    pub fn is_balanced(&self) -> bool {
        self.n_d == self.n_h
    }

    /// Per-class sample size `n` of a balanced table.
    pub fn balanced_n(&self) -> Result<u64> {
        if !self.is_balanced() {
            return Err(Error::contract(format!(
                "estimator needs equal class sizes, got n_d = {} and n_h = {}; subsample or reweight first",
                self.n_d, self.n_h
            )));
        }
        if self.n_d == 0 {
            return Err(Error::Degenerate("table has no observations".into()));
        }
        Ok(self.n_d)
    }
}
