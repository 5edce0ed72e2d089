//! Sample statistics over cell tables: the I and J scores, the training,
//! bias-corrected and out-of-sample estimates of the ideal error rate, and
//! their exact expected biases.

mod sample;

use std::collections::BTreeMap;

use serde::Serialize;

pub use self::sample::{CellCount, CellCounts, Class, LabeledSample, Outcome};
use crate::disease_model::{error_bound, CellClass, CostPriorSpec, DiseaseModel, OracleParams};
use crate::error::{Error, Result};
use crate::exact_binomial::{neg_rel_bias, tie_half_prob};

/// Known class-conditional probabilities `(f_d(x), f_h(x))` of a cell.
///
/// Each class distribution is assumed to sum to one over all cells.
pub trait CellDistribution {
    fn probs(&self, cell: &[u32]) -> (f64, f64);
}

/// Explicit table of `(f_d, f_h)`; cells not listed have probability zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExplicitDistribution(pub BTreeMap<Vec<u32>, (f64, f64)>);

impl CellDistribution for ExplicitDistribution {
    fn probs(&self, cell: &[u32]) -> (f64, f64) {
        self.0.get(cell).copied().unwrap_or((0.0, 0.0))
    }
}

impl ExplicitDistribution {
    pub fn cell_classes(&self) -> Vec<CellClass> {
        self.0
            .values()
            .map(|&(f_d, f_h)| CellClass {
                f_d,
                f_h,
                multiplicity: 1.0,
            })
            .collect()
    }
}

/// Joint-value table of `subset` in a single pass over the rows.
pub fn cell_counts(sample: &LabeledSample, subset: &[usize]) -> Result<CellCounts> {
    sample.check_subset(subset)?;
    let classes = sample
        .classes()
        .ok_or_else(|| Error::contract("cell counts need two-class labels"))?;
    let mut counts = CellCounts::default();
    for (i, &class) in classes.iter().enumerate() {
        let row = sample.row(i);
        counts.record(subset.iter().map(|&j| row[j]).collect(), class);
    }
    Ok(counts)
}

/// Per-cell `(n_x, Σ y')` where `y'` is the outcome standardised to mean 0
/// and variance 1 (divisor `n_0`).
fn standardized_cell_sums(sample: &LabeledSample, subset: &[usize]) -> Result<(f64, Vec<(f64, f64)>)> {
    sample.check_subset(subset)?;
    let outcome = sample.outcome();
    let n0 = sample.n_rows() as f64;
    let mean = (0..sample.n_rows()).map(|i| outcome.value(i)).sum::<f64>() / n0;
    let var = (0..sample.n_rows())
        .map(|i| (outcome.value(i) - mean).powi(2))
        .sum::<f64>()
        / n0;
    if var <= 0.0 {
        return Err(Error::Degenerate("outcome is constant; I and J are undefined".into()));
    }
    let sd = var.sqrt();
    let mut cells: BTreeMap<Vec<u32>, (f64, f64)> = BTreeMap::new();
    for i in 0..sample.n_rows() {
        let row = sample.row(i);
        let key: Vec<u32> = subset.iter().map(|&j| row[j]).collect();
        let slot = cells.entry(key).or_default();
        slot.0 += 1.0;
        slot.1 += (outcome.value(i) - mean) / sd;
    }
    Ok((n0, cells.into_values().collect()))
}

/// `I = n_0⁻¹ Σ_x (n_x Ȳ_x)²` on the standardised outcome.
pub fn i_score(sample: &LabeledSample, subset: &[usize]) -> Result<f64> {
    let (n0, cells) = standardized_cell_sums(sample, subset)?;
    Ok(cells.iter().map(|(_, s)| s * s).sum::<f64>() / n0)
}

/// `J = n_0⁻¹ Σ_x n_x Ȳ_x²`, the explained-variance fraction.
pub fn j_score(sample: &LabeledSample, subset: &[usize]) -> Result<f64> {
    let (n0, cells) = standardized_cell_sums(sample, subset)?;
    Ok(cells.iter().map(|(n, s)| s * s / n).sum::<f64>() / n0)
}

impl CellCounts {
    /// Mean and variance of the ±1 outcome.
    fn outcome_moments(&self) -> Result<(f64, f64, f64)> {
        if self.n_d() == 0 || self.n_h() == 0 {
            return Err(Error::Degenerate("only one outcome class present".into()));
        }
        let n0 = self.total() as f64;
        let mean = (self.n_d() as f64 - self.n_h() as f64) / n0;
        Ok((n0, mean, 1.0 - mean * mean))
    }

    /// I score from counts with `d = +1`, `h = −1`; reduces to
    /// `0.5 n⁻¹ Σ (n_dx − n_hx)²` for balanced tables.
    pub fn i_score(&self) -> Result<f64> {
        let (n0, mean, var) = self.outcome_moments()?;
        let sum: f64 = self
            .cells()
            .values()
            .map(|c| (c.d as f64 - c.h as f64 - c.total() as f64 * mean).powi(2))
            .sum();
        Ok(sum / (n0 * var))
    }

    pub fn j_score(&self) -> Result<f64> {
        let (n0, mean, var) = self.outcome_moments()?;
        let sum: f64 = self
            .cells()
            .values()
            .map(|c| (c.d as f64 - c.h as f64 - c.total() as f64 * mean).powi(2) / c.total() as f64)
            .sum();
        Ok(sum / (n0 * var))
    }

    /// `0.5 Σ (n_dx/n_d − n_hx/n_h)²`, equal to `I/n` when balanced.
    pub fn theta_i_plugin(&self) -> Result<f64> {
        self.outcome_moments()?;
        let (nd, nh) = (self.n_d() as f64, self.n_h() as f64);
        Ok(0.5
            * self
                .cells()
                .values()
                .map(|c| (c.d as f64 / nd - c.h as f64 / nh).powi(2))
                .sum::<f64>())
    }
}

/// Training estimate `0.5 Σ_x min(n_dx, n_hx) / n` of a balanced table.
pub fn theta_e_train(counts: &CellCounts) -> Result<f64> {
    let n = counts.balanced_n()? as f64;
    Ok(0.5 * counts.cells().values().map(|c| c.d.min(c.h) as f64).sum::<f64>() / n)
}

/// Exact expected bias of the training estimate,
/// `−0.5 Σ_x min(f_d, f_h)·b(n, n·max(f_d, f_h), max/min)`.
pub fn bias_training(classes: &[CellClass], n: u64) -> Result<f64> {
    let mut total = 0.0;
    for c in classes {
        let (lo, hi) = (c.f_d.min(c.f_h), c.f_d.max(c.f_h));
        if lo <= 0.0 {
            continue;
        }
        total += c.multiplicity * lo * neg_rel_bias(n, n as f64 * hi, hi / lo)?;
    }
    Ok(-0.5 * total)
}

/// Exact expected bias of the out-of-sample estimate,
/// `0.5 Σ_x min(f_d, f_h)·(r − 1)·a(n, λ, r)`.
pub fn bias_oos(classes: &[CellClass], n: u64) -> Result<f64> {
    let mut total = 0.0;
    for c in classes {
        let (lo, hi) = (c.f_d.min(c.f_h), c.f_d.max(c.f_h));
        if lo <= 0.0 || hi == lo {
            continue;
        }
        let r = hi / lo;
        total += c.multiplicity * lo * (r - 1.0) * tie_half_prob(n, n as f64 * hi, r)?;
    }
    Ok(0.5 * total)
}

/// Source of `λ(x)` and `r(x)` in the corrected training estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionMode {
    /// True class probabilities.
    Oracle,
    /// `λ̂ = max(n_dx, n_hx)`, `r̂ = max/min` from the counts.
    #[default]
    Plugin,
}

/// How the per-cell relative bias `b` is applied to `min(n_dx, n_hx)/n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionForm {
    /// Multiply by `1 − b`, as the formula is printed.
    Literal,
    /// Divide by `max(1 − b, 0.05)`, which removes the expected shrinkage.
    #[default]
    Inverse,
}

/// Floor on `1 − b` in the inverse form.
pub const INVERSE_DIVISOR_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedEstimate {
    pub value: f64,
    /// No cell had both a case and a control, so nothing was corrected.
    pub coverage_warning: bool,
}

/// Bias-corrected training estimate over cells with `min(n_dx, n_hx) > 0`.
pub fn theta_e_train_corrected(
    counts: &CellCounts,
    truth: Option<&dyn CellDistribution>,
    mode: CorrectionMode,
    form: CorrectionForm,
) -> Result<CorrectedEstimate> {
    let n = counts.balanced_n()?;
    let nf = n as f64;
    let truth = match (mode, truth) {
        (CorrectionMode::Oracle, None) => {
            return Err(Error::contract("oracle correction needs the true cell distributions"))
        }
        (CorrectionMode::Oracle, t) => t,
        (CorrectionMode::Plugin, _) => None,
    };
    let mut sum = 0.0;
    let mut used = 0usize;
    for (key, c) in counts.cells() {
        let lo = c.d.min(c.h);
        if lo == 0 {
            continue;
        }
        used += 1;
        let b = match truth {
            Some(t) => {
                let (fd, fh) = t.probs(key);
                let (flo, fhi) = (fd.min(fh), fd.max(fh));
                if flo > 0.0 {
                    neg_rel_bias(n, nf * fhi, fhi / flo)?
                } else {
                    0.0
                }
            }
            None => {
                let hi = c.d.max(c.h) as f64;
                neg_rel_bias(n, hi, hi / lo as f64)?
            }
        };
        let term = lo as f64 / nf;
        sum += match form {
            CorrectionForm::Literal => term * (1.0 - b),
            CorrectionForm::Inverse => term / (1.0 - b).max(INVERSE_DIVISOR_FLOOR),
        };
    }
    Ok(CorrectedEstimate {
        value: 0.5 * sum,
        coverage_warning: used == 0,
    })
}

/// How the out-of-sample rule decides cells with `n_dx = n_hx`, including
/// cells never observed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Either class with probability 1/2.
    #[default]
    Half,
    /// Always `h`; `d` is chosen only when `n_dx > n_hx`.
    Control,
}

/// Expected error, under the true distributions, of the rule that picks the
/// majority class of each cell (ties split evenly; unobserved cells are ties).
pub fn theta_e_oos_oracle(counts: &CellCounts, truth: Option<&dyn CellDistribution>) -> Result<f64> {
    theta_e_oos_oracle_with(counts, truth, TieRule::Half)
}

pub fn theta_e_oos_oracle_with(
    counts: &CellCounts,
    truth: Option<&dyn CellDistribution>,
    ties: TieRule,
) -> Result<f64> {
    let truth = truth.ok_or_else(|| Error::contract("out-of-sample estimate needs the true cell distributions"))?;
    // every cell starts as a tie; summed over all cells that gives 1/2
    // under either rule, and observed cells then adjust it
    let mut value = 0.5;
    for (key, c) in counts.cells() {
        let (fd, fh) = truth.probs(key);
        match ties {
            TieRule::Half => {
                if c.d < c.h {
                    value += 0.25 * (fd - fh);
                } else if c.d > c.h {
                    value += 0.25 * (fh - fd);
                }
            }
            TieRule::Control => {
                if c.d > c.h {
                    value += 0.5 * (fh - fd);
                }
            }
        }
    }
    Ok(value.max(0.0))
}

/// Error rate of the majority-cell rule learned from `train`, evaluated on
/// the rows of `test`. Ties and unseen cells count 1/2. With both classes
/// present the two class-wise error rates are averaged.
pub fn holdout_error(train: &CellCounts, test: &LabeledSample, subset: &[usize]) -> Result<f64> {
    test.check_subset(subset)?;
    let classes = test
        .classes()
        .ok_or_else(|| Error::contract("holdout error needs two-class labels"))?;
    if classes.is_empty() {
        return Err(Error::contract("empty test set"));
    }
    let mut err = [0.0f64; 2];
    let mut seen = [0usize; 2];
    let mut key = Vec::with_capacity(subset.len());
    for (i, &class) in classes.iter().enumerate() {
        key.clear();
        key.extend(subset.iter().map(|&j| test.value(i, j)));
        let c = train.get(&key);
        let e = match (c.d.cmp(&c.h), class) {
            (std::cmp::Ordering::Equal, _) => 0.5,
            (std::cmp::Ordering::Greater, Class::Case) | (std::cmp::Ordering::Less, Class::Control) => 0.0,
            _ => 1.0,
        };
        let slot = (class == Class::Control) as usize;
        err[slot] += e;
        seen[slot] += 1;
    }
    Ok(if seen[0] > 0 && seen[1] > 0 {
        0.5 * (err[0] / seen[0] as f64 + err[1] / seen[1] as f64)
    } else {
        (err[0] + err[1]) / classes.len() as f64
    })
}

/// `Σ_x (π_d c_d f̂_d(x) − π_h c_h f̂_h(x))²` with `f̂ = counts / class total`.
pub fn i_score_weighted(counts: &CellCounts, spec: &CostPriorSpec) -> Result<f64> {
    if counts.n_d() == 0 || counts.n_h() == 0 {
        return Err(Error::Degenerate("only one outcome class present".into()));
    }
    let wd = spec.pi_d * spec.c_d / counts.n_d() as f64;
    let wh = spec.pi_h * spec.c_h / counts.n_h() as f64;
    Ok(counts
        .cells()
        .values()
        .map(|c| (wd * c.d as f64 - wh * c.h as f64).powi(2))
        .sum())
}

/// Choices left open by the estimator definitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EstimatorSettings {
    pub mode: CorrectionMode,
    pub form: CorrectionForm,
    pub oos_ties: TieRule,
}

impl EstimatorSettings {
    /// Settings under which the published bias tables were simulated:
    /// out-of-sample ties, unobserved cells included, decided as `h`.
    pub fn published() -> Self {
        Self {
            oos_ties: TieRule::Control,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub variables: Vec<String>,
    pub n_d: u64,
    pub n_h: u64,
    pub cells_observed: usize,
    pub i_score: f64,
    pub j_score: f64,
    pub theta_i_plugin: f64,
    pub bound_plugin: f64,
    pub theta_e_train: Option<f64>,
    pub theta_e_train_corrected: Option<f64>,
    pub theta_e_oos: Option<f64>,
    pub theta_e_oos_corrected: Option<f64>,
    pub bias_training: Option<f64>,
    pub bias_oos: Option<f64>,
    pub oracle: Option<OracleParams>,
    pub weighted_i: Option<f64>,
    pub settings: EstimatorSettings,
    pub warnings: Vec<String>,
}

/// Everything computable for one variable subset. With a model, the subset
/// must list the model's SNP columns in model order, and the oracle
/// quantities are filled in.
pub fn estimate_report(
    sample: &LabeledSample,
    subset: &[usize],
    model: Option<&DiseaseModel>,
    costs: Option<&CostPriorSpec>,
    settings: EstimatorSettings,
) -> Result<EstimateReport> {
    let EstimatorSettings { mode, form, oos_ties } = settings;
    let counts = cell_counts(sample, subset)?;
    let theta_i_plugin = counts.theta_i_plugin()?;
    let mut warnings = Vec::new();
    let dist = match model {
        Some(m) if m.n_snps() != subset.len() => {
            return Err(Error::contract(format!(
                "model has {} SNPs but the subset has {} variables",
                m.n_snps(),
                subset.len()
            )))
        }
        Some(m) => Some(m.distribution()?),
        None => None,
    };
    if mode == CorrectionMode::Oracle && dist.is_none() {
        return Err(Error::contract("oracle correction mode needs a model"));
    }
    let truth = dist.as_ref().map(|d| d as &dyn CellDistribution);

    let (theta_e_train, corrected) = if counts.is_balanced() {
        let corrected = theta_e_train_corrected(&counts, truth, mode, form)?;
        if corrected.coverage_warning {
            warnings.push("no cell holds both classes; corrected estimate is 0".into());
        }
        (Some(theta_e_train(&counts)?), Some(corrected.value))
    } else {
        warnings.push(format!(
            "unbalanced classes (n_d = {}, n_h = {}): training estimates skipped",
            counts.n_d(),
            counts.n_h()
        ));
        (None, None)
    };

    let (mut oracle, mut theta_e_oos, mut bias_t, mut bias_o, mut oos_corrected) = (None, None, None, None, None);
    if let (Some(m), Some(truth)) = (model, truth) {
        oracle = Some(m.oracle_params()?);
        let oos = theta_e_oos_oracle_with(&counts, Some(truth), oos_ties)?;
        theta_e_oos = Some(oos);
        if counts.is_balanced() {
            let n = counts.n_d();
            let classes = m.cell_classes()?;
            let bo = bias_oos(&classes, n)?;
            bias_t = Some(bias_training(&classes, n)?);
            bias_o = Some(bo);
            oos_corrected = Some(oos - bo);
        }
    }

    Ok(EstimateReport {
        variables: subset.iter().map(|&j| sample.names()[j].clone()).collect(),
        n_d: counts.n_d(),
        n_h: counts.n_h(),
        cells_observed: counts.cells().len(),
        i_score: counts.i_score()?,
        j_score: counts.j_score()?,
        theta_i_plugin,
        bound_plugin: error_bound(theta_i_plugin.min(1.0))?,
        theta_e_train,
        theta_e_train_corrected: corrected,
        theta_e_oos,
        theta_e_oos_corrected: oos_corrected,
        bias_training: bias_t,
        bias_oos: bias_o,
        oracle,
        weighted_i: costs.map(|c| i_score_weighted(&counts, c)).transpose()?,
        settings,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::single_example;
    use proptest::prelude::*;

    fn toy() -> LabeledSample {
        use Class::*;
        LabeledSample::from_rows(
            Outcome::TwoClass(vec![Case, Case, Control, Control]),
            &[vec![1], vec![1], vec![0], vec![0]],
            vec!["x".into()],
        )
        .unwrap()
    }

    fn table(cells: &[(&[u32], u64, u64)]) -> CellCounts {
        CellCounts::from_cells(cells.iter().map(|(k, d, h)| (k.to_vec(), CellCount { d: *d, h: *h })))
    }

    #[test]
    fn toy_cell_counts() {
        let c = cell_counts(&toy(), &[0]).unwrap();
        assert_eq!(c.get(&[1]), CellCount { d: 2, h: 0 });
        assert_eq!(c.get(&[0]), CellCount { d: 0, h: 2 });
        assert_eq!(c.get(&[2]), CellCount::default());
        assert_eq!((c.n_d(), c.n_h()), (2, 2));
        assert!(cell_counts(&toy(), &[]).is_err());
        assert!(cell_counts(&toy(), &[3]).is_err());
    }

    #[test]
    fn toy_scores() {
        let s = toy();
        assert!((i_score(&s, &[0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((j_score(&s, &[0]).unwrap() - 1.0).abs() < 1e-12);
        let c = cell_counts(&s, &[0]).unwrap();
        assert!((c.i_score().unwrap() - 2.0).abs() < 1e-12);
        assert!((c.j_score().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(theta_e_train(&c).unwrap(), 0.0);
    }

    #[test]
    fn flat_cells_give_zero_i_and_half_error() {
        let c = table(&[(&[0], 3, 3), (&[1], 5, 5)]);
        assert_eq!(c.i_score().unwrap(), 0.0);
        assert_eq!(theta_e_train(&c).unwrap(), 0.5);
    }

    #[test]
    fn single_cell_j_is_zero() {
        use Class::*;
        let s = LabeledSample::from_rows(
            Outcome::TwoClass(vec![Case, Control, Case]),
            &[vec![0], vec![0], vec![0]],
            vec!["x".into()],
        )
        .unwrap();
        assert!(j_score(&s, &[0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn standardisation_invariance() {
        let rows: Vec<Vec<u32>> = (0..12).map(|i| vec![i % 3, i % 2]).collect();
        let y: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 - 1.3).collect();
        let a = LabeledSample::from_rows(Outcome::Real(y.clone()), &rows, LabeledSample::default_names(2)).unwrap();
        let b = LabeledSample::from_rows(
            Outcome::Real(y.iter().map(|v| 3.0 * v + 7.0).collect()),
            &rows,
            LabeledSample::default_names(2),
        )
        .unwrap();
        for subset in [&[0usize][..], &[1], &[0, 1]] {
            assert!((i_score(&a, subset).unwrap() - i_score(&b, subset).unwrap()).abs() < 1e-12);
            assert!((j_score(&a, subset).unwrap() - j_score(&b, subset).unwrap()).abs() < 1e-12);
        }
        let constant =
            LabeledSample::from_rows(Outcome::Real(vec![1.0; 12]), &rows, LabeledSample::default_names(2)).unwrap();
        assert!(matches!(i_score(&constant, &[0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn unbalanced_training_estimate_rejected() {
        let c = table(&[(&[0], 3, 1), (&[1], 1, 1)]);
        assert!(matches!(theta_e_train(&c), Err(Error::Contract(_))));
        assert!(theta_e_train_corrected(&c, None, CorrectionMode::Plugin, CorrectionForm::Inverse).is_err());
    }

    #[test]
    fn corrected_estimate_coverage_warning() {
        let c = table(&[(&[0], 2, 0), (&[1], 0, 2)]);
        let est = theta_e_train_corrected(&c, None, CorrectionMode::Plugin, CorrectionForm::Inverse).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.coverage_warning);
        assert!(theta_e_train_corrected(&c, None, CorrectionMode::Oracle, CorrectionForm::Inverse).is_err());
    }

    #[test]
    fn corrected_forms_bracket_training_estimate() {
        let c = table(&[(&[0], 5, 2), (&[1], 1, 3), (&[2], 4, 5)]);
        let raw = theta_e_train(&c).unwrap();
        let lit = theta_e_train_corrected(&c, None, CorrectionMode::Plugin, CorrectionForm::Literal).unwrap();
        let inv = theta_e_train_corrected(&c, None, CorrectionMode::Plugin, CorrectionForm::Inverse).unwrap();
        assert!(lit.value <= raw && raw <= inv.value);
        // hand evaluation of the inverse form
        let expect = 0.5
            * [(5.0f64, 2.0f64), (3.0, 1.0), (5.0, 4.0)]
                .iter()
                .map(|&(hi, lo)| {
                    let b = neg_rel_bias(10, hi, hi / lo).unwrap();
                    lo / 10.0 / (1.0 - b).max(INVERSE_DIVISOR_FLOOR)
                })
                .sum::<f64>();
        assert!((inv.value - expect).abs() < 1e-15);
    }

    #[test]
    fn out_of_sample_estimate() {
        // decision rule agrees with the oracle rule everywhere
        let mut truth = ExplicitDistribution::default();
        truth.0.insert(vec![0], (0.7, 0.2));
        truth.0.insert(vec![1], (0.3, 0.8));
        let c = table(&[(&[0], 6, 2), (&[1], 4, 8)]);
        let oos = theta_e_oos_oracle(&c, Some(&truth)).unwrap();
        assert!((oos - 0.25).abs() < 1e-12);
        // all ties
        let tied = table(&[(&[0], 3, 3)]);
        assert!((theta_e_oos_oracle(&tied, Some(&truth)).unwrap() - 0.5).abs() < 1e-12);
        assert!(theta_e_oos_oracle(&c, None).is_err());
        // ties and unseen cells go to h: errors are f_d on cell 1 and f_h on cell 0
        let c = table(&[(&[0], 6, 2), (&[1], 4, 4)]);
        let oos = theta_e_oos_oracle_with(&c, Some(&truth), TieRule::Control).unwrap();
        assert!((oos - 0.5 * (0.2 + 0.3)).abs() < 1e-12);
        let oos = theta_e_oos_oracle_with(&table(&[(&[0], 3, 3)]), Some(&truth), TieRule::Control).unwrap();
        assert!((oos - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bias_formulas() {
        let classes = single_example().cell_classes().unwrap();
        let be = bias_training(&classes, 100).unwrap();
        assert!((be + 0.058).abs() < 1e-3, "{be}");
        let bo = bias_oos(&classes, 100).unwrap();
        assert!((bo - 0.132).abs() < 1e-3, "{bo}");

        let equal = [
            CellClass {
                f_d: 0.4,
                f_h: 0.4,
                multiplicity: 1.0,
            },
            CellClass {
                f_d: 0.6,
                f_h: 0.6,
                multiplicity: 1.0,
            },
        ];
        let be = bias_training(&equal, 50).unwrap();
        let direct = -0.5 * (0.4 * neg_rel_bias(50, 20.0, 1.0).unwrap() + 0.6 * neg_rel_bias(50, 30.0, 1.0).unwrap());
        assert!(be < 0.0 && (be - direct).abs() < 1e-15);
        assert_eq!(bias_oos(&equal, 50).unwrap(), 0.0);
    }

    #[test]
    fn holdout_rule() {
        let s = toy();
        let train = cell_counts(&s, &[0]).unwrap();
        assert_eq!(holdout_error(&train, &s, &[0]).unwrap(), 0.0);
        use Class::*;
        let unseen = LabeledSample::from_rows(
            Outcome::TwoClass(vec![Case, Control]),
            &[vec![2], vec![2]],
            vec!["x".into()],
        )
        .unwrap();
        assert_eq!(holdout_error(&train, &unseen, &[0]).unwrap(), 0.5);
    }

    #[test]
    fn weighted_i_relations() {
        let c = table(&[(&[0], 5, 2), (&[1], 1, 3), (&[2], 4, 5)]);
        let w = i_score_weighted(&c, &CostPriorSpec::symmetric()).unwrap();
        assert!((w - c.i_score().unwrap() / 20.0).abs() < 1e-15);
        let spec = CostPriorSpec::new(0.4, 0.6, 0.0, 2.0).unwrap();
        let w = i_score_weighted(&c, &spec).unwrap();
        let expect: f64 = [2.0f64, 3.0, 5.0].iter().map(|h| (1.2 * h / 10.0).powi(2)).sum();
        assert!((w - expect).abs() < 1e-15);
    }

    #[test]
    fn report_with_model() {
        let model = single_example();
        let s = crate::simulator::draw_case_control(&model, 100, 11, 0).unwrap();
        let subset: Vec<usize> = (0..6).collect();
        let r = estimate_report(&s, &subset, Some(&model), None, EstimatorSettings::default()).unwrap();
        assert!(r.theta_e_train.unwrap() <= 0.5);
        assert!(r.theta_e_oos.unwrap() >= 0.0);
        assert!((r.bias_training.unwrap() + 0.058).abs() < 1e-3);
        let sub: Vec<usize> = vec![0, 1];
        assert!(estimate_report(&s, &sub, Some(&model), None, EstimatorSettings::default()).is_err());
    }

    proptest! {
        #[test]
        fn balanced_counts_use_simple_formula(d in proptest::collection::vec(0u32..6, 1..12), seed in any::<u64>()) {
            // controls are a shuffle of the case counts, so the table is balanced
            let mut h = d.clone();
            let len = h.len();
            for i in 0..len {
                h.swap(i, (seed.rotate_left(i as u32) as usize) % len);
            }
            let cells: Vec<(u32, u32)> = d.into_iter().zip(h).collect();
            let nd: u32 = cells.iter().map(|c| c.0).sum();
            prop_assume!(nd > 0);
            let c = CellCounts::from_cells(cells.iter().enumerate().map(|(i, &(d, h))| (vec![i as u32], CellCount { d: d as u64, h: h as u64 })));
            let simple = 0.5 / nd as f64 * cells.iter().map(|&(d, h)| (d as f64 - h as f64).powi(2)).sum::<f64>();
            prop_assert!((c.i_score().unwrap() - simple).abs() < 1e-12);
            let te = theta_e_train(&c).unwrap();
            prop_assert!((0.0..=0.5).contains(&te));
        }

        #[test]
        fn counts_and_rows_agree(rows in proptest::collection::vec((0u32..3, 0u32..3, any::<bool>()), 2..60)) {
            let classes: Vec<Class> = rows.iter().map(|r| if r.2 { Class::Case } else { Class::Control }).collect();
            prop_assume!(classes.contains(&Class::Case) && classes.contains(&Class::Control));
            let x: Vec<Vec<u32>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
            let s = LabeledSample::from_rows(Outcome::TwoClass(classes), &x, LabeledSample::default_names(2)).unwrap();
            let c = cell_counts(&s, &[0, 1]).unwrap();
            prop_assert!((c.i_score().unwrap() - i_score(&s, &[0, 1]).unwrap()).abs() < 1e-9);
            prop_assert!((c.j_score().unwrap() - j_score(&s, &[0, 1]).unwrap()).abs() < 1e-9);
            // order and relabelling invariance
            let order: Vec<usize> = (0..s.n_rows()).rev().collect();
            let r = s.reordered(&order);
            prop_assert_eq!(cell_counts(&r, &[0, 1]).unwrap(), c.clone());
            let relabel: Vec<Vec<u32>> = x.iter().map(|v| vec![(v[0] + 1) % 3, 2 - v[1]]).collect();
            let s2 = LabeledSample::from_rows(s.outcome().clone(), &relabel, LabeledSample::default_names(2)).unwrap();
            prop_assert!((i_score(&s2, &[0, 1]).unwrap() - i_score(&s, &[0, 1]).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn sharded_counts_merge(rows in proptest::collection::vec((0u32..4, any::<bool>()), 1..40), split in 0usize..40) {
            let classes: Vec<Class> = rows.iter().map(|r| if r.1 { Class::Case } else { Class::Control }).collect();
            let x: Vec<Vec<u32>> = rows.iter().map(|r| vec![r.0]).collect();
            let s = LabeledSample::from_rows(Outcome::TwoClass(classes), &x, vec!["x".into()]).unwrap();
            let whole = cell_counts(&s, &[0]).unwrap();
            let k = split.min(rows.len());
            let mut a = CellCounts::default();
            let mut b = CellCounts::default();
            for i in 0..rows.len() {
                let target = if i < k { &mut a } else { &mut b };
                target.record(vec![s.value(i, 0)], s.classes().unwrap()[i]);
            }
            b.merge(a);
            prop_assert_eq!(b, whole);
        }
    }
}
