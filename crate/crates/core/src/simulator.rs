//! Seeded case-control sampling from a [`DiseaseModel`], the replicated
//! bias study, and curve data for the bias and predictivity figures.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`): the generator is seeded
//! with `seed_from_u64(seed)` and each `(rep, arm)` pair reads its own
//! stream, so results do not depend on thread count or execution order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{pair_family_model, single_family_model, StudyRow, PAIR_PENETRANCE, SINGLE_PENETRANCE};
use crate::disease_model::{error_bound, genotype_dist, DiseaseModel};
use crate::error::{Error, Result};
use crate::estimators::{
    bias_oos, bias_training, cell_counts, theta_e_oos_oracle_with, theta_e_train, theta_e_train_corrected,
    CellDistribution, Class, CorrectionForm, CorrectionMode, EstimatorSettings, LabeledSample, Outcome, TieRule,
};
use crate::exact_binomial::{log_space, neg_rel_bias, tie_half_prob};

/// Generator for replicate `rep`, arm 0 (cases) or 1 (controls).
pub fn stream_rng(seed: u64, rep: u64, arm: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((rep << 1) | (arm & 1));
    rng
}

/// Seed for row `index` of a multi-row study.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - index);
    rng.next_u64()
}

pub fn snp_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("snp{i}")).collect()
}

/// `n` cases followed by `n` controls. The influential tuple of each row is
/// drawn from its class-conditional distribution, the other SNPs from their
/// genotype distributions.
pub fn draw_case_control(model: &DiseaseModel, n: usize, seed: u64, rep: u64) -> Result<LabeledSample> {
    if n == 0 {
        return Err(Error::contract("per-class sample size must be at least 1"));
    }
    let tables = model.conditional_tables()?;
    let m = model.n_snps();
    let k = model.influential().len();
    let tuple_digits: Vec<Vec<u32>> = (0..tables.f_u.len())
        .map(|i| crate::disease_model::tuple_digits(i, k))
        .collect();
    let genotype: Vec<WeightedIndex<f64>> = model
        .maf()
        .iter()
        .map(|&p| Ok(WeightedIndex::new(genotype_dist(p)?).expect("valid genotype weights")))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(2 * n * m);
    let mut classes = Vec::with_capacity(2 * n);
    for (arm, (class, f_u)) in [
        (Class::Case, &tables.f_u_given_d),
        (Class::Control, &tables.f_u_given_h),
    ]
    .into_iter()
    .enumerate()
    {
        let tuples = WeightedIndex::new(f_u.iter().copied())
            .map_err(|e| Error::Degenerate(format!("class {class} has no mass: {e}")))?;
        let mut rng = stream_rng(seed, rep, arm as u64);
        let mut row = vec![0u32; m];
        for _ in 0..n {
            let u = &tuple_digits[tuples.sample(&mut rng)];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = genotype[j].sample(&mut rng) as u32;
            }
            for (&snp, &g) in model.influential().iter().zip(u) {
                row[snp] = g;
            }
            values.extend_from_slice(&row);
            classes.push(class);
        }
    }
    LabeledSample::from_flat(Outcome::TwoClass(classes), values, snp_names(m))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub model: DiseaseModel,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub mode: CorrectionMode,
    pub form: CorrectionForm,
    pub oos_ties: TieRule,
}

impl SimConfig {
    pub fn new(model: DiseaseModel, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            reps,
            seed,
            mode: CorrectionMode::default(),
            form: CorrectionForm::default(),
            oos_ties: TieRule::default(),
        }
    }
}

/// Analytic and replicated quantities of one bias-study row. Empirical
/// biases are estimate minus `θ_e`; `b` is reported as the positive
/// `−B_e`, `b_o` as `B_eo`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepSummary {
    pub n: usize,
    pub reps: usize,
    pub theta_e: f64,
    pub b: f64,
    pub b_o: f64,
    pub mean_b: f64,
    pub sd_b: f64,
    pub mean_b1: f64,
    pub sd_b1: f64,
    pub mean_bo: f64,
    pub sd_bo: f64,
    pub theta_i0: f64,
    pub bound: f64,
    /// Fewer than two replicates, so the standard deviations are 0 by convention.
    pub sd_undefined: bool,
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Training, corrected and out-of-sample errors of one replicate.
fn one_rep(config: &SimConfig, truth: &dyn CellDistribution, subset: &[usize], rep: u64) -> Result<[f64; 3]> {
    let sample = draw_case_control(&config.model, config.n, config.seed, rep)?;
    let counts = cell_counts(&sample, subset)?;
    let train = theta_e_train(&counts)?;
    let corrected = theta_e_train_corrected(&counts, Some(truth), config.mode, config.form)?.value;
    let oos = theta_e_oos_oracle_with(&counts, Some(truth), config.oos_ties)?;
    Ok([train, corrected, oos])
}

pub fn replicate_bias_study(config: &SimConfig) -> Result<RepSummary> {
    if config.n == 0 || config.reps == 0 {
        return Err(Error::contract("bias study needs n >= 1 and reps >= 1"));
    }
    let model = &config.model;
    let oracle = model.oracle_params()?;
    let classes = model.cell_classes()?;
    let n = config.n as u64;
    let b = -bias_training(&classes, n)?;
    let b_o = bias_oos(&classes, n)?;
    let dist = model.distribution()?;
    let subset: Vec<usize> = (0..model.n_snps()).collect();
    let reps: Vec<[f64; 3]> = (0..config.reps as u64)
        .into_par_iter()
        .map(|rep| one_rep(config, &dist, &subset, rep))
        .collect::<Result<_>>()?;
    let column = |c: usize| -> Vec<f64> { reps.iter().map(|r| r[c] - oracle.theta_e).collect() };
    let (mean_b, sd_b) = mean_sd(&column(0));
    let (mean_b1, sd_b1) = mean_sd(&column(1));
    let (mean_bo, sd_bo) = mean_sd(&column(2));
    Ok(RepSummary {
        n: config.n,
        reps: config.reps,
        theta_e: oracle.theta_e,
        b,
        b_o,
        theta_i0: oracle.theta_i0,
        bound: error_bound(oracle.theta_i0)?,
        mean_b,
        sd_b,
        mean_b1,
        sd_b1,
        mean_bo,
        sd_bo,
        sd_undefined: config.reps < 2,
    })
}

/// Runs every row with its own derived seed.
pub fn run_study(rows: &[StudyRow], seed: u64, settings: EstimatorSettings) -> Result<Vec<(String, RepSummary)>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut cfg = SimConfig::new(row.model.clone(), row.n, row.reps, derive_seed(seed, i as u64));
            cfg.mode = settings.mode;
            cfg.form = settings.form;
            cfg.oos_ties = settings.oos_ties;
            Ok((row.label.clone(), replicate_bias_study(&cfg)?))
        })
        .collect()
}

/// `r` values of the bias-function figures.
pub const FIGURE_R: [f64; 5] = [1.016, 1.062, 1.25, 5.0, 40.0];
pub const FIGURE_N: u64 = 500;
pub const FIGURE_POINTS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Figure {
    /// `b` versus `log10 λ`.
    NegRelBias,
    /// `a` versus `log10 λ`.
    TieHalfProb,
    /// `(θ_e, θ_I0)` loci, one influential SNP.
    SingleLoci,
    /// `(θ_e, θ_I0)` loci, two influential SNPs.
    PairLoci,
}

impl Figure {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Figure::NegRelBias),
            2 => Ok(Figure::TieHalfProb),
            3 => Ok(Figure::SingleLoci),
            4 => Ok(Figure::PairLoci),
            _ => Err(Error::Usage(format!("unknown figure {id}; expected 1, 2, 3 or 4"))),
        }
    }
}

/// One point of a curve. For the bias figures `param = λ`,
/// `x = log10 λ`; for the loci `param = p`, `x = θ_e`, `y = θ_I0`, and the
/// bound curve has `param = x = θ_e`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub curve: String,
    pub param: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureGrid {
    pub n: u64,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub maf: Vec<f64>,
    pub bound_points: usize,
}

impl Default for FigureGrid {
    fn default() -> Self {
        Self {
            n: FIGURE_N,
            r: FIGURE_R.to_vec(),
            lambda: log_space(1e-2, 1e2, FIGURE_POINTS),
            maf: log_space(1e-3, 0.3, FIGURE_POINTS),
            bound_points: FIGURE_POINTS,
        }
    }
}

pub fn figure_curves(figure: Figure) -> Result<Vec<CurvePoint>> {
    figure_curves_on(figure, &FigureGrid::default())
}

pub fn figure_curves_on(figure: Figure, grid: &FigureGrid) -> Result<Vec<CurvePoint>> {
    match figure {
        Figure::NegRelBias | Figure::TieHalfProb => {
            let jobs: Vec<(f64, f64)> = grid
                .r
                .iter()
                .flat_map(|&r| grid.lambda.iter().map(move |&l| (r, l)))
                .collect();
            jobs.par_iter()
                .map(|&(r, lambda)| {
                    let y = if figure == Figure::NegRelBias {
                        neg_rel_bias(grid.n, lambda, r)?
                    } else {
                        tie_half_prob(grid.n, lambda, r)?
                    };
                    Ok(CurvePoint {
                        curve: format!("r={r}"),
                        param: lambda,
                        x: lambda.log10(),
                        y,
                    })
                })
                .collect()
        }
        Figure::SingleLoci | Figure::PairLoci => {
            let families = if figure == Figure::SingleLoci {
                SINGLE_PENETRANCE.len()
            } else {
                PAIR_PENETRANCE.len()
            };
            let mut out = Vec::new();
            for idx in 0..families {
                for &p in &grid.maf {
                    let model = if figure == Figure::SingleLoci {
                        single_family_model(idx, p, 1)?
                    } else {
                        pair_family_model(idx, p, 2)?
                    };
                    let o = model.oracle_params()?;
                    out.push(CurvePoint {
                        curve: format!("t{}", idx + 1),
                        param: p,
                        x: o.theta_e,
                        y: o.theta_i0,
                    });
                }
            }
            let steps = grid.bound_points.max(2);
            for i in 0..steps {
                let theta_e = 0.5 * i as f64 / (steps - 1) as f64;
                out.push(CurvePoint {
                    curve: "bound".into(),
                    param: theta_e,
                    x: theta_e,
                    y: 4.0 * (0.5 - theta_e).powi(2),
                });
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::single_example;

    #[test]
    fn fixed_seed_is_reproducible() {
        let m = single_example();
        let a = draw_case_control(&m, 50, 3, 0).unwrap();
        assert_eq!(a, draw_case_control(&m, 50, 3, 0).unwrap());
        assert_ne!(a, draw_case_control(&m, 50, 3, 1).unwrap());
        assert_eq!(a.class_totals(), Some((50, 50)));
    }

    #[test]
    fn zero_maf_columns_are_constant() {
        let m = DiseaseModel::single_influential(vec![0.1, 0.0, 0.2], [0.9, 0.5, 0.3]).unwrap();
        let s = draw_case_control(&m, 200, 1, 0).unwrap();
        assert!((0..s.n_rows()).all(|i| s.value(i, 1) == 0));
    }

    #[test]
    fn one_rep_has_zero_sd() {
        let s = replicate_bias_study(&SimConfig::new(single_example(), 50, 1, 4)).unwrap();
        assert!(s.sd_undefined);
        assert_eq!((s.sd_b, s.sd_b1, s.sd_bo), (0.0, 0.0, 0.0));
    }

    #[test]
    fn summary_independent_of_thread_count() {
        let cfg = SimConfig::new(single_example(), 60, 8, 21);
        let a = replicate_bias_study(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| replicate_bias_study(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn mean_and_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn figure_points() {
        let grid = FigureGrid {
            lambda: vec![2.5],
            r: vec![1.25],
            ..Default::default()
        };
        let pts = figure_curves_on(Figure::TieHalfProb, &grid).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].y - 0.4092).abs() < 5e-5);

        let grid = FigureGrid {
            maf: vec![0.2],
            bound_points: 3,
            ..Default::default()
        };
        let pts = figure_curves_on(Figure::SingleLoci, &grid).unwrap();
        let t3 = pts.iter().find(|p| p.curve == "t3").unwrap();
        assert!((t3.x - 0.182).abs() < 5e-4 && (t3.y - 0.344).abs() < 1.5e-3, "{t3:?}");
        let last = pts.last().unwrap();
        assert_eq!((last.curve.as_str(), last.x, last.y), ("bound", 0.5, 0.0));

        assert_eq!(figure_curves(Figure::NegRelBias).unwrap().len(), 5 * FIGURE_POINTS);
        assert!(Figure::from_id(5).is_err());
    }
}
