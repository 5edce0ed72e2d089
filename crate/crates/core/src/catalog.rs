//! Built-in model configurations: the penetrance families used for the
//! `θ_e`/`θ_I0` curves and the bias-study rows reproduced by `iscore reproduce`.

use crate::disease_model::{tuple_index, DiseaseModel};
use crate::error::Result;

/// One influential SNP: `t(u)` for `u = 0, 1, 2`.
pub const SINGLE_PENETRANCE: [[f64; 3]; 12] = [
    [0.97, 0.4, 0.2],
    [0.97, 0.5, 0.3],
    [0.97, 0.6, 0.4],
    [0.90, 0.4, 0.2],
    [0.90, 0.5, 0.3],
    [0.85, 0.4, 0.2],
    [0.90, 0.6, 0.4],
    [0.85, 0.5, 0.3],
    [0.80, 0.4, 0.2],
    [0.85, 0.6, 0.4],
    [0.80, 0.5, 0.3],
    [0.80, 0.6, 0.4],
];

/// Tuple order `(u1 u2)` of [`PAIR_PENETRANCE`] rows.
pub const PAIR_ORDER: [[u32; 2]; 9] = [[0, 0], [1, 0], [0, 1], [2, 0], [0, 2], [1, 1], [2, 1], [1, 2], [2, 2]];

/// Two influential SNPs, listed in [`PAIR_ORDER`].
pub const PAIR_PENETRANCE: [[f64; 9]; 9] = [
    [0.99, 0.20, 0.15, 0.10, 0.08, 0.02, 0.010, 0.004, 0.001],
    [0.98, 0.20, 0.15, 0.15, 0.10, 0.01, 0.005, 0.005, 0.001],
    [0.95, 0.40, 0.30, 0.20, 0.10, 0.02, 0.010, 0.005, 0.002],
    [0.90, 0.40, 0.30, 0.20, 0.10, 0.02, 0.010, 0.005, 0.002],
    [0.95, 0.60, 0.40, 0.40, 0.20, 0.02, 0.010, 0.005, 0.001],
    [0.95, 0.60, 0.50, 0.30, 0.10, 0.05, 0.020, 0.015, 0.010],
    [0.99, 0.75, 0.75, 0.70, 0.70, 0.01, 0.008, 0.008, 0.002],
    [0.90, 0.60, 0.50, 0.30, 0.10, 0.05, 0.020, 0.015, 0.010],
    [0.95, 0.75, 0.70, 0.60, 0.50, 0.40, 0.350, 0.300, 0.200],
];

/// Worked two-SNP penetrance, listed in [`PAIR_ORDER`].
pub const INTERACTION_EXAMPLE: [f64; 9] = [0.95, 0.75, 0.7, 0.60, 0.50, 0.20, 0.15, 0.10, 0.05];

/// Reorders a [`PAIR_ORDER`] listing into lexicographic `(u1, u2)` order.
pub fn pair_penetrance_lexicographic(listed: &[f64; 9]) -> Vec<f64> {
    let mut out = vec![0.0; 9];
    for (digits, &t) in PAIR_ORDER.iter().zip(listed) {
        out[tuple_index(digits)] = t;
    }
    out
}

/// Group of `group_size` SNPs sharing MAF `p`; the first is influential.
pub fn single_family_model(index: usize, p: f64, group_size: usize) -> Result<DiseaseModel> {
    DiseaseModel::single_influential(vec![p; group_size], SINGLE_PENETRANCE[index])
}

/// Group of `group_size` SNPs sharing MAF `p`; the first two are influential.
pub fn pair_family_model(index: usize, p: f64, group_size: usize) -> Result<DiseaseModel> {
    DiseaseModel::new(
        vec![p; group_size],
        vec![0, 1],
        pair_penetrance_lexicographic(&PAIR_PENETRANCE[index]),
    )
}

/// Six SNPs at MAF 0.2, the first influential with `t = (0.97, 0.6, 0.4)`.
pub fn single_example() -> DiseaseModel {
    DiseaseModel::single_influential(vec![0.2; 6], [0.97, 0.6, 0.4]).expect("valid constant model")
}

/// Six SNPs at MAF 0.2, the first two influential with [`INTERACTION_EXAMPLE`].
pub fn interaction_example() -> DiseaseModel {
    DiseaseModel::new(
        vec![0.2; 6],
        vec![0, 1],
        pair_penetrance_lexicographic(&INTERACTION_EXAMPLE),
    )
    .expect("valid constant model")
}

/// One row of a bias study: a model plus per-class sample size and
/// replication count.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub label: String,
    pub model: DiseaseModel,
    pub n: usize,
    pub reps: usize,
}

const STUDY_MAFS: [[f64; 6]; 3] = [
    [0.2, 0.2, 0.2, 0.2, 0.2, 0.2],
    [0.1, 0.1, 0.1, 0.2, 0.0, 0.0],
    [0.2, 0.1, 0.1, 0.1, 0.2, 0.0],
];

const SINGLE_STUDY_T: [[f64; 3]; 3] = [[0.97, 0.6, 0.4], [0.70, 0.6, 0.5], [0.80, 0.5, 0.2]];
const SINGLE_STUDY_N: [usize; 9] = [100, 200, 100, 200, 100, 200, 100, 200, 200];

/// Bias-study rows with one influential SNP (the first of six).
pub fn single_study_rows() -> Vec<StudyRow> {
    (0..9)
        .map(|i| StudyRow {
            label: format!("table4-row{}", i + 1),
            model: DiseaseModel::single_influential(STUDY_MAFS[i / 3].to_vec(), SINGLE_STUDY_T[i % 3])
                .expect("valid constant model"),
            n: SINGLE_STUDY_N[i],
            reps: 25,
        })
        .collect()
}

/// `t` over header tuples `00 01 02 10 .. 22`, where the first digit is the
/// genotype of the second SNP of the group and the second digit that of the
/// first. This is the only reading consistent with the analytic columns of
/// rows 7-9, whose two influential SNPs have different MAFs.
const PAIR_STUDY_T: [[f64; 9]; 9] = [
    [0.97, 0.6, 0.4, 0.7, 0.6, 0.4, 0.4, 0.6, 0.6],
    [0.70, 0.6, 0.5, 0.6, 0.6, 0.4, 0.4, 0.6, 0.6],
    [0.80, 0.5, 0.2, 0.7, 0.6, 0.4, 0.4, 0.6, 0.6],
    [0.97, 0.6, 0.4, 0.6, 0.6, 0.4, 0.4, 0.6, 0.6],
    [0.70, 0.6, 0.5, 0.5, 0.5, 0.4, 0.4, 0.5, 0.5],
    [0.80, 0.5, 0.2, 0.5, 0.5, 0.4, 0.4, 0.5, 0.5],
    [0.97, 0.6, 0.4, 0.5, 0.4, 0.3, 0.3, 0.4, 0.4],
    [0.70, 0.6, 0.5, 0.5, 0.4, 0.3, 0.3, 0.4, 0.4],
    [0.80, 0.5, 0.2, 0.5, 0.4, 0.3, 0.3, 0.4, 0.4],
];

/// Bias-study rows with two influential SNPs (the first two of six).
pub fn pair_study_rows() -> Vec<StudyRow> {
    (0..9)
        .map(|i| StudyRow {
            label: format!("table6-row{}", i + 1),
            model: DiseaseModel::new(STUDY_MAFS[i / 3].to_vec(), vec![1, 0], PAIR_STUDY_T[i].to_vec())
                .expect("valid constant model"),
            n: SINGLE_STUDY_N[i],
            reps: 25,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_example_parameters() {
        let p = interaction_example().oracle_params().unwrap();
        assert!((p.theta_e - 0.269).abs() < 5e-4);
        assert!((p.theta_i0 - 0.1447).abs() < 1e-4);
        assert!((p.noise_factor - 0.06958).abs() < 1e-5);
        assert!((p.theta_i - 0.01001).abs() < 1e-4);
    }

    #[test]
    fn pair_listing_reorders() {
        let lex = pair_penetrance_lexicographic(&INTERACTION_EXAMPLE);
        assert_eq!(lex[tuple_index(&[1, 0])], 0.75);
        assert_eq!(lex[tuple_index(&[0, 1])], 0.7);
        assert_eq!(lex[tuple_index(&[2, 1])], 0.15);
        assert_eq!(lex[tuple_index(&[1, 2])], 0.10);
    }

    #[test]
    fn catalog_models_are_valid() {
        for i in 0..12 {
            single_family_model(i, 0.2, 6).unwrap().oracle_params().unwrap();
        }
        for i in 0..9 {
            pair_family_model(i, 0.2, 6).unwrap().oracle_params().unwrap();
        }
        assert_eq!(single_study_rows().len(), 9);
        assert_eq!(pair_study_rows().len(), 9);
    }
}
