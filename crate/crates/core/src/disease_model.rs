//! Case-control SNP model and its exact predictivity parameters.
//!
//! A group of independent SNPs with given minor-allele frequencies, some of
//! which are influential: `P(h | x) = t(u)` depends only on the influential
//! genotype tuple `u`. Everything here is computed on the `3^k` influential
//! tuples; the non-influential SNPs enter only through the factor
//! `Σ_v f_V(v)²`, which is a product of per-SNP terms.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::CellDistribution;

/// Genotype probabilities `((1-p)², 2p(1-p), p²)` for minor-allele count 0, 1, 2.
pub fn genotype_dist(p: f64) -> Result<[f64; 3]> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::domain(format!("minor allele frequency {p} outside [0, 0.5]")));
    }
    let q = 1.0 - p;
    Ok([q * q, 2.0 * p * q, p * p])
}

/// `Σ_g f(g)²` for one SNP: `p⁴ + (2p(1-p))² + (1-p)⁴`.
pub fn snp_noise_factor(p: f64) -> f64 {
    let q = 1.0 - p;
    p.powi(4) + (2.0 * p * q).powi(2) + q.powi(4)
}

/// `0.5 − sqrt(θ/4)`, the upper bound on the ideal error rate implied by a
/// squared-difference parameter `θ`.
pub fn error_bound(theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::domain(format!("theta = {theta} outside [0, 1]")));
    }
    Ok((0.5 - (theta / 4.0).sqrt()).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiseaseModel {
    maf: Vec<f64>,
    influential: Vec<usize>,
    /// `t(u) = P(h | u)` indexed lexicographically by the influential tuple,
    /// first influential SNP most significant.
    penetrance: Vec<f64>,
}

impl DiseaseModel {
    pub fn new(maf: Vec<f64>, influential: Vec<usize>, penetrance: Vec<f64>) -> Result<Self> {
        for &p in &maf {
            genotype_dist(p)?;
        }
        if influential.is_empty() {
            return Err(Error::domain("model needs at least one influential SNP"));
        }
        let mut seen = vec![false; maf.len()];
        for &i in &influential {
            if i >= maf.len() {
                return Err(Error::domain(format!(
                    "influential index {i} out of range for {} SNPs",
                    maf.len()
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::domain(format!("influential index {i} repeated")));
            }
        }
        let cells = 3usize.pow(influential.len() as u32);
        if penetrance.len() != cells {
            return Err(Error::domain(format!(
                "penetrance has {} entries, expected 3^{} = {cells}",
                penetrance.len(),
                influential.len()
            )));
        }
        if let Some(t) = penetrance.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::domain(format!("penetrance value {t} outside [0, 1]")));
        }
        Ok(Self {
            maf,
            influential,
            penetrance,
        })
    }

    /// Penetrance given as a map from digit strings (`"01"`, ...) in
    /// influential-list order; every tuple must be present.
    pub fn from_tuple_map(maf: Vec<f64>, influential: Vec<usize>, t: &BTreeMap<String, f64>) -> Result<Self> {
        let k = influential.len();
        let mut penetrance = vec![f64::NAN; 3usize.pow(k as u32)];
        for (key, &value) in t {
            let digits: Option<Vec<u32>> = key.chars().map(|c| c.to_digit(10).filter(|d| *d < 3)).collect();
            let digits = digits
                .filter(|d| d.len() == k)
                .ok_or_else(|| Error::domain(format!("penetrance key {key:?} is not a {k}-digit genotype tuple")))?;
            penetrance[tuple_index(&digits)] = value;
        }
        if let Some(missing) = penetrance.iter().position(|t| t.is_nan()) {
            return Err(Error::domain(format!(
                "penetrance missing genotype tuple {:?}",
                tuple_key(&tuple_digits(missing, k))
            )));
        }
        Self::new(maf, influential, penetrance)
    }

    /// A group whose first SNP is the single influential one.
    pub fn single_influential(maf: Vec<f64>, t: [f64; 3]) -> Result<Self> {
        Self::new(maf, vec![0], t.to_vec())
    }

    pub fn maf(&self) -> &[f64] {
        &self.maf
    }

    pub fn influential(&self) -> &[usize] {
        &self.influential
    }

    pub fn penetrance(&self) -> &[f64] {
        &self.penetrance
    }

    pub fn n_snps(&self) -> usize {
        self.maf.len()
    }

    pub fn is_influential(&self, snp: usize) -> bool {
        self.influential.contains(&snp)
    }

    pub fn noise_snps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.maf.len()).filter(|i| !self.is_influential(*i))
    }

    /// `Σ_v f_V(v)²` over the non-influential SNPs.
    pub fn noise_factor(&self) -> f64 {
        self.noise_snps().map(|i| snp_noise_factor(self.maf[i])).product()
    }

    /// The same model with one more non-influential SNP appended.
    pub fn with_noise_snp(&self, p: f64) -> Result<Self> {
        let mut maf = self.maf.clone();
        maf.push(p);
        Self::new(maf, self.influential.clone(), self.penetrance.clone())
    }

    /// Penetrance table as `"digits" -> t(u)`.
    pub fn tuple_map(&self) -> BTreeMap<String, f64> {
        let k = self.influential.len();
        self.penetrance
            .iter()
            .enumerate()
            .map(|(i, &t)| (tuple_key(&tuple_digits(i, k)), t))
            .collect()
    }

    pub fn conditional_tables(&self) -> Result<ConditionalTables> {
        let k = self.influential.len();
        let per_snp: Vec<[f64; 3]> = self
            .influential
            .iter()
            .map(|&i| genotype_dist(self.maf[i]))
            .collect::<Result<_>>()?;
        let f_u: Vec<f64> = (0..self.penetrance.len())
            .map(|idx| {
                tuple_digits(idx, k)
                    .iter()
                    .zip(&per_snp)
                    .map(|(&g, dist)| dist[g as usize])
                    .product()
            })
            .collect();
        let f_y_h: f64 = f_u.iter().zip(&self.penetrance).map(|(f, t)| f * t).sum();
        let f_y_d = 1.0 - f_y_h;
        if f_y_h <= 0.0 || f_y_d <= 0.0 {
            return Err(Error::Degenerate(format!(
                "outcome class has zero probability (f_Y(h) = {f_y_h})"
            )));
        }
        let f_u_given_h = f_u.iter().zip(&self.penetrance).map(|(f, t)| t * f / f_y_h).collect();
        let f_u_given_d = f_u
            .iter()
            .zip(&self.penetrance)
            .map(|(f, t)| (1.0 - t) * f / f_y_d)
            .collect();
        Ok(ConditionalTables {
            f_y_d,
            f_u,
            f_u_given_d,
            f_u_given_h,
            noise_factor: self.noise_factor(),
        })
    }

    pub fn oracle_params(&self) -> Result<OracleParams> {
        Ok(self.conditional_tables()?.oracle_params())
    }

    /// Distinct `(f_d(x), f_h(x))` values over all full genotype tuples `x`
    /// of the group, each with the number of tuples sharing it. Tuples of
    /// zero probability are omitted.
    ///
    /// Non-influential SNPs with equal MAF are grouped by genotype
    /// composition, so the list stays polynomial in the group size.
    pub fn cell_classes(&self) -> Result<Vec<CellClass>> {
        let tables = self.conditional_tables()?;
        let noise = self.noise_mass_classes()?;
        let mut out = Vec::with_capacity(tables.f_u.len() * noise.len());
        for (fd, fh) in tables.f_u_given_d.iter().zip(&tables.f_u_given_h) {
            for &(mass, multiplicity) in &noise {
                let (f_d, f_h) = (fd * mass, fh * mass);
                if f_d > 0.0 || f_h > 0.0 {
                    out.push(CellClass { f_d, f_h, multiplicity });
                }
            }
        }
        Ok(out)
    }

    /// `(f_V(v), number of v)` over the non-influential SNPs.
    fn noise_mass_classes(&self) -> Result<Vec<(f64, f64)>> {
        let mut groups: BTreeMap<u64, usize> = BTreeMap::new();
        for i in self.noise_snps() {
            *groups.entry(self.maf[i].to_bits()).or_default() += 1;
        }
        let mut classes = vec![(1.0, 1.0)];
        for (bits, size) in groups {
            let dist = genotype_dist(f64::from_bits(bits))?;
            let mut compositions = Vec::new();
            for c1 in 0..=size {
                for c2 in 0..=size - c1 {
                    let c0 = size - c1 - c2;
                    let mass = dist[0].powi(c0 as i32) * dist[1].powi(c1 as i32) * dist[2].powi(c2 as i32);
                    if mass > 0.0 {
                        compositions.push((mass, multinomial(size, &[c0, c1, c2])));
                    }
                }
            }
            classes = classes
                .iter()
                .flat_map(|&(m, c)| compositions.iter().map(move |&(m2, c2)| (m * m2, c * c2)))
                .collect();
        }
        Ok(classes)
    }

    /// Cost/prior-weighted expected cost over the influential tuples; the
    /// squared parameter carries the noise factor.
    pub fn weighted_cost(&self, spec: &CostPriorSpec) -> Result<WeightedCost> {
        let tables = self.conditional_tables()?;
        let mut wc = weighted_cost(&tables.f_u_given_d, &tables.f_u_given_h, spec)?;
        wc.weighted_sq *= tables.noise_factor;
        Ok(wc)
    }

    /// Class-conditional probabilities of a complete genotype row over all
    /// SNPs of the group.
    pub fn distribution(&self) -> Result<ModelDistribution<'_>> {
        Ok(ModelDistribution {
            model: self,
            tables: self.conditional_tables()?,
        })
    }
}

fn multinomial(n: usize, parts: &[usize]) -> f64 {
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let ln = ln_fact(n) - parts.iter().map(|&p| ln_fact(p)).sum::<f64>();
    ln.exp().round()
}

/// Lexicographic index of a genotype tuple (first digit most significant).
pub fn tuple_index(digits: &[u32]) -> usize {
    digits.iter().fold(0, |acc, &d| acc * 3 + d as usize)
}

pub fn tuple_digits(mut index: usize, k: usize) -> Vec<u32> {
    let mut digits = vec![0; k];
    for slot in digits.iter_mut().rev() {
        *slot = (index % 3) as u32;
        index /= 3;
    }
    digits
}

pub fn tuple_key(digits: &[u32]) -> String {
    digits.iter().map(|d| char::from_digit(*d, 10).unwrap()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalTables {
    pub f_y_d: f64,
    /// Marginal `f_U(u)`.
    pub f_u: Vec<f64>,
    pub f_u_given_d: Vec<f64>,
    pub f_u_given_h: Vec<f64>,
    pub noise_factor: f64,
}

impl ConditionalTables {
    pub fn f_y_h(&self) -> f64 {
        1.0 - self.f_y_d
    }

    /// `f_{U|Y}(u|h) / f_{U|Y}(u|d)`; infinite where the denominator vanishes.
    pub fn likelihood_ratios(&self) -> Vec<f64> {
        self.f_u_given_h
            .iter()
            .zip(&self.f_u_given_d)
            .map(|(h, d)| if *d > 0.0 { h / d } else { f64::INFINITY })
            .collect()
    }

    pub fn theta_e(&self) -> f64 {
        0.5 * self
            .f_u_given_d
            .iter()
            .zip(&self.f_u_given_h)
            .map(|(d, h)| d.min(*h))
            .sum::<f64>()
    }

    /// `(θ_I0, θ_I)`: half the squared-difference sum on the influential
    /// tuples, and the same times the noise factor.
    pub fn theta_i_family(&self) -> (f64, f64) {
        let theta_i0 = 0.5
            * self
                .f_u_given_d
                .iter()
                .zip(&self.f_u_given_h)
                .map(|(d, h)| (d - h).powi(2))
                .sum::<f64>();
        (theta_i0, theta_i0 * self.noise_factor)
    }

    pub fn abs_diff_sum(&self) -> f64 {
        self.f_u_given_d
            .iter()
            .zip(&self.f_u_given_h)
            .map(|(d, h)| (d - h).abs())
            .sum()
    }

    pub fn oracle_params(&self) -> OracleParams {
        let theta_e = self.theta_e();
        let (theta_i0, theta_i) = self.theta_i_family();
        OracleParams {
            theta_e,
            theta_c: 1.0 - theta_e,
            theta_i,
            theta_i0,
            // θ_I0 ≤ 1/2 always, so the bound is defined
            bound_on_theta_e: (0.5 - (theta_i0 / 4.0).sqrt()).max(0.0),
            f_y_d: self.f_y_d,
            noise_factor: self.noise_factor,
        }
    }
}

pub fn theta_e(model: &DiseaseModel) -> Result<f64> {
    Ok(model.conditional_tables()?.theta_e())
}

pub fn theta_i_family(model: &DiseaseModel) -> Result<(f64, f64)> {
    Ok(model.conditional_tables()?.theta_i_family())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleParams {
    pub theta_e: f64,
    pub theta_c: f64,
    pub theta_i: f64,
    pub theta_i0: f64,
    pub bound_on_theta_e: f64,
    pub f_y_d: f64,
    pub noise_factor: f64,
}

/// A set of genotype cells sharing the same pair of class probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellClass {
    pub f_d: f64,
    pub f_h: f64,
    pub multiplicity: f64,
}

/// Model probabilities for complete genotype rows, for the oracle
/// estimators.
#[derive(Debug, Clone)]
pub struct ModelDistribution<'a> {
    model: &'a DiseaseModel,
    tables: ConditionalTables,
}

impl ModelDistribution<'_> {
    pub fn tables(&self) -> &ConditionalTables {
        &self.tables
    }
}

impl CellDistribution for ModelDistribution<'_> {
    fn probs(&self, cell: &[u32]) -> (f64, f64) {
        let model = self.model;
        if cell.len() != model.n_snps() || cell.iter().any(|g| *g > 2) {
            return (0.0, 0.0);
        }
        let digits: Vec<u32> = model.influential.iter().map(|&i| cell[i]).collect();
        let u = tuple_index(&digits);
        let mut noise = 1.0;
        for i in model.noise_snps() {
            // MAFs were validated at construction
            noise *= genotype_dist(model.maf[i]).map(|d| d[cell[i] as usize]).unwrap_or(0.0);
        }
        (self.tables.f_u_given_d[u] * noise, self.tables.f_u_given_h[u] * noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostPriorSpec {
    pub pi_d: f64,
    pub pi_h: f64,
    pub c_d: f64,
    pub c_h: f64,
}

impl CostPriorSpec {
    pub fn new(pi_d: f64, pi_h: f64, c_d: f64, c_h: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi_d) || !(0.0..=1.0).contains(&pi_h) || (pi_d + pi_h - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "priors pi_d = {pi_d}, pi_h = {pi_h} must sum to 1"
            )));
        }
        if !(c_d >= 0.0 && c_h >= 0.0) || !c_d.is_finite() || !c_h.is_finite() {
            return Err(Error::domain("error costs must be finite and nonnegative"));
        }
        Ok(Self { pi_d, pi_h, c_d, c_h })
    }

    /// Equal priors and unit costs.
    pub fn symmetric() -> Self {
        Self {
            pi_d: 0.5,
            pi_h: 0.5,
            c_d: 1.0,
            c_h: 1.0,
        }
    }

    /// `C = π_d c_d + π_h c_h`.
    pub fn total_cost(&self) -> f64 {
        self.pi_d * self.c_d + self.pi_h * self.c_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedCost {
    /// `θ_C = Σ_x min(π_d c_d f_d(x), π_h c_h f_h(x))`.
    pub theta_c: f64,
    /// `Σ_x (π_d c_d f_d(x) − π_h c_h f_h(x))²`.
    pub weighted_sq: f64,
    /// `C = π_d c_d + π_h c_h`.
    pub total_cost: f64,
}

pub fn weighted_cost(f_d: &[f64], f_h: &[f64], spec: &CostPriorSpec) -> Result<WeightedCost> {
    if f_d.len() != f_h.len() {
        return Err(Error::domain("f_d and f_h must cover the same cells"));
    }
    if f_d.iter().chain(f_h).any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::domain("cell probabilities must lie in [0, 1]"));
    }
    let (wd, wh) = (spec.pi_d * spec.c_d, spec.pi_h * spec.c_h);
    let mut theta_c = 0.0;
    let mut weighted_sq = 0.0;
    for (d, h) in f_d.iter().zip(f_h) {
        let (a, b) = (wd * d, wh * h);
        theta_c += a.min(b);
        weighted_sq += (a - b).powi(2);
    }
    Ok(WeightedCost {
        theta_c,
        weighted_sq,
        total_cost: spec.total_cost(),
    })
}

/// Largest possible `Σ x_i²` given `Σ|x_i| = 1` and `Σ x_i = a`: `(1 + a²)/2`.
pub fn max_sumsq_bound(a: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&a) {
        return Err(Error::domain(format!("a = {a} impossible when Σ|x| = 1")));
    }
    Ok((1.0 + a * a) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityReport {
    pub a: f64,
    pub sum_sq: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    /// At most one positive and at most one negative nonzero component:
    /// exactly the vectors that attain the bound.
    pub equality_case: bool,
}

/// Normalises `x` to `Σ|x_i| = 1` and checks `Σ x_i² ≤ (1 + a²)/2`.
pub fn verify_inequality(x: &[f64]) -> Result<InequalityReport> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 == 0.0 || !l1.is_finite() {
        return Err(Error::domain("vector must have finite nonzero entries"));
    }
    let a: f64 = x.iter().sum::<f64>() / l1;
    let sum_sq: f64 = x.iter().map(|v| (v / l1).powi(2)).sum();
    let bound = max_sumsq_bound(a.clamp(-1.0, 1.0))?;
    let positives = x.iter().filter(|v| **v > 0.0).count();
    let negatives = x.iter().filter(|v| **v < 0.0).count();
    Ok(InequalityReport {
        a,
        sum_sq,
        bound,
        slack: bound - sum_sq,
        holds: sum_sq <= bound + 1e-12,
        equality_case: positives <= 1 && negatives <= 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked_example() -> DiseaseModel {
        DiseaseModel::single_influential(vec![0.2; 6], [0.97, 0.6, 0.4]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn genotype_distribution() {
        assert_eq!(genotype_dist(0.0).unwrap(), [1.0, 0.0, 0.0]);
        let g = genotype_dist(0.2).unwrap();
        assert!(close(g[0], 0.64, 1e-15) && close(g[1], 0.32, 1e-15) && close(g[2], 0.04, 1e-15));
        assert_eq!(genotype_dist(0.5).unwrap(), [0.25, 0.5, 0.25]);
        assert!(genotype_dist(0.6).is_err());
        assert!(genotype_dist(-0.01).is_err());
    }

    #[test]
    fn per_snp_noise_factor() {
        assert_eq!(snp_noise_factor(0.0), 1.0);
        assert!(close(snp_noise_factor(0.2), 0.5136, 1e-12));
        assert!(close(snp_noise_factor(0.5), 0.375, 1e-12));
        for p in [0.05, 0.13, 0.31] {
            assert!(close(snp_noise_factor(p), snp_noise_factor(1.0 - p), 1e-12));
        }
    }

    #[test]
    fn worked_example_tables() {
        let t = worked_example().conditional_tables().unwrap();
        assert!(close(t.f_y_d, 0.171, 5e-4));
        for (got, want) in t.f_u_given_d.iter().zip([0.112, 0.748, 0.140]) {
            assert!(close(*got, want, 5e-4), "{got} vs {want}");
        }
        for (got, want) in t.f_u_given_h.iter().zip([0.749, 0.232, 0.019]) {
            assert!(close(*got, want, 5e-4), "{got} vs {want}");
        }
        // the printed ratios come from the rounded conditionals
        for (got, want) in t.likelihood_ratios().iter().zip([6.688, 0.310, 0.138]) {
            assert!(close(*got / want, 1.0, 0.02), "{got} vs {want}");
        }
        assert!(close(t.noise_factor, 0.5136f64.powi(5), 1e-12));
        assert!(close(t.noise_factor, 0.03574, 5e-6));
        let sum_d: f64 = t.f_u_given_d.iter().sum();
        let sum_h: f64 = t.f_u_given_h.iter().sum();
        assert!(close(sum_d, 1.0, 1e-12) && close(sum_h, 1.0, 1e-12));
    }

    #[test]
    fn worked_example_parameters() {
        let p = worked_example().oracle_params().unwrap();
        assert!(close(p.theta_e, 0.182, 5e-4));
        assert!(close(p.theta_i0, 0.344, 1.5e-3));
        assert!(close(p.theta_i, 0.0123, 5e-5));
        assert!(close(p.bound_on_theta_e, 0.207, 5e-4));
        assert!(close(p.theta_e + p.theta_c, 1.0, 1e-15));
        assert!(p.theta_i <= 4.0 * (0.5 - p.theta_e).powi(2));
    }

    #[test]
    fn flat_penetrance_carries_no_signal() {
        let m = DiseaseModel::single_influential(vec![0.2; 3], [0.5; 3]).unwrap();
        let t = m.conditional_tables().unwrap();
        for i in 0..3 {
            assert!(close(t.f_u_given_d[i], t.f_u[i], 1e-15));
            assert!(close(t.f_u_given_h[i], t.f_u[i], 1e-15));
        }
        let p = t.oracle_params();
        assert!(close(p.theta_e, 0.5, 1e-15));
        assert!(p.theta_i0 < 1e-30 && p.theta_i < 1e-30);
        assert!(close(p.bound_on_theta_e, 0.5, 1e-15));
    }

    #[test]
    fn degenerate_model_rejected() {
        let m = DiseaseModel::single_influential(vec![0.2], [1.0; 3]).unwrap();
        assert!(matches!(m.conditional_tables(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn construction_errors() {
        assert!(DiseaseModel::new(vec![0.2, 0.7], vec![0], vec![0.5; 3]).is_err());
        assert!(DiseaseModel::new(vec![0.2], vec![1], vec![0.5; 3]).is_err());
        assert!(DiseaseModel::new(vec![0.2, 0.2], vec![0, 0], vec![0.5; 9]).is_err());
        assert!(DiseaseModel::new(vec![0.2], vec![0], vec![0.5; 2]).is_err());
        assert!(DiseaseModel::new(vec![0.2], vec![0], vec![0.5, 1.5, 0.2]).is_err());
        let mut t = BTreeMap::new();
        t.insert("0".to_string(), 0.9);
        t.insert("1".to_string(), 0.5);
        assert!(DiseaseModel::from_tuple_map(vec![0.2], vec![0], &t).is_err());
        t.insert("3".to_string(), 0.5);
        assert!(DiseaseModel::from_tuple_map(vec![0.2], vec![0], &t).is_err());
    }

    #[test]
    fn tuple_map_round_trip() {
        let m = DiseaseModel::new(
            vec![0.2, 0.1, 0.3],
            vec![2, 0],
            (0..9).map(|i| i as f64 / 10.0).collect(),
        )
        .unwrap();
        let map = m.tuple_map();
        assert_eq!(map["12"], 0.5);
        let back = DiseaseModel::from_tuple_map(m.maf().to_vec(), m.influential().to_vec(), &map).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn error_bound_values() {
        assert!(close(error_bound(0.344).unwrap(), 0.207, 5e-4));
        assert!(close(error_bound(0.343).unwrap(), 0.207, 5e-4));
        assert_eq!(error_bound(0.0).unwrap(), 0.5);
        assert!(error_bound(-0.1).is_err());
    }

    #[test]
    fn cell_classes_cover_full_group() {
        let m = worked_example();
        let classes = m.cell_classes().unwrap();
        let count: f64 = classes.iter().map(|c| c.multiplicity).sum();
        assert_eq!(count, 729.0);
        let fd: f64 = classes.iter().map(|c| c.f_d * c.multiplicity).sum();
        let fh: f64 = classes.iter().map(|c| c.f_h * c.multiplicity).sum();
        assert!(close(fd, 1.0, 1e-12) && close(fh, 1.0, 1e-12));
        let theta_e: f64 = 0.5 * classes.iter().map(|c| c.f_d.min(c.f_h) * c.multiplicity).sum::<f64>();
        assert!(close(theta_e, m.oracle_params().unwrap().theta_e, 1e-12));
        let theta_i: f64 = 0.5
            * classes
                .iter()
                .map(|c| (c.f_d - c.f_h).powi(2) * c.multiplicity)
                .sum::<f64>();
        assert!(close(theta_i, m.oracle_params().unwrap().theta_i, 1e-14));

        // monomorphic SNPs contribute one cell each
        let m = DiseaseModel::single_influential(vec![0.1, 0.1, 0.1, 0.2, 0.0, 0.0], [0.97, 0.6, 0.4]).unwrap();
        let count: f64 = m.cell_classes().unwrap().iter().map(|c| c.multiplicity).sum();
        assert_eq!(count, 81.0);
    }

    #[test]
    fn model_distribution_matches_classes() {
        let m = DiseaseModel::new(vec![0.2, 0.1, 0.3], vec![1], vec![0.9, 0.5, 0.2]).unwrap();
        let dist = m.distribution().unwrap();
        let mut total = (0.0, 0.0);
        let mut theta_e = 0.0;
        for idx in 0..27 {
            let cell = tuple_digits(idx, 3);
            let (d, h) = dist.probs(&cell);
            total.0 += d;
            total.1 += h;
            theta_e += 0.5 * d.min(h);
        }
        assert!(close(total.0, 1.0, 1e-12) && close(total.1, 1.0, 1e-12));
        assert!(close(theta_e, m.oracle_params().unwrap().theta_e, 1e-12));
        assert_eq!(dist.probs(&[0, 0]), (0.0, 0.0));
    }

    #[test]
    fn weighted_cost_reduces_to_theta_e() {
        let m = worked_example();
        let wc = m.weighted_cost(&CostPriorSpec::symmetric()).unwrap();
        assert!(close(wc.theta_c, m.oracle_params().unwrap().theta_e, 1e-12));
        let zero = CostPriorSpec::new(0.5, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(m.weighted_cost(&zero).unwrap().theta_c, 0.0);
    }

    #[test]
    fn weighted_cost_identity_against_direct_sum() {
        let t = worked_example().conditional_tables().unwrap();
        let spec = CostPriorSpec::new(0.3, 0.7, 2.0, 1.0).unwrap();
        let wc = weighted_cost(&t.f_u_given_d, &t.f_u_given_h, &spec).unwrap();
        let direct: f64 = t
            .f_u_given_d
            .iter()
            .zip(&t.f_u_given_h)
            .map(|(d, h)| (0.3 * 2.0 * d - 0.7 * 1.0 * h).abs())
            .sum();
        assert!(close(direct, wc.total_cost - 2.0 * wc.theta_c, 1e-12));
        assert!(CostPriorSpec::new(0.3, 0.6, 1.0, 1.0).is_err());
        assert!(CostPriorSpec::new(0.3, 0.7, -1.0, 1.0).is_err());
    }

    #[test]
    fn eq2_identity() {
        for t in [[0.97, 0.6, 0.4], [0.7, 0.6, 0.5], [0.8, 0.5, 0.2]] {
            for p in [0.01, 0.1, 0.2, 0.3] {
                let tables = DiseaseModel::single_influential(vec![p; 6], t)
                    .unwrap()
                    .conditional_tables()
                    .unwrap();
                assert!(close(tables.abs_diff_sum(), 2.0 - 4.0 * tables.theta_e(), 1e-12));
            }
        }
    }

    #[test]
    fn adjoining_noise_snp() {
        let m = worked_example();
        let before = m.oracle_params().unwrap();
        for p in [0.0, 0.05, 0.2, 0.5] {
            let after = m.with_noise_snp(p).unwrap().oracle_params().unwrap();
            assert!(close(after.theta_e, before.theta_e, 1e-15));
            assert!(close(after.theta_i, before.theta_i * snp_noise_factor(p), 1e-15));
        }
    }

    #[test]
    fn inequality_examples() {
        assert_eq!(max_sumsq_bound(0.0).unwrap(), 0.5);
        assert_eq!(max_sumsq_bound(1.0).unwrap(), 1.0);
        assert!(max_sumsq_bound(1.5).is_err());
        let r = verify_inequality(&[0.75, -0.25]).unwrap();
        assert!(close(r.a, 0.5, 1e-15) && close(r.sum_sq, 0.625, 1e-15) && close(r.bound, 0.625, 1e-15));
        assert!(r.holds && r.equality_case);
        let single = verify_inequality(&[3.0]).unwrap();
        assert!(single.equality_case && close(single.sum_sq, 1.0, 1e-15));
        let spread = verify_inequality(&[0.3, 0.2, -0.5]).unwrap();
        assert!(spread.holds && !spread.equality_case && spread.slack > 0.0);
        assert!(verify_inequality(&[0.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn inequality_holds_for_signed_vectors(x in proptest::collection::vec(-1.0f64..1.0, 1..12)) {
            prop_assume!(x.iter().any(|v| *v != 0.0));
            let r = verify_inequality(&x).unwrap();
            prop_assert!(r.holds);
            if r.equality_case {
                prop_assert!(r.slack.abs() < 1e-12);
            }
        }
    }
}
