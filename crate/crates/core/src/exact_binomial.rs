//! Exact functionals of a pair of independent binomial variables.
//!
//! For `Z ~ Bin(n, p_z)` and `W ~ Bin(n, p_w)` this module evaluates
//! `E[min(Z, W)]` and `Pr(Z < W) + Pr(Z = W) / 2` over the full support,
//! and from them the two per-cell bias functions used by the estimators:
//!
//! * `b(n, λ, r)`: the negative relative bias of `E[min(Z, W)]` against `n·p_w`,
//! * `a(n, λ, r)`: the half-tie probability above,
//!
//! both parameterised by `λ = n·p_z` and `r = p_z / p_w ≥ 1`.
//!
//! Probability mass functions are built in log space from accumulated
//! `ln C(n, k)` terms, so no tail is truncated and the cost is `O(n)` per
//! evaluation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Two independent binomials sharing the trial count `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialPair {
    n: u64,
    p_z: f64,
    p_w: f64,
}

impl BinomialPair {
    pub fn new(n: u64, p_z: f64, p_w: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("binomial trial count must be at least 1"));
        }
        for (name, p) in [("p_z", p_z), ("p_w", p_w)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(Self { n, p_z, p_w })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p_z(&self) -> f64 {
        self.p_z
    }

    pub fn p_w(&self) -> f64 {
        self.p_w
    }
}

/// Probability mass function of `Bin(n, p)` at `0..=n`.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let n_us = n as usize;
    let mut pmf = vec![0.0; n_us + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[n_us] = 1.0;
        return pmf;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let nf = n as f64;
    let mut ln_choose = 0.0;
    for (k, slot) in pmf.iter_mut().enumerate() {
        if k > 0 {
            let kf = k as f64;
            ln_choose += ((nf - kf + 1.0) / kf).ln();
        }
        let kf = k as f64;
        *slot = (ln_choose + kf * ln_p + (nf - kf) * ln_q).exp();
    }
    pmf
}

/// `S[k] = Pr(X >= k)` for `k` in `0..=n+1`, summed from the upper tail.
fn survival(pmf: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; pmf.len() + 1];
    for k in (0..pmf.len()).rev() {
        s[k] = s[k + 1] + pmf[k];
    }
    s
}

/// `E[min(Z, W)] = Σ_{k≥1} Pr(Z ≥ k)·Pr(W ≥ k)`.
pub fn expected_min(pair: &BinomialPair) -> f64 {
    let sz = survival(&binomial_pmf(pair.n, pair.p_z));
    let sw = survival(&binomial_pmf(pair.n, pair.p_w));
    (1..=pair.n as usize).map(|k| sz[k] * sw[k]).sum()
}

/// `Pr(Z < W) + 0.5·Pr(Z = W)`.
pub fn half_tie_probability(pair: &BinomialPair) -> f64 {
    let pz = binomial_pmf(pair.n, pair.p_z);
    let pw = binomial_pmf(pair.n, pair.p_w);
    // below = Pr(Z < w), accumulated from the lower tail
    let mut below = 0.0;
    let mut total = 0.0;
    for w in 0..pz.len() {
        total += pw[w] * (below + 0.5 * pz[w]);
        below += pz[w];
    }
    total
}

fn pair_from_lambda_r(n: u64, lambda: f64, r: f64) -> Result<BinomialPair> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !lambda.is_finite() || lambda < 0.0 || lambda > n as f64 {
        return Err(Error::domain(format!("lambda = {lambda} must lie in [0, n = {n}]")));
    }
    if !r.is_finite() || r < 1.0 {
        return Err(Error::domain(format!("r = {r} must be at least 1")));
    }
    let p_z = lambda / n as f64;
    let p_w = p_z / r;
    if p_w <= 0.0 {
        return Err(Error::domain("p_w = lambda/(n r) is zero; relative bias undefined"));
    }
    BinomialPair::new(n, p_z, p_w)
}

/// Negative relative bias `b(n, λ, r) = (n p_w − E[min(Z, W)]) / (n p_w)`
/// with `p_z = λ/n`, `p_w = p_z/r`.
pub fn neg_rel_bias(n: u64, lambda: f64, r: f64) -> Result<f64> {
    let pair = pair_from_lambda_r(n, lambda, r)?;
    let mean_w = n as f64 * pair.p_w;
    let b = (mean_w - expected_min(&pair)) / mean_w;
    if b < -1e-12 {
        log::warn!("b({n}, {lambda}, {r}) = {b:e} below zero beyond rounding; clamped");
    }
    Ok(b.max(0.0))
}

/// `a(n, λ, r) = Pr(Z < W) + 0.5·Pr(Z = W)` with `p_z = λ/n`, `p_w = p_z/r`.
pub fn tie_half_prob(n: u64, lambda: f64, r: f64) -> Result<f64> {
    let pair = pair_from_lambda_r(n, lambda, r)?;
    Ok(half_tie_probability(&pair))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasPoint {
    pub n: u64,
    pub lambda: f64,
    pub r: f64,
    pub b: f64,
    pub a: f64,
}

impl BiasPoint {
    pub fn evaluate(n: u64, lambda: f64, r: f64) -> Result<Self> {
        let wrap = |e: Error| Error::GridCell {
            n,
            lambda,
            r,
            source: Box::new(e),
        };
        let b = neg_rel_bias(n, lambda, r).map_err(wrap)?;
        let a = tie_half_prob(n, lambda, r).map_err(wrap)?;
        Ok(Self { n, lambda, r, b, a })
    }
}

/// Full cross product of the three axes: `n` outermost, then `λ`, then `r`.
///
/// Cells are evaluated in parallel; the output order is fixed.
pub fn bias_grid(n_list: &[u64], lambda_list: &[f64], r_list: &[f64]) -> Result<Vec<BiasPoint>> {
    let cells: Vec<(u64, f64, f64)> = n_list
        .iter()
        .flat_map(|&n| {
            lambda_list
                .iter()
                .flat_map(move |&l| r_list.iter().map(move |&r| (n, l, r)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(n, l, r)| BiasPoint::evaluate(n, l, r))
        .collect()
}

/// `count` points spaced evenly in log10 between `lo` and `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}
