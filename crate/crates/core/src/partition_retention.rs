//! Partition Retention: backward dropping of variables inside many random
//! groups, scored by how often each variable survives.
//!
//! Cell tables are keyed by bit-packed `u128` tuples. Dropping a variable
//! masks its bits and re-aggregates the parent table, so a group is scanned
//! row by row only once.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::LabeledSample;

/// Outcome sums of one cell: `n_x` and `Σ y` over its rows.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Acc {
    n: f64,
    s: f64,
}

/// Cells keyed by packed genotype, sorted by key.
type Table = Vec<(u128, Acc)>;

/// Row-independent pieces of the I score plus per-variable bit widths.
struct Scorer<'a> {
    sample: &'a LabeledSample,
    y: Vec<f64>,
    mean: f64,
    /// `n_0 · var(Y)`
    scale: f64,
    bits: Vec<u32>,
}

impl<'a> Scorer<'a> {
    fn new(sample: &'a LabeledSample) -> Result<Self> {
        let outcome = sample.outcome();
        let y: Vec<f64> = (0..sample.n_rows()).map(|i| outcome.value(i)).collect();
        let n0 = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n0;
        let ss = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        if ss <= 0.0 {
            return Err(Error::Degenerate("outcome is constant; I is undefined".into()));
        }
        let mut max = vec![0u32; sample.n_vars()];
        for i in 0..sample.n_rows() {
            for (m, &v) in max.iter_mut().zip(sample.row(i)) {
                *m = (*m).max(v);
            }
        }
        let bits = max.iter().map(|&m| (32 - m.leading_zeros()).max(1)).collect();
        Ok(Self {
            sample,
            y,
            mean,
            scale: ss,
            bits,
        })
    }

    /// Bit offsets of the group members and the mask of each.
    fn layout(&self, group: &[usize]) -> Result<Vec<u128>> {
        let mut offset = 0u32;
        let mut masks = Vec::with_capacity(group.len());
        for &j in group {
            let b = self.bits[j];
            if offset + b > 128 {
                return Err(Error::contract(format!(
                    "group of {} variables needs more than 128 key bits",
                    group.len()
                )));
            }
            masks.push(((1u128 << b) - 1) << offset);
            offset += b;
        }
        Ok(masks)
    }

    fn table(&self, group: &[usize]) -> Result<Table> {
        let masks = self.layout(group)?;
        let shifts: Vec<u32> = masks.iter().map(|m| m.trailing_zeros()).collect();
        let mut keyed: Vec<(u128, f64)> = (0..self.sample.n_rows())
            .map(|i| {
                let row = self.sample.row(i);
                let key = group
                    .iter()
                    .zip(&shifts)
                    .fold(0u128, |k, (&j, &s)| k | (row[j] as u128) << s);
                (key, self.y[i])
            })
            .collect();
        keyed.sort_by_key(|e| e.0);
        Ok(fold_sorted(keyed.into_iter().map(|(k, y)| (k, Acc { n: 1.0, s: y }))))
    }

    fn score(&self, table: &[(u128, Acc)]) -> f64 {
        table.iter().map(|(_, a)| (a.s - a.n * self.mean).powi(2)).sum::<f64>() / self.scale
    }
}

fn fold_sorted(entries: impl Iterator<Item = (u128, Acc)>) -> Table {
    let mut out: Table = Vec::new();
    for (k, a) in entries {
        match out.last_mut() {
            Some((lk, la)) if *lk == k => {
                la.n += a.n;
                la.s += a.s;
            }
            _ => out.push((k, a)),
        }
    }
    out
}

fn marginalize(table: &[(u128, Acc)], mask: u128) -> Table {
    let mut keyed: Table = table.iter().map(|&(k, a)| (k & !mask, a)).collect();
    keyed.sort_by_key(|e| e.0);
    fold_sorted(keyed.into_iter())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropStep {
    pub dropped: usize,
    pub i_before: f64,
    pub i_after: f64,
}

/// Result of backward dropping on one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropTrace {
    pub group: Vec<usize>,
    pub steps: Vec<DropStep>,
    /// Surviving variables in group order; empty when a lone variable has `I = 0`.
    pub retained: Vec<usize>,
    pub final_i: f64,
    /// The survivor is a single variable, retained only because its `I > 0`.
    pub singleton: bool,
}

/// Backward dropping on `group` (column indices of `sample`).
pub fn backward_drop(sample: &LabeledSample, group: &[usize]) -> Result<DropTrace> {
    let scorer = Scorer::new(sample)?;
    drop_with(&scorer, group)
}

fn drop_with(scorer: &Scorer, group: &[usize]) -> Result<DropTrace> {
    scorer.sample.check_subset(group)?;
    let masks = scorer.layout(group)?;
    let mut table = scorer.table(group)?;
    let mut alive: Vec<usize> = (0..group.len()).collect();
    let mut current = scorer.score(&table);
    let mut steps = Vec::new();
    while alive.len() > 1 {
        let mut best: Option<(usize, f64, Table)> = None;
        for (pos, &slot) in alive.iter().enumerate() {
            let reduced = marginalize(&table, masks[slot]);
            let i = scorer.score(&reduced);
            let better = match &best {
                None => i > current,
                Some((bpos, bi, _)) => i > *bi || (i == *bi && group[slot] < group[alive[*bpos]]),
            };
            if better {
                best = Some((pos, i, reduced));
            }
        }
        match best {
            Some((pos, i, reduced)) => {
                steps.push(DropStep {
                    dropped: group[alive[pos]],
                    i_before: current,
                    i_after: i,
                });
                alive.remove(pos);
                table = reduced;
                current = i;
            }
            None => break,
        }
    }
    let singleton = alive.len() == 1;
    let retained = if singleton && current <= 0.0 {
        Vec::new()
    } else {
        alive.iter().map(|&s| group[s]).collect()
    };
    Ok(DropTrace {
        group: group.to_vec(),
        steps,
        retained,
        final_i: current,
        singleton,
    })
}

fn group_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of group `g` in resuscitation round `round` (0 = initial pass)
/// of stage `stage`.
fn stream_id(stage: usize, round: usize, g: usize) -> u64 {
    ((stage as u64) << 56) | ((round as u64) << 40) | g as u64
}

/// `b` sorted groups of `k` distinct variables out of `0..m`, each drawn
/// from its own ChaCha20 stream.
pub fn random_groups(m: usize, k: usize, b: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    groups_from(&(0..m).collect::<Vec<_>>(), k, b, seed, 0, 0)
}

fn groups_from(pool: &[usize], k: usize, b: usize, seed: u64, stage: usize, round: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > pool.len() {
        return Err(Error::contract(format!(
            "group size {k} must be between 1 and the number of variables {}",
            pool.len()
        )));
    }
    Ok((0..b)
        .map(|g| {
            let mut rng = group_rng(seed, stream_id(stage, round, g));
            let mut grp: Vec<usize> = sample_indices(&mut rng, pool.len(), k)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            grp.sort_unstable();
            grp
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetentionConfig {
    pub group_size: usize,
    /// `None` picks `ceil(20·m/k)`, about 20 appearances per variable.
    pub num_groups: Option<usize>,
    pub rounds: usize,
    pub top_fraction: f64,
    /// `None` means `k/2`.
    pub mix_count: Option<usize>,
    pub stages: Option<Vec<usize>>,
    pub seed: u64,
    pub keep_trace: bool,
}

impl Default for RetentionConfig {
    fn default() -> Self {
        Self {
            group_size: 6,
            num_groups: None,
            rounds: 1,
            top_fraction: 0.05,
            mix_count: None,
            stages: None,
            seed: 0,
            keep_trace: false,
        }
    }
}

impl RetentionConfig {
    pub fn groups_for(&self, m: usize, k: usize) -> usize {
        self.num_groups.unwrap_or_else(|| (20 * m).div_ceil(k.max(1))).max(1)
    }

    fn mix(&self, k: usize) -> usize {
        self.mix_count.unwrap_or(k / 2).min(k)
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.group_size == 0 || self.group_size > m {
            return Err(Error::contract(format!(
                "group size {} must be between 1 and the number of variables {m}",
                self.group_size
            )));
        }
        if self.num_groups == Some(0) {
            return Err(Error::contract("number of groups must be at least 1"));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(Error::contract(format!(
                "top fraction {} outside (0, 1]",
                self.top_fraction
            )));
        }
        if self.mix_count.is_some_and(|c| c > self.group_size) {
            return Err(Error::contract("mix count exceeds the group size"));
        }
        if let Some(stages) = &self.stages {
            if stages.is_empty() || stages.contains(&0) {
                return Err(Error::contract("stage group sizes must be nonempty and positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableScore {
    pub index: usize,
    pub name: String,
    pub appearances: u64,
    pub survivals: u64,
    pub frequency: f64,
    /// Mean final I of the groups this variable survived in.
    pub mean_retained_i: f64,
    pub evaluated: bool,
    /// Last stage (0-based) in which the variable was scored.
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetainedModule {
    pub variables: Vec<usize>,
    pub i_score: f64,
    /// Number of groups that ended in this module.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetentionResult {
    pub scores: Vec<VariableScore>,
    pub modules: Vec<RetainedModule>,
    pub trace: Option<Vec<DropTrace>>,
    pub warnings: Vec<String>,
}

impl RetentionResult {
    fn empty(sample: &LabeledSample) -> Self {
        Self {
            scores: sample
                .names()
                .iter()
                .enumerate()
                .map(|(index, name)| VariableScore {
                    index,
                    name: name.clone(),
                    appearances: 0,
                    survivals: 0,
                    frequency: 0.0,
                    mean_retained_i: 0.0,
                    evaluated: false,
                    stage: 0,
                })
                .collect(),
            modules: Vec::new(),
            trace: None,
            warnings: Vec::new(),
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.frequency).collect()
    }

    /// Variable indices by decreasing stage reached, frequency and mean
    /// retained I, then increasing index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| {
            let (sa, sb) = (&self.scores[a], &self.scores[b]);
            sb.stage
                .cmp(&sa.stage)
                .then(sb.frequency.total_cmp(&sa.frequency))
                .then(sb.mean_retained_i.total_cmp(&sa.mean_retained_i))
                .then(a.cmp(&b))
        });
        idx
    }

    /// Folds group outcomes in group order.
    fn absorb(&mut self, traces: Vec<DropTrace>, keep_trace: bool, stage: usize) {
        let mut i_sums: Vec<f64> = self
            .scores
            .iter()
            .map(|s| s.mean_retained_i * s.survivals as f64)
            .collect();
        let mut modules: BTreeMap<Vec<usize>, (f64, u64)> = self
            .modules
            .drain(..)
            .map(|m| (m.variables, (m.i_score, m.count)))
            .collect();
        let mut touched = vec![false; self.scores.len()];
        for t in &traces {
            for &v in &t.group {
                touched[v] = true;
                let s = &mut self.scores[v];
                s.appearances += 1;
                s.evaluated = true;
                s.stage = stage;
            }
            for &v in &t.retained {
                self.scores[v].survivals += 1;
                i_sums[v] += t.final_i;
            }
            if !t.retained.is_empty() {
                let mut key = t.retained.clone();
                key.sort_unstable();
                modules.entry(key).or_insert((t.final_i, 0)).1 += 1;
            }
        }
        for ((s, sum), _) in self.scores.iter_mut().zip(i_sums).zip(&touched).filter(|(_, t)| **t) {
            if s.appearances > 0 {
                s.frequency = s.survivals as f64 / s.appearances as f64;
            }
            if s.survivals > 0 {
                s.mean_retained_i = sum / s.survivals as f64;
            }
        }
        let mut modules: Vec<RetainedModule> = modules
            .into_iter()
            .map(|(variables, (i_score, count))| RetainedModule {
                variables,
                i_score,
                count,
            })
            .collect();
        modules.sort_by(|a, b| {
            b.i_score
                .total_cmp(&a.i_score)
                .then_with(|| a.variables.cmp(&b.variables))
        });
        self.modules = modules;
        if keep_trace {
            self.trace.get_or_insert_with(Vec::new).extend(traces);
        }
    }
}

fn run_groups(scorer: &Scorer, groups: &[Vec<usize>]) -> Result<Vec<DropTrace>> {
    groups.par_iter().map(|g| drop_with(scorer, g)).collect()
}

/// One pass of backward dropping over `num_groups` random groups of all
/// variables.
pub fn retention_scores(sample: &LabeledSample, config: &RetentionConfig) -> Result<RetentionResult> {
    config.validate(sample.n_vars())?;
    let scorer = Scorer::new(sample)?;
    let pool: Vec<usize> = (0..sample.n_vars()).collect();
    let mut result = RetentionResult::empty(sample);
    score_pool(&scorer, &pool, config, config.group_size, 0, &mut result)?;
    Ok(result)
}

fn score_pool(
    scorer: &Scorer,
    pool: &[usize],
    config: &RetentionConfig,
    k: usize,
    stage: usize,
    result: &mut RetentionResult,
) -> Result<()> {
    let b = config.groups_for(pool.len(), k);
    let groups = groups_from(pool, k, b, config.seed, stage, 0)?;
    let traces = run_groups(scorer, &groups)?;
    result.absorb(traces, config.keep_trace, stage);
    Ok(())
}

/// One resuscitation round: new groups mixing `mix_count` variables from
/// the top `top_fraction` with the rest drawn from the remaining variables,
/// merged into `result` by appearance counts.
pub fn resuscitate(
    sample: &LabeledSample,
    result: &RetentionResult,
    config: &RetentionConfig,
    round: usize,
) -> Result<RetentionResult> {
    config.validate(sample.n_vars())?;
    let scorer = Scorer::new(sample)?;
    let pool: Vec<usize> = (0..sample.n_vars()).collect();
    let mut out = result.clone();
    resuscitate_pool(&scorer, &pool, config, config.group_size, 0, round, &mut out)?;
    Ok(out)
}

fn resuscitate_pool(
    scorer: &Scorer,
    pool: &[usize],
    config: &RetentionConfig,
    k: usize,
    stage: usize,
    round: usize,
    result: &mut RetentionResult,
) -> Result<()> {
    let ranked: Vec<usize> = result
        .ranking()
        .into_iter()
        .filter(|v| pool.contains(v) && result.scores[*v].survivals > 0)
        .collect();
    let top_len = ((config.top_fraction * pool.len() as f64).ceil() as usize).min(ranked.len());
    if top_len == 0 {
        return Err(Error::Degenerate(
            "no variable survived, so the top set is empty".into(),
        ));
    }
    let top: Vec<usize> = ranked[..top_len].to_vec();
    let rest: Vec<usize> = pool.iter().copied().filter(|v| !top.contains(v)).collect();
    let k = k.min(pool.len());
    let from_top = config.mix(k).min(top.len());
    let from_rest = (k - from_top).min(rest.len());
    let from_top = k - from_rest;
    let b = config.groups_for(pool.len(), k);
    let groups: Vec<Vec<usize>> = (0..b)
        .map(|g| {
            let mut rng = group_rng(config.seed, stream_id(stage, round, g));
            let mut grp: Vec<usize> = sample_indices(&mut rng, top.len(), from_top)
                .into_iter()
                .map(|i| top[i])
                .collect();
            if from_rest > 0 {
                grp.extend(
                    sample_indices(&mut rng, rest.len(), from_rest)
                        .into_iter()
                        .map(|i| rest[i]),
                );
            }
            grp.sort_unstable();
            grp
        })
        .collect();
    let traces = run_groups(scorer, &groups)?;
    result.absorb(traces, config.keep_trace, stage);
    Ok(())
}

/// Full procedure: each stage scores its pool with `rounds` resuscitation
/// rounds, then passes on the best `max(2k, ceil(top_fraction·|pool|))`
/// variables. The last stage always uses `group_size`.
pub fn staged_selection(sample: &LabeledSample, config: &RetentionConfig) -> Result<RetentionResult> {
    config.validate(sample.n_vars())?;
    let scorer = Scorer::new(sample)?;
    let mut schedule = config.stages.clone().unwrap_or_default();
    if schedule.last() != Some(&config.group_size) {
        schedule.push(config.group_size);
    }
    let mut result = RetentionResult::empty(sample);
    let mut pool: Vec<usize> = (0..sample.n_vars()).collect();
    for (stage, &k) in schedule.iter().enumerate() {
        let k = k.min(pool.len());
        score_pool(&scorer, &pool, config, k, stage, &mut result)?;
        for round in 1..=config.rounds {
            if let Err(e) = resuscitate_pool(&scorer, &pool, config, k, stage, round, &mut result) {
                result
                    .warnings
                    .push(format!("stage {stage}: resuscitation skipped: {e}"));
                break;
            }
        }
        if stage + 1 == schedule.len() {
            break;
        }
        let target = (2 * config.group_size).max((config.top_fraction * pool.len() as f64).ceil() as usize);
        let next: Vec<usize> = result
            .ranking()
            .into_iter()
            .filter(|v| result.scores[*v].stage == stage && result.scores[*v].survivals > 0)
            .take(target)
            .collect();
        if next.is_empty() {
            result
                .warnings
                .push(format!("stage {stage}: empty survivor pool, stopping early"));
            break;
        }
        pool = next;
        pool.sort_unstable();
        // later stages count afresh for the surviving pool
        for &v in &pool {
            let s = &mut result.scores[v];
            s.appearances = 0;
            s.survivals = 0;
            s.frequency = 0.0;
            s.mean_retained_i = 0.0;
        }
    }
    Ok(result)
}
