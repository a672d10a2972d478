//! Stratified test-set construction and ID-to-prompt assignment.
//!
//! Joint buckets are the cross product of the stratified attributes. Each
//! bucket's target share is the product of its marginal weights, renormalized
//! over buckets the pool actually populates. Quotas are rounded to the floor
//! or ceiling of `n * share`; leftover units go to the bucket whose marginals
//! are furthest below target, which keeps every realized marginal within one
//! or two units of `n * weight` on balanced pools.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Deficit, Error, Result};
use crate::labels::{AgeBucket, AttributeLabel, Ethnicity, Gender};

/// Name of the generator behind every seeded operation in this module.
pub const RNG_ALGORITHM: &str = "chacha8";

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Per-attribute weights, or `"uniform"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Marginal<K: Ord> {
    Uniform(UniformTag),
    Weights(BTreeMap<K, f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformTag {
    Uniform,
}

impl<K: Ord + Copy> Marginal<K> {
    fn weight(&self, key: K, all: &[K]) -> f64 {
        match self {
            Marginal::Uniform(_) => 1.0 / all.len() as f64,
            Marginal::Weights(w) => w.get(&key).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if let Marginal::Weights(w) = self {
            if let Some((_, v)) = w.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
                return Err(Error::invalid(name, format!("weight {v} is negative or not finite")));
            }
            let sum: f64 = w.values().sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(Error::invalid(name, format!("weights sum to {sum}, not 1")));
            }
        }
        Ok(())
    }
}

/// Target marginals. An absent attribute is not stratified.
///
/// JSON: `{"ethnicity": {...} | "uniform", "gender": ..., "age": ...}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDistribution {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethnicity: Option<Marginal<Ethnicity>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Marginal<Gender>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<Marginal<AgeBucket>>,
}

impl TargetDistribution {
    pub fn validate(&self) -> Result<()> {
        if let Some(m) = &self.ethnicity {
            m.validate("ethnicity")?;
        }
        if let Some(m) = &self.gender {
            m.validate("gender")?;
        }
        if let Some(m) = &self.age {
            m.validate("age")?;
        }
        Ok(())
    }

    fn key(&self, label: &AttributeLabel) -> BucketKey {
        BucketKey {
            ethnicity: self.ethnicity.as_ref().map(|_| label.ethnicity),
            gender: self.gender.as_ref().map(|_| label.gender),
            age: self.age.as_ref().map(|_| label.age),
        }
    }

    fn weight(&self, key: &BucketKey) -> f64 {
        let mut w = 1.0;
        if let (Some(m), Some(v)) = (&self.ethnicity, key.ethnicity) {
            w *= m.weight(v, Ethnicity::ALL);
        }
        if let (Some(m), Some(v)) = (&self.gender, key.gender) {
            w *= m.weight(v, Gender::ALL);
        }
        if let (Some(m), Some(v)) = (&self.age, key.age) {
            w *= m.weight(v, AgeBucket::ALL);
        }
        w
    }
}

/// A joint bucket; `None` marks an attribute that is not stratified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketKey {
    pub ethnicity: Option<Ethnicity>,
    pub gender: Option<Gender>,
    pub age: Option<AgeBucket>,
}

impl BucketKey {
    /// Marginal coordinates `(attribute slot, bucket name)` of this key.
    fn marginals(&self) -> impl Iterator<Item = (usize, &'static str)> {
        [
            self.ethnicity.map(|v| (0, v.as_str())),
            self.gender.map(|v| (1, v.as_str())),
            self.age.map(|v| (2, v.as_str())),
        ]
        .into_iter()
        .flatten()
    }
}

impl std::fmt::Display for BucketKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<&str> = self.marginals().map(|(_, name)| name).collect();
        if parts.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&parts.join("/"))
        }
    }
}

/// A labelled candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: String,
    #[serde(flatten)]
    pub label: AttributeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketQuota {
    pub bucket: String,
    pub target: f64,
    pub quota: usize,
    pub available: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedSample {
    pub rng: String,
    pub seed: u64,
    /// Selected ids, in pool order.
    pub ids: Vec<String>,
    pub quotas: Vec<BucketQuota>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Feasibility {
    /// Any bucket whose quota exceeds its supply is an error.
    #[default]
    Strict,
    /// Shortfalls are reported as warnings and redistributed to buckets with
    /// spare supply.
    BestEffort,
}

/// Draws `n` distinct ids whose joint attribute buckets follow `targets`.
pub fn stratified_sample(
    pool: &[PoolEntry],
    targets: &TargetDistribution,
    n: usize,
    seed: u64,
    feasibility: Feasibility,
) -> Result<StratifiedSample> {
    targets.validate()?;
    if n > pool.len() {
        return Err(Error::Precondition(format!(
            "cannot draw {n} ids from a pool of {}",
            pool.len()
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = pool.iter().find(|e| !seen.insert(e.id.as_str())) {
        return Err(Error::DuplicateId(dup.id.clone()));
    }

    let mut buckets: BTreeMap<BucketKey, Vec<usize>> = BTreeMap::new();
    for (i, entry) in pool.iter().enumerate() {
        buckets.entry(targets.key(&entry.label)).or_default().push(i);
    }
    let keys: Vec<BucketKey> = buckets.keys().copied().collect();
    let sizes: Vec<usize> = buckets.values().map(Vec::len).collect();
    let raw: Vec<f64> = keys.iter().map(|k| targets.weight(k)).collect();
    let total: f64 = raw.iter().sum();
    if n > 0 && total <= 0.0 {
        return Err(Error::Precondition(
            "targets give zero weight to every populated bucket".into(),
        ));
    }
    let exact: Vec<f64> = raw
        .iter()
        .map(|w| if total > 0.0 { n as f64 * w / total } else { 0.0 })
        .collect();
    let mut quotas = round_quotas(&keys, &exact, n);

    let deficits: Vec<Deficit> = keys
        .iter()
        .zip(&quotas)
        .zip(&sizes)
        .filter(|((_, q), s)| q > s)
        .map(|((k, &q), &s)| Deficit {
            bucket: k.to_string(),
            quota: q,
            available: s,
        })
        .collect();
    let mut warnings = Vec::new();
    if !deficits.is_empty() {
        if feasibility == Feasibility::Strict {
            return Err(Error::Infeasible(deficits));
        }
        for d in &deficits {
            warnings.push(format!(
                "bucket {} short by {} ({} wanted, {} available)",
                d.bucket,
                d.quota - d.available,
                d.quota,
                d.available
            ));
        }
        redistribute(&mut quotas, &sizes, &raw);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(n);
    for (members, &quota) in buckets.values().zip(&quotas) {
        let picks = rand::seq::index::sample(&mut rng, members.len(), quota);
        chosen.extend(picks.into_iter().map(|p| members[p]));
    }
    chosen.sort_unstable();

    Ok(StratifiedSample {
        rng: RNG_ALGORITHM.to_string(),
        seed,
        ids: chosen.into_iter().map(|i| pool[i].id.clone()).collect(),
        quotas: keys
            .iter()
            .zip(&exact)
            .zip(quotas.iter().zip(&sizes))
            .map(|((k, &target), (&quota, &available))| BucketQuota {
                bucket: k.to_string(),
                target,
                quota,
                available,
            })
            .collect(),
        warnings,
    })
}

/// Floor every share, then hand out the leftover units one at a time to the
/// still-unrounded bucket whose marginals have the largest total shortfall,
/// with the fractional remainder and then key order as tie-breaks. The
/// result sums to `n` and each quota is the floor or ceiling of its share.
fn round_quotas(keys: &[BucketKey], exact: &[f64], n: usize) -> Vec<usize> {
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut leftover = n.saturating_sub(assigned);

    let mut target: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    let mut current: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    for (j, key) in keys.iter().enumerate() {
        for m in key.marginals() {
            *target.entry(m).or_default() += exact[j];
            *current.entry(m).or_default() += quotas[j] as f64;
        }
    }
    let mut bumped = vec![false; keys.len()];
    while leftover > 0 {
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, key) in keys.iter().enumerate() {
            let remainder = exact[j] - quotas[j] as f64;
            if bumped[j] || remainder <= 0.0 {
                continue;
            }
            let shortfall: f64 = key.marginals().map(|m| target[&m] - current[&m]).sum();
            let better = match best {
                None => true,
                Some((_, s, r)) => shortfall > s || (shortfall == s && remainder > r),
            };
            if better {
                best = Some((j, shortfall, remainder));
            }
        }
        // Float sums can leave every remainder at zero while `leftover` > 0;
        // fall back to the largest raw share.
        let j = match best {
            Some((j, _, _)) => j,
            None => (0..keys.len())
                .filter(|&j| !bumped[j])
                .max_by(|&a, &b| exact[a].total_cmp(&exact[b]).then(b.cmp(&a)))
                .unwrap_or(0),
        };
        quotas[j] += 1;
        bumped[j] = true;
        for m in keys[j].marginals() {
            *current.get_mut(&m).expect("marginal registered") += 1.0;
        }
        leftover -= 1;
    }
    quotas
}

/// Caps each quota at its bucket size and spreads the shortfall over buckets
/// with spare supply by largest remainder of their weights, repeating until
/// everything is placed. Requires total supply >= sum of quotas.
fn redistribute(quotas: &mut [usize], sizes: &[usize], weights: &[f64]) {
    let mut deficit = 0;
    for (q, &s) in quotas.iter_mut().zip(sizes) {
        if *q > s {
            deficit += *q - s;
            *q = s;
        }
    }
    while deficit > 0 {
        let spare: Vec<usize> = (0..quotas.len()).filter(|&j| sizes[j] > quotas[j]).collect();
        if spare.is_empty() {
            break;
        }
        let mut w: Vec<f64> = spare.iter().map(|&j| weights[j]).collect();
        if w.iter().sum::<f64>() <= 0.0 {
            w = vec![1.0; spare.len()];
        }
        let total: f64 = w.iter().sum();
        let shares: Vec<f64> = w.iter().map(|x| deficit as f64 * x / total).collect();
        let mut extra: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
        let mut left = deficit - extra.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..spare.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a] - extra[a] as f64;
            let rb = shares[b] - extra[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in &order {
            if left == 0 {
                break;
            }
            extra[i] += 1;
            left -= 1;
        }
        for (i, &j) in spare.iter().enumerate() {
            let room = sizes[j] - quotas[j];
            let add = extra[i].min(room);
            quotas[j] += add;
            deficit -= add;
        }
    }
}

/// One (prompt, iteration) slot and the ids drawn for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptAssignment {
    pub prompt_id: String,
    pub iteration: usize,
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub rng: String,
    pub seed: u64,
    pub assignments: Vec<PromptAssignment>,
    /// True when every id appears in at least one slot.
    pub covers_all_ids: bool,
}

/// Largest number of people a prompt may ask for.
pub const MAX_PERSONS: usize = 5;

/// Deals ids to prompt slots round-robin over one seeded shuffle, so no id is
/// reused before every id has been used once and usage counts differ by at
/// most one. Slots are visited prompt by prompt, iteration by iteration.
pub fn assign_ids_to_prompts(
    ids: &[String],
    prompts: &[String],
    iterations_per_prompt: usize,
    persons_per_prompt: &BTreeMap<String, usize>,
    seed: u64,
) -> Result<AssignmentPlan> {
    let mut seen = HashSet::new();
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::DuplicateId(dup.clone()));
    }
    let mut persons = Vec::with_capacity(prompts.len());
    for p in prompts {
        let count = *persons_per_prompt
            .get(p)
            .ok_or_else(|| Error::invalid(format!("persons[{p}]"), "missing person count"))?;
        if !(1..=MAX_PERSONS).contains(&count) {
            return Err(Error::invalid(
                format!("persons[{p}]"),
                format!("{count} persons outside 1..={MAX_PERSONS}"),
            ));
        }
        if count > ids.len() {
            return Err(Error::invalid(
                format!("persons[{p}]"),
                format!("needs {count} distinct ids but only {} exist", ids.len()),
            ));
        }
        persons.push(count);
    }

    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut cursor = 0usize;
    let mut used = vec![false; ids.len()];
    let mut assignments = Vec::with_capacity(prompts.len() * iterations_per_prompt);
    for (p, &count) in prompts.iter().zip(&persons) {
        for iteration in 0..iterations_per_prompt {
            // A window of at most |ids| consecutive positions in a cyclic
            // permutation never repeats an element.
            let slot: Vec<String> = (0..count)
                .map(|o| {
                    let i = order[(cursor + o) % order.len()];
                    used[i] = true;
                    ids[i].clone()
                })
                .collect();
            cursor = (cursor + count) % order.len();
            assignments.push(PromptAssignment {
                prompt_id: p.clone(),
                iteration,
                ids: slot,
            });
        }
    }
    Ok(AssignmentPlan {
        rng: RNG_ALGORITHM.to_string(),
        seed,
        assignments,
        covers_all_ids: used.iter().all(|&u| u),
    })
}
