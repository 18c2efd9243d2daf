use std::cmp::{Ordering, Reverse};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{materialize, synthesize_wrapper, AdaptError, Binding, HostContext, Organ, Wrapper};
use crate::extractor::OverOrgan;
use crate::implantation::{implant, ImplantError, PostoperativeProject};
use crate::sandbox::{run_test, BuildError};
use crate::suite::TestSuite;

/// Lexicographic: compiled, then ice-box passes, then fewer statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fitness {
    pub compiled: bool,
    pub icebox_passed: usize,
    pub icebox_total: usize,
    pub statement_count: usize,
}

impl Fitness {
    pub fn viable(&self) -> bool {
        self.compiled && self.icebox_passed == self.icebox_total
    }

    fn key(&self) -> (bool, usize, Reverse<usize>, usize) {
        (self.compiled, self.icebox_passed, Reverse(self.statement_count), self.icebox_total)
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "compiled={} passed={}/{} statements={}",
            self.compiled, self.icebox_passed, self.icebox_total, self.statement_count
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Operator {
    Insert,
    Delete,
    Replace,
}

/// Relative weights of the mutation operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorRates {
    pub insert: f64,
    pub delete: f64,
    pub replace: f64,
}

impl Default for OperatorRates {
    fn default() -> Self {
        OperatorRates { insert: 1.0, delete: 1.0, replace: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub tournament_size: usize,
    pub rates: OperatorRates,
    /// Runs are attempted with each seed in turn until one succeeds.
    pub seeds: Vec<u64>,
    pub test_timeout: Duration,
    /// Parallel evaluations.
    pub jobs: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population_size: 40,
            max_generations: 100,
            tournament_size: 2,
            rates: OperatorRates::default(),
            seeds: vec![0],
            test_timeout: Duration::from_secs(5),
            jobs: 1,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), AdaptError> {
        let bad = |m: &str| Err(AdaptError::InvalidConfig(m.to_string()));
        if self.population_size < 2 {
            return bad("population size must be at least 2");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be positive");
        }
        let r = self.rates;
        if [r.insert, r.delete, r.replace].iter().any(|w| !w.is_finite() || *w < 0.0) || r.insert + r.delete + r.replace <= 0.0 {
            return bad("operator rates must be non-negative and not all zero");
        }
        if self.jobs == 0 {
            return bad("jobs must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpIndividual {
    /// One bit per statement-array entry.
    pub mask: Vec<bool>,
    /// One binding per wrapper slot.
    pub bindings: Vec<Binding>,
    /// Seed of the run that produced it.
    pub seed: u64,
}

impl GpIndividual {
    /// Every entry included, each slot on its first candidate.
    pub fn full(over: &OverOrgan, wrapper: &Wrapper, seed: u64) -> Self {
        GpIndividual {
            mask: vec![true; over.statement_array.len()],
            bindings: wrapper.slots.iter().map(|s| s.candidates.first().cloned().unwrap_or(Binding::Unbound)).collect(),
            seed,
        }
    }

    /// Number of genes (mask bits and bindings) that differ.
    pub fn distance(&self, other: &GpIndividual) -> usize {
        let bits = self.mask.iter().zip(&other.mask).filter(|(a, b)| a != b).count();
        let binds = self.bindings.iter().zip(&other.bindings).filter(|(a, b)| a != b).count();
        bits + binds + self.mask.len().abs_diff(other.mask.len())
    }

    fn key(&self) -> (Vec<bool>, Vec<Binding>) {
        (self.mask.clone(), self.bindings.clone())
    }
}

/// Applies exactly one operator, resampling inapplicable ones: DELETE
/// clears a set bit, INSERT sets a cleared bit, REPLACE rebinds a slot to
/// another candidate.
pub fn mutate(ind: &GpIndividual, wrapper: &Wrapper, rates: &OperatorRates, rng: &mut impl Rng) -> (GpIndividual, Operator) {
    let set: Vec<usize> = (0..ind.mask.len()).filter(|&i| ind.mask[i]).collect();
    let clear: Vec<usize> = (0..ind.mask.len()).filter(|&i| !ind.mask[i]).collect();
    let rebindable: Vec<usize> = (0..wrapper.slots.len())
        .filter(|&s| wrapper.slots[s].candidates.iter().any(|c| *c != ind.bindings[s]))
        .collect();
    let mut ops = Vec::new();
    if !clear.is_empty() && rates.insert > 0.0 {
        ops.push((Operator::Insert, rates.insert));
    }
    if !set.is_empty() && rates.delete > 0.0 {
        ops.push((Operator::Delete, rates.delete));
    }
    if !rebindable.is_empty() && rates.replace > 0.0 {
        ops.push((Operator::Replace, rates.replace));
    }
    let mut child = ind.clone();
    let total: f64 = ops.iter().map(|o| o.1).sum();
    if ops.is_empty() {
        return (child, Operator::Delete);
    }
    let mut pick = rng.random::<f64>() * total;
    let mut op = ops[ops.len() - 1].0;
    for (o, w) in &ops {
        if pick < *w {
            op = *o;
            break;
        }
        pick -= w;
    }
    match op {
        Operator::Insert => child.mask[clear[rng.random_range(0..clear.len())]] = true,
        Operator::Delete => child.mask[set[rng.random_range(0..set.len())]] = false,
        Operator::Replace => {
            let s = rebindable[rng.random_range(0..rebindable.len())];
            let others: Vec<&Binding> = wrapper.slots[s].candidates.iter().filter(|c| **c != ind.bindings[s]).collect();
            child.bindings[s] = others[rng.random_range(0..others.len())].clone();
        }
    }
    (child, op)
}

/// Implants the candidate into a copy of the product base, builds it and
/// runs the ice-box tests.
pub fn evaluate(
    ind: &GpIndividual,
    over: &OverOrgan,
    wrapper: &Wrapper,
    host: &PostoperativeProject,
    ctx: &HostContext,
    icebox: &TestSuite,
    config: &GpConfig,
) -> Result<Fitness, AdaptError> {
    let statement_count = ind.mask.iter().filter(|b| **b).count();
    let failed = Fitness { compiled: false, icebox_passed: 0, icebox_total: icebox.tests.len(), statement_count };
    let Ok(organ) = materialize(over, wrapper, ind) else { return Ok(failed) };
    let post = match implant(&organ, host, ctx, None, None) {
        Ok(p) => p,
        Err(ImplantError::Parse(_)) | Err(ImplantError::SignatureConflict { .. }) => return Ok(failed),
        Err(e) => return Err(e.into()),
    };
    let dir = tempfile::tempdir()?;
    let binary = match ctx.build.build_project(&post.project, dir.path(), &post.defines()) {
        Ok(b) => b,
        Err(BuildError::Failed(_)) => return Ok(failed),
        Err(BuildError::Io(e)) => return Err(AdaptError::Sandbox(e)),
        Err(e) => return Err(AdaptError::Build(e)),
    };
    let mut passed = 0;
    for t in &icebox.tests {
        if run_test(&binary, icebox, t, config.test_timeout)?.passed {
            passed += 1;
        }
    }
    Ok(Fitness { compiled: true, icebox_passed: passed, ..failed })
}

type CacheKey = (Vec<bool>, Vec<Binding>);

/// Memoizing, parallel evaluation of individuals for one search.
pub struct Evaluator<'a> {
    over: &'a OverOrgan,
    wrapper: &'a Wrapper,
    host: &'a PostoperativeProject,
    ctx: &'a HostContext,
    icebox: &'a TestSuite,
    config: &'a GpConfig,
    cache: Mutex<BTreeMap<CacheKey, Fitness>>,
    pool: rayon::ThreadPool,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        over: &'a OverOrgan,
        wrapper: &'a Wrapper,
        host: &'a PostoperativeProject,
        ctx: &'a HostContext,
        icebox: &'a TestSuite,
        config: &'a GpConfig,
    ) -> Result<Self, AdaptError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| AdaptError::InvalidConfig(e.to_string()))?;
        Ok(Evaluator { over, wrapper, host, ctx, icebox, config, cache: Mutex::new(BTreeMap::new()), pool })
    }

    /// Distinct individuals evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn fitness(&self, ind: &GpIndividual) -> Result<Fitness, AdaptError> {
        if let Some(f) = self.cache.lock().expect("cache lock").get(&ind.key()) {
            return Ok(*f);
        }
        let f = evaluate(ind, self.over, self.wrapper, self.host, self.ctx, self.icebox, self.config)?;
        self.cache.lock().expect("cache lock").insert(ind.key(), f);
        Ok(f)
    }

    /// Fitness of each individual, in input order.
    pub fn batch(&self, inds: &[GpIndividual]) -> Result<Vec<Fitness>, AdaptError> {
        self.pool.install(|| inds.par_iter().map(|i| self.fitness(i)).collect())
    }
}

fn best_index(fits: &[Fitness]) -> usize {
    // first of the maxima
    let mut best = 0;
    for (i, f) in fits.iter().enumerate() {
        if *f > fits[best] {
            best = i;
        }
    }
    best
}

fn tournament(fits: &[Fitness], size: usize, rng: &mut impl Rng) -> usize {
    let mut winner = rng.random_range(0..fits.len());
    for _ in 1..size {
        let c = rng.random_range(0..fits.len());
        if fits[c] > fits[winner] || (fits[c] == fits[winner] && c < winner) {
            winner = c;
        }
    }
    winner
}

/// Searches for a fully passing organ, then greedily deletes every entry
/// whose removal keeps all ice-box tests passing.
pub fn evolve(
    over: &OverOrgan,
    host: &PostoperativeProject,
    ctx: &HostContext,
    icebox: &TestSuite,
    config: &GpConfig,
) -> Result<Organ, AdaptError> {
    config.validate()?;
    let wrapper = synthesize_wrapper(over, &host.project, ctx)?;
    let ev = Evaluator::new(over, &wrapper, host, ctx, icebox, config)?;
    let mut trajectory = Vec::new();
    let mut best_seen: Option<Fitness> = None;
    for &seed in &config.seeds {
        match search(&ev, seed, &mut trajectory)? {
            Ok(found) => {
                let (ind, fitness) = reduce(&ev, found)?;
                log::info!("seed {seed}: organ found, {fitness}, {} evaluations", ev.evaluations());
                let mut organ = materialize(over, &wrapper, &ind).expect("viable individual materializes");
                organ.fitness = Some(fitness);
                return Ok(organ);
            }
            Err(best) => {
                log::info!("seed {seed}: no viable organ, best {best}");
                best_seen = best_seen.max(Some(best));
            }
        }
    }
    Err(AdaptError::NoViableOrganFound { best: best_seen.expect("at least one seed"), trajectory })
}

/// Steady-state search with one seed. Returns the first viable individual,
/// or the best fitness reached.
fn search(
    ev: &Evaluator,
    seed: u64,
    trajectory: &mut Vec<Fitness>,
) -> Result<Result<GpIndividual, Fitness>, AdaptError> {
    let config = ev.config;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = GpIndividual::full(ev.over, ev.wrapper, seed);
    let mut pop = vec![initial.clone()];
    while pop.len() < config.population_size {
        pop.push(mutate(&initial, ev.wrapper, &config.rates, &mut rng).0);
    }
    let mut fits = ev.batch(&pop)?;
    let mut best = best_index(&fits);
    trajectory.push(fits[best]);
    for generation in 1..=config.max_generations {
        if fits[best].viable() {
            break;
        }
        let children: Vec<GpIndividual> = (0..config.population_size)
            .map(|_| {
                let parent = tournament(&fits, config.tournament_size, &mut rng);
                mutate(&pop[parent], ev.wrapper, &config.rates, &mut rng).0
            })
            .collect();
        let child_fits = ev.batch(&children)?;
        for (child, f) in children.into_iter().zip(child_fits) {
            // the worst, never the elite
            let worst = (0..pop.len()).filter(|&i| i != best).min_by_key(|&i| (fits[i], Reverse(i))).expect("population >= 2");
            if f >= fits[worst] {
                pop[worst] = child;
                fits[worst] = f;
                if f > fits[best] {
                    best = worst;
                }
            }
        }
        trajectory.push(fits[best]);
        log::debug!("seed {seed} generation {generation}: best {}", fits[best]);
    }
    if fits[best].viable() {
        Ok(Ok(pop[best].clone()))
    } else {
        Ok(Err(fits[best]))
    }
}

/// Deletes included entries one at a time, in index order, keeping each
/// deletion that leaves the organ viable, until a pass changes nothing.
fn reduce(ev: &Evaluator, mut current: GpIndividual) -> Result<(GpIndividual, Fitness), AdaptError> {
    let mut fitness = ev.fitness(&current)?;
    loop {
        let mut changed = false;
        for i in 0..current.mask.len() {
            if !current.mask[i] {
                continue;
            }
            let mut candidate = current.clone();
            candidate.mask[i] = false;
            let f = ev.fitness(&candidate)?;
            if f.viable() {
                current = candidate;
                fitness = f;
                changed = true;
            }
        }
        if !changed {
            return Ok((current, fitness));
        }
    }
}
